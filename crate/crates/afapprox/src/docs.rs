//! JSON documents: approximations, models, network profiles.
//!
//! Polynomial coefficients are written as decimal strings so that they
//! survive tools that parse JSON numbers into lower-precision floats.

use std::fs;
use std::path::Path;

use afapprox_core::mpccost::{CostTable, NetworkProfile};
use afapprox_core::nn::{Layer, Model, ModelWarning, DEFAULT_BN_EPS};
use afapprox_core::piecewise::{PiecewiseParts, PiecewisePoly, Provenance, TailPoly};
use afapprox_core::ring::RingSpec;
use afapprox_core::search::Theta;
use afapprox_core::ActivationKind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaDoc {
    pub m: usize,
    pub k: usize,
    pub ell: u32,
    pub d: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxDoc {
    pub function: String,
    pub s: f64,
    pub e: f64,
    pub theta: ThetaDoc,
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<String>>,
    pub tail_left: Vec<String>,
    pub tail_right: Vec<String>,
    #[serde(default)]
    pub crude: Option<String>,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn coeff_string(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_coeff(s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Document(format!("bad coefficient {s:?}"))),
    }
}

fn parse_coeffs(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| parse_coeff(s)).collect()
}

impl From<&PiecewisePoly> for ApproxDoc {
    fn from(pp: &PiecewisePoly) -> Self {
        let strings = |c: &[f64]| c.iter().map(|&v| coeff_string(v)).collect::<Vec<_>>();
        let theta = pp.theta();
        ApproxDoc {
            function: pp.function().to_string(),
            s: pp.s(),
            e: pp.e(),
            theta: ThetaDoc { m: theta.m, k: theta.k, ell: theta.ring.ell(), d: theta.ring.d() },
            breakpoints: pp.breakpoints().to_vec(),
            pieces: pp.pieces().iter().map(|p| strings(p)).collect(),
            tail_left: strings(pp.tail_left().coeffs()),
            tail_right: strings(pp.tail_right().coeffs()),
            crude: pp.crude().map(|k| k.name().to_string()),
            provenance: pp.provenance().clone(),
        }
    }
}

impl TryFrom<ApproxDoc> for PiecewisePoly {
    type Error = Error;

    fn try_from(doc: ApproxDoc) -> Result<Self> {
        let ring = RingSpec::new(doc.theta.ell, doc.theta.d).map_err(|e| Error::Document(e.to_string()))?;
        let crude = match doc.crude.as_deref() {
            None | Some("none") => None,
            Some(name) => Some(name.parse::<ActivationKind>().map_err(|e| Error::Document(e.to_string()))?),
        };
        if doc.breakpoints.first() != Some(&doc.s) || doc.breakpoints.last() != Some(&doc.e) {
            return Err(Error::Document("s and e must be the first and last breakpoints".into()));
        }
        let pieces = doc.pieces.iter().map(|p| parse_coeffs(p)).collect::<Result<Vec<_>>>()?;
        Ok(PiecewisePoly::new(PiecewiseParts {
            function: doc.function,
            theta: Theta { m: doc.theta.m, k: doc.theta.k, ring },
            breakpoints: doc.breakpoints,
            pieces,
            tail_left: TailPoly::new(parse_coeffs(&doc.tail_left)?),
            tail_right: TailPoly::new(parse_coeffs(&doc.tail_right)?),
            crude,
            provenance: doc.provenance,
        })?)
    }
}

pub fn approx_to_json(pp: &PiecewisePoly) -> String {
    let mut s = serde_json::to_string_pretty(&ApproxDoc::from(pp)).expect("approximation serializes");
    s.push('\n');
    s
}

pub fn approx_from_json(s: &str) -> Result<PiecewisePoly> {
    let doc: ApproxDoc = serde_json::from_str(s).map_err(|e| Error::Document(e.to_string()))?;
    doc.try_into()
}

pub fn read_approx(path: &Path) -> Result<PiecewisePoly> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let doc: ApproxDoc = serde_json::from_str(&text).map_err(Error::json(path))?;
    doc.try_into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerDoc {
    Linear {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    BatchNorm {
        mean: Vec<f64>,
        var: Vec<f64>,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Activation {
        name: String,
    },
}

fn default_eps() -> f64 {
    DEFAULT_BN_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub layers: Vec<LayerDoc>,
    pub classes: usize,
}

impl From<&Model> for ModelDoc {
    fn from(m: &Model) -> Self {
        let layers = m
            .layers
            .iter()
            .map(|l| match l {
                Layer::Linear { w, b } => LayerDoc::Linear { w: w.clone(), b: b.clone() },
                Layer::BatchNorm { mean, var, gamma, beta, eps } => LayerDoc::BatchNorm {
                    mean: mean.clone(),
                    var: var.clone(),
                    gamma: gamma.clone(),
                    beta: beta.clone(),
                    eps: *eps,
                },
                Layer::Activation(k) => LayerDoc::Activation { name: k.name().to_string() },
            })
            .collect();
        ModelDoc { layers, classes: m.classes }
    }
}

impl TryFrom<ModelDoc> for Model {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                Ok(match l {
                    LayerDoc::Linear { w, b } => Layer::Linear { w, b },
                    LayerDoc::BatchNorm { mean, var, gamma, beta, eps } => {
                        Layer::BatchNorm { mean, var, gamma, beta, eps }
                    }
                    LayerDoc::Activation { name } => Layer::Activation(name.parse()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Model { layers, classes: doc.classes };
        model.validate()?;
        Ok(model)
    }
}

pub fn model_to_json(model: &Model) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDoc::from(model)).expect("model serializes");
    s.push('\n');
    s
}

/// Loads and validates a model; also returns its structural warnings.
pub fn read_model(path: &Path) -> Result<(Model, Vec<ModelWarning>)> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let doc: ModelDoc = serde_json::from_str(&text).map_err(Error::json(path))?;
    let model = Model::try_from(doc)?;
    let warnings = model.validate()?;
    Ok((model, warnings))
}

/// Network profile file: any subset of the profile fields, plus an optional
/// cost table override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub rtt: Option<f64>,
    pub bandwidth: Option<f64>,
    pub parties: Option<u32>,
    pub cpu_per_op: Option<f64>,
    pub table: Option<CostTable>,
}

impl ProfileDoc {
    pub fn resolve(&self) -> Result<(NetworkProfile, CostTable)> {
        let d = NetworkProfile::default();
        let profile = NetworkProfile {
            rtt: self.rtt.unwrap_or(d.rtt),
            bandwidth: self.bandwidth.unwrap_or(d.bandwidth),
            parties: self.parties.unwrap_or(d.parties),
            cpu_per_op: self.cpu_per_op.unwrap_or(d.cpu_per_op),
        };
        profile.validate()?;
        let table = self.table.unwrap_or_else(|| CostTable::for_parties(profile.parties));
        Ok((profile, table))
    }
}

pub fn read_profile(path: &Path) -> Result<(NetworkProfile, CostTable)> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let doc: ProfileDoc = serde_json::from_str(&text).map_err(Error::json(path))?;
    doc.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use afapprox_core::baselines::{mpcformer_gelu, relu_swap};

    #[test]
    fn coefficient_strings_roundtrip() {
        for v in [0.0, -0.0, 0.125, 1.0 / 3.0, -2.5e-12, 7.0e20, f64::MIN_POSITIVE, -123456.789] {
            assert_eq!(parse_coeff(&coeff_string(v)).unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(coeff_string(0.125), "0.125");
    }

    #[test]
    fn approximation_roundtrip() {
        for pp in [relu_swap(), mpcformer_gelu()] {
            let back = approx_from_json(&approx_to_json(&pp)).unwrap();
            assert_eq!(back, pp);
        }
    }

    #[test]
    fn missing_crude_means_none() {
        let mut v: serde_json::Value = serde_json::from_str(&approx_to_json(&relu_swap())).unwrap();
        v.as_object_mut().unwrap().remove("crude");
        let pp = approx_from_json(&v.to_string()).unwrap();
        assert_eq!(pp.crude(), None);
    }

    #[test]
    fn tampered_breakpoints_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&approx_to_json(&relu_swap())).unwrap();
        v["breakpoints"][1] = serde_json::json!(-7.0);
        assert!(approx_from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&approx_to_json(&relu_swap())).unwrap();
        v["pieces"][0][0] = serde_json::json!("zero");
        assert!(approx_from_json(&v.to_string()).is_err());
    }

    #[test]
    fn model_document_shape() {
        let text = r#"{"layers":[
            {"type":"linear","W":[[1.0,0.0],[0.0,1.0]],"b":[0.0,0.0]},
            {"type":"batchnorm","mean":[0,0],"var":[1,1],"gamma":[1,1],"beta":[0,0],"eps":1e-5},
            {"type":"activation","name":"silu"}],"classes":2}"#;
        let doc: ModelDoc = serde_json::from_str(text).unwrap();
        let model = Model::try_from(doc.clone()).unwrap();
        assert_eq!(model.layers[2], Layer::Activation(ActivationKind::Silu));
        assert_eq!(ModelDoc::from(&model), doc);
    }

    #[test]
    fn unknown_activation_rejected() {
        let text = r#"{"layers":[{"type":"activation","name":"swish2"}],"classes":2}"#;
        let doc: ModelDoc = serde_json::from_str(text).unwrap();
        assert!(Model::try_from(doc).is_err());
    }

    #[test]
    fn profile_defaults_and_overrides() {
        let (p, t) = ProfileDoc { rtt: Some(0.002), ..Default::default() }.resolve().unwrap();
        assert_eq!(p.rtt, 0.002);
        assert_eq!(p.bandwidth, NetworkProfile::default().bandwidth);
        assert_eq!(t, CostTable::three_party());
        assert!(ProfileDoc { parties: Some(4), ..Default::default() }.resolve().is_err());
    }
}
