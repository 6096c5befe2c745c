//! The `afapprox` command line.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use afapprox_core::approx::{accuracy_loss, gen_accurate_approx, GenConfig};
use afapprox_core::baselines::{
    minionn_approx, mpcformer_gelu, nfgen_mode, relu_swap, MaxErrorConfig, MiniOnnConfig, BASELINE_NAMES,
};
use afapprox_core::mpccost::{CostTable, NetworkProfile};
use afapprox_core::nn::{accuracy_float, train_fcn, Dataset, Model, TrainConfig};
use afapprox_core::piecewise::PiecewisePoly;
use afapprox_core::ring::RingSpec;
use afapprox_core::search::{find_best_piecepoly, SAConfig, SearchReport, Theta};
use afapprox_core::ActivationKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::dataset::DataSource;
use crate::docs::{approx_to_json, model_to_json, read_approx, read_model, read_profile};
use crate::error::{Error, Result};
use crate::eval::{cost_doc, target_for, CostDoc, Parallel, Workload, DEFAULT_CALIBRATION};
use crate::manifest::Recorder;

#[derive(Debug, Parser)]
#[command(
    name = "afapprox",
    version,
    about = "MPC-friendly piecewise polynomial activations",
    args_override_self = true
)]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON file of flag values; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for accuracy sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Search for the fastest approximation with negligible accuracy loss.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Generate one approximation at a fixed theta.
    #[command(args_override_self = true)]
    Approx(ApproxArgs),
    /// Compare plaintext and fixed-point accuracy.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Estimate secure inference cost and time.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
    /// Build a comparison approximation.
    #[command(args_override_self = true)]
    Baseline(BaselineArgs),
    /// Train a fully connected network on a dataset.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Validate an approximation document and write it in canonical form.
    #[command(args_override_self = true)]
    Export(ExportArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Gen(_) => "gen",
            Cmd::Approx(_) => "approx",
            Cmd::Eval(_) => "eval",
            Cmd::Bench(_) => "bench",
            Cmd::Baseline(_) => "baseline",
            Cmd::Train(_) => "train",
            Cmd::Export(_) => "export",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// `blobs`, `rings`, or a CSV file of features followed by a label.
    #[arg(long, default_value = "blobs")]
    pub dataset: String,
    /// Examples to generate for synthetic datasets.
    #[arg(long, default_value_t = 4000)]
    pub size: usize,
    /// Generator seed (default: --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl DataArgs {
    fn source(&self, dim: usize, classes: usize, seed: u64) -> DataSource {
        DataSource::parse(&self.dataset, self.size, dim, classes, self.data_seed.unwrap_or(seed))
    }
}

#[derive(Debug, Clone, Args)]
pub struct IntervalArgs {
    /// Left end of the approximation interval.
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub s: f64,
    /// Right end of the approximation interval.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub e: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// silu, gelu or mish.
    #[arg(long)]
    pub function: String,
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Accuracy loss bound.
    #[arg(long, default_value_t = 1e-2)]
    pub nu: f64,
    /// Annealing iterations.
    #[arg(long, default_value_t = 10)]
    pub imax: usize,
    /// Initial temperature.
    #[arg(long, default_value_t = 0.2)]
    pub chi0: f64,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION)]
    pub calib_size: usize,
    /// Network profile JSON.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Starting piece cap.
    #[arg(long, default_value_t = 10_000)]
    pub m0: usize,
    /// Starting degree.
    #[arg(long, default_value_t = 10)]
    pub k0: usize,
    #[arg(long, default_value_t = 128)]
    pub ell0: u32,
    #[arg(long, default_value_t = 64)]
    pub d0: u32,
    #[command(flatten)]
    pub interval: IntervalArgs,
    /// Fit the activation itself rather than its residual.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    /// Activation name or `identity`.
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 64)]
    pub ell: u32,
    #[arg(long, default_value_t = 32)]
    pub d: u32,
    #[arg(long, default_value_t = 1e-2)]
    pub nu: f64,
    /// Model whose accuracy guides the search; without it only the piece
    /// cap constrains the result.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION)]
    pub calib_size: usize,
    #[command(flatten)]
    pub interval: IntervalArgs,
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub approx: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub approx: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Second approximation; prints its time relative to --approx.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    /// One of minionn, relu, mpcformer, nfgen.
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value = "silu")]
    pub function: String,
    /// Error threshold (nfgen).
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Degree (default 3 for minionn, 10 for nfgen).
    #[arg(long)]
    pub k: Option<usize>,
    /// Switchover points (minionn, default 20) or piece cap (nfgen, default 10000).
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid size (minionn).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[command(flatten)]
    pub interval: IntervalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Layer widths from input to classes, e.g. 2:16:16:2.
    #[arg(long)]
    pub arch: String,
    #[arg(long, default_value = "silu")]
    pub activation: String,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub approx: PathBuf,
    #[arg(long, default_value = "json")]
    pub format: String,
}

/// Parses `argv` (program name first) after merging the config file.
/// Returns the parsed command line and the effective arguments to record.
pub fn parse(argv: &[String]) -> std::result::Result<(Cli, Vec<String>), ParseFailure> {
    let prog = argv.first().cloned().unwrap_or_else(|| "afapprox".into());
    let user = &argv[argv.len().min(1)..];
    let Some((sub, rest)) = config::split_subcommand(user) else {
        return Cli::try_parse_from(argv).map(|c| (c, Vec::new())).map_err(ParseFailure::Clap);
    };
    let mut effective = vec![sub.clone()];
    if let Some(path) = config::config_path(&rest) {
        let cfg = config::read_config(Path::new(&path)).map_err(ParseFailure::Config)?;
        effective.extend(config::config_args(&Cli::command(), &sub, &cfg).map_err(ParseFailure::Config)?);
    }
    let full: Vec<String> = effective.iter().chain(&rest).cloned().collect();
    effective.extend(config::strip_config(&rest));
    let cli = Cli::try_parse_from(std::iter::once(prog).chain(full)).map_err(ParseFailure::Clap)?;
    Ok((cli, effective))
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

/// Runs the command line and returns the process exit code. Results go to
/// `out`, diagnostics to `err`.
pub fn main_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let (cli, effective) = match parse(argv) {
        Ok(v) => v,
        Err(ParseFailure::Clap(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
        Err(ParseFailure::Config(e)) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    if let Err(e) = fs::create_dir_all(&cli.out) {
        let _ = writeln!(err, "error: {}: {e}", cli.out.display());
        return 1;
    }
    let mut rec = Recorder::new(cli.command.name(), effective, Some(cli.seed));
    if let Some(c) = &cli.config {
        if let Err(e) = rec.input(c) {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    }
    let result = run(&cli, &mut rec, out);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    };
    if let Err(e) = rec.finish(&cli.out, code) {
        let _ = writeln!(err, "error: {e}");
        return code.max(1);
    }
    code
}

pub fn run(cli: &Cli, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Cmd::Gen(a) => cmd_gen(cli, a, rec, out),
        Cmd::Approx(a) => cmd_approx(cli, a, rec, out),
        Cmd::Eval(a) => cmd_eval(cli, a, rec, out),
        Cmd::Bench(a) => cmd_bench(cli, a, rec, out),
        Cmd::Baseline(a) => cmd_baseline(cli, a, rec, out),
        Cmd::Train(a) => cmd_train(cli, a, rec, out),
        Cmd::Export(a) => cmd_export(cli, a, rec, out),
    }
}

fn print_table(out: &mut dyn Write, rows: &[(&str, String)]) -> Result<()> {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(out, "{k:<w$}  {v}").map_err(Error::io("<stdout>"))?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn fmt_theta(t: &Theta) -> String {
    format!("m={} k={} ring=<{},{}>", t.m, t.k, t.ring.ell(), t.ring.d())
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("accuracy loss bound nu={nu} admits no approximation")))
    }
}

fn ring(ell: u32, d: u32) -> Result<RingSpec> {
    RingSpec::new(ell, d).map_err(|e| Error::Usage(e.to_string()))
}

fn load_profile(path: Option<&Path>, rec: &mut Recorder) -> Result<(NetworkProfile, CostTable)> {
    match path {
        Some(p) => {
            rec.input(p)?;
            read_profile(p)
        }
        None => Ok((NetworkProfile::default(), CostTable::three_party())),
    }
}

/// A model with its dataset split into train and test.
pub struct Loaded {
    pub model: Model,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn load_model_data(model: &Path, data: &DataArgs, seed: u64, rec: &mut Recorder) -> Result<Loaded> {
    rec.input(model)?;
    let (model, _warnings) = read_model(model)?;
    let dim = model.input_dim().ok_or_else(|| Error::Document("model has no linear layer".into()))?;
    let source = data.source(dim, model.classes, seed);
    if let Some(p) = source.path() {
        rec.input(p)?;
    }
    let (train, test) = source.load_split()?;
    for d in [&train, &test] {
        if !d.is_empty() && d.dim() != dim {
            return Err(Error::Usage(format!("dataset has {} features, model expects {dim}", d.dim())));
        }
    }
    Ok(Loaded { model, train, test })
}

/// Everything `gen` produces.
#[derive(Debug, Clone)]
pub struct GenOutcome {
    pub approx: PiecewisePoly,
    pub report: SearchReport,
    pub cost: CostDoc,
    /// Calibration accuracy with the exact activation, then with `approx`.
    pub eta: f64,
    pub eta_prime: f64,
    pub test_eta: f64,
    pub test_eta_prime: f64,
}

/// The generation pipeline behind `gen`: anneal over theta on the
/// calibration split, then evaluate the winner on the test split.
pub fn generate(
    args: &GenArgs,
    seed: u64,
    loaded: &Loaded,
    profile: (NetworkProfile, CostTable),
    jobs: Option<usize>,
) -> Result<GenOutcome> {
    check_nu(args.nu)?;
    let target = target_for(&args.function, args.exact)?;
    let par = Parallel::new(jobs)?;
    let calib = loaded.train.head(args.calib_size);
    let w = Workload {
        model: &loaded.model,
        calib: &calib,
        test: &loaded.test,
        profile: profile.0,
        table: profile.1,
        map: &par,
    };
    let gen = GenConfig { s: args.interval.s, e: args.interval.e, nu: args.nu, ..GenConfig::default() };
    let sa = SAConfig {
        i_max: args.imax,
        chi0: args.chi0,
        seed,
        theta0: Theta { m: args.m0, k: args.k0, ring: ring(args.ell0, args.d0)? },
        nu: args.nu,
    };
    let eta = w.eta()?;
    let outcome = find_best_piecepoly(&target, &gen, &sa, &w, &w, eta).map_err(|e| match e {
        afapprox_core::search::SearchError::NoFeasible => {
            Error::Infeasible(format!("no theta visited met nu={} over {} iterations", args.nu, args.imax))
        }
        e => e.into(),
    })?;
    let pp = outcome.best;
    let eta_prime = w.eta_prime(&pp, &calib)?;
    let test_eta = accuracy_float(&loaded.model, &loaded.test, None, &par)?;
    let test_eta_prime = w.eta_prime(&pp, &loaded.test)?;
    let cost = cost_doc(w.cost(&pp)?, &w.profile, &w.table);
    Ok(GenOutcome { approx: pp, report: outcome.report, cost, eta, eta_prime, test_eta, test_eta_prime })
}

fn cmd_gen(cli: &Cli, a: &GenArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    check_nu(a.nu)?;
    let profile = load_profile(a.profile.as_deref(), rec)?;
    let loaded = load_model_data(&a.model, &a.data, cli.seed, rec)?;
    let g = rec.phase("search", || generate(a, cli.seed, &loaded, profile, cli.jobs))?;
    rec.output(&cli.out, "approximation.json", &approx_to_json(&g.approx))?;
    rec.output(&cli.out, "search_report.json", &to_json(&g.report))?;
    rec.output(&cli.out, "cost_report.json", &to_json(&g.cost))?;
    let feasible = g.report.steps.iter().filter(|s| s.feasible).count();
    print_table(
        out,
        &[
            ("function", g.approx.function().to_string()),
            ("theta", fmt_theta(&g.approx.theta())),
            ("pieces", g.approx.num_pieces().to_string()),
            ("feasible steps", format!("{feasible}/{}", g.report.steps.len())),
            ("eta (calib)", format!("{:.4}", g.eta)),
            ("eta' (calib)", format!("{:.4}", g.eta_prime)),
            ("eta (test)", format!("{:.4}", g.test_eta)),
            ("eta' (test)", format!("{:.4}", g.test_eta_prime)),
            ("loss (test)", format!("{:.5}", accuracy_loss(g.test_eta, g.test_eta_prime))),
            ("time per inference", format!("{:.6e} s", g.cost.time)),
        ],
    )
}

fn cmd_approx(cli: &Cli, a: &ApproxArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    check_nu(a.nu)?;
    if a.m == 0 {
        return Err(Error::Usage("--m must be at least 1".into()));
    }
    let target = target_for(&a.function, a.exact)?;
    let theta = Theta { m: a.m, k: a.k, ring: ring(a.ell, a.d)? };
    let gen = GenConfig { s: a.interval.s, e: a.interval.e, nu: a.nu, ..GenConfig::default() };
    let par = Parallel::new(cli.jobs)?;
    let (pp, report) = match &a.model {
        Some(path) => {
            let loaded = load_model_data(path, &a.data, cli.seed, rec)?;
            let calib = loaded.train.head(a.calib_size);
            let w = Workload {
                model: &loaded.model,
                calib: &calib,
                test: &loaded.test,
                profile: NetworkProfile::default(),
                table: CostTable::three_party(),
                map: &par,
            };
            let eta = w.eta()?;
            rec.phase("generate", || gen_accurate_approx(&theta, &target, &gen, &w, eta))?
        }
        None => rec.phase("generate", || gen_accurate_approx(&theta, &target, &gen, &|_: &PiecewisePoly| 1.0, 1.0))?,
    };
    rec.output(&cli.out, "delta_ladder.json", &to_json(&report))?;
    writeln!(out, "{:>12}  {:>6}  {:>6}  {:>8}  {:>8}  accepted", "delta", "pieces", "forced", "eta'", "loss")
        .map_err(Error::io("<stdout>"))?;
    for p in &report.probes {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(
            out,
            "{:>12.6e}  {:>6}  {:>6}  {:>8}  {:>8}  {}",
            p.delta,
            p.pieces,
            p.forced,
            opt(p.eta_prime),
            opt(p.loss),
            if p.accepted { "yes" } else { "no" }
        )
        .map_err(Error::io("<stdout>"))?;
    }
    let pp = pp.ok_or_else(|| Error::Infeasible(format!("no delta met nu={} at {}", a.nu, fmt_theta(&theta))))?;
    rec.output(&cli.out, "approximation.json", &approx_to_json(&pp))?;
    print_table(
        out,
        &[("pieces", pp.num_pieces().to_string()), ("delta", format!("{:e}", report.accepted_delta.unwrap_or(0.0)))],
    )
}

fn cmd_eval(cli: &Cli, a: &EvalArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    rec.input(&a.approx)?;
    let pp = read_approx(&a.approx)?;
    let loaded = load_model_data(&a.model, &a.data, cli.seed, rec)?;
    let par = Parallel::new(cli.jobs)?;
    let w = Workload {
        model: &loaded.model,
        calib: &loaded.test,
        test: &loaded.test,
        profile: NetworkProfile::default(),
        table: CostTable::three_party(),
        map: &par,
    };
    let (eta, eta_prime) =
        rec.phase("evaluate", || -> Result<_> { Ok((w.eta()?, w.eta_prime(&pp, &loaded.test)?)) })?;
    print_table(
        out,
        &[
            ("examples", loaded.test.len().to_string()),
            ("eta", format!("{eta:.6}")),
            ("eta'", format!("{eta_prime:.6}")),
            ("loss", format!("{:.6}", accuracy_loss(eta, eta_prime))),
        ],
    )
}

fn cmd_bench(cli: &Cli, a: &BenchArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    rec.input(&a.approx)?;
    let pp = read_approx(&a.approx)?;
    let (profile, table) = load_profile(a.profile.as_deref(), rec)?;
    let loaded = load_model_data(&a.model, &a.data, cli.seed, rec)?;
    let par = Parallel::new(cli.jobs)?;
    let w = Workload { model: &loaded.model, calib: &loaded.test, test: &loaded.test, profile, table, map: &par };
    let doc = cost_doc(w.cost(&pp)?, &profile, &table);
    rec.output(&cli.out, "cost_report.json", &to_json(&doc))?;
    let mut rows = vec![
        ("theta", fmt_theta(&pp.theta())),
        ("batch", doc.report.batch.to_string()),
        ("rounds", doc.report.rounds.to_string()),
        ("bytes", doc.report.bytes.to_string()),
        ("local ops", doc.report.local_ops.to_string()),
        ("rounds term", format!("{:.6e} s", doc.rounds_term)),
        ("bandwidth term", format!("{:.6e} s", doc.bandwidth_term)),
        ("compute term", format!("{:.6e} s", doc.compute_term)),
        ("time per inference", format!("{:.6e} s", doc.time)),
    ];
    if let Some(c) = &a.compare {
        rec.input(c)?;
        let other = read_approx(c)?;
        let odoc = cost_doc(w.cost(&other)?, &profile, &table);
        rec.output(&cli.out, "cost_report_compare.json", &to_json(&odoc))?;
        rows.push(("compare time", format!("{:.6e} s", odoc.time)));
        rows.push(("time ratio (compare / approx)", format!("{:.4}", odoc.time / doc.time)));
    }
    print_table(out, &rows)
}

/// Builds the named baseline approximation for `function`.
pub fn baseline(a: &BaselineArgs) -> Result<PiecewisePoly> {
    let kind = || -> Result<ActivationKind> { Ok(a.function.parse()?) };
    let tails = |k: ActivationKind| k.tails().ok_or_else(|| Error::Usage(format!("`{k}` has no linear tails")));
    match a.name.as_str() {
        "relu" => Ok(relu_swap()),
        "mpcformer" => {
            if a.function != "gelu" {
                return Err(Error::Usage("the mpcformer baseline approximates gelu only".into()));
            }
            Ok(mpcformer_gelu())
        }
        "minionn" => {
            let k = kind()?;
            let cfg = MiniOnnConfig {
                n: a.n,
                m: a.m.unwrap_or(MiniOnnConfig::default().m),
                k: a.k.unwrap_or(MiniOnnConfig::default().k),
                a: a.interval.s,
                b: a.interval.e,
            };
            Ok(minionn_approx(|x| k.eval_exact(x), k.name(), &cfg, tails(k)?)?)
        }
        "nfgen" => {
            let k = kind()?;
            let d = MaxErrorConfig::default();
            let cfg = MaxErrorConfig {
                delta: a.delta,
                k: a.k.unwrap_or(d.k),
                m_cap: a.m.unwrap_or(d.m_cap),
                s: a.interval.s,
                e: a.interval.e,
                ring: d.ring,
            };
            Ok(nfgen_mode(|x| k.eval_exact(x), k.name(), k.exact_kinks(), &cfg, tails(k)?)?)
        }
        other => {
            Err(Error::Usage(format!("unknown baseline `{other}`; expected one of {}", BASELINE_NAMES.join(", "))))
        }
    }
}

fn cmd_baseline(cli: &Cli, a: &BaselineArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    let pp = rec.phase("generate", || baseline(a))?;
    rec.output(&cli.out, "approximation.json", &approx_to_json(&pp))?;
    print_table(
        out,
        &[
            ("baseline", a.name.clone()),
            ("function", pp.function().to_string()),
            ("pieces", pp.num_pieces().to_string()),
            ("theta", fmt_theta(&pp.theta())),
        ],
    )
}

/// `2:16:16:2` into input width, hidden widths, classes.
pub fn parse_arch(arch: &str) -> Result<(usize, Vec<usize>, usize)> {
    let widths = arch
        .split(':')
        .map(|s| s.trim().parse::<usize>().ok().filter(|&w| w > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Usage(format!("bad --arch `{arch}`: expected positive widths joined by `:`")))?;
    if widths.len() < 2 {
        return Err(Error::Usage(format!("bad --arch `{arch}`: need at least input and output widths")));
    }
    let n = widths.len();
    Ok((widths[0], widths[1..n - 1].to_vec(), widths[n - 1]))
}

fn cmd_train(cli: &Cli, a: &TrainArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    let (dim, hidden, classes) = parse_arch(&a.arch)?;
    let activation: ActivationKind = a.activation.parse()?;
    let source = a.data.source(dim, classes, cli.seed);
    if let Some(p) = source.path() {
        rec.input(p)?;
    }
    let (train, test) = source.load_split()?;
    if train.dim() != dim || train.classes != classes {
        return Err(Error::Usage(format!(
            "dataset has {} features and {} classes, --arch expects {dim} and {classes}",
            train.dim(),
            train.classes
        )));
    }
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        momentum: a.momentum,
        batch_size: a.batch_size,
        seed: cli.seed,
        ..TrainConfig::new(hidden, activation)
    };
    let model = rec.phase("train", || train_fcn(&train, &cfg))?;
    let par = Parallel::new(cli.jobs)?;
    let train_acc = accuracy_float(&model, &train, None, &par)?;
    let test_acc = if test.is_empty() { f64::NAN } else { accuracy_float(&model, &test, None, &par)? };
    rec.output(&cli.out, "model.json", &model_to_json(&model))?;
    print_table(
        out,
        &[
            ("arch", a.arch.clone()),
            ("activation", activation.name().to_string()),
            ("train accuracy", format!("{train_acc:.4}")),
            ("test accuracy", format!("{test_acc:.4}")),
        ],
    )
}

fn cmd_export(cli: &Cli, a: &ExportArgs, rec: &mut Recorder, out: &mut dyn Write) -> Result<()> {
    if a.format != "json" {
        return Err(Error::Usage(format!("unsupported format `{}`; expected json", a.format)));
    }
    rec.input(&a.approx)?;
    let pp = read_approx(&a.approx)?;
    let path = rec.output(&cli.out, "approximation.json", &approx_to_json(&pp))?;
    print_table(out, &[("written", path.display().to_string()), ("pieces", pp.num_pieces().to_string())])
}
