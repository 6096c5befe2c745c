//! Config files: a JSON object whose keys name long flags. Top-level keys
//! apply to every command that accepts them; an object under a command's
//! name applies to that command only. Command-line flags win.

use std::fs;
use std::path::Path;

use clap::Command;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Global flags that take a value, in the form they may precede the
/// subcommand.
const GLOBAL_VALUED: [&str; 4] = ["--seed", "--config", "--out", "--jobs"];

/// Splits `argv` (without the program name) into the subcommand and every
/// other argument, in order. Only global flags may precede the subcommand.
pub fn split_subcommand(argv: &[String]) -> Option<(String, Vec<String>)> {
    let mut i = 0;
    while i < argv.len() {
        let a = &argv[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            let mut rest = argv[..i].to_vec();
            rest.extend_from_slice(&argv[i + 1..]);
            return Some((a.clone(), rest));
        }
    }
    None
}

/// Value of `--config` in `args`, if present.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Removes `--config <path>` so recorded arguments replay without the file.
pub fn strip_config(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            it.next();
        } else if !a.starts_with("--config=") {
            out.push(a.clone());
        }
    }
    out
}

fn long_flags(cmd: &Command) -> Vec<String> {
    cmd.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect()
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn push_value(out: &mut Vec<String>, flag: &str, v: &Value, key: &str) -> Result<()> {
    let bad = || Error::Usage(format!("config key `{key}`: unsupported value {v}"));
    match v {
        Value::Bool(true) => out.push(format!("--{flag}")),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => out.extend([format!("--{flag}"), n.to_string()]),
        Value::String(s) => out.extend([format!("--{flag}"), s.clone()]),
        Value::Array(items) => {
            for item in items {
                if item.is_array() || item.is_object() {
                    return Err(bad());
                }
                push_value(out, flag, item, key)?;
            }
        }
        Value::Object(_) => return Err(bad()),
    }
    Ok(())
}

/// Flags contributed by `config` for subcommand `sub` of `root`.
pub fn config_args(root: &Command, sub: &str, config: &Map<String, Value>) -> Result<Vec<String>> {
    let subs: Vec<&Command> = root.get_subcommands().collect();
    let sub_cmd =
        subs.iter().find(|c| c.get_name() == sub).ok_or_else(|| Error::Usage(format!("unknown command `{sub}`")))?;
    let globals = long_flags(root);
    let accepted = long_flags(sub_cmd);
    let mut out = Vec::new();
    let mut section = None;
    for (key, value) in config {
        if let Some(c) = subs.iter().find(|c| c.get_name() == key) {
            if !value.is_object() {
                return Err(Error::Usage(format!("config section `{key}` must be an object")));
            }
            let known = long_flags(c);
            for k in value.as_object().into_iter().flat_map(|o| o.keys()) {
                let f = flag_name(k);
                if !known.contains(&f) && !globals.contains(&f) {
                    return Err(Error::Usage(format!("config key `{key}.{k}` is not a flag of `{key}`")));
                }
            }
            if key == sub {
                section = value.as_object();
            }
            continue;
        }
        let flag = flag_name(key);
        if flag == "config" {
            return Err(Error::Usage("config files cannot name another config".into()));
        }
        if globals.contains(&flag) || accepted.contains(&flag) {
            push_value(&mut out, &flag, value, key)?;
        } else if !subs.iter().any(|c| long_flags(c).contains(&flag)) {
            return Err(Error::Usage(format!("unknown config key `{key}`")));
        }
    }
    for (key, value) in section.into_iter().flatten() {
        push_value(&mut out, &flag_name(key), value, key)?;
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    match serde_json::from_str(&text).map_err(Error::json(path))? {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Usage(format!("{}: config must be a JSON object", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Arg;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn root() -> Command {
        Command::new("t")
            .arg(Arg::new("seed").long("seed").global(true))
            .subcommand(Command::new("gen").arg(Arg::new("nu").long("nu")).arg(Arg::new("exact").long("exact")))
            .subcommand(Command::new("train").arg(Arg::new("epochs").long("epochs")))
    }

    #[test]
    fn subcommand_found_after_global_values() {
        let (sub, rest) = split_subcommand(&args(&["--out", "gen", "train", "--epochs", "3"])).unwrap();
        assert_eq!(sub, "train");
        assert_eq!(rest, args(&["--out", "gen", "--epochs", "3"]));
        assert!(split_subcommand(&args(&["--seed", "1"])).is_none());
    }

    #[test]
    fn config_path_and_strip() {
        let a = args(&["gen", "--config", "c.json", "--nu", "0.1"]);
        assert_eq!(config_path(&a).as_deref(), Some("c.json"));
        assert_eq!(strip_config(&a), args(&["gen", "--nu", "0.1"]));
        assert_eq!(config_path(&args(&["--config=x"])).as_deref(), Some("x"));
    }

    #[test]
    fn flat_keys_and_sections() {
        let cfg: Map<String, Value> =
            serde_json::from_str(r#"{"seed": 3, "epochs": 5, "gen": {"nu": 0.5, "exact": true}}"#).unwrap();
        assert_eq!(config_args(&root(), "gen", &cfg).unwrap(), args(&["--seed", "3", "--exact", "--nu", "0.5"]));
        assert_eq!(config_args(&root(), "train", &cfg).unwrap(), args(&["--epochs", "5", "--seed", "3"]));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [r#"{"bogus": 1}"#, r#"{"gen": {"epochs": 1}}"#, r#"{"gen": 3}"#, r#"{"config": "x"}"#] {
            let cfg: Map<String, Value> = serde_json::from_str(text).unwrap();
            assert!(config_args(&root(), "gen", &cfg).is_err(), "{text}");
        }
    }
}
