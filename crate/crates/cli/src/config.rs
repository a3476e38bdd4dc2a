//! `--config FILE`: a JSON object whose keys fill in options missing from the
//! command line.
//!
//! Top-level keys apply to any subcommand that has an option of that name;
//! keys under an object named after the subcommand apply to it alone and win
//! over top-level keys. Underscores and dashes in keys are interchangeable.

use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};
use serde_json::{Map, Value};

const SKIP: [&str; 4] = ["help", "version", "config", "threads"];

/// Extra `--flag value` arguments taken from the config file for options the
/// user did not set on the command line.
pub fn args_from_file(path: &Path, cli: &Command, matches: &ArgMatches) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let root: Value = serde_json::from_str(&text).map_err(|e| format!("config {} is not valid JSON: {e}", path.display()))?;
    let Value::Object(root) = root else {
        return Err(format!("config {} must hold a JSON object", path.display()));
    };
    let Some((name, sub_matches)) = matches.subcommand() else {
        return Ok(Vec::new());
    };
    let sub = cli.find_subcommand(name).expect("parsed subcommand exists");

    let mut merged = Map::new();
    for (k, v) in &root {
        if cli.find_subcommand(k).is_none() {
            merged.insert(normalize(k), v.clone());
        }
    }
    let mut scoped = Map::new();
    match root.get(name) {
        Some(Value::Object(o)) => scoped.extend(o.iter().map(|(k, v)| (normalize(k), v.clone()))),
        Some(_) => return Err(format!("config section {name:?} must be an object")),
        None => {}
    }
    for k in scoped.keys() {
        let known = sub.get_arguments().any(|a| a.get_long() == Some(k.as_str())) || k == "threads";
        if !known {
            return Err(format!("config section {name:?} has unknown option {k:?}"));
        }
    }
    merged.extend(scoped);

    let mut out = Vec::new();
    let threads_set = matches!(
        matches.value_source("threads"),
        Some(ValueSource::CommandLine | ValueSource::EnvVariable)
    );
    if let (false, Some(v)) = (threads_set, merged.get("threads")) {
        push(&mut out, "threads", v)?;
    }
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if SKIP.contains(&long) {
            continue;
        }
        let Some(v) = merged.get(long) else { continue };
        let id = arg.get_id().as_str();
        if sub_matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        push(&mut out, long, v)?;
    }
    Ok(out)
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

fn push(out: &mut Vec<String>, long: &str, v: &Value) -> Result<(), String> {
    let flag = format!("--{long}");
    match v {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(flag),
        Value::Number(n) => out.extend([flag, n.to_string()]),
        Value::String(s) => out.extend([flag, s.clone()]),
        Value::Array(items) => {
            let parts: Result<Vec<String>, String> = items
                .iter()
                .map(|i| match i {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(format!("config option {long:?} must list numbers or strings")),
                })
                .collect();
            out.extend([flag, parts?.join(",")]);
        }
        Value::Object(_) => return Err(format!("config option {long:?} cannot be an object")),
    }
    Ok(())
}
