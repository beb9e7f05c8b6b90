//! Flat `key = value` config files, merged underneath command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Keys that stand for the same quantity; a flag for any of them on the
/// command line hides all of them in the file.
const DRIFT_GROUP: &[&str] = &["u", "v", "D-coef"];

pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", no + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            bail!("config line {}: duplicate key `{k}`", no + 1);
        }
    }
    Ok(out)
}

fn flag_names(args: &[String]) -> Vec<String> {
    args.iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect()
}

/// Pull `--config PATH` out of `argv` and splice the file's entries in
/// after the subcommand for every key not already given as a flag.
pub fn merge(argv: Vec<String>) -> Result<Vec<String>> {
    let mut args = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            args.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let entries = load(Path::new(&path))?;
    let given = flag_names(&args);
    let drift_given = given.iter().any(|g| DRIFT_GROUP.contains(&g.as_str()));
    let mut extra = Vec::new();
    for (k, v) in entries {
        if given.contains(&k) || (drift_given && DRIFT_GROUP.contains(&k.as_str())) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => extra.push(format!("--{k}={v}")),
        }
    }
    // argv[0] is the program, argv[1] the subcommand.
    let at = args.len().min(2);
    args.splice(at..at, extra);
    Ok(args)
}

fn load(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}
