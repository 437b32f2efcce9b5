//! `key=value` config files merged under command-line flags.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const SUBCOMMANDS: [&str; 5] = ["verify", "spectrum", "entropy", "path", "export"];

/// Entries of a config file in file order. Blank lines and `#` comments are skipped.
pub fn read_entries(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_entries(&text)
}

pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", lineno + 1);
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(k, _)| k))
}

/// Rewrites `args` (without the program name) so that config entries come right
/// after the subcommand and explicit flags win.
pub fn merge_args(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let entries = read_entries(Path::new(&path))?;
    let (sub, rest) = match args.first() {
        Some(a) if SUBCOMMANDS.contains(&a.as_str()) => (Some(a.clone()), args[1..].to_vec()),
        _ => (None, args.clone()),
    };
    let given: BTreeSet<&str> = rest.iter().filter_map(|a| flag_name(a)).collect();
    let mut sub = sub;
    let mut merged = Vec::new();
    for (k, v) in &entries {
        if k == "command" {
            if sub.is_none() {
                sub = Some(v.clone());
            }
            continue;
        }
        if k == "config" || given.contains(k.as_str()) {
            continue;
        }
        match v.as_str() {
            "true" => merged.push(format!("--{k}")),
            "false" => {}
            _ => {
                merged.push(format!("--{k}"));
                merged.push(v.clone());
            }
        }
    }
    let Some(sub) = sub else { bail!("no subcommand given and the config has no command= entry") };
    let mut out = vec![sub];
    out.extend(merged);
    out.extend(rest);
    Ok(out)
}
