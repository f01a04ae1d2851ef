//! Flat `key = value` configuration files and run sidecars.
//!
//! Keys are the long flag names of the subcommand. A config file is spliced
//! into the argument list right after the subcommand name, so flags given on
//! the command line come later and win.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Parse a config file into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", n + 1);
        };
        let k = k.trim();
        if k.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Turn config pairs into command-line arguments. `true` switches a flag
/// on and `false` leaves it off.
pub fn config_to_args(pairs: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => args.push(format!("--{k}={v}")),
        }
    }
    args
}

/// Locate `--config <file>` / `--config=<file>`, remove it from `argv` and
/// splice the file's settings in after the subcommand name.
pub fn expand_config(argv: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().context("--config needs a file argument")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let extra = config_to_args(&parse_config(&text)?);
    let pos = rest
        .iter()
        .position(|a| subcommands.contains(&a.as_str()))
        .context("--config given without a subcommand")?;
    rest.splice(pos + 1..pos + 1, extra);
    Ok(rest)
}

fn render_value(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => Some(
            items
                .iter()
                .filter_map(render_value)
                .collect::<Vec<_>>()
                .join(","),
        ),
        other => Some(other.to_string()),
    }
}

/// Render the effective settings of a run in config-file syntax.
pub fn render_sidecar<T: Serialize>(subcommand: &str, args: &T, jobs: usize) -> Result<String> {
    let Value::Object(map) = serde_json::to_value(args)? else {
        bail!("settings must serialize to a map");
    };
    let mut out = format!(
        "# vocalprint {} {}\n# rerun with: vocalprint {subcommand} --config <this file>\n",
        env!("CARGO_PKG_VERSION"),
        subcommand
    );
    out.push_str(&format!("jobs = {jobs}\n"));
    for (k, v) in &map {
        if let Some(s) = render_value(v) {
            out.push_str(&format!("{} = {s}\n", k.replace('_', "-")));
        }
    }
    Ok(out)
}

pub fn write_sidecar<T: Serialize>(
    path: &Path,
    subcommand: &str,
    args: &T,
    jobs: usize,
) -> Result<()> {
    fs::write(path, render_sidecar(subcommand, args, jobs)?)
        .with_context(|| format!("writing {}", path.display()))
}
