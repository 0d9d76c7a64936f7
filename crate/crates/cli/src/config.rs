//! `key = value` config files merged underneath the command line.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses a config file into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are skipped; keys may be written with or without `--`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value", n + 1);
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    args.iter()
        .any(|a| a == &long || a.strip_prefix(&long).is_some_and(|rest| rest.starts_with('=')))
}

/// Returns `args` with the entries of `--config FILE` spliced in right after
/// the subcommand. Keys already given on the command line are dropped, so
/// flags always win. `key = true` becomes a bare flag, `key = false` is
/// ignored.
pub fn merge(args: Vec<String>) -> Result<Vec<String>> {
    let pos = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let mut args = args;
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        let p = p.to_string();
        args.remove(pos);
        p
    } else {
        if pos + 1 >= args.len() {
            bail!("--config needs a file name");
        }
        let p = args.remove(pos + 1);
        args.remove(pos);
        p
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config file {path}"))?;
    let entries = parse(&text).with_context(|| format!("in config file {path}"))?;

    let mut injected = Vec::new();
    for (key, value) in entries {
        if flag_present(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value);
            }
        }
    }
    // args[0] is the program, args[1] the subcommand
    let at = 2.min(args.len());
    args.splice(at..at, injected);
    Ok(args)
}
