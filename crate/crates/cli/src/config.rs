//! TOML config files mirror the command-line flags. Top-level keys are global
//! flags, a table named after the subcommand holds that command's flags:
//!
//! ```toml
//! seed = 7
//! [train]
//! dataset = "out/N1_manifest.json"
//! layers = [2, 2]
//! noisy = true
//! ```
//!
//! Keys become `--key value` arguments placed before the real arguments, so
//! anything given on the command line wins.

use anyhow::{bail, Context, Result};
use std::ffi::OsString;
use std::path::Path;
use toml::Value;

const GLOBAL_VALUED: [&str; 4] = ["--seed", "--jobs", "--config", "--out"];

/// Position of the subcommand token, skipping global flags and their values.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&a.as_ref()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    args.iter().enumerate().skip(1).find_map(|(i, a)| {
        let s = a.to_string_lossy();
        match s.strip_prefix("--config=") {
            Some(rest) => Some(OsString::from(rest)),
            None if s == "--config" => args.get(i + 1).cloned(),
            None => None,
        }
    })
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|x| scalar(key, x))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("config key `{key}` must be a string, number, boolean or array"),
    })
}

fn push_flags(out: &mut Vec<OsString>, table: &toml::Table, skip_tables: bool) -> Result<()> {
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Table(_) if skip_tables => {}
            Value::Table(_) => bail!("config key `{key}` cannot be a table here"),
            Value::Boolean(true) => out.push(flag.into()),
            Value::Boolean(false) => {}
            v => {
                out.push(flag.into());
                out.push(scalar(key, v)?.into());
            }
        }
    }
    Ok(())
}

/// Rewrites `args` so the config file's values come first.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = subcommand_index(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
    let name = args[sub].to_string_lossy().into_owned();

    let mut out = vec![args[0].clone(), args[sub].clone()];
    push_flags(&mut out, &table, true)?;
    if let Some(section) = table.get(&name) {
        let Value::Table(section) = section else {
            bail!("config section `{name}` must be a table");
        };
        push_flags(&mut out, section, false)?;
    }
    out.extend(args[1..sub].iter().cloned());
    out.extend(args[sub + 1..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_the_subcommand_after_global_values() {
        assert_eq!(subcommand_index(&os(&["stvqc", "--out", "train", "train"])), Some(3));
        assert_eq!(subcommand_index(&os(&["stvqc", "--seed", "3", "search", "--episodes", "2"])), Some(3));
        assert_eq!(subcommand_index(&os(&["stvqc"])), None);
    }

    #[test]
    fn config_values_precede_command_line_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 7\n[train]\nlayers = [2, 2]\nnoisy = true\nepochs = 3\n").unwrap();
        let p = path.to_str().unwrap();
        let out = expand(os(&["stvqc", "--config", p, "train", "--epochs", "5"])).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(
            out,
            ["stvqc", "train", "--seed", "7", "--epochs", "3", "--layers", "2,2", "--noisy", "--config", p, "--epochs", "5"]
        );
    }
}
