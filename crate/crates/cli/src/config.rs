//! TOML defaults merged into the argument list ahead of the user's flags.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;
use toml::Value;

use crate::args::Cli;

/// Returns `argv` with the flags from the `--config` file (if any) inserted
/// right after the subcommand name, so that later command-line flags win.
pub fn merge_config_args(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = find_config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("invalid config file {}: {e}", path.display()))?;

    let command = Cli::command();
    let sub_names: Vec<String> = command.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = argv
        .iter()
        .skip(1)
        .position(|a| a.to_str().is_some_and(|s| sub_names.iter().any(|n| n == s)))
        .map(|p| p + 1)
    else {
        return Ok(argv);
    };
    let sub = argv[pos].to_str().expect("matched a name").to_string();
    let sub_cmd = command.find_subcommand(&sub).expect("known subcommand");

    let accepts = |key: &str| -> Option<bool> {
        command
            .get_arguments()
            .chain(sub_cmd.get_arguments())
            .find(|a| a.get_long() == Some(key))
            .map(|a| a.get_action().takes_values())
    };
    let known_anywhere = |key: &str| {
        command.get_arguments().any(|a| a.get_long() == Some(key))
            || command
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };

    let mut injected = Vec::new();
    for (key, value) in &table {
        if let Value::Table(section) = value {
            if !sub_names.contains(key) {
                return Err(format!("config: unknown section [{key}]"));
            }
            if *key != sub {
                continue;
            }
            for (k, v) in section {
                let flag = k.replace('_', "-");
                let takes_value = accepts(&flag).ok_or_else(|| format!("config: [{key}] has no option {k:?}"))?;
                push_flag(&mut injected, &flag, v, takes_value)?;
            }
            continue;
        }
        let flag = key.replace('_', "-");
        if flag == "config" {
            return Err("config: a config file cannot name another config file".into());
        }
        match accepts(&flag) {
            Some(takes_value) => push_flag(&mut injected, &flag, value, takes_value)?,
            None if known_anywhere(&flag) => {}
            None => return Err(format!("config: unknown option {key:?}")),
        }
    }

    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn push_flag(out: &mut Vec<OsString>, flag: &str, value: &Value, takes_value: bool) -> Result<(), String> {
    if !takes_value {
        return match value {
            Value::Boolean(true) => {
                out.push(format!("--{flag}").into());
                Ok(())
            }
            Value::Boolean(false) => Ok(()),
            _ => Err(format!("config: {flag} is a switch and needs true or false")),
        };
    }
    let text = match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                other => Err(format!("config: {flag} list entries must be strings, got {other}")),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        other => return Err(format!("config: unsupported value for {flag}: {other}")),
    };
    out.push(format!("--{flag}").into());
    out.push(text.into());
    Ok(())
}

fn find_config_path(argv: &[OsString]) -> Option<std::path::PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(|p| Path::new(p).to_path_buf());
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(Path::new(p).to_path_buf());
        }
    }
    None
}
