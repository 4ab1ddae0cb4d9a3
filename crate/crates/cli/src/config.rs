use std::ffi::OsString;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::args::SUBCOMMANDS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Syntax { path: PathBuf, line: usize, reason: String },
    #[error("--config needs a path")]
    MissingPath,
}

/// Parses a flat `key = value` file into `--key value` flags. Blank lines
/// and `#` comments are ignored; underscores in keys become dashes;
/// `true` turns a key into a bare switch and `false` drops it.
pub fn parse_config(src: &str, path: &Path) -> Result<Vec<String>, ConfigError> {
    let mut flags = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |reason: String| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key = value, found {line:?}")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key.starts_with('-') {
            return Err(syntax(format!("bad key {key:?}")));
        }
        if matches!(key.as_str(), "config" | "threads") {
            return Err(syntax(format!("{key} cannot be set from a config file")));
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => {
                flags.push(format!("--{key}"));
                flags.push(value.to_string());
            }
        }
    }
    Ok(flags)
}

/// Removes `--config <path>` from `argv` and splices the file's flags in
/// right after the subcommand name, so explicit flags (which come later)
/// override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut out = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            config = Some(PathBuf::from(it.next().ok_or(ConfigError::MissingPath)?));
        } else if let Some(p) = arg.to_str().and_then(|s| s.strip_prefix("--config=")) {
            config = Some(PathBuf::from(p));
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(out);
    };
    let src = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let flags = parse_config(&src, &path)?;
    match out
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
    {
        Some(at) => {
            out.splice(at + 1..at + 1, flags.into_iter().map(OsString::from));
        }
        // No subcommand: let clap report it.
        None => out.extend(flags.into_iter().map(OsString::from)),
    }
    Ok(out)
}
