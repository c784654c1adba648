//! Merging a `key = value` config file into the argument list.

use std::ffi::OsString;
use std::path::Path;

/// Flags that take no value: `true` turns them on, `false` leaves them off.
const SWITCHES: [&str; 2] = ["resume", "no-extrapolate"];

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Syntax(String),
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag.as_str() || s.starts_with(&prefix)
    })
}

/// Appends `--key value` for every config entry whose flag is absent from
/// `args`. Repeated keys become repeated flags.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::Syntax(format!("{}: line {}: expected `key = value`", path.display(), i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(ConfigError::Syntax(format!(
                "{}: line {}: invalid key `{key}`",
                path.display(),
                i + 1
            )));
        }
        if given(&args, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => extra.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => {
                    return Err(ConfigError::Syntax(format!(
                        "{}: line {}: `{key}` takes true or false",
                        path.display(),
                        i + 1
                    )))
                }
            }
        } else {
            extra.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = args;
    out.extend(extra);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_line_wins_and_switches_expand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# estimator settings\nwindow_fraction = 0.3\nresolution = 17\nno-extrapolate = true\n").unwrap();
        let args = os(&["cpd", "estimate", "--config", cfg.to_str().unwrap(), "--resolution", "9"]);
        let merged = merge(args).unwrap();
        let tail: Vec<String> = merged[5..].iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(tail, ["9", "--window-fraction=0.3", "--no-extrapolate"]);
    }

    #[test]
    fn bad_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, "rmax 12\n").unwrap();
        match merge(os(&["cpd", "--config", cfg.to_str().unwrap()])) {
            Err(ConfigError::Syntax(m)) => assert!(m.contains("line 1")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            merge(os(&["cpd", "--config=/nonexistent/run.cfg"])),
            Err(ConfigError::Io(_))
        ));
    }
}
