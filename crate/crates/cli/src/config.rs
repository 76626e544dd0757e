//! `--config` files: one `key = value` per line, `#` starts a comment.
//! Keys are flag names without the leading dashes. `true` turns a switch on,
//! `false` leaves it off. The flags are inserted right after the subcommand,
//! so anything given on the command line overrides them.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

pub fn parse_config(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", no + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: bad key", no + 1));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Removes `--config PATH` from `argv` and splices the file's flags in after
/// the subcommand name.
pub fn expand_args(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path: Option<OsString> = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
    let extra = parse_config(&text)?;
    // Subcommand is the first argument after the binary name.
    let at = rest.len().min(2);
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: Vec<OsString>) -> Vec<String> {
        v.into_iter().map(|s| s.into_string().unwrap()).collect()
    }

    #[test]
    fn parses_pairs_and_switches() {
        let got = parse_config("tau = 512\n# note\nsampling = \"tau-nice\"\ntime = true\nstrict_monotone = false\n").unwrap();
        assert_eq!(strs(got), ["--tau", "512", "--sampling", "tau-nice", "--time"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_config("tau 5").is_err());
    }

    #[test]
    fn no_config_leaves_args_alone() {
        let argv: Vec<OsString> = ["pcdm", "verify", "--seed", "3"].iter().map(Into::into).collect();
        assert_eq!(expand_args(argv.clone()).unwrap(), argv);
    }
}
