//! Flat `key = value` configuration files and value resolution.

use std::collections::BTreeMap;

use crate::CliError;

/// One `key = value` line, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Normalizes flag spelling (`n-modes`) to config spelling (`n_modes`).
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses a config file. `#` starts a comment anywhere on a line.
pub fn parse_config(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::Parse { line, message: format!("expected `key = value`, found `{body}`") })?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(CliError::Parse { line, message: "empty key".into() });
        }
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(CliError::Parse { line, message: format!("duplicate key `{key}` (first set on line {first})") });
        }
        out.push(Entry { key, value: value.trim().to_string(), line });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let entries = parse_config("# header\n\nt = 1.5  # inline\nn-modes=4\n").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0], Entry { key: "t".into(), value: "1.5".into(), line: 3 });
        assert_eq!(entries[1].key, "n_modes");
    }

    #[test]
    fn duplicate_key_reports_line() {
        let err = parse_config("seed = 1\n\nseed = 2\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(parse_config("a = 1\nnonsense\n"), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(parse_config(" = 3"), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_file() {
        assert!(parse_config("").unwrap().is_empty());
    }
}
