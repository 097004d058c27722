//! Plain-text `key = value` configuration files.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Parsed key-value pairs; keys are lowercased with `-` folded to `_`.
pub type KeyValues = BTreeMap<String, String>;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// a repeated key keeps its last value.
pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut out = KeyValues::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("expected key = value, got {line:?}"),
            });
        };
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Parse {
                line: k + 1,
                message: "empty key".into(),
            });
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}
