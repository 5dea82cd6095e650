//! Flat `key = value` text files: one pair per line, `#` starts a comment.

use crate::error::{Error, Result};

pub fn parse(text: &str, context: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::parse(context, format!("line {}: expected `key = value`", i + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(context, format!("line {}: empty key", i + 1)));
        }
        if pairs.iter().any(|(seen, _): &(String, String)| seen == k) {
            return Err(Error::parse(
                context,
                format!("line {}: duplicate key `{k}`", i + 1),
            ));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

pub fn render(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
