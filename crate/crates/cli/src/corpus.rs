//! Word corpus files: one word per line, `#` starts a comment.

use std::path::Path;

use crate::CliError;

/// `(line number, word text)` for every non-empty line.
pub fn read(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read word file {}: {e}", path.display())))?;
    Ok(parse(&text))
}

pub fn parse(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| (i + 1, body.to_string()))
        })
        .collect()
}
