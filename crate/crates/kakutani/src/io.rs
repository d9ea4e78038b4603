//! File formats and run manifests.
//!
//! * Word files: one word per line, symbol ids separated by commas; a shaded
//!   word appends `|` followed by its shading bits (`0`/`1`, one per symbol).
//! * Rationals serialize as `"num/den"` strings.
//! * Every command-line run writes a [`RunManifest`] recording the command,
//!   its full argument vector, the seed and the SHA-256 digest of every input.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fbar::SymbolString;

/// Serde adapter writing [`crate::fbar::Rational`] as `"num/den"`.
pub mod rational_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::fbar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Renders one word in the word-file line format.
pub fn format_word(w: &SymbolString) -> String {
    let mut line = w.symbols.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    if let Some(sh) = &w.shading {
        line.push('|');
        line.extend(sh.iter().map(|&b| if b { '1' } else { '0' }));
    }
    line
}

/// Parses one word-file line.
pub fn parse_word(line: &str) -> Result<SymbolString> {
    let bad = |detail: String| Error::Malformed { kind: "word file", detail };
    let (ids, bits) = match line.split_once('|') {
        Some((a, b)) => (a, Some(b)),
        None => (line, None),
    };
    let symbols = if ids.trim().is_empty() {
        Vec::new()
    } else {
        ids.split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| bad(format!("bad symbol id {t:?}"))))
            .collect::<Result<Vec<_>>>()?
    };
    let shading = match bits {
        None => None,
        Some(b) => Some(
            b.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(bad(format!("bad shading bit {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    if let Some(sh) = &shading {
        if sh.len() != symbols.len() {
            return Err(bad(format!("{} shading bits for {} symbols", sh.len(), symbols.len())));
        }
    }
    Ok(SymbolString { symbols, shading })
}

/// Renders a whole word file (trailing newline after every word).
pub fn format_words(words: &[SymbolString]) -> String {
    let mut out = String::new();
    for w in words {
        out.push_str(&format_word(w));
        out.push('\n');
    }
    out
}

/// Parses a whole word file; blank lines are skipped.
pub fn parse_words(text: &str) -> Result<Vec<SymbolString>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_word).collect()
}

pub fn read_words(path: &Path) -> Result<Vec<SymbolString>> {
    parse_words(&fs::read_to_string(path)?)
}

pub fn write_words(path: &Path, words: &[SymbolString]) -> Result<()> {
    fs::write(path, format_words(words))?;
    Ok(())
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Digest of one input file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a command-line run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub version: String,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_lines_round_trip() {
        let plain = SymbolString::new(vec![3, 0, 12]);
        let shaded = SymbolString::shaded(vec![1, 2], vec![true, false]).unwrap();
        assert_eq!(format_word(&shaded), "1,2|10");
        let text = format_words(&[plain.clone(), shaded.clone()]);
        assert_eq!(parse_words(&text).unwrap(), vec![plain, shaded]);
    }

    #[test]
    fn mismatched_shading_is_rejected() {
        assert!(parse_word("1,2|1").is_err());
        assert!(parse_word("1,x").is_err());
    }
}
