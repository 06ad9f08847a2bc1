//! The `DSEQ1` digit-sequence file format.
//!
//! ```text
//! DSEQ1 base=<b> len=<N>\n
//! <N raw bytes, one digit per byte>
//! ```
//!
//! The header is ASCII with single spaces and no leading zeros; nothing may
//! follow the payload.

use crate::digits::{DigitSeq, MAX_BASE, MIN_BASE};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &str = "DSEQ1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DseqError {
    #[error("malformed DSEQ1 header: {0}")]
    Header(String),
    #[error("digit {digit} at position {position} is not below base {base}")]
    Digit { position: usize, digit: u8, base: u32 },
    #[error("truncated payload: header declares {expected} digits, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} bytes after the declared payload")]
    TrailingData { extra: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl DseqError {
    pub fn code(&self) -> &'static str {
        match self {
            DseqError::Header(_) => "dseq_header",
            DseqError::Digit { .. } => "dseq_digit",
            DseqError::Truncated { .. } => "dseq_truncated",
            DseqError::TrailingData { .. } => "dseq_trailing",
            DseqError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for DseqError {
    fn from(e: std::io::Error) -> Self {
        DseqError::Io(e.to_string())
    }
}

pub fn encode(seq: &DigitSeq) -> Vec<u8> {
    let header = format!("{MAGIC} base={} len={}\n", seq.base(), seq.len());
    let mut out = Vec::with_capacity(header.len() + seq.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(seq.digits());
    out
}

fn parse_field(token: Option<&str>, key: &str) -> Result<usize, DseqError> {
    let token = token.ok_or_else(|| DseqError::Header(format!("missing {key}=")))?;
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| DseqError::Header(format!("expected {key}=<n>, got {token:?}")))?;
    let canonical = !value.is_empty()
        && value.bytes().all(|c| c.is_ascii_digit())
        && (value == "0" || !value.starts_with('0'));
    if !canonical {
        return Err(DseqError::Header(format!("bad {key} value {value:?}")));
    }
    value
        .parse()
        .map_err(|_| DseqError::Header(format!("{key} value {value:?} out of range")))
}

pub fn decode(bytes: &[u8]) -> Result<DigitSeq, DseqError> {
    let newline = bytes
        .iter()
        .position(|&c| c == b'\n')
        .ok_or_else(|| DseqError::Header("no terminating newline".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| DseqError::Header("header is not ASCII".into()))?;
    let mut tokens = header.split(' ');
    if tokens.next() != Some(MAGIC) {
        return Err(DseqError::Header(format!("expected magic {MAGIC}")));
    }
    let base = parse_field(tokens.next(), "base")?;
    let len = parse_field(tokens.next(), "len")?;
    if let Some(extra) = tokens.next() {
        return Err(DseqError::Header(format!("unexpected token {extra:?}")));
    }
    if !(MIN_BASE as usize..=MAX_BASE as usize).contains(&base) {
        return Err(DseqError::Header(format!("base {base} outside [{MIN_BASE}, {MAX_BASE}]")));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() < len {
        return Err(DseqError::Truncated { expected: len, found: payload.len() });
    }
    if payload.len() > len {
        return Err(DseqError::TrailingData { extra: payload.len() - len });
    }
    if let Some((i, &d)) = payload.iter().enumerate().find(|(_, &d)| d as usize >= base) {
        return Err(DseqError::Digit { position: i + 1, digit: d, base: base as u32 });
    }
    Ok(DigitSeq::from_trusted(base as u8, payload.to_vec()))
}

pub fn read_dseq(path: impl AsRef<Path>) -> Result<DigitSeq, DseqError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_dseq(path: impl AsRef<Path>, seq: &DigitSeq) -> Result<(), DseqError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode(seq))?;
    f.flush()?;
    Ok(())
}
