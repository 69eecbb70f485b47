//! File formats shared by every subcommand.
//!
//! * Alignment files are JSON lines, one [`UtteranceRecord`] per line.
//! * Matrix files are `FMAT` binaries: 4-byte ASCII magic, then `u32`
//!   little-endian version (1), rows and cols, then `rows·cols` `f32`
//!   little-endian values in row-major order. Plain CSV (one row per
//!   line, comma separated) is accepted on read.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inventory::PhonemeInventory;
use crate::matrix::Matrix;
use crate::utterance::{validate_utterance, AlignedUtterance, Transcript, UtteranceRecord};

pub const FMAT_MAGIC: &[u8; 4] = b"FMAT";
pub const FMAT_VERSION: u32 = 1;
const FMAT_HEADER: usize = 16;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parses JSON lines; blank lines are skipped. Errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, source: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse_jsonl(&read_text(path)?, &path.display().to_string())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Validates each record, reporting the offending line.
pub fn parse_alignments(
    text: &str,
    source: &str,
    inv: &PhonemeInventory,
) -> Result<Vec<AlignedUtterance>> {
    let records: Vec<UtteranceRecord> = parse_jsonl(text, source)?;
    let lines = line_numbers(text);
    records
        .iter()
        .zip(lines)
        .map(|(r, line)| {
            validate_utterance(r, inv).map_err(|e| Error::Parse {
                path: source.to_string(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_alignments(path: &Path, inv: &PhonemeInventory) -> Result<Vec<AlignedUtterance>> {
    parse_alignments(&read_text(path)?, &path.display().to_string(), inv)
}

/// Reads transcripts; any `durations` field present is ignored.
pub fn read_transcripts(path: &Path, inv: &PhonemeInventory) -> Result<Vec<Transcript>> {
    let text = read_text(path)?;
    let source = path.display().to_string();
    let records: Vec<UtteranceRecord> = parse_jsonl(&text, &source)?;
    records
        .iter()
        .zip(line_numbers(&text))
        .map(|(r, line)| {
            Transcript::from_record(r, inv).map_err(|e| Error::Parse {
                path: source.clone(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn alignments_to_jsonl(corpus: &[AlignedUtterance], inv: &PhonemeInventory) -> Result<String> {
    let records = corpus
        .iter()
        .map(|u| u.to_record(inv))
        .collect::<Result<Vec<_>>>()?;
    Ok(to_jsonl(&records))
}

fn line_numbers(text: &str) -> impl Iterator<Item = usize> + '_ {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1)
}

pub fn encode_fmat(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(FMAT_HEADER + 4 * m.data().len());
    out.extend_from_slice(FMAT_MAGIC);
    out.extend_from_slice(&FMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &v in m.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

pub fn decode_fmat(bytes: &[u8], source: &str) -> Result<Matrix> {
    let err = |offset: usize, message: String| Error::Binary {
        path: source.to_string(),
        offset,
        message,
    };
    if bytes.len() < FMAT_HEADER {
        return Err(err(bytes.len(), "truncated header".into()));
    }
    if &bytes[..4] != FMAT_MAGIC {
        return Err(err(0, "bad magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != FMAT_VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let rows = u32_at(bytes, 8) as usize;
    let cols = u32_at(bytes, 12) as usize;
    let expected = FMAT_HEADER + 4 * rows * cols;
    if bytes.len() != expected {
        return Err(err(
            bytes.len().min(expected),
            format!("{rows}x{cols} payload needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[FMAT_HEADER..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(err(FMAT_HEADER + 4 * i, "non-finite value".into()));
    }
    Matrix::new(rows, cols, data).map_err(|e| err(8, e.to_string()))
}

pub fn parse_csv_matrix(text: &str, source: &str) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: 1,
        message: e.to_string(),
    })
}

/// Reads an `FMAT` file, falling back to CSV when the magic is absent.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let source = path.display().to_string();
    if bytes.starts_with(FMAT_MAGIC) {
        decode_fmat(&bytes, &source)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Binary {
            path: source.clone(),
            offset: e.utf8_error().valid_up_to(),
            message: "neither FMAT nor UTF-8 CSV".into(),
        })?;
        parse_csv_matrix(&text, &source)
    }
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_bytes(path, &encode_fmat(m))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}
