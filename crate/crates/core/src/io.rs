//! Matrix files, index files and `key=value` sidecars.
//!
//! Two matrix encodings are supported:
//!
//! * **csv**: rows are bands, columns are pixels, no header. Values are
//!   written with the shortest representation that parses back to the same
//!   `f64`, so a round trip through csv is exact as well.
//! * **hsm1**: the magic bytes `HSM1`, then `d` and `n` as little-endian
//!   `u64`, then `d·n` little-endian IEEE-754 doubles in column-major order.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{HsiMatrix, IndexSet};

const HSM1_MAGIC: &[u8; 4] = b"HSM1";
const HSM1_HEADER_LEN: usize = 4 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Hsm1,
}

impl MatrixFormat {
    /// Picks a format from the file extension: `.csv` is csv, everything
    /// else is hsm1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Hsm1,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "hsm1" | "hsm" => Ok(MatrixFormat::Hsm1),
            other => Err(Error::InvalidArgument(format!(
                "unknown matrix format {other:?} (expected csv or hsm1)"
            ))),
        }
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<HsiMatrix> {
    let bytes = fs::read(path)?;
    match format {
        MatrixFormat::Csv => decode_csv(&bytes),
        MatrixFormat::Hsm1 => decode_hsm1(&bytes),
    }
}

pub fn store_matrix(a: &HsiMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Csv => encode_csv(a).into_bytes(),
        MatrixFormat::Hsm1 => encode_hsm1(a),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn encode_hsm1(a: &HsiMatrix) -> Vec<u8> {
    let (d, n) = a.shape();
    let mut out = Vec::with_capacity(HSM1_HEADER_LEN + 8 * d * n);
    out.extend_from_slice(HSM1_MAGIC);
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for v in a.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_hsm1(bytes: &[u8]) -> Result<HsiMatrix> {
    if bytes.len() < HSM1_HEADER_LEN {
        return Err(parse_err(
            format!("byte offset {}", bytes.len()),
            "file too short for an hsm1 header",
        ));
    }
    if &bytes[..4] != HSM1_MAGIC {
        return Err(parse_err("byte offset 0", "missing HSM1 magic"));
    }
    let d = read_u64(&bytes[4..12]);
    let n = read_u64(&bytes[12..20]);
    let count = d
        .checked_mul(n)
        .filter(|c| c.checked_mul(8).is_some())
        .ok_or_else(|| parse_err("byte offset 4", "dimensions overflow"))?;
    let payload = &bytes[HSM1_HEADER_LEN..];
    if payload.len() != count * 8 {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}x{n} matrix = {} payload bytes", count * 8),
            found: format!("{} payload bytes", payload.len()),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    HsiMatrix::from_column_major(d, n, data)
}

fn read_u64(b: &[u8]) -> usize {
    u64::from_le_bytes(b.try_into().expect("8 bytes")) as usize
}

pub fn encode_csv(a: &HsiMatrix) -> String {
    let (d, n) = a.shape();
    let mut out = String::new();
    for i in 0..d {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", a.get(i, j)).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(bytes: &[u8]) -> Result<HsiMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let location = e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "unknown position".into());
            parse_err(location, &e.to_string())
        })?;
        let line = record.position().map_or(rows.len() as u64 + 1, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    parse_err(
                        format!("line {line}, field {}", j + 1),
                        &format!("not a number: {field:?}"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err("line 1", "no data rows"));
    }
    let d = rows.len();
    let n = rows[0].len();
    let mut data = vec![0.0; d * n];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            data[j * d + i] = *v;
        }
    }
    HsiMatrix::from_column_major(d, n, data)
}

fn parse_err(location: impl Into<String>, message: &str) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

/// Writes one one-based index per line.
pub fn write_index_file(k: &IndexSet, path: &Path) -> Result<()> {
    fs::write(path, encode_indices(k))?;
    Ok(())
}

pub fn encode_indices(k: &IndexSet) -> String {
    k.iter().map(|i| format!("{}\n", i + 1)).collect()
}

pub fn read_index_file(path: &Path) -> Result<IndexSet> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: usize = t.parse().map_err(|_| {
            parse_err(format!("line {}", lineno + 1), &format!("bad index {t:?}"))
        })?;
        if v == 0 {
            return Err(parse_err(
                format!("line {}", lineno + 1),
                "indices are one-based",
            ));
        }
        out.push(v - 1);
    }
    IndexSet::from_sorted(out)
}

/// Ordered `key=value` metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sidecar {
    entries: Vec<(String, String)>,
}

impl Sidecar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn encode(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn decode(text: &str) -> Result<Self> {
        let mut out = Sidecar::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| {
                parse_err(format!("line {}", lineno + 1), "expected key=value")
            })?;
            out.set(k.trim(), v.trim());
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut s = String::new();
        fs::File::open(path)?.read_to_string(&mut s)?;
        Self::decode(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HsiMatrix {
        HsiMatrix::from_rows(&[
            &[0.1, 0.2, 1.0 / 3.0, -4.5],
            &[1e-300, 7.0, 0.0, 2.5e10],
            &[-0.0, 1.0, 0.625, std::f64::consts::PI],
        ])
        .unwrap()
    }

    #[test]
    fn hsm1_layout() {
        let bytes = encode_hsm1(&sample());
        assert_eq!(&bytes[..4], b"HSM1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 20 + 12 * 8);
        // column-major: second stored value is (row 1, col 0)
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 1e-300);
    }

    #[test]
    fn hsm1_round_trip_is_bit_exact() {
        let a = sample();
        let b = decode_hsm1(&encode_hsm1(&a)).unwrap();
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = sample();
        let b = decode_csv(encode_csv(&a).as_bytes()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_ragged_rows_are_rejected() {
        let err = decode_csv(b"1,2,3\n4,5\n").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.contains("line 2"), "{location}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs_are_parse_errors() {
        assert!(matches!(decode_csv(b""), Err(Error::Parse { .. })));
        assert!(matches!(decode_hsm1(b""), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_bad_number_reports_field() {
        let err = decode_csv(b"1,2\n3,x\n").unwrap_err();
        assert!(err.to_string().contains("line 2, field 2"), "{err}");
    }

    #[test]
    fn hsm1_truncated_payload_is_dimension_mismatch() {
        let mut bytes = encode_hsm1(&sample());
        bytes.pop();
        assert!(matches!(decode_hsm1(&bytes), Err(Error::DimensionMismatch { .. })));
        bytes[0] = b'X';
        assert!(matches!(decode_hsm1(&bytes), Err(Error::Parse { .. })));
    }

    #[test]
    fn sidecar_round_trip_preserves_order() {
        let mut s = Sidecar::new();
        s.set("seed", 7).set("nu", 0.5).set("pure_indices", "3,1,2");
        let back = Sidecar::decode(&s.encode()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get("nu"), Some("0.5"));
        assert!(Sidecar::decode("novalue\n").is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MatrixFormat::from_path(Path::new("a.CSV")), MatrixFormat::Csv);
        assert_eq!(MatrixFormat::from_path(Path::new("a.hsm1")), MatrixFormat::Hsm1);
        assert!("tiff".parse::<MatrixFormat>().is_err());
    }
}
