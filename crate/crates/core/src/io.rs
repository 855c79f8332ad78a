//! Ground-set files and CSV ingestion.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "EXEM" | version u8 = 1 | precision tag u8 | n u32 | d u32 | n*d values, column-major
//! ```
//!
//! CSV files hold one observation per row. A first row that does not parse as
//! numbers is treated as a header and skipped.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use half::f16;

use crate::error::{Error, Result};
use crate::layout::{EvaluationBatch, GroundSet};
use crate::objective::Dissimilarity;
use crate::precision::{Precision, Values};

pub const MAGIC: &[u8; 4] = b"EXEM";
pub const FORMAT_VERSION: u8 = 1;

pub fn write_ground_set<W: Write>(ground: &GroundSet, mut out: W) -> Result<()> {
    let n = u32::try_from(ground.n()).map_err(|_| Error::Format("n does not fit in u32".into()))?;
    let d = u32::try_from(ground.d()).map_err(|_| Error::Format("d does not fit in u32".into()))?;
    out.write_all(MAGIC)?;
    out.write_all(&[FORMAT_VERSION, ground.precision().tag()])?;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&d.to_le_bytes())?;
    match ground.data() {
        Values::Binary16(v) => v.iter().try_for_each(|x| out.write_all(&x.to_le_bytes()))?,
        Values::Binary32(v) => v.iter().try_for_each(|x| out.write_all(&x.to_le_bytes()))?,
        Values::Binary64(v) => v.iter().try_for_each(|x| out.write_all(&x.to_le_bytes()))?,
    }
    out.flush()?;
    Ok(())
}

/// Reads the binary format. The auxiliary vector is not stored in the file.
pub fn read_ground_set<R: Read, D: Dissimilarity>(
    mut input: R,
    aux: Option<&[f64]>,
    dissimilarity: &D,
) -> Result<GroundSet> {
    let mut header = [0u8; 14];
    input.read_exact(&mut header).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("missing EXEM magic bytes".into()));
    }
    if header[4] != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {}", header[4])));
    }
    let precision = Precision::from_tag(header[5])
        .ok_or_else(|| Error::Format(format!("unknown precision tag {}", header[5])))?;
    let n = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(header[10..14].try_into().expect("4 bytes")) as usize;
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("n * d overflows".into()))?;
    let width = precision.bytes_per_value();
    let mut raw = vec![0u8; count * width];
    input
        .read_exact(&mut raw)
        .map_err(|e| Error::Format(format!("expected {count} values: {e}")))?;
    let values = match precision {
        Precision::Binary16 => {
            Values::Binary16(raw.chunks_exact(2).map(|b| f16::from_le_bytes([b[0], b[1]])).collect())
        }
        Precision::Binary32 => Values::Binary32(
            raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect(),
        ),
        Precision::Binary64 => Values::Binary64(
            raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect(),
        ),
    };
    GroundSet::from_column_major(n, d, values, aux, dissimilarity)
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|field| field.trim().parse::<f64>().ok()).collect()
}

fn is_blank(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.trim().is_empty())
}

/// Reads numeric rows, skipping a non-numeric first row.
pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if is_blank(&record) {
            continue;
        }
        match parse_row(&record) {
            Some(row) => rows.push(row),
            None if line == 0 => continue,
            None => return Err(Error::Format(format!("row {} is not numeric", line + 1))),
        }
    }
    Ok(rows)
}

/// Reads observations from CSV, one per row.
pub fn read_csv_observations<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let rows = read_csv_rows(input)?;
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
            return Err(Error::DimensionMismatch { expected: first.len(), found: bad.len() });
        }
    }
    Ok(rows)
}

/// Reads a batch from CSV rows `set_id, x_0, ..., x_{d-1}`. Sets are ordered by
/// first appearance of their id; rows of one set may be interleaved with others.
pub fn read_sets_csv<R: Read>(input: R, d: usize) -> Result<EvaluationBatch> {
    let rows = read_csv_rows(input)?;
    let mut ids: Vec<i64> = Vec::new();
    let mut sets: Vec<Vec<Vec<f64>>> = Vec::new();
    for row in rows {
        if row.len() != d + 1 {
            return Err(Error::DimensionMismatch { expected: d, found: row.len().saturating_sub(1) });
        }
        let id = row[0];
        if id.fract() != 0.0 {
            return Err(Error::Format(format!("set id {id} is not an integer")));
        }
        let id = id as i64;
        let pos = match ids.iter().position(|&x| x == id) {
            Some(p) => p,
            None => {
                ids.push(id);
                sets.push(Vec::new());
                ids.len() - 1
            }
        };
        sets[pos].push(row[1..].to_vec());
    }
    EvaluationBatch::new(d, &sets)
}

/// Loads a ground set from `.exem` binary or CSV, optionally converting it to
/// `precision`.
pub fn load_ground_set<D: Dissimilarity>(
    path: &Path,
    precision: Option<Precision>,
    aux: Option<&[f64]>,
    dissimilarity: &D,
) -> Result<GroundSet> {
    let file = BufReader::new(File::open(path)?);
    let is_binary = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("exem"));
    if is_binary {
        let ground = read_ground_set(file, aux, dissimilarity)?;
        match precision {
            Some(p) if p != ground.precision() => ground.with_precision(p, dissimilarity),
            _ => Ok(ground),
        }
    } else {
        let rows = read_csv_observations(file)?;
        GroundSet::build(&rows, aux, precision.unwrap_or(Precision::Binary32), dissimilarity)
    }
}

pub fn save_ground_set(ground: &GroundSet, path: &Path) -> Result<()> {
    write_ground_set(ground, BufWriter::new(File::create(path)?))
}
