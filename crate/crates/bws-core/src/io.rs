//! Bit-exact binary formats and CSV fallbacks.
//!
//! Three little-endian binary containers:
//! - `BWSF` features: header (magic, u32 version=1, u64 n, u64 d), then
//!   n*d f32 values, row-major, WITHOUT the bias column (appended on load).
//! - `BWSL` labels: header (magic, version, u64 n, u64 C), then n u32 labels.
//! - `BWSS` scores: header (magic, version, u64 n), then n f64 values.
//!
//! Subsets are newline-delimited ascending decimal indices.

use crate::dataset::{FeatureMatrix, LabelVector, ScoreVector, ScoredDataset, SubsetIndices};
use crate::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const FEATURE_MAGIC: &[u8; 4] = b"BWSF";
pub const LABEL_MAGIC: &[u8; 4] = b"BWSL";
pub const SCORE_MAGIC: &[u8; 4] = b"BWSS";
pub const FORMAT_VERSION: u32 = 1;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path_str(path), e.to_string()))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.buf.len() {
            return Err(Error::io(&self.path, "truncated payload"));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::io(
                &self.path,
                format!(
                    "magic mismatch: expected {:?}, got {:?}",
                    String::from_utf8_lossy(magic),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    fn expect_version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::io(
                &self.path,
                format!("unsupported version {v}, expected {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::io(
                &self.path,
                format!("{} trailing bytes after payload", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// Reads a `BWSF` feature file; returns rows WITHOUT the bias column.
pub fn read_features(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let buf = read_file(path)?;
    let mut c = Cursor { buf: &buf, pos: 0, path: path_str(path) };
    c.expect_magic(FEATURE_MAGIC)?;
    c.expect_version()?;
    let n = c.u64()? as usize;
    let d = c.u64()? as usize;
    if n == 0 || d == 0 {
        return Err(Error::io(&c.path, format!("invalid shape n={n}, d={d}")));
    }
    let payload = c.take(4 * n * d)?;
    c.done()?;
    let mut data = Vec::with_capacity(n * d);
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(Error::io(
                path_str(path),
                format!("non-finite feature value at row {}, column {}", k / d, k % d),
            ));
        }
        data.push(v);
    }
    Ok((n, d, data))
}

/// Writes a `BWSF` feature file from row-major values WITHOUT the bias
/// column. Values are stored single precision.
pub fn write_features(path: &Path, n: usize, d: usize, data: &[f64]) -> Result<()> {
    assert_eq!(data.len(), n * d);
    let mut buf = Vec::with_capacity(24 + 4 * n * d);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    for &v in data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, &buf).map_err(|e| Error::io(path_str(path), e.to_string()))
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let buf = read_file(path)?;
    let mut c = Cursor { buf: &buf, pos: 0, path: path_str(path) };
    c.expect_magic(LABEL_MAGIC)?;
    c.expect_version()?;
    let n = c.u64()? as usize;
    let num_classes = c.u64()?;
    if num_classes == 0 || num_classes > u32::MAX as u64 {
        return Err(Error::io(&c.path, format!("invalid class count {num_classes}")));
    }
    let payload = c.take(4 * n)?;
    c.done()?;
    let labels: Vec<u32> = payload
        .chunks_exact(4)
        .map(|ch| u32::from_le_bytes(ch.try_into().unwrap()))
        .collect();
    LabelVector::new(labels, num_classes as u32)
        .map_err(|e| Error::io(path_str(path), e.to_string()))
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 4 * labels.len());
    buf.extend_from_slice(LABEL_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(labels.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(labels.num_classes() as u64).to_le_bytes());
    for &l in labels.labels() {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(path, &buf).map_err(|e| Error::io(path_str(path), e.to_string()))
}

pub fn read_scores(path: &Path) -> Result<ScoreVector> {
    let buf = read_file(path)?;
    let mut c = Cursor { buf: &buf, pos: 0, path: path_str(path) };
    c.expect_magic(SCORE_MAGIC)?;
    c.expect_version()?;
    let n = c.u64()? as usize;
    let payload = c.take(8 * n)?;
    c.done()?;
    let scores: Vec<f64> = payload
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().unwrap()))
        .collect();
    ScoreVector::new(scores).map_err(|e| Error::io(path_str(path), e.to_string()))
}

pub fn write_scores(path: &Path, scores: &ScoreVector) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 8 * scores.len());
    buf.extend_from_slice(SCORE_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(scores.len() as u64).to_le_bytes());
    for &s in scores.scores() {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, &buf).map_err(|e| Error::io(path_str(path), e.to_string()))
}

/// Loads the three binary files, appends the bias column, and returns a
/// validated dataset with its sort permutation.
pub fn load_dataset(
    feature_path: &Path,
    label_path: &Path,
    score_path: &Path,
) -> Result<ScoredDataset> {
    let (n, d, data) = read_features(feature_path)?;
    let labels = read_labels(label_path)?;
    let scores = read_scores(score_path)?;
    if labels.len() != n {
        return Err(Error::validation(format!(
            "{}: n mismatch: {} labels vs {} feature rows",
            path_str(label_path),
            labels.len(),
            n
        )));
    }
    if scores.len() != n {
        return Err(Error::validation(format!(
            "{}: n mismatch: {} scores vs {} feature rows",
            path_str(score_path),
            scores.len(),
            n
        )));
    }
    let features = append_bias(n, d, data)?;
    ScoredDataset::new(features, labels, scores)
}

fn append_bias(n: usize, d: usize, data: Vec<f64>) -> Result<FeatureMatrix> {
    let mut with_bias = Vec::with_capacity(n * (d + 1));
    for row in data.chunks_exact(d) {
        with_bias.extend_from_slice(row);
        with_bias.push(1.0);
    }
    FeatureMatrix::from_flat_with_bias(n, d + 1, with_bias)
}

/// Writes newline-delimited decimal original indices, ascending, trailing
/// newline, ASCII.
pub fn save_subset(subset: &SubsetIndices, path: &Path) -> Result<()> {
    let mut sorted: Vec<usize> = subset.indices().to_vec();
    sorted.sort_unstable();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path_str(path), e.to_string()))?;
    let mut out = String::new();
    for i in sorted {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    f.write_all(out.as_bytes())
        .map_err(|e| Error::io(path_str(path), e.to_string()))
}

/// Parses a saved subset file back into indices (n is the dataset size the
/// indices must fit in).
pub fn load_subset(path: &Path, n: usize) -> Result<SubsetIndices> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e.to_string()))?;
    let mut indices = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let i: usize = line.parse().map_err(|_| {
            Error::io(
                path_str(path),
                format!("unparsable index {line:?} at line {}", lineno + 1),
            )
        })?;
        indices.push(i);
    }
    SubsetIndices::new(indices, n)
}

/// What a CSV file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Features,
    Labels,
    Scores,
}

/// Parsed CSV payload; semantically identical to the binary loaders.
#[derive(Debug, Clone)]
pub enum CsvData {
    /// Rows WITHOUT the bias column (appended when assembling the dataset).
    Features { n: usize, d: usize, data: Vec<f64> },
    Labels(LabelVector),
    Scores(ScoreVector),
}

fn looks_like_header(cells: &[&str]) -> bool {
    cells.iter().any(|c| c.trim().parse::<f64>().is_err())
}

/// Imports a CSV file. A header row is optional and detected by any
/// non-numeric cell in the first row. Labels CSV: one label per row, class
/// count = max label + 1.
pub fn csv_import(path: &Path, kind: CsvKind) -> Result<CsvData> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e.to_string()))?;
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push((lineno + 1, line.split(',').collect()));
    }
    if let Some((_, first)) = rows.first() {
        if looks_like_header(first) {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(Error::io(path_str(path), "no data rows"));
    }

    let parse_cell = |cell: &str, lineno: usize, col: usize| -> Result<f64> {
        cell.trim().parse::<f64>().map_err(|_| {
            Error::io(
                path_str(path),
                format!("unparsable cell {cell:?} at row {lineno}, column {}", col + 1),
            )
        })
    };

    match kind {
        CsvKind::Features => {
            let d = rows[0].1.len();
            let mut data = Vec::with_capacity(rows.len() * d);
            for (lineno, cells) in &rows {
                if cells.len() != d {
                    return Err(Error::io(
                        path_str(path),
                        format!("ragged row at line {lineno}: expected {d} cells, got {}", cells.len()),
                    ));
                }
                for (col, cell) in cells.iter().enumerate() {
                    data.push(parse_cell(cell, *lineno, col)?);
                }
            }
            Ok(CsvData::Features { n: rows.len(), d, data })
        }
        CsvKind::Labels => {
            let mut labels = Vec::with_capacity(rows.len());
            for (lineno, cells) in &rows {
                if cells.len() != 1 {
                    return Err(Error::io(
                        path_str(path),
                        format!("ragged row at line {lineno}: expected 1 cell, got {}", cells.len()),
                    ));
                }
                let v: u32 = cells[0].trim().parse().map_err(|_| {
                    Error::io(
                        path_str(path),
                        format!("unparsable label {:?} at row {lineno}, column 1", cells[0]),
                    )
                })?;
                labels.push(v);
            }
            let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
            let lv = LabelVector::new(labels, num_classes)
                .map_err(|e| Error::io(path_str(path), e.to_string()))?;
            Ok(CsvData::Labels(lv))
        }
        CsvKind::Scores => {
            let mut scores = Vec::with_capacity(rows.len());
            for (lineno, cells) in &rows {
                if cells.len() != 1 {
                    return Err(Error::io(
                        path_str(path),
                        format!("ragged row at line {lineno}: expected 1 cell, got {}", cells.len()),
                    ));
                }
                scores.push(parse_cell(cells[0], *lineno, 0)?);
            }
            let sv =
                ScoreVector::new(scores).map_err(|e| Error::io(path_str(path), e.to_string()))?;
            Ok(CsvData::Scores(sv))
        }
    }
}

/// Loads a dataset from three files, each binary or CSV by extension
/// (`.csv` means CSV, anything else binary).
pub fn load_dataset_auto(
    feature_path: &Path,
    label_path: &Path,
    score_path: &Path,
) -> Result<ScoredDataset> {
    let is_csv = |p: &Path| p.extension().map(|e| e == "csv").unwrap_or(false);
    if !is_csv(feature_path) && !is_csv(label_path) && !is_csv(score_path) {
        return load_dataset(feature_path, label_path, score_path);
    }
    let (n, d, data) = if is_csv(feature_path) {
        match csv_import(feature_path, CsvKind::Features)? {
            CsvData::Features { n, d, data } => (n, d, data),
            _ => unreachable!(),
        }
    } else {
        read_features(feature_path)?
    };
    let labels = if is_csv(label_path) {
        match csv_import(label_path, CsvKind::Labels)? {
            CsvData::Labels(l) => l,
            _ => unreachable!(),
        }
    } else {
        read_labels(label_path)?
    };
    let scores = if is_csv(score_path) {
        match csv_import(score_path, CsvKind::Scores)? {
            CsvData::Scores(s) => s,
            _ => unreachable!(),
        }
    } else {
        read_scores(score_path)?
    };
    if labels.len() != n {
        return Err(Error::validation(format!(
            "{}: n mismatch: {} labels vs {} feature rows",
            path_str(label_path),
            labels.len(),
            n
        )));
    }
    if scores.len() != n {
        return Err(Error::validation(format!(
            "{}: n mismatch: {} scores vs {} feature rows",
            path_str(score_path),
            scores.len(),
            n
        )));
    }
    let features = append_bias(n, d, data)?;
    ScoredDataset::new(features, labels, scores)
}
