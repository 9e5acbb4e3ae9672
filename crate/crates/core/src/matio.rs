//! Matrix and label file I/O plus the validated source/target container.
//!
//! Two matrix encodings are understood:
//!
//! * `CDM1` binary: the 4 magic bytes `CDM1`, `u32` LE row count, `u32` LE
//!   column count, then `rows × cols` little-endian `f64` values, row-major.
//! * CSV: one sample per line, comma separated.
//!
//! Readers sniff the magic bytes, so either encoding may use any file name.
//! Writers pick CSV for a `.csv` extension and `CDM1` otherwise.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{CdemError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"CDM1";
const HEADER_LEN: usize = 12;

/// Sample-by-feature matrix (rows are samples).
pub type FeatureMatrix<T> = Matrix<T>;

/// Checks the feature-matrix invariants: at least one row and column, all
/// entries finite.
pub fn validate_features<T: Scalar>(m: &Matrix<T>, what: &str) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(CdemError::Data(format!(
            "{what}: empty matrix ({}x{})",
            m.rows(),
            m.cols()
        )));
    }
    if let Some(pos) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(CdemError::Data(format!(
            "{what}: non-finite value at row {} col {}",
            pos / m.cols(),
            pos % m.cols()
        )));
    }
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| CdemError::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            CdemError::Format(format!(
                "{}: neither CDM1 binary nor UTF-8 CSV",
                path.display()
            ))
        })?;
        parse_csv(&text)
    }
}

pub fn write_matrix(matrix: &Matrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let bytes = if is_csv {
        format_csv(matrix).into_bytes()
    } else {
        encode_binary(matrix)?
    };
    fs::write(path, bytes).map_err(|e| CdemError::io(path, e))
}

pub fn encode_binary(matrix: &Matrix<f64>) -> Result<Vec<u8>> {
    let rows = u32::try_from(matrix.rows())
        .map_err(|_| CdemError::Format("row count exceeds u32".into()))?;
    let cols = u32::try_from(matrix.cols())
        .map_err(|_| CdemError::Format("column count exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * matrix.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<Matrix<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(CdemError::Format("missing CDM1 header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(CdemError::Format(format!(
            "header declares an empty {rows}x{cols} matrix"
        )));
    }
    let body = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| CdemError::Format("declared size overflows".into()))?;
    if body.len() != expected {
        return Err(CdemError::Format(format!(
            "header declares {rows}x{cols} ({expected} bytes) but body has {} bytes",
            body.len()
        )));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let m = Matrix::from_vec(rows, cols, data)?;
    validate_features(&m, "CDM1 matrix")?;
    Ok(m)
}

pub fn parse_csv(text: &str) -> Result<Matrix<f64>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| {
                CdemError::Format(format!("line {}: cannot parse {field:?}", lineno + 1))
            })?;
            if !v.is_finite() {
                return Err(CdemError::Data(format!(
                    "line {}: non-finite value {field:?}",
                    lineno + 1
                )));
            }
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(CdemError::Format(format!(
                    "line {}: expected {c} columns, found {width}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| CdemError::Format("CSV contains no rows".into()))?;
    Matrix::from_vec(rows, cols, data)
}

pub fn format_csv(matrix: &Matrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..matrix.rows() {
        let line: Vec<String> = matrix.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CdemError::io(path, e))?;
    parse_labels(&text)
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| {
                CdemError::Format(format!("label line {}: cannot parse {:?}", i + 1, l.trim()))
            })
        })
        .collect()
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| CdemError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in labels {
        writeln!(w, "{l}").map_err(|e| CdemError::io(path, e))?;
    }
    w.flush().map_err(|e| CdemError::io(path, e))
}

/// Class labels in `[0, classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(CdemError::Data(format!(
                "class count must be at least 2, got {classes}"
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(CdemError::Data(format!(
                "label {l} at position {i} outside [0, {classes})"
            )));
        }
        Ok(LabelVector { labels, classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.classes)
    }
}

pub(crate) fn class_counts(labels: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Labelled source features and unlabelled target features over a shared
/// feature space and class set.
#[derive(Debug, Clone)]
pub struct DomainPair<T> {
    source: Matrix<T>,
    source_labels: LabelVector,
    target: Matrix<T>,
    source_counts: Vec<usize>,
}

impl<T: Scalar> DomainPair<T> {
    pub fn new(source: Matrix<T>, source_labels: LabelVector, target: Matrix<T>) -> Result<Self> {
        validate_features(&source, "source features")?;
        validate_features(&target, "target features")?;
        if source.cols() != target.cols() {
            return Err(CdemError::Data(format!(
                "feature dimension mismatch: source {} vs target {}",
                source.cols(),
                target.cols()
            )));
        }
        if source_labels.len() != source.rows() {
            return Err(CdemError::Data(format!(
                "{} source labels for {} source samples",
                source_labels.len(),
                source.rows()
            )));
        }
        let source_counts = source_labels.counts();
        if let Some(c) = source_counts.iter().position(|&n| n == 0) {
            return Err(CdemError::Data(format!("class {c} has no source samples")));
        }
        Ok(DomainPair {
            source,
            source_labels,
            target,
            source_counts,
        })
    }

    pub fn source(&self) -> &Matrix<T> {
        &self.source
    }

    pub fn source_labels(&self) -> &LabelVector {
        &self.source_labels
    }

    pub fn target(&self) -> &Matrix<T> {
        &self.target
    }

    pub fn classes(&self) -> usize {
        self.source_labels.classes()
    }

    pub fn dim(&self) -> usize {
        self.source.cols()
    }

    pub fn n_source(&self) -> usize {
        self.source.rows()
    }

    pub fn n_target(&self) -> usize {
        self.target.rows()
    }

    /// Per-class source counts `n_{s,c}`, all at least one.
    pub fn source_counts(&self) -> &[usize] {
        &self.source_counts
    }

    pub fn cast<U: Scalar>(&self) -> DomainPair<U> {
        DomainPair {
            source: self.source.cast(),
            source_labels: self.source_labels.clone(),
            target: self.target.cast(),
            source_counts: self.source_counts.clone(),
        }
    }
}

/// A domain pair as loaded from disk. Target labels, when present, are kept
/// apart from the pair so that training code never sees them.
#[derive(Debug, Clone)]
pub struct LoadedTask {
    pub name: String,
    pub pair: DomainPair<f64>,
    pub target_labels: Option<LabelVector>,
}

/// Loads the source/target files named by `config` (either the direct
/// `source_*`/`target_*` keys or a registry task such as `C-A`).
pub fn load_domain_pair(config: &ExperimentConfig, task: Option<&str>) -> Result<LoadedTask> {
    let files = config.task_files(task)?;
    let source = read_matrix(&files.source_features)?;
    let raw_labels = read_labels(&files.source_labels)?;
    let target = read_matrix(&files.target_features)?;
    let classes = match config.classes {
        Some(c) => c,
        None => raw_labels.iter().copied().max().map_or(0, |m| m + 1),
    };
    let source_labels = LabelVector::new(raw_labels, classes)?;
    let pair = DomainPair::new(source, source_labels, target)?;
    let target_labels = match &files.target_labels {
        Some(p) => {
            let labels = LabelVector::new(read_labels(p)?, classes)?;
            if labels.len() != pair.n_target() {
                return Err(CdemError::Data(format!(
                    "{} target labels for {} target samples",
                    labels.len(),
                    pair.n_target()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    Ok(LoadedTask {
        name: files.name,
        pair,
        target_labels,
    })
}
