//! Gaussian-blob domain pairs with a known rigid shift, for desk-scale checks.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CdemError, Result};
use crate::linalg::Matrix;
use crate::matio::{write_labels, write_matrix, DomainPair, LabelVector};

/// Describes a source of unit-variance class blobs and a target obtained by
/// rotating the source distribution in the first coordinate plane,
/// translating it and adding extra isotropic noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub classes: usize,
    /// Samples per domain.
    pub n: usize,
    pub dim: usize,
    /// Distance between any two class means, in units of the blob σ.
    pub separation: f64,
    pub rotation_deg: f64,
    /// Target translation; missing trailing coordinates are zero.
    pub translation: Vec<f64>,
    /// Standard deviation of the extra target noise.
    pub noise: f64,
    pub seed: u64,
}

impl ShiftSpec {
    /// Two classes, 6σ apart, 15° rotation plus a translation of about 3.5σ
    /// along the class-mean axis (pushing one target class across the source
    /// decision boundary); 200 samples per domain in 10 dimensions.
    pub fn standard(seed: u64) -> Self {
        ShiftSpec {
            classes: 2,
            n: 200,
            dim: 10,
            separation: 6.0,
            rotation_deg: 15.0,
            translation: vec![2.5, -2.5],
            noise: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(CdemError::Config("synthetic data needs at least 2 classes".into()));
        }
        if !(self.separation > 0.0) {
            return Err(CdemError::Config("separation must be positive".into()));
        }
        if self.n < self.classes {
            return Err(CdemError::Config(format!(
                "n = {} is smaller than the class count {}",
                self.n, self.classes
            )));
        }
        if self.dim < self.classes.max(2) {
            return Err(CdemError::Config(format!(
                "dimension {} too small for {} class means",
                self.dim, self.classes
            )));
        }
        if self.translation.len() > self.dim {
            return Err(CdemError::Config("translation longer than dimension".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(CdemError::Config("noise must be nonnegative".into()));
        }
        Ok(())
    }

    /// Parses the `key = value` spec file format used by `cdem synth`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ShiftSpec::standard(0);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CdemError::Config(format!("spec line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| CdemError::Config(format!("{key}: cannot parse {v:?}")))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse()
                    .map_err(|_| CdemError::Config(format!("{key}: cannot parse {v:?}")))
            };
            match key {
                "classes" => spec.classes = int(value)?,
                "n" => spec.n = int(value)?,
                "dim" => spec.dim = int(value)?,
                "separation" => spec.separation = num(value)?,
                "rotation_deg" => spec.rotation_deg = num(value)?,
                "translation" => {
                    spec.translation = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| num(s.trim()))
                        .collect::<Result<_>>()?
                }
                "noise" => spec.noise = num(value)?,
                "seed" => {
                    spec.seed = value
                        .parse()
                        .map_err(|_| CdemError::Config(format!("seed: cannot parse {value:?}")))?
                }
                _ => return Err(CdemError::Config(format!("unknown spec key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Class mean `c`: the centred simplex vertex
    /// `(separation/√2)·(e_c − (1/C)Σe_j)`. Every pair of means is exactly
    /// `separation` apart and the means average to the origin; two classes
    /// give `±μ` with `‖μ‖ = separation/2`.
    pub fn class_mean(&self, c: usize) -> Vec<f64> {
        let scale = self.separation / std::f64::consts::SQRT_2;
        let mut m = vec![0.0; self.dim];
        for (j, v) in m.iter_mut().enumerate().take(self.classes) {
            *v = scale * (f64::from(u8::from(j == c)) - 1.0 / self.classes as f64);
        }
        m
    }
}

/// Generated pair plus the held-out target labels.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub pair: DomainPair<f64>,
    pub target_labels: LabelVector,
}

/// Exactly `n / C` samples per class, the remainder going to the lowest
/// class indices.
pub fn partition_labels(n: usize, classes: usize) -> Vec<usize> {
    let base = n / classes;
    let extra = n % classes;
    (0..classes)
        .flat_map(|c| std::iter::repeat_n(c, base + usize::from(c < extra)))
        .collect()
}

pub fn generate(spec: &ShiftSpec) -> Result<SyntheticTask> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = partition_labels(spec.n, spec.classes);
    let means: Vec<Vec<f64>> = (0..spec.classes).map(|c| spec.class_mean(c)).collect();
    let draw = |rng: &mut ChaCha8Rng| -> Matrix<f64> {
        Matrix::from_fn(spec.n, spec.dim, |i, j| {
            means[labels[i]][j] + Distribution::<f64>::sample(&StandardNormal, &mut *rng)
        })
    };
    let source = draw(&mut rng);
    let mut target = draw(&mut rng);

    let (sin, cos) = spec.rotation_deg.to_radians().sin_cos();
    for i in 0..target.rows() {
        let row = target.row_mut(i);
        let (x, y) = (row[0], row[1]);
        row[0] = cos * x - sin * y;
        row[1] = sin * x + cos * y;
        for (v, &t) in row.iter_mut().zip(&spec.translation) {
            *v += t;
        }
        if spec.noise > 0.0 {
            for v in row.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += spec.noise * e;
            }
        }
    }
    let source_labels = LabelVector::new(labels.clone(), spec.classes)?;
    let target_labels = LabelVector::new(labels, spec.classes)?;
    Ok(SyntheticTask {
        pair: DomainPair::new(source, source_labels, target)?,
        target_labels,
    })
}

/// Writes `source.cdm`, `source.labels`, `target.cdm`, `target.labels` and a
/// ready-to-run `config.txt` into `dir`.
pub fn write_task(task: &SyntheticTask, dir: &Path) -> Result<ExperimentConfig> {
    std::fs::create_dir_all(dir).map_err(|e| CdemError::io(dir, e))?;
    write_matrix(task.pair.source(), dir.join("source.cdm"))?;
    write_labels(task.pair.source_labels().labels(), dir.join("source.labels"))?;
    write_matrix(task.pair.target(), dir.join("target.cdm"))?;
    write_labels(task.target_labels.labels(), dir.join("target.labels"))?;

    let d = task.pair.dim();
    let config = ExperimentConfig {
        source_features: Some("source.cdm".into()),
        source_labels: Some("source.labels".into()),
        target_features: Some("target.cdm".into()),
        target_labels: Some("target.labels".into()),
        pca_dim: d,
        subspace_dim: 4.min(d),
        delta: 0.1,
        ..ExperimentConfig::default()
    };
    std::fs::write(dir.join("config.txt"), config.to_config_string())
        .map_err(|e| CdemError::io(dir.join("config.txt"), e))?;
    Ok(config)
}
