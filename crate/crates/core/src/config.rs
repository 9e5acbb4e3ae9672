//! Flat `key = value` experiment configuration.
//!
//! Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `source_features`, `source_labels`, `target_features` | direct file paths | – |
//! | `target_labels` | evaluation-only target labels | none |
//! | `domain.<NAME>.features`, `domain.<NAME>.labels` | registry entries (e.g. `C`, `A`, `W`, `D`) | – |
//! | `tasks` | comma list of `SRC-TGT` registry tasks | none |
//! | `classes` | class count (inferred from source labels otherwise) | inferred |
//! | `pca_dim`, `subspace_dim`, `iterations` | `m`, `k`, `T` | 128, 32, 11 |
//! | `beta`, `lambda`, `gamma`, `eta` | objective weights | 0.1 each |
//! | `delta` | ridge on the projection | 1.0 |
//! | `normalize` | unit-L2 rows after PCA | true |
//! | `legacy_beta_prefactor` | scale the scatter term by `(1 − β)` | false |
//! | `include_unselected_in_m0` | unselected targets stay in marginal MMD | true |
//! | `warm_start_kmeans` | start K-means from the target means under the previous pseudo labels | false |
//! | `normalize_embedding` | unit-L2 rows of `ZP` before prototypes and K-means | true |
//! | `pca_fit` | `joint` or `source` | joint |
//! | `components` | subset of `erm,da,cde,dfl` | all |
//! | `kmeans_max_iters`, `kmeans_tol` | Lloyd caps | 100, 1e-6 |
//! | `seed` | recorded in reports, used by generators | 0 |
//! | `dump_dir` | write every iteration's term matrices, Ω and `P` as CDEM-MAT files | none |
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CdemError, Result};

/// Which objective terms are composed into Ω. Mirrors the ablation table:
/// ERM (scatter and class push-away), DA (MMD), CDE (cross-domain push-away)
/// and DFL (label-graph Laplacian).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub erm: bool,
    pub da: bool,
    pub cde: bool,
    pub dfl: bool,
}

impl Components {
    pub const ALL: Components = Components {
        erm: true,
        da: true,
        cde: true,
        dfl: true,
    };
    pub const ERM: Components = Components {
        erm: true,
        da: false,
        cde: false,
        dfl: false,
    };
    pub const ERM_DA: Components = Components {
        erm: true,
        da: true,
        cde: false,
        dfl: false,
    };
    pub const ERM_DA_CDE: Components = Components {
        erm: true,
        da: true,
        cde: true,
        dfl: false,
    };

    /// Parses names such as `erm`, `da`, `cde`, `dfl`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut c = Components {
            erm: false,
            da: false,
            cde: false,
            dfl: false,
        };
        for name in names {
            match name.as_ref().trim().to_ascii_lowercase().as_str() {
                "erm" => c.erm = true,
                "da" => c.da = true,
                "cde" => c.cde = true,
                "dfl" => c.dfl = true,
                "" => {}
                other => {
                    return Err(CdemError::Config(format!(
                        "unknown component {other:?} (expected erm, da, cde, dfl)"
                    )))
                }
            }
        }
        Ok(c)
    }

    /// Short method id, e.g. `erm+da+cde`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.erm {
            parts.push("erm");
        }
        if self.da {
            parts.push("da");
        }
        if self.cde {
            parts.push("cde");
        }
        if self.dfl {
            parts.push("dfl");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

impl Default for Components {
    fn default() -> Self {
        Components::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcaFit {
    /// Fit on the concatenation of source and target samples.
    Joint,
    /// Fit on source samples only.
    Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFiles {
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
}

/// Resolved paths for one adaptation task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFiles {
    pub name: String,
    pub source_features: PathBuf,
    pub source_labels: PathBuf,
    pub target_features: PathBuf,
    pub target_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source_features: Option<PathBuf>,
    pub source_labels: Option<PathBuf>,
    pub target_features: Option<PathBuf>,
    pub target_labels: Option<PathBuf>,
    pub domains: BTreeMap<String, DomainFiles>,
    pub tasks: Vec<String>,
    pub classes: Option<usize>,
    pub pca_dim: usize,
    pub subspace_dim: usize,
    pub iterations: usize,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub eta: f64,
    pub delta: f64,
    pub normalize: bool,
    pub legacy_beta_prefactor: bool,
    pub include_unselected_in_m0: bool,
    pub warm_start_kmeans: bool,
    pub normalize_embedding: bool,
    pub pca_fit: PcaFit,
    pub components: Components,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
    pub dump_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source_features: None,
            source_labels: None,
            target_features: None,
            target_labels: None,
            domains: BTreeMap::new(),
            tasks: Vec::new(),
            classes: None,
            pca_dim: 128,
            subspace_dim: 32,
            iterations: 11,
            beta: 0.1,
            lambda: 0.1,
            gamma: 0.1,
            eta: 0.1,
            delta: 1.0,
            normalize: true,
            legacy_beta_prefactor: false,
            include_unselected_in_m0: true,
            warm_start_kmeans: false,
            normalize_embedding: true,
            pca_fit: PcaFit::Joint,
            components: Components::ALL,
            kmeans_max_iters: 100,
            kmeans_tol: 1e-6,
            seed: 0,
            dump_dir: None,
        }
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| CdemError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CdemError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CdemError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CdemError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim(), base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        match key {
            "source_features" => self.source_features = Some(resolve(base, value)),
            "source_labels" => self.source_labels = Some(resolve(base, value)),
            "target_features" => self.target_features = Some(resolve(base, value)),
            "target_labels" => self.target_labels = Some(resolve(base, value)),
            "tasks" => {
                self.tasks = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "classes" => self.classes = Some(parse_value(key, value)?),
            "pca_dim" => self.pca_dim = parse_value(key, value)?,
            "subspace_dim" => self.subspace_dim = parse_value(key, value)?,
            "iterations" => self.iterations = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "eta" => self.eta = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "legacy_beta_prefactor" => self.legacy_beta_prefactor = parse_bool(key, value)?,
            "include_unselected_in_m0" => self.include_unselected_in_m0 = parse_bool(key, value)?,
            "warm_start_kmeans" => self.warm_start_kmeans = parse_bool(key, value)?,
            "normalize_embedding" => self.normalize_embedding = parse_bool(key, value)?,
            "pca_fit" => {
                self.pca_fit = match value.to_ascii_lowercase().as_str() {
                    "joint" => PcaFit::Joint,
                    "source" => PcaFit::Source,
                    _ => {
                        return Err(CdemError::Config(format!(
                            "pca_fit: expected joint or source, got {value:?}"
                        )))
                    }
                }
            }
            "components" => {
                let names: Vec<&str> = value.split(',').collect();
                self.components = Components::from_names(&names)?;
            }
            "kmeans_max_iters" => self.kmeans_max_iters = parse_value(key, value)?,
            "kmeans_tol" => self.kmeans_tol = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "dump_dir" => self.dump_dir = Some(resolve(base, value)),
            _ => {
                if let Some(rest) = key.strip_prefix("domain.") {
                    let (name, field) = rest.rsplit_once('.').ok_or_else(|| {
                        CdemError::Config(format!("{key}: expected domain.<NAME>.features|labels"))
                    })?;
                    let entry = self
                        .domains
                        .entry(name.to_string())
                        .or_insert_with(|| DomainFiles {
                            features: PathBuf::new(),
                            labels: None,
                        });
                    match field {
                        "features" => entry.features = resolve(base, value),
                        "labels" => entry.labels = Some(resolve(base, value)),
                        _ => return Err(CdemError::Config(format!("unknown key {key:?}"))),
                    }
                } else {
                    return Err(CdemError::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(CdemError::Config("iterations must be at least 1".into()));
        }
        if self.subspace_dim < 1 {
            return Err(CdemError::Config("subspace_dim must be at least 1".into()));
        }
        if self.subspace_dim > self.pca_dim {
            return Err(CdemError::Config(format!(
                "subspace_dim {} exceeds pca_dim {}",
                self.subspace_dim, self.pca_dim
            )));
        }
        for (name, v) in [
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CdemError::Config(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if let Some(c) = self.classes {
            if c < 2 {
                return Err(CdemError::Config("classes must be at least 2".into()));
            }
        }
        for (name, d) in &self.domains {
            if d.features.as_os_str().is_empty() {
                return Err(CdemError::Config(format!(
                    "domain {name} has labels but no features"
                )));
            }
        }
        Ok(())
    }

    /// Checks `k ≤ m ≤ d` against a concrete feature dimension.
    pub fn validate_dims(&self, feature_dim: usize) -> Result<()> {
        if self.pca_dim > feature_dim {
            return Err(CdemError::Config(format!(
                "pca_dim {} exceeds feature dimension {feature_dim}",
                self.pca_dim
            )));
        }
        self.validate()
    }

    /// Resolves the files for `task` (`SRC-TGT` registry form) or, when no
    /// task is given, the direct `source_*`/`target_*` keys.
    pub fn task_files(&self, task: Option<&str>) -> Result<TaskFiles> {
        match task {
            Some(name) => {
                let (src, tgt) = name
                    .split_once(['-', '>'])
                    .map(|(a, b)| (a.trim(), b.trim_start_matches('>').trim()))
                    .ok_or_else(|| {
                        CdemError::Config(format!("task {name:?}: expected SRC-TGT"))
                    })?;
                let lookup = |d: &str| {
                    self.domains.get(d).ok_or_else(|| {
                        CdemError::Config(format!("task {name}: unknown domain {d:?}"))
                    })
                };
                let s = lookup(src)?;
                let t = lookup(tgt)?;
                let source_labels = s.labels.clone().ok_or_else(|| {
                    CdemError::Config(format!("domain {src} has no labels file"))
                })?;
                Ok(TaskFiles {
                    name: format!("{src}-{tgt}"),
                    source_features: s.features.clone(),
                    source_labels,
                    target_features: t.features.clone(),
                    target_labels: t.labels.clone(),
                })
            }
            None => {
                let need = |p: &Option<PathBuf>, key: &str| {
                    p.clone()
                        .ok_or_else(|| CdemError::Config(format!("missing key {key}")))
                };
                Ok(TaskFiles {
                    name: "custom".into(),
                    source_features: need(&self.source_features, "source_features")?,
                    source_labels: need(&self.source_labels, "source_labels")?,
                    target_features: need(&self.target_features, "target_features")?,
                    target_labels: self.target_labels.clone(),
                })
            }
        }
    }

    /// Serialises back to `key = value` text (paths written as given).
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let path = |p: &Path| p.display().to_string();
        if let Some(p) = &self.source_features {
            writeln!(s, "source_features = {}", path(p)).unwrap();
        }
        if let Some(p) = &self.source_labels {
            writeln!(s, "source_labels = {}", path(p)).unwrap();
        }
        if let Some(p) = &self.target_features {
            writeln!(s, "target_features = {}", path(p)).unwrap();
        }
        if let Some(p) = &self.target_labels {
            writeln!(s, "target_labels = {}", path(p)).unwrap();
        }
        for (name, d) in &self.domains {
            writeln!(s, "domain.{name}.features = {}", path(&d.features)).unwrap();
            if let Some(l) = &d.labels {
                writeln!(s, "domain.{name}.labels = {}", path(l)).unwrap();
            }
        }
        if let Some(p) = &self.dump_dir {
            writeln!(s, "dump_dir = {}", path(p)).unwrap();
        }
        if !self.tasks.is_empty() {
            writeln!(s, "tasks = {}", self.tasks.join(",")).unwrap();
        }
        if let Some(c) = self.classes {
            writeln!(s, "classes = {c}").unwrap();
        }
        let c = &self.components;
        let comps: Vec<&str> = [(c.erm, "erm"), (c.da, "da"), (c.cde, "cde"), (c.dfl, "dfl")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        write!(
            s,
            "pca_dim = {}\nsubspace_dim = {}\niterations = {}\n\
             beta = {:?}\nlambda = {:?}\ngamma = {:?}\neta = {:?}\ndelta = {:?}\n\
             normalize = {}\nlegacy_beta_prefactor = {}\ninclude_unselected_in_m0 = {}\n\
             warm_start_kmeans = {}\nnormalize_embedding = {}\npca_fit = {}\ncomponents = {}\n\
             kmeans_max_iters = {}\nkmeans_tol = {:?}\nseed = {}\n",
            self.pca_dim,
            self.subspace_dim,
            self.iterations,
            self.beta,
            self.lambda,
            self.gamma,
            self.eta,
            self.delta,
            self.normalize,
            self.legacy_beta_prefactor,
            self.include_unselected_in_m0,
            self.warm_start_kmeans,
            self.normalize_embedding,
            match self.pca_fit {
                PcaFit::Joint => "joint",
                PcaFit::Source => "source",
            },
            comps.join(","),
            self.kmeans_max_iters,
            self.kmeans_tol,
            self.seed,
        )
        .unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_office_caltech_setup() {
        let c = ExperimentConfig::default();
        assert_eq!((c.pca_dim, c.subspace_dim, c.iterations), (128, 32, 11));
        assert_eq!(c.delta, 1.0);
        assert_eq!([c.beta, c.lambda, c.gamma, c.eta], [0.1; 4]);
    }

    #[test]
    fn parses_keys_and_registry() {
        let text = "\
# office-caltech
domain.C.features = feats/C.cdm
domain.C.labels = feats/C.labels
domain.A.features = /abs/A.cdm
tasks = C-A
pca_dim = 64   # reduced
subspace_dim = 16
normalize = false
components = erm,da
";
        let cfg = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.pca_dim, 64);
        assert!(!cfg.normalize);
        assert_eq!(cfg.components, Components::ERM_DA);
        let files = cfg.task_files(Some("C-A")).unwrap();
        assert_eq!(files.source_features, PathBuf::from("/base/feats/C.cdm"));
        assert_eq!(files.target_features, PathBuf::from("/abs/A.cdm"));
        assert_eq!(files.target_labels, None);
        assert!(cfg.task_files(Some("A-C")).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        assert!(ExperimentConfig::parse("beta = -1", base).is_err());
        assert!(ExperimentConfig::parse("pca_dim = 4\nsubspace_dim = 8", base).is_err());
        assert!(ExperimentConfig::parse("iterations = 0", base).is_err());
        assert!(ExperimentConfig::parse("bogus = 1", base).is_err());
        assert!(ExperimentConfig::parse("no equals sign", base).is_err());
    }

    #[test]
    fn serialises_back() {
        let cfg = ExperimentConfig {
            beta: 0.25,
            components: Components::ERM_DA_CDE,
            ..ExperimentConfig::default()
        };
        let again = ExperimentConfig::parse(&cfg.to_config_string(), Path::new(".")).unwrap();
        assert_eq!(again, cfg);
    }
}
