//! The alternating optimisation: solve for the projection on the current
//! selection, re-label the target domain in the projected space, grow the
//! selection, repeat for `T` iterations.

use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, PcaFit};
use crate::curriculum::{pseudo_label_counts, select};
use crate::eigsolve::assemble_and_solve;
use crate::error::{CdemError, Result};
use crate::linalg::Matrix;
use crate::matio::{write_matrix, DomainPair, LabelVector};
use crate::objectives::{
    compose_omega, trace_form, ComposeOptions, Hyperparams, JointLabels, ObjectiveMatrices,
};
use crate::preprocess::{fit_pca, normalize_rows, PcaModel};
use crate::prototype::{
    combined_pseudo_labels, distance_softmax, fit_prototypes, nearest_centers, target_kmeans,
    PseudoLabelTable,
};
use crate::scalar::Scalar;

/// 0/1 error rates of the nearest-prototype classifiers of each domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossDomainErrors {
    /// `ε_s(f_s)`.
    pub source_on_source: f64,
    /// `ε_t(f_t)`.
    pub target_on_target: f64,
    /// `ε_s(f_t)`.
    pub target_on_source: f64,
    /// `ε_t(f_s)`.
    pub source_on_target: f64,
}

fn error_rate(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    wrong as f64 / truth.len() as f64
}

/// Fits one prototype classifier per domain (target classes with no members
/// are left out of `f_t`) and cross-evaluates them.
pub fn evaluate_cross_domain_errors<T: Scalar>(
    projected_source: &Matrix<T>,
    source_labels: &[usize],
    projected_target: &Matrix<T>,
    target_labels: &[usize],
    classes: usize,
) -> Result<CrossDomainErrors> {
    let f_s = fit_prototypes(projected_source, source_labels, classes)?;

    let mut present = vec![false; classes];
    for &y in target_labels {
        if y >= classes {
            return Err(CdemError::Data(format!("label {y} outside [0, {classes})")));
        }
        present[y] = true;
    }
    let kept: Vec<usize> = (0..classes).filter(|&c| present[c]).collect();
    if kept.is_empty() {
        return Err(CdemError::Data("no target samples to evaluate".into()));
    }
    let remap: Vec<usize> = {
        let mut r = vec![usize::MAX; classes];
        for (i, &c) in kept.iter().enumerate() {
            r[c] = i;
        }
        r
    };
    let compact: Vec<usize> = target_labels.iter().map(|&y| remap[y]).collect();
    let mut centers = Matrix::zeros(kept.len(), projected_target.cols());
    let mut counts = vec![0usize; kept.len()];
    for (i, &c) in compact.iter().enumerate() {
        counts[c] += 1;
        for (s, &v) in centers.row_mut(c).iter_mut().zip(projected_target.row(i)) {
            *s += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        let n = T::from_usize_lossy(n);
        centers.row_mut(c).iter_mut().for_each(|v| *v /= n);
    }
    let f_t = |x: &Matrix<T>| -> Vec<usize> {
        nearest_centers(&centers, x).into_iter().map(|i| kept[i]).collect()
    };

    Ok(CrossDomainErrors {
        source_on_source: error_rate(&f_s.classify(projected_source), source_labels),
        target_on_target: error_rate(&f_t(projected_target), target_labels),
        target_on_source: error_rate(&f_t(projected_source), source_labels),
        source_on_target: error_rate(&f_s.classify(projected_target), target_labels),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `tr(PᵀXΩXᵀP)` at the solution of this iteration.
    pub objective: f64,
    pub eigen_residual: f64,
    pub smallest_eigenvalue: f64,
    /// Targets used by this iteration's solve, per pseudo class.
    pub solved_on_per_class: Vec<usize>,
    /// Selection produced at the end of this iteration.
    pub selected_per_class: Vec<usize>,
    pub quotas: Vec<usize>,
    pub consistent_per_class: Vec<usize>,
    pub consistent_fraction: f64,
    /// Fraction of targets whose pseudo label matches the previous iteration.
    pub agreement_with_previous: f64,
    pub kmeans_iterations: usize,
    pub skipped_terms: usize,
    /// Diagnostics against the current pseudo labels.
    pub errors: CrossDomainErrors,
    pub pseudo_labels: Vec<usize>,
    /// Predictions of the source prototype classifier on the targets.
    pub source_classifier_labels: Vec<usize>,
    /// Filled by [`AdaptationResult::evaluate`] only.
    pub accuracy: Option<f64>,
    /// Filled by [`AdaptationResult::evaluate`] only: `ε_t(f_s)` on true labels.
    pub source_on_target_true: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptationResult<T> {
    /// `m × k`.
    #[serde(skip)]
    pub projection: Matrix<T>,
    /// Final joint embedding `ZP` (`n_s + n_t` rows, sources first).
    #[serde(skip)]
    pub embedding: Matrix<T>,
    #[serde(skip)]
    pub pca: Option<PcaModel<T>>,
    #[serde(skip)]
    pub final_table: PseudoLabelTable<T>,
    pub iterations: Vec<IterationRecord>,
    pub predictions: Vec<usize>,
}

impl<T: Scalar> AdaptationResult<T> {
    /// Annotates every iteration with accuracy against held-out target
    /// labels; returns the final accuracy in percent.
    pub fn evaluate(&mut self, truth: &LabelVector) -> Result<f64> {
        if truth.len() != self.predictions.len() {
            return Err(CdemError::Data(format!(
                "{} evaluation labels for {} targets",
                truth.len(),
                self.predictions.len()
            )));
        }
        for rec in &mut self.iterations {
            rec.accuracy = Some(accuracy_percent(&rec.pseudo_labels, truth.labels()));
            rec.source_on_target_true =
                Some(error_rate(&rec.source_classifier_labels, truth.labels()));
        }
        Ok(accuracy_percent(&self.predictions, truth.labels()))
    }
}

pub fn accuracy_percent(predicted: &[usize], truth: &[usize]) -> f64 {
    100.0 * (1.0 - error_rate(predicted, truth))
}

/// Applies PCA (fit jointly or on the source) and optional row
/// normalisation, returning the stacked `[Z_s; Z_t]`.
pub fn preprocess_pair<T: Scalar>(
    pair: &DomainPair<T>,
    config: &ExperimentConfig,
) -> Result<(Matrix<T>, PcaModel<T>)> {
    config.validate_dims(pair.dim())?;
    let joint = pair.source().vstack(pair.target())?;
    let model = match config.pca_fit {
        PcaFit::Joint => fit_pca(&joint, config.pca_dim)?,
        PcaFit::Source => fit_pca(pair.source(), config.pca_dim)?,
    };
    let mut z = model.transform(&joint)?;
    if config.normalize {
        z = normalize_rows(&z)?;
    }
    Ok((z, model))
}

pub fn hyperparams_from<T: Scalar>(config: &ExperimentConfig) -> Result<Hyperparams<T>> {
    Hyperparams::new(
        T::lit(config.beta),
        T::lit(config.lambda),
        T::lit(config.gamma),
        T::lit(config.eta),
        T::lit(config.delta),
    )
}

fn per_class(labels: &[Option<usize>], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for l in labels.iter().flatten() {
        counts[*l] += 1;
    }
    counts
}

/// Target class means under `labels`, falling back to `fallback` rows for
/// classes without members.
fn labelled_means<T: Scalar>(points: &Matrix<T>, labels: &[usize], fallback: &Matrix<T>) -> Matrix<T> {
    let mut sums: Matrix<T> = Matrix::zeros(fallback.rows(), fallback.cols());
    let mut counts = vec![0usize; fallback.rows()];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, &v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    Matrix::from_fn(fallback.rows(), fallback.cols(), |c, j| {
        if counts[c] == 0 {
            fallback[(c, j)]
        } else {
            sums[(c, j)] / T::from_usize_lossy(counts[c])
        }
    })
}

// Record, next table, projection and embedding of one iteration.
type Step<T> = (IterationRecord, PseudoLabelTable<T>, Matrix<T>, Matrix<T>);

/// Writes `iter<t>_<term>.cdm` for every term matrix plus `omega` and
/// `projection`.
fn dump_iteration<T: Scalar>(
    dir: &Path,
    t: usize,
    parts: &ObjectiveMatrices<T>,
    omega: &Matrix<T>,
    projection: &Matrix<T>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CdemError::io(dir, e))?;
    let named = parts
        .named()
        .into_iter()
        .chain([("omega", omega), ("projection", projection)]);
    for (name, m) in named {
        write_matrix(&m.cast::<f64>(), dir.join(format!("iter{t:02}_{name}.cdm")))?;
    }
    Ok(())
}

/// Runs the full adaptation loop. Only source labels are read; target labels
/// enter through [`AdaptationResult::evaluate`] afterwards.
pub fn run_cdem<T: Scalar>(pair: &DomainPair<T>, config: &ExperimentConfig) -> Result<AdaptationResult<T>> {
    config.validate()?;
    let classes = pair.classes();
    let ns = pair.n_source();
    let nt = pair.n_target();
    let total = config.iterations;
    if classes > nt {
        return Err(CdemError::Data(format!(
            "{classes} classes but only {nt} target samples"
        )));
    }
    let hp = hyperparams_from::<T>(config)?;
    let opts = ComposeOptions {
        components: config.components,
        legacy_beta_prefactor: config.legacy_beta_prefactor,
    };
    let source_labels = pair.source_labels().labels().to_vec();
    let (z, pca) = preprocess_pair(pair, config)?;
    let kmeans_tol = T::lit(config.kmeans_tol);

    // Bootstrap: source prototypes in the preprocessed space.
    let (z_s, z_t) = (z.slice_rows(0, ns), z.slice_rows(ns, ns + nt));
    let protos = fit_prototypes(&z_s, &source_labels, classes)?;
    let mut table = PseudoLabelTable::from_source_only(distance_softmax(&protos.centers, &z_t)?);
    let state = select(&table, &pseudo_label_counts(&table), 1, total)?;
    state.apply(&mut table);

    let mut records = Vec::with_capacity(total);
    let mut projection = Matrix::zeros(0, 0);
    let mut embedding = Matrix::zeros(0, 0);
    for t in 1..=total {
        let step = || -> Result<Step<T>> {
            let selected = table.selected_labels();
            let solved_on_per_class = per_class(&selected, classes);
            let labels = JointLabels::new(source_labels.clone(), selected, classes)?
                .with_unselected_in_m0(config.include_unselected_in_m0);
            let parts = ObjectiveMatrices::<T>::build(&labels)?;
            let omega = compose_omega(&parts, &hp, opts)?;
            let sol = assemble_and_solve(&z, &omega, &parts.centering, &hp, config.subspace_dim)?;
            if let Some(dir) = &config.dump_dir {
                dump_iteration(dir, t, &parts, &omega, &sol.projection)?;
            }
            let objective = trace_form(&z, &omega, &sol.projection)?;
            if !objective.is_finite() {
                return Err(CdemError::Numeric("objective value is not finite".into()));
            }

            let mut proj = z.matmul(&sol.projection)?;
            if config.normalize_embedding {
                proj = normalize_rows(&proj)?;
            }
            let (p_src, p_tgt) = (proj.slice_rows(0, ns), proj.slice_rows(ns, ns + nt));
            let src_protos = fit_prototypes(&p_src, &source_labels, classes)?;
            let p_s = distance_softmax(&src_protos.centers, &p_tgt)?;
            let init = if config.warm_start_kmeans {
                labelled_means(&p_tgt, &table.y_hat, &src_protos.centers)
            } else {
                src_protos.centers.clone()
            };
            let km = target_kmeans(&p_tgt, &init, config.kmeans_max_iters, kmeans_tol)?;
            let p_t = distance_softmax(&km.centers, &p_tgt)?;
            let mut next = combined_pseudo_labels(&p_s, &p_t, t, total)?;
            let state = select(&next, &pseudo_label_counts(&next), t, total)?;
            state.apply(&mut next);

            let errors =
                evaluate_cross_domain_errors(&p_src, &source_labels, &p_tgt, &next.y_hat, classes)?;
            let agree = next
                .y_hat
                .iter()
                .zip(&table.y_hat)
                .filter(|(a, b)| a == b)
                .count() as f64
                / nt as f64;
            let consistent = next.consistent.iter().filter(|&&c| c).count() as f64 / nt as f64;
            let record = IterationRecord {
                iteration: t,
                objective: objective.to_f64_lossy(),
                eigen_residual: sol.residual.to_f64_lossy(),
                smallest_eigenvalue: sol.eigenvalues[0].to_f64_lossy(),
                solved_on_per_class,
                selected_per_class: per_class(&next.selected_labels(), classes),
                quotas: state.quotas.clone(),
                consistent_per_class: state.consistent_counts.clone(),
                consistent_fraction: consistent,
                agreement_with_previous: agree,
                kmeans_iterations: km.iterations,
                skipped_terms: parts.report.skipped.len(),
                errors,
                pseudo_labels: next.y_hat.clone(),
                source_classifier_labels: next.y_hat_source.clone(),
                accuracy: None,
                source_on_target_true: None,
            };
            Ok((record, next, sol.projection, proj))
        };
        let (record, next, p, proj) = step().map_err(|e| e.at_iteration(t))?;
        log::info!(
            "iteration {t}/{total}: objective {:.6e}, selected {:?}, agreement {:.3}",
            record.objective,
            record.selected_per_class,
            record.agreement_with_previous
        );
        records.push(record);
        table = next;
        projection = p;
        embedding = proj;
    }

    Ok(AdaptationResult {
        projection,
        embedding,
        pca: Some(pca),
        predictions: table.y_hat.clone(),
        final_table: table,
        iterations: records,
    })
}
