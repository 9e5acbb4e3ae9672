//! Class-balanced, growing selection of confidently pseudo-labelled targets.

use serde::Serialize;

use crate::error::{CdemError, Result};
use crate::prototype::PseudoLabelTable;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurriculumState {
    pub t: usize,
    pub total: usize,
    /// `N_{t,c}`.
    pub quotas: Vec<usize>,
    /// Label-consistent targets per pseudo class.
    pub consistent_counts: Vec<usize>,
    /// Selected target indices, ascending.
    pub selected: Vec<usize>,
}

impl CurriculumState {
    /// Writes the selection flags into `table`.
    pub fn apply<T: Scalar>(&self, table: &mut PseudoLabelTable<T>) {
        table.selected.iter_mut().for_each(|s| *s = false);
        for &i in &self.selected {
            table.selected[i] = true;
        }
    }
}

/// `min(⌈n·t/T⌉, n_con)`.
pub fn class_quota(n_class: usize, t: usize, total: usize, n_consistent: usize) -> usize {
    let grown = (n_class * t).div_ceil(total);
    grown.min(n_consistent)
}

/// Pseudo-label counts `n_{t,c}` over every target.
pub fn pseudo_label_counts<T: Scalar>(table: &PseudoLabelTable<T>) -> Vec<usize> {
    let mut counts = vec![0; table.classes()];
    for &y in &table.y_hat {
        counts[y] += 1;
    }
    counts
}

/// For every class `c`, keeps the `N_{t,c}` label-consistent targets with
/// `ŷ = c` and the highest confidence (ties: lower index first).
pub fn select<T: Scalar>(
    table: &PseudoLabelTable<T>,
    n_tc: &[usize],
    t: usize,
    total: usize,
) -> Result<CurriculumState> {
    if t < 1 || t > total {
        return Err(CdemError::Config(format!("iteration {t} outside [1, {total}]")));
    }
    let classes = table.classes();
    if n_tc.len() != classes {
        return Err(CdemError::Internal(format!(
            "{} class counts for {classes} classes",
            n_tc.len()
        )));
    }
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for i in 0..table.len() {
        if table.consistent[i] {
            pools[table.y_hat[i]].push(i);
        }
    }
    let consistent_counts: Vec<usize> = pools.iter().map(Vec::len).collect();
    let mut quotas = Vec::with_capacity(classes);
    let mut selected = Vec::new();
    for (c, pool) in pools.iter_mut().enumerate() {
        let quota = class_quota(n_tc[c], t, total, pool.len());
        quotas.push(quota);
        pool.sort_by(|&a, &b| {
            table.confidence[b]
                .partial_cmp(&table.confidence[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        selected.extend_from_slice(&pool[..quota]);
    }
    selected.sort_unstable();
    Ok(CurriculumState {
        t,
        total,
        quotas,
        consistent_counts,
        selected,
    })
}
