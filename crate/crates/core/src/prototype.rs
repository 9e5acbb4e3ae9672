//! Prototype (class-centre) classifiers, source-initialised K-means and the
//! pseudo-label table built from both.

use serde::Serialize;

use crate::error::{CdemError, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::scalar::Scalar;

/// Class centres and complement centres (mean over every other class).
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet<T> {
    /// `C × k`.
    pub centers: Matrix<T>,
    /// `C × k`.
    pub complement_centers: Matrix<T>,
    pub counts: Vec<usize>,
}

impl<T: Scalar> PrototypeSet<T> {
    pub fn classes(&self) -> usize {
        self.centers.rows()
    }

    /// Nearest-centre class for every row of `points`.
    pub fn classify(&self, points: &Matrix<T>) -> Vec<usize> {
        nearest_centers(&self.centers, points)
    }
}

/// Class means and complement means of `points` under `labels`.
pub fn fit_prototypes<T: Scalar>(
    points: &Matrix<T>,
    labels: &[usize],
    classes: usize,
) -> Result<PrototypeSet<T>> {
    if labels.len() != points.rows() {
        return Err(CdemError::Data(format!(
            "{} labels for {} samples",
            labels.len(),
            points.rows()
        )));
    }
    let k = points.cols();
    let mut sums = Matrix::<T>::zeros(classes, k);
    let mut total = vec![T::zero(); k];
    let mut counts = vec![0usize; classes];
    for (i, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(CdemError::Data(format!("label {c} outside [0, {classes})")));
        }
        counts[c] += 1;
        for ((s, t), &v) in sums.row_mut(c).iter_mut().zip(total.iter_mut()).zip(points.row(i)) {
            *s += v;
            *t += v;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(CdemError::Data(format!("class {c} has no members")));
    }
    let n = labels.len();
    let mut centers = Matrix::zeros(classes, k);
    let mut complement_centers = Matrix::zeros(classes, k);
    for c in 0..classes {
        let nc = T::from_usize_lossy(counts[c]);
        let rest = n - counts[c];
        for j in 0..k {
            centers[(c, j)] = sums[(c, j)] / nc;
            complement_centers[(c, j)] = if rest > 0 {
                (total[j] - sums[(c, j)]) / T::from_usize_lossy(rest)
            } else {
                T::nan()
            };
        }
    }
    Ok(PrototypeSet {
        centers,
        complement_centers,
        counts,
    })
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Nearest centre by Euclidean distance; ties go to the lower index.
pub fn nearest_centers<T: Scalar>(centers: &Matrix<T>, points: &Matrix<T>) -> Vec<usize> {
    (0..points.rows())
        .map(|i| {
            let x = points.row(i);
            let mut best = 0;
            let mut best_d = squared_distance(x, centers.row(0));
            for c in 1..centers.rows() {
                let d = squared_distance(x, centers.row(c));
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Row-wise softmax of `−‖x − μ_c‖₂` (unsquared distances), shifted by the
/// row maximum before exponentiation.
pub fn distance_softmax<T: Scalar>(centers: &Matrix<T>, points: &Matrix<T>) -> Result<Matrix<T>> {
    if centers.cols() != points.cols() {
        return Err(CdemError::Data(format!(
            "centres have dimension {}, points {}",
            centers.cols(),
            points.cols()
        )));
    }
    let classes = centers.rows();
    let mut out = Matrix::zeros(points.rows(), classes);
    for i in 0..points.rows() {
        let x = points.row(i);
        let row = out.row_mut(i);
        for (c, r) in row.iter_mut().enumerate() {
            *r = -squared_distance(x, centers.row(c)).sqrt();
        }
        softmax_in_place(row);
    }
    Ok(out)
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// `p_s(y | x_t)`: softmax over negative distances to the source centres.
pub fn source_probabilities<T: Scalar>(
    protos: &PrototypeSet<T>,
    projected_targets: &Matrix<T>,
) -> Result<Matrix<T>> {
    distance_softmax(&protos.centers, projected_targets)
}

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    /// `C × k`; row `c` is the cluster initialised from class `c`.
    pub centers: Matrix<T>,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    /// Within-cluster SSE after the initial assignment and after every update.
    pub sse_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

fn cluster_sse<T: Scalar>(points: &Matrix<T>, centers: &Matrix<T>, assignment: &[usize]) -> T {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(points.row(i), centers.row(c)))
        .sum()
}

/// Lloyd iterations started from `init_centers` (one row per class), so
/// cluster `c` stays tied to class `c`. An emptied cluster keeps its
/// previous centre. Stops after `max_iters` updates, when the assignment
/// stops changing, or when the relative SSE decrease is at most `tol`.
pub fn target_kmeans<T: Scalar>(
    points: &Matrix<T>,
    init_centers: &Matrix<T>,
    max_iters: usize,
    tol: T,
) -> Result<KMeansResult<T>> {
    let classes = init_centers.rows();
    let n = points.rows();
    if classes == 0 {
        return Err(CdemError::Data("K-means needs at least one centre".into()));
    }
    if classes > n {
        return Err(CdemError::Data(format!(
            "{classes} clusters requested for {n} target samples"
        )));
    }
    if init_centers.cols() != points.cols() {
        return Err(CdemError::Data(format!(
            "centres have dimension {}, points {}",
            init_centers.cols(),
            points.cols()
        )));
    }
    let k = points.cols();
    let mut centers = init_centers.clone();
    let mut assignment = nearest_centers(&centers, points);
    let mut sse = cluster_sse(points, &centers, &assignment);
    let mut sse_trace = vec![sse];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        let mut sums = Matrix::<T>::zeros(classes, k);
        let mut counts = vec![0usize; classes];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, &v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..classes {
            if counts[c] == 0 {
                continue;
            }
            let nc = T::from_usize_lossy(counts[c]);
            for j in 0..k {
                centers[(c, j)] = sums[(c, j)] / nc;
            }
        }
        let next = nearest_centers(&centers, points);
        let next_sse = cluster_sse(points, &centers, &next);
        iterations += 1;
        sse_trace.push(next_sse);
        let unchanged = next == assignment;
        let rel_change = (sse - next_sse).abs() / sse.max(T::min_positive_value());
        assignment = next;
        sse = next_sse;
        if unchanged || rel_change <= tol {
            converged = true;
            break;
        }
    }
    let mut counts = vec![0usize; classes];
    for &c in &assignment {
        counts[c] += 1;
    }
    Ok(KMeansResult {
        centers,
        assignment,
        counts,
        sse_trace,
        iterations,
        converged,
    })
}

/// Per-target pseudo-label record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoLabelTable<T> {
    /// `n_t × C` source-prototype probabilities.
    #[serde(skip)]
    pub p_source: Matrix<T>,
    /// `n_t × C` target-cluster probabilities.
    #[serde(skip)]
    pub p_target: Matrix<T>,
    /// `n_t × C` combined probabilities.
    #[serde(skip)]
    pub p: Matrix<T>,
    pub y_hat_source: Vec<usize>,
    pub y_hat_target: Vec<usize>,
    pub y_hat: Vec<usize>,
    pub consistent: Vec<bool>,
    pub selected: Vec<bool>,
    pub confidence: Vec<T>,
}

impl<T: Scalar> PseudoLabelTable<T> {
    pub fn len(&self) -> usize {
        self.y_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_hat.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.p.cols()
    }

    /// Table from source-prototype probabilities alone (every sample counts
    /// as label-consistent).
    pub fn from_source_only(p_source: Matrix<T>) -> Self {
        let y_hat: Vec<usize> = (0..p_source.rows()).map(|i| argmax(p_source.row(i))).collect();
        let confidence = (0..p_source.rows()).map(|i| p_source[(i, y_hat[i])]).collect();
        PseudoLabelTable {
            p_target: p_source.clone(),
            p: p_source.clone(),
            p_source,
            y_hat_source: y_hat.clone(),
            y_hat_target: y_hat.clone(),
            consistent: vec![true; y_hat.len()],
            selected: vec![false; y_hat.len()],
            y_hat,
            confidence,
        }
    }

    /// Joint-label view: selected targets carry their pseudo label.
    pub fn selected_labels(&self) -> Vec<Option<usize>> {
        self.y_hat
            .iter()
            .zip(&self.selected)
            .map(|(&y, &s)| s.then_some(y))
            .collect()
    }
}

/// `p = (1 − t/T)·p_s + (t/T)·p_t`, `ŷ = argmax p`, consistency flags from the
/// two individual argmaxes. Nothing is selected yet.
pub fn combined_pseudo_labels<T: Scalar>(
    p_source: &Matrix<T>,
    p_target: &Matrix<T>,
    t: usize,
    total: usize,
) -> Result<PseudoLabelTable<T>> {
    if t < 1 || t > total {
        return Err(CdemError::Config(format!(
            "iteration {t} outside [1, {total}]"
        )));
    }
    if p_source.shape() != p_target.shape() {
        return Err(CdemError::Data(format!(
            "probability tables differ in shape: {:?} vs {:?}",
            p_source.shape(),
            p_target.shape()
        )));
    }
    let w_t = T::from_usize_lossy(t) / T::from_usize_lossy(total);
    let w_s = T::one() - w_t;
    let p = if t == total {
        p_target.clone()
    } else {
        let mut p = p_source.scaled(w_s);
        p.add_scaled(w_t, p_target)?;
        p
    };
    let n = p.rows();
    let y_hat_source: Vec<usize> = (0..n).map(|i| argmax(p_source.row(i))).collect();
    let y_hat_target: Vec<usize> = (0..n).map(|i| argmax(p_target.row(i))).collect();
    let y_hat: Vec<usize> = (0..n).map(|i| argmax(p.row(i))).collect();
    let consistent = y_hat_source
        .iter()
        .zip(&y_hat_target)
        .map(|(a, b)| a == b)
        .collect();
    let confidence = (0..n).map(|i| p[(i, y_hat[i])]).collect();
    Ok(PseudoLabelTable {
        p_source: p_source.clone(),
        p_target: p_target.clone(),
        p,
        y_hat_source,
        y_hat_target,
        y_hat,
        consistent,
        selected: vec![false; n],
        confidence,
    })
}
