//! Quadratic-form matrices of the adaptation objective.
//!
//! Every matrix here is `n × n` over the joint sample ordering: the `n_s`
//! source samples first, then all `n_t` target samples. For a projection `P`
//! and a sample-row feature matrix `Z`, each term evaluates as
//! `tr(Pᵀ Zᵀ A Z P)`.
//!
//! Label-dependent matrices only see the source samples and the *selected*
//! target samples; unselected targets have all-zero rows and columns there.
//! The marginal MMD block and the centring matrix are label-free and cover
//! every sample (the marginal block can optionally be restricted to the
//! selected targets).
//!
//! Each class-contrast term is a rank-one `e eᵀ` where `e` holds `+1/|A|` on
//! one sample group and `-1/|B|` on another, so `eᵀ Z P` is the difference of
//! the two projected group means.

use serde::Serialize;

use crate::config::Components;
use crate::error::{CdemError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Source labels plus the current target pseudo labels (`None` for targets
/// outside the current selection).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointLabels {
    source: Vec<usize>,
    target: Vec<Option<usize>>,
    classes: usize,
    include_unselected_in_m0: bool,
}

impl JointLabels {
    pub fn new(source: Vec<usize>, target: Vec<Option<usize>>, classes: usize) -> Result<Self> {
        if classes < 1 {
            return Err(CdemError::Config("class count must be positive".into()));
        }
        if source.iter().chain(target.iter().flatten()).any(|&l| l >= classes) {
            return Err(CdemError::Data(format!("label outside [0, {classes})")));
        }
        Ok(JointLabels {
            source,
            target,
            classes,
            include_unselected_in_m0: true,
        })
    }

    /// Every target selected with the given labels.
    pub fn fully_labelled(source: Vec<usize>, target: Vec<usize>, classes: usize) -> Result<Self> {
        Self::new(source, target.into_iter().map(Some).collect(), classes)
    }

    pub fn with_unselected_in_m0(mut self, include: bool) -> Self {
        self.include_unselected_in_m0 = include;
        self
    }

    pub fn n_source(&self) -> usize {
        self.source.len()
    }

    pub fn n_target(&self) -> usize {
        self.target.len()
    }

    pub fn len(&self) -> usize {
        self.source.len() + self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn source_labels(&self) -> &[usize] {
        &self.source
    }

    pub fn target_labels(&self) -> &[Option<usize>] {
        &self.target
    }

    pub fn includes_unselected_in_m0(&self) -> bool {
        self.include_unselected_in_m0
    }

    /// Label of joint sample `i`, `None` for an unselected target.
    pub fn label(&self, i: usize) -> Option<usize> {
        if i < self.source.len() {
            Some(self.source[i])
        } else {
            self.target[i - self.source.len()]
        }
    }

    /// Joint indices of source samples in class `c`.
    pub fn source_members(&self, c: usize) -> Vec<usize> {
        (0..self.source.len()).filter(|&i| self.source[i] == c).collect()
    }

    /// Joint indices of source samples outside class `c`.
    pub fn source_complement(&self, c: usize) -> Vec<usize> {
        (0..self.source.len()).filter(|&i| self.source[i] != c).collect()
    }

    /// Joint indices of selected targets pseudo-labelled `c`.
    pub fn target_members(&self, c: usize) -> Vec<usize> {
        let ns = self.source.len();
        self.target
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(c))
            .map(|(j, _)| ns + j)
            .collect()
    }

    /// Joint indices of selected targets with a pseudo label other than `c`.
    pub fn target_complement(&self, c: usize) -> Vec<usize> {
        let ns = self.source.len();
        self.target
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Some(x) if *x != c))
            .map(|(j, _)| ns + j)
            .collect()
    }

    pub fn selected_targets(&self) -> Vec<usize> {
        let ns = self.source.len();
        self.target
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_some())
            .map(|(j, _)| ns + j)
            .collect()
    }
}

/// Nonnegative objective weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparams<T> {
    pub beta: T,
    pub lambda: T,
    pub gamma: T,
    pub eta: T,
    pub delta: T,
}

impl<T: Scalar> Hyperparams<T> {
    pub fn new(beta: T, lambda: T, gamma: T, eta: T, delta: T) -> Result<Self> {
        let hp = Hyperparams {
            beta,
            lambda,
            gamma,
            eta,
            delta,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn zero() -> Self {
        Hyperparams {
            beta: T::zero(),
            lambda: T::zero(),
            gamma: T::zero(),
            eta: T::zero(),
            delta: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("delta", self.delta),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(CdemError::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Terms skipped while building (classes with no selected targets or an empty
/// complement).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub skipped: Vec<String>,
}

impl BuildReport {
    fn skip(&mut self, what: String) {
        log::debug!("skipping objective term: {what}");
        self.skipped.push(what);
    }
}

/// Signed group-mean contrast vector: `+1/|pos|` on `pos`, `-1/|neg|` on `neg`.
fn contrast<T: Scalar>(n: usize, pos: &[usize], neg: &[usize]) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    if !pos.is_empty() {
        let w = T::one() / T::from_usize_lossy(pos.len());
        for &i in pos {
            e[i] += w;
        }
    }
    if !neg.is_empty() {
        let w = T::one() / T::from_usize_lossy(neg.len());
        for &i in neg {
            e[i] -= w;
        }
    }
    e
}

/// Adds the within-group scatter operator `I − 11ᵀ/|g|` on the index set `g`.
fn add_group_scatter<T: Scalar>(a: &mut Matrix<T>, group: &[usize], scale: T) {
    if group.is_empty() {
        return;
    }
    let w = scale / T::from_usize_lossy(group.len());
    for &i in group {
        a[(i, i)] += scale;
        for &j in group {
            a[(i, j)] -= w;
        }
    }
}

/// Block-diagonal within-class projection: `I − Y(YᵀY)⁻¹Yᵀ` on the source
/// block and on the selected-target block, zero elsewhere.
pub fn build_label_projection<T: Scalar>(labels: &JointLabels) -> Result<Matrix<T>> {
    let n = labels.len();
    let mut qy = Matrix::zeros(n, n);
    for c in 0..labels.classes() {
        add_group_scatter(&mut qy, &labels.source_members(c), T::one());
        add_group_scatter(&mut qy, &labels.target_members(c), T::one());
    }
    Ok(qy)
}

/// `Σ_c Q̂^c`: per class and domain, `n_c · e eᵀ` contrasting the class mean
/// with the mean of the remaining classes in that domain.
pub fn build_complement_matrices<T: Scalar>(
    labels: &JointLabels,
    report: &mut BuildReport,
) -> Result<Matrix<T>> {
    let n = labels.len();
    let mut sum = Matrix::zeros(n, n);
    for c in 0..labels.classes() {
        let members = labels.source_members(c);
        let rest = labels.source_complement(c);
        if members.is_empty() {
            return Err(CdemError::Internal(format!("class {c} has no source samples")));
        }
        if rest.is_empty() {
            return Err(CdemError::Config(
                "source domain holds a single class; complement centre undefined".into(),
            ));
        }
        let e = contrast::<T>(n, &members, &rest);
        sum.add_outer(T::from_usize_lossy(members.len()), &e);

        let members = labels.target_members(c);
        let rest = labels.target_complement(c);
        if members.is_empty() || rest.is_empty() {
            report.skip(format!(
                "target complement term for class {c} ({} in class, {} outside)",
                members.len(),
                rest.len()
            ));
            continue;
        }
        let e = contrast::<T>(n, &members, &rest);
        sum.add_outer(T::from_usize_lossy(members.len()), &e);
    }
    Ok(sum)
}

/// Marginal MMD block `M₀`.
pub fn build_mmd_marginal<T: Scalar>(labels: &JointLabels) -> Result<Matrix<T>> {
    let n = labels.len();
    let ns = labels.n_source();
    let source: Vec<usize> = (0..ns).collect();
    let target: Vec<usize> = if labels.includes_unselected_in_m0() {
        (ns..n).collect()
    } else {
        labels.selected_targets()
    };
    if source.is_empty() || target.is_empty() {
        return Err(CdemError::Internal(
            "marginal MMD needs at least one source and one target sample".into(),
        ));
    }
    let mut m0 = Matrix::zeros(n, n);
    m0.add_outer(T::one(), &contrast::<T>(n, &source, &target));
    Ok(m0)
}

/// Conditional MMD blocks `Σ_c M_c` over classes present among the selected
/// targets.
pub fn build_mmd_conditional<T: Scalar>(
    labels: &JointLabels,
    report: &mut BuildReport,
) -> Result<Matrix<T>> {
    let n = labels.len();
    let mut sum = Matrix::zeros(n, n);
    for c in 0..labels.classes() {
        let s = labels.source_members(c);
        let t = labels.target_members(c);
        if s.is_empty() || t.is_empty() {
            report.skip(format!("conditional MMD for class {c}"));
            continue;
        }
        sum.add_outer(T::one(), &contrast::<T>(n, &s, &t));
    }
    Ok(sum)
}

/// `M = M₀ + Σ_c M_c`.
pub fn build_mmd<T: Scalar>(labels: &JointLabels, report: &mut BuildReport) -> Result<Matrix<T>> {
    let mut m = build_mmd_marginal(labels)?;
    m.add_scaled(T::one(), &build_mmd_conditional(labels, report)?)?;
    Ok(m)
}

/// Classes contributing cross-domain terms: present in the selected targets,
/// with a nonempty selected-target complement.
fn cross_domain_classes(labels: &JointLabels, report: &mut BuildReport) -> Vec<usize> {
    (0..labels.classes())
        .filter(|&c| {
            let t = labels.target_members(c).len();
            let rest = labels.target_complement(c).len();
            let s = labels.source_members(c).len();
            let srest = labels.source_complement(c).len();
            let ok = t > 0 && rest > 0 && s > 0 && srest > 0;
            if !ok {
                report.skip(format!("cross-domain terms for class {c}"));
            }
            ok
        })
        .collect()
}

/// Push-away parts of the cross-domain error:
///
/// * `Σ_c n_{s,c} Q̂ˢᵗ_c`: source class-`c` mean against the mean of selected
///   targets *not* pseudo-labelled `c`;
/// * `Σ_c n_{t,c} Q̂ᵗˢ_c`: selected-target class-`c` mean against the mean of
///   source samples outside `c`.
pub fn build_cross_domain<T: Scalar>(
    labels: &JointLabels,
    report: &mut BuildReport,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let n = labels.len();
    let mut qst = Matrix::zeros(n, n);
    let mut qts = Matrix::zeros(n, n);
    for c in cross_domain_classes(labels, report) {
        let s = labels.source_members(c);
        let t = labels.target_members(c);
        let e_st = contrast::<T>(n, &s, &labels.target_complement(c));
        qst.add_outer(T::from_usize_lossy(s.len()), &e_st);
        let e_ts = contrast::<T>(n, &t, &labels.source_complement(c));
        qts.add_outer(T::from_usize_lossy(t.len()), &e_ts);
    }
    Ok((qst, qts))
}

/// Full cross-domain error operator: its quadratic form equals
/// `Σ_c Σ_{x∈S_c} (‖x−μ_{t,c}‖² − β‖x−μ̂_{t,c}‖²) + Σ_c Σ_{x∈T_c} (‖x−μ_{s,c}‖² − β‖x−μ̂_{s,c}‖²)`
/// summed over the contributing classes, i.e.
/// `(1−β)·scatter + Σ_c (n_{s,c}+n_{t,c}) M_c − β (n_{s,c} Q̂ˢᵗ_c + n_{t,c} Q̂ᵗˢ_c)`.
pub fn cross_domain_error_matrix<T: Scalar>(labels: &JointLabels, beta: T) -> Result<Matrix<T>> {
    let n = labels.len();
    let mut report = BuildReport::default();
    let mut a = Matrix::zeros(n, n);
    for c in cross_domain_classes(labels, &mut report) {
        let s = labels.source_members(c);
        let t = labels.target_members(c);
        add_group_scatter(&mut a, &s, T::one() - beta);
        add_group_scatter(&mut a, &t, T::one() - beta);
        let pair_weight = T::from_usize_lossy(s.len() + t.len());
        a.add_outer(pair_weight, &contrast::<T>(n, &s, &t));
        let e_st = contrast::<T>(n, &s, &labels.target_complement(c));
        a.add_outer(-beta * T::from_usize_lossy(s.len()), &e_st);
        let e_ts = contrast::<T>(n, &t, &labels.source_complement(c));
        a.add_outer(-beta * T::from_usize_lossy(t.len()), &e_ts);
    }
    Ok(a)
}

/// Same-label adjacency over source and selected targets (diagonal included).
pub fn build_similarity<T: Scalar>(labels: &JointLabels) -> Matrix<T> {
    let n = labels.len();
    let mut w = Matrix::zeros(n, n);
    for c in 0..labels.classes() {
        let mut group = labels.source_members(c);
        group.extend(labels.target_members(c));
        for &i in &group {
            for &j in &group {
                w[(i, j)] = T::one();
            }
        }
    }
    w
}

/// Graph Laplacian `L = B − W` with `B = diag(W·1)`.
pub fn laplacian_of<T: Scalar>(w: &Matrix<T>) -> Matrix<T> {
    let mut l = w.scaled(-T::one());
    for (i, s) in w.row_sums().into_iter().enumerate() {
        l[(i, i)] += s;
    }
    l
}

pub fn build_laplacian<T: Scalar>(labels: &JointLabels) -> Matrix<T> {
    laplacian_of(&build_similarity::<T>(labels))
}

/// Centring matrix `I − 11ᵀ/n`.
pub fn centering_matrix<T: Scalar>(n: usize) -> Matrix<T> {
    let w = T::one() / T::from_usize_lossy(n);
    let mut h = Matrix::from_fn(n, n, |_, _| -w);
    h.add_diag(T::one());
    h
}

/// Options for [`compose_omega`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComposeOptions {
    pub components: Components,
    /// Scale the scatter term by `(1 − β)`.
    pub legacy_beta_prefactor: bool,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            components: Components::ALL,
            legacy_beta_prefactor: false,
        }
    }
}

/// All term matrices for one labelling, over a shared sample ordering.
#[derive(Debug, Clone)]
pub struct ObjectiveMatrices<T> {
    pub qy: Matrix<T>,
    pub qhat_sum: Matrix<T>,
    pub mmd: Matrix<T>,
    pub qst_sum: Matrix<T>,
    pub qts_sum: Matrix<T>,
    pub similarity: Matrix<T>,
    pub laplacian: Matrix<T>,
    pub centering: Matrix<T>,
    pub report: BuildReport,
}

impl<T: Scalar> ObjectiveMatrices<T> {
    pub fn build(labels: &JointLabels) -> Result<Self> {
        let mut report = BuildReport::default();
        let qy = build_label_projection(labels)?;
        let qhat_sum = build_complement_matrices(labels, &mut report)?;
        let mmd = build_mmd(labels, &mut report)?;
        let (qst_sum, qts_sum) = build_cross_domain(labels, &mut report)?;
        let similarity = build_similarity(labels);
        let laplacian = laplacian_of(&similarity);
        let centering = centering_matrix(labels.len());
        Ok(ObjectiveMatrices {
            qy,
            qhat_sum,
            mmd,
            qst_sum,
            qts_sum,
            similarity,
            laplacian,
            centering,
            report,
        })
    }

    pub fn len(&self) -> usize {
        self.qy.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Named view of every term, for dumps.
    pub fn named(&self) -> [(&'static str, &Matrix<T>); 8] {
        [
            ("qy", &self.qy),
            ("qhat_sum", &self.qhat_sum),
            ("mmd", &self.mmd),
            ("qst_sum", &self.qst_sum),
            ("qts_sum", &self.qts_sum),
            ("similarity", &self.similarity),
            ("laplacian", &self.laplacian),
            ("centering", &self.centering),
        ]
    }
}

/// `Ω = Q^Y + λM + ηL − (βΣQ̂^c + γΣQ̂ˢᵗ_c + γΣQ̂ᵗˢ_c)`, with disabled
/// components dropped.
pub fn compose_omega<T: Scalar>(
    parts: &ObjectiveMatrices<T>,
    hp: &Hyperparams<T>,
    opts: ComposeOptions,
) -> Result<Matrix<T>> {
    let n = parts.len();
    for (name, m) in parts.named() {
        if m.shape() != (n, n) {
            return Err(CdemError::Internal(format!(
                "{name} is {:?}, expected {n}x{n}",
                m.shape()
            )));
        }
    }
    let comps = opts.components;
    let mut omega = Matrix::zeros(n, n);
    if comps.erm {
        let scatter_weight = if opts.legacy_beta_prefactor {
            T::one() - hp.beta
        } else {
            T::one()
        };
        omega.add_scaled(scatter_weight, &parts.qy)?;
        omega.add_scaled(-hp.beta, &parts.qhat_sum)?;
    }
    if comps.da {
        omega.add_scaled(hp.lambda, &parts.mmd)?;
    }
    if comps.dfl {
        omega.add_scaled(hp.eta, &parts.laplacian)?;
    }
    if comps.cde {
        omega.add_scaled(-hp.gamma, &parts.qst_sum)?;
        omega.add_scaled(-hp.gamma, &parts.qts_sum)?;
    }
    Ok(omega)
}

/// `tr(Pᵀ Zᵀ A Z P)` for sample-row features `Z` (n × m) and `P` (m × k).
pub fn trace_form<T: Scalar>(z: &Matrix<T>, a: &Matrix<T>, p: &Matrix<T>) -> Result<T> {
    let zp = z.matmul(p)?;
    let azp = a.matmul(&zp)?;
    let mut tr = T::zero();
    for i in 0..zp.rows() {
        tr += crate::linalg::dot(zp.row(i), azp.row(i));
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix<f64>, rows: &[Vec<f64>]) -> bool {
        a.max_abs_diff(&Matrix::from_rows(rows).unwrap()) < 1e-14
    }

    #[test]
    fn projection_two_same_class() {
        let labels = JointLabels::new(vec![0, 0], vec![], 2).unwrap();
        let qy = build_label_projection::<f64>(&labels).unwrap();
        assert!(close(&qy, &[vec![0.5, -0.5], vec![-0.5, 0.5]]));
    }

    #[test]
    fn projection_singletons_vanish() {
        let labels = JointLabels::new(vec![0, 1, 2], vec![Some(0), Some(1)], 3).unwrap();
        let qy = build_label_projection::<f64>(&labels).unwrap();
        assert_eq!(qy.max_abs(), 0.0);
    }

    #[test]
    fn unselected_targets_have_empty_rows() {
        let labels = JointLabels::new(vec![0, 0, 1, 1], vec![Some(0), None, Some(0)], 2).unwrap();
        let qy = build_label_projection::<f64>(&labels).unwrap();
        let l = build_laplacian::<f64>(&labels);
        for m in [&qy, &l] {
            assert!(m.row(5).iter().all(|&v| v == 0.0));
            assert!(m.column(5).iter().all(|&v| v == 0.0));
        }
        let m0 = build_mmd_marginal::<f64>(&labels).unwrap();
        assert!(m0.row(5).iter().any(|&v| v != 0.0));
        let m0_sel = build_mmd_marginal::<f64>(&labels.clone().with_unselected_in_m0(false)).unwrap();
        assert!(m0_sel.row(5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn complement_pair_of_singletons() {
        let labels = JointLabels::new(vec![0, 1], vec![], 2).unwrap();
        let mut report = BuildReport::default();
        let q = build_complement_matrices::<f64>(&labels, &mut report).unwrap();
        // both classes contribute [[1,-1],[-1,1]]
        assert!(close(&q, &[vec![2.0, -2.0], vec![-2.0, 2.0]]));
        assert_eq!(report.skipped.len(), 2);
    }

    #[test]
    fn complement_single_class_source_is_config_error() {
        let labels = JointLabels::new(vec![0, 0], vec![Some(0)], 1).unwrap();
        let mut report = BuildReport::default();
        assert!(matches!(
            build_complement_matrices::<f64>(&labels, &mut report),
            Err(CdemError::Config(_))
        ));
    }

    #[test]
    fn marginal_mmd_one_each() {
        let labels = JointLabels::new(vec![0], vec![None], 2).unwrap();
        let m0 = build_mmd_marginal::<f64>(&labels).unwrap();
        assert!(close(&m0, &[vec![1.0, -1.0], vec![-1.0, 1.0]]));
        let none = labels.with_unselected_in_m0(false);
        assert!(build_mmd_marginal::<f64>(&none).is_err());
    }

    #[test]
    fn laplacian_pairs() {
        let same = JointLabels::new(vec![1, 1], vec![], 2).unwrap();
        assert!(close(
            &build_laplacian::<f64>(&same),
            &[vec![1.0, -1.0], vec![-1.0, 1.0]]
        ));
        let diff = JointLabels::new(vec![0, 1], vec![], 2).unwrap();
        assert_eq!(build_laplacian::<f64>(&diff).max_abs(), 0.0);
    }

    #[test]
    fn centering_is_idempotent() {
        let h = centering_matrix::<f64>(7);
        let h2 = h.matmul(&h).unwrap();
        assert!(h2.max_abs_diff(&h) < 1e-14);
        assert!(h.row_sums().iter().all(|s| s.abs() < 1e-14));
    }

    #[test]
    fn cross_terms_skip_missing_target_class() {
        let labels = JointLabels::new(vec![0, 1, 2], vec![Some(0), Some(1), None], 3).unwrap();
        let mut report = BuildReport::default();
        let (qst, qts) = build_cross_domain::<f64>(&labels, &mut report).unwrap();
        assert!(report.skipped.iter().any(|s| s.contains("class 2")));
        assert!(qst.asymmetry() == 0.0 && qts.asymmetry() == 0.0);
    }

    #[test]
    fn compose_special_cases() {
        let labels =
            JointLabels::new(vec![0, 1, 0, 1], vec![Some(0), Some(1), Some(1)], 2).unwrap();
        let parts = ObjectiveMatrices::<f64>::build(&labels).unwrap();
        let zero = Hyperparams::zero();
        let omega = compose_omega(&parts, &zero, ComposeOptions::default()).unwrap();
        assert_eq!(omega, parts.qy);

        let mut hp = Hyperparams::zero();
        hp.lambda = 1.0;
        let omega = compose_omega(&parts, &hp, ComposeOptions::default()).unwrap();
        let mut expect = parts.qy.clone();
        expect.add_scaled(1.0, &parts.mmd).unwrap();
        assert!(omega.max_abs_diff(&expect) < 1e-15);

        hp = Hyperparams::new(0.3, 0.2, 0.5, 0.7, 1.0).unwrap();
        let erm_only = ComposeOptions {
            components: Components::ERM,
            legacy_beta_prefactor: true,
        };
        let omega = compose_omega(&parts, &hp, erm_only).unwrap();
        let mut expect = parts.qy.scaled(0.7);
        expect.add_scaled(-0.3, &parts.qhat_sum).unwrap();
        assert!(omega.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn hyperparams_reject_negative() {
        assert!(Hyperparams::new(0.1, -0.1, 0.0, 0.0, 0.0).is_err());
        assert!(Hyperparams::new(0.1, f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
