//! Brute-force reference evaluations used by the test suites and by
//! `cdem selftest`.
//!
//! Nothing here touches the matrix builders: each function projects the
//! samples with explicit loops and evaluates the defining per-sample,
//! per-centre or pairwise sums directly. The generalized eigenvalue reference
//! uses cyclic Jacobi rotations and a `B^{-1/2}` similarity rather than the
//! Cholesky/QL route of the solver.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::eigsolve::solve_generalized;
use crate::linalg::Matrix;
use crate::objectives::{
    build_cross_domain, build_laplacian, build_label_projection, build_complement_matrices,
    build_mmd, cross_domain_error_matrix, trace_form, BuildReport, JointLabels,
};

fn project(z: &Matrix<f64>, p: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..z.rows())
        .map(|i| {
            (0..p.cols())
                .map(|c| (0..z.cols()).map(|r| z[(i, r)] * p[(r, c)]).sum())
                .collect()
        })
        .collect()
}

fn mean_of(points: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let k = points[0].len();
    let mut m = vec![0.0; k];
    for &i in idx {
        for j in 0..k {
            m[j] += points[i][j];
        }
    }
    m.iter_mut().for_each(|v| *v /= idx.len() as f64);
    m
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sum_sq_to(points: &[Vec<f64>], idx: &[usize], center: &[f64]) -> f64 {
    idx.iter().map(|&i| sq(&points[i], center)).sum()
}

struct Groups {
    source: Vec<Vec<usize>>,
    source_rest: Vec<Vec<usize>>,
    target: Vec<Vec<usize>>,
    target_rest: Vec<Vec<usize>>,
}

fn groups(labels: &JointLabels) -> Groups {
    let ns = labels.n_source();
    let c_count = labels.classes();
    let mut g = Groups {
        source: vec![Vec::new(); c_count],
        source_rest: vec![Vec::new(); c_count],
        target: vec![Vec::new(); c_count],
        target_rest: vec![Vec::new(); c_count],
    };
    for c in 0..c_count {
        for (i, &y) in labels.source_labels().iter().enumerate() {
            if y == c {
                g.source[c].push(i);
            } else {
                g.source_rest[c].push(i);
            }
        }
        for (j, y) in labels.target_labels().iter().enumerate() {
            match y {
                Some(y) if *y == c => g.target[c].push(ns + j),
                Some(_) => g.target_rest[c].push(ns + j),
                None => {}
            }
        }
    }
    g
}

/// `Σ_c Σ_{x∈D_c} ‖Pᵀ(x − μ_c)‖²` over the source and the selected targets.
pub fn within_class_sum(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> f64 {
    let y = project(z, p);
    let g = groups(labels);
    let mut total = 0.0;
    for sets in [&g.source, &g.target] {
        for idx in sets.iter().filter(|s| !s.is_empty()) {
            total += sum_sq_to(&y, idx, &mean_of(&y, idx));
        }
    }
    total
}

/// `Σ_c n_c ‖Pᵀ(μ_c − μ̂_c)‖²` per domain (target classes with an empty
/// member set or complement are skipped).
pub fn complement_center_sum(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> f64 {
    let y = project(z, p);
    let g = groups(labels);
    let mut total = 0.0;
    for (sets, rests) in [(&g.source, &g.source_rest), (&g.target, &g.target_rest)] {
        for (idx, rest) in sets.iter().zip(rests.iter()) {
            if idx.is_empty() || rest.is_empty() {
                continue;
            }
            total += idx.len() as f64 * sq(&mean_of(&y, idx), &mean_of(&y, rest));
        }
    }
    total
}

/// Per-sample empirical error, which equals the quadratic form of
/// `(1−β)Q^Y − βΣQ̂^c`: `Σ (‖Pᵀ(x−μ_c)‖² − β‖Pᵀ(x−μ̂_c)‖²)` over both
/// domains. Classes without a complement contribute only the scatter part
/// and then no longer match the matrix form.
pub fn empirical_error(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels, beta: f64) -> f64 {
    let y = project(z, p);
    let g = groups(labels);
    let mut total = 0.0;
    for (sets, rests) in [(&g.source, &g.source_rest), (&g.target, &g.target_rest)] {
        for (idx, rest) in sets.iter().zip(rests.iter()) {
            if idx.is_empty() {
                continue;
            }
            let mu = mean_of(&y, idx);
            total += sum_sq_to(&y, idx, &mu);
            if !rest.is_empty() {
                total -= beta * sum_sq_to(&y, idx, &mean_of(&y, rest));
            }
        }
    }
    total
}

/// `‖(1/n_s)Σ Pᵀx_i − (1/n_t)Σ Pᵀx_j‖²`; targets restricted to the selection
/// when the labels say so.
pub fn marginal_mmd(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> f64 {
    let y = project(z, p);
    let ns = labels.n_source();
    let source: Vec<usize> = (0..ns).collect();
    let target: Vec<usize> = if labels.includes_unselected_in_m0() {
        (ns..labels.len()).collect()
    } else {
        (0..labels.n_target())
            .filter(|&j| labels.target_labels()[j].is_some())
            .map(|j| ns + j)
            .collect()
    };
    sq(&mean_of(&y, &source), &mean_of(&y, &target))
}

/// `Σ_c ‖μ_{s,c} − μ_{t,c}‖²` in the projected space, over classes present in
/// the selected targets.
pub fn conditional_mmd(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> f64 {
    let y = project(z, p);
    let g = groups(labels);
    g.source
        .iter()
        .zip(&g.target)
        .filter(|(s, t)| !s.is_empty() && !t.is_empty())
        .map(|(s, t)| sq(&mean_of(&y, s), &mean_of(&y, t)))
        .sum()
}

fn cross_classes(g: &Groups) -> Vec<usize> {
    (0..g.source.len())
        .filter(|&c| {
            !g.source[c].is_empty()
                && !g.source_rest[c].is_empty()
                && !g.target[c].is_empty()
                && !g.target_rest[c].is_empty()
        })
        .collect()
}

/// Push-away parts of the cross-domain error, each as a difference of
/// per-sample distance sums:
/// `Σ_{x∈D_{s,c}} ‖x−μ̂_{t,c}‖² − Σ_{x∈D_{s,c}} ‖x−μ_{s,c}‖²` (and the mirror
/// term for targets), summed over contributing classes.
pub fn cross_push_away(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> (f64, f64) {
    let y = project(z, p);
    let g = groups(labels);
    let mut st = 0.0;
    let mut ts = 0.0;
    for c in cross_classes(&g) {
        let s = &g.source[c];
        let t = &g.target[c];
        st += sum_sq_to(&y, s, &mean_of(&y, &g.target_rest[c])) - sum_sq_to(&y, s, &mean_of(&y, s));
        ts += sum_sq_to(&y, t, &mean_of(&y, &g.source_rest[c])) - sum_sq_to(&y, t, &mean_of(&y, t));
    }
    (st, ts)
}

/// `ε_s(f_t) + ε_t(f_s)` as the direct per-sample sum
/// `Σ_{x∈D_{s,c}} (‖x−μ_{t,c}‖² − β‖x−μ̂_{t,c}‖²) + Σ_{x∈D_{t,c}} (‖x−μ_{s,c}‖² − β‖x−μ̂_{s,c}‖²)`.
pub fn cross_domain_error(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels, beta: f64) -> f64 {
    let y = project(z, p);
    let g = groups(labels);
    let mut total = 0.0;
    for c in cross_classes(&g) {
        let mu_s = mean_of(&y, &g.source[c]);
        let mu_t = mean_of(&y, &g.target[c]);
        let hat_s = mean_of(&y, &g.source_rest[c]);
        let hat_t = mean_of(&y, &g.target_rest[c]);
        for &i in &g.source[c] {
            total += sq(&y[i], &mu_t) - beta * sq(&y[i], &hat_t);
        }
        for &j in &g.target[c] {
            total += sq(&y[j], &mu_s) - beta * sq(&y[j], &hat_s);
        }
    }
    total
}

/// `½ Σ_{i,j} W_ij ‖Pᵀx_i − Pᵀx_j‖²` with `W_ij = 1` for equal labels.
pub fn laplacian_pairwise(z: &Matrix<f64>, p: &Matrix<f64>, labels: &JointLabels) -> f64 {
    let y = project(z, p);
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            match (labels.label(i), labels.label(j)) {
                (Some(a), Some(b)) if a == b => total += sq(&y[i], &y[j]),
                _ => {}
            }
        }
    }
    0.5 * total
}

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &Matrix<f64>) -> (Vec<f64>, Matrix<f64>) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (mkp, mkq) = (row[p], row[q]);
                    row[p] = c * mkp - s * mkq;
                    row[q] = s * mkp + c * mkq;
                }
                let (row_p, row_q) = (m[p].clone(), m[q].clone());
                for k in 0..n {
                    m[p][k] = c * row_p[k] - s * row_q[k];
                    m[q][k] = s * row_p[k] + c * row_q[k];
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[r][order[c]]);
    (values, vectors)
}

/// Full generalized spectrum of `(A, B)` for SPD `B`, via `B^{-1/2} A B^{-1/2}`.
pub fn generalized_eigenvalues(a: &Matrix<f64>, b: &Matrix<f64>) -> Vec<f64> {
    let n = a.rows();
    let (bvals, bvecs) = jacobi_eigen(b);
    let inv_sqrt: Matrix<f64> = Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| bvecs[(i, k)] * bvecs[(j, k)] / bvals[k].sqrt()).sum::<f64>()
    });
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0f64;
            for k in 0..n {
                for l in 0..n {
                    s += inv_sqrt[(i, k)] * a[(k, l)] * inv_sqrt[(l, j)];
                }
            }
            c[(i, j)] = s;
        }
    }
    c.symmetrize();
    jacobi_eigen(&c).0
}

/// A random oracle instance: sample-row features, a projection and joint
/// labels in which every class appears in the source, at least two classes
/// appear among the selected targets, and roughly a third of the remaining
/// targets are unselected.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub features: Matrix<f64>,
    pub projection: Matrix<f64>,
    pub labels: JointLabels,
}

pub fn random_instance<R: Rng>(rng: &mut R, max_n: usize, max_d: usize, max_classes: usize) -> RandomInstance {
    let classes = rng.gen_range(2..=max_classes.max(2));
    let ns = rng.gen_range((2 * classes).max(4)..=(max_n / 2).max(2 * classes + 1));
    let nt = rng.gen_range((2 * classes).max(4)..=(max_n - ns).max(2 * classes + 1));
    let d = rng.gen_range(2..=max_d.max(2));
    let k = rng.gen_range(1..=d);
    let features = Matrix::from_fn(ns + nt, d, |_, _| StandardNormal.sample(rng));
    let projection = Matrix::from_fn(d, k, |_, _| StandardNormal.sample(rng));
    let mut source: Vec<usize> = (0..ns).map(|i| i % classes).collect();
    for i in (1..ns).rev() {
        let j = rng.gen_range(0..=i);
        source.swap(i, j);
    }
    // The first two targets pin two distinct selected classes so that every
    // selected class has a nonempty complement.
    let target: Vec<Option<usize>> = (0..nt)
        .map(|j| {
            if j < 2 {
                Some(j)
            } else if rng.gen_bool(0.3) {
                None
            } else {
                Some(rng.gen_range(0..classes))
            }
        })
        .collect();
    let labels = JointLabels::new(source, target, classes)
        .expect("generated labels are in range")
        .with_unselected_in_m0(rng.gen_bool(0.7));
    RandomInstance {
        features,
        projection,
        labels,
    }
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// One line of the self-test summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed error for the check.
    pub worst: f64,
    pub tolerance: f64,
}

/// Worst relative error of every objective term's trace form against the
/// brute-force sums, over `instances` random problems.
pub fn objective_term_errors(seed: u64, instances: usize) -> Vec<(&'static str, f64)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 8];
    for _ in 0..instances {
        let inst = random_instance(&mut rng, 60, 16, 4);
        let (z, p, labels) = (&inst.features, &inst.projection, &inst.labels);
        let beta: f64 = rng.gen_range(0.0..1.0);
        let mut report = BuildReport::default();
        let qy = build_label_projection::<f64>(labels).expect("labels valid");
        let qhat = build_complement_matrices::<f64>(labels, &mut report).expect("labels valid");
        let mmd = build_mmd::<f64>(labels, &mut report).expect("labels valid");
        let (qst, qts) = build_cross_domain::<f64>(labels, &mut report).expect("labels valid");
        let lap = build_laplacian::<f64>(labels);
        let cde = cross_domain_error_matrix::<f64>(labels, beta).expect("labels valid");
        // The per-sample form expands to (1−β)·scatter − β·centre terms.
        let mut erm = qy.scaled(1.0 - beta);
        erm.add_scaled(-beta, &qhat).expect("same shape");
        let tr = |a: &Matrix<f64>| trace_form(z, a, p).expect("shapes agree");
        let (push_st, push_ts) = cross_push_away(z, p, labels);
        let pairs = [
            (tr(&qy), within_class_sum(z, p, labels)),
            (tr(&qhat), complement_center_sum(z, p, labels)),
            (tr(&erm), empirical_error(z, p, labels, beta)),
            (tr(&mmd), marginal_mmd(z, p, labels) + conditional_mmd(z, p, labels)),
            (tr(&qst), push_st),
            (tr(&qts), push_ts),
            (tr(&cde), cross_domain_error(z, p, labels, beta)),
            (tr(&lap), laplacian_pairwise(z, p, labels)),
        ];
        for (w, (got, want)) in worst.iter_mut().zip(pairs) {
            *w = w.max(relative_error(got, want, 1e-12));
        }
    }
    let names = [
        "within-class scatter",
        "complement centres",
        "empirical error",
        "mmd",
        "cross push-away source",
        "cross push-away target",
        "cross-domain error",
        "laplacian",
    ];
    names.into_iter().zip(worst).collect()
}

/// Worst eigenvalue deviation from the Jacobi reference, worst residual and
/// worst `‖PᵀBP − I‖_max` over random `(A sym, B SPD)` pairs.
pub fn eigensolver_errors(seed: u64, instances: usize) -> (f64, f64, f64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut eig_err, mut resid, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..instances {
        let m = rng.gen_range(2..=32);
        let k = rng.gen_range(1..=m);
        let g = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
        let mut a = g.t_matmul(&g).expect("square");
        let h = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
        a = a.scaled(0.5);
        a.add_scaled(-1.0, &h.transpose().matmul(&h).expect("square").scaled(0.25))
            .expect("same shape");
        a.symmetrize();
        let r = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
        let mut b = r.t_matmul(&r).expect("square");
        b.add_diag(0.5 * m as f64);
        let sol = solve_generalized(&a, &b, k, 0.0).expect("SPD B");
        let reference = generalized_eigenvalues(&a, &b);
        for (got, want) in sol.eigenvalues.iter().zip(&reference) {
            eig_err = eig_err.max((got - want).abs());
        }
        resid = resid.max(sol.residual);
        let ptbp = sol.projection.congruence(&b).expect("shapes agree");
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((ptbp[(i, j)] - target).abs());
            }
        }
    }
    (eig_err, resid, orth)
}

/// Runs the oracle property suite used by `cdem selftest`.
pub fn selftest(seed: u64) -> Vec<SelfCheck> {
    let mut out: Vec<SelfCheck> = objective_term_errors(seed, 20)
        .into_iter()
        .map(|(name, worst)| SelfCheck {
            name: format!("trace form vs distance sums: {name}"),
            passed: worst <= 1e-8,
            worst,
            tolerance: 1e-8,
        })
        .collect();
    let (eig, resid, orth) = eigensolver_errors(seed, 20);
    for (name, worst, tolerance) in [
        ("eigenvalues vs Jacobi reference", eig, 1e-8),
        ("generalized eigen residual", resid, 1e-6),
        ("B-orthonormality of projection", orth, 1e-6),
    ] {
        out.push(SelfCheck {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
        });
    }
    out
}
