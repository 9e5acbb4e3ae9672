//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL`/`SKIP`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! doubles as a readable checklist.

use std::time::Instant;

use cdem::bench::{emit_report, run_ablation_suite, run_baseline_source_only, run_method, run_suite};
use cdem::curriculum::select;
use cdem::eigsolve::{assemble, assemble_and_solve, solve_generalized};
use cdem::matio::{load_domain_pair, LoadedTask};
use cdem::objectives::{centering_matrix, compose_omega, ComposeOptions};
use cdem::oracle::objective_term_errors;
use cdem::prototype::{combined_pseudo_labels, distance_softmax, fit_prototypes, PseudoLabelTable};
use cdem::synth::{generate, ShiftSpec};
use cdem::trainer::{hyperparams_from, preprocess_pair};
use cdem::{Components, ExperimentConfig, JointLabels, Matrix, ObjectiveMatrices};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(id: u32, title: &str, passed: bool, detail: String) {
    println!(
        "criterion {id} [{}] {title}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}

fn standard_config() -> ExperimentConfig {
    ExperimentConfig {
        pca_dim: 10,
        subspace_dim: 4,
        iterations: 11,
        delta: 0.1,
        ..ExperimentConfig::default()
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng))
}

#[test]
fn criterion_1_objective_terms_match_distance_sums() {
    let start = Instant::now();
    let errors = objective_term_errors(2024, 20);
    let elapsed = start.elapsed().as_secs_f64();
    let worst = errors.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let passed = worst <= 1e-8 && elapsed < 10.0;
    let names: Vec<String> = errors.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    report(
        1,
        "trace forms vs distance-sum oracles, 20 instances",
        passed,
        format!("worst rel err {worst:.2e} (tol 1e-8), {elapsed:.2}s; {}", names.join(", ")),
    );
    assert!(passed);
}

/// Generalized eigenvalues via nalgebra: Cholesky of B, then the symmetric
/// eigenvalues of L⁻¹AL⁻ᵀ.
fn nalgebra_generalized(a: &Matrix<f64>, b: &Matrix<f64>) -> Vec<f64> {
    let m = a.rows();
    let na = DMatrix::from_row_slice(m, m, a.as_slice());
    let nb = DMatrix::from_row_slice(m, m, b.as_slice());
    let l = nb.cholesky().expect("B is SPD").l();
    let l_inv = l.clone().try_inverse().expect("invertible factor");
    let c = &l_inv * na * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    values
}

#[test]
fn criterion_2_eigensolver_matches_dense_reference() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_theta, mut worst_resid, mut worst_orth) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let m = rng.gen_range(2..=32);
        let k = rng.gen_range(1..=m);
        // SPD-ish: a PSD Gram matrix minus a smaller one, so a few eigenvalues may be negative.
        let g = gaussian(&mut rng, m, m);
        let h = gaussian(&mut rng, m, m);
        let mut a = g.t_matmul(&g).unwrap();
        a.add_scaled(-0.3, &h.t_matmul(&h).unwrap()).unwrap();
        a.symmetrize();
        let r = gaussian(&mut rng, m + 3, m);
        let mut b = r.t_matmul(&r).unwrap();
        b.add_diag(0.1);
        b.symmetrize();

        let sol = solve_generalized(&a, &b, k, 0.0).unwrap();
        let reference = nalgebra_generalized(&a, &b);
        for (got, want) in sol.eigenvalues.iter().zip(&reference) {
            worst_theta = worst_theta.max((got - want).abs() / want.abs().max(1.0));
        }
        // ‖A p − θ B p‖ ≤ 1e-6 (‖A‖_F + |θ| ‖B‖_F), computed here from scratch.
        let ap = a.matmul(&sol.projection).unwrap();
        let bp = b.matmul(&sol.projection).unwrap();
        for (j, &theta) in sol.eigenvalues.iter().enumerate() {
            let norm: f64 = (0..m).map(|i| (ap[(i, j)] - theta * bp[(i, j)]).powi(2)).sum::<f64>().sqrt();
            let scale = a.frobenius_norm() + theta.abs() * b.frobenius_norm();
            worst_resid = worst_resid.max(norm / scale);
        }
        let gram = sol.projection.t_matmul(&bp).unwrap();
        worst_orth = worst_orth.max(gram.max_abs_diff(&Matrix::identity(k)));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = worst_theta <= 1e-8 && worst_resid <= 1e-6 && worst_orth <= 1e-6 && elapsed < 5.0;
    report(
        2,
        "generalized eigensolver, 20 random (A, B)",
        passed,
        format!(
            "theta err {worst_theta:.2e} (tol 1e-8), residual {worst_resid:.2e} (tol 1e-6), \
             B-orthonormality {worst_orth:.2e} (tol 1e-6), {elapsed:.2}s"
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_3_projection_satisfies_centering_constraint() {
    let task = generate(&ShiftSpec::standard(3)).unwrap();
    let config = standard_config();
    let (z, _) = preprocess_pair(&task.pair, &config).unwrap();
    // Source labels plus a third of the targets under their source-classifier labels.
    let ns = task.pair.n_source();
    let protos = fit_prototypes(&z.slice_rows(0, ns), task.pair.source_labels().labels(), 2).unwrap();
    let guesses = protos.classify(&z.slice_rows(ns, z.rows()));
    let target: Vec<Option<usize>> = guesses
        .iter()
        .enumerate()
        .map(|(i, &y)| (i % 3 == 0).then_some(y))
        .collect();
    let labels = JointLabels::new(task.pair.source_labels().labels().to_vec(), target, 2).unwrap();
    let parts = ObjectiveMatrices::<f64>::build(&labels).unwrap();
    let hp = hyperparams_from::<f64>(&config).unwrap();
    let omega = compose_omega(&parts, &hp, ComposeOptions::default()).unwrap();
    let sol = assemble_and_solve(&z, &omega, &parts.centering, &hp, config.subspace_dim).unwrap();

    let system = assemble(&z, &omega, &centering_matrix(z.rows()), hp.delta).unwrap();
    let constraint = sol.projection.congruence(&system.rhs).unwrap();
    let deviation = constraint.max_abs_diff(&Matrix::identity(config.subspace_dim));
    let passed = deviation <= 1e-6;
    report(
        3,
        "P'XHX'P = I after assemble_and_solve",
        passed,
        format!("max deviation {deviation:.2e} (tol 1e-6)"),
    );
    assert!(passed);
}

/// Smallest `N` with `N·T ≥ n·t`, clamped to `n_con`, by counting upwards.
fn quota_by_search(n: usize, t: usize, total: usize, n_con: usize) -> usize {
    let mut q = 0;
    while q * total < n * t {
        q += 1;
    }
    q.min(n_con)
}

#[test]
fn criterion_4_curriculum_quotas_are_exact() {
    // Class 0: 10 pseudo-labelled, 8 consistent. Class 1: 7 labelled, 7
    // consistent. Class 2: 5 labelled, none consistent.
    let y: Vec<usize> = [vec![0; 10], vec![1; 7], vec![2; 5]].concat();
    let consistent: Vec<bool> = (0..y.len()).map(|i| !(i == 3 || i == 8 || i >= 17)).collect();
    let n = y.len();
    let confidence: Vec<f64> = (0..n).map(|i| 0.5 + 0.02 * ((i * 7) % n) as f64).collect();
    let p = Matrix::from_fn(n, 3, |i, c| {
        if c == y[i] {
            confidence[i]
        } else {
            (1.0 - confidence[i]) / 2.0
        }
    });
    let table = PseudoLabelTable {
        p_source: p.clone(),
        p_target: p.clone(),
        p,
        y_hat_source: y.clone(),
        y_hat_target: y.clone(),
        y_hat: y.clone(),
        consistent: consistent.clone(),
        selected: vec![false; n],
        confidence,
    };
    let n_tc = [10, 7, 5];
    let n_con = [8, 7, 0];
    let mut mismatches = Vec::new();
    for t in 1..=11 {
        let state = select(&table, &n_tc, t, 11).unwrap();
        let expected: Vec<usize> = (0..3).map(|c| quota_by_search(n_tc[c], t, 11, n_con[c])).collect();
        let picked: Vec<usize> = (0..3)
            .map(|c| state.selected.iter().filter(|&&i| y[i] == c).count())
            .collect();
        if state.quotas != expected || picked != expected || state.selected.iter().any(|&i| !consistent[i]) {
            mismatches.push(format!("t={t}: got {:?}, want {expected:?}", state.quotas));
        }
    }
    let passed = mismatches.is_empty();
    report(
        4,
        "curriculum quotas for t = 1..11 (clamp and zero-consistent class)",
        passed,
        if passed {
            "all 33 quotas equal".into()
        } else {
            mismatches.join("; ")
        },
    );
    assert!(passed);
}

#[test]
fn criterion_5_pseudo_label_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let total = 11;
    let (mut worst_mix, mut worst_rows, mut collapse_exact) = (0.0f64, 0.0f64, true);
    for _ in 0..10 {
        let n = rng.gen_range(3..30);
        let c = rng.gen_range(2..6);
        let centers = gaussian(&mut rng, c, 4);
        let pts = gaussian(&mut rng, n, 4);
        let others = gaussian(&mut rng, c, 4);
        let p_s = distance_softmax(&centers, &pts).unwrap();
        let p_t = distance_softmax(&others, &pts).unwrap();
        for t in 1..=total {
            let table = combined_pseudo_labels(&p_s, &p_t, t, total).unwrap();
            let w = t as f64 / total as f64;
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..c {
                    let want = (1.0 - w) * p_s[(i, j)] + w * p_t[(i, j)];
                    worst_mix = worst_mix.max((table.p[(i, j)] - want).abs());
                    row += table.p[(i, j)];
                }
                worst_rows = worst_rows.max((row - 1.0).abs());
                for m in [&p_s, &p_t] {
                    worst_rows = worst_rows.max((m.row(i).iter().sum::<f64>() - 1.0).abs());
                }
            }
            if t == total {
                collapse_exact &= table.p.as_slice() == p_t.as_slice();
            }
        }
    }
    let passed = worst_mix <= 1e-12 && worst_rows <= 1e-9 && collapse_exact;
    report(
        5,
        "combined pseudo-label probabilities",
        passed,
        format!(
            "mixture err {worst_mix:.2e} (tol 1e-12), row-sum err {worst_rows:.2e} (tol 1e-9), \
             t=T equals p_t: {collapse_exact}"
        ),
    );
    assert!(passed);
}

/// Nearest source class mean on the preprocessed features, written out
/// independently of the prototype module.
fn nearest_mean_accuracy(task: &cdem::synth::SyntheticTask, config: &ExperimentConfig) -> f64 {
    let (z, _) = preprocess_pair(&task.pair, config).unwrap();
    let ns = task.pair.n_source();
    let src = task.pair.source_labels().labels();
    let mut means = vec![vec![0.0; z.cols()]; 2];
    let mut counts = [0.0; 2];
    for i in 0..ns {
        counts[src[i]] += 1.0;
        for j in 0..z.cols() {
            means[src[i]][j] += z[(i, j)];
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|v| *v /= counts[c]);
    }
    let truth = task.target_labels.labels();
    let correct = (0..task.pair.n_target())
        .filter(|&i| {
            let row = z.row(ns + i);
            let d: Vec<f64> = means
                .iter()
                .map(|m| m.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            let pred = usize::from(d[1] < d[0]);
            pred == truth[i]
        })
        .count();
    100.0 * correct as f64 / task.pair.n_target() as f64
}

#[test]
fn criterion_6_synthetic_adaptation_beats_baseline() {
    let start = Instant::now();
    let task = generate(&ShiftSpec::standard(0)).unwrap();
    let config = standard_config();
    let baseline = run_baseline_source_only("synthetic", &task.pair, Some(&task.target_labels), &config)
        .unwrap()
        .accuracy
        .unwrap();
    let oracle_baseline = nearest_mean_accuracy(&task, &config);
    let cdem = run_method("synthetic", &task.pair, Some(&task.target_labels), &config)
        .unwrap()
        .accuracy
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let passed = (baseline - oracle_baseline).abs() < 1e-9
        && cdem >= baseline + 10.0
        && cdem >= 95.0
        && elapsed < 30.0;
    report(
        6,
        "standard synthetic shift",
        passed,
        format!(
            "baseline {baseline:.1}% (oracle {oracle_baseline:.1}%), CDEM {cdem:.1}% \
             (need >= baseline + 10 and >= 95), {elapsed:.2}s"
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_ablation_trend_over_seeds() {
    let config = standard_config();
    let mut sums = [0.0; 4];
    for seed in 0..5 {
        let task = generate(&ShiftSpec::standard(seed)).unwrap();
        let results = run_ablation_suite("synthetic", &task.pair, Some(&task.target_labels), &config).unwrap();
        for (s, r) in sums.iter_mut().zip(&results) {
            *s += r.accuracy.unwrap();
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 5.0).collect();
    let (erm, erm_da, full) = (means[0], means[1], means[3]);
    let passed = erm <= erm_da && erm_da <= full;
    report(
        7,
        "ablation means over seeds 0..4",
        passed,
        format!(
            "ERM {erm:.2}% <= ERM+DA {erm_da:.2}% <= full {full:.2}% (ERM+DA+CDE {:.2}%)",
            means[2]
        ),
    );
    assert!(passed);
}

/// Runs only when `CDEM_OFFICE_CALTECH_CONFIG` names a config with the four
/// DeCaf6 domains registered as `domain.C|A|W|D.*`.
#[test]
fn criterion_8_office_caltech_average() {
    let Ok(path) = std::env::var("CDEM_OFFICE_CALTECH_CONFIG") else {
        println!("criterion 8 [SKIP] Office-Caltech DeCaf6 average: CDEM_OFFICE_CALTECH_CONFIG not set");
        return;
    };
    let mut config = ExperimentConfig::from_file(&path).unwrap();
    config.pca_dim = 128;
    config.subspace_dim = 32;
    config.iterations = 11;
    config.delta = 1.0;
    config.components = Components::ALL;
    let domains = ["C", "A", "W", "D"];
    let names: Vec<String> = domains
        .iter()
        .flat_map(|s| domains.iter().filter(move |t| *t != s).map(move |t| format!("{s}-{t}")))
        .collect();
    let tasks: Vec<LoadedTask> = names.iter().map(|n| load_domain_pair(&config, Some(n)).unwrap()).collect();
    let results = run_suite(&tasks, &[config], false).unwrap();
    let average = results.iter().map(|r| r.accuracy.expect("target labels required")).sum::<f64>()
        / results.len() as f64;
    let passed = (average - 94.6).abs() <= 2.0;
    report(
        8,
        "Office-Caltech DeCaf6 average over 12 tasks",
        passed,
        format!("average {average:.1}% (reference 94.6 +/- 2.0)"),
    );
    assert!(passed);
}

#[test]
fn criterion_9_reports_are_byte_identical() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let task = generate(&ShiftSpec::standard(11)).unwrap();
        let loaded = LoadedTask {
            name: "synthetic".into(),
            pair: task.pair,
            target_labels: Some(task.target_labels),
        };
        let configs: Vec<ExperimentConfig> = cdem::bench::ABLATIONS
            .iter()
            .map(|&components| ExperimentConfig {
                components,
                seed: 11,
                ..standard_config()
            })
            .collect();
        let results = run_suite(&[loaded], &configs, true).unwrap();
        emit_report(&results, dir.path()).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let first = run();
    let second = run();
    let passed = first == second && first.len() >= 3;
    report(
        9,
        "determinism of report files",
        passed,
        format!("{} files compared, identical: {}", first.len(), first == second),
    );
    assert!(passed);
}
