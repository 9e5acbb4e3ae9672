use cdem::matio::read_matrix;
use cdem::synth::{generate, ShiftSpec};
use cdem::trainer::run_cdem;
use cdem::{Components, DomainPair, ExperimentConfig};

fn config() -> ExperimentConfig {
    ExperimentConfig {
        pca_dim: 10,
        subspace_dim: 4,
        iterations: 5,
        delta: 0.1,
        ..ExperimentConfig::default()
    }
}

#[test]
fn identical_domains_are_labelled_perfectly() {
    let task = generate(&ShiftSpec::standard(3)).unwrap();
    let pair = DomainPair::new(
        task.pair.source().clone(),
        task.pair.source_labels().clone(),
        task.pair.source().clone(),
    )
    .unwrap();
    let mut result = run_cdem(&pair, &config()).unwrap();
    let acc = result.evaluate(pair.source_labels()).unwrap();
    assert_eq!(acc, 100.0);
}

#[test]
fn all_weights_zero_with_full_subspace_runs() {
    let task = generate(&ShiftSpec {
        n: 60,
        dim: 5,
        ..ShiftSpec::standard(4)
    })
    .unwrap();
    let cfg = ExperimentConfig {
        pca_dim: 5,
        subspace_dim: 5,
        iterations: 3,
        beta: 0.0,
        lambda: 0.0,
        gamma: 0.0,
        eta: 0.0,
        delta: 0.1,
        ..ExperimentConfig::default()
    };
    let mut result = run_cdem(&task.pair, &cfg).unwrap();
    assert_eq!(result.projection.shape(), (5, 5));
    assert_eq!(result.iterations.len(), 3);
    assert_eq!(result.predictions.len(), 60);
    result.evaluate(&task.target_labels).unwrap();
}

#[test]
fn records_cover_every_iteration_and_selection_grows() {
    let task = generate(&ShiftSpec::standard(5)).unwrap();
    let cfg = ExperimentConfig {
        iterations: 7,
        ..config()
    };
    let mut result = run_cdem(&task.pair, &cfg).unwrap();
    result.evaluate(&task.target_labels).unwrap();
    let its = &result.iterations;
    assert_eq!(its.len(), 7);
    for (i, rec) in its.iter().enumerate() {
        assert_eq!(rec.iteration, i + 1);
        assert!(rec.eigen_residual < 1e-6);
        assert!(rec.objective.is_finite());
        assert!(rec.accuracy.is_some());
        assert_eq!(rec.quotas.len(), 2);
    }
    let selected: Vec<usize> = its.iter().map(|r| r.selected_per_class.iter().sum()).collect();
    assert!(selected.windows(2).all(|w| w[1] >= w[0]), "{selected:?}");
    assert_eq!(its.last().unwrap().pseudo_labels, result.predictions);
}

#[test]
fn source_classifier_error_on_target_does_not_grow() {
    let task = generate(&ShiftSpec::standard(6)).unwrap();
    let mut result = run_cdem(&task.pair, &config()).unwrap();
    result.evaluate(&task.target_labels).unwrap();
    let errs: Vec<f64> = result
        .iterations
        .iter()
        .map(|r| r.source_on_target_true.unwrap())
        .collect();
    assert!(errs.last().unwrap() <= errs.first().unwrap(), "{errs:?}");
}

#[test]
fn repeated_runs_are_identical() {
    let task = generate(&ShiftSpec::standard(7)).unwrap();
    let a = run_cdem(&task.pair, &config()).unwrap();
    let b = run_cdem(&task.pair, &config()).unwrap();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.projection.as_slice(), b.projection.as_slice());
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn single_precision_run_completes() {
    let task = generate(&ShiftSpec::standard(8)).unwrap();
    let pair32: DomainPair<f32> = task.pair.cast();
    let mut result = run_cdem(&pair32, &config()).unwrap();
    assert!(result.evaluate(&task.target_labels).unwrap() > 90.0);
}

#[test]
fn erm_only_differs_from_full_objective() {
    let task = generate(&ShiftSpec::standard(9)).unwrap();
    let full = run_cdem(&task.pair, &config()).unwrap();
    let erm = run_cdem(
        &task.pair,
        &ExperimentConfig {
            components: Components::from_names(&["erm".to_string()]).unwrap(),
            ..config()
        },
    )
    .unwrap();
    assert_ne!(full.projection.as_slice(), erm.projection.as_slice());
}

#[test]
fn matrix_dump_writes_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let task = generate(&ShiftSpec {
        n: 40,
        ..ShiftSpec::standard(10)
    })
    .unwrap();
    let cfg = ExperimentConfig {
        iterations: 2,
        dump_dir: Some(dir.path().to_path_buf()),
        ..config()
    };
    run_cdem(&task.pair, &cfg).unwrap();
    for t in 1..=2 {
        let omega = read_matrix(dir.path().join(format!("iter{t:02}_omega.cdm"))).unwrap();
        assert_eq!(omega.shape(), (80, 80));
        assert!(omega.asymmetry() < 1e-12);
        let p = read_matrix(dir.path().join(format!("iter{t:02}_projection.cdm"))).unwrap();
        assert_eq!(p.shape(), (10, 4));
    }
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert!(files > 4, "only {files} dump files");
}

#[test]
fn too_few_targets_for_the_classes_fails() {
    let task = generate(&ShiftSpec::standard(11)).unwrap();
    let pair = DomainPair::new(
        task.pair.source().clone(),
        task.pair.source_labels().clone(),
        task.pair.target().select_rows(&[0]),
    )
    .unwrap();
    assert!(run_cdem(&pair, &config()).is_err());
}
