use cdem::bench::{
    best_point, format_csv_report, grid_search, method_averages, run_parallel, run_suite,
    SOURCE_ONLY, ABLATIONS,
};
use cdem::matio::LoadedTask;
use cdem::synth::{generate, ShiftSpec};
use cdem::ExperimentConfig;

fn task(name: &str, seed: u64) -> LoadedTask {
    let t = generate(&ShiftSpec {
        n: 60,
        ..ShiftSpec::standard(seed)
    })
    .unwrap();
    LoadedTask {
        name: name.into(),
        pair: t.pair,
        target_labels: Some(t.target_labels),
    }
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        pca_dim: 10,
        subspace_dim: 4,
        iterations: 3,
        delta: 0.1,
        ..ExperimentConfig::default()
    }
}

#[test]
fn suite_results_follow_task_then_method_order() {
    let tasks = [task("A-B", 1), task("B-A", 2)];
    let configs: Vec<ExperimentConfig> = ABLATIONS
        .iter()
        .map(|&components| ExperimentConfig {
            components,
            ..config()
        })
        .collect();
    let results = run_suite(&tasks, &configs, true).unwrap();
    assert_eq!(results.len(), 2 * 5);
    assert_eq!(results[0].task, "A-B");
    assert_eq!(results[0].method, SOURCE_ONLY);
    assert_eq!(results[5].task, "B-A");
    assert!(results.iter().all(|r| r.accuracy.is_some()));

    let averages = method_averages(&results);
    assert_eq!(averages.len(), 5);
    assert!(averages.iter().all(|(_, _, n)| *n == 2));
    let csv = format_csv_report(&results);
    assert_eq!(csv.lines().filter(|l| l.starts_with("average,")).count(), 5);
}

#[test]
fn parallel_map_preserves_order() {
    let out = run_parallel((0..50).collect(), |i: usize| Ok(i * i)).unwrap();
    assert_eq!(out, (0..50).map(|i| i * i).collect::<Vec<_>>());
    let failed = run_parallel(vec![1, 2, 3], |i: i32| {
        if i == 2 {
            Err(cdem::CdemError::Data("boom".into()))
        } else {
            Ok(i)
        }
    });
    assert!(failed.is_err());
}

#[test]
fn grid_covers_cartesian_product() {
    let t = task("A-B", 3);
    let points = grid_search(&t, &config(), &["beta".into(), "gamma".into()]).unwrap();
    assert_eq!(points.len(), 36);
    let best = best_point(&points).unwrap();
    assert!(points.iter().all(|p| p.accuracy <= best.accuracy));
    assert!(grid_search(&t, &config(), &["nonsense".into()]).is_err());
}
