use satcomp::harness::{execute, run_experiment, summarize, Algorithm, Axis, ExperimentId, ExperimentSpec, RunOptions, ScenarioConfig};

fn small() -> ScenarioConfig {
    ScenarioConfig { k: 4, l: 3, m: 2, n: 2, seed: 11, ..ScenarioConfig::default() }
}

#[test]
fn convergence_writes_one_monotone_trace_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec { axes: vec![], ..ExperimentSpec::preset(ExperimentId::Convergence, 3) };
    let rows = run_experiment(&spec, &small(), dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let file = r.trace_file.as_ref().expect("trace reference");
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        let xi: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(!xi.is_empty());
        assert!(xi.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)), "{xi:?}");
        assert_eq!(*xi.last().unwrap(), r.xi.unwrap());
    }
}

#[test]
fn baseline_compare_has_six_curves_per_point() {
    let spec = ExperimentSpec::preset(ExperimentId::BaselineCompare, 1);
    let rows = execute(&spec, &small(), &RunOptions::default()).unwrap();
    assert_eq!(rows.len(), 5 * 6);
    let summary = summarize(&rows).unwrap();
    assert_eq!(summary.len(), 30);
    for point in 0..5 {
        let algs: Vec<Algorithm> = summary.iter().filter(|s| s.point == point).map(|s| s.algorithm).collect();
        assert_eq!(algs, Algorithm::ALL.to_vec());
    }
}

#[test]
fn infeasible_rows_do_not_abort_the_sweep() {
    let spec = ExperimentSpec {
        id: ExperimentId::Custom,
        axes: vec![Axis::new("z_ms", &[2.0, 100.0])],
        trials: 2,
        algorithms: vec![Algorithm::Proposed],
    };
    let rows = execute(&spec, &small(), &RunOptions::default()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().filter(|r| r.point == 0).all(|r| !r.feasible() && r.error.is_some()));
    assert!(rows.iter().filter(|r| r.point == 1).all(|r| r.feasible()));
    let s = summarize(&rows).unwrap();
    assert_eq!((s[0].count, s[0].infeasible, s[0].mean), (0, 2, None));
    assert!(s.iter().all(|r| r.mean.is_none_or(f64::is_finite)));
}

#[test]
fn thread_count_does_not_change_rows() {
    let spec = ExperimentSpec {
        id: ExperimentId::Custom,
        axes: vec![Axis::new("users", &[2.0, 3.0])],
        trials: 2,
        algorithms: vec![Algorithm::Proposed, "ro".parse().unwrap()],
    };
    let one = execute(&spec, &small(), &RunOptions { threads: 1, ..RunOptions::default() }).unwrap();
    let four = execute(&spec, &small(), &RunOptions { threads: 4, ..RunOptions::default() }).unwrap();
    assert_eq!(one, four);
}
