//! Seeded sweeps over scenario parameters.
//!
//! Each sweep point is a scenario, each trial a sampled network instance and
//! each algorithm one row. A trial's instance seed is
//! `mix_words([master, trial])` at every point, so all points and algorithms
//! of a trial see common random numbers. Row seeds, which drive the
//! randomized algorithms, are
//! `mix_words([master, point, trial, tag_hash(algorithm)])` with
//! [`mix_words`] the SplitMix64 fold, so adding an algorithm leaves existing
//! rows unchanged.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::{Map, Value};

use crate::baselines::{run_baseline, BaselineKind, HcoSettings};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::optimizer::{run_algorithm1, AoSettings, IterationTrace};
use crate::rng::{mix_words, rng_from_seed, tag_hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Convergence,
    BaselineCompare,
    UsersSweep,
    BandwidthAntennaSweep,
    NodeSweep,
    DatasizeCapacitySweep,
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        Self::Convergence,
        Self::BaselineCompare,
        Self::UsersSweep,
        Self::BandwidthAntennaSweep,
        Self::NodeSweep,
        Self::DatasizeCapacitySweep,
        Self::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::BaselineCompare => "baseline_compare",
            Self::UsersSweep => "users_sweep",
            Self::BandwidthAntennaSweep => "bandwidth_antenna_sweep",
            Self::NodeSweep => "node_sweep",
            Self::DatasizeCapacitySweep => "datasize_capacity_sweep",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::ValidationError { field: "experiment".into(), reason: format!("unknown experiment `{s}`") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Proposed,
    Baseline(BaselineKind),
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Self::Proposed,
        Self::Baseline(BaselineKind::Ftp),
        Self::Baseline(BaselineKind::Zfbf),
        Self::Baseline(BaselineKind::Ro),
        Self::Baseline(BaselineKind::Acr),
        Self::Baseline(BaselineKind::Hco),
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Proposed => "ao",
            Self::Baseline(b) => b.tag(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ao") {
            return Ok(Self::Proposed);
        }
        s.parse().map(Self::Baseline)
    }
}

/// One swept parameter.
///
/// Besides any scenario key (numeric values in storage units), these
/// composite axes are understood: `users` (K and L), `nt` (both antenna
/// counts), `bandwidth_mhz` (B1 and B2), `z_ms` (both delay budgets),
/// `data_scale` (multiplies both data-size ranges), `f_gro_ghz`, `f_sat_ghz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: &[f64]) -> Self {
        Self { name: name.to_string(), values: values.to_vec() }
    }
}

/// Sets one axis coordinate on `cfg`; `base` supplies the unscaled ranges.
pub fn apply_axis(cfg: &mut ScenarioConfig, base: &ScenarioConfig, name: &str, v: f64) -> Result<()> {
    let count = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::ValidationError { field: name.to_string(), reason: format!("{v} is not a count") })
        }
    };
    match name {
        "users" => {
            cfg.k = count(v)?;
            cfg.l = count(v)?;
        }
        "nt" => {
            cfg.nt_g = count(v)?;
            cfg.nt_s = count(v)?;
        }
        "bandwidth_mhz" => {
            cfg.b1 = v * 1e6;
            cfg.b2 = v * 1e6;
        }
        "z_ms" => {
            cfg.z_g = v * 1e-3;
            cfg.z_s = v * 1e-3;
        }
        "data_scale" => {
            cfg.gue_data = (base.gue_data.0 * v, base.gue_data.1 * v);
            cfg.sue_data = (base.sue_data.0 * v, base.sue_data.1 * v);
        }
        "f_gro_ghz" => cfg.f_gro = v * 1e9,
        "f_sat_ghz" => cfg.f_sat = v * 1e9,
        _ => {
            let num = if v >= 0.0 && v.fract() == 0.0 && v < 9e15 {
                serde_json::Number::from(v as u64)
            } else {
                serde_json::Number::from_f64(v)
                    .ok_or_else(|| Error::ValidationError { field: name.to_string(), reason: "not finite".into() })?
            };
            let mut map = Map::new();
            map.insert(name.to_string(), Value::Number(num));
            cfg.apply(&map)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    /// Full grid over all axes, first axis slowest.
    pub axes: Vec<Axis>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
}

impl ExperimentSpec {
    /// Default sweep for an experiment. `custom` has no axes: one point at the scenario itself.
    pub fn preset(id: ExperimentId, trials: usize) -> Self {
        let ao = vec![Algorithm::Proposed];
        let (axes, algorithms) = match id {
            ExperimentId::Convergence => (vec![Axis::new("users", &[6.0, 8.0, 10.0])], ao),
            ExperimentId::BaselineCompare => {
                (vec![Axis::new("z_ms", &[60.0, 80.0, 100.0, 120.0, 140.0])], Algorithm::ALL.to_vec())
            }
            ExperimentId::UsersSweep => {
                (vec![Axis::new("l", &[5.0, 10.0, 15.0]), Axis::new("k", &[4.0, 6.0, 8.0, 10.0, 12.0])], ao)
            }
            ExperimentId::BandwidthAntennaSweep => (
                vec![Axis::new("nt", &[16.0, 24.0, 32.0]), Axis::new("bandwidth_mhz", &[10.0, 15.0, 20.0, 25.0, 30.0])],
                ao,
            ),
            ExperimentId::NodeSweep => {
                (vec![Axis::new("m", &[1.0, 2.0, 3.0]), Axis::new("n", &[1.0, 2.0, 3.0, 4.0, 5.0])], ao)
            }
            ExperimentId::DatasizeCapacitySweep => (
                vec![
                    // capacities low enough for the base stations to saturate
                    Axis::new("f_gro_ghz", &[1.5, 2.25]),
                    Axis::new("f_sat_ghz", &[4.0, 6.0]),
                    Axis::new("data_scale", &[0.6, 0.8, 1.0, 1.2, 1.4]),
                ],
                ao,
            ),
            ExperimentId::Custom => (vec![], ao),
        };
        Self { id, axes, trials, algorithms }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::ValidationError { field: field.into(), reason: reason.into() });
        if self.trials == 0 {
            return bad("seeds", "need at least one trial");
        }
        if self.algorithms.is_empty() {
            return bad("algorithms", "empty algorithm list");
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return bad(&a.name, "axis has no values");
        }
        Ok(())
    }

    /// Coordinates of every grid point, first axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![vec![]], |acc, axis| {
            acc.iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect()
        })
    }

    /// Scenario of each grid point.
    pub fn scenarios(&self, base: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
        self.points()
            .iter()
            .map(|p| {
                let mut cfg = base.clone();
                for (axis, &v) in self.axes.iter().zip(p) {
                    apply_axis(&mut cfg, base, &axis.name, v)?;
                }
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub ao: AoSettings,
    pub hco: HcoSettings,
    /// Worker threads; rows are merged in grid order regardless.
    pub threads: usize,
    /// Fill the wall-clock column. Off by default since it breaks byte-identical reruns.
    pub record_wallclock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            ao: AoSettings::default(),
            hco: HcoSettings::default(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            record_wallclock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub algorithm: Algorithm,
    pub point: usize,
    pub coords: Vec<f64>,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the run ended without a feasible plan.
    pub xi: Option<f64>,
    pub wallclock_s: Option<f64>,
    /// Trace file relative to the output directory.
    pub trace_file: Option<String>,
    pub trace: Option<IterationTrace>,
    /// Why the row is infeasible.
    pub error: Option<Error>,
}

impl ResultRow {
    pub fn feasible(&self) -> bool {
        self.xi.is_some()
    }
}

pub fn instance_seed(master: u64, trial: usize) -> u64 {
    mix_words(&[master, trial as u64])
}

pub fn row_seed(master: u64, point: usize, trial: usize, algorithm: Algorithm) -> u64 {
    mix_words(&[master, point as u64, trial as u64, tag_hash(algorithm.tag())])
}

struct Job {
    point: usize,
    trial: usize,
}

fn run_job(spec: &ExperimentSpec, scenario: &ScenarioConfig, coords: &[f64], job: &Job, opts: &RunOptions) -> Vec<ResultRow> {
    let master = scenario.seed;
    let inst = NetworkInstance::sample(scenario, instance_seed(master, job.trial));
    spec.algorithms
        .iter()
        .map(|&algorithm| {
            let seed = row_seed(master, job.point, job.trial, algorithm);
            let start = Instant::now();
            let outcome = inst.as_ref().map_err(Clone::clone).and_then(|inst| match algorithm {
                Algorithm::Proposed => run_algorithm1(inst, scenario, &opts.ao).map(|(_, r, t)| (r.xi, Some(t))),
                Algorithm::Baseline(kind) => {
                    let mut rng = rng_from_seed(seed);
                    run_baseline(kind, &mut rng, inst, scenario, &opts.ao, &opts.hco).map(|(_, r)| (r.xi, None))
                }
            });
            let wall = start.elapsed().as_secs_f64();
            let (xi, trace, error) = match outcome {
                Ok((xi, trace)) => (Some(xi), trace, None),
                Err(e) => {
                    log::warn!("{} point {} trial {} {}: {e}", spec.id, job.point, job.trial, algorithm);
                    (None, None, Some(e))
                }
            };
            let keep_trace = spec.id == ExperimentId::Convergence && trace.is_some();
            ResultRow {
                experiment: spec.id,
                algorithm,
                point: job.point,
                coords: coords.to_vec(),
                trial: job.trial,
                seed,
                xi,
                wallclock_s: opts.record_wallclock.then_some(wall),
                trace_file: keep_trace.then(|| format!("traces/{}_p{}_t{}.csv", algorithm, job.point, job.trial)),
                trace: if keep_trace { trace } else { None },
                error,
            }
        })
        .collect()
}

/// Runs every (point, trial, algorithm) row without touching the disk.
/// Per-row failures are recorded as infeasible rows.
pub fn execute(spec: &ExperimentSpec, base: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    base.validate()?;
    let scenarios = spec.scenarios(base)?;
    let points = spec.points();
    let jobs: Vec<Job> =
        (0..points.len()).flat_map(|point| (0..spec.trials).map(move |trial| Job { point, trial })).collect();
    let results: Mutex<Vec<Option<Vec<ResultRow>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(job) = jobs.get(i) else { break };
        let rows = run_job(spec, &scenarios[job.point], &points[job.point], job, opts);
        results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(rows);
    };
    let threads = opts.threads.clamp(1, jobs.len().max(1));
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(work);
            }
        });
    }
    let results = results.into_inner().unwrap_or_else(|e| e.into_inner());
    Ok(results.into_iter().flatten().flatten().collect())
}

fn fmt_f64(x: f64) -> String {
    // shortest roundtrip form
    format!("{x:?}")
}

/// CSV of result rows; columns are experiment, algorithm, the axes, point,
/// trial, seed, xi_joules, feasible, wallclock_s, trace.
pub fn rows_to_csv(spec: &ExperimentSpec, rows: &[ResultRow]) -> String {
    let mut out = String::from("experiment,algorithm");
    for a in &spec.axes {
        out.push(',');
        out.push_str(&a.name);
    }
    out.push_str(",point,trial,seed,xi_joules,feasible,wallclock_s,trace\n");
    for r in rows {
        let mut cols = vec![r.experiment.name().to_string(), r.algorithm.tag().to_string()];
        cols.extend(r.coords.iter().map(|&c| fmt_f64(c)));
        cols.push(r.point.to_string());
        cols.push(r.trial.to_string());
        cols.push(r.seed.to_string());
        cols.push(r.xi.map(fmt_f64).unwrap_or_default());
        cols.push(r.feasible().to_string());
        cols.push(r.wallclock_s.map(fmt_f64).unwrap_or_default());
        cols.push(r.trace_file.clone().unwrap_or_default());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn trace_to_csv(trace: &IterationTrace) -> String {
    let mut out = String::from("t,xi_joules,offload,beams,power,resource,rank_one_min,sca_steps\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            fmt_f64(r.xi),
            r.offload,
            r.beams,
            r.power,
            r.resource,
            fmt_f64(r.rank_one_min),
            r.sca_steps
        ));
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Runs the experiment and writes `<id>.csv`, `<id>_summary.csv` and, for
/// convergence, one trace file per row under `traces/`.
pub fn run_experiment(spec: &ExperimentSpec, base: &ScenarioConfig, out_dir: &Path, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    let rows = execute(spec, base, opts)?;
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join(format!("{}.csv", spec.id)), &rows_to_csv(spec, &rows))?;
    let summary = super::summary::summarize(&rows)?;
    write_file(&out_dir.join(format!("{}_summary.csv", spec.id)), &super::summary::summary_to_csv(spec, &summary))?;
    for r in &rows {
        if let (Some(file), Some(trace)) = (&r.trace_file, &r.trace) {
            let path = out_dir.join(file);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            write_file(&path, &trace_to_csv(trace))?;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_first_axis_slowest() {
        let spec = ExperimentSpec {
            id: ExperimentId::Custom,
            axes: vec![Axis::new("m", &[1.0, 2.0]), Axis::new("n", &[1.0, 2.0, 3.0])],
            trials: 1,
            algorithms: vec![Algorithm::Proposed],
        };
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![1.0, 1.0]);
        assert_eq!(pts[1], vec![1.0, 2.0]);
        assert_eq!(pts[5], vec![2.0, 3.0]);
        let sc = spec.scenarios(&ScenarioConfig::default()).unwrap();
        assert_eq!((sc[4].m, sc[4].n), (2, 2));
        assert_eq!(ExperimentSpec { axes: vec![], ..spec }.points(), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn composite_axes() {
        let base = ScenarioConfig::default();
        let mut cfg = base.clone();
        apply_axis(&mut cfg, &base, "z_ms", 60.0).unwrap();
        apply_axis(&mut cfg, &base, "data_scale", 2.0).unwrap();
        apply_axis(&mut cfg, &base, "users", 4.0).unwrap();
        apply_axis(&mut cfg, &base, "f_gro", 4e10).unwrap();
        assert_eq!((cfg.z_g, cfg.z_s), (0.06, 0.06));
        assert_eq!(cfg.gue_data.1, 2.0 * base.gue_data.1);
        assert_eq!((cfg.k, cfg.l), (4, 4));
        assert_eq!(cfg.f_gro, 4e10);
        assert!(apply_axis(&mut cfg, &base, "users", 2.5).is_err());
        assert!(apply_axis(&mut cfg, &base, "no_such_key", 1.0).is_err());
    }

    #[test]
    fn row_seeds_do_not_depend_on_other_algorithms() {
        let a = row_seed(7, 1, 2, Algorithm::Proposed);
        assert_ne!(a, row_seed(7, 1, 2, Algorithm::Baseline(BaselineKind::Ro)));
        assert_ne!(a, row_seed(7, 2, 1, Algorithm::Proposed));
        assert_eq!(a, row_seed(7, 1, 2, Algorithm::Proposed));
    }

    #[test]
    fn ids_and_tags_parse() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
            assert!(ExperimentSpec::preset(id, 1).validate().is_ok());
        }
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }

    #[test]
    fn empty_spec_is_rejected() {
        let mut spec = ExperimentSpec::preset(ExperimentId::Custom, 0);
        assert!(spec.validate().is_err());
        spec.trials = 1;
        spec.axes.push(Axis::new("k", &[]));
        assert!(spec.validate().is_err());
    }
}
