//! Comparison algorithms, each the alternating loop with one block replaced.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::costmodel::{CostReport, GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::optimizer::{
    build_options, initial_plan, run_algorithm1, run_from, AoSettings, OptionCompute, ReceiverKind, Selection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    /// Powers fixed at half budget.
    Ftp,
    /// Zero-forcing receivers.
    Zfbf,
    /// Random offloading.
    Ro,
    /// Compute fixed at the per-user averages.
    Acr,
    /// Penalized binary particle swarm over the offloading selection.
    Hco,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [Self::Ftp, Self::Zfbf, Self::Ro, Self::Acr, Self::Hco];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Ftp => "ftp",
            Self::Zfbf => "zfbf",
            Self::Ro => "ro",
            Self::Acr => "acr",
            Self::Hco => "hco",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::ValidationError { field: "algorithm".into(), reason: format!("unknown baseline `{s}`") })
    }
}

/// Particle swarm settings.
#[derive(Debug, Clone, PartialEq)]
pub struct HcoSettings {
    pub swarm: usize,
    pub iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Penalty per unit violation, in multiples of a reference energy.
    pub penalty: f64,
    /// Velocity clamp.
    pub v_max: f64,
}

impl Default for HcoSettings {
    fn default() -> Self {
        Self { swarm: 50, iters: 100, inertia: 0.7, cognitive: 1.5, social: 1.5, penalty: 1e3, v_max: 4.0 }
    }
}

fn finish(res: Result<(Plan, CostReport, crate::optimizer::IterationTrace)>) -> Result<(Plan, CostReport)> {
    res.map(|(p, r, _)| (p, r))
}

pub fn run_ftp(inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<(Plan, CostReport)> {
    let mut s = settings.clone();
    s.freeze.powers = true;
    finish(run_algorithm1(inst, scenario, &s))
}

pub fn run_zfbf(inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<(Plan, CostReport)> {
    let mut s = settings.clone();
    s.receivers = ReceiverKind::ZeroForcing;
    finish(run_algorithm1(inst, scenario, &s))
}

pub fn run_acr(inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<(Plan, CostReport)> {
    let mut s = settings.clone();
    s.freeze.compute = true;
    finish(run_algorithm1(inst, scenario, &s))
}

/// Uniform choice among each user's nodes.
pub fn random_selection(rng: &mut impl Rng, inst: &NetworkInstance) -> Selection {
    let (m, n) = (inst.m(), inst.n());
    Selection {
        gue: (0..inst.k())
            .map(|_| {
                let i = rng.random_range(0..m + n);
                if i < m { GueTarget::Bs(i) } else { GueTarget::Sat(i - m) }
            })
            .collect(),
        sue: (0..inst.l()).map(|_| rng.random_range(0..n)).collect(),
    }
}

/// The alternating loop with the selection fixed and closed-form receivers,
/// shared by the random and swarm baselines. `passes` caps the loop.
pub fn evaluate_selection(
    inst: &NetworkInstance,
    scenario: &ScenarioConfig,
    sel: &Selection,
    settings: &AoSettings,
    passes: usize,
) -> Result<(Plan, CostReport)> {
    let mut s = settings.clone();
    s.freeze.selection = Some(sel.clone());
    s.receivers = ReceiverKind::ClosedForm;
    s.max_iter = passes;
    finish(run_from(inst, scenario, &s, initial_plan(inst, scenario)?))
}

pub fn run_ro(rng: &mut impl Rng, inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<(Plan, CostReport)> {
    let sel = random_selection(rng, inst);
    evaluate_selection(inst, scenario, &sel, settings, settings.max_iter)
}

/// Bit layout of a selection: each GUE's `M + N` options, then each SUE's `N`.
fn row_lengths(inst: &NetworkInstance) -> Vec<usize> {
    let mut rows = vec![inst.m() + inst.n(); inst.k()];
    rows.extend(std::iter::repeat_n(inst.n(), inst.l()));
    rows
}

fn encode(sel: &Selection, m: usize, rows: &[usize]) -> Vec<bool> {
    let mut bits = vec![false; rows.iter().sum()];
    let mut off = 0;
    for (k, t) in sel.gue.iter().enumerate() {
        let i = match *t {
            GueTarget::Bs(b) => b,
            GueTarget::Sat(s) => m + s,
        };
        bits[off + i] = true;
        off += rows[k];
    }
    for (j, &n) in sel.sue.iter().enumerate() {
        bits[off + n] = true;
        off += rows[sel.gue.len() + j];
    }
    bits
}

/// Selection and the number of rows without exactly one bit set.
fn decode(bits: &[bool], k: usize, m: usize, rows: &[usize]) -> (Selection, usize) {
    let mut off = 0;
    let mut bad = 0;
    let mut picks = Vec::with_capacity(rows.len());
    for &len in rows {
        let row = &bits[off..off + len];
        let set: Vec<usize> = (0..len).filter(|&i| row[i]).collect();
        if set.len() != 1 {
            bad += 1;
        }
        picks.push(set.first().copied().unwrap_or(0));
        off += len;
    }
    let gue = picks[..k].iter().map(|&i| if i < m { GueTarget::Bs(i) } else { GueTarget::Sat(i - m) }).collect();
    (Selection { gue, sue: picks[k..].to_vec() }, bad)
}

/// Outcome of the swarm search.
#[derive(Debug, Clone, PartialEq)]
pub struct HcoSearch {
    pub selection: Selection,
    /// Penalized objective of the best particle after initialization and after each iteration.
    pub best: Vec<f64>,
    /// Distinct selections evaluated.
    pub evaluations: usize,
    /// Whether the best particle is a valid, feasible selection.
    pub feasible: bool,
}

/// Penalized binary particle swarm over the offloading selection.
pub fn hco_search(
    rng: &mut impl Rng,
    inst: &NetworkInstance,
    scenario: &ScenarioConfig,
    hco: &HcoSettings,
    settings: &AoSettings,
) -> Result<HcoSearch> {
    let rows = row_lengths(inst);
    let dim: usize = rows.iter().sum();
    let (k, m) = (inst.k(), inst.m());
    // reference energy: cheapest option of every user at the starting point
    let start = initial_plan(inst, scenario)?;
    let prob = build_options(inst, &start, scenario, OptionCompute::Least);
    let reference = prob
        .gue
        .iter()
        .map(|r| r.iter().map(|(_, o)| o.energy).filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min))
        .chain(prob.sue.iter().map(|r| r.iter().map(|o| o.energy).filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min)))
        .filter(|e| e.is_finite())
        .sum::<f64>()
        .max(1e-12);
    let weight = hco.penalty * reference;
    let mut cache: HashMap<Selection, Option<f64>> = HashMap::new();
    let mut fitness = |bits: &[bool]| -> Result<f64> {
        let (sel, bad) = decode(bits, k, m, &rows);
        if bad > 0 {
            return Ok(weight * (1.0 + bad as f64));
        }
        let xi = match cache.get(&sel) {
            Some(v) => *v,
            None => {
                let v = match evaluate_selection(inst, scenario, &sel, settings, 1) {
                    Ok((_, rep)) => Some(rep.xi),
                    Err(Error::ScenarioInfeasible(_)) => None,
                    Err(e) => return Err(e),
                };
                cache.insert(sel, v);
                v
            }
        };
        Ok(xi.unwrap_or(weight * 2.0))
    };

    let swarm = hco.swarm.max(1);
    let mut pos: Vec<Vec<bool>> = (0..swarm).map(|_| encode(&random_selection(rng, inst), m, &rows)).collect();
    let mut vel: Vec<Vec<f64>> = pos
        .iter()
        .map(|b| b.iter().map(|&x| if x { 1.0 } else { -1.0 }).collect())
        .collect();
    let mut pbest = pos.clone();
    let mut pbest_fit = pos.iter().map(|p| fitness(p)).collect::<Result<Vec<f64>>>()?;
    let mut g = (0..swarm).min_by(|&a, &b| pbest_fit[a].total_cmp(&pbest_fit[b])).unwrap_or(0);
    let mut gbest = pbest[g].clone();
    let mut gbest_fit = pbest_fit[g];
    let mut best = vec![gbest_fit];
    for _ in 0..hco.iters {
        for i in 0..swarm {
            for d in 0..dim {
                let x = pos[i][d] as u8 as f64;
                let pb = pbest[i][d] as u8 as f64;
                let gb = gbest[d] as u8 as f64;
                let v = hco.inertia * vel[i][d]
                    + hco.cognitive * rng.random::<f64>() * (pb - x)
                    + hco.social * rng.random::<f64>() * (gb - x);
                vel[i][d] = v.clamp(-hco.v_max, hco.v_max);
                pos[i][d] = rng.random::<f64>() < 1.0 / (1.0 + (-vel[i][d]).exp());
            }
            let f = fitness(&pos[i])?;
            if f < pbest_fit[i] {
                pbest_fit[i] = f;
                pbest[i] = pos[i].clone();
                if f < gbest_fit {
                    gbest_fit = f;
                    gbest = pos[i].clone();
                    g = i;
                }
            }
        }
        best.push(gbest_fit);
    }
    let evaluations = cache.len();
    log::debug!("hco: best particle {g}, penalized objective {gbest_fit:.6e}, {evaluations} selections evaluated");
    let (selection, bad) = decode(&gbest, k, m, &rows);
    Ok(HcoSearch { selection, best, evaluations, feasible: bad == 0 && gbest_fit < weight })
}

/// Best selection found by the swarm, then a full fixed-selection run.
pub fn run_hco(
    rng: &mut impl Rng,
    inst: &NetworkInstance,
    scenario: &ScenarioConfig,
    hco: &HcoSettings,
    settings: &AoSettings,
) -> Result<(Plan, CostReport)> {
    let search = hco_search(rng, inst, scenario, hco, settings)?;
    if !search.feasible {
        return Err(Error::ScenarioInfeasible(vec!["no feasible particle".into()]));
    }
    evaluate_selection(inst, scenario, &search.selection, settings, settings.max_iter)
}

/// Runs a baseline; the random ones draw from `rng`.
pub fn run_baseline(
    kind: BaselineKind,
    rng: &mut impl Rng,
    inst: &NetworkInstance,
    scenario: &ScenarioConfig,
    settings: &AoSettings,
    hco: &HcoSettings,
) -> Result<(Plan, CostReport)> {
    match kind {
        BaselineKind::Ftp => run_ftp(inst, scenario, settings),
        BaselineKind::Zfbf => run_zfbf(inst, scenario, settings),
        BaselineKind::Ro => run_ro(rng, inst, scenario, settings),
        BaselineKind::Acr => run_acr(inst, scenario, settings),
        BaselineKind::Hco => run_hco(rng, inst, scenario, hco, settings),
    }
}
