//! The alternating loop: offloading, receivers, GUE powers, then SUE powers
//! and compute, each step kept only if the plan stays feasible and the
//! weighted energy does not grow.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use super::beamforming::{sca_beamforming, ReceiverKind, ScaSettings};
use super::offload::{build_options, select_offloading, OffloadProblem, OptionCompute, Selection};
use super::power::{gue_power_closed_form, sue_power_closed_form};
use super::resource::{compute_only, joint_resource_step, sue_power_and_compute};
use crate::costmodel::{check_feasibility, evaluate_plan, CostReport, GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::linkrate::{max_sinr_receiver, Beamformers};

/// Blocks held at their initial values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Freeze {
    /// Fixed offloading selection.
    pub selection: Option<Selection>,
    /// GUE and SUE powers stay at half budget.
    pub powers: bool,
    /// Compute stays at the per-user averages.
    pub compute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoSettings {
    pub max_iter: usize,
    /// Relative change of the objective that ends the loop.
    pub tol: f64,
    pub receivers: ReceiverKind,
    pub sca: ScaSettings,
    pub resource_tol: f64,
    /// Trade GUE transmit time against compute before the SUE-only step.
    pub joint_resource: bool,
    pub freeze: Freeze,
}

impl Default for AoSettings {
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: 1e-4,
            receivers: ReceiverKind::Sdr,
            sca: ScaSettings::default(),
            resource_tol: 1e-10,
            joint_resource: true,
            freeze: Freeze::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Accepted,
    /// Solved, but the result was worse or infeasible.
    Rejected,
    Skipped,
    Failed,
}

impl fmt::Display for StepStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepStatus::Accepted => "accepted",
            StepStatus::Rejected => "rejected",
            StepStatus::Skipped => "skipped",
            StepStatus::Failed => "failed",
        })
    }
}

/// One pass of the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    /// Weighted energy after the pass, J.
    pub xi: f64,
    pub offload: StepStatus,
    pub beams: StepStatus,
    pub power: StepStatus,
    pub resource: StepStatus,
    /// Smallest rank-one ratio over the lifted receivers of this pass.
    pub rank_one_min: f64,
    pub sca_steps: usize,
    /// Seconds spent in each of the four steps.
    #[serde(skip)]
    pub wall_s: [f64; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn xi(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.xi).collect()
    }

    /// Whether each value is at most the previous one times `1 + slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].xi <= w[0].xi * (1.0 + slack))
    }

    /// Passes until the relative change first drops below `tol`.
    pub fn settled_after(&self, tol: f64) -> Option<usize> {
        self.records
            .windows(2)
            .position(|w| (w[1].xi - w[0].xi).abs() <= tol * w[0].xi.abs())
            .map(|i| i + 2)
    }
}

/// Starting point: half power budgets, averaged compute and MMSE receivers.
pub fn initial_plan(inst: &NetworkInstance, scenario: &ScenarioConfig) -> Result<Plan> {
    let (k, l, m, n) = (inst.k(), inst.l(), inst.m(), inst.n());
    let f_g = scenario.f_gro / k.max(1) as f64;
    let f_s = scenario.f_sat / (k + l).max(1) as f64;
    let p = vec![scenario.p_max / 2.0; k];
    let beams = mmse_beams(inst, scenario, &p)?;
    Ok(Plan {
        alpha: vec![vec![false; m]; k],
        beta: vec![vec![false; n]; k],
        gamma: vec![vec![false; n]; l],
        beams,
        p,
        q: vec![scenario.q_max / 2.0; l],
        f_gro: vec![vec![f_g; m]; k],
        f_sat_g: vec![vec![f_s; n]; k],
        f_sat_s: vec![vec![f_s; n]; l],
    })
}

fn mmse_beams(inst: &NetworkInstance, scenario: &ScenarioConfig, p: &[f64]) -> Result<Beamformers> {
    let w = (0..inst.k())
        .map(|k| (0..inst.m()).map(|m| max_sinr_receiver(k, &inst.h[m], p, &inst.order_bs[m], scenario.noise1)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let v = (0..inst.k())
        .map(|k| {
            (0..inst.n())
                .map(|n| max_sinr_receiver(k, &inst.g[n], p, &inst.order_sat[n], scenario.sat_noise()))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>>>()?;
    Ok(Beamformers { w, v })
}

/// `plan` with `sel` applied and each selected option's compute installed.
pub fn apply_selection(plan: &Plan, prob: &OffloadProblem, sel: &Selection) -> Plan {
    let mut next = plan.clone();
    sel.apply(&mut next);
    for (k, &t) in sel.gue.iter().enumerate() {
        let i = match t {
            GueTarget::Bs(m) => m,
            GueTarget::Sat(n) => prob.m + n,
        };
        *next.gue_compute_mut(k, t) = prob.gue[k][i].1.compute;
    }
    for (l, &n) in sel.sue.iter().enumerate() {
        next.f_sat_s[l][n] = prob.sue[l][n].compute;
    }
    next
}

fn infeasible(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, extra: Vec<String>) -> Error {
    let mut list = extra;
    list.extend(check_feasibility(inst, plan, scenario).iter().map(|v| format!("{v:?}")));
    Error::ScenarioInfeasible(list)
}

fn unservable(prob: &OffloadProblem, sel: Option<&Selection>) -> Vec<(bool, usize)> {
    let mut out = Vec::new();
    for (k, opts) in prob.gue.iter().enumerate() {
        let ok = match sel {
            Some(s) => opts.iter().any(|(t, o)| *t == s.gue[k] && o.allowed),
            None => opts.iter().any(|(_, o)| o.allowed),
        };
        if !ok {
            out.push((false, k));
        }
    }
    for (l, opts) in prob.sue.iter().enumerate() {
        let ok = match sel {
            Some(s) => opts[s.sue[l]].allowed,
            None => opts.iter().any(|o| o.allowed),
        };
        if !ok {
            out.push((true, l));
        }
    }
    out
}

/// First offloading decision from the initial plan. Users that cannot meet
/// their delay at half power are raised to full power unless powers are frozen.
fn first_selection(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<Plan> {
    let rule = if settings.freeze.compute { OptionCompute::Pinned } else { OptionCompute::Least };
    let fixed = settings.freeze.selection.as_ref();
    let mut plan = plan.clone();
    let mut prob = build_options(inst, &plan, scenario, rule);
    let stuck = unservable(&prob, fixed);
    if !stuck.is_empty() {
        if settings.freeze.powers {
            return Err(stuck_error(&stuck));
        }
        for &(is_sue, u) in &stuck {
            if is_sue {
                plan.q[u] = scenario.q_max;
            } else {
                plan.p[u] = scenario.p_max;
            }
        }
        plan.beams = mmse_beams(inst, scenario, &plan.p)?;
        prob = build_options(inst, &plan, scenario, rule);
        let stuck = unservable(&prob, fixed);
        if !stuck.is_empty() {
            return Err(stuck_error(&stuck));
        }
    }
    let sel = match fixed {
        Some(s) => s.clone(),
        None => select_offloading(&prob).map_err(|e| Error::ScenarioInfeasible(vec![e.to_string()]))?.0,
    };
    let next = apply_selection(&plan, &prob, &sel);
    if check_feasibility(inst, &next, scenario).is_empty() {
        Ok(next)
    } else {
        Err(infeasible(inst, &next, scenario, vec![]))
    }
}

fn stuck_error(stuck: &[(bool, usize)]) -> Error {
    Error::ScenarioInfeasible(
        stuck
            .iter()
            .map(|&(is_sue, u)| format!("{} {u} cannot meet its delay on any allowed node", if is_sue { "SUE" } else { "GUE" }))
            .collect(),
    )
}

struct Current {
    plan: Plan,
    report: CostReport,
}

impl Current {
    /// Keeps `cand` if it is feasible and no worse.
    fn offer(&mut self, inst: &NetworkInstance, scenario: &ScenarioConfig, cand: Plan) -> Result<StepStatus> {
        if !check_feasibility(inst, &cand, scenario).is_empty() {
            return Ok(StepStatus::Rejected);
        }
        let report = evaluate_plan(inst, &cand, scenario)?;
        if report.xi <= self.report.xi {
            self.plan = cand;
            self.report = report;
            Ok(StepStatus::Accepted)
        } else {
            Ok(StepStatus::Rejected)
        }
    }

    fn offer_result(&mut self, inst: &NetworkInstance, scenario: &ScenarioConfig, cand: Result<Plan>) -> Result<StepStatus> {
        match cand {
            Ok(p) => self.offer(inst, scenario, p),
            Err(e) => {
                log::debug!("step failed: {e}");
                Ok(StepStatus::Failed)
            }
        }
    }
}

/// Runs the alternating loop from [`initial_plan`].
pub fn run_algorithm1(inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings) -> Result<(Plan, CostReport, IterationTrace)> {
    let start = initial_plan(inst, scenario)?;
    run_from(inst, scenario, settings, start)
}

/// Runs the alternating loop from a given starting plan (its selection is ignored).
pub fn run_from(inst: &NetworkInstance, scenario: &ScenarioConfig, settings: &AoSettings, start: Plan) -> Result<(Plan, CostReport, IterationTrace)> {
    let mut trace = IterationTrace::default();
    let mut cur: Option<Current> = None;
    for t in 0..settings.max_iter.max(1) {
        let mut wall = [0.0; 4];
        // offloading
        let clock = Instant::now();
        let offload = match cur.as_mut() {
            None => {
                let plan = first_selection(inst, &start, scenario, settings)?;
                let report = evaluate_plan(inst, &plan, scenario)?;
                cur = Some(Current { plan, report });
                StepStatus::Accepted
            }
            Some(c) if settings.freeze.selection.is_none() => {
                let rule = if settings.freeze.compute { OptionCompute::Pinned } else { OptionCompute::KeepSelected };
                let prob = build_options(inst, &c.plan, scenario, rule);
                match select_offloading(&prob) {
                    Ok((sel, _)) => {
                        let cand = apply_selection(&c.plan, &prob, &sel);
                        c.offer(inst, scenario, cand)?
                    }
                    Err(e) => {
                        log::debug!("offloading step: {e}");
                        StepStatus::Failed
                    }
                }
            }
            Some(_) => StepStatus::Skipped,
        };
        let c = cur.as_mut().expect("set by the first pass");
        wall[0] = clock.elapsed().as_secs_f64();

        // receivers
        let clock = Instant::now();
        let (beams, rank_one_min, sca_steps) = match sca_beamforming(inst, &c.plan, scenario, settings.receivers, &settings.sca) {
            Ok((b, d)) => (Ok(b), d.min_rank_one(), d.outer_steps),
            Err(e) => (Err(e), f64::NAN, 0),
        };
        let beams = c.offer_result(
            inst,
            scenario,
            beams.map(|b| {
                let mut p = c.plan.clone();
                p.beams = b;
                p
            }),
        )?;
        wall[1] = clock.elapsed().as_secs_f64();

        // GUE powers
        let clock = Instant::now();
        let power = if settings.freeze.powers {
            StepStatus::Skipped
        } else {
            let cand = gue_power_closed_form(inst, &c.plan, scenario).map(|p| {
                let mut next = c.plan.clone();
                next.p = p;
                next
            });
            c.offer_result(inst, scenario, cand)?
        };
        wall[2] = clock.elapsed().as_secs_f64();

        // SUE powers and compute
        let clock = Instant::now();
        let resource = match (settings.freeze.compute, settings.freeze.powers) {
            (true, true) => StepStatus::Skipped,
            (true, false) => {
                let cand = sue_power_closed_form(inst, &c.plan, scenario).map(|q| {
                    let mut next = c.plan.clone();
                    next.q = q;
                    next
                });
                c.offer_result(inst, scenario, cand)?
            }
            (false, true) => c.offer_result(inst, scenario, compute_only(inst, &c.plan, scenario))?,
            (false, false) => {
                let mut status = StepStatus::Rejected;
                if settings.joint_resource {
                    if let Ok(Some(cand)) = joint_resource_step(inst, &c.plan, scenario, settings.resource_tol) {
                        status = c.offer(inst, scenario, cand)?;
                    }
                }
                if status != StepStatus::Accepted {
                    status = c.offer_result(inst, scenario, sue_power_and_compute(inst, &c.plan, scenario, settings.resource_tol))?;
                }
                status
            }
        };
        wall[3] = clock.elapsed().as_secs_f64();

        let xi = c.report.xi;
        log::debug!("pass {t}: xi = {xi:.6e} J ({offload}, {beams}, {power}, {resource})");
        trace.records.push(IterationRecord { t, xi, offload, beams, power, resource, rank_one_min, sca_steps, wall_s: wall });
        if let [.., a, b] = trace.records.as_slice() {
            if (a.xi - b.xi).abs() < settings.tol * a.xi.abs() || a.xi == 0.0 {
                break;
            }
        }
    }
    let c = cur.expect("at least one pass");
    let violations = check_feasibility(inst, &c.plan, scenario);
    if !violations.is_empty() {
        return Err(Error::ScenarioInfeasible(violations.iter().map(|v| format!("{v:?}")).collect()));
    }
    Ok((c.plan, c.report, trace))
}
