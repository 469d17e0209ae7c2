//! Transmit-time / compute trade-off per node.
//!
//! A user sending `d` bits over bandwidth `B` with SNR `S` per watt spends
//! `x d / B` seconds when `x = 1 / log2(1 + power S)`, and the energy
//! `d / (B S) * x (2^(1/x) - 1)` is convex and decreasing in `x`.

use crate::costmodel::{gue_link, GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::solvers::{solve_smooth, SmoothConvexProgram, SmoothFunction, SmoothSettings, SolveStatus};
use nalgebra::DMatrix;
use std::f64::consts::LN_2;

use super::power::power_fixed_point;

/// `x (2^(1/x) - 1)`
pub fn tx_energy_shape(x: f64) -> f64 {
    x * ((1.0 / x).exp2() - 1.0)
}

fn tx_energy_shape_d1(x: f64) -> f64 {
    let e = (1.0 / x).exp2();
    e - 1.0 - LN_2 * e / x
}

fn tx_energy_shape_d2(x: f64) -> f64 {
    LN_2 * LN_2 * (1.0 / x).exp2() / (x * x * x)
}

/// Auxiliary variable of a power level.
pub fn power_to_aux(power: f64, snr_per_watt: f64) -> f64 {
    1.0 / (power * snr_per_watt).ln_1p() * LN_2
}

/// Inverse of [`power_to_aux`].
pub fn aux_to_power(x: f64, snr_per_watt: f64) -> f64 {
    (LN_2 / x).exp_m1() / snr_per_watt
}

/// One user competing for a node's compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexUser {
    pub d: f64,
    pub cycles: f64,
    pub bandwidth: f64,
    pub snr_per_watt: f64,
    pub max_power: f64,
    /// Propagation delay, s.
    pub prop: f64,
    /// Delay budget, s.
    pub budget: f64,
    pub rho: f64,
    pub tau: f64,
    /// Transmission time held fixed, s.
    pub fixed_tx: Option<f64>,
}

impl FlexUser {
    fn min_aux(&self) -> f64 {
        power_to_aux(self.max_power, self.snr_per_watt)
    }
}

/// Allocation for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexAlloc {
    pub tx_time: f64,
    pub power: f64,
    pub compute: f64,
}

struct NodeObjective {
    /// per free user: (tx coefficient, kappa, compute coefficient)
    coef: Vec<(f64, f64, f64)>,
    scale: f64,
}

impl SmoothFunction for NodeObjective {
    fn value(&self, v: &[f64]) -> f64 {
        self.coef
            .iter()
            .enumerate()
            .map(|(i, &(a, k, c))| a * tx_energy_shape(k * v[2 * i]) + c * v[2 * i + 1] * v[2 * i + 1])
            .sum::<f64>()
            / self.scale
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        for (i, &(a, k, c)) in self.coef.iter().enumerate() {
            g[2 * i] = a * k * tx_energy_shape_d1(k * v[2 * i]) / self.scale;
            g[2 * i + 1] = 2.0 * c * v[2 * i + 1] / self.scale;
        }
        g
    }
    fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(v.len(), v.len());
        for (i, &(a, k, c)) in self.coef.iter().enumerate() {
            h[(2 * i, 2 * i)] = a * k * k * tx_energy_shape_d2(k * v[2 * i]) / self.scale;
            h[(2 * i + 1, 2 * i + 1)] = 2.0 * c / self.scale;
        }
        h
    }
}

/// `s_i + c0 + w / y_i - 1 <= 0`
struct DelayRow {
    i: usize,
    c0: f64,
    w: f64,
}

impl SmoothFunction for DelayRow {
    fn value(&self, v: &[f64]) -> f64 {
        let y = v[2 * self.i + 1];
        if y <= 0.0 {
            return f64::INFINITY;
        }
        v[2 * self.i] + self.c0 + self.w / y - 1.0
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        let y = v[2 * self.i + 1];
        g[2 * self.i] = 1.0;
        g[2 * self.i + 1] = -self.w / (y * y);
        g
    }
    fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(v.len(), v.len());
        let y = v[2 * self.i + 1];
        h[(2 * self.i + 1, 2 * self.i + 1)] = 2.0 * self.w / (y * y * y);
        h
    }
}

/// `sum_i y_i - 1 <= 0`
struct CapacityRow;

impl SmoothFunction for CapacityRow {
    fn value(&self, v: &[f64]) -> f64 {
        v.iter().skip(1).step_by(2).sum::<f64>() - 1.0
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len()).map(|j| if j % 2 == 1 { 1.0 } else { 0.0 }).collect()
    }
    fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(v.len(), v.len())
    }
}

/// Per-node energy program over `v = [s_0, y_0, s_1, y_1, ...]`, with
/// `s_i` the transmit time as a fraction of the budget and `y_i` the share of
/// the compute `left` over.
pub struct NodeProgram {
    objective: NodeObjective,
    rows: Vec<DelayRow>,
    capacity: CapacityRow,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl NodeProgram {
    /// `None` when some user cannot meet its delay with the whole of `left`.
    pub fn new(users: &[FlexUser], left: f64) -> Option<Self> {
        let mut lo = Vec::with_capacity(2 * users.len());
        let mut hi = Vec::with_capacity(2 * users.len());
        let mut coef = Vec::with_capacity(users.len());
        let mut rows = Vec::with_capacity(users.len());
        let mut scale = 0.0;
        for (j, u) in users.iter().enumerate() {
            let kappa = u.bandwidth * u.budget / u.d;
            let s_min = u.min_aux() / kappa;
            let c0 = u.prop / u.budget;
            let w = u.cycles / (left * u.budget);
            let s_max = 1.0 - c0 - w;
            let y_min = w / (1.0 - c0 - s_min);
            if !(s_min < s_max) || !(y_min < 1.0) || !(y_min > 0.0) {
                return None;
            }
            let a = u.rho * u.d / (u.bandwidth * u.snr_per_watt);
            let c = u.rho * u.tau * u.cycles * left * left;
            scale += a * tx_energy_shape(kappa * s_max) + c * y_min * y_min;
            coef.push((a, kappa, c));
            lo.extend([s_min, y_min]);
            hi.extend([s_max, 1.0]);
            rows.push(DelayRow { i: j, c0, w });
        }
        Some(Self { objective: NodeObjective { coef, scale }, rows, capacity: CapacityRow, lo, hi })
    }

    /// Objective, then one delay row per user, then the capacity row.
    pub fn functions(&self) -> Vec<&dyn SmoothFunction> {
        let mut f: Vec<&dyn SmoothFunction> = vec![&self.objective];
        f.extend(self.rows.iter().map(|r| r as &dyn SmoothFunction));
        f.push(&self.capacity);
        f
    }

    pub fn program(&self) -> SmoothConvexProgram<'_> {
        let mut constraints: Vec<&dyn SmoothFunction> = self.rows.iter().map(|r| r as &dyn SmoothFunction).collect();
        if self.rows.len() > 1 {
            constraints.push(&self.capacity);
        }
        SmoothConvexProgram { objective: &self.objective, constraints, lo: self.lo.clone(), hi: self.hi.clone() }
    }
}

/// Minimizes the node's weighted energy. `None` if delays and capacity
/// cannot all be met.
pub fn solve_node(users: &[FlexUser], capacity: f64, tol: f64) -> Result<Option<Vec<FlexAlloc>>> {
    let mut out: Vec<Option<FlexAlloc>> = vec![None; users.len()];
    let mut left = capacity;
    for (i, u) in users.iter().enumerate() {
        if let Some(tx) = u.fixed_tx {
            let slack = u.budget - u.prop - tx;
            if slack <= 0.0 {
                return Ok(None);
            }
            let f = u.cycles / slack;
            left -= f;
            let x = tx * u.bandwidth / u.d;
            out[i] = Some(FlexAlloc { tx_time: tx, power: aux_to_power(x, u.snr_per_watt), compute: f });
        }
    }
    let free: Vec<usize> = (0..users.len()).filter(|&i| users[i].fixed_tx.is_none()).collect();
    if left < -1e-9 * capacity {
        return Ok(None);
    }
    if free.is_empty() {
        return Ok(Some(out.into_iter().map(|a| a.expect("fixed")).collect()));
    }
    if left <= 0.0 {
        return Ok(None);
    }
    let free_users: Vec<FlexUser> = free.iter().map(|&i| users[i]).collect();
    let Some(prog) = NodeProgram::new(&free_users, left) else { return Ok(None) };
    let rep = solve_smooth(&prog.program(), &SmoothSettings { tol, ..Default::default() })?;
    if rep.status != SolveStatus::Optimal {
        return Ok(None);
    }
    for (j, &i) in free.iter().enumerate() {
        let u = &users[i];
        let tx = rep.x[2 * j] * u.budget;
        let x = tx * u.bandwidth / u.d;
        let power = aux_to_power(x, u.snr_per_watt).min(u.max_power);
        out[i] = Some(FlexAlloc { tx_time: tx, power, compute: rep.x[2 * j + 1] * left });
    }
    Ok(Some(out.into_iter().map(|a| a.expect("filled")).collect()))
}

/// Which users of a node may trade transmit time for compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flex {
    /// SUEs only; GUE powers stay fixed.
    SueOnly,
    /// GUE powers too, with interference frozen at the plan's values.
    All,
    /// No powers; compute only.
    None,
}

/// Users per base station, and per satellite with a flag marking SUEs.
type NodeUsers = (Vec<Vec<(usize, FlexUser)>>, Vec<Vec<(usize, bool, FlexUser)>>);

fn node_users(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, flex: Flex) -> NodeUsers {
    let mut bs: Vec<Vec<(usize, FlexUser)>> = vec![Vec::new(); inst.m()];
    let mut sat: Vec<Vec<(usize, bool, FlexUser)>> = vec![Vec::new(); inst.n()];
    for k in 0..inst.k() {
        let Some(t) = plan.gue_target(k) else { continue };
        let link = gue_link(inst, plan, scenario, k, t);
        let task = &inst.gue_tasks[k];
        let fixed_tx = match flex {
            Flex::SueOnly | Flex::None => Some(task.d / link.rate(plan.p[k])),
            Flex::All => None,
        };
        let mut u = FlexUser {
            d: task.d,
            cycles: task.cycles(),
            bandwidth: link.bandwidth,
            snr_per_watt: link.gain / (link.interference + link.noise),
            max_power: scenario.p_max,
            prop: link.prop,
            budget: scenario.z_g,
            rho: scenario.rho_g,
            tau: scenario.tau_gro,
            fixed_tx,
        };
        match t {
            GueTarget::Bs(m) => bs[m].push((k, u)),
            GueTarget::Sat(n) => {
                u.tau = scenario.tau_sat;
                sat[n].push((k, false, u))
            }
        }
    }
    for l in 0..inst.l() {
        let Some(n) = plan.sue_target(l) else { continue };
        let task = &inst.sue_tasks[l];
        sat[n].push((
            l,
            true,
            FlexUser {
                d: task.d,
                cycles: task.cycles(),
                bandwidth: scenario.b3,
                snr_per_watt: inst.snr_sue[l][n],
                max_power: scenario.q_max,
                prop: inst.prop_sue_sat[l][n],
                budget: scenario.z_s,
                rho: scenario.rho_s,
                tau: scenario.tau_sat,
                fixed_tx: (flex == Flex::None)
                    .then(|| task.d / crate::linkrate::rate_from_sinr(scenario.b3, plan.q[l] * inst.snr_sue[l][n])),
            },
        ));
    }
    (bs, sat)
}

/// Applies node solutions to a copy of `plan`; `None` if any node fails.
fn solve_all(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, flex: Flex, tol: f64) -> Result<Option<Plan>> {
    let (bs, sat) = node_users(inst, plan, scenario, flex);
    let mut next = plan.clone();
    for (m, users) in bs.iter().enumerate() {
        let list: Vec<FlexUser> = users.iter().map(|u| u.1).collect();
        let Some(alloc) = solve_node(&list, scenario.f_gro, tol)? else { return Ok(None) };
        for (&(k, _), a) in users.iter().zip(&alloc) {
            next.f_gro[k][m] = a.compute;
            next.p[k] = a.power;
        }
    }
    for (n, users) in sat.iter().enumerate() {
        let list: Vec<FlexUser> = users.iter().map(|u| u.2).collect();
        let Some(alloc) = solve_node(&list, scenario.f_sat, tol)? else { return Ok(None) };
        for (&(i, is_sue, _), a) in users.iter().zip(&alloc) {
            if is_sue {
                next.f_sat_s[i][n] = a.compute;
                next.q[i] = a.power;
            } else {
                next.f_sat_g[i][n] = a.compute;
                next.p[i] = a.power;
            }
        }
    }
    if flex != Flex::All {
        next.p.clone_from(&plan.p);
    }
    if flex == Flex::None {
        next.q.clone_from(&plan.q);
    }
    Ok(Some(next))
}

/// SUE powers and all compute allocations with GUE powers fixed.
pub fn sue_power_and_compute(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, tol: f64) -> Result<Plan> {
    let next = solve_all(inst, plan, scenario, Flex::SueOnly, tol)?
        .ok_or_else(|| Error::Infeasible("delay and capacity constraints cannot all be met".into()))?;
    for l in 0..inst.l() {
        if next.q[l] > scenario.q_max * (1.0 + 1e-9) {
            return Err(Error::Infeasible(format!("SUE {l} power above budget")));
        }
    }
    Ok(next)
}

/// Least compute meeting every delay with all powers fixed.
pub fn compute_only(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig) -> Result<Plan> {
    solve_all(inst, plan, scenario, Flex::None, 1e-9)?
        .ok_or_else(|| Error::Infeasible("delay and capacity constraints cannot all be met".into()))
}

/// GUE powers, SUE powers and compute together. GUE interference is frozen
/// while allocating compute; powers are then re-derived from the least fixed
/// point of the closed form. `None` when the result breaks a power budget.
pub fn joint_resource_step(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, tol: f64) -> Result<Option<Plan>> {
    let Some(mut next) = solve_all(inst, plan, scenario, Flex::All, tol)? else { return Ok(None) };
    let zeros = vec![0.0; inst.k()];
    match power_fixed_point(inst, &next, scenario, &zeros, 200) {
        Ok(Some(p)) => {
            next.p = p;
            Ok(Some(next))
        }
        Ok(None) | Err(Error::NegativeDelayBudget { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sue(budget: f64) -> FlexUser {
        FlexUser {
            d: 4e5,
            cycles: 4e5 * 500.0,
            bandwidth: 2e7,
            snr_per_watt: 50.0,
            max_power: 1.0,
            prop: 0.002,
            budget,
            rho: 0.5,
            tau: 5e-27,
            fixed_tx: None,
        }
    }

    fn energy(u: &FlexUser, tx: f64, f: f64) -> f64 {
        u.rho * (u.d / (u.bandwidth * u.snr_per_watt) * tx_energy_shape(tx * u.bandwidth / u.d) + u.tau * u.cycles * f * f)
    }

    #[test]
    fn aux_roundtrip() {
        for &(q, s) in &[(0.3, 50.0), (1e-3, 1e4), (2.0, 0.7)] {
            let x = power_to_aux(q, s);
            assert!((aux_to_power(x, s) - q).abs() <= 1e-10 * q);
            let back = power_to_aux(aux_to_power(x, s), s);
            assert!((back - x).abs() <= 1e-10 * x);
        }
    }

    #[test]
    fn shape_derivatives() {
        for &x in &[0.05, 0.3, 1.0, 4.0] {
            let h = 1e-6 * x;
            let fd1 = (tx_energy_shape(x + h) - tx_energy_shape(x - h)) / (2.0 * h);
            let fd2 = (tx_energy_shape_d1(x + h) - tx_energy_shape_d1(x - h)) / (2.0 * h);
            assert!((fd1 - tx_energy_shape_d1(x)).abs() < 1e-5 * (1.0 + fd1.abs()));
            assert!((fd2 - tx_energy_shape_d2(x)).abs() < 1e-5 * (1.0 + fd2.abs()));
            assert!(tx_energy_shape_d1(x) < 0.0);
        }
    }

    #[test]
    fn single_user_matches_golden_section() {
        let u = sue(0.08);
        let cap = 1e11;
        let alloc = solve_node(&[u], cap, 1e-10).unwrap().unwrap();
        // with the delay tight, energy is a function of tx time alone
        let x_min = power_to_aux(u.max_power, u.snr_per_watt) * u.d / u.bandwidth;
        let f_of = |tx: f64| u.cycles / (u.budget - u.prop - tx);
        let g = |tx: f64| {
            let f = f_of(tx);
            if f > cap { f64::INFINITY } else { energy(&u, tx, f) }
        };
        let (mut a, mut b) = (x_min, u.budget - u.prop - u.cycles / cap);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if g(c) < g(d) { b = d } else { a = c }
        }
        let best = 0.5 * (a + b);
        assert!((alloc[0].tx_time - best).abs() < 1e-6 * u.budget, "{} vs {}", alloc[0].tx_time, best);
        let e = energy(&u, alloc[0].tx_time, alloc[0].compute);
        assert!(e <= g(best) * (1.0 + 1e-6));
        assert!(alloc[0].power <= u.max_power * (1.0 + 1e-9));
    }

    #[test]
    fn capacity_binds_only_with_tight_delay() {
        let mut u = sue(0.08);
        u.tau = 1e-31;
        let users = [u, u];
        let loose = solve_node(&users, 1e11, 1e-10).unwrap().unwrap();
        let used: f64 = loose.iter().map(|a| a.compute).sum();
        assert!(used < 0.99e11);
        let tx_min = power_to_aux(u.max_power, u.snr_per_watt) * u.d / u.bandwidth;
        let least = 2.0 * u.cycles / (u.budget - u.prop - tx_min);
        assert!(used > 1.1 * least);
        let cap = 0.5 * (used + least);
        let tight = solve_node(&users, cap, 1e-10).unwrap().unwrap();
        let used: f64 = tight.iter().map(|a| a.compute).sum();
        assert!(used > cap * (1.0 - 1e-6), "{used}");
        for (a, u) in tight.iter().zip(&users) {
            let delay = a.tx_time + u.prop + u.cycles / a.compute;
            assert!(delay <= u.budget * (1.0 + 1e-9));
            assert!(delay > u.budget * (1.0 - 1e-6));
        }
    }

    #[test]
    fn infeasible_node_is_reported() {
        let users = [sue(0.08), sue(0.08)];
        assert_eq!(solve_node(&users, 1e9, 1e-10).unwrap(), None);
    }

    #[test]
    fn fixed_users_take_least_compute() {
        let mut u = sue(0.08);
        u.fixed_tx = Some(0.03);
        let a = solve_node(&[u], 1e11, 1e-10).unwrap().unwrap();
        assert!((a[0].compute - u.cycles / (0.08 - 0.002 - 0.03)).abs() < 1e-6 * a[0].compute);
    }
}
