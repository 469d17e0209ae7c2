//! Delay and energy of the three offloading paths, the weighted energy
//! objective, and constraint checking of complete plans.

use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::linkrate::{interference, rate_from_sinr, sinr, Beamformers};
use crate::num::Scalar;

/// A computing task: `d` input bits, `c` cycles per bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec<T> {
    pub d: T,
    pub c: T,
}

impl<T: Scalar> TaskSpec<T> {
    pub fn new(d: T, c: T) -> Result<Self> {
        if !(d > T::zero()) {
            return Err(Error::NonPositiveParameter { name: "data size", value: d.to_f64_lossy() });
        }
        if !(c > T::zero()) {
            return Err(Error::NonPositiveParameter { name: "complexity", value: c.to_f64_lossy() });
        }
        Ok(Self { d, c })
    }

    pub fn cycles(&self) -> T {
        self.d * self.c
    }
}

/// Delay (s) and energy (J) of one offloaded task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost<T> {
    pub delay: T,
    pub energy: T,
}

fn path_cost<T: Scalar>(task: &TaskSpec<T>, rate: T, f: T, tau: T, power: T, prop: T) -> Result<PathCost<T>> {
    if !(rate > T::zero()) {
        return Err(Error::ZeroRate(format!("rate {}", rate)));
    }
    if !(f > T::zero()) {
        return Err(Error::ZeroCompute(format!("compute {}", f)));
    }
    let tx = task.d / rate;
    let cycles = task.cycles();
    Ok(PathCost { delay: tx + prop + cycles / f, energy: power * tx + tau * cycles * f * f })
}

pub fn cost_gue_bs<T: Scalar>(task: &TaskSpec<T>, rate: T, f: T, tau_gro: T, p: T) -> Result<PathCost<T>> {
    path_cost(task, rate, f, tau_gro, p, T::zero())
}

/// `phi` in metres, `mu` in m/s.
pub fn cost_gue_sat<T: Scalar>(task: &TaskSpec<T>, rate: T, f: T, tau_sat: T, p: T, phi: T, mu: T) -> Result<PathCost<T>> {
    path_cost(task, rate, f, tau_sat, p, phi / mu)
}

pub fn cost_sue_sat<T: Scalar>(task: &TaskSpec<T>, rate: T, f: T, tau_sat: T, q: T, phi: T, mu: T) -> Result<PathCost<T>> {
    path_cost(task, rate, f, tau_sat, q, phi / mu)
}

/// Where a GUE offloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GueTarget {
    Bs(usize),
    Sat(usize),
}

/// A full assignment of every decision variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// K x M
    pub alpha: Vec<Vec<bool>>,
    /// K x N
    pub beta: Vec<Vec<bool>>,
    /// L x N
    pub gamma: Vec<Vec<bool>>,
    pub beams: Beamformers,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// K x M
    pub f_gro: Vec<Vec<f64>>,
    /// K x N
    pub f_sat_g: Vec<Vec<f64>>,
    /// L x N
    pub f_sat_s: Vec<Vec<f64>>,
}

impl Plan {
    /// Single target of GUE `k`; `None` unless exactly one is selected.
    pub fn gue_target(&self, k: usize) -> Option<GueTarget> {
        let bs = self.alpha[k].iter().enumerate().filter(|(_, &a)| a).map(|(m, _)| GueTarget::Bs(m));
        let sat = self.beta[k].iter().enumerate().filter(|(_, &b)| b).map(|(n, _)| GueTarget::Sat(n));
        let mut all = bs.chain(sat);
        match (all.next(), all.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    pub fn sue_target(&self, l: usize) -> Option<usize> {
        let mut all = self.gamma[l].iter().enumerate().filter(|(_, &g)| g).map(|(n, _)| n);
        match (all.next(), all.next()) {
            (Some(n), None) => Some(n),
            _ => None,
        }
    }

    pub fn set_gue_target(&mut self, k: usize, target: GueTarget) {
        self.alpha[k].iter_mut().for_each(|a| *a = false);
        self.beta[k].iter_mut().for_each(|b| *b = false);
        match target {
            GueTarget::Bs(m) => self.alpha[k][m] = true,
            GueTarget::Sat(n) => self.beta[k][n] = true,
        }
    }

    pub fn set_sue_target(&mut self, l: usize, n: usize) {
        self.gamma[l].iter_mut().for_each(|g| *g = false);
        self.gamma[l][n] = true;
    }

    /// Compute allocated to GUE `k` on its target.
    pub fn gue_compute(&self, k: usize, target: GueTarget) -> f64 {
        match target {
            GueTarget::Bs(m) => self.f_gro[k][m],
            GueTarget::Sat(n) => self.f_sat_g[k][n],
        }
    }

    pub fn gue_compute_mut(&mut self, k: usize, target: GueTarget) -> &mut f64 {
        match target {
            GueTarget::Bs(m) => &mut self.f_gro[k][m],
            GueTarget::Sat(n) => &mut self.f_sat_g[k][n],
        }
    }
}

/// Link quantities of a GUE on one node under the plan's powers and receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GueLink {
    /// `|w^H h|^2`
    pub gain: f64,
    /// Interference through `w`, noise excluded.
    pub interference: f64,
    pub noise: f64,
    pub bandwidth: f64,
    /// Propagation delay, s.
    pub prop: f64,
}

impl GueLink {
    pub fn rate(&self, p: f64) -> f64 {
        rate_from_sinr(self.bandwidth, p * self.gain / (self.interference + self.noise))
    }

    /// Power needed for `rate`; infinite if the gain is zero.
    pub fn power_for_rate(&self, rate: f64) -> f64 {
        ((rate / self.bandwidth).exp2() - 1.0).max(0.0) * (self.interference + self.noise) / self.gain
    }
}

pub fn gue_link(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, k: usize, target: GueTarget) -> GueLink {
    let (channels, w, order, noise, bandwidth, prop) = match target {
        GueTarget::Bs(m) => (&inst.h[m], &plan.beams.w[k][m], &inst.order_bs[m], scenario.noise1, scenario.b1, 0.0),
        GueTarget::Sat(n) => (
            &inst.g[n],
            &plan.beams.v[k][n],
            &inst.order_sat[n],
            scenario.sat_noise(),
            scenario.b2,
            inst.prop_gue_sat[k][n],
        ),
    };
    let wn = w.norm_squared();
    GueLink {
        gain: w.dotc(&channels[k]).norm_sqr() / wn,
        interference: interference(k, w, channels, &plan.p, order) / wn,
        noise,
        bandwidth,
        prop,
    }
}

/// SINR of GUE `k` on `target`.
pub fn gue_sinr(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, k: usize, target: GueTarget) -> f64 {
    match target {
        GueTarget::Bs(m) => sinr(k, &plan.beams.w[k][m], &inst.h[m], &plan.p, &inst.order_bs[m], scenario.noise1),
        GueTarget::Sat(n) => {
            sinr(k, &plan.beams.v[k][n], &inst.g[n], &plan.p, &inst.order_sat[n], scenario.sat_noise())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub t_gg: Vec<f64>,
    pub t_gs: Vec<f64>,
    pub e_gg: Vec<f64>,
    pub e_gs: Vec<f64>,
    pub t_ss: Vec<f64>,
    pub e_ss: Vec<f64>,
    /// Weighted energy, J.
    pub xi: f64,
    /// `I^g[k][m]`, interference through `w[k][m]`.
    pub interference_bs: Vec<Vec<f64>>,
    /// `I^s[k][n]`
    pub interference_sat: Vec<Vec<f64>>,
    /// `I_l[l][n]`, optical SNR per watt.
    pub snr_sue: Vec<Vec<f64>>,
}

impl CostReport {
    /// Weighted sum recomputed from the stored components.
    pub fn recompute_xi(&self, rho_g: f64, rho_s: f64) -> f64 {
        let g: f64 = self.e_gg.iter().zip(&self.e_gs).map(|(a, b)| rho_g * (a + b)).sum();
        let s: f64 = self.e_ss.iter().map(|e| rho_s * e).sum();
        g + s
    }

    pub fn gue_delay(&self, k: usize) -> f64 {
        self.t_gg[k] + self.t_gs[k]
    }
}

fn shape_check(inst: &NetworkInstance, plan: &Plan) -> Result<()> {
    let (k, l, m, n) = (inst.k(), inst.l(), inst.m(), inst.n());
    let ok = plan.alpha.len() == k
        && plan.alpha.iter().all(|r| r.len() == m)
        && plan.beta.len() == k
        && plan.beta.iter().all(|r| r.len() == n)
        && plan.gamma.len() == l
        && plan.gamma.iter().all(|r| r.len() == n)
        && plan.p.len() == k
        && plan.q.len() == l
        && plan.f_gro.len() == k
        && plan.f_gro.iter().all(|r| r.len() == m)
        && plan.f_sat_g.len() == k
        && plan.f_sat_g.iter().all(|r| r.len() == n)
        && plan.f_sat_s.len() == l
        && plan.f_sat_s.iter().all(|r| r.len() == n)
        && plan.beams.w.len() == k
        && plan.beams.w.iter().all(|r| r.len() == m)
        && plan.beams.v.len() == k
        && plan.beams.v.iter().all(|r| r.len() == n);
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("plan does not match instance dimensions".into()))
    }
}

/// Delays and energies of every task under `plan`. Unselected paths
/// contribute zero.
pub fn evaluate_plan(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig) -> Result<CostReport> {
    shape_check(inst, plan)?;
    let (kk, ll) = (inst.k(), inst.l());
    let mut rep = CostReport {
        t_gg: vec![0.0; kk],
        t_gs: vec![0.0; kk],
        e_gg: vec![0.0; kk],
        e_gs: vec![0.0; kk],
        t_ss: vec![0.0; ll],
        e_ss: vec![0.0; ll],
        xi: 0.0,
        interference_bs: (0..kk)
            .map(|k| (0..inst.m()).map(|m| gue_link(inst, plan, scenario, k, GueTarget::Bs(m)).interference).collect())
            .collect(),
        interference_sat: (0..kk)
            .map(|k| (0..inst.n()).map(|n| gue_link(inst, plan, scenario, k, GueTarget::Sat(n)).interference).collect())
            .collect(),
        snr_sue: inst.snr_sue.clone(),
    };
    for k in 0..kk {
        let task = &inst.gue_tasks[k];
        for m in (0..inst.m()).filter(|&m| plan.alpha[k][m]) {
            let rate = gue_link(inst, plan, scenario, k, GueTarget::Bs(m)).rate(plan.p[k]);
            let c = cost_gue_bs(task, rate, plan.f_gro[k][m], scenario.tau_gro, plan.p[k])?;
            rep.t_gg[k] += c.delay;
            rep.e_gg[k] += c.energy;
        }
        for n in (0..inst.n()).filter(|&n| plan.beta[k][n]) {
            let link = gue_link(inst, plan, scenario, k, GueTarget::Sat(n));
            let rate = link.rate(plan.p[k]);
            let c = cost_gue_sat(task, rate, plan.f_sat_g[k][n], scenario.tau_sat, plan.p[k], link.prop, 1.0)?;
            rep.t_gs[k] += c.delay;
            rep.e_gs[k] += c.energy;
        }
    }
    for l in 0..ll {
        let task = &inst.sue_tasks[l];
        for n in (0..inst.n()).filter(|&n| plan.gamma[l][n]) {
            let rate = rate_from_sinr(scenario.b3, plan.q[l] * inst.snr_sue[l][n]);
            let c = cost_sue_sat(task, rate, plan.f_sat_s[l][n], scenario.tau_sat, plan.q[l], inst.prop_sue_sat[l][n], 1.0)?;
            rep.t_ss[l] += c.delay;
            rep.e_ss[l] += c.energy;
        }
    }
    rep.xi = rep.recompute_xi(scenario.rho_g, scenario.rho_s);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    GueDelay { user: usize, delay: f64, budget: f64 },
    SueDelay { user: usize, delay: f64, budget: f64 },
    BsCapacity { node: usize, load: f64, capacity: f64 },
    SatCapacity { node: usize, load: f64, capacity: f64 },
    GueAssignment { user: usize, selected: usize },
    SueAssignment { user: usize, selected: usize },
    GuePower { user: usize, power: f64 },
    SuePower { user: usize, power: f64 },
    NegativeCompute { what: &'static str, user: usize, node: usize },
    BeamNorm { user: usize, node: String, norm: f64 },
    /// A selected path with zero rate or zero compute.
    Unserved { user: String, reason: String },
}

const TOL: f64 = 1e-9;

fn exceeds(value: f64, limit: f64) -> bool {
    value > limit + TOL * limit.abs().max(1e-300) || value.is_nan()
}

pub fn check_feasibility(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = shape_check(inst, plan) {
        out.push(Violation::Unserved { user: "all".into(), reason: e.to_string() });
        return out;
    }
    let (kk, ll, mm, nn) = (inst.k(), inst.l(), inst.m(), inst.n());
    for k in 0..kk {
        let selected = plan.alpha[k].iter().chain(&plan.beta[k]).filter(|&&x| x).count();
        if selected != 1 {
            out.push(Violation::GueAssignment { user: k, selected });
        }
        if plan.p[k] < 0.0 || exceeds(plan.p[k], scenario.p_max) {
            out.push(Violation::GuePower { user: k, power: plan.p[k] });
        }
    }
    for l in 0..ll {
        let selected = plan.gamma[l].iter().filter(|&&x| x).count();
        if selected != 1 {
            out.push(Violation::SueAssignment { user: l, selected });
        }
        if plan.q[l] < 0.0 || exceeds(plan.q[l], scenario.q_max) {
            out.push(Violation::SuePower { user: l, power: plan.q[l] });
        }
    }
    for (what, mat) in [("f_gro", &plan.f_gro), ("f_sat_g", &plan.f_sat_g), ("f_sat_s", &plan.f_sat_s)] {
        for (u, row) in mat.iter().enumerate() {
            for (node, &f) in row.iter().enumerate() {
                if f < 0.0 || f.is_nan() {
                    out.push(Violation::NegativeCompute { what, user: u, node });
                }
            }
        }
    }
    for m in 0..mm {
        let load: f64 = (0..kk).filter(|&k| plan.alpha[k][m]).map(|k| plan.f_gro[k][m]).sum();
        if exceeds(load, scenario.f_gro) {
            out.push(Violation::BsCapacity { node: m, load, capacity: scenario.f_gro });
        }
    }
    for n in 0..nn {
        let load: f64 = (0..kk).filter(|&k| plan.beta[k][n]).map(|k| plan.f_sat_g[k][n]).sum::<f64>()
            + (0..ll).filter(|&l| plan.gamma[l][n]).map(|l| plan.f_sat_s[l][n]).sum::<f64>();
        if exceeds(load, scenario.f_sat) {
            out.push(Violation::SatCapacity { node: n, load, capacity: scenario.f_sat });
        }
    }
    for (kind, mat) in [("bs", &plan.beams.w), ("sat", &plan.beams.v)] {
        for (k, row) in mat.iter().enumerate() {
            for (node, w) in row.iter().enumerate() {
                let norm = w.norm();
                if (norm * norm - 1.0).abs() > 1e-6 {
                    out.push(Violation::BeamNorm { user: k, node: format!("{kind}{node}"), norm });
                }
            }
        }
    }
    // delays, computed per user so one unserved path does not hide the rest
    for k in 0..kk {
        for (target, on) in (0..mm)
            .map(|m| (GueTarget::Bs(m), plan.alpha[k][m]))
            .chain((0..nn).map(|n| (GueTarget::Sat(n), plan.beta[k][n])))
        {
            if !on {
                continue;
            }
            let link = gue_link(inst, plan, scenario, k, target);
            let f = plan.gue_compute(k, target);
            match path_cost(&inst.gue_tasks[k], link.rate(plan.p[k]), f, 0.0, 0.0, link.prop) {
                Ok(c) if exceeds(c.delay, scenario.z_g) => {
                    out.push(Violation::GueDelay { user: k, delay: c.delay, budget: scenario.z_g })
                }
                Ok(_) => {}
                Err(e) => out.push(Violation::Unserved { user: format!("gue{k}"), reason: e.to_string() }),
            }
        }
    }
    for l in 0..ll {
        for n in (0..nn).filter(|&n| plan.gamma[l][n]) {
            let rate = rate_from_sinr(scenario.b3, plan.q[l] * inst.snr_sue[l][n]);
            match path_cost(&inst.sue_tasks[l], rate, plan.f_sat_s[l][n], 0.0, 0.0, inst.prop_sue_sat[l][n]) {
                Ok(c) if exceeds(c.delay, scenario.z_s) => {
                    out.push(Violation::SueDelay { user: l, delay: c.delay, budget: scenario.z_s })
                }
                Ok(_) => {}
                Err(e) => out.push(Violation::Unserved { user: format!("sue{l}"), reason: e.to_string() }),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    use crate::C64;

    #[test]
    fn path_cost_arithmetic() {
        let task = TaskSpec::new(1.6384e6, 100.0).unwrap();
        let c = cost_gue_bs(&task, f64::INFINITY, 10e9, 0.0, 1.0).unwrap();
        assert!((c.delay - 16.384e-3).abs() < 1e-15);
        assert_eq!(c.energy, 0.0);
        let c = cost_gue_bs(&task, f64::INFINITY, 1e9, 5e-27, 0.0).unwrap();
        assert!((c.energy - 0.8192).abs() < 1e-12);
        let c = cost_gue_bs(&task, 1e9, 1e9, 5e-27, 0.2).unwrap();
        assert!((c.delay - (1.6384e-3 + 0.16384)).abs() < 1e-12);
        assert!((c.energy - (0.2 * 1.6384e-3 + 0.8192)).abs() < 1e-12);
        assert!(matches!(cost_gue_bs(&task, 0.0, 1e9, 5e-27, 0.2), Err(Error::ZeroRate(_))));
        assert!(matches!(cost_gue_bs(&task, 1e6, 0.0, 5e-27, 0.2), Err(Error::ZeroCompute(_))));
        assert!(TaskSpec::new(0.0, 1.0).is_err());
        let t32 = TaskSpec::new(1.6384e6_f32, 100.0).unwrap();
        assert!((cost_gue_bs(&t32, f32::INFINITY, 1e10, 0.0, 1.0).unwrap().delay - 16.384e-3).abs() < 1e-6);
    }

    #[test]
    fn satellite_propagation_delay() {
        let task = TaskSpec::new(1e6_f64, 50.0).unwrap();
        let bs = cost_gue_bs(&task, 2e7, 5e9, 1e-28, 0.5).unwrap();
        let sat = cost_gue_sat(&task, 2e7, 5e9, 1e-28, 0.5, 550e3, 3e8).unwrap();
        assert!((sat.delay - bs.delay - 550e3 / 3e8).abs() < 1e-12);
        assert_eq!(sat.energy, bs.energy);
        let far = cost_sue_sat(&task, 2e7, 5e9, 1e-28, 0.5, 2700e3, 3e8).unwrap();
        assert!((far.delay - bs.delay - 9e-3).abs() < 1e-12);
    }

    /// One GUE, one BS, one satellite, one SUE with scalar channels.
    fn mini() -> (NetworkInstance, ScenarioConfig, Plan) {
        let scenario = ScenarioConfig { k: 1, l: 1, m: 1, n: 1, nt_g: 1, nt_s: 1, ..ScenarioConfig::default() };
        let mut inst = NetworkInstance::sample(&scenario, 1).unwrap();
        inst.h[0][0] = DVector::from_element(1, C64::new(3e-6, 4e-6));
        inst.g[0][0] = DVector::from_element(1, C64::new(0.0, 1e-5));
        inst.gue_tasks[0] = TaskSpec::new(1e6, 100.0).unwrap();
        inst.sue_tasks[0] = TaskSpec::new(2e6, 50.0).unwrap();
        inst.snr_sue[0][0] = 1e3;
        inst.prop_gue_sat[0][0] = 2e-3;
        inst.prop_sue_sat[0][0] = 3e-3;
        inst.refresh_orders();
        let one = || vec![vec![DVector::from_element(1, C64::new(1.0, 0.0))]];
        let plan = Plan {
            alpha: vec![vec![true]],
            beta: vec![vec![false]],
            gamma: vec![vec![true]],
            beams: Beamformers { w: one(), v: one() },
            p: vec![0.5],
            q: vec![1.0],
            f_gro: vec![vec![4e9]],
            f_sat_g: vec![vec![2e9]],
            f_sat_s: vec![vec![3e9]],
        };
        (inst, scenario, plan)
    }

    #[test]
    fn mini_instance_longhand() {
        let (inst, sc, plan) = mini();
        let rep = evaluate_plan(&inst, &plan, &sc).unwrap();
        let snr_g = 0.5 * 25e-12 / sc.noise1;
        let r_g = sc.b1 * (1.0 + snr_g).log2();
        let e_g = 0.5 * 1e6 / r_g + sc.tau_gro * 1e8 * 16e18;
        let r_s = sc.b3 * (1.0 + 1e3_f64).log2();
        let e_s = 1.0 * 2e6 / r_s + sc.tau_sat * 1e8 * 9e18;
        assert!((rep.e_gg[0] - e_g).abs() < 1e-12 * e_g);
        assert!((rep.e_ss[0] - e_s).abs() < 1e-12 * e_s);
        assert_eq!(rep.e_gs[0], 0.0);
        assert_eq!(rep.t_gs[0], 0.0);
        assert!((rep.t_ss[0] - (2e6 / r_s + 3e-3 + 1e8 / 3e9)).abs() < 1e-12);
        let xi = sc.rho_g * e_g + sc.rho_s * e_s;
        assert!((rep.xi - xi).abs() < 1e-12 * xi);
        assert!((rep.recompute_xi(sc.rho_g, sc.rho_s) - rep.xi).abs() <= 1e-12 * rep.xi);
    }

    #[test]
    fn weights_scale_objective() {
        let (inst, sc, plan) = mini();
        let zero = ScenarioConfig { rho_g: 0.0, rho_s: 0.0, ..sc.clone() };
        assert_eq!(evaluate_plan(&inst, &plan, &zero).unwrap().xi, 0.0);
        let double = ScenarioConfig { rho_g: 2.0 * sc.rho_g, rho_s: 2.0 * sc.rho_s, ..sc.clone() };
        let a = evaluate_plan(&inst, &plan, &sc).unwrap().xi;
        let b = evaluate_plan(&inst, &plan, &double).unwrap().xi;
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn gating_switches_paths() {
        let (inst, sc, mut plan) = mini();
        plan.set_gue_target(0, GueTarget::Sat(0));
        assert_eq!(plan.gue_target(0), Some(GueTarget::Sat(0)));
        let rep = evaluate_plan(&inst, &plan, &sc).unwrap();
        assert_eq!(rep.e_gg[0], 0.0);
        assert_eq!(rep.t_gg[0], 0.0);
        assert!(rep.e_gs[0] > 0.0);
        let snr = 0.5 * 1e-10 / sc.sat_noise();
        let r = sc.b2 * snr.ln_1p() / std::f64::consts::LN_2;
        let want = 1e6 / r + 2e-3 + 1e8 / 2e9;
        assert!((rep.t_gs[0] - want).abs() < 1e-12 * want, "{} vs {want}", rep.t_gs[0]);
        // unselected zero compute is not an error
        plan.f_gro[0][0] = 0.0;
        assert!(evaluate_plan(&inst, &plan, &sc).is_ok());
        plan.f_sat_g[0][0] = 0.0;
        assert!(matches!(evaluate_plan(&inst, &plan, &sc), Err(Error::ZeroCompute(_))));
    }

    #[test]
    fn violations() {
        let (inst, sc, plan) = mini();
        let relaxed = ScenarioConfig { z_g: 1.0, z_s: 1.0, ..sc.clone() };
        assert!(check_feasibility(&inst, &plan, &relaxed).is_empty(), "{:?}", check_feasibility(&inst, &plan, &relaxed));

        let mut over = plan.clone();
        over.f_sat_s[0][0] = 2.0 * sc.f_sat;
        let v = check_feasibility(&inst, &over, &relaxed);
        assert_eq!(v.iter().filter(|x| matches!(x, Violation::SatCapacity { .. })).count(), 1);
        assert_eq!(v.len(), 1);

        let mut both = plan.clone();
        both.beta[0][0] = true;
        let v = check_feasibility(&inst, &both, &relaxed);
        assert!(v.contains(&Violation::GueAssignment { user: 0, selected: 2 }));

        let mut hot = plan.clone();
        hot.p[0] = 2.0 * sc.p_max;
        hot.beams.w[0][0] *= C64::from(2.0);
        let v = check_feasibility(&inst, &hot, &relaxed);
        assert!(v.iter().any(|x| matches!(x, Violation::GuePower { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::BeamNorm { .. })));

        let tight = ScenarioConfig { z_g: 1e-6, ..relaxed };
        let v = check_feasibility(&inst, &plan, &tight);
        assert!(matches!(v[..], [Violation::GueDelay { user: 0, .. }]));
    }

    #[test]
    fn power_for_rate_inverts_rate() {
        let link = GueLink { gain: 2e-11, interference: 3e-14, noise: 1e-14, bandwidth: 2e7, prop: 0.0 };
        for p in [1e-3, 0.1, 0.7] {
            let r = link.rate(p);
            assert!((link.power_for_rate(r) - p).abs() < 1e-12);
        }
        assert_eq!(link.power_for_rate(0.0), 0.0);
    }
}
