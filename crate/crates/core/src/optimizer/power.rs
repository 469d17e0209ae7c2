//! GUE transmit power: least power that meets the delay budget exactly.

use crate::costmodel::{gue_link, GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;

/// Closed-form optimum for one user: the power whose rate spends exactly the
/// residual budget on transmission, clamped at `p_max`.
pub fn required_power(d: f64, bandwidth: f64, residual: f64, gain: f64, interference: f64, noise: f64, p_max: f64) -> f64 {
    let need = ((d / (bandwidth * residual)).exp2() - 1.0) * (interference + noise) / gain;
    need.min(p_max)
}

/// Residual budget left for transmission on `target` under compute `f`.
fn residual(inst: &NetworkInstance, scenario: &ScenarioConfig, plan: &Plan, k: usize, target: GueTarget) -> Result<f64> {
    let task = &inst.gue_tasks[k];
    let prop = match target {
        GueTarget::Bs(_) => 0.0,
        GueTarget::Sat(n) => inst.prop_gue_sat[k][n],
    };
    let f = plan.gue_compute(k, target);
    let budget = scenario.z_g - task.cycles() / f - prop;
    if budget > 0.0 && budget.is_finite() {
        Ok(budget)
    } else {
        Err(Error::NegativeDelayBudget { user: k, budget })
    }
}

/// Update order: users decoded late at their node come first, so earlier
/// users see the fresh powers of their interferers.
fn sweep_order(inst: &NetworkInstance, plan: &Plan) -> Vec<usize> {
    let mut users: Vec<(usize, usize)> = (0..inst.k())
        .filter_map(|k| {
            plan.gue_target(k).map(|t| match t {
                GueTarget::Bs(m) => (inst.order_bs[m].rank[k], k),
                GueTarget::Sat(n) => (inst.order_sat[n].rank[k], k),
            })
        })
        .collect();
    users.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    users.into_iter().map(|(_, k)| k).collect()
}

/// One Gauss-Seidel sweep of the closed form over all selected GUEs,
/// starting from the plan's powers.
pub fn gue_power_closed_form(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig) -> Result<Vec<f64>> {
    let mut work = plan.clone();
    for k in sweep_order(inst, plan) {
        update_user(inst, scenario, &mut work, k)?;
    }
    Ok(work.p)
}

fn update_user(inst: &NetworkInstance, scenario: &ScenarioConfig, work: &mut Plan, k: usize) -> Result<f64> {
    let Some(target) = work.gue_target(k) else { return Ok(0.0) };
    let z = residual(inst, scenario, work, k, target)?;
    let link = gue_link(inst, work, scenario, k, target);
    let p = required_power(inst.gue_tasks[k].d, link.bandwidth, z, link.gain, link.interference, link.noise, f64::INFINITY);
    let old = work.p[k];
    work.p[k] = p.min(scenario.p_max);
    Ok((p - old).abs() / old.abs().max(1e-300))
}

/// Iterates sweeps from `start` until powers settle. Returns `None` when the
/// least powers meeting every delay exceed the budget.
pub fn power_fixed_point(
    inst: &NetworkInstance,
    plan: &Plan,
    scenario: &ScenarioConfig,
    start: &[f64],
    max_sweeps: usize,
) -> Result<Option<Vec<f64>>> {
    let mut work = plan.clone();
    work.p.copy_from_slice(start);
    let order = sweep_order(inst, plan);
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        let mut over = false;
        for &k in &order {
            let target = work.gue_target(k).expect("selected");
            let z = residual(inst, scenario, &work, k, target)?;
            let link = gue_link(inst, &work, scenario, k, target);
            let p = required_power(inst.gue_tasks[k].d, link.bandwidth, z, link.gain, link.interference, link.noise, f64::INFINITY);
            over |= p > scenario.p_max * (1.0 + 1e-12);
            change = change.max((p - work.p[k]).abs() / p.max(1e-300));
            work.p[k] = p;
        }
        if change < 1e-13 {
            return Ok((!over).then(|| work.p.iter().map(|&p| p.min(scenario.p_max)).collect()));
        }
        if work.p.iter().any(|&p| p > 1e6 * scenario.p_max) {
            return Ok(None);
        }
    }
    let ok = work.p.iter().all(|&p| p <= scenario.p_max * (1.0 + 1e-12));
    Ok(ok.then(|| work.p.iter().map(|&p| p.min(scenario.p_max)).collect()))
}

/// SUE powers meeting the delay exactly under the plan's compute.
pub fn sue_power_closed_form(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig) -> Result<Vec<f64>> {
    let mut q = plan.q.clone();
    for (l, ql) in q.iter_mut().enumerate() {
        let Some(n) = plan.sue_target(l) else { continue };
        let task = &inst.sue_tasks[l];
        let budget = scenario.z_s - task.cycles() / plan.f_sat_s[l][n] - inst.prop_sue_sat[l][n];
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::NegativeDelayBudget { user: l, budget });
        }
        *ql = required_power(task.d, scenario.b3, budget, inst.snr_sue[l][n], 0.0, 1.0, scenario.q_max);
    }
    Ok(q)
}
