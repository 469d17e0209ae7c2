//! Offloading selection: LP relaxation over the per-option costs, mapping to
//! a binary choice, capacity repair, and option construction.

use crate::costmodel::{gue_link, GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::linkrate::rate_from_sinr;
use crate::solvers::{solve_lp, LinearProgram, SolveStatus};

/// Cost of one offloading option with everything else fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionCost {
    /// Weighted energy, J.
    pub energy: f64,
    /// s
    pub delay: f64,
    /// Compute the option would use, cycles/s.
    pub compute: f64,
    pub allowed: bool,
}

/// Every option of every user with the other blocks fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadProblem {
    /// `gue[k]`: BS options first, then satellites.
    pub gue: Vec<Vec<(GueTarget, OptionCost)>>,
    /// `sue[l][n]`
    pub sue: Vec<Vec<OptionCost>>,
    pub m: usize,
    pub n: usize,
    pub f_gro: f64,
    pub f_sat: f64,
    pub z_g: f64,
    pub z_s: f64,
}

/// Binary selection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Selection {
    pub gue: Vec<GueTarget>,
    pub sue: Vec<usize>,
}

impl Selection {
    pub fn of_plan(plan: &Plan) -> Option<Self> {
        let gue = (0..plan.alpha.len()).map(|k| plan.gue_target(k)).collect::<Option<Vec<_>>>()?;
        let sue = (0..plan.gamma.len()).map(|l| plan.sue_target(l)).collect::<Option<Vec<_>>>()?;
        Some(Self { gue, sue })
    }

    pub fn apply(&self, plan: &mut Plan) {
        for (k, &t) in self.gue.iter().enumerate() {
            plan.set_gue_target(k, t);
        }
        for (l, &n) in self.sue.iter().enumerate() {
            plan.set_sue_target(l, n);
        }
    }
}

/// Compute that exactly meets `budget` once `fixed` seconds are spent
/// elsewhere; `None` when no positive time is left.
pub fn min_compute(cycles: f64, budget: f64, fixed: f64) -> Option<f64> {
    let left = budget - fixed;
    (left > 0.0).then(|| cycles / left)
}

/// Compute attached to each option when building costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionCompute {
    /// Least compute meeting the delay everywhere; the plan's selection is ignored.
    Least,
    /// The plan's compute on selected options, least compute elsewhere.
    KeepSelected,
    /// The plan's compute on every option.
    Pinned,
}

/// Builds option costs from `plan` with everything but the selection fixed.
pub fn build_options(inst: &NetworkInstance, plan: &Plan, scenario: &ScenarioConfig, rule: OptionCompute) -> OffloadProblem {
    let selected = rule == OptionCompute::KeepSelected;
    let pinned = rule == OptionCompute::Pinned;
    let targets: Vec<GueTarget> = (0..inst.m()).map(GueTarget::Bs).chain((0..inst.n()).map(GueTarget::Sat)).collect();
    let gue = (0..inst.k())
        .map(|k| {
            let task = &inst.gue_tasks[k];
            let current = if selected { plan.gue_target(k) } else { None };
            targets
                .iter()
                .map(|&t| {
                    let link = gue_link(inst, plan, scenario, k, t);
                    let rate = link.rate(plan.p[k]);
                    let (tau, cap) = match t {
                        GueTarget::Bs(_) => (scenario.tau_gro, scenario.f_gro),
                        GueTarget::Sat(_) => (scenario.tau_sat, scenario.f_sat),
                    };
                    let tx = if rate > 0.0 { task.d / rate } else { f64::INFINITY };
                    let f = if pinned || current == Some(t) {
                        Some(plan.gue_compute(k, t))
                    } else {
                        min_compute(task.cycles(), scenario.z_g, tx + link.prop)
                    };
                    (t, option_cost(scenario.rho_g, plan.p[k], tx, link.prop, task.cycles(), tau, f, cap, scenario.z_g))
                })
                .collect()
        })
        .collect();
    let sue = (0..inst.l())
        .map(|l| {
            let task = &inst.sue_tasks[l];
            let current = if selected { plan.sue_target(l) } else { None };
            (0..inst.n())
                .map(|n| {
                    let rate = rate_from_sinr(scenario.b3, plan.q[l] * inst.snr_sue[l][n]);
                    let tx = if rate > 0.0 { task.d / rate } else { f64::INFINITY };
                    let prop = inst.prop_sue_sat[l][n];
                    let f = if pinned || current == Some(n) {
                        Some(plan.f_sat_s[l][n])
                    } else {
                        min_compute(task.cycles(), scenario.z_s, tx + prop)
                    };
                    option_cost(scenario.rho_s, plan.q[l], tx, prop, task.cycles(), scenario.tau_sat, f, scenario.f_sat, scenario.z_s)
                })
                .collect()
        })
        .collect();
    OffloadProblem {
        gue,
        sue,
        m: inst.m(),
        n: inst.n(),
        f_gro: scenario.f_gro,
        f_sat: scenario.f_sat,
        z_g: scenario.z_g,
        z_s: scenario.z_s,
    }
}

#[allow(clippy::too_many_arguments)]
fn option_cost(rho: f64, power: f64, tx: f64, prop: f64, cycles: f64, tau: f64, f: Option<f64>, cap: f64, budget: f64) -> OptionCost {
    match f {
        Some(f) if f > 0.0 && f.is_finite() && tx.is_finite() => {
            let delay = tx + prop + cycles / f;
            OptionCost {
                energy: rho * (power * tx + tau * cycles * f * f),
                delay,
                compute: f,
                allowed: f <= cap * (1.0 + 1e-12) && delay <= budget * (1.0 + 1e-9),
            }
        }
        _ => OptionCost { energy: f64::INFINITY, delay: f64::INFINITY, compute: f64::INFINITY, allowed: false },
    }
}

/// Continuous selection with rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDecision {
    /// `gue[k][option]`, options ordered as in [`OffloadProblem::gue`].
    pub gue: Vec<Vec<f64>>,
    pub sue: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Column of each option in the LP; `None` for disallowed options.
struct Columns {
    gue: Vec<Vec<Option<usize>>>,
    sue: Vec<Vec<Option<usize>>>,
    count: usize,
}

fn columns(prob: &OffloadProblem) -> Columns {
    let mut count = 0;
    let mut next = |ok: bool| {
        ok.then(|| {
            count += 1;
            count - 1
        })
    };
    let gue = prob.gue.iter().map(|opts| opts.iter().map(|(_, o)| next(o.allowed)).collect()).collect();
    let sue = prob.sue.iter().map(|opts| opts.iter().map(|o| next(o.allowed)).collect()).collect();
    Columns { gue, sue, count }
}

/// `fixed[(user, option)] = Some(true)` forces, `Some(false)` forbids.
pub(crate) type Fixings = (Vec<Vec<Option<bool>>>, Vec<Vec<Option<bool>>>);

pub(crate) fn relaxed_with_fixings(prob: &OffloadProblem, fix: Option<&Fixings>) -> Result<Option<RelaxedDecision>> {
    let cols = columns(prob);
    let mut c = vec![0.0; cols.count];
    for (k, opts) in prob.gue.iter().enumerate() {
        for (i, (_, o)) in opts.iter().enumerate() {
            if let Some(j) = cols.gue[k][i] {
                c[j] = o.energy;
            }
        }
    }
    for (l, opts) in prob.sue.iter().enumerate() {
        for (n, o) in opts.iter().enumerate() {
            if let Some(j) = cols.sue[l][n] {
                c[j] = o.energy;
            }
        }
    }
    // scale the objective to order one
    let scale = c.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut lp = LinearProgram::new(c.iter().map(|x| x / scale).collect());
    lp.hi = vec![1.0; cols.count];
    let row = |pairs: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut r = vec![0.0; cols.count];
        for (j, v) in pairs {
            r[j] += v;
        }
        r
    };
    for (k, opts) in prob.gue.iter().enumerate() {
        if cols.gue[k].iter().all(|c| c.is_none()) {
            return Ok(None);
        }
        let r = row(&mut cols.gue[k].iter().flatten().map(|&j| (j, 1.0)));
        lp.add_eq(r, 1.0);
        // delay of the mixture
        let r = row(&mut cols.gue[k].iter().zip(opts).filter_map(|(j, (_, o))| j.map(|j| (j, o.delay / prob.z_g))));
        lp.add_le(r, 1.0 + 1e-9);
    }
    for (l, opts) in prob.sue.iter().enumerate() {
        if cols.sue[l].iter().all(|c| c.is_none()) {
            return Ok(None);
        }
        let r = row(&mut cols.sue[l].iter().flatten().map(|&j| (j, 1.0)));
        lp.add_eq(r, 1.0);
        let r = row(&mut cols.sue[l].iter().zip(opts).filter_map(|(j, o)| j.map(|j| (j, o.delay / prob.z_s))));
        lp.add_le(r, 1.0 + 1e-9);
    }
    for m in 0..prob.m {
        let r = row(&mut (0..prob.gue.len()).filter_map(|k| cols.gue[k][m].map(|j| (j, prob.gue[k][m].1.compute / prob.f_gro))));
        lp.add_le(r, 1.0);
    }
    for n in 0..prob.n {
        let g = (0..prob.gue.len()).filter_map(|k| cols.gue[k][prob.m + n].map(|j| (j, prob.gue[k][prob.m + n].1.compute / prob.f_sat)));
        let s = (0..prob.sue.len()).filter_map(|l| cols.sue[l][n].map(|j| (j, prob.sue[l][n].compute / prob.f_sat)));
        let r = row(&mut g.chain(s));
        lp.add_le(r, 1.0);
    }
    if let Some((fg, fs)) = fix {
        for (k, row_fix) in fg.iter().enumerate() {
            for (i, f) in row_fix.iter().enumerate() {
                match (f, cols.gue[k][i]) {
                    (Some(true), None) => return Ok(None),
                    (Some(v), Some(j)) => {
                        let x = if *v { 1.0 } else { 0.0 };
                        lp.lo[j] = x;
                        lp.hi[j] = x;
                    }
                    _ => {}
                }
            }
        }
        for (l, row_fix) in fs.iter().enumerate() {
            for (n, f) in row_fix.iter().enumerate() {
                match (f, cols.sue[l][n]) {
                    (Some(true), None) => return Ok(None),
                    (Some(v), Some(j)) => {
                        let x = if *v { 1.0 } else { 0.0 };
                        lp.lo[j] = x;
                        lp.hi[j] = x;
                    }
                    _ => {}
                }
            }
        }
    }
    let rep = solve_lp(&lp, 1e-10)?;
    if rep.status != SolveStatus::Optimal {
        return Ok(None);
    }
    let get = |j: Option<usize>| j.map_or(0.0, |j| rep.x[j].clamp(0.0, 1.0));
    Ok(Some(RelaxedDecision {
        gue: cols.gue.iter().map(|r| r.iter().map(|&j| get(j)).collect()).collect(),
        sue: cols.sue.iter().map(|r| r.iter().map(|&j| get(j)).collect()).collect(),
        objective: rep.objective * scale,
    }))
}

/// Solves the relaxed selection LP.
pub fn solve_offload_relaxed(prob: &OffloadProblem) -> Result<RelaxedDecision> {
    relaxed_with_fixings(prob, None)?.ok_or_else(|| Error::Infeasible("relaxed offloading problem".into()))
}

fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Largest fraction wins; ties go to base stations, then the lower index.
pub fn map_to_binary(prob: &OffloadProblem, relaxed: &RelaxedDecision) -> Selection {
    Selection {
        gue: relaxed.gue.iter().enumerate().map(|(k, r)| prob.gue[k][argmax_first(r)].0).collect(),
        sue: relaxed.sue.iter().map(|r| argmax_first(r)).collect(),
    }
}

fn option_index(prob: &OffloadProblem, t: GueTarget) -> usize {
    match t {
        GueTarget::Bs(m) => m,
        GueTarget::Sat(n) => prob.m + n,
    }
}

/// Compute load per node: base stations, then satellites.
pub fn node_loads(prob: &OffloadProblem, sel: &Selection) -> (Vec<f64>, Vec<f64>) {
    let mut bs = vec![0.0; prob.m];
    let mut sat = vec![0.0; prob.n];
    for (k, &t) in sel.gue.iter().enumerate() {
        let f = prob.gue[k][option_index(prob, t)].1.compute;
        match t {
            GueTarget::Bs(m) => bs[m] += f,
            GueTarget::Sat(n) => sat[n] += f,
        }
    }
    for (l, &n) in sel.sue.iter().enumerate() {
        sat[n] += prob.sue[l][n].compute;
    }
    (bs, sat)
}

/// Objective of a binary selection; `None` if an option is disallowed or a
/// node is overloaded.
pub fn selection_cost(prob: &OffloadProblem, sel: &Selection) -> Option<f64> {
    let mut total = 0.0;
    for (k, &t) in sel.gue.iter().enumerate() {
        let o = prob.gue[k][option_index(prob, t)].1;
        if !o.allowed {
            return None;
        }
        total += o.energy;
    }
    for (l, &n) in sel.sue.iter().enumerate() {
        let o = prob.sue[l][n];
        if !o.allowed {
            return None;
        }
        total += o.energy;
    }
    let (bs, sat) = node_loads(prob, sel);
    let over = bs.iter().any(|&x| x > prob.f_gro * (1.0 + 1e-9)) || sat.iter().any(|&x| x > prob.f_sat * (1.0 + 1e-9));
    (!over).then_some(total)
}

/// Moves users off overloaded nodes, smallest relaxed fraction first, to the
/// cheapest allowed option with room.
pub fn repair_capacity(prob: &OffloadProblem, relaxed: &RelaxedDecision, mut sel: Selection) -> Result<Selection> {
    let users = sel.gue.len() + sel.sue.len();
    for _ in 0..=users {
        let (bs, sat) = node_loads(prob, &sel);
        let over_bs = (0..prob.m).find(|&m| bs[m] > prob.f_gro * (1.0 + 1e-9));
        let over_sat = (0..prob.n).find(|&n| sat[n] > prob.f_sat * (1.0 + 1e-9));
        if over_bs.is_none() && over_sat.is_none() {
            return Ok(sel);
        }
        // candidates on the overloaded node: (fraction, is_sue, index)
        let mut cands: Vec<(f64, bool, usize)> = Vec::new();
        if let Some(m) = over_bs {
            for (k, &t) in sel.gue.iter().enumerate() {
                if t == GueTarget::Bs(m) {
                    cands.push((relaxed.gue[k][m], false, k));
                }
            }
        } else if let Some(n) = over_sat {
            for (k, &t) in sel.gue.iter().enumerate() {
                if t == GueTarget::Sat(n) {
                    cands.push((relaxed.gue[k][prob.m + n], false, k));
                }
            }
            for (l, &s) in sel.sue.iter().enumerate() {
                if s == n {
                    cands.push((relaxed.sue[l][n], true, l));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut moved = false;
        for &(_, is_sue, u) in &cands {
            if is_sue {
                let from = sel.sue[u];
                let best = (0..prob.n)
                    .filter(|&n| n != from && prob.sue[u][n].allowed && sat[n] + prob.sue[u][n].compute <= prob.f_sat * (1.0 + 1e-9))
                    .min_by(|&a, &b| prob.sue[u][a].energy.total_cmp(&prob.sue[u][b].energy));
                if let Some(n) = best {
                    sel.sue[u] = n;
                    moved = true;
                    break;
                }
            } else {
                let from = sel.gue[u];
                let best = prob.gue[u]
                    .iter()
                    .filter(|(t, o)| {
                        *t != from
                            && o.allowed
                            && match *t {
                                GueTarget::Bs(m) => bs[m] + o.compute <= prob.f_gro * (1.0 + 1e-9),
                                GueTarget::Sat(n) => sat[n] + o.compute <= prob.f_sat * (1.0 + 1e-9),
                            }
                    })
                    .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy));
                if let Some(&(t, _)) = best {
                    sel.gue[u] = t;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            return Err(Error::IrreparableCapacity(format!(
                "no user on {} can move",
                over_bs.map_or_else(|| format!("satellite {}", over_sat.unwrap_or(0)), |m| format!("base station {m}"))
            )));
        }
    }
    Err(Error::IrreparableCapacity("move budget exhausted".into()))
}

/// Relax, map and repair.
pub fn select_offloading(prob: &OffloadProblem) -> Result<(Selection, RelaxedDecision)> {
    let relaxed = solve_offload_relaxed(prob)?;
    let mapped = map_to_binary(prob, &relaxed);
    let sel = match selection_cost(prob, &mapped) {
        Some(_) => mapped,
        None => repair_capacity(prob, &relaxed, mapped)?,
    };
    Ok((sel, relaxed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(energy: f64, compute: f64) -> OptionCost {
        OptionCost { energy, delay: 0.05, compute, allowed: true }
    }

    fn two_node(gue: Vec<Vec<OptionCost>>, sue: Vec<Vec<OptionCost>>) -> OffloadProblem {
        OffloadProblem {
            gue: gue.into_iter().map(|r| vec![(GueTarget::Bs(0), r[0]), (GueTarget::Sat(0), r[1])]).collect(),
            sue,
            m: 1,
            n: 1,
            f_gro: 10.0,
            f_sat: 10.0,
            z_g: 0.1,
            z_s: 0.1,
        }
    }

    #[test]
    fn dominant_base_station_gets_all_mass() {
        let prob = two_node(vec![vec![opt(1.0, 1.0), opt(2.0, 1.0)]], vec![]);
        let r = solve_offload_relaxed(&prob).unwrap();
        assert!((r.gue[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(map_to_binary(&prob, &r).gue, vec![GueTarget::Bs(0)]);
    }

    #[test]
    fn symmetric_sue_split_is_a_vertex() {
        let prob = OffloadProblem {
            gue: vec![],
            sue: vec![vec![opt(1.0, 1.0), opt(1.0, 1.0)]],
            m: 0,
            n: 2,
            f_gro: 10.0,
            f_sat: 10.0,
            z_g: 0.1,
            z_s: 0.1,
        };
        let r = solve_offload_relaxed(&prob).unwrap();
        assert!(r.sue[0].iter().all(|&x| x.abs() < 1e-12 || (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mapping_rules() {
        let prob = two_node(vec![vec![opt(1.0, 1.0), opt(1.0, 1.0)]], vec![]);
        let pick = |a: f64, b: f64| map_to_binary(&prob, &RelaxedDecision { gue: vec![vec![a, b]], sue: vec![], objective: 0.0 }).gue[0];
        assert_eq!(pick(0.6, 0.4), GueTarget::Bs(0));
        assert_eq!(pick(0.4, 0.6), GueTarget::Sat(0));
        assert_eq!(pick(0.5, 0.5), GueTarget::Bs(0));
        assert_eq!(pick(0.0, 1.0), GueTarget::Sat(0));
    }

    #[test]
    fn repair_moves_one_user() {
        // two GUEs both prefer the satellite, which fits only one
        let prob = two_node(vec![vec![opt(3.0, 4.0), opt(1.0, 6.0)], vec![opt(3.0, 4.0), opt(1.0, 6.0)]], vec![]);
        let relaxed = RelaxedDecision { gue: vec![vec![0.4, 0.6], vec![0.3, 0.7]], sue: vec![], objective: 0.0 };
        let sel = map_to_binary(&prob, &relaxed);
        assert_eq!(sel.gue, vec![GueTarget::Sat(0), GueTarget::Sat(0)]);
        let fixed = repair_capacity(&prob, &relaxed, sel).unwrap();
        assert_eq!(fixed.gue, vec![GueTarget::Bs(0), GueTarget::Sat(0)]);
        // untouched when already within capacity
        assert_eq!(repair_capacity(&prob, &relaxed, fixed.clone()).unwrap(), fixed);
    }

    #[test]
    fn repair_fails_when_demand_exceeds_supply() {
        let prob = two_node(vec![vec![opt(1.0, 8.0), opt(1.0, 8.0)]; 3], vec![]);
        let relaxed = RelaxedDecision { gue: vec![vec![1.0, 0.0]; 3], sue: vec![], objective: 0.0 };
        let sel = map_to_binary(&prob, &relaxed);
        assert!(matches!(repair_capacity(&prob, &relaxed, sel), Err(Error::IrreparableCapacity(_))));
    }

    #[test]
    fn min_compute_meets_budget() {
        let f = min_compute(1e8, 0.1, 0.02).unwrap();
        assert!((1e8 / f + 0.02 - 0.1).abs() < 1e-15);
        assert_eq!(min_compute(1e8, 0.1, 0.1), None);
    }
}
