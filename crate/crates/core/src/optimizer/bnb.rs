//! Exact offloading selection by best-first branch and bound over the LP
//! relaxation. Meant for small instances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::offload::{relaxed_with_fixings, selection_cost, Fixings, OffloadProblem, RelaxedDecision, Selection};
use crate::costmodel::GueTarget;
use crate::error::{Error, Result};

/// Largest `K (M + N) + L N` accepted.
pub const MAX_BNB_VARIABLES: usize = 24;

/// Optimal selection, its objective and the number of LPs solved.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub selection: Selection,
    pub objective: f64,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    fix: Fixings,
    relaxed: RelaxedDecision,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // min-heap on the bound, then FIFO
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.seq.cmp(&self.seq))
    }
}

const INT_TOL: f64 = 1e-9;

/// `(is_sue, user, option)` of the most fractional entry.
fn branch_var(r: &RelaxedDecision) -> Option<(bool, usize, usize)> {
    let mut best: Option<(f64, bool, usize, usize)> = None;
    let rows = r.gue.iter().map(|row| (false, row)).chain(r.sue.iter().map(|row| (true, row)));
    let mut counters = [0usize, 0usize];
    for (is_sue, row) in rows {
        let u = counters[is_sue as usize];
        counters[is_sue as usize] += 1;
        for (i, &x) in row.iter().enumerate() {
            let frac = x.min(1.0 - x);
            if frac > INT_TOL && best.is_none_or(|b| frac > b.0) {
                best = Some((frac, is_sue, u, i));
            }
        }
    }
    best.map(|(_, s, u, i)| (s, u, i))
}

fn binary(prob: &OffloadProblem, r: &RelaxedDecision) -> Selection {
    let pick = |row: &[f64]| (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).unwrap_or(0);
    Selection {
        gue: r.gue.iter().enumerate().map(|(k, row)| prob.gue[k][pick(row)].0).collect(),
        sue: r.sue.iter().map(|row| pick(row)).collect(),
    }
}

/// Best-first branch and bound; fails once more than `budget` LPs are solved.
pub fn bnb_offload(prob: &OffloadProblem, budget: usize) -> Result<BnbResult> {
    let size = prob.gue.len() * (prob.m + prob.n) + prob.sue.len() * prob.n;
    if size > MAX_BNB_VARIABLES {
        return Err(Error::ValidationError { field: "instance".into(), reason: format!("{size} selection variables exceed {MAX_BNB_VARIABLES}") });
    }
    let root_fix: Fixings = (
        prob.gue.iter().map(|r| vec![None; r.len()]).collect(),
        prob.sue.iter().map(|r| vec![None; r.len()]).collect(),
    );
    let mut nodes = 1;
    let Some(root) = relaxed_with_fixings(prob, Some(&root_fix))? else {
        return Err(Error::Infeasible("offloading problem".into()));
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node { bound: root.objective, seq, fix: root_fix, relaxed: root });
    let mut incumbent: Option<(Selection, f64)> = None;
    while let Some(node) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            if node.bound >= *best * (1.0 - 1e-12) {
                break;
            }
        }
        let Some((is_sue, u, i)) = branch_var(&node.relaxed) else {
            let sel = binary(prob, &node.relaxed);
            if let Some(cost) = selection_cost(prob, &sel) {
                if incumbent.as_ref().is_none_or(|(_, b)| cost < *b) {
                    incumbent = Some((sel, cost));
                }
            }
            continue;
        };
        for value in [true, false] {
            let mut fix = node.fix.clone();
            if is_sue {
                fix.1[u][i] = Some(value);
            } else {
                fix.0[u][i] = Some(value);
            }
            nodes += 1;
            if nodes > budget {
                return Err(Error::BudgetExceeded(budget));
            }
            if let Some(r) = relaxed_with_fixings(prob, Some(&fix))? {
                seq += 1;
                heap.push(Node { bound: r.objective, seq, fix, relaxed: r });
            }
        }
    }
    let (selection, objective) = incumbent.ok_or_else(|| Error::Infeasible("offloading problem".into()))?;
    Ok(BnbResult { selection, objective, nodes })
}

/// Every selection, cheapest feasible one. Oracle for small instances.
pub fn exhaustive_offload(prob: &OffloadProblem) -> Option<(Selection, f64)> {
    let k = prob.gue.len();
    let l = prob.sue.len();
    let mut radix: Vec<usize> = vec![prob.m + prob.n; k];
    radix.extend(std::iter::repeat_n(prob.n, l));
    let mut digits = vec![0usize; k + l];
    let mut best: Option<(Selection, f64)> = None;
    loop {
        let sel = Selection {
            gue: digits[..k].iter().map(|&d| if d < prob.m { GueTarget::Bs(d) } else { GueTarget::Sat(d - prob.m) }).collect(),
            sue: digits[k..].to_vec(),
        };
        if let Some(c) = selection_cost(prob, &sel) {
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((sel, c));
            }
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return best;
            }
            digits[i] += 1;
            if digits[i] < radix[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
