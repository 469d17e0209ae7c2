//! Two-phase dense tableau simplex with Bland's rule.

use super::{SolveStatus, SolverReport};
use crate::error::{Error, Result};

/// `min c.x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lo: Vec<f64>,
    /// `f64::INFINITY` for no upper bound.
    pub hi: Vec<f64>,
}

impl LinearProgram {
    /// Nonnegative variables, no constraints yet.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self { c, lo: vec![0.0; n], hi: vec![f64::INFINITY; n], ..Self::default() }
    }

    pub fn add_le(&mut self, row: Vec<f64>, b: f64) {
        self.a_ub.push(row);
        self.b_ub.push(b);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, b: f64) {
        self.a_eq.push(row);
        self.b_eq.push(b);
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let rows_ok = self.a_ub.iter().chain(&self.a_eq).all(|r| r.len() == n);
        if !rows_ok
            || self.a_ub.len() != self.b_ub.len()
            || self.a_eq.len() != self.b_eq.len()
            || self.lo.len() != n
            || self.hi.len() != n
        {
            return Err(Error::ShapeMismatch("linear program dimensions".into()));
        }
        let finite = self.c.iter().chain(self.b_ub.iter()).chain(self.b_eq.iter()).chain(self.lo.iter()).all(|x| x.is_finite())
            && self.a_ub.iter().chain(&self.a_eq).flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::ShapeMismatch("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Largest violation of `x` over all constraints.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let dot = |r: &Vec<f64>| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let ub = self.a_ub.iter().zip(&self.b_ub).map(|(r, b)| (dot(r) - b).max(0.0));
        let eq = self.a_eq.iter().zip(&self.b_eq).map(|(r, b)| (dot(r) - b).abs());
        let bounds = x.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (l, h))| (l - v).max(v - h).max(0.0));
        ub.chain(eq).chain(bounds).fold(0.0, f64::max)
    }
}

struct Tableau {
    /// rows x (cols + 1); last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let piv = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, p) in obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row (reduced costs, last entry = -value)
    /// over columns `allowed`. Returns false when unbounded.
    fn run(&mut self, obj: &mut [f64], allowed: usize, tol: f64, iters: &mut usize, max_iter: usize) -> Result<bool> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -tol) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[enter];
                if a > tol {
                    let ratio = row[self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, enter, obj);
            *iters += 1;
            if *iters > max_iter {
                return Err(Error::MaxIterationsExceeded(max_iter));
            }
        }
    }
}

/// Solves `lp`; infeasibility and unboundedness are statuses.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<SolverReport> {
    lp.validate()?;
    let n = lp.c.len();
    for j in 0..n {
        if lp.lo[j] > lp.hi[j] {
            return Ok(report(lp, SolveStatus::Infeasible, vec![], 0));
        }
    }
    // rows over y = x - lo >= 0: (coeffs, rhs, is_eq)
    let shift = |r: &Vec<f64>, b: f64| b - r.iter().zip(&lp.lo).map(|(a, l)| a * l).sum::<f64>();
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (r, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        rows.push((r.clone(), shift(r, b), false));
    }
    for j in 0..n {
        if lp.hi[j].is_finite() {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            rows.push((r, lp.hi[j] - lp.lo[j], false));
        }
    }
    for (r, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        rows.push((r.clone(), shift(r, b), true));
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| !r.2).count();
    // artificial for equalities and for inequalities with negative rhs
    let needs_art: Vec<bool> = rows.iter().map(|(_, b, eq)| *eq || *b < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s_idx, mut a_idx) = (n, n + n_slack);
    for (i, (r, b, eq)) in rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * r[j];
        }
        t[i][cols] = sign * b;
        if !eq {
            t[i][s_idx] = sign;
            if sign > 0.0 {
                basis[i] = s_idx;
            }
            s_idx += 1;
        }
        if needs_art[i] {
            t[i][a_idx] = 1.0;
            basis[i] = a_idx;
            a_idx += 1;
        }
    }
    let mut tab = Tableau { t, basis, cols };
    let max_iter = 50 * (cols + m) + 1000;
    let mut iters = 0;

    // phase I: minimize the sum of artificials
    if n_art > 0 {
        let mut obj = vec![0.0; cols + 1];
        obj[n + n_slack..cols].fill(1.0);
        for i in 0..m {
            if tab.basis[i] >= n + n_slack {
                for (o, t) in obj.iter_mut().zip(&tab.t[i]) {
                    *o -= t;
                }
            }
        }
        tab.run(&mut obj, cols, tol, &mut iters, max_iter)?;
        let scale = 1.0 + tab.t.iter().map(|r| r[cols].abs()).fold(0.0, f64::max);
        if -obj[cols] > tol * scale {
            return Ok(report(lp, SolveStatus::Infeasible, vec![], iters));
        }
        // drive artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= n + n_slack {
                if let Some(j) = (0..n + n_slack).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j, &mut obj);
                } else {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }

    // phase II
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(&lp.c);
    for i in 0..tab.t.len() {
        let cb = obj[tab.basis[i]];
        if cb != 0.0 {
            let row = tab.t[i].clone();
            for j in 0..=cols {
                obj[j] -= cb * row[j];
            }
        }
    }
    let bounded = tab.run(&mut obj, n + n_slack, tol, &mut iters, max_iter)?;
    let mut x = lp.lo.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.t[i][cols];
        }
    }
    let status = if bounded { SolveStatus::Optimal } else { SolveStatus::Unbounded };
    Ok(report(lp, status, x, iters))
}

fn report(lp: &LinearProgram, status: SolveStatus, x: Vec<f64>, iterations: usize) -> SolverReport {
    let objective = match status {
        SolveStatus::Optimal => lp.c.iter().zip(&x).map(|(a, b)| a * b).sum(),
        SolveStatus::Infeasible => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };
    let residual = if x.is_empty() { f64::INFINITY } else { lp.residual(&x) };
    SolverReport { status, objective, x, residual, gap: 0.0, iterations, history: vec![objective] }
}
