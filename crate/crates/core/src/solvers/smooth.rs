//! Log-barrier Newton method for small smooth convex programs
//! `min f(x)  s.t.  g_i(x) <= 0,  lo <= x <= hi`.
//!
//! Tolerances are absolute, so callers should scale variables and functions
//! to order one.

use nalgebra::{DMatrix, DVector};

use super::{SolveStatus, SolverReport};
use crate::error::{Error, Result};

pub trait SmoothFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Central differences of the gradient unless overridden.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut h = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for j in 0..n {
            let step = 1e-6 * x[j].abs().max(1.0);
            xp[j] = x[j] + step;
            let gp = self.gradient(&xp);
            xp[j] = x[j] - step;
            let gm = self.gradient(&xp);
            xp[j] = x[j];
            for i in 0..n {
                h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        (&h + h.transpose()) * 0.5
    }
}

/// Adapter from closures.
pub struct FnSmooth<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> SmoothFunction for FnSmooth<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

pub struct SmoothConvexProgram<'a> {
    pub objective: &'a dyn SmoothFunction,
    /// Each must be `<= 0` at a solution.
    pub constraints: Vec<&'a dyn SmoothFunction>,
    pub lo: Vec<f64>,
    /// May be infinite.
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSettings {
    pub tol: f64,
    pub max_newton: usize,
    /// Used when strictly feasible; otherwise a phase-I search runs.
    pub start: Option<Vec<f64>>,
}

impl Default for SmoothSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_newton: 400, start: None }
    }
}

/// `g(x) - s` over `[x, s]`.
struct Lifted<'a>(&'a dyn SmoothFunction);

impl SmoothFunction for Lifted<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let n = z.len() - 1;
        self.0.value(&z[..n]) - z[n]
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len() - 1;
        let mut g = self.0.gradient(&z[..n]);
        g.push(-1.0);
        g
    }
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let n = z.len() - 1;
        let inner = self.0.hessian(&z[..n]);
        let mut h = DMatrix::zeros(n + 1, n + 1);
        h.view_mut((0, 0), (n, n)).copy_from(&inner);
        h
    }
}

struct LastCoordinate;

impl SmoothFunction for LastCoordinate {
    fn value(&self, z: &[f64]) -> f64 {
        z[z.len() - 1]
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; z.len()];
        g[z.len() - 1] = 1.0;
        g
    }
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(z.len(), z.len())
    }
}

struct Barrier<'a> {
    f: &'a dyn SmoothFunction,
    cons: &'a [&'a dyn SmoothFunction],
    lo: &'a [f64],
    hi: &'a [f64],
}

impl Barrier<'_> {
    fn terms(&self) -> usize {
        self.cons.len()
            + self.lo.iter().filter(|x| x.is_finite()).count()
            + self.hi.iter().filter(|x| x.is_finite()).count()
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(self.hi)).all(|(v, (l, h))| v > l && v < h)
            && self.cons.iter().all(|g| g.value(x) < 0.0)
    }

    /// `t f - sum log(-g) - sum log(box slack)`; infinite outside.
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        if !self.strictly_feasible(x) {
            return f64::INFINITY;
        }
        let mut v = t * self.f.value(x);
        for g in self.cons {
            v -= (-g.value(x)).ln();
        }
        for (i, &xi) in x.iter().enumerate() {
            if self.lo[i].is_finite() {
                v -= (xi - self.lo[i]).ln();
            }
            if self.hi[i].is_finite() {
                v -= (self.hi[i] - xi).ln();
            }
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn newton_system(&self, t: f64, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut grad = DVector::from_vec(self.f.gradient(x)) * t;
        let mut hess = self.f.hessian(x) * t;
        for g in self.cons {
            let val = g.value(x);
            let gg = DVector::from_vec(g.gradient(x));
            grad += &gg / (-val);
            hess += &gg * gg.transpose() / (val * val) + g.hessian(x) / (-val);
        }
        for i in 0..n {
            if self.lo[i].is_finite() {
                let s = x[i] - self.lo[i];
                grad[i] -= 1.0 / s;
                hess[(i, i)] += 1.0 / (s * s);
            }
            if self.hi[i].is_finite() {
                let s = self.hi[i] - x[i];
                grad[i] += 1.0 / s;
                hess[(i, i)] += 1.0 / (s * s);
            }
        }
        (grad, hess)
    }

    /// Newton centering at fixed `t`. Returns the number of steps.
    fn center(&self, t: f64, x: &mut Vec<f64>, budget: usize) -> usize {
        for step in 0..budget {
            let (grad, hess) = self.newton_system(t, x);
            let dx = solve_spd(hess, &grad).map(|d| -d);
            let Some(dx) = dx else { return step };
            let decrement = -grad.dot(&dx);
            let base = self.value(t, x);
            // below this the barrier value is roundoff
            if decrement / 2.0 < 1e-9 + 1e-13 * base.abs() {
                return step;
            }
            let mut s = 1.0;
            loop {
                let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + s * d).collect();
                let v = self.value(t, &cand);
                if v <= base - 0.25 * s * decrement {
                    *x = cand;
                    break;
                }
                s *= 0.5;
                if s < 1e-14 {
                    return step;
                }
            }
        }
        budget
    }
}

fn solve_spd(mut h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..8 {
        if let Some(ch) = h.clone().cholesky() {
            return Some(ch.solve(rhs));
        }
        reg = if reg == 0.0 { 1e-12 * scale } else { reg * 100.0 };
        for i in 0..h.nrows() {
            h[(i, i)] += reg;
        }
    }
    None
}

/// Runs the barrier path from a strictly feasible `x`. `stop` ends the path
/// early once it holds.
fn barrier_path(
    bar: &Barrier,
    mut x: Vec<f64>,
    tol: f64,
    max_newton: usize,
    stop: &dyn Fn(&[f64]) -> bool,
) -> Result<(Vec<f64>, usize, Vec<f64>, f64)> {
    let m = bar.terms().max(1) as f64;
    let f0 = bar.f.value(&x).abs().max(1.0);
    let mut t = m / f0;
    let mut used = 0;
    let mut history = Vec::new();
    loop {
        used += bar.center(t, &mut x, max_newton.saturating_sub(used).clamp(1, 60));
        history.push(bar.f.value(&x));
        if stop(&x) || m / t < tol {
            return Ok((x, used, history, m / t));
        }
        if used >= max_newton {
            return Err(Error::MaxIterationsExceeded(max_newton));
        }
        t *= 8.0;
    }
}

fn default_start(lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| match (l.is_finite(), h.is_finite()) {
            (true, true) => 0.5 * (l + h),
            (true, false) => l + 1.0,
            (false, true) => h - 1.0,
            (false, false) => 0.0,
        })
        .collect()
}

pub fn solve_smooth(prog: &SmoothConvexProgram, settings: &SmoothSettings) -> Result<SolverReport> {
    let n = prog.lo.len();
    if prog.hi.len() != n {
        return Err(Error::ShapeMismatch("box bounds".into()));
    }
    if let Some(i) = (0..n).find(|&i| !(prog.lo[i] < prog.hi[i])) {
        return Err(Error::InfeasibleBox(i));
    }
    let bar = Barrier { f: prog.objective, cons: &prog.constraints, lo: &prog.lo, hi: &prog.hi };
    let mut x = match &settings.start {
        Some(s) if s.len() == n && bar.strictly_feasible(s) => s.clone(),
        Some(s) if s.len() == n && s.iter().zip(prog.lo.iter().zip(&prog.hi)).all(|(v, (l, h))| v > l && v < h) => s.clone(),
        _ => default_start(&prog.lo, &prog.hi),
    };
    let mut phase1_steps = 0;
    if !bar.strictly_feasible(&x) {
        // minimize s with g_i(x) <= s
        let lifted: Vec<Lifted> = prog.constraints.iter().map(|&g| Lifted(g)).collect();
        let cons: Vec<&dyn SmoothFunction> = lifted.iter().map(|l| l as &dyn SmoothFunction).collect();
        let s0 = prog.constraints.iter().map(|g| g.value(&x)).fold(f64::NEG_INFINITY, f64::max);
        let mut z = x.clone();
        z.push(s0.abs().max(1e-3) + s0 + 1.0);
        let mut lo = prog.lo.clone();
        lo.push(f64::NEG_INFINITY);
        let mut hi = prog.hi.clone();
        hi.push(f64::INFINITY);
        let obj = LastCoordinate;
        let aux = Barrier { f: &obj, cons: &cons, lo: &lo, hi: &hi };
        let target = |z: &[f64]| z[n] < -1e-9 * (1.0 + s0.abs());
        let found = barrier_path(&aux, z, 1e-10, settings.max_newton, &target);
        match found {
            Ok((z, steps, _, _)) if bar.strictly_feasible(&z[..n]) => {
                phase1_steps = steps;
                x = z[..n].to_vec();
            }
            Ok(_) | Err(Error::MaxIterationsExceeded(_)) => {
                return Ok(SolverReport {
                    status: SolveStatus::Infeasible,
                    objective: f64::INFINITY,
                    x,
                    residual: f64::INFINITY,
                    gap: f64::INFINITY,
                    iterations: settings.max_newton,
                    history: vec![],
                });
            }
            Err(e) => return Err(e),
        }
    }
    let (x, steps, history, gap) = barrier_path(&bar, x, settings.tol, settings.max_newton, &|_| false)?;
    let residual = prog.constraints.iter().map(|g| g.value(&x).max(0.0)).fold(0.0, f64::max);
    Ok(SolverReport {
        status: SolveStatus::Optimal,
        objective: prog.objective.value(&x),
        x,
        residual,
        gap,
        iterations: steps + phase1_steps,
        history,
    })
}
