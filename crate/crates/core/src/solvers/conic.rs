//! Barrier method for problems over Hermitian PSD blocks and real scalars:
//!
//! ```text
//! min  L0(X, s)
//! s.t. L_i(X, s) = 0,   X_b >= 0,
//!      linear forms <= 0, hyperbolic  x*y >= d,  logarithmic  x <= c log2(1 + a y)
//! ```
//!
//! A block of size n is parameterized by n^2 reals: the diagonal, then the
//! real and imaginary parts of the strict upper triangle.

use nalgebra::{DMatrix, DVector};

use super::{SolveStatus, SolverReport};
use crate::error::{Error, Result};
use crate::C64;

/// `sum_b Re tr(C_b X_b) + sum_j a_j s_j + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    /// `(block index, Hermitian coefficient)`
    pub blocks: Vec<(usize, DMatrix<C64>)>,
    /// `(scalar index, coefficient)`
    pub scalars: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearForm {
    pub fn scalar(j: usize, a: f64) -> Self {
        Self { scalars: vec![(j, a)], ..Self::default() }
    }

    pub fn with_block(mut self, b: usize, c: DMatrix<C64>) -> Self {
        self.blocks.push((b, c));
        self
    }

    pub fn with_scalar(mut self, j: usize, a: f64) -> Self {
        self.scalars.push((j, a));
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, blocks: &[DMatrix<C64>], scalars: &[f64]) -> f64 {
        let b: f64 = self.blocks.iter().map(|(i, c)| (c * &blocks[*i]).trace().re).sum();
        let s: f64 = self.scalars.iter().map(|(j, a)| a * scalars[*j]).sum();
        b + s + self.constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarConstraint {
    /// `form <= 0`
    Linear(LinearForm),
    /// `s_x * s_y >= d`, with `s_x, s_y > 0`.
    Hyperbolic { x: usize, y: usize, d: f64 },
    /// `s_x <= c * log2(1 + a * s_y)`, with `a * s_y > -1`.
    Logarithmic { x: usize, y: usize, c: f64, a: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProgram {
    /// Block sizes.
    pub blocks: Vec<usize>,
    pub n_scalars: usize,
    pub objective: LinearForm,
    /// Each `form = 0`.
    pub equalities: Vec<LinearForm>,
    pub constraints: Vec<ScalarConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ConicSettings {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub blocks: Vec<DMatrix<C64>>,
    pub scalars: Vec<f64>,
    pub report: SolverReport,
}

/// Basis element of a block: up to two terms `coef * e_p e_q^T`.
#[derive(Clone, Copy)]
struct Basis {
    terms: [(C64, usize, usize); 2],
    len: usize,
}

fn block_basis(n: usize) -> Vec<Basis> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(n * n);
    for p in 0..n {
        out.push(Basis { terms: [(one, p, p), (one, p, p)], len: 1 });
    }
    for p in 0..n {
        for q in p + 1..n {
            out.push(Basis { terms: [(one, p, q), (one, q, p)], len: 2 });
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            out.push(Basis { terms: [(i, p, q), (-i, q, p)], len: 2 });
        }
    }
    out
}

/// Gradient of `Re tr(C X)` in block coordinates, for Hermitian `C`.
fn form_coefficients(c: &DMatrix<C64>, out: &mut [f64]) {
    let n = c.nrows();
    let mut idx = 0;
    for p in 0..n {
        out[idx] += c[(p, p)].re;
        idx += 1;
    }
    for p in 0..n {
        for q in p + 1..n {
            out[idx] += 2.0 * c[(p, q)].re;
            idx += 1;
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            out[idx] += 2.0 * c[(p, q)].im;
            idx += 1;
        }
    }
}

fn unpack(n: usize, z: &[f64]) -> DMatrix<C64> {
    let mut x = DMatrix::<C64>::zeros(n, n);
    let mut idx = 0;
    for p in 0..n {
        x[(p, p)] = C64::new(z[idx], 0.0);
        idx += 1;
    }
    for p in 0..n {
        for q in p + 1..n {
            x[(p, q)].re = z[idx];
            x[(q, p)].re = z[idx];
            idx += 1;
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            x[(p, q)].im = z[idx];
            x[(q, p)].im = -z[idx];
            idx += 1;
        }
    }
    x
}

fn pack(x: &DMatrix<C64>, out: &mut [f64]) {
    let n = x.nrows();
    let mut idx = 0;
    for p in 0..n {
        out[idx] = x[(p, p)].re;
        idx += 1;
    }
    for p in 0..n {
        for q in p + 1..n {
            out[idx] = 0.5 * (x[(p, q)].re + x[(q, p)].re);
            idx += 1;
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            out[idx] = 0.5 * (x[(p, q)].im - x[(q, p)].im);
            idx += 1;
        }
    }
}

struct Layout {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    bases: Vec<Vec<Basis>>,
    scalar_offset: usize,
    total: usize,
}

impl Layout {
    fn new(cp: &ConicProgram) -> Self {
        let mut offsets = Vec::new();
        let mut at = 0;
        for &d in &cp.blocks {
            offsets.push(at);
            at += d * d;
        }
        Self {
            offsets,
            dims: cp.blocks.clone(),
            bases: cp.blocks.iter().map(|&d| block_basis(d)).collect(),
            scalar_offset: at,
            total: at + cp.n_scalars,
        }
    }

    fn dense(&self, form: &LinearForm) -> DVector<f64> {
        let mut v = DVector::zeros(self.total);
        for (b, c) in &form.blocks {
            let off = self.offsets[*b];
            let d = self.dims[*b];
            form_coefficients(c, &mut v.as_mut_slice()[off..off + d * d]);
        }
        for &(j, a) in &form.scalars {
            v[self.scalar_offset + j] += a;
        }
        v
    }

    fn blocks(&self, z: &DVector<f64>) -> Vec<DMatrix<C64>> {
        self.offsets.iter().zip(&self.dims).map(|(&o, &d)| unpack(d, &z.as_slice()[o..o + d * d])).collect()
    }
}

/// Concave function `phi` inside each `-log(phi)` term.
enum Term {
    Affine(DVector<f64>, f64),
    Hyper { x: usize, y: usize, d: f64 },
    Log { x: usize, y: usize, c: f64, a: f64 },
}

impl Term {
    fn value(&self, z: &DVector<f64>) -> f64 {
        match *self {
            Term::Affine(ref g, c) => g.dot(z) + c,
            Term::Hyper { x, y, d } => {
                if z[x] <= 0.0 || z[y] <= 0.0 {
                    -1.0
                } else {
                    z[x] * z[y] - d
                }
            }
            Term::Log { x, y, c, a } => {
                let arg = 1.0 + a * z[y];
                if arg <= 0.0 {
                    -1.0
                } else {
                    c * arg.log2() - z[x]
                }
            }
        }
    }

    fn add_derivatives(&self, z: &DVector<f64>, phi: f64, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        match *self {
            Term::Affine(ref g, _) => {
                grad.axpy(-1.0 / phi, g, 1.0);
                hess.ger(1.0 / (phi * phi), g, g, 1.0);
            }
            Term::Hyper { x, y, .. } => {
                let (gx, gy) = (z[y], z[x]);
                grad[x] -= gx / phi;
                grad[y] -= gy / phi;
                let p2 = phi * phi;
                hess[(x, x)] += gx * gx / p2;
                hess[(y, y)] += gy * gy / p2;
                let cross = gx * gy / p2 - 1.0 / phi;
                hess[(x, y)] += cross;
                hess[(y, x)] += cross;
            }
            Term::Log { x, y, c, a } => {
                let arg = 1.0 + a * z[y];
                let gy = c * a / (arg * std::f64::consts::LN_2);
                let hyy = -c * a * a / (arg * arg * std::f64::consts::LN_2);
                grad[x] += 1.0 / phi;
                grad[y] -= gy / phi;
                let p2 = phi * phi;
                hess[(x, x)] += 1.0 / p2;
                hess[(y, y)] += gy * gy / p2 - hyy / phi;
                hess[(x, y)] -= gy / p2;
                hess[(y, x)] -= gy / p2;
            }
        }
    }
}

struct Problem {
    layout: Layout,
    c: DVector<f64>,
    c0: f64,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    terms: Vec<Term>,
}

impl Problem {
    fn new(cp: &ConicProgram) -> Result<Self> {
        if cp.blocks.contains(&0) {
            return Err(Error::ShapeMismatch("empty PSD block".into()));
        }
        let layout = Layout::new(cp);
        let check = |f: &LinearForm| -> Result<()> {
            for (b, c) in &f.blocks {
                if *b >= cp.blocks.len() || c.nrows() != cp.blocks[*b] || c.ncols() != cp.blocks[*b] {
                    return Err(Error::ShapeMismatch("block coefficient".into()));
                }
            }
            if f.scalars.iter().any(|&(j, _)| j >= cp.n_scalars) {
                return Err(Error::ShapeMismatch("scalar index".into()));
            }
            Ok(())
        };
        check(&cp.objective)?;
        let off = layout.scalar_offset;
        let mut terms = Vec::new();
        for con in &cp.constraints {
            terms.push(match con {
                ScalarConstraint::Linear(f) => {
                    check(f)?;
                    Term::Affine(-layout.dense(f), -f.constant)
                }
                &ScalarConstraint::Hyperbolic { x, y, d } => Term::Hyper { x: off + x, y: off + y, d },
                &ScalarConstraint::Logarithmic { x, y, c, a } => Term::Log { x: off + x, y: off + y, c, a },
            });
        }
        let mut a_eq = DMatrix::zeros(cp.equalities.len(), layout.total);
        let mut b_eq = DVector::zeros(cp.equalities.len());
        for (i, f) in cp.equalities.iter().enumerate() {
            check(f)?;
            a_eq.row_mut(i).copy_from(&layout.dense(f).transpose());
            b_eq[i] = -f.constant;
        }
        Ok(Self { c: layout.dense(&cp.objective), c0: cp.objective.constant, layout, a_eq, b_eq, terms })
    }

    fn degree(&self) -> f64 {
        (self.layout.dims.iter().sum::<usize>() + self.terms.len()) as f64
    }

    /// Barrier value, infinite outside the domain.
    fn barrier(&self, t: f64, z: &DVector<f64>) -> f64 {
        let mut v = t * self.c.dot(z);
        for x in self.layout.blocks(z) {
            match x.cholesky() {
                Some(ch) => v -= 2.0 * ch.l().diagonal().iter().map(|d| d.re.ln()).sum::<f64>(),
                None => return f64::INFINITY,
            }
        }
        for term in &self.terms {
            let phi = term.value(z);
            if !(phi > 0.0) {
                return f64::INFINITY;
            }
            v -= phi.ln();
        }
        v
    }

    fn newton_system(&self, t: f64, z: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.layout.total;
        let mut grad = &self.c * t;
        let mut hess = DMatrix::zeros(n, n);
        for (b, x) in self.layout.blocks(z).iter().enumerate() {
            let s = x.clone().cholesky()?.inverse();
            let off = self.layout.offsets[b];
            let basis = &self.layout.bases[b];
            let mut g = vec![0.0; basis.len()];
            form_coefficients(&s, &mut g);
            for (i, gi) in g.iter().enumerate() {
                grad[off + i] -= gi;
            }
            for (ia, ea) in basis.iter().enumerate() {
                for (ib, eb) in basis.iter().enumerate().skip(ia) {
                    let mut acc = C64::new(0.0, 0.0);
                    for &(ca, p, q) in &ea.terms[..ea.len] {
                        for &(cb, r, s_) in &eb.terms[..eb.len] {
                            acc += ca * cb * s[(s_, p)] * s[(q, r)];
                        }
                    }
                    hess[(off + ia, off + ib)] = acc.re;
                    hess[(off + ib, off + ia)] = acc.re;
                }
            }
        }
        for term in &self.terms {
            let phi = term.value(z);
            if !(phi > 0.0) {
                return None;
            }
            term.add_derivatives(z, phi, &mut grad, &mut hess);
        }
        Some((grad, hess))
    }

    /// Newton direction for the equality-constrained barrier subproblem.
    fn direction(&self, grad: &DVector<f64>, hess: DMatrix<f64>, resid: &DVector<f64>) -> Option<DVector<f64>> {
        let n = hess.nrows();
        let scale = hess.diagonal().amax().max(1e-300);
        let mut h = hess;
        let mut chol = None;
        let mut reg = 0.0;
        for _ in 0..8 {
            if let Some(c) = h.clone().cholesky() {
                chol = Some(c);
                break;
            }
            reg = if reg == 0.0 { 1e-13 * scale } else { reg * 100.0 };
            for i in 0..n {
                h[(i, i)] += reg;
            }
        }
        let chol = chol?;
        let hg = chol.solve(grad);
        if self.a_eq.nrows() == 0 {
            return Some(-hg);
        }
        // A H^-1 A^T nu = r - A H^-1 g ... with dz = -H^-1 (g + A^T nu)
        let hat = chol.solve(&self.a_eq.transpose());
        let schur = &self.a_eq * &hat;
        let rhs = -resid - &self.a_eq * &hg * -1.0;
        let nu = schur.lu().solve(&(-rhs))?;
        Some(-(hg + hat * nu))
    }
}

/// Solves `cp` from a strictly feasible `start` (blocks PD, inequalities
/// strict; equalities may carry a small residual).
pub fn solve_conic(
    cp: &ConicProgram,
    start_blocks: &[DMatrix<C64>],
    start_scalars: &[f64],
    settings: &ConicSettings,
) -> Result<ConicSolution> {
    let prob = Problem::new(cp)?;
    if start_blocks.len() != cp.blocks.len() || start_scalars.len() != cp.n_scalars {
        return Err(Error::ShapeMismatch("conic start point".into()));
    }
    let mut z = DVector::zeros(prob.layout.total);
    for (b, x) in start_blocks.iter().enumerate() {
        if x.nrows() != cp.blocks[b] {
            return Err(Error::ShapeMismatch("conic start block".into()));
        }
        let off = prob.layout.offsets[b];
        pack(x, &mut z.as_mut_slice()[off..off + x.nrows() * x.nrows()]);
    }
    for (j, &s) in start_scalars.iter().enumerate() {
        z[prob.layout.scalar_offset + j] = s;
    }
    if !prob.barrier(1.0, &z).is_finite() {
        return Err(Error::NoStrictlyFeasiblePoint);
    }
    let degree = prob.degree();
    let obj = |z: &DVector<f64>| prob.c.dot(z) + prob.c0;
    let mut t = degree / obj(&z).abs().max(1.0);
    let mut iterations = 0;
    let mut history = Vec::new();
    loop {
        // centering; stalls near the boundary end the stage
        let stage_start = iterations;
        loop {
            let resid = &prob.a_eq * &z - &prob.b_eq;
            let Some((grad, hess)) = prob.newton_system(t, &z) else {
                return Err(Error::NoStrictlyFeasiblePoint);
            };
            let Some(dz) = prob.direction(&grad, hess.clone(), &resid) else {
                break;
            };
            let decrement = dz.dot(&(&hess * &dz));
            let slope = grad.dot(&dz);
            let resid_small = resid.amax() <= 1e-9 * (1.0 + prob.b_eq.amax());
            if decrement / 2.0 < 1e-9 && resid_small {
                break;
            }
            let base = prob.barrier(t, &z);
            let mut s = 1.0;
            let mut progress = 0.0;
            while s > 1e-12 {
                let cand = &z + &dz * s;
                let v = prob.barrier(t, &cand);
                if v.is_finite() && v <= base + 0.25 * s * slope + 1e-13 * base.abs() {
                    z = cand;
                    progress = base - v;
                    break;
                }
                s *= 0.5;
            }
            iterations += 1;
            if progress <= 1e-12 * base.abs().max(1.0) || iterations - stage_start >= 50 {
                break;
            }
            if iterations >= settings.max_iter {
                return Err(Error::MaxIterationsExceeded(settings.max_iter));
            }
        }
        history.push(obj(&z));
        if degree / t < settings.tol * obj(&z).abs().max(1.0) {
            break;
        }
        t *= 10.0;
    }
    let blocks = prob.layout.blocks(&z);
    let scalars = z.as_slice()[prob.layout.scalar_offset..].to_vec();
    let mut residual = (&prob.a_eq * &z - &prob.b_eq).amax();
    for term in &prob.terms {
        residual = residual.max(-term.value(&z));
    }
    for x in &blocks {
        let min = x.clone().symmetric_eigen().eigenvalues.min();
        residual = residual.max(-min);
    }
    Ok(ConicSolution {
        report: SolverReport {
            status: SolveStatus::Optimal,
            objective: obj(&z),
            x: z.as_slice().to_vec(),
            residual,
            gap: degree / t,
            iterations,
            history,
        },
        blocks,
        scalars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::solvers::eig::top_eigpair;
    use crate::solvers::lp::{solve_lp, LinearProgram};
    use rand::Rng;

    fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> DMatrix<C64> {
        let a = DMatrix::from_fn(n, rank, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &a * a.adjoint()
    }

    #[test]
    fn pack_roundtrip_and_coefficients() {
        let mut rng = rng_from_seed(20);
        let x = random_psd(&mut rng, 4, 4);
        let c = random_psd(&mut rng, 4, 2);
        let mut z = vec![0.0; 16];
        pack(&x, &mut z);
        assert!((unpack(4, &z) - &x).norm() < 1e-14);
        let mut g = vec![0.0; 16];
        form_coefficients(&c, &mut g);
        let lin: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
        assert!((lin - (&c * &x).trace().re).abs() < 1e-12);
    }

    #[test]
    fn min_trace_matches_eigen_oracle() {
        let mut rng = rng_from_seed(21);
        for n in 1..6 {
            let a = random_psd(&mut rng, n, n);
            let cp = ConicProgram {
                blocks: vec![n],
                n_scalars: 0,
                objective: LinearForm::default().with_block(0, DMatrix::identity(n, n)),
                equalities: vec![LinearForm::default().with_block(0, a.clone()).with_constant(-1.0)],
                constraints: vec![],
            };
            let start = DMatrix::<C64>::identity(n, n) / C64::from(a.trace().re);
            let sol = solve_conic(&cp, &[start], &[], &ConicSettings::default()).unwrap();
            let (lmax, _) = top_eigpair(&a).unwrap();
            assert!((sol.report.objective - 1.0 / lmax).abs() < 1e-6 / lmax, "{} vs {}", sol.report.objective, 1.0 / lmax);
            assert!(sol.report.residual < 1e-7);
        }
    }

    #[test]
    fn scalar_block_reduces_to_lp() {
        // min 2x + 3y  s.t.  x + y >= 1, x <= 0.7, with x as a 1x1 PSD block
        let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let cp = ConicProgram {
            blocks: vec![1],
            n_scalars: 1,
            objective: LinearForm::default().with_block(0, one.clone() * C64::from(2.0)).with_scalar(0, 3.0),
            equalities: vec![],
            constraints: vec![
                ScalarConstraint::Linear(
                    LinearForm::default().with_block(0, -one.clone()).with_scalar(0, -1.0).with_constant(1.0),
                ),
                ScalarConstraint::Linear(LinearForm::default().with_block(0, one.clone()).with_constant(-0.7)),
                ScalarConstraint::Linear(LinearForm::scalar(0, -1.0)),
            ],
        };
        let sol = solve_conic(&cp, &[one * C64::from(0.5)], &[1.0], &ConicSettings::default()).unwrap();
        let mut lp = LinearProgram::new(vec![2.0, 3.0]);
        lp.add_le(vec![-1.0, -1.0], -1.0);
        lp.add_le(vec![1.0, 0.0], 0.7);
        let want = solve_lp(&lp, 1e-12).unwrap().objective;
        assert!((sol.report.objective - want).abs() < 1e-6);
    }

    #[test]
    fn hyperbolic_and_log_constraints() {
        // min a  s.t.  a r >= 2,  r <= 3 log2(1 + g),  g <= 7
        let cp = ConicProgram {
            blocks: vec![],
            n_scalars: 3,
            objective: LinearForm::scalar(0, 1.0),
            equalities: vec![],
            constraints: vec![
                ScalarConstraint::Hyperbolic { x: 0, y: 1, d: 2.0 },
                ScalarConstraint::Logarithmic { x: 1, y: 2, c: 3.0, a: 1.0 },
                ScalarConstraint::Linear(LinearForm::scalar(2, 1.0).with_constant(-7.0)),
            ],
        };
        let sol = solve_conic(&cp, &[], &[2.0, 2.0, 3.0], &ConicSettings::default()).unwrap();
        assert!((sol.report.objective - 2.0 / 9.0).abs() < 1e-6, "{}", sol.report.objective);
        assert!(sol.report.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn start_must_be_interior() {
        let cp = ConicProgram {
            blocks: vec![2],
            n_scalars: 0,
            objective: LinearForm::default().with_block(0, DMatrix::identity(2, 2)),
            equalities: vec![],
            constraints: vec![],
        };
        let singular = DMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        assert_eq!(
            solve_conic(&cp, &[singular], &[], &ConicSettings::default()).unwrap_err(),
            Error::NoStrictlyFeasiblePoint
        );
    }
}
