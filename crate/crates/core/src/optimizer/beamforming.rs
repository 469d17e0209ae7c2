//! Receive beamforming by successive convex approximation with semidefinite
//! relaxation, one link at a time.
//!
//! For a link with signal matrix `H` and interference matrix `Q` (both
//! normalized by the noise), a lifted receiver `W` reaches SINR
//! `tr(HW) / tr((Q + I)W)`. The ratio is scale-free, so the lift is
//! normalized by `tr((Q + I)W) = 1` and solved in whitened coordinates
//! `W^ = C^(1/2) W C^(1/2)`, `C = Q + I`, where SINR is `tr(H^ W^)`. Around
//! an anchor with SINR `G#` the program is
//!
//! ```text
//! min A'  s.t.  A' R' >= 1,  R' <= log2(1 + G# G'),  G' <= tr(H^ W^) / G#,
//!               tr W^ = 1,  W^ >= 0
//! ```
//!
//! with `A'` the transmit time in units of `d / B`.

use nalgebra::{DMatrix, DVector};

use crate::costmodel::{GueTarget, Plan};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::instance::NetworkInstance;
use crate::linkrate::{max_sinr_receiver, sinr, Beamformers, SicOrder};
use crate::solvers::{rank_one_ratio, solve_conic, top_eigpair, ConicProgram, ConicSettings, LinearForm, ScalarConstraint, SolveStatus};
use crate::C64;

/// Anchor and auxiliaries of one link between outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    /// Anchor receiver, unit norm.
    pub anchor: DVector<C64>,
    /// SINR reached by the anchor.
    pub anchor_sinr: f64,
    /// Whitened signal `tr(H^ W^#)` at the anchor.
    pub anchor_signal: f64,
    /// `A'`, `R'`, `G'` from the last solve.
    pub aux: [f64; 3],
}

/// Outcome of the outer loop on one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSca {
    pub w: DVector<C64>,
    pub sinr: f64,
    pub outer: usize,
    /// Of the last lifted solution.
    pub rank_one: f64,
    /// Convexified objective after each accepted outer step.
    pub history: Vec<f64>,
    pub state: ScaState,
}

/// Settings of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaSettings {
    pub max_outer: usize,
    pub tol: f64,
    /// Weight of the identity in the interior start.
    pub blend: f64,
    pub conic: ConicSettings,
}

impl Default for ScaSettings {
    fn default() -> Self {
        Self { max_outer: 20, tol: 1e-5, blend: 1e-3, conic: ConicSettings::default() }
    }
}

/// Orthonormal basis of the span of the desired and interfering channels.
fn reduced_basis(desired: &DVector<C64>, interferers: &[&DVector<C64>]) -> DMatrix<C64> {
    let n = desired.len();
    if interferers.len() + 1 >= n {
        return DMatrix::identity(n, n);
    }
    let mut a = DMatrix::zeros(n, interferers.len() + 1);
    a.set_column(0, desired);
    for (j, h) in interferers.iter().enumerate() {
        a.set_column(j + 1, *h);
    }
    a.qr().q()
}

fn rank_one(v: &DVector<C64>) -> DMatrix<C64> {
    v * v.adjoint()
}

/// Outer loop for user `k` at one node, started from `anchor`.
pub fn sca_link(
    k: usize,
    channels: &[DVector<C64>],
    p: &[f64],
    order: &SicOrder,
    noise: f64,
    anchor: &DVector<C64>,
    settings: &ScaSettings,
) -> Result<LinkSca> {
    let later = order.later(k);
    let inter: Vec<&DVector<C64>> = later.iter().map(|&i| &channels[i]).collect();
    let u = reduced_basis(&channels[k], &inter);
    let r = u.ncols();
    let mut cov = DMatrix::<C64>::identity(r, r);
    for &i in later {
        let hi = u.adjoint() * &channels[i];
        cov.gerc(C64::from(p[i] / noise), &hi, &hi, C64::from(1.0));
    }
    let eig = cov.symmetric_eigen();
    let root = |e: f64| -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from(l.max(1.0).powf(e))));
        &eig.eigenvectors * d * eig.eigenvectors.adjoint()
    };
    let (c_half, c_neg_half) = (root(0.5), root(-0.5));
    let g = &c_neg_half * (u.adjoint() * &channels[k]) * C64::from((p[k] / noise).sqrt());
    let hmat = rank_one(&g);
    // whitened direction of a full-space receiver and back
    let whiten = |w: &DVector<C64>| {
        let x = &c_half * (u.adjoint() * w);
        let n = x.norm();
        x / C64::from(n)
    };
    let unwhiten = |x: &DVector<C64>| {
        let w = &u * (&c_neg_half * x);
        let n = w.norm();
        w / C64::from(n)
    };
    let gain = |x: &DVector<C64>| x.dotc(&g).norm_sqr();

    let mut x_a = whiten(anchor);
    if !(x_a.norm() > 0.5) || !(gain(&x_a) > 0.0) {
        x_a = g.clone() / C64::from(g.norm());
    }
    let mut g_a = gain(&x_a);
    if !(g_a > 0.0) {
        return Err(Error::ZeroPower { user: k });
    }
    let first = anchor / C64::from(anchor.norm());
    let first_sinr = sinr(k, &first, channels, p, order, noise);
    let mut history = Vec::new();
    let mut obj_prev = 1.0 / (1.0 + g_a).log2();
    let mut increases = 0;
    let mut last_ratio = 1.0;
    let mut aux = [obj_prev, 1.0 / obj_prev, 1.0];
    let mut outer = 0;
    while outer < settings.max_outer {
        outer += 1;
        let eps = settings.blend;
        let w0 = rank_one(&x_a) * C64::from(1.0 - eps) + DMatrix::<C64>::identity(r, r) * C64::from(eps / r as f64);
        let lin = LinearForm::default().with_block(0, &hmat * C64::from(-1.0 / g_a)).with_scalar(2, 1.0);
        let slack0 = -lin.eval(std::slice::from_ref(&w0), &[0.0, 0.0, 0.0]);
        if !(slack0 > 0.0) {
            return Err(Error::NoStrictlyFeasiblePoint);
        }
        let gp0 = 0.99 * slack0;
        let rp0 = 0.99 * (1.0 + g_a * gp0).log2();
        let ap0 = 1.01 / rp0;
        let cp = ConicProgram {
            blocks: vec![r],
            n_scalars: 3,
            objective: LinearForm::scalar(0, 1.0),
            equalities: vec![LinearForm::default().with_block(0, DMatrix::identity(r, r)).with_constant(-1.0)],
            constraints: vec![
                ScalarConstraint::Hyperbolic { x: 0, y: 1, d: 1.0 },
                ScalarConstraint::Logarithmic { x: 1, y: 2, c: 1.0, a: g_a },
                ScalarConstraint::Linear(lin),
            ],
        };
        let sol = solve_conic(&cp, &[w0], &[ap0, rp0, gp0], &settings.conic)?;
        if sol.report.status != SolveStatus::Optimal {
            break;
        }
        let wm = &sol.blocks[0];
        let lifted = &c_neg_half * wm * &c_neg_half;
        last_ratio = rank_one_ratio(&((&lifted + lifted.adjoint()) * C64::from(0.5)))?;
        let (_, cand) = top_eigpair(wm)?;
        let g_c = gain(&cand);
        let obj = sol.scalars[0];
        if obj > obj_prev * (1.0 + settings.tol) {
            increases += 1;
            if increases >= 2 {
                return Err(Error::ScaDiverged);
            }
        } else {
            increases = 0;
        }
        let accept = g_c >= g_a;
        if accept {
            x_a = cand;
            g_a = g_c;
            aux = [sol.scalars[0], sol.scalars[1], sol.scalars[2]];
            history.push(obj);
        }
        let change = (obj_prev - obj).abs() / obj_prev.abs().max(1e-300);
        obj_prev = obj.min(obj_prev);
        if !accept || change < settings.tol {
            break;
        }
    }
    let w = unwhiten(&x_a);
    let final_sinr = sinr(k, &w, channels, p, order, noise);
    let (w, final_sinr) = if final_sinr >= first_sinr { (w, final_sinr) } else { (first, first_sinr) };
    Ok(LinkSca {
        state: ScaState { anchor: w.clone(), anchor_sinr: final_sinr, anchor_signal: g_a, aux },
        w,
        sinr: final_sinr,
        outer,
        rank_one: last_ratio,
        history,
    })
}

/// Per-step diagnostics of the beamforming block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamDiagnostics {
    /// Rank-one ratio at each selected link's termination.
    pub rank_one: Vec<f64>,
    pub outer_steps: usize,
    pub links: usize,
}

impl BeamDiagnostics {
    pub fn min_rank_one(&self) -> f64 {
        self.rank_one.iter().cloned().fold(1.0, f64::min)
    }
}

/// How receivers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverKind {
    /// Successive convex approximation with semidefinite relaxation.
    #[default]
    Sdr,
    /// The MMSE direction directly.
    ClosedForm,
    /// Nulls later-decoded users, then matched filtering.
    ZeroForcing,
}

/// Channels, decoding order and noise seen at a node.
pub fn node_parts<'a>(
    inst: &'a NetworkInstance,
    scenario: &ScenarioConfig,
    target: GueTarget,
) -> (&'a [DVector<C64>], &'a SicOrder, f64) {
    match target {
        GueTarget::Bs(m) => (&inst.h[m], &inst.order_bs[m], scenario.noise1),
        GueTarget::Sat(n) => (&inst.g[n], &inst.order_sat[n], scenario.sat_noise()),
    }
}

/// Unit receiver that nulls every later-decoded channel; least squares with a
/// small ridge when there are too many to null. The flag reports the
/// fallback.
pub fn zero_forcing_receiver(k: usize, channels: &[DVector<C64>], order: &SicOrder) -> (DVector<C64>, bool) {
    let h = &channels[k];
    let n = h.len();
    let later = order.later(k);
    if later.is_empty() {
        return (h / C64::from(h.norm()), false);
    }
    let mut g = DMatrix::<C64>::zeros(n, later.len());
    for (j, &i) in later.iter().enumerate() {
        g.set_column(j, &channels[i]);
    }
    let exact = later.len() < n;
    let gram = g.adjoint() * &g;
    let scale = gram.diagonal().iter().map(|z| z.re).fold(0.0, f64::max).max(1e-300);
    let ridge = if exact { 0.0 } else { 1e-3 * scale };
    let reg = gram + DMatrix::<C64>::identity(later.len(), later.len()) * C64::from(ridge);
    let proj = match reg.clone().cholesky() {
        Some(ch) => {
            let coef = ch.solve(&(g.adjoint() * h));
            h - &g * coef
        }
        None => h.clone(),
    };
    let norm = proj.norm();
    if norm > 1e-12 * h.norm() {
        (proj / C64::from(norm), !exact)
    } else {
        (h / C64::from(h.norm()), true)
    }
}

/// Receiver for every (user, node) pair. Selected links use `kind`; the rest
/// get the MMSE direction so later offloading decisions see their best rate.
pub fn sca_beamforming(
    inst: &NetworkInstance,
    plan: &Plan,
    scenario: &ScenarioConfig,
    kind: ReceiverKind,
    settings: &ScaSettings,
) -> Result<(Beamformers, BeamDiagnostics)> {
    let mut beams = plan.beams.clone();
    let mut diag = BeamDiagnostics::default();
    let nodes: Vec<GueTarget> = (0..inst.m()).map(GueTarget::Bs).chain((0..inst.n()).map(GueTarget::Sat)).collect();
    for k in 0..inst.k() {
        let selected = plan.gue_target(k);
        for &t in &nodes {
            let (channels, order, noise) = node_parts(inst, scenario, t);
            let slot = match t {
                GueTarget::Bs(m) => &mut beams.w[k][m],
                GueTarget::Sat(n) => &mut beams.v[k][n],
            };
            let w = match (selected == Some(t), kind) {
                (true, ReceiverKind::Sdr) => {
                    let res = sca_link(k, channels, &plan.p, order, noise, slot, settings)?;
                    diag.rank_one.push(res.rank_one);
                    diag.outer_steps += res.outer;
                    diag.links += 1;
                    res.w
                }
                (true, ReceiverKind::ZeroForcing) => zero_forcing_receiver(k, channels, order).0,
                _ => max_sinr_receiver(k, channels, &plan.p, order, noise)?,
            };
            *slot = w;
        }
    }
    Ok((beams, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkrate::sic_order;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_channels(rng: &mut impl Rng, users: usize, n: usize) -> Vec<DVector<C64>> {
        (0..users)
            .map(|_| DVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-4))
            .collect()
    }

    #[test]
    fn single_user_reaches_matched_filter() {
        let mut rng = rng_from_seed(5);
        let ch = random_channels(&mut rng, 1, 6);
        let order = sic_order(&ch);
        let p = [0.5];
        let anchor = DVector::from_element(6, C64::new(1.0, 0.0)) / C64::from(6f64.sqrt());
        let res = sca_link(0, &ch, &p, &order, 1e-10, &anchor, &ScaSettings::default()).unwrap();
        let best = sinr(0, &max_sinr_receiver(0, &ch, &p, &order, 1e-10).unwrap(), &ch, &p, &order, 1e-10);
        assert!((res.sinr - best).abs() <= 1e-6 * best, "{} vs {}", res.sinr, best);
        assert!(res.rank_one >= 0.99);
    }

    #[test]
    fn multi_user_matches_mmse() {
        let mut rng = rng_from_seed(9);
        for trial in 0..5 {
            let users = 4 + trial % 3;
            let ch = random_channels(&mut rng, users, 6);
            let order = sic_order(&ch);
            let p: Vec<f64> = (0..users).map(|_| rng.random_range(0.1..1.0)).collect();
            for k in 0..users {
                let anchor = &ch[k] / C64::from(ch[k].norm());
                let res = sca_link(k, &ch, &p, &order, 1e-10, &anchor, &ScaSettings::default()).unwrap();
                let best = sinr(k, &max_sinr_receiver(k, &ch, &p, &order, 1e-10).unwrap(), &ch, &p, &order, 1e-10);
                assert!((res.sinr - best).abs() <= 1e-3 * best, "user {k}: {} vs {}", res.sinr, best);
                assert!(res.rank_one >= 0.99);
                for pair in res.history.windows(2) {
                    assert!(pair[1] <= pair[0] * (1.0 + 1e-8));
                }
            }
        }
    }

    #[test]
    fn zero_forcing_nulls_later_users() {
        let mut rng = rng_from_seed(2);
        let ch = random_channels(&mut rng, 2, 4);
        let order = sic_order(&ch);
        let first = order.order[0];
        let second = order.order[1];
        let (w, fallback) = zero_forcing_receiver(first, &ch, &order);
        assert!(!fallback);
        assert!(w.dotc(&ch[second]).norm() <= 1e-9 * ch[second].norm());
        let (w2, _) = zero_forcing_receiver(second, &ch, &order);
        let mf = &ch[second] / C64::from(ch[second].norm());
        assert!((w2 - mf).norm() < 1e-12);
    }

    #[test]
    fn zero_forcing_flags_excess_interferers() {
        let mut rng = rng_from_seed(4);
        let ch = random_channels(&mut rng, 5, 3);
        let order = sic_order(&ch);
        let (w, fallback) = zero_forcing_receiver(order.order[0], &ch, &order);
        assert!(fallback);
        assert!((w.norm() - 1.0).abs() < 1e-12);
    }
}
