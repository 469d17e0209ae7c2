//! SIC decoding orders, uplink rates and the closed-form max-SINR receiver.

use nalgebra::{DMatrix, DVector};

use crate::channel::FsoLink;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::C64;

/// Decoding order at one receiving node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SicOrder {
    /// `order[pos]` is the user decoded at position `pos`.
    pub order: Vec<usize>,
    /// `rank[user]` is the decoding position of `user`.
    pub rank: Vec<usize>,
}

impl SicOrder {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Users decoded after `k`; they interfere with `k`.
    pub fn later(&self, k: usize) -> &[usize] {
        &self.order[self.rank[k] + 1..]
    }

    /// Users decoded before `k`.
    pub fn earlier(&self, k: usize) -> &[usize] {
        &self.order[..self.rank[k]]
    }
}

/// Strongest channel first; ties go to the lower index.
pub fn sic_order(channels: &[DVector<C64>]) -> SicOrder {
    let norms: Vec<f64> = channels.iter().map(|h| h.norm_squared()).collect();
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (pos, &u) in order.iter().enumerate() {
        rank[u] = pos;
    }
    SicOrder { order, rank }
}

pub fn rate_from_sinr<T: Scalar>(bandwidth: T, sinr: T) -> T {
    bandwidth * sinr.ln_1p() / T::LN_2()
}

fn gain(w: &DVector<C64>, h: &DVector<C64>) -> f64 {
    w.dotc(h).norm_sqr()
}

/// Interference seen by user `k` through `w` (noise excluded).
pub fn interference(k: usize, w: &DVector<C64>, channels: &[DVector<C64>], p: &[f64], order: &SicOrder) -> f64 {
    order.later(k).iter().map(|&i| p[i] * gain(w, &channels[i])).sum()
}

/// SINR of user `k` with receiver `w`; noise is scaled by `|w|^2`.
pub fn sinr(k: usize, w: &DVector<C64>, channels: &[DVector<C64>], p: &[f64], order: &SicOrder, noise: f64) -> f64 {
    let signal = p[k] * gain(w, &channels[k]);
    signal / (interference(k, w, channels, p, order) + noise * w.norm_squared())
}

fn checked_rate(
    k: usize,
    w: &DVector<C64>,
    channels: &[DVector<C64>],
    p: &[f64],
    order: &SicOrder,
    bandwidth: f64,
    noise: f64,
) -> Result<f64> {
    if channels.len() != p.len() || channels.len() != order.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} channels, {} powers, order of {}",
            channels.len(),
            p.len(),
            order.len()
        )));
    }
    if !(p[k] > 0.0) {
        return Err(Error::ZeroPower { user: k });
    }
    Ok(rate_from_sinr(bandwidth, sinr(k, w, channels, p, order, noise)))
}

/// GUE `k` to a base station, `channels` being every GUE's channel to it.
pub fn rate_gue_bs(
    k: usize,
    channels: &[DVector<C64>],
    w: &DVector<C64>,
    p: &[f64],
    order: &SicOrder,
    b1: f64,
    noise1: f64,
) -> Result<f64> {
    checked_rate(k, w, channels, p, order, b1, noise1)
}

/// GUE `k` to a satellite, `channels` being every GUE's channel to it.
pub fn rate_gue_sat(
    k: usize,
    channels: &[DVector<C64>],
    v: &DVector<C64>,
    p: &[f64],
    order: &SicOrder,
    b2: f64,
    noise2: f64,
) -> Result<f64> {
    checked_rate(k, v, channels, p, order, b2, noise2)
}

/// Optical SUE uplink; zero power gives zero rate.
pub fn rate_sue_sat<T: Scalar>(q: T, link: &FsoLink<T>, b3: T, noise3: T) -> Result<T> {
    Ok(rate_from_sinr(b3, q * link.snr_per_watt(noise3)?))
}

/// `sum_{later i} p_i h_i h_i^H + noise * I`.
pub fn interference_covariance(
    k: usize,
    channels: &[DVector<C64>],
    p: &[f64],
    order: &SicOrder,
    noise: f64,
) -> DMatrix<C64> {
    let n = channels[k].len();
    let mut cov = DMatrix::<C64>::identity(n, n) * C64::from(noise);
    for &i in order.later(k) {
        cov.gerc(C64::from(p[i]), &channels[i], &channels[i], C64::from(1.0));
    }
    cov
}

/// Unit-norm MMSE direction `C^{-1} h_k`.
pub fn max_sinr_receiver(
    k: usize,
    channels: &[DVector<C64>],
    p: &[f64],
    order: &SicOrder,
    noise: f64,
) -> Result<DVector<C64>> {
    if !(noise > 0.0) {
        return Err(Error::SingularCovariance);
    }
    // I + sum p_i h_i h_i^H / noise keeps its eigenvalues at or above one
    let scaled: Vec<f64> = p.iter().map(|&x| x / noise).collect();
    let cov = interference_covariance(k, channels, &scaled, order, 1.0);
    let chol = cov.cholesky().ok_or(Error::SingularCovariance)?;
    let w = chol.solve(&channels[k]);
    let norm = w.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::SingularCovariance);
    }
    Ok(w / C64::from(norm))
}

/// Receive vectors for every (user, node) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    /// `w[k][m]`, GUE `k` at base station `m`.
    pub w: Vec<Vec<DVector<C64>>>,
    /// `v[k][n]`, GUE `k` at satellite `n`.
    pub v: Vec<Vec<DVector<C64>>>,
}

impl Beamformers {
    pub fn max_norm_error(&self) -> f64 {
        self.w
            .iter()
            .chain(&self.v)
            .flatten()
            .map(|x| (x.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cn(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<C64> {
        DVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * scale
        })
    }

    fn unit(rng: &mut impl Rng, n: usize) -> DVector<C64> {
        let x = cn(rng, n, 1.0);
        let nrm = x.norm();
        x / C64::from(nrm)
    }

    fn with_norms(norms: &[f64]) -> Vec<DVector<C64>> {
        norms.iter().map(|&x| DVector::from_element(1, C64::from(x.sqrt()))).collect()
    }

    #[test]
    fn order_examples() {
        let o = sic_order(&with_norms(&[3.0, 1.0, 2.0]));
        assert_eq!(o.order, vec![0, 2, 1]);
        assert_eq!(o.rank, vec![0, 2, 1]);
        let o = sic_order(&with_norms(&[1.0; 4]));
        assert_eq!(o.order, vec![0, 1, 2, 3]);
        assert_eq!(o.later(0), &[1, 2, 3]);
        assert!(o.later(3).is_empty());
        assert_eq!(o.earlier(2), &[0, 1]);
    }

    #[test]
    fn order_matches_insertion_sort() {
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let n = rng.random_range(1..12);
            // coarse values force ties
            let norms: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 + 1.0).collect();
            let mut oracle: Vec<usize> = Vec::new();
            for i in 0..n {
                let pos = oracle.iter().position(|&j| norms[i] > norms[j]).unwrap_or(oracle.len());
                oracle.insert(pos, i);
            }
            assert_eq!(sic_order(&with_norms(&norms)).order, oracle);
        }
    }

    #[test]
    fn single_user_rate_is_bandwidth() {
        let h = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let w = &h / C64::from(h.norm());
        let ch = vec![h];
        let o = sic_order(&ch);
        let r = rate_gue_bs(0, &ch, &w, &[0.5], &o, 20e6, 1.0).unwrap();
        assert!((r - 20e6).abs() < 1e-6);
        let r = rate_gue_sat(0, &ch, &w, &[0.5], &o, 20e6, 1.0).unwrap();
        assert!((r - 20e6).abs() < 1e-6);
        assert_eq!(rate_gue_bs(0, &ch, &w, &[0.0], &o, 20e6, 1.0), Err(Error::ZeroPower { user: 0 }));
    }

    #[test]
    fn first_and_last_decoded_interference() {
        let mut rng = rng_from_seed(4);
        let ch: Vec<_> = (0..4).map(|i| cn(&mut rng, 3, 1.0 + i as f64)).collect();
        let o = sic_order(&ch);
        let p = [0.3, 0.2, 0.5, 0.1];
        let w = unit(&mut rng, 3);
        let last = *o.order.last().unwrap();
        assert_eq!(interference(last, &w, &ch, &p, &o), 0.0);
        let first = o.order[0];
        let all: f64 = (0..4).filter(|&i| i != first).map(|i| p[i] * w.dotc(&ch[i]).norm_sqr()).sum();
        assert!((interference(first, &w, &ch, &p, &o) - all).abs() < 1e-14 * all);
    }

    #[test]
    fn rates_match_scalar_expansion() {
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let ch: Vec<_> = (0..3).map(|_| cn(&mut rng, 4, 1e-6)).collect();
            let o = sic_order(&ch);
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let w = unit(&mut rng, 4);
            for k in 0..3 {
                // expand |w^H h|^2 entry by entry
                let proj = |h: &DVector<C64>| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for t in 0..4 {
                        re += w[t].re * h[t].re + w[t].im * h[t].im;
                        im += w[t].re * h[t].im - w[t].im * h[t].re;
                    }
                    re * re + im * im
                };
                let nk = ch[k].norm_squared();
                let mut intf = 0.0;
                for i in 0..3 {
                    let ni = ch[i].norm_squared();
                    if ni < nk || (ni == nk && i > k) {
                        intf += p[i] * proj(&ch[i]);
                    }
                }
                let s = p[k] * proj(&ch[k]) / (intf + 1e-13);
                let want = 1e6 * (1.0 + s).log2();
                let got = rate_gue_bs(k, &ch, &w, &p, &o, 1e6, 1e-13).unwrap();
                assert!((got - want).abs() < 1e-9 * want);
            }
        }
    }

    #[test]
    fn rate_monotonicity() {
        let mut rng = rng_from_seed(6);
        for _ in 0..100 {
            let ch: Vec<_> = (0..4).map(|_| cn(&mut rng, 2, 1.0)).collect();
            let o = sic_order(&ch);
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let w = unit(&mut rng, 2);
            let k = rng.random_range(0..4);
            let base = rate_gue_bs(k, &ch, &w, &p, &o, 1.0, 0.1).unwrap();
            let mut up = p.clone();
            up[k] *= 1.5;
            assert!(rate_gue_bs(k, &ch, &w, &up, &o, 1.0, 0.1).unwrap() > base);
            for &i in o.later(k) {
                let mut more = p.clone();
                more[i] *= 2.0;
                assert!(rate_gue_bs(k, &ch, &w, &more, &o, 1.0, 0.1).unwrap() <= base);
            }
        }
    }

    #[test]
    fn relabeling_keeps_rate_multiset() {
        let mut rng = rng_from_seed(7);
        let ch: Vec<_> = (0..5).map(|_| cn(&mut rng, 3, 1.0)).collect();
        let p: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..1.0)).collect();
        let rates = |ch: &[DVector<C64>], p: &[f64]| {
            let o = sic_order(ch);
            let mut r: Vec<f64> = (0..ch.len())
                .map(|k| {
                    let w = max_sinr_receiver(k, ch, p, &o, 0.1).unwrap();
                    rate_gue_bs(k, ch, &w, p, &o, 1.0, 0.1).unwrap()
                })
                .collect();
            r.sort_by(f64::total_cmp);
            r
        };
        let perm = [3, 0, 4, 1, 2];
        let ch2: Vec<_> = perm.iter().map(|&i| ch[i].clone()).collect();
        let p2: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        for (a, b) in rates(&ch, &p).iter().zip(rates(&ch2, &p2)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sue_rate() {
        let link: FsoLink<f64> = FsoLink {
            wavelength: 1550e-9,
            distance_m: 1e6,
            aperture_t: 0.2,
            aperture_r: 0.2,
            pointing_error_t: 0.8e-6,
            pointing_error_r: 0.8e-6,
            eta_t: 0.9,
            eta_r: 0.9,
        };
        let noise: f64 = 1e-13;
        assert_eq!(rate_sue_sat(0.0, &link, 1e6, noise).unwrap(), 0.0);
        let near = link.snr_per_watt(noise).unwrap();
        let far = FsoLink { distance_m: 2e6, ..link }.snr_per_watt(noise).unwrap();
        assert!((near / far - 4.0).abs() < 1e-12);
        // decibel bookkeeping
        let g_db = 20.0 * (std::f64::consts::PI * 0.2 / 1550e-9).log10();
        let l_db = -10.0 * std::f64::consts::LOG10_E * (10f64.powf(g_db / 10.0) * 0.64e-12);
        let snr_db = 10.0 * 0.5f64.log10() + 20.0 * 0.9f64.log10()
            + 20.0 * (1550e-9 / (4.0 * std::f64::consts::PI * 1e6)).log10()
            + 2.0 * g_db
            + 2.0 * l_db
            - 10.0 * noise.log10();
        let want = 1e6 * (1.0 + 10f64.powf(snr_db / 10.0)).log2();
        let got = rate_sue_sat(0.5, &link, 1e6, noise).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "{got} {want}");
    }

    #[test]
    fn matched_filter_without_interference() {
        let mut rng = rng_from_seed(8);
        let ch = vec![cn(&mut rng, 4, 1.0)];
        let o = sic_order(&ch);
        let w = max_sinr_receiver(0, &ch, &[1.0], &o, 0.5).unwrap();
        let mf = &ch[0] / C64::from(ch[0].norm());
        assert!((w - mf).norm() < 1e-12);
    }

    #[test]
    fn receiver_beats_random_probes() {
        let mut rng = rng_from_seed(9);
        let ch: Vec<_> = (0..4).map(|_| cn(&mut rng, 3, 1.0)).collect();
        let o = sic_order(&ch);
        let p = [0.4, 0.9, 0.2, 0.6];
        for k in 0..4 {
            let w = max_sinr_receiver(k, &ch, &p, &o, 0.05).unwrap();
            assert!((w.norm() - 1.0).abs() < 1e-12);
            let best = sinr(k, &w, &ch, &p, &o, 0.05);
            for _ in 0..1000 {
                let probe = unit(&mut rng, 3);
                assert!(sinr(k, &probe, &ch, &p, &o, 0.05) <= best + 1e-9);
            }
        }
    }

    #[test]
    fn receiver_sinr_is_top_generalized_eigenvalue() {
        let mut rng = rng_from_seed(10);
        for _ in 0..50 {
            let ch: Vec<_> = (0..5).map(|_| cn(&mut rng, 4, 1.0)).collect();
            let o = sic_order(&ch);
            let p: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..1.0)).collect();
            let k = rng.random_range(0..5);
            let cov = interference_covariance(k, &ch, &p, &o, 0.1);
            // C^{-1/2} (p h h^H) C^{-1/2}
            let eig = cov.clone().symmetric_eigen();
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::from(1.0 / x.sqrt())))
                * eig.eigenvectors.adjoint();
            let a = &inv_sqrt * (&ch[k] * ch[k].adjoint()) * C64::from(p[k]) * &inv_sqrt;
            let top = a.symmetric_eigen().eigenvalues.max();
            let w = max_sinr_receiver(k, &ch, &p, &o, 0.1).unwrap();
            let got = sinr(k, &w, &ch, &p, &o, 0.1);
            assert!((got - top).abs() < 1e-8 * top);
        }
    }

    #[test]
    fn singular_covariance() {
        let ch = vec![DVector::from_element(2, C64::from(1.0)), DVector::from_element(2, C64::from(0.5))];
        let o = sic_order(&ch);
        assert_eq!(max_sinr_receiver(0, &ch, &[1.0, 1.0], &o, 0.0), Err(Error::SingularCovariance));
    }
}
