//! Channel generation: terrestrial Rayleigh vectors, satellite-terrestrial
//! vectors with large-scale fading, rain attenuation, beam gain and Doppler,
//! and free-space optical link gains.

pub mod bessel;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::num::{db_to_linear, Scalar};
use crate::C64;

pub use bessel::{bessel_j, bessel_j_over_pow};

/// Terrestrial pathloss in dB for a distance in km.
pub fn pathloss_db<T: Scalar>(tau_km: T) -> Result<T> {
    if !(tau_km > T::zero()) {
        return Err(Error::NonPositiveDistance(tau_km.to_f64_lossy()));
    }
    Ok(T::lit(128.1) + T::lit(37.6) * tau_km.log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrestrialChannel {
    pub h: DVector<C64>,
}

/// Rayleigh fading with per-entry variance `10^(-PL/10)`.
pub fn gen_terrestrial(rng: &mut impl Rng, tau_km: f64, n_antennas: usize) -> Result<TerrestrialChannel> {
    let var = db_to_linear(-pathloss_db(tau_km)?);
    let sd = (var / 2.0).sqrt();
    let h = DVector::from_iterator(
        n_antennas,
        (0..n_antennas).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(sd * re, sd * im)
        }),
    );
    Ok(TerrestrialChannel { h })
}

/// Large-scale fading `(mu/(4 pi f phi))^2 * G/(kappa B T)`, with `G` in dB.
pub fn large_scale_c<T: Scalar>(
    carrier_hz: T,
    distance_m: T,
    tx_gain_db: T,
    kappa: T,
    bandwidth_hz: T,
    temp_k: T,
    light_speed: T,
) -> Result<T> {
    for (name, v) in [
        ("carrier_freq", carrier_hz),
        ("distance", distance_m),
        ("boltzmann", kappa),
        ("bandwidth", bandwidth_hz),
        ("noise_temp", temp_k),
        ("light_speed", light_speed),
    ] {
        if !(v > T::zero()) {
            return Err(Error::NonPositiveParameter { name, value: v.to_f64_lossy() });
        }
    }
    let fspl = light_speed / (T::lit(4.0) * T::PI() * carrier_hz * distance_m);
    Ok(fspl * fspl * db_to_linear(tx_gain_db) / (kappa * bandwidth_hz * temp_k))
}

/// Rain attenuation vector: one log-normal amplitude (drawn in dB, mean
/// `mu_db`, variance `sigma2_db`) with independent uniform phases.
pub fn rain_attenuation(rng: &mut impl Rng, mu_db: f64, sigma2_db: f64, n: usize) -> Vec<C64> {
    let x_db = if sigma2_db > 0.0 {
        Normal::new(mu_db, sigma2_db.sqrt()).expect("finite variance").sample(rng)
    } else {
        mu_db
    };
    let amplitude = 10f64.powf(x_db / 20.0);
    (0..n)
        .map(|_| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(amplitude, -theta)
        })
        .collect()
}

/// Satellite receive gain per antenna element.
pub fn beam_gain<T: Scalar>(eps: &[T], eps_3db: T, b_max: T) -> Vec<T> {
    let scale = T::lit(2.07123) / eps_3db.sin();
    eps.iter()
        .map(|&e| {
            let u = scale * e.sin();
            let bracket = bessel_j_over_pow(1, u) / T::lit(2.0) + T::lit(36.0) * bessel_j_over_pow(3, u);
            b_max * bracket.powi(3)
        })
        .collect()
}

/// Factors of a satellite-terrestrial channel before composition.
#[derive(Debug, Clone, PartialEq)]
pub struct SatChannelParts {
    pub large_scale: f64,
    pub rain: Vec<C64>,
    pub beam_gain: Vec<f64>,
    /// cycles
    pub doppler_phase: f64,
    pub tx_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteChannel {
    pub g: DVector<C64>,
    pub large_scale: f64,
    pub rain: Vec<C64>,
    pub beam_gain: Vec<f64>,
    /// Residual Doppler phase still present in `g`, cycles.
    pub doppler_phase: f64,
    pub tx_gain_db: f64,
}

impl SatelliteChannel {
    /// Recomposes `g` from the stored factors.
    pub fn recompose(&self) -> DVector<C64> {
        let rot = C64::from_polar(1.0, std::f64::consts::TAU * self.doppler_phase);
        let amp = self.large_scale.sqrt();
        DVector::from_iterator(
            self.rain.len(),
            self.rain.iter().zip(&self.beam_gain).map(|(r, b)| r * (amp * b.sqrt()) * rot),
        )
    }
}

pub fn assemble_sat_channel(parts: SatChannelParts) -> Result<SatelliteChannel> {
    if parts.rain.len() != parts.beam_gain.len() {
        return Err(Error::ShapeMismatch(format!(
            "rain vector has {} entries, beam gain {}",
            parts.rain.len(),
            parts.beam_gain.len()
        )));
    }
    let mut ch = SatelliteChannel {
        g: DVector::zeros(0),
        large_scale: parts.large_scale,
        rain: parts.rain,
        beam_gain: parts.beam_gain,
        doppler_phase: parts.doppler_phase,
        tx_gain_db: parts.tx_gain_db,
    };
    ch.g = ch.recompose();
    Ok(ch)
}

/// Removes the Doppler rotation; magnitudes are untouched.
pub fn doppler_compensate(mut ch: SatelliteChannel) -> SatelliteChannel {
    let derot = C64::from_polar(1.0, -std::f64::consts::TAU * ch.doppler_phase);
    ch.g.iter_mut().for_each(|x| *x *= derot);
    ch.doppler_phase = 0.0;
    ch
}

/// Free-space optical link between an SUE and a satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoLink<T> {
    pub wavelength: T,
    pub distance_m: T,
    pub aperture_t: T,
    pub aperture_r: T,
    pub pointing_error_t: T,
    pub pointing_error_r: T,
    pub eta_t: T,
    pub eta_r: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoGains<T> {
    pub aperture_gain_t: T,
    pub aperture_gain_r: T,
    pub pointing_loss_t: T,
    pub pointing_loss_r: T,
}

pub fn aperture_gain<T: Scalar>(diameter: T, wavelength: T) -> T {
    let x = T::PI() * diameter / wavelength;
    x * x
}

pub fn fso_gains<T: Scalar>(link: &FsoLink<T>) -> Result<FsoGains<T>> {
    for (name, v) in [
        ("aperture_t", link.aperture_t),
        ("aperture_r", link.aperture_r),
        ("wavelength", link.wavelength),
    ] {
        if !(v > T::zero()) {
            return Err(Error::NonPositiveParameter { name, value: v.to_f64_lossy() });
        }
    }
    for (name, v) in [("pointing_error_t", link.pointing_error_t), ("pointing_error_r", link.pointing_error_r)] {
        if v < T::zero() {
            return Err(Error::NonPositiveParameter { name, value: v.to_f64_lossy() });
        }
    }
    let gt = aperture_gain(link.aperture_t, link.wavelength);
    let gr = aperture_gain(link.aperture_r, link.wavelength);
    Ok(FsoGains {
        aperture_gain_t: gt,
        aperture_gain_r: gr,
        pointing_loss_t: (-gt * link.pointing_error_t * link.pointing_error_t).exp(),
        pointing_loss_r: (-gr * link.pointing_error_r * link.pointing_error_r).exp(),
    })
}

impl<T: Scalar> FsoLink<T> {
    /// Received SNR per watt of transmit power (`I_l` for the chosen link).
    pub fn snr_per_watt(&self, noise: T) -> Result<T> {
        if !(self.distance_m > T::zero()) {
            return Err(Error::NonPositiveDistance(self.distance_m.to_f64_lossy()));
        }
        let g = fso_gains(self)?;
        let fspl = self.wavelength / (T::lit(4.0) * T::PI() * self.distance_m);
        Ok(self.eta_t
            * self.eta_r
            * fspl
            * fspl
            * g.aperture_gain_t
            * g.aperture_gain_r
            * g.pointing_loss_t
            * g.pointing_loss_r
            / noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn pathloss_values() {
        assert_eq!(pathloss_db(1.0_f64).unwrap(), 128.1);
        assert!((pathloss_db(10.0_f64).unwrap() - 165.7).abs() < 1e-12);
        assert!((pathloss_db(0.1_f64).unwrap() - 90.5).abs() < 1e-12);
        assert!((pathloss_db(1.0_f32).unwrap() - 128.1).abs() < 1e-4);
        assert!(matches!(pathloss_db(0.0_f64), Err(Error::NonPositiveDistance(_))));
        assert!(matches!(pathloss_db(-1.0_f64), Err(Error::NonPositiveDistance(_))));
    }

    #[test]
    fn terrestrial_shape_and_determinism() {
        let a = gen_terrestrial(&mut rng_from_seed(1), 0.5, 16).unwrap();
        let b = gen_terrestrial(&mut rng_from_seed(1), 0.5, 16).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h.len(), 16);
        assert!(gen_terrestrial(&mut rng_from_seed(1), 0.0, 4).is_err());
    }

    #[test]
    fn terrestrial_power_matches_pathloss() {
        let mut rng = rng_from_seed(11);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += gen_terrestrial(&mut rng, 1.0, 1).unwrap().h[0].norm_sqr();
        }
        let mean = acc / draws as f64;
        let want = 10f64.powf(-12.81);
        assert!(((mean - want) / want).abs() < 0.02, "{mean:e} vs {want:e}");
    }

    fn c_oracle(f: f64, phi: f64, g_db: f64, kappa: f64, b: f64, t: f64) -> f64 {
        // log-domain: 20log10(c/(4 pi f phi)) + G - 10log10(kappa B T)
        let db = 20.0 * (3e8 / (4.0 * std::f64::consts::PI * f * phi)).log10() + g_db
            - 10.0 * (kappa * b * t).log10();
        10f64.powf(db / 10.0)
    }

    #[test]
    fn large_scale_scaling_and_cross_check() {
        let g_db = 34.0 + 10.0 * 300f64.log10();
        let base = large_scale_c(6e9, 1e6, g_db, 1.38e-23, 20e6, 300.0, 3e8).unwrap();
        let far = large_scale_c(6e9, 2e6, g_db, 1.38e-23, 20e6, 300.0, 3e8).unwrap();
        let wide = large_scale_c(6e9, 1e6, g_db, 1.38e-23, 40e6, 300.0, 3e8).unwrap();
        assert!((base / far - 4.0).abs() < 1e-12);
        assert!((base / wide - 2.0).abs() < 1e-12);
        let oracle = c_oracle(6e9, 1e6, g_db, 1.38e-23, 20e6, 300.0);
        assert!(((base - oracle) / oracle).abs() < 1e-10);
        assert!(matches!(
            large_scale_c(6e9, 1e6, 0.0, 1.38e-23, 0.0, 300.0, 3e8),
            Err(Error::NonPositiveParameter { .. })
        ));
    }

    #[test]
    fn rain_degenerate_and_statistics() {
        let mut rng = rng_from_seed(5);
        let r = rain_attenuation(&mut rng, -2.6, 0.0, 8);
        for x in &r {
            assert!((x.norm() - r[0].norm()).abs() < 1e-15);
        }
        let draws = 100_000;
        let mut log_sum = 0.0;
        let mut bins = [0usize; 10];
        for _ in 0..draws {
            let v = rain_attenuation(&mut rng, -2.6, 1.63, 1)[0];
            log_sum += v.norm().ln();
            let phase = (-v.arg()).rem_euclid(std::f64::consts::TAU);
            bins[((phase / std::f64::consts::TAU * 10.0) as usize).min(9)] += 1;
        }
        let want = -2.6 * 10f64.ln() / 20.0;
        let got = log_sum / draws as f64;
        assert!(((got - want) / want).abs() < 0.02, "{got} vs {want}");
        // chi-square, 9 dof, 1% critical value 21.67
        let expected = draws as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 21.67, "chi2 = {chi2}");
    }

    /// Beam pattern from the integral form of the Bessel functions.
    fn beam_oracle(eps: f64, eps3: f64, bmax: f64) -> f64 {
        let j = |n: u32, x: f64| {
            let steps = 2000;
            let h = std::f64::consts::PI / steps as f64;
            let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
            let mut s = f(0.0) + f(std::f64::consts::PI);
            for i in 1..steps {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            s * h / 3.0 / std::f64::consts::PI
        };
        let u = 2.07123 * eps.sin() / eps3.sin();
        bmax * (j(1, u) / (2.0 * u) + 36.0 * j(3, u) / u.powi(3)).powi(3)
    }

    #[test]
    fn beam_gain_boresight_half_power_monotone() {
        let eps3 = 0.4_f64.to_radians();
        let bmax = db_to_linear(14.0);
        assert!((beam_gain(&[0.0], eps3, bmax)[0] - bmax).abs() < 1e-9 * bmax);
        assert!((beam_gain(&[0.0_f32], 0.4_f32.to_radians(), 25.0)[0] - 25.0).abs() < 1e-4);
        let half = beam_gain(&[eps3], eps3, bmax)[0];
        let oracle = beam_oracle(eps3, eps3, bmax);
        assert!((half - oracle).abs() < 1e-9 * bmax);
        // bracket is 1/sqrt(2) at the 3 dB angle; the cube puts the gain at 2^-1.5
        assert!(((half / bmax).powf(2.0 / 3.0) - 0.5).abs() < 1e-5, "{}", half / bmax);
        let grid: Vec<f64> = (0..=400).map(|i| eps3 * i as f64 / 400.0).collect();
        let g = beam_gain(&grid, eps3, bmax);
        for (i, w) in g.windows(2).enumerate() {
            assert!(w[1] <= w[0] + 1e-12, "not monotone at {i}");
            assert!(w[1] < bmax && w[1] > 0.0);
            // the quadrature oracle loses digits in J3/u^3 near the axis
            if i >= 40 {
                assert!((w[1] - beam_oracle(grid[i + 1], eps3, bmax)).abs() < 1e-8 * bmax);
            }
        }
    }

    fn parts(rng: &mut impl Rng, n: usize) -> SatChannelParts {
        SatChannelParts {
            large_scale: rng.random_range(1.0..1e3),
            rain: rain_attenuation(rng, -2.6, 1.63, n),
            beam_gain: (0..n).map(|_| rng.random_range(0.1..25.0)).collect(),
            doppler_phase: rng.random(),
            tx_gain_db: 58.8,
        }
    }

    #[test]
    fn sat_channel_recomposition_and_doppler() {
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            let ch = assemble_sat_channel(parts(&mut rng, 8)).unwrap();
            let re = ch.recompose();
            assert!((&re - &ch.g).norm() <= 1e-12 * ch.g.norm());
            let before: Vec<f64> = ch.g.iter().map(|x| x.norm()).collect();
            let comp = doppler_compensate(ch.clone());
            assert!((comp.g.norm() - ch.g.norm()).abs() <= 1e-12 * ch.g.norm());
            for (a, b) in before.iter().zip(comp.g.iter()) {
                assert!((a - b.norm()).abs() <= 1e-12 * a);
            }
            assert!((&comp.recompose() - &comp.g).norm() <= 1e-12 * ch.g.norm());
        }
        let mut p = parts(&mut rng, 4);
        p.doppler_phase = 0.0;
        let ch = assemble_sat_channel(p).unwrap();
        assert_eq!(doppler_compensate(ch.clone()).g, ch.g);
        let mut bad = parts(&mut rng, 4);
        bad.beam_gain.pop();
        assert!(matches!(assemble_sat_channel(bad), Err(Error::ShapeMismatch(_))));
    }

    fn table_link(distance_m: f64) -> FsoLink<f64> {
        FsoLink {
            wavelength: 1550e-9,
            distance_m,
            aperture_t: 0.2,
            aperture_r: 0.2,
            pointing_error_t: 0.8e-6,
            pointing_error_r: 0.8e-6,
            eta_t: 0.9,
            eta_r: 0.9,
        }
    }

    #[test]
    fn fso_gain_values() {
        let g = fso_gains(&table_link(1e6)).unwrap();
        assert!((g.aperture_gain_t / 1.643e11 - 1.0).abs() < 1e-3);
        let db = 20.0 * (std::f64::consts::PI * 0.2 / 1550e-9).log10();
        assert!((10.0 * g.aperture_gain_t.log10() - db).abs() < 1e-9);
        assert!((db - 112.2).abs() < 0.05);
        assert!((g.pointing_loss_t - (-0.1052f64).exp()).abs() < 1e-3);
        assert!((g.pointing_loss_t - 0.900).abs() < 1e-3);
        let mut no_err = table_link(1e6);
        no_err.pointing_error_t = 0.0;
        assert_eq!(fso_gains(&no_err).unwrap().pointing_loss_t, 1.0);
        let mut bad = table_link(1e6);
        bad.aperture_r = 0.0;
        assert!(fso_gains(&bad).is_err());
    }
}
