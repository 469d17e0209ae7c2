//! One sampled network: tasks, channels, distances and SIC orders.

use nalgebra::DVector;
use rand::Rng;

use crate::channel::{
    assemble_sat_channel, beam_gain, doppler_compensate, gen_terrestrial, large_scale_c, rain_attenuation, FsoLink,
    SatChannelParts,
};
use crate::costmodel::TaskSpec;
use crate::error::Result;
use crate::geometry::{sample_geometry, GeometrySample};
use crate::harness::ScenarioConfig;
use crate::linkrate::{sic_order, SicOrder};
use crate::rng::SeedStream;
use crate::C64;

#[derive(Debug, Clone)]
pub struct NetworkInstance {
    pub gue_tasks: Vec<TaskSpec<f64>>,
    pub sue_tasks: Vec<TaskSpec<f64>>,
    pub geometry: GeometrySample,
    /// `h[m][k]`: GUE `k` to base station `m`.
    pub h: Vec<Vec<DVector<C64>>>,
    /// `g[n][k]`: GUE `k` to satellite `n`, Doppler-compensated.
    pub g: Vec<Vec<DVector<C64>>>,
    /// `fso[l][n]`
    pub fso: Vec<Vec<FsoLink<f64>>>,
    /// `snr_sue[l][n]`: optical SNR per watt.
    pub snr_sue: Vec<Vec<f64>>,
    /// `prop_gue_sat[k][n]`, s
    pub prop_gue_sat: Vec<Vec<f64>>,
    /// `prop_sue_sat[l][n]`, s
    pub prop_sue_sat: Vec<Vec<f64>>,
    pub order_bs: Vec<SicOrder>,
    pub order_sat: Vec<SicOrder>,
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl NetworkInstance {
    pub fn k(&self) -> usize {
        self.gue_tasks.len()
    }

    pub fn l(&self) -> usize {
        self.sue_tasks.len()
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// Draws an instance; the same seed gives the same instance, and growing
    /// any dimension keeps the draws of existing entities.
    pub fn sample(scenario: &ScenarioConfig, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let s = scenario;
        let stream = SeedStream::new(seed);
        let task = |tag: &str, i: usize, data, complexity| {
            let mut rng = stream.substream(tag, &[i]);
            let d = uniform(&mut rng, data);
            let c = uniform(&mut rng, complexity);
            TaskSpec::new(d, c)
        };
        let gue_tasks = (0..s.k)
            .map(|k| task("task.gue", k, s.gue_data, s.gue_complexity))
            .collect::<Result<Vec<_>>>()?;
        let sue_tasks = (0..s.l)
            .map(|l| task("task.sue", l, s.sue_data, s.sue_complexity))
            .collect::<Result<Vec<_>>>()?;
        let geometry = sample_geometry(&stream, s, s.geometry_mode)?;

        let mut h = Vec::with_capacity(s.m);
        for m in 0..s.m {
            let row = (0..s.k)
                .map(|k| {
                    let mut rng = stream.substream("chan.bs", &[k, m]);
                    gen_terrestrial(&mut rng, geometry.dist_gue_bs[k][m], s.nt_g).map(|c| c.h)
                })
                .collect::<Result<Vec<_>>>()?;
            h.push(row);
        }

        let tx_gain_db = s.tx_gain_db();
        let mut g = Vec::with_capacity(s.n);
        for n in 0..s.n {
            let mut row = Vec::with_capacity(s.k);
            for k in 0..s.k {
                let large = large_scale_c(
                    s.carrier_freq,
                    geometry.dist_gue_sat[k][n] * 1e3,
                    tx_gain_db,
                    s.boltzmann,
                    s.b2,
                    s.noise_temp,
                    s.light_speed,
                )?;
                let mut rng = stream.substream("chan.sat", &[k, n]);
                let doppler_phase: f64 = rng.random();
                let rain = rain_attenuation(&mut rng, s.rain_mu_db, s.rain_sigma2_db, s.nt_s);
                let parts = SatChannelParts {
                    large_scale: large,
                    rain,
                    beam_gain: beam_gain(&geometry.boresight[k][n], s.eps_3db, s.b_max),
                    doppler_phase,
                    tx_gain_db,
                };
                row.push(doppler_compensate(assemble_sat_channel(parts)?).g);
            }
            g.push(row);
        }

        let fso: Vec<Vec<FsoLink<f64>>> = geometry
            .dist_sue_sat
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&d| FsoLink {
                        wavelength: s.wavelength,
                        distance_m: d * 1e3,
                        aperture_t: s.aperture_t,
                        aperture_r: s.aperture_r,
                        pointing_error_t: s.pointing_error_t,
                        pointing_error_r: s.pointing_error_r,
                        eta_t: s.eta_t,
                        eta_r: s.eta_r,
                    })
                    .collect()
            })
            .collect();
        let snr_sue = fso
            .iter()
            .map(|row| row.iter().map(|link| link.snr_per_watt(s.noise3)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let prop = |d: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            d.iter().map(|row| row.iter().map(|&x| x * 1e3 / s.light_speed).collect()).collect()
        };
        let order_bs = h.iter().map(|row| sic_order(row)).collect();
        let order_sat = g.iter().map(|row| sic_order(row)).collect();
        Ok(Self {
            gue_tasks,
            sue_tasks,
            prop_gue_sat: prop(&geometry.dist_gue_sat),
            prop_sue_sat: prop(&geometry.dist_sue_sat),
            geometry,
            h,
            g,
            fso,
            snr_sue,
            order_bs,
            order_sat,
        })
    }

    /// Recomputes the SIC orders from the current channels.
    pub fn refresh_orders(&mut self) {
        self.order_bs = self.h.iter().map(|row| sic_order(row)).collect();
        self.order_sat = self.g.iter().map(|row| sic_order(row)).collect();
    }
}
