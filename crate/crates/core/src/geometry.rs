//! Constellation layout and transmitter-receiver geometry.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{GeometryMode, ScenarioConfig};
use crate::rng::SeedStream;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

pub type Position = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub planes: usize,
    pub sats_per_plane: usize,
    pub phase_factor: usize,
}

impl Default for ConstellationConfig {
    /// 1584 satellites in 72 planes of 22, phase factor 1, 550 km, 53 deg.
    fn default() -> Self {
        Self { altitude_km: 550.0, inclination_deg: 53.0, planes: 72, sats_per_plane: 22, phase_factor: 1 }
    }
}

impl ConstellationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, reason: &str| {
            Err(Error::ValidationError { field: field.into(), reason: reason.into() })
        };
        if !(self.altitude_km > 0.0) {
            return fail("walker_altitude", "must be positive");
        }
        if self.planes == 0 {
            return fail("walker_planes", "must be >= 1");
        }
        if self.sats_per_plane == 0 {
            return fail("walker_sats_per_plane", "must be >= 1");
        }
        if self.phase_factor >= self.planes {
            return fail("walker_phase_factor", "must be < planes");
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.planes * self.sats_per_plane
    }
}

/// Earth-centered positions of a Walker Delta constellation at epoch.
///
/// Plane `j` has RAAN `2*pi*j/P`; satellite `i` in it has argument of
/// latitude `2*pi*i/S + 2*pi*F*j/(P*S)`.
pub fn build_walker(cfg: &ConstellationConfig) -> Vec<Position> {
    let radius = EARTH_RADIUS_KM + cfg.altitude_km;
    let inc = cfg.inclination_deg.to_radians();
    let (p, s) = (cfg.planes as f64, cfg.sats_per_plane as f64);
    let total = p * s;
    let tau = std::f64::consts::TAU;
    let mut out = Vec::with_capacity(cfg.total());
    for j in 0..cfg.planes {
        let raan = tau * j as f64 / p;
        let (sin_o, cos_o) = raan.sin_cos();
        for i in 0..cfg.sats_per_plane {
            let u = tau * i as f64 / s + tau * cfg.phase_factor as f64 * j as f64 / total;
            let (sin_u, cos_u) = u.sin_cos();
            out.push([
                radius * (cos_o * cos_u - sin_o * sin_u * inc.cos()),
                radius * (sin_o * cos_u + cos_o * sin_u * inc.cos()),
                radius * sin_u * inc.sin(),
            ]);
        }
    }
    out
}

pub fn slant_range(a: &Position, b: &Position) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Point on the Earth's surface at geodetic-ish latitude/longitude (rad).
pub fn ground_point(lat: f64, lon: f64) -> Position {
    let r = EARTH_RADIUS_KM;
    [r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin()]
}

/// One realization of all distances and boresight angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySample {
    /// K x M, km
    pub dist_gue_bs: Vec<Vec<f64>>,
    /// K x N, km
    pub dist_gue_sat: Vec<Vec<f64>>,
    /// L x N, km
    pub dist_sue_sat: Vec<Vec<f64>>,
    /// `[k][n][i]`: angle between antenna `i` of satellite `n` and GUE `k`, rad
    pub boresight: Vec<Vec<Vec<f64>>>,
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Per-antenna boresight angles for one (GUE, satellite) pair: a nadir
/// offset plus a fixed spread of `+-antenna_jitter` across the elements.
fn boresight_angles(rng: &mut impl Rng, scenario: &ScenarioConfig) -> Vec<f64> {
    let base = uniform(rng, (0.0, scenario.boresight_max_frac * scenario.eps_3db));
    let nt = scenario.nt_s;
    (0..nt)
        .map(|i| {
            let frac = if nt > 1 { 2.0 * i as f64 / (nt - 1) as f64 - 1.0 } else { 0.0 };
            (base + frac * scenario.antenna_jitter).abs()
        })
        .collect()
}

pub fn sample_geometry(stream: &SeedStream, scenario: &ScenarioConfig, mode: GeometryMode) -> Result<GeometrySample> {
    let (k, l, m, n) = (scenario.k, scenario.l, scenario.m, scenario.n);
    let dist_gue_bs = (0..k)
        .map(|ki| (0..m).map(|mi| uniform(&mut stream.substream("geo.gue_bs", &[ki, mi]), scenario.dist_gue_bs)).collect())
        .collect();
    let dist_sue_sat = (0..l)
        .map(|li| {
            (0..n).map(|ni| uniform(&mut stream.substream("geo.sue_sat", &[li, ni]), scenario.dist_sue_sat)).collect()
        })
        .collect();
    let boresight = (0..k)
        .map(|ki| (0..n).map(|ni| boresight_angles(&mut stream.substream("geo.boresight", &[ki, ni]), scenario)).collect())
        .collect();
    let dist_gue_sat = match mode {
        GeometryMode::Direct => (0..k)
            .map(|ki| {
                (0..n)
                    .map(|ni| uniform(&mut stream.substream("geo.gue_sat", &[ki, ni]), scenario.dist_gue_sat))
                    .collect()
            })
            .collect(),
        GeometryMode::Walker => walker_gue_distances(stream, scenario)?,
    };
    Ok(GeometrySample { dist_gue_bs, dist_gue_sat, dist_sue_sat, boresight })
}

/// GUEs scattered around a reference site; the `N` satellites kept are the
/// ones nearest the site among those inside the slant-range window of every
/// GUE.
fn walker_gue_distances(stream: &SeedStream, scenario: &ScenarioConfig) -> Result<Vec<Vec<f64>>> {
    let sats = build_walker(&scenario.constellation);
    let mut site_rng = stream.substream("geo.walker.site", &[]);
    let lat0 = site_rng.random_range(-0.6..0.6_f64);
    let lon0 = site_rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let site = ground_point(lat0, lon0);
    let users: Vec<Position> = (0..scenario.k)
        .map(|ki| {
            let mut rng = stream.substream("geo.walker.gue", &[ki]);
            let r = scenario.gue_cluster_radius * rng.random::<f64>().sqrt() / EARTH_RADIUS_KM;
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            ground_point(lat0 + r * theta.sin(), lon0 + r * theta.cos() / lat0.cos())
        })
        .collect();
    let (lo, hi) = scenario.dist_gue_sat;
    let mut visible: Vec<(f64, usize)> = sats
        .iter()
        .enumerate()
        .filter(|(_, s)| users.iter().all(|u| (lo..=hi).contains(&slant_range(u, s))))
        .map(|(i, s)| (slant_range(&site, s), i))
        .collect();
    if visible.len() < scenario.n {
        return Err(Error::EmptyVisibility { found: visible.len(), needed: scenario.n });
    }
    visible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = visible.iter().take(scenario.n).map(|&(_, i)| i).collect();
    Ok(users.iter().map(|u| chosen.iter().map(|&i| slant_range(u, &sats[i])).collect()).collect())
}
