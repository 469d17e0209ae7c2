//! Scenario configuration: the global constants of one simulated network.
//!
//! Files are flat JSON objects. A numeric value is read in the field's
//! storage unit (SI, except distance ranges in km, angles in rad and data
//! sizes in bits); a string value carries its own unit, e.g. `"30 dBm"`,
//! `"20 MHz"`, `"0.4 deg"`, `"200 KB"`. Omitted keys keep their defaults.
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::ConstellationConfig;
use crate::num::{db_to_linear, dbm_to_watts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    Direct,
    Walker,
}

/// How the satellite-terrestrial noise term enters the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatNoiseMode {
    /// Channel already normalized by `kappa*B2*T`; the configured noise
    /// variance is added on top as written.
    Literal,
    /// Unit noise, consistent with the normalized channel.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub nt_g: usize,
    pub nt_s: usize,
    /// Hz
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// W
    pub noise1: f64,
    pub noise2: f64,
    pub noise3: f64,
    /// W
    pub p_max: f64,
    pub q_max: f64,
    /// bits
    pub gue_data: (f64, f64),
    /// cycles/bit
    pub gue_complexity: (f64, f64),
    pub sue_data: (f64, f64),
    pub sue_complexity: (f64, f64),
    /// s
    pub z_g: f64,
    pub z_s: f64,
    /// cycles/s
    pub f_gro: f64,
    pub f_sat: f64,
    pub rho_g: f64,
    pub rho_s: f64,
    pub tau_gro: f64,
    pub tau_sat: f64,
    /// Hz
    pub carrier_freq: f64,
    pub boltzmann: f64,
    /// K
    pub noise_temp: f64,
    /// dB/K
    pub g_over_t_db: f64,
    /// dB
    pub rain_mu_db: f64,
    /// dB^2
    pub rain_sigma2_db: f64,
    /// rad
    pub eps_3db: f64,
    /// linear
    pub b_max: f64,
    /// m
    pub wavelength: f64,
    pub aperture_t: f64,
    pub aperture_r: f64,
    /// rad
    pub pointing_error_t: f64,
    pub pointing_error_r: f64,
    pub eta_t: f64,
    pub eta_r: f64,
    /// m/s
    pub light_speed: f64,
    /// km
    pub dist_gue_bs: (f64, f64),
    pub dist_gue_sat: (f64, f64),
    pub dist_sue_sat: (f64, f64),
    /// Nadir offsets are drawn in `[0, boresight_max_frac * eps_3db]`.
    pub boresight_max_frac: f64,
    /// rad, spread of the fixed per-antenna offset.
    pub antenna_jitter: f64,
    pub geometry_mode: GeometryMode,
    pub sat_noise_mode: SatNoiseMode,
    /// Bits per "KB" when parsing data sizes.
    pub kb_bits: f64,
    pub constellation: ConstellationConfig,
    /// km, radius of the GUE cluster in walker mode.
    pub gue_cluster_radius: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let kb = 1024.0;
        Self {
            k: 10,
            l: 10,
            m: 2,
            n: 3,
            nt_g: 16,
            nt_s: 16,
            b1: 20e6,
            b2: 20e6,
            b3: 100e6,
            noise1: dbm_to_watts(-110.0),
            noise2: dbm_to_watts(-110.0),
            noise3: dbm_to_watts(-110.0),
            p_max: dbm_to_watts(30.0),
            q_max: dbm_to_watts(30.0),
            gue_data: (200.0 * kb, 400.0 * kb),
            gue_complexity: (100.0, 150.0),
            sue_data: (200.0 * kb, 400.0 * kb),
            sue_complexity: (100.0, 150.0),
            z_g: 0.1,
            z_s: 0.1,
            f_gro: 30e9,
            f_sat: 10e9,
            rho_g: 1.0,
            rho_s: 1.0,
            tau_gro: 5e-27,
            tau_sat: 5e-27,
            carrier_freq: 6e9,
            boltzmann: 1.38e-23,
            noise_temp: 300.0,
            g_over_t_db: 34.0,
            rain_mu_db: -2.6,
            rain_sigma2_db: 1.63,
            eps_3db: 0.4_f64.to_radians(),
            b_max: db_to_linear(14.0),
            wavelength: 1550e-9,
            aperture_t: 0.2,
            aperture_r: 0.2,
            pointing_error_t: 0.8e-6,
            pointing_error_r: 0.8e-6,
            eta_t: 0.9,
            eta_r: 0.9,
            light_speed: 3e8,
            dist_gue_bs: (0.05, 1.0),
            dist_gue_sat: (550.0, 2700.0),
            dist_sue_sat: (500.0, 1500.0),
            boresight_max_frac: 0.8,
            antenna_jitter: 0.02_f64.to_radians(),
            geometry_mode: GeometryMode::Direct,
            sat_noise_mode: SatNoiseMode::Unit,
            kb_bits: kb,
            constellation: ConstellationConfig::default(),
            gue_cluster_radius: 50.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Power,
    Frequency,
    Time,
    Length,
    Distance,
    Angle,
    Data,
    Gain,
    Plain,
}

/// Parses `value` as a quantity of dimension `dim` and returns it in the
/// storage unit of that dimension.
fn quantity(field: &str, value: &Value, dim: Dim, kb_bits: f64) -> Result<f64> {
    let bad = |reason: String| Error::ValidationError { field: field.to_string(), reason };
    let x = match value {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad("not a finite number".into()))?,
        Value::String(s) => {
            let s = s.trim();
            let split = s
                .find(|c: char| c.is_ascii_alphabetic() || c == 'µ')
                .ok_or_else(|| bad(format!("missing unit in {s:?}")))?;
            let (num, unit) = s.split_at(split);
            let num: f64 = num.trim().parse().map_err(|_| bad(format!("bad number in {s:?}")))?;
            let unit = unit.trim();
            let scaled = match (dim, unit) {
                (Dim::Power, "W") => Some(num),
                (Dim::Power, "mW") => Some(num * 1e-3),
                (Dim::Power, "dBm") => Some(dbm_to_watts(num)),
                (Dim::Power, "dBW") => Some(db_to_linear(num)),
                (Dim::Frequency, "Hz") => Some(num),
                (Dim::Frequency, "kHz") => Some(num * 1e3),
                (Dim::Frequency, "MHz") => Some(num * 1e6),
                (Dim::Frequency, "GHz") => Some(num * 1e9),
                (Dim::Time, "s") => Some(num),
                (Dim::Time, "ms") => Some(num * 1e-3),
                (Dim::Time, "us") | (Dim::Time, "µs") => Some(num * 1e-6),
                (Dim::Length, u) | (Dim::Distance, u) => {
                    let meters = match u {
                        "m" => Some(num),
                        "km" => Some(num * 1e3),
                        "cm" => Some(num * 1e-2),
                        "mm" => Some(num * 1e-3),
                        "um" | "µm" => Some(num * 1e-6),
                        "nm" => Some(num * 1e-9),
                        _ => None,
                    };
                    meters.map(|v| if dim == Dim::Distance { v / 1e3 } else { v })
                }
                (Dim::Angle, "rad") => Some(num),
                (Dim::Angle, "mrad") => Some(num * 1e-3),
                (Dim::Angle, "urad") | (Dim::Angle, "µrad") => Some(num * 1e-6),
                (Dim::Angle, "deg") => Some(num.to_radians()),
                (Dim::Data, "bits") | (Dim::Data, "bit") => Some(num),
                (Dim::Data, "KB") => Some(num * kb_bits),
                (Dim::Data, "kbit") => Some(num * 1e3),
                (Dim::Data, "Mbit") => Some(num * 1e6),
                (Dim::Gain, "dB") | (Dim::Gain, "dBi") => Some(db_to_linear(num)),
                (Dim::Gain, "linear") => Some(num),
                _ => None,
            };
            scaled.ok_or_else(|| bad(format!("unit {unit:?} not valid here")))?
        }
        _ => return Err(bad("expected a number or a quantity string".into())),
    };
    if !x.is_finite() {
        return Err(bad("not finite".into()));
    }
    Ok(x)
}

fn count(field: &str, value: &Value) -> Result<usize> {
    let bad = |reason: &str| Error::ValidationError { field: field.to_string(), reason: reason.to_string() };
    let v = value.as_i64().ok_or_else(|| bad("expected an integer"))?;
    if v < 0 {
        return Err(bad("must be non-negative"));
    }
    Ok(v as usize)
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        let map = match value {
            Value::Object(map) => map,
            _ => return Err(Error::ParseError("top level must be a JSON object".into())),
        };
        let mut cfg = Self::default();
        cfg.apply(&map)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides from a parsed JSON object.
    pub fn apply(&mut self, map: &Map<String, Value>) -> Result<()> {
        // kb_bits first so that "KB" strings use the requested convention
        if let Some(v) = map.get("kb_bits") {
            self.kb_bits = quantity("kb_bits", v, Dim::Plain, 1.0)?;
        }
        let kb = self.kb_bits;
        for (key, v) in map {
            let q = |dim| quantity(key, v, dim, kb);
            match key.as_str() {
                "kb_bits" => {}
                "k" => self.k = count(key, v)?,
                "l" => self.l = count(key, v)?,
                "m" => self.m = count(key, v)?,
                "n" => self.n = count(key, v)?,
                "nt_g" => self.nt_g = count(key, v)?,
                "nt_s" => self.nt_s = count(key, v)?,
                "b1" => self.b1 = q(Dim::Frequency)?,
                "b2" => self.b2 = q(Dim::Frequency)?,
                "b3" => self.b3 = q(Dim::Frequency)?,
                "noise1" => self.noise1 = q(Dim::Power)?,
                "noise2" => self.noise2 = q(Dim::Power)?,
                "noise3" => self.noise3 = q(Dim::Power)?,
                "p_max" => self.p_max = q(Dim::Power)?,
                "q_max" => self.q_max = q(Dim::Power)?,
                "gue_data_min" => self.gue_data.0 = q(Dim::Data)?,
                "gue_data_max" => self.gue_data.1 = q(Dim::Data)?,
                "gue_complexity_min" => self.gue_complexity.0 = q(Dim::Plain)?,
                "gue_complexity_max" => self.gue_complexity.1 = q(Dim::Plain)?,
                "sue_data_min" => self.sue_data.0 = q(Dim::Data)?,
                "sue_data_max" => self.sue_data.1 = q(Dim::Data)?,
                "sue_complexity_min" => self.sue_complexity.0 = q(Dim::Plain)?,
                "sue_complexity_max" => self.sue_complexity.1 = q(Dim::Plain)?,
                "z_g" => self.z_g = q(Dim::Time)?,
                "z_s" => self.z_s = q(Dim::Time)?,
                "f_gro" => self.f_gro = q(Dim::Frequency)?,
                "f_sat" => self.f_sat = q(Dim::Frequency)?,
                "rho_g" => self.rho_g = q(Dim::Plain)?,
                "rho_s" => self.rho_s = q(Dim::Plain)?,
                "tau_gro" => self.tau_gro = q(Dim::Plain)?,
                "tau_sat" => self.tau_sat = q(Dim::Plain)?,
                "carrier_freq" => self.carrier_freq = q(Dim::Frequency)?,
                "boltzmann" => self.boltzmann = q(Dim::Plain)?,
                "noise_temp" => self.noise_temp = q(Dim::Plain)?,
                "g_over_t_db" => self.g_over_t_db = q(Dim::Plain)?,
                "rain_mu_db" => self.rain_mu_db = q(Dim::Plain)?,
                "rain_sigma2_db" => self.rain_sigma2_db = q(Dim::Plain)?,
                "eps_3db" => self.eps_3db = q(Dim::Angle)?,
                "b_max" => self.b_max = q(Dim::Gain)?,
                "wavelength" => self.wavelength = q(Dim::Length)?,
                "aperture_t" => self.aperture_t = q(Dim::Length)?,
                "aperture_r" => self.aperture_r = q(Dim::Length)?,
                "pointing_error_t" => self.pointing_error_t = q(Dim::Angle)?,
                "pointing_error_r" => self.pointing_error_r = q(Dim::Angle)?,
                "eta_t" => self.eta_t = q(Dim::Plain)?,
                "eta_r" => self.eta_r = q(Dim::Plain)?,
                "light_speed" => self.light_speed = q(Dim::Plain)?,
                "dist_gue_bs_min" => self.dist_gue_bs.0 = q(Dim::Distance)?,
                "dist_gue_bs_max" => self.dist_gue_bs.1 = q(Dim::Distance)?,
                "dist_gue_sat_min" => self.dist_gue_sat.0 = q(Dim::Distance)?,
                "dist_gue_sat_max" => self.dist_gue_sat.1 = q(Dim::Distance)?,
                "dist_sue_sat_min" => self.dist_sue_sat.0 = q(Dim::Distance)?,
                "dist_sue_sat_max" => self.dist_sue_sat.1 = q(Dim::Distance)?,
                "boresight_max_frac" => self.boresight_max_frac = q(Dim::Plain)?,
                "antenna_jitter" => self.antenna_jitter = q(Dim::Angle)?,
                "gue_cluster_radius" => self.gue_cluster_radius = q(Dim::Distance)?,
                "geometry_mode" => {
                    self.geometry_mode = serde_json::from_value(v.clone()).map_err(|e| {
                        Error::ValidationError { field: key.clone(), reason: e.to_string() }
                    })?
                }
                "sat_noise_mode" => {
                    self.sat_noise_mode = serde_json::from_value(v.clone()).map_err(|e| {
                        Error::ValidationError { field: key.clone(), reason: e.to_string() }
                    })?
                }
                "seed" => {
                    self.seed = v.as_u64().ok_or_else(|| Error::ValidationError {
                        field: key.clone(),
                        reason: "expected a non-negative integer".into(),
                    })?
                }
                "walker_altitude" => self.constellation.altitude_km = q(Dim::Distance)?,
                "walker_inclination" => self.constellation.inclination_deg = q(Dim::Angle)?.to_degrees(),
                "walker_planes" => self.constellation.planes = count(key, v)?,
                "walker_sats_per_plane" => self.constellation.sats_per_plane = count(key, v)?,
                "walker_phase_factor" => self.constellation.phase_factor = count(key, v)?,
                _ => {
                    return Err(Error::ValidationError { field: key.clone(), reason: "unknown key".into() });
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, reason: &str| {
            Err(Error::ValidationError { field: field.to_string(), reason: reason.to_string() })
        };
        if self.k + self.l == 0 {
            return fail("k", "need at least one GUE or SUE");
        }
        if self.k > 0 && self.m + self.n == 0 {
            return fail("m", "GUEs need at least one BS or satellite");
        }
        if self.l > 0 && self.n == 0 {
            return fail("n", "SUEs need at least one satellite");
        }
        if self.nt_g == 0 {
            return fail("nt_g", "must be >= 1");
        }
        if self.nt_s == 0 {
            return fail("nt_s", "must be >= 1");
        }
        let positive: [(&str, f64); 32] = [
            ("b1", self.b1),
            ("b2", self.b2),
            ("b3", self.b3),
            ("noise1", self.noise1),
            ("noise2", self.noise2),
            ("noise3", self.noise3),
            ("p_max", self.p_max),
            ("q_max", self.q_max),
            ("gue_data_min", self.gue_data.0),
            ("gue_complexity_min", self.gue_complexity.0),
            ("sue_data_min", self.sue_data.0),
            ("sue_complexity_min", self.sue_complexity.0),
            ("z_g", self.z_g),
            ("z_s", self.z_s),
            ("f_gro", self.f_gro),
            ("f_sat", self.f_sat),
            ("tau_gro", self.tau_gro),
            ("tau_sat", self.tau_sat),
            ("carrier_freq", self.carrier_freq),
            ("boltzmann", self.boltzmann),
            ("noise_temp", self.noise_temp),
            ("eps_3db", self.eps_3db),
            ("b_max", self.b_max),
            ("wavelength", self.wavelength),
            ("aperture_t", self.aperture_t),
            ("aperture_r", self.aperture_r),
            ("eta_t", self.eta_t),
            ("eta_r", self.eta_r),
            ("light_speed", self.light_speed),
            ("dist_gue_bs_min", self.dist_gue_bs.0),
            ("dist_gue_sat_min", self.dist_gue_sat.0),
            ("dist_sue_sat_min", self.dist_sue_sat.0),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return fail(name, "must be positive and finite");
            }
        }
        let nonneg = [
            ("rho_g", self.rho_g),
            ("rho_s", self.rho_s),
            ("rain_sigma2_db", self.rain_sigma2_db),
            ("pointing_error_t", self.pointing_error_t),
            ("pointing_error_r", self.pointing_error_r),
            ("antenna_jitter", self.antenna_jitter),
            ("boresight_max_frac", self.boresight_max_frac),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(name, "must be non-negative and finite");
            }
        }
        if self.eta_t > 1.0 {
            return fail("eta_t", "must be <= 1");
        }
        if self.eta_r > 1.0 {
            return fail("eta_r", "must be <= 1");
        }
        let ranges = [
            ("gue_data_max", self.gue_data),
            ("gue_complexity_max", self.gue_complexity),
            ("sue_data_max", self.sue_data),
            ("sue_complexity_max", self.sue_complexity),
            ("dist_gue_bs_max", self.dist_gue_bs),
            ("dist_gue_sat_max", self.dist_gue_sat),
            ("dist_sue_sat_max", self.dist_sue_sat),
        ];
        for (name, (lo, hi)) in ranges {
            if !(hi >= lo) {
                return fail(name, "range maximum below minimum");
            }
        }
        if self.boresight_max_frac * self.eps_3db + self.antenna_jitter >= std::f64::consts::FRAC_PI_2 {
            return fail("boresight_max_frac", "boresight angles must stay below 90 deg");
        }
        self.constellation.validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Noise variance of the satellite-terrestrial link as used in the rate.
    pub fn sat_noise(&self) -> f64 {
        match self.sat_noise_mode {
            SatNoiseMode::Literal => self.noise2,
            SatNoiseMode::Unit => 1.0,
        }
    }

    /// Transmit antenna gain in dB, from G/T and the noise temperature.
    pub fn tx_gain_db(&self) -> f64 {
        self.g_over_t_db + 10.0 * self.noise_temp.log10()
    }
}

/// Reads a scenario file; an empty file (or `{}`) yields the defaults.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(ScenarioConfig::default());
    }
    ScenarioConfig::from_json_str(&text)
}
