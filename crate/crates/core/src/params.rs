//! System configuration, unit conversion, node geometry and path loss.
//!
//! Everything downstream consumes the types defined here. Powers are held in
//! watts; the config file accepts either `<name>_w` or `<name>_dbm` keys.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::asymptotic::AsymptoticConstants;
use crate::error::{invalid, Error, Result};

/// dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Non-positive ratios are rejected.
pub fn linear_to_db(ratio: f64) -> Result<f64> {
    if ratio > 0.0 {
        Ok(10.0 * ratio.log10())
    } else {
        Err(Error::NonPositivePower(ratio))
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    db_to_linear(p_dbm - 30.0)
}

pub fn watts_to_dbm(p_w: f64) -> Result<f64> {
    linear_to_db(p_w).map(|db| db + 30.0)
}

/// Scalar parameters of the link and of both power-consumption models.
///
/// The transmitted symbol is taken to have unit power, so `total_power_w`
/// is the whole budget shared between the base station (`pa_factor`) and the
/// active surface (`1 - pa_factor`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub total_power_w: f64,
    pub pa_factor: f64,
    pub num_elements: u32,
    pub noise_ris_w: f64,
    pub noise_user_w: f64,
    /// Inverse of the base-station amplifier efficiency.
    pub amp_inefficiency: f64,
    pub static_bs_w: f64,
    pub static_per_element_active_w: f64,
    pub static_ris_other_active_w: f64,
    pub static_per_element_passive_w: f64,
    pub static_ris_other_passive_w: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            total_power_w: dbm_to_watts(30.0),
            pa_factor: 0.5,
            num_elements: 256,
            noise_ris_w: dbm_to_watts(-70.0),
            noise_user_w: dbm_to_watts(-70.0),
            amp_inefficiency: 1.0,
            static_bs_w: dbm_to_watts(10.0),
            // Calibrated so that the active/passive crossover sits near 2^10.
            static_per_element_active_w: dbm_to_watts(5.0),
            static_ris_other_active_w: dbm_to_watts(10.0),
            static_per_element_passive_w: dbm_to_watts(-10.0),
            static_ris_other_passive_w: dbm_to_watts(10.0),
        }
    }
}

impl SystemConfig {
    pub fn n(&self) -> f64 {
        f64::from(self.num_elements)
    }

    /// Circuit power of the active system, `P0 + N·Pcn + P0_ris`.
    pub fn circuit_power_active(&self) -> f64 {
        self.static_bs_w
            + self.n() * self.static_per_element_active_w
            + self.static_ris_other_active_w
    }

    pub fn circuit_power_passive(&self) -> f64 {
        self.static_bs_w
            + self.n() * self.static_per_element_passive_w
            + self.static_ris_other_passive_w
    }

    pub fn with_elements(&self, n: u32) -> Self {
        Self {
            num_elements: n,
            ..self.clone()
        }
    }
}

/// Node positions (metres) and the log-distance path-loss model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub bs_pos: [f64; 3],
    pub ris_pos: [f64; 3],
    pub user_pos: [f64; 3],
    pub ref_loss_db: f64,
    pub ref_distance_m: f64,
    pub exponent_bs_ris: f64,
    pub exponent_ris_user: f64,
    pub exponent_bs_user: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            bs_pos: [0.0, 0.0, 0.0],
            ris_pos: [150.0, 0.0, 0.0],
            user_pos: [100.0, 33.0, 0.0],
            ref_loss_db: -30.0,
            ref_distance_m: 1.0,
            exponent_bs_ris: 2.3,
            exponent_ris_user: 2.3,
            exponent_bs_user: 3.8,
        }
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl LinkGeometry {
    pub fn distance_bs_ris(&self) -> f64 {
        distance(&self.bs_pos, &self.ris_pos)
    }

    pub fn distance_ris_user(&self) -> f64 {
        distance(&self.ris_pos, &self.user_pos)
    }

    pub fn distance_bs_user(&self) -> f64 {
        distance(&self.bs_pos, &self.user_pos)
    }

    /// Path loss in dB at distance `d` for exponent `exponent`.
    pub fn loss_db(&self, d: f64, exponent: f64) -> f64 {
        self.ref_loss_db - 10.0 * exponent * (d / self.ref_distance_m).log10()
    }
}

/// Linear large-scale coefficients: BS→RIS (`l_g`), RIS→user (`l_f`) and the
/// direct BS→user link (`l_h`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub l_g: f64,
    pub l_f: f64,
    pub l_h: f64,
}

pub fn path_loss(geometry: &LinkGeometry) -> Result<PathLoss> {
    if !(geometry.ref_distance_m > 0.0) {
        return Err(invalid("ref_distance_m", "must be positive"));
    }
    for (name, a) in [
        ("exponent_bs_ris", geometry.exponent_bs_ris),
        ("exponent_ris_user", geometry.exponent_ris_user),
        ("exponent_bs_user", geometry.exponent_bs_user),
    ] {
        if !(a > 0.0) {
            return Err(invalid(name, "must be positive"));
        }
    }
    let links = [
        (
            "bs",
            "ris",
            geometry.distance_bs_ris(),
            geometry.exponent_bs_ris,
        ),
        (
            "ris",
            "user",
            geometry.distance_ris_user(),
            geometry.exponent_ris_user,
        ),
        (
            "bs",
            "user",
            geometry.distance_bs_user(),
            geometry.exponent_bs_user,
        ),
    ];
    let mut out = [0.0; 3];
    for (slot, (a, b, d, exponent)) in out.iter_mut().zip(links) {
        if !(d > 0.0) {
            return Err(Error::CoincidentNodes(a, b));
        }
        *slot = db_to_linear(geometry.loss_db(d, exponent));
    }
    Ok(PathLoss {
        l_g: out[0],
        l_f: out[1],
        l_h: out[2],
    })
}

/// Squared Rayleigh scale parameters of the three small-scale fading links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighParams {
    pub alpha_f_sq: f64,
    pub alpha_g_sq: f64,
    pub alpha_h_sq: f64,
}

impl Default for RayleighParams {
    fn default() -> Self {
        Self {
            alpha_f_sq: 0.5,
            alpha_g_sq: 0.5,
            alpha_h_sq: 0.5,
        }
    }
}

impl RayleighParams {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_f_sq", self.alpha_f_sq),
            ("alpha_g_sq", self.alpha_g_sq),
            ("alpha_h_sq", self.alpha_h_sq),
        ] {
            if !(v > 0.0) {
                return Err(invalid(name, "must be strictly positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveBandwidth(f64),
    PaFactorOutOfRange(f64),
    NegativePower {
        field: &'static str,
        value: f64,
    },
    AmpInefficiencyBelowOne(f64),
    NoElements,
    /// The asymptotic active consumption is not positive.
    NonPositivePowerDenominator(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveBandwidth(b) => {
                write!(f, "bandwidth_hz must be positive (got {b})")
            }
            Violation::PaFactorOutOfRange(b) => {
                write!(f, "pa_factor out of range [0, 1] (got {b})")
            }
            Violation::NegativePower { field, value } => {
                write!(f, "{field} must be non-negative (got {value})")
            }
            Violation::AmpInefficiencyBelowOne(m) => {
                write!(f, "amp_inefficiency must be >= 1 (got {m})")
            }
            Violation::NoElements => write!(f, "num_elements must be >= 1"),
            Violation::NonPositivePowerDenominator(d) => {
                write!(f, "nonpositive power denominator ({d} W)")
            }
        }
    }
}

/// Lists every violated invariant of `config`; an empty list means valid.
pub fn validate(config: &SystemConfig, constants: &AsymptoticConstants) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(config.bandwidth_hz > 0.0) {
        out.push(Violation::NonPositiveBandwidth(config.bandwidth_hz));
    }
    if !(0.0..=1.0).contains(&config.pa_factor) {
        out.push(Violation::PaFactorOutOfRange(config.pa_factor));
    }
    for (field, value) in [
        ("total_power_w", config.total_power_w),
        ("noise_ris_w", config.noise_ris_w),
        ("noise_user_w", config.noise_user_w),
        ("static_bs_w", config.static_bs_w),
        (
            "static_per_element_active_w",
            config.static_per_element_active_w,
        ),
        (
            "static_ris_other_active_w",
            config.static_ris_other_active_w,
        ),
        (
            "static_per_element_passive_w",
            config.static_per_element_passive_w,
        ),
        (
            "static_ris_other_passive_w",
            config.static_ris_other_passive_w,
        ),
    ] {
        if !(value >= 0.0) {
            out.push(Violation::NegativePower { field, value });
        }
    }
    if !(config.amp_inefficiency >= 1.0) {
        out.push(Violation::AmpInefficiencyBelowOne(config.amp_inefficiency));
    }
    if config.num_elements == 0 {
        out.push(Violation::NoElements);
    }
    let denominator = crate::asymptotic::power_asymptotic_active(config, constants);
    if !(denominator > 0.0) {
        out.push(Violation::NonPositivePowerDenominator(denominator));
    }
    out
}

/// Everything needed to evaluate one operating point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: LinkGeometry,
    pub rayleigh: RayleighParams,
}

impl Scenario {
    pub fn path_loss(&self) -> Result<PathLoss> {
        path_loss(&self.geometry)
    }

    pub fn constants(&self) -> Result<AsymptoticConstants> {
        self.rayleigh.check()?;
        Ok(AsymptoticConstants::new(
            &self.path_loss()?,
            &self.rayleigh,
            &self.config,
        ))
    }

    /// Parses a flat `key = value` file. Unknown keys and duplicates are
    /// errors; keys not present keep their defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let canonical = key
                .strip_suffix("_dbm")
                .or_else(|| key.strip_suffix("_w"))
                .unwrap_or(key);
            if !seen.insert(canonical.to_string()) {
                return Err(Error::Config {
                    line,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            s.set(key, value)
                .map_err(|reason| Error::Config { line, reason })?;
        }
        Ok(s)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = || -> std::result::Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|e| format!("`{key}`: cannot parse `{value}` as a number ({e})"))
        };
        let vec3 = || -> std::result::Result<[f64; 3], String> {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("`{key}`: expected three comma-separated values"));
            }
            let mut out = [0.0; 3];
            for (slot, p) in out.iter_mut().zip(parts) {
                *slot = p
                    .parse()
                    .map_err(|e| format!("`{key}`: cannot parse `{p}` ({e})"))?;
            }
            Ok(out)
        };

        if let Some(slot) = self.power_slot(key) {
            let (field, is_dbm) = slot;
            let v = num()?;
            *field = if is_dbm { dbm_to_watts(v) } else { v };
            return Ok(());
        }

        let c = &mut self.config;
        let g = &mut self.geometry;
        let r = &mut self.rayleigh;
        match key {
            "bandwidth_hz" => c.bandwidth_hz = num()?,
            "pa_factor" => c.pa_factor = num()?,
            "num_elements" => {
                c.num_elements = value
                    .parse()
                    .map_err(|e| format!("`{key}`: cannot parse `{value}` ({e})"))?
            }
            "amp_inefficiency" => c.amp_inefficiency = num()?,
            "bs_pos" => g.bs_pos = vec3()?,
            "ris_pos" => g.ris_pos = vec3()?,
            "user_pos" => g.user_pos = vec3()?,
            "ref_loss_db" => g.ref_loss_db = num()?,
            "ref_distance_m" => g.ref_distance_m = num()?,
            "exponent_bs_ris" => g.exponent_bs_ris = num()?,
            "exponent_ris_user" => g.exponent_ris_user = num()?,
            "exponent_bs_user" => g.exponent_bs_user = num()?,
            "alpha_f_sq" => r.alpha_f_sq = num()?,
            "alpha_g_sq" => r.alpha_g_sq = num()?,
            "alpha_h_sq" => r.alpha_h_sq = num()?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn power_slot(&mut self, key: &str) -> Option<(&mut f64, bool)> {
        let (base, is_dbm) = if let Some(b) = key.strip_suffix("_dbm") {
            (b, true)
        } else {
            (key.strip_suffix("_w")?, false)
        };
        let c = &mut self.config;
        let field = match base {
            "total_power" => &mut c.total_power_w,
            "noise_ris" => &mut c.noise_ris_w,
            "noise_user" => &mut c.noise_user_w,
            "static_bs" => &mut c.static_bs_w,
            "static_per_element_active" => &mut c.static_per_element_active_w,
            "static_ris_other_active" => &mut c.static_ris_other_active_w,
            "static_per_element_passive" => &mut c.static_per_element_passive_w,
            "static_ris_other_passive" => &mut c.static_ris_other_passive_w,
            _ => return None,
        };
        Some((field, is_dbm))
    }

    /// Renders the scenario in the config-file format, powers in watts.
    pub fn to_kv_string(&self) -> String {
        let c = &self.config;
        let g = &self.geometry;
        let r = &self.rayleigh;
        let v3 = |p: &[f64; 3]| format!("{}, {}, {}", p[0], p[1], p[2]);
        let lines = [
            format!("bandwidth_hz = {}", c.bandwidth_hz),
            format!("total_power_w = {}", c.total_power_w),
            format!("pa_factor = {}", c.pa_factor),
            format!("num_elements = {}", c.num_elements),
            format!("noise_ris_w = {}", c.noise_ris_w),
            format!("noise_user_w = {}", c.noise_user_w),
            format!("amp_inefficiency = {}", c.amp_inefficiency),
            format!("static_bs_w = {}", c.static_bs_w),
            format!(
                "static_per_element_active_w = {}",
                c.static_per_element_active_w
            ),
            format!(
                "static_ris_other_active_w = {}",
                c.static_ris_other_active_w
            ),
            format!(
                "static_per_element_passive_w = {}",
                c.static_per_element_passive_w
            ),
            format!(
                "static_ris_other_passive_w = {}",
                c.static_ris_other_passive_w
            ),
            format!("bs_pos = {}", v3(&g.bs_pos)),
            format!("ris_pos = {}", v3(&g.ris_pos)),
            format!("user_pos = {}", v3(&g.user_pos)),
            format!("ref_loss_db = {}", g.ref_loss_db),
            format!("ref_distance_m = {}", g.ref_distance_m),
            format!("exponent_bs_ris = {}", g.exponent_bs_ris),
            format!("exponent_ris_user = {}", g.exponent_ris_user),
            format!("exponent_bs_user = {}", g.exponent_bs_user),
            format!("alpha_f_sq = {}", r.alpha_f_sq),
            format!("alpha_g_sq = {}", r.alpha_g_sq),
            format!("alpha_h_sq = {}", r.alpha_h_sq),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
