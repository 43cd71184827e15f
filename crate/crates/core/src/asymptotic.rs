//! Large-N closed forms of the active and passive energy efficiency.
//!
//! Channel sums are replaced by `N` times their Rayleigh moments. The result
//! depends on the geometry and fading only through eleven constants
//! ([`AsymptoticConstants`]). For each sweep variable there is a coefficient
//! family that rewrites the same expression as a one-variable function.
//! Every family must agree with [`ee_closed_form`] at the base config.
//!
//! The amplifier inefficiency `μ` enters the active consumption as
//! `(1 - β)P_t + μβP_t`; the extra `(μ - 1)βP_t` term is carried through every
//! family and vanishes for `μ = 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact_sim::{EEResult, Mode};
use crate::params::{PathLoss, RayleighParams, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub a8: f64,
    pub a9: f64,
    pub a10: f64,
    pub a11: f64,
}

impl AsymptoticConstants {
    pub fn new(pl: &PathLoss, r: &RayleighParams, config: &SystemConfig) -> Self {
        let (af2, ag2, ah2) = (r.alpha_f_sq, r.alpha_g_sq, r.alpha_h_sq);
        let scale_product = (af2 * ag2 * ah2).sqrt();
        let loss_product = (pl.l_f * pl.l_g * pl.l_h).sqrt();
        let cascade = PI * PI / 4.0 * pl.l_g * pl.l_f * af2 * ag2;
        let cross = PI * FRAC_PI_2.sqrt() * scale_product * loss_product;
        let direct = FRAC_PI_2 * pl.l_h * ah2;
        Self {
            a1: cascade,
            a2: PI * pl.l_g * pl.l_h * ah2 * ag2,
            a3: direct,
            a4: cross,
            a5: 2.0 * pl.l_g * ag2,
            a6: 2.0 * pl.l_f * af2,
            a7: config.static_bs_w + config.static_ris_other_active_w,
            a8: cascade,
            a9: cross,
            a10: direct,
            a11: config.static_bs_w + config.static_ris_other_passive_w,
        }
    }
}

pub fn constants(pl: &PathLoss, r: &RayleighParams, config: &SystemConfig) -> AsymptoticConstants {
    AsymptoticConstants::new(pl, r, config)
}

fn clamped_sqrt(x: f64, what: &str) -> f64 {
    if x < 0.0 {
        log::warn!("negative radicand {x:e} in {what}, clamped to zero");
        0.0
    } else {
        x.sqrt()
    }
}

fn excess_amp_power(c: &SystemConfig) -> f64 {
    (c.amp_inefficiency - 1.0) * c.pa_factor * c.total_power_w
}

/// Common asymptotic amplitude gain of the active elements.
pub fn lambda_asymptotic(config: &SystemConfig, k: &AsymptoticConstants) -> Result<f64> {
    if config.num_elements == 0 {
        return Err(invalid("num_elements", "must be >= 1"));
    }
    let beta = config.pa_factor;
    let pt = config.total_power_w;
    let n = config.n();
    let numerator = (1.0 - beta) * pt;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    let denominator = beta * pt * k.a5 * n + n * config.noise_ris_w;
    if denominator <= 0.0 {
        return Err(Error::ZeroDenominator("asymptotic gain"));
    }
    Ok((numerator / denominator).sqrt())
}

/// Asymptotic received SNR, composed from the common gain.
pub fn snr_asymptotic_active(config: &SystemConfig, k: &AsymptoticConstants) -> Result<f64> {
    let lambda = lambda_asymptotic(config, k)?;
    let n = config.n();
    let signal = k.a1 * n * n * lambda * lambda + k.a3 + k.a4 * n * lambda;
    let noise = k.a6 * n * lambda * lambda * config.noise_ris_w + config.noise_user_w;
    if noise <= 0.0 {
        return Err(Error::ZeroDenominator("asymptotic active SNR noise"));
    }
    Ok(config.pa_factor * config.total_power_w * signal / noise)
}

/// Asymptotic consumption of the active system.
pub fn power_asymptotic_active(config: &SystemConfig, k: &AsymptoticConstants) -> f64 {
    let beta = config.pa_factor;
    let pt = config.total_power_w;
    let n = config.n();
    (1.0 - beta) * pt - k.a5 * n * beta * pt - n * config.noise_ris_w
        + config.amp_inefficiency * beta * pt
        + n * config.static_per_element_active_w
        + k.a7
}

pub fn ee_asymptotic_active(config: &SystemConfig, k: &AsymptoticConstants) -> Result<EEResult> {
    let snr = snr_asymptotic_active(config, k)?;
    let power = power_asymptotic_active(config, k);
    if power <= 0.0 {
        return Err(Error::NonPositiveConsumption {
            context: "asymptotic active power",
            value: power,
        });
    }
    Ok(EEResult::new(Mode::Active, snr, power, config.bandwidth_hz))
}

/// Single-expression form of the active EE in `(β, N, P_t, σr², σu²)`.
pub fn ee_closed_form(config: &SystemConfig, k: &AsymptoticConstants) -> Result<f64> {
    let beta = config.pa_factor;
    let pt = config.total_power_w;
    let n = config.n();
    let sr = config.noise_ris_w;
    let su = config.noise_user_w;
    let radicand = k.a5 * n * beta * pt * pt * (1.0 - beta) - n * beta * pt * sr + n * pt * sr;
    let signal = beta
        * pt
        * (k.a1 * n * pt * (1.0 - beta)
            + k.a2 * beta * pt
            + k.a3 * sr
            + k.a4 * clamped_sqrt(radicand, "closed-form EE"));
    let noise = k.a6 * pt * (1.0 - beta) * sr + k.a5 * beta * pt * su + sr * su;
    let power = -k.a5 * n * beta * pt - n * sr
        + n * config.static_per_element_active_w
        + pt
        + k.a7
        + excess_amp_power(config);
    if noise <= 0.0 {
        return Err(Error::ZeroDenominator("closed-form EE noise"));
    }
    if power <= 0.0 {
        return Err(Error::NonPositiveConsumption {
            context: "closed-form EE",
            value: power,
        });
    }
    Ok(config.bandwidth_hz * (1.0 + signal / noise).log2() / power)
}

/// Asymptotic passive EE.
pub fn ee_asymptotic_passive(config: &SystemConfig, k: &AsymptoticConstants) -> Result<EEResult> {
    if config.noise_user_w <= 0.0 {
        return Err(Error::ZeroDenominator("passive SNR noise"));
    }
    let n = config.n();
    let pt = config.total_power_w;
    let snr = pt * (k.a8 * n * n + k.a9 * n + k.a10) / config.noise_user_w;
    let power = config.amp_inefficiency * pt + n * config.static_per_element_passive_w + k.a11;
    if power <= 0.0 {
        return Err(Error::NonPositiveConsumption {
            context: "asymptotic passive power",
            value: power,
        });
    }
    Ok(EEResult::new(
        Mode::Passive,
        snr,
        power,
        config.bandwidth_hz,
    ))
}

fn ratio_ee(bandwidth: f64, snr_num: f64, snr_den: f64, power: f64) -> Result<f64> {
    if snr_den <= 0.0 {
        return Err(Error::ZeroDenominator("SNR noise"));
    }
    if power <= 0.0 {
        return Err(Error::NonPositiveConsumption {
            context: "swept EE",
            value: power,
        });
    }
    Ok(bandwidth * (1.0 + snr_num / snr_den).log2() / power)
}

/// Active EE as a function of the PA factor β.
///
/// The square root holds `radicand_lead·β² + q5·β + q6`; its leading
/// coefficient is `P_t·q4` only when `μ = 1`, so it is kept separately from
/// the power slope `q4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaCoeffs {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q6: f64,
    pub q7: f64,
    pub q8: f64,
    pub q9: f64,
    pub radicand_lead: f64,
    pub bandwidth_hz: f64,
}

impl BetaCoeffs {
    pub fn new(c: &SystemConfig, k: &AsymptoticConstants) -> Self {
        let pt = c.total_power_w;
        let n = c.n();
        let sr = c.noise_ris_w;
        let su = c.noise_user_w;
        Self {
            q1: -k.a1 * n * pt * pt + k.a2 * pt * pt,
            q2: k.a1 * n * pt * pt + k.a3 * pt * sr,
            q3: k.a4 * pt,
            q4: -k.a5 * n * pt + (c.amp_inefficiency - 1.0) * pt,
            q5: k.a5 * n * pt * pt - n * pt * sr,
            q6: n * pt * sr,
            q7: k.a5 * pt * su - k.a6 * pt * sr,
            q8: k.a6 * pt * sr + sr * su,
            q9: -n * sr + n * c.static_per_element_active_w + pt + k.a7,
            radicand_lead: -k.a5 * n * pt * pt,
            bandwidth_hz: c.bandwidth_hz,
        }
    }

    pub fn radicand(&self, beta: f64) -> f64 {
        self.radicand_lead * beta * beta + self.q5 * beta + self.q6
    }

    pub fn ee(&self, beta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid("pa_factor", format!("{beta} outside [0, 1]")));
        }
        let root = clamped_sqrt(self.radicand(beta), "EE(beta)");
        let num = self.q1 * beta * beta + self.q2 * beta + self.q3 * beta * root;
        ratio_ee(
            self.bandwidth_hz,
            num,
            self.q7 * beta + self.q8,
            self.q4 * beta + self.q9,
        )
    }
}

/// Active EE as a function of the total power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub k8: f64,
    pub k9: f64,
    pub bandwidth_hz: f64,
}

impl PowerCoeffs {
    pub fn new(c: &SystemConfig, k: &AsymptoticConstants) -> Self {
        let b = c.pa_factor;
        let n = c.n();
        let sr = c.noise_ris_w;
        let su = c.noise_user_w;
        Self {
            k1: k.a1 * n * b * (1.0 - b) + k.a2 * b * b,
            k2: k.a3 * b * sr,
            k3: k.a4 * b,
            k4: k.a5 * n * b * (1.0 - b),
            k5: -n * b * sr + n * sr,
            k6: k.a6 * (1.0 - b) * sr + k.a5 * b * su,
            k7: sr * su,
            k8: -k.a5 * n * b + 1.0 + (c.amp_inefficiency - 1.0) * b,
            k9: -n * sr + n * c.static_per_element_active_w + k.a7,
            bandwidth_hz: c.bandwidth_hz,
        }
    }

    pub fn ee(&self, pt: f64) -> Result<f64> {
        if !(pt >= 0.0) {
            return Err(invalid("total_power_w", "must be non-negative"));
        }
        let root = clamped_sqrt(self.k4 * pt * pt + self.k5 * pt, "EE(P_t)");
        let num = self.k1 * pt * pt + self.k2 * pt + self.k3 * pt * root;
        ratio_ee(
            self.bandwidth_hz,
            num,
            self.k6 * pt + self.k7,
            self.k8 * pt + self.k9,
        )
    }

    /// Leading-order form for large `P_t`: static terms and the noise
    /// product are dropped.
    pub fn ee_large_pt(&self, pt: f64) -> f64 {
        let slope = (self.k1 + self.k3 * self.k4.max(0.0).sqrt()) / self.k6;
        self.bandwidth_hz * (1.0 + slope * pt).log2() / (self.k8 * pt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtLimit {
    pub pt: f64,
    /// Large-`P_t` form evaluated at `pt`.
    pub value: f64,
    /// Exact limit as `P_t → ∞`.
    pub limit: f64,
}

pub fn limit_pt_infinity(config: &SystemConfig, k: &AsymptoticConstants, pt: f64) -> PtLimit {
    PtLimit {
        pt,
        value: PowerCoeffs::new(config, k).ee_large_pt(pt),
        limit: 0.0,
    }
}

/// Active EE as a function of the RIS noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisNoiseCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub a8: f64,
    pub n: f64,
    pub bandwidth_hz: f64,
}

impl RisNoiseCoeffs {
    pub fn new(c: &SystemConfig, k: &AsymptoticConstants) -> Self {
        let b = c.pa_factor;
        let pt = c.total_power_w;
        let n = c.n();
        let su = c.noise_user_w;
        Self {
            a1: k.a3 * b * pt,
            a2: k.a4 * b * pt,
            a3: -n * b * pt + n * pt,
            a4: k.a5 * n * b * pt * pt * (1.0 - b),
            a5: k.a1 * n * b * pt * pt * (1.0 - b) + k.a2 * b * b * pt * pt,
            a6: k.a6 * pt * (1.0 - b) + su,
            a7: k.a5 * b * pt * su,
            a8: -k.a5 * n * b * pt
                + n * c.static_per_element_active_w
                + pt
                + k.a7
                + excess_amp_power(c),
            n,
            bandwidth_hz: c.bandwidth_hz,
        }
    }

    pub fn ee(&self, sigma_r_sq: f64) -> Result<f64> {
        if !(sigma_r_sq >= 0.0) {
            return Err(invalid("noise_ris_w", "must be non-negative"));
        }
        let s = sigma_r_sq;
        let root = clamped_sqrt(self.a3 * s + self.a4, "EE(sigma_r^2)");
        let num = self.a1 * s + self.a2 * root + self.a5;
        ratio_ee(
            self.bandwidth_hz,
            num,
            self.a6 * s + self.a7,
            -self.n * s + self.a8,
        )
    }

    pub fn limit_at_zero(&self) -> Result<f64> {
        ratio_ee(
            self.bandwidth_hz,
            self.a2 * self.a4.max(0.0).sqrt() + self.a5,
            self.a7,
            self.a8,
        )
    }
}

/// Active EE as a function of the user noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserNoiseCoeffs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub bandwidth_hz: f64,
}

impl UserNoiseCoeffs {
    pub fn new(c: &SystemConfig, k: &AsymptoticConstants) -> Self {
        let b = c.pa_factor;
        let pt = c.total_power_w;
        let n = c.n();
        let sr = c.noise_ris_w;
        let radicand = k.a5 * n * b * pt * pt * (1.0 - b) - n * b * pt * sr + n * pt * sr;
        Self {
            d1: -k.a5 * n * b * pt - n * sr
                + n * c.static_per_element_active_w
                + pt
                + k.a7
                + excess_amp_power(c),
            d2: b
                * pt
                * (k.a1 * n * pt * (1.0 - b)
                    + k.a2 * b * pt
                    + k.a3 * sr
                    + k.a4 * clamped_sqrt(radicand, "EE(sigma_u^2)")),
            d3: k.a5 * b * pt + sr,
            d4: k.a6 * pt * (1.0 - b) * sr,
            bandwidth_hz: c.bandwidth_hz,
        }
    }

    pub fn ee(&self, sigma_u_sq: f64) -> Result<f64> {
        if !(sigma_u_sq >= 0.0) {
            return Err(invalid("noise_user_w", "must be non-negative"));
        }
        ratio_ee(
            self.bandwidth_hz,
            self.d2,
            self.d3 * sigma_u_sq + self.d4,
            self.d1,
        )
    }

    pub fn limit_at_zero(&self) -> Result<f64> {
        ratio_ee(self.bandwidth_hz, self.d2, self.d4, self.d1)
    }
}

pub fn ee_of_beta(beta: f64, q: &BetaCoeffs) -> Result<f64> {
    q.ee(beta)
}

pub fn ee_of_pt(pt: f64, k: &PowerCoeffs) -> Result<f64> {
    k.ee(pt)
}

pub fn ee_of_sigma_r(sigma_r_sq: f64, a: &RisNoiseCoeffs) -> Result<f64> {
    a.ee(sigma_r_sq)
}

pub fn ee_of_sigma_u(sigma_u_sq: f64, d: &UserNoiseCoeffs) -> Result<f64> {
    d.ee(sigma_u_sq)
}

/// EE limit as the RIS noise vanishes.
pub fn limit_sigma_r_zero(config: &SystemConfig, k: &AsymptoticConstants) -> Result<f64> {
    RisNoiseCoeffs::new(config, k).limit_at_zero()
}

/// EE limit as the user noise vanishes.
pub fn limit_sigma_u_zero(config: &SystemConfig, k: &AsymptoticConstants) -> Result<f64> {
    UserNoiseCoeffs::new(config, k).limit_at_zero()
}
