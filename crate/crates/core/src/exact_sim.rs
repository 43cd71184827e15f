//! Per-realization SNR, power consumption and energy efficiency, plus the
//! Monte Carlo averaging harness.
//!
//! The active surface uses one common amplitude gain for all elements, chosen
//! so that the reflected power equals its share `(1 - β) P_t` of the budget
//! for the realized BS→RIS channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample, trial_seed, ChannelRealization};
use crate::error::{Error, Result};
use crate::params::{PathLoss, Scenario, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEResult {
    pub mode: Mode,
    pub snr: f64,
    pub power_total_w: f64,
    /// `None` when the consumption is not positive.
    pub ee_bits_per_joule: Option<f64>,
}

impl EEResult {
    pub fn new(mode: Mode, snr: f64, power_total_w: f64, bandwidth_hz: f64) -> Self {
        let ee = (power_total_w > 0.0).then(|| bandwidth_hz * (1.0 + snr).log2() / power_total_w);
        Self {
            mode,
            snr,
            power_total_w,
            ee_bits_per_joule: ee,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.ee_bits_per_joule.is_some()
    }
}

/// Common amplitude gain `|p(n)|` of the active elements.
pub fn amplification_gain(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<f64> {
    let pt = config.total_power_w;
    let beta = config.pa_factor;
    let denominator = beta * pt * pathloss.l_g * realization.sum_g_sq()
        + realization.len() as f64 * config.noise_ris_w;
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator("amplification gain"));
    }
    Ok(((1.0 - beta) * pt / denominator).sqrt())
}

pub fn exact_snr_active(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<f64> {
    let gain = amplification_gain(realization, config, pathloss)?;
    snr_active_with_gain(realization, config, pathloss, gain)
}

fn snr_active_with_gain(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
    gain: f64,
) -> Result<f64> {
    let amplitude = (pathloss.l_f * pathloss.l_g).sqrt() * gain * realization.sum_fg()
        + pathloss.l_h.sqrt() * realization.h_mag;
    // Cross terms vanish because the RIS noise is white across elements.
    let amplified_noise = pathloss.l_f * config.noise_ris_w * gain * gain * realization.sum_f_sq();
    let noise = amplified_noise + config.noise_user_w;
    if noise == 0.0 {
        return Err(Error::ZeroDenominator("active SNR noise"));
    }
    Ok(config.pa_factor * config.total_power_w * amplitude * amplitude / noise)
}

/// Power terms of the active system for one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivePower {
    /// Power impinging on the surface, signal plus RIS noise.
    pub p_in: f64,
    /// Reflect-power budget `(1 - β) P_t`.
    pub p_out: f64,
    pub circuit: f64,
    pub total: f64,
}

pub fn exact_power_total_active(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> ActivePower {
    let pt = config.total_power_w;
    let beta = config.pa_factor;
    let p_in = beta * pt * pathloss.l_g * realization.sum_g_sq()
        + realization.len() as f64 * config.noise_ris_w;
    let p_out = (1.0 - beta) * pt;
    let circuit = config.circuit_power_active();
    ActivePower {
        p_in,
        p_out,
        circuit,
        total: p_out - p_in + config.amp_inefficiency * beta * pt + circuit,
    }
}

/// Reflected power summed element by element for a given common gain.
pub fn reflected_power(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
    gain: f64,
) -> f64 {
    let signal: f64 = realization.g_mag.iter().map(|g| (gain * g).powi(2)).sum();
    let noise = realization.len() as f64 * gain * gain;
    config.pa_factor * config.total_power_w * pathloss.l_g * signal + config.noise_ris_w * noise
}

pub fn exact_ee_active(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<EEResult> {
    let snr = exact_snr_active(realization, config, pathloss)?;
    let power = exact_power_total_active(realization, config, pathloss);
    Ok(EEResult::new(
        Mode::Active,
        snr,
        power.total,
        config.bandwidth_hz,
    ))
}

pub fn exact_snr_passive(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<f64> {
    if config.noise_user_w == 0.0 {
        return Err(Error::ZeroDenominator("passive SNR noise"));
    }
    let amplitude = (pathloss.l_f * pathloss.l_g).sqrt() * realization.sum_fg()
        + pathloss.l_h.sqrt() * realization.h_mag;
    Ok(config.total_power_w * amplitude * amplitude / config.noise_user_w)
}

pub fn exact_power_total_passive(config: &SystemConfig) -> f64 {
    config.amp_inefficiency * config.total_power_w + config.circuit_power_passive()
}

pub fn exact_ee_passive(
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<EEResult> {
    let snr = exact_snr_passive(realization, config, pathloss)?;
    Ok(EEResult::new(
        Mode::Passive,
        snr,
        exact_power_total_passive(config),
        config.bandwidth_hz,
    ))
}

pub fn exact_ee(
    mode: Mode,
    realization: &ChannelRealization,
    config: &SystemConfig,
    pathloss: &PathLoss,
) -> Result<EEResult> {
    match mode {
        Mode::Active => exact_ee_active(realization, config, pathloss),
        Mode::Passive => exact_ee_passive(realization, config, pathloss),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
    pub mean_ee: f64,
    pub std_err_ee: f64,
    pub mean_snr: f64,
    pub mean_power: f64,
}

/// Result of trial `index`; depends only on `(seed, index)`.
pub fn run_trial(
    scenario: &Scenario,
    pathloss: &PathLoss,
    mode: Mode,
    seed: u64,
    index: u64,
) -> Result<EEResult> {
    let n = scenario.config.num_elements as usize;
    let realization = sample(&scenario.rayleigh, n, trial_seed(seed, index));
    let wrap = |source| Error::Trial {
        index,
        source: Box::new(source),
    };
    let result = exact_ee(mode, &realization, &scenario.config, pathloss).map_err(wrap)?;
    if !result.is_valid() {
        return Err(wrap(Error::NonPositiveConsumption {
            context: "exact power",
            value: result.power_total_w,
        }));
    }
    Ok(result)
}

/// Averages `trials` exact evaluations on the current rayon pool.
///
/// Trials are collected in index order and reduced sequentially, so the
/// summary is bit-identical for any number of worker threads.
pub fn monte_carlo(
    scenario: &Scenario,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "must be at least 1".into(),
        });
    }
    let pathloss = scenario.path_loss()?;
    scenario.rayleigh.check()?;
    let results: Vec<EEResult> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, &pathloss, mode, seed, i))
        .collect::<Result<_>>()?;
    Ok(summarize(mode, seed, &results))
}

/// As [`monte_carlo`] on a dedicated pool with `workers` threads.
pub fn monte_carlo_with_workers(
    scenario: &Scenario,
    mode: Mode,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<MonteCarloSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "workers",
            reason: e.to_string(),
        })?;
    pool.install(|| monte_carlo(scenario, mode, trials, seed))
}

fn summarize(mode: Mode, seed: u64, results: &[EEResult]) -> MonteCarloSummary {
    let n = results.len() as f64;
    let ee: Vec<f64> = results.iter().filter_map(|r| r.ee_bits_per_joule).collect();
    let mean_ee = ee.iter().sum::<f64>() / n;
    let std_err_ee = if results.len() > 1 {
        let var = ee.iter().map(|x| (x - mean_ee).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MonteCarloSummary {
        mode,
        trials: results.len() as u64,
        seed,
        mean_ee,
        std_err_ee,
        mean_snr: results.iter().map(|r| r.snr).sum::<f64>() / n,
        mean_power: results.iter().map(|r| r.power_total_w).sum::<f64>() / n,
    }
}
