//! Rayleigh small-scale fading: sampling, analytic moments and phase
//! alignment of the reflected cascade.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::RayleighParams;

/// Raw phases of one realization. `g` and `f` are in the convention
/// `g(n) = |g(n)| e^{j 2π φ_g(n)}`; `h` enters as `e^{-j φ_h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phases {
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g_mag: Vec<f64>,
    pub f_mag: Vec<f64>,
    pub h_mag: f64,
    pub phases: Option<Phases>,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.g_mag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_mag.is_empty()
    }

    pub fn sum_g_sq(&self) -> f64 {
        self.g_mag.iter().map(|g| g * g).sum()
    }

    pub fn sum_f_sq(&self) -> f64 {
        self.f_mag.iter().map(|f| f * f).sum()
    }

    pub fn sum_fg(&self) -> f64 {
        self.f_mag.iter().zip(&self.g_mag).map(|(f, g)| f * g).sum()
    }

    /// Debug dump, one row per element.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "g_mag", "f_mag", "h_mag", "phi_g", "phi_f", "phi_h"])?;
        for n in 0..self.len() {
            let (pg, pf, ph) = match &self.phases {
                Some(p) => (p.g[n].to_string(), p.f[n].to_string(), p.h.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                n.to_string(),
                self.g_mag[n].to_string(),
                self.f_mag[n].to_string(),
                self.h_mag.to_string(),
                pg,
                pf,
                ph,
            ])?;
        }
        w.flush()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of draw `index` in a stream identified by `seed`. Depends only on the
/// pair, so work can be partitioned arbitrarily.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    seed ^ mix64(index)
}

/// Inverse-CDF Rayleigh transform; `u` must lie in (0, 1].
pub fn rayleigh_from_uniform(scale: f64, u: f64) -> f64 {
    scale * (-2.0 * u.ln()).sqrt()
}

fn draw_rayleigh<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    // gen() is in [0, 1); flip it onto (0, 1].
    let u = 1.0 - rng.gen::<f64>();
    rayleigh_from_uniform(scale, u)
}

fn draw(params: &RayleighParams, n: usize, seed: u64, with_phases: bool) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sg = params.alpha_g_sq.sqrt();
    let sf = params.alpha_f_sq.sqrt();
    let sh = params.alpha_h_sq.sqrt();
    let g_mag = (0..n).map(|_| draw_rayleigh(&mut rng, sg)).collect();
    let f_mag = (0..n).map(|_| draw_rayleigh(&mut rng, sf)).collect();
    let h_mag = draw_rayleigh(&mut rng, sh);
    let phases = with_phases.then(|| Phases {
        g: (0..n).map(|_| rng.gen::<f64>() * TAU).collect(),
        f: (0..n).map(|_| rng.gen::<f64>() * TAU).collect(),
        h: rng.gen::<f64>() * TAU,
    });
    ChannelRealization {
        g_mag,
        f_mag,
        h_mag,
        phases,
    }
}

/// I.i.d. Rayleigh magnitudes for `n` elements, deterministic in `seed`.
pub fn sample(params: &RayleighParams, n: usize, seed: u64) -> ChannelRealization {
    draw(params, n, seed, false)
}

/// As [`sample`], plus uniform phases on `[0, 2π)`. The magnitudes equal those
/// of `sample` for the same seed.
pub fn sample_with_phases(params: &RayleighParams, n: usize, seed: u64) -> ChannelRealization {
    draw(params, n, seed, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_f: f64,
    pub mean_g: f64,
    pub mean_sq_f: f64,
    pub mean_sq_g: f64,
    pub mean_h: f64,
}

/// `E|x| = sqrt(π/2)·α` and `E|x|² = 2α²` for each link.
pub fn moments(params: &RayleighParams) -> Moments {
    let mean = |a_sq: f64| FRAC_PI_2.sqrt() * a_sq.sqrt();
    Moments {
        mean_f: mean(params.alpha_f_sq),
        mean_g: mean(params.alpha_g_sq),
        mean_sq_f: 2.0 * params.alpha_f_sq,
        mean_sq_g: 2.0 * params.alpha_g_sq,
        mean_h: mean(params.alpha_h_sq),
    }
}

/// Phase shift that co-phases element `n` with the direct path.
pub fn phase_shift(phi_f: f64, phi_g: f64, phi_h: f64) -> f64 {
    2.0 * PI * phi_f - 2.0 * PI * phi_g - phi_h
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCascade {
    pub theta: Vec<f64>,
    /// `Σ f*(n) p(n) g(n)` evaluated in complex arithmetic.
    pub cascade: Complex64,
    /// `Σ |f(n)| |p(n)| |g(n)|`.
    pub magnitude_sum: f64,
}

/// Applies the co-phasing shifts with common amplitude `gain` and evaluates
/// the complex cascade. After alignment every term carries the same phase
/// `-φ_h`, so `|cascade| == magnitude_sum`.
pub fn apply_phase_alignment(
    realization: &ChannelRealization,
    gain: f64,
) -> Result<AlignedCascade> {
    let phases = realization.phases.as_ref().ok_or(Error::MissingPhases)?;
    let mut theta = Vec::with_capacity(realization.len());
    let mut cascade = Complex64::new(0.0, 0.0);
    let mut magnitude_sum = 0.0;
    for n in 0..realization.len() {
        let t = phase_shift(phases.f[n], phases.g[n], phases.h);
        let f_conj = Complex64::from_polar(realization.f_mag[n], -2.0 * PI * phases.f[n]);
        let p = Complex64::from_polar(gain, t);
        let g = Complex64::from_polar(realization.g_mag[n], 2.0 * PI * phases.g[n]);
        cascade += f_conj * p * g;
        magnitude_sum += realization.f_mag[n] * gain * realization.g_mag[n];
        theta.push(t);
    }
    Ok(AlignedCascade {
        theta,
        cascade,
        magnitude_sum,
    })
}
