//! Closed-form power allocation between the base station and the active
//! surface.
//!
//! The EE in β is linearized twice: a first-order expansion of the square
//! root around `Δx = 0` and `log2(1 + γ) ≈ γ / ln 2`. That turns it into a
//! rational function of β whose stationary points solve a quartic. Ferrari's
//! method gives the four candidates. The chosen β maximizes the full
//! (non-linearized) EE over `{0, 1}` plus the feasible candidates.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{AsymptoticConstants, BetaCoeffs};
use crate::error::{Error, Result};
use crate::params::SystemConfig;

/// Imaginary parts below `IMAG_TOL·(1 + |re|)` are treated as rounding.
pub const IMAG_TOL: f64 = 1e-9;

/// Leading coefficients below this fraction of the largest one are dropped.
pub const DEGREE_TOL: f64 = 1e-12;

/// Rational surrogate `(B/ln2)(c1β³ + c2β² + c3β)/(c4β² + c5β + c6)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorBetaModel {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub bandwidth_hz: f64,
}

impl TaylorBetaModel {
    /// Requires `q6 > 0`, i.e. non-zero RIS noise.
    pub fn new(q: &BetaCoeffs) -> Result<Self> {
        if !(q.q6 > 0.0) {
            return Err(Error::ZeroDenominator("Taylor expansion point (q6)"));
        }
        let s6 = q.q6.sqrt();
        Ok(Self {
            c1: q.q3 * q.radicand_lead / (2.0 * s6),
            c2: q.q1 + q.q3 * q.q5 / (2.0 * s6),
            c3: q.q2 + q.q3 * s6,
            c4: q.q7 * q.q4,
            c5: q.q7 * q.q9 + q.q8 * q.q4,
            c6: q.q8 * q.q9,
            bandwidth_hz: q.bandwidth_hz,
        })
    }

    pub fn denominator(&self, beta: f64) -> f64 {
        self.c4 * beta * beta + self.c5 * beta + self.c6
    }

    /// Numerator coefficients of the derivative, highest degree first.
    pub fn stationary_quartic(&self) -> [f64; 5] {
        let (c1, c2, c3, c4, c5, c6) = (self.c1, self.c2, self.c3, self.c4, self.c5, self.c6);
        [
            c1 * c4,
            2.0 * c1 * c5,
            3.0 * c1 * c6 + c2 * c5 - c3 * c4,
            2.0 * c2 * c6,
            c3 * c6,
        ]
    }

    pub fn derivative(&self, beta: f64) -> f64 {
        let d = self.denominator(beta);
        self.bandwidth_hz / LN_2 * polyval(&self.stationary_quartic(), beta) / (d * d)
    }
}

pub fn taylor_ee(beta: f64, model: &TaylorBetaModel) -> Result<f64> {
    let d = model.denominator(beta);
    if d == 0.0 {
        return Err(Error::ZeroDenominator("Taylor EE"));
    }
    let num = ((model.c1 * beta + model.c2) * beta + model.c3) * beta;
    Ok(model.bandwidth_hz / LN_2 * num / d)
}

/// Horner evaluation, coefficients highest degree first.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

fn polyval_c(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn polyder_c(coeffs: &[f64], x: Complex64) -> Complex64 {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| {
            acc * x + c * (deg - i) as f64
        })
}

/// Magnitude against which residuals at `x` are judged: `Σ |cᵢ| |x|^i`.
pub fn residual_scale(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x.abs() + c.abs())
}

/// A few Newton steps on the original polynomial; keeps the better point.
fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = z;
    let mut best_res = polyval_c(coeffs, z).norm();
    for _ in 0..8 {
        let d = polyder_c(coeffs, z);
        if d.norm() == 0.0 {
            break;
        }
        z -= polyval_c(coeffs, z) / d;
        let r = polyval_c(coeffs, z).norm();
        if r < best_res {
            best = z;
            best_res = r;
        } else {
            break;
        }
        if r == 0.0 {
            break;
        }
    }
    best
}

/// Intermediate quantities of Ferrari's construction for the monic quartic
/// `x⁴ + e x³ + b x² + c x + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerrariTrace {
    pub e: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Depressed-resolvent coefficients (`p` and `q` of `z³ + p z + q`).
    pub alpha: f64,
    pub beta: f64,
    /// Chosen resolvent root.
    pub gamma: Complex64,
    pub eta: Complex64,
    pub mu1: Complex64,
    pub mu2: Complex64,
}

/// Stationary-point quartic together with its Ferrari audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticProblem {
    pub l: [f64; 5],
    pub trace: Option<FerrariTrace>,
    /// All roots in complex form (fewer than four for degenerate degree).
    pub roots: Vec<Complex64>,
}

fn cube_roots(w: Complex64) -> [Complex64; 3] {
    let base = w.powf(1.0 / 3.0);
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    [base, base * omega, base * omega * omega]
}

/// Roots of the depressed cubic `z³ + p z + q`, via Cardano in complex
/// arithmetic. Each returned root uses a matched `(u, v)` pair with
/// `u v = -p/3`.
fn depressed_cubic_roots(p: Complex64, q: Complex64) -> [Complex64; 3] {
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let w1 = -q / 2.0 + disc;
    let w2 = -q / 2.0 - disc;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    if w.norm() == 0.0 {
        // p = q = 0: triple root at zero.
        return [Complex64::new(0.0, 0.0); 3];
    }
    cube_roots(w).map(|u| u - p / (3.0 * u))
}

/// Ferrari's method for a monic quartic. Returns the four (complex) roots
/// and the intermediate quantities.
pub fn ferrari_monic(e: f64, b: f64, c: f64, d: f64) -> ([Complex64; 4], FerrariTrace) {
    let alpha = (3.0 * e * c - 12.0 * d - b * b) / 3.0;
    let beta =
        (-2.0 * b * b * b + 9.0 * e * b * c + 72.0 * b * d - 27.0 * c * c - 27.0 * e * e * d)
            / 27.0;
    let resolvent = depressed_cubic_roots(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0));

    let ec = Complex64::new(e, 0.0);
    let mut best: Option<([Complex64; 4], FerrariTrace)> = None;
    for z in resolvent {
        let gamma = z + b / 3.0;
        let eta = (ec * ec / 4.0 - b + gamma).sqrt();
        let (mu1, mu2) = if eta.norm() > 1e-12 * (1.0 + e.abs() + b.abs().sqrt()) {
            let t = (4.0 * e * b - 8.0 * c - e * e * e) / (4.0 * eta);
            let common = 0.75 * ec * ec - eta * eta - 2.0 * b;
            ((common + t).sqrt(), (common - t).sqrt())
        } else {
            let s = 2.0 * (gamma * gamma - 4.0 * d).sqrt();
            let common = 0.75 * ec * ec - 2.0 * b;
            ((common + s).sqrt(), (common - s).sqrt())
        };
        let roots = [
            -ec / 4.0 + eta / 2.0 + mu1 / 2.0,
            -ec / 4.0 + eta / 2.0 - mu1 / 2.0,
            -ec / 4.0 - eta / 2.0 + mu2 / 2.0,
            -ec / 4.0 - eta / 2.0 - mu2 / 2.0,
        ];
        let trace = FerrariTrace {
            e,
            b,
            c,
            d,
            alpha,
            beta,
            gamma,
            eta,
            mu1,
            mu2,
        };
        // Prefer the resolvent root with the largest eta: it avoids the
        // division by a vanishing eta.
        let better = match &best {
            None => true,
            Some((_, t)) => eta.norm() > t.eta.norm(),
        };
        if better {
            best = Some((roots, trace));
        }
    }
    best.expect("cubic has three roots")
}

fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = Complex64::new(b * b - 4.0 * a * c, 0.0).sqrt();
    // Avoid cancellation: q = -(b + sign(b)·sqrt(disc)) / 2.
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -(Complex64::new(b, 0.0) + sign * disc) / 2.0;
    if q.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    vec![q / a, c / q]
}

fn solve_cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    depressed_cubic_roots(Complex64::new(p, 0.0), Complex64::new(q, 0.0))
        .iter()
        .map(|z| z - b / 3.0)
        .collect()
}

/// All complex roots of `l[0] x⁴ + … + l[4]`, dropping negligible leading
/// coefficients. Every root is Newton-polished on the original polynomial.
pub fn quartic_problem(l: [f64; 5]) -> Result<QuarticProblem> {
    let scale = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegeneratePolynomial);
    }
    let lead = l
        .iter()
        .position(|x| x.abs() > DEGREE_TOL * scale)
        .expect("scale > 0");
    let reduced = &l[lead..];
    let (raw, trace) = match reduced.len() {
        5 => {
            let a = reduced[0];
            let (roots, trace) = ferrari_monic(
                reduced[1] / a,
                reduced[2] / a,
                reduced[3] / a,
                reduced[4] / a,
            );
            (roots.to_vec(), Some(trace))
        }
        4 => (
            solve_cubic(reduced[0], reduced[1], reduced[2], reduced[3]),
            None,
        ),
        3 => (solve_quadratic(reduced[0], reduced[1], reduced[2]), None),
        2 => (vec![Complex64::new(-reduced[1] / reduced[0], 0.0)], None),
        _ => (Vec::new(), None),
    };
    let roots = raw.into_iter().map(|z| polish(reduced, z)).collect();
    Ok(QuarticProblem { l, trace, roots })
}

pub fn is_real(z: Complex64) -> bool {
    z.im.abs() < IMAG_TOL * (1.0 + z.re.abs())
}

/// Real roots of `l[0] x⁴ + … + l[4]`, ascending.
pub fn ferrari_roots(l: [f64; 5]) -> Result<Vec<f64>> {
    let problem = quartic_problem(l)?;
    let mut out: Vec<f64> = problem
        .roots
        .iter()
        .filter(|z| is_real(**z))
        .map(|z| z.re)
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaOptimum {
    pub beta: f64,
    pub ee: f64,
    /// `{0, 1, β̃1, …, β̃4}`; infeasible candidates are clipped to 0.
    pub candidates: Vec<f64>,
    pub model: Option<TaylorBetaModel>,
    pub quartic: Option<QuarticProblem>,
}

/// Maps a stationary point to its feasible candidate.
pub fn clip_candidate(z: Complex64) -> f64 {
    if is_real(z) && (0.0..=1.0).contains(&z.re) {
        z.re
    } else {
        0.0
    }
}

pub fn optimal_beta(config: &SystemConfig, k: &AsymptoticConstants) -> Result<BetaOptimum> {
    let q = BetaCoeffs::new(config, k);
    let model = TaylorBetaModel::new(&q)?;
    let l = model.stationary_quartic();

    let mut candidates = vec![0.0, 1.0];
    let quartic = if l.iter().all(|x| *x == 0.0) {
        // Surrogate numerator vanishes identically; nothing to add.
        candidates.extend([0.0; 4]);
        None
    } else {
        let problem = quartic_problem(l)?;
        candidates.extend(problem.roots.iter().map(|z| clip_candidate(*z)));
        candidates.resize(6, 0.0);
        Some(problem)
    };

    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &b in &candidates {
        let ee = q.ee(b)?;
        let better = ee > best.0 || (ee == best.0 && b < best.1);
        if better {
            best = (ee, b);
        }
    }
    Ok(BetaOptimum {
        beta: best.1,
        ee: best.0,
        candidates,
        model: Some(model),
        quartic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Scenario;

    fn approx_set(mut got: Vec<f64>, want: &[f64], tol: f64) {
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn biquadratic_roots() {
        approx_set(
            ferrari_roots([1.0, 0.0, -5.0, 0.0, 4.0]).unwrap(),
            &[-2.0, -1.0, 1.0, 2.0],
            1e-12,
        );
    }

    #[test]
    fn x4_minus_one() {
        approx_set(
            ferrari_roots([1.0, 0.0, 0.0, 0.0, -1.0]).unwrap(),
            &[-1.0, 1.0],
            1e-12,
        );
        approx_set(
            ferrari_roots([3.0, 0.0, 0.0, 0.0, -3.0]).unwrap(),
            &[-1.0, 1.0],
            1e-12,
        );
    }

    #[test]
    fn all_zero_is_an_error() {
        assert_eq!(ferrari_roots([0.0; 5]), Err(Error::DegeneratePolynomial));
    }

    #[test]
    fn degenerate_degrees() {
        // (x-1)(x-2)(x-3)
        approx_set(
            ferrari_roots([0.0, 1.0, -6.0, 11.0, -6.0]).unwrap(),
            &[1.0, 2.0, 3.0],
            1e-12,
        );
        approx_set(
            ferrari_roots([1e-20, 1.0, -6.0, 11.0, -6.0]).unwrap(),
            &[1.0, 2.0, 3.0],
            1e-12,
        );
        approx_set(
            ferrari_roots([0.0, 0.0, 2.0, -2.0, -4.0]).unwrap(),
            &[-1.0, 2.0],
            1e-12,
        );
        approx_set(
            ferrari_roots([0.0, 0.0, 0.0, 4.0, -1.0]).unwrap(),
            &[0.25],
            1e-15,
        );
        assert!(ferrari_roots([0.0, 0.0, 0.0, 0.0, 3.0]).unwrap().is_empty());
    }

    #[test]
    fn repeated_zero_roots() {
        // x^2 (x - 1)(x + 2) = x^4 + x^3 - 2x^2
        let r = ferrari_roots([1.0, 1.0, -2.0, 0.0, 0.0]).unwrap();
        for want in [-2.0, 0.0, 1.0] {
            assert!(r.iter().any(|x| (x - want).abs() < 1e-7), "{r:?}");
        }
    }

    #[test]
    fn no_real_roots() {
        // (x^2 + 1)(x^2 + 4)
        assert!(ferrari_roots([1.0, 0.0, 5.0, 0.0, 4.0]).unwrap().is_empty());
    }

    #[test]
    fn trace_reconstructs_resolvent() {
        let problem = quartic_problem([2.0, -3.0, -7.0, 1.0, 5.0]).unwrap();
        let t = problem.trace.unwrap();
        assert_eq!(t.e, -1.5);
        // Resolvent root gamma satisfies y^3 - b y^2 + (e c - 4 d) y - (e^2 d - 4 b d + c^2) = 0.
        let y = t.gamma;
        let r = y * y * y - t.b * y * y + (t.e * t.c - 4.0 * t.d) * y
            - (t.e * t.e * t.d - 4.0 * t.b * t.d + t.c * t.c);
        assert!(r.norm() < 1e-9, "{r}");
    }

    #[test]
    fn taylor_zero_at_origin() {
        let s = Scenario::default();
        let k = s.constants().unwrap();
        let m = TaylorBetaModel::new(&BetaCoeffs::new(&s.config, &k)).unwrap();
        assert_eq!(taylor_ee(0.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn taylor_needs_ris_noise() {
        let mut s = Scenario::default();
        s.config.noise_ris_w = 0.0;
        let k = s.constants().unwrap();
        assert!(TaylorBetaModel::new(&BetaCoeffs::new(&s.config, &k)).is_err());
    }

    #[test]
    fn quartic_coefficients_are_derivative_numerator() {
        let s = Scenario::default();
        let k = s.constants().unwrap();
        let m = TaylorBetaModel::new(&BetaCoeffs::new(&s.config, &k)).unwrap();
        for &b in &[0.1, 0.4, 0.77] {
            let h = 1e-6;
            let fd = (taylor_ee(b + h, &m).unwrap() - taylor_ee(b - h, &m).unwrap()) / (2.0 * h);
            let an = m.derivative(b);
            assert!(((fd - an) / an).abs() < 1e-5, "{fd} vs {an}");
        }
    }

    #[test]
    fn clipping_rule() {
        assert_eq!(clip_candidate(Complex64::new(1.5, 0.0)), 0.0);
        assert_eq!(clip_candidate(Complex64::new(-0.2, 0.0)), 0.0);
        assert_eq!(clip_candidate(Complex64::new(0.3, 0.1)), 0.0);
        assert_eq!(clip_candidate(Complex64::new(0.3, 1e-13)), 0.3);
    }

    #[test]
    fn optimum_beats_every_candidate() {
        let s = Scenario::default();
        let k = s.constants().unwrap();
        let opt = optimal_beta(&s.config, &k).unwrap();
        let q = BetaCoeffs::new(&s.config, &k);
        assert_eq!(opt.candidates.len(), 6);
        for &c in &opt.candidates {
            assert!(opt.ee >= q.ee(c).unwrap());
        }
        assert!((0.0..=1.0).contains(&opt.beta));
    }

    #[test]
    fn degenerate_numerator_picks_zero() {
        let s = Scenario::default();
        let mut k = s.constants().unwrap();
        k.a1 = 0.0;
        k.a2 = 0.0;
        k.a3 = 0.0;
        k.a4 = 0.0;
        let opt = optimal_beta(&s.config, &k).unwrap();
        assert_eq!(opt.beta, 0.0);
        assert_eq!(opt.ee, 0.0);
    }

    #[test]
    fn optimum_invariant_to_bandwidth() {
        let s = Scenario::default();
        let k = s.constants().unwrap();
        let a = optimal_beta(&s.config, &k).unwrap();
        let mut c = s.config.clone();
        c.bandwidth_hz *= 2.0;
        let b = optimal_beta(&c, &k).unwrap();
        assert_eq!(a.beta, b.beta);
    }
}
