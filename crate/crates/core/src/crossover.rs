//! Element count at which the active and passive surfaces are equally
//! efficient.
//!
//! With `α = 1/N` the two asymptotic EEs become
//! `EEᵃ = Bα·f1(α)` and `EEᵖ = Bα·f2(α)`, where
//!
//! ```text
//! f1(α) = log2(1 + (m1 + m2√α + m3α)/α)  / (m4 + m5α)
//! f2(α) = log2(1 + (m6 + m7α + m8α²)/α²) / (P^p_cn + m9α)
//! ```
//!
//! The crossover is the zero of `f = f1 - f2`. Residuals are reported as
//! `|f| / max(|f1|, |f2|)` so one tolerance fits every configuration.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotic::AsymptoticConstants;
use crate::error::{invalid, Error, Result};
use crate::params::SystemConfig;

/// Lower end of the α domain, `1 / 2^20`.
pub const ALPHA_MIN: f64 = 1.0 / 1_048_576.0;
pub const ALPHA_MAX: f64 = 1.0;
/// Large-N end of the domain. There `f < 0`, `f' > 0` and `f'' < 0`, so
/// Newton approaches the crossover monotonically from below.
pub const NEWTON_START: f64 = ALPHA_MIN;
pub const SCAN_POINTS: usize = 64;
pub const MIN_DERIVATIVE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverCoeffs {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
    pub m7: f64,
    pub m8: f64,
    pub m9: f64,
    pub p_cn_passive: f64,
    pub bandwidth_hz: f64,
}

impl CrossoverCoeffs {
    pub fn new(c: &SystemConfig, k: &AsymptoticConstants) -> Self {
        let b = c.pa_factor;
        let pt = c.total_power_w;
        let sr = c.noise_ris_w;
        let su = c.noise_user_w;
        let den = k.a6 * pt * (1.0 - b) * sr + k.a5 * b * pt * su + sr * su;
        let radicand = k.a5 * b * pt * pt * (1.0 - b) - b * pt * sr + pt * sr;
        Self {
            m1: k.a1 * pt * pt * b * (1.0 - b) / den,
            m2: b * pt * k.a4 * radicand.max(0.0).sqrt() / den,
            m3: (k.a2 * b * b * pt * pt + k.a3 * b * pt * sr) / den,
            m4: -k.a5 * b * pt - sr + c.static_per_element_active_w,
            m5: pt + k.a7 + (c.amp_inefficiency - 1.0) * b * pt,
            m6: k.a8 * pt / su,
            m7: k.a9 * pt / su,
            m8: k.a10 * pt / su,
            m9: c.amp_inefficiency * pt + k.a11,
            p_cn_passive: c.static_per_element_passive_w,
            bandwidth_hz: c.bandwidth_hz,
        }
    }

    /// Active log term and its power denominator at `α`.
    fn active_parts(&self, alpha: f64) -> (f64, f64) {
        let u = self.m1 / alpha + self.m2 / alpha.sqrt() + self.m3;
        ((1.0 + u).log2(), self.m4 + self.m5 * alpha)
    }

    fn passive_parts(&self, alpha: f64) -> (f64, f64) {
        let v = self.m6 / (alpha * alpha) + self.m7 / alpha + self.m8;
        ((1.0 + v).log2(), self.p_cn_passive + self.m9 * alpha)
    }

    pub fn f1(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let (l, d) = self.active_parts(alpha);
        nonzero(d, "active denominator")?;
        Ok(l / d)
    }

    pub fn f2(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let (l, d) = self.passive_parts(alpha);
        nonzero(d, "passive denominator")?;
        Ok(l / d)
    }

    pub fn f(&self, alpha: f64) -> Result<f64> {
        Ok(self.f1(alpha)? - self.f2(alpha)?)
    }

    /// `f(α)` and `f′(α)`.
    pub fn f_and_derivative(&self, alpha: f64) -> Result<(f64, f64)> {
        check_alpha(alpha)?;
        let (l1, d1) = self.active_parts(alpha);
        let (l2, d2) = self.passive_parts(alpha);
        nonzero(d1, "active denominator")?;
        nonzero(d2, "passive denominator")?;

        let u = self.m1 / alpha + self.m2 / alpha.sqrt() + self.m3;
        let du = -self.m1 / (alpha * alpha) - 0.5 * self.m2 * alpha.powf(-1.5);
        let df1 = (du / (LN_2 * (1.0 + u)) * d1 - l1 * self.m5) / (d1 * d1);

        let v = self.m6 / (alpha * alpha) + self.m7 / alpha + self.m8;
        let dv = -2.0 * self.m6 / alpha.powi(3) - self.m7 / (alpha * alpha);
        let df2 = (dv / (LN_2 * (1.0 + v)) * d2 - l2 * self.m9) / (d2 * d2);

        Ok((l1 / d1 - l2 / d2, df1 - df2))
    }

    /// `|f| / max(|f1|, |f2|)`.
    pub fn residual(&self, alpha: f64) -> Result<f64> {
        let f1 = self.f1(alpha)?;
        let f2 = self.f2(alpha)?;
        Ok(normalized(f1 - f2, f1.abs().max(f2.abs())))
    }
}

fn normalized(f: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        f.abs() / scale
    } else {
        f.abs()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} outside (0, 1]")))
    }
}

fn nonzero(d: f64, what: &'static str) -> Result<()> {
    if d > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveConsumption {
            context: what,
            value: d,
        })
    }
}

fn alpha_of_n(n: f64) -> Result<f64> {
    if n >= 1.0 {
        Ok(1.0 / n)
    } else {
        Err(invalid("num_elements", format!("{n} < 1")))
    }
}

/// Active asymptotic EE at element count `n` (real, `n ≥ 1`).
pub fn ee_active_of_n(n: f64, m: &CrossoverCoeffs) -> Result<f64> {
    let alpha = alpha_of_n(n)?;
    Ok(m.bandwidth_hz * alpha * m.f1(alpha)?)
}

/// Passive asymptotic EE at element count `n` (real, `n ≥ 1`).
pub fn ee_passive_of_n(n: f64, m: &CrossoverCoeffs) -> Result<f64> {
    let alpha = alpha_of_n(n)?;
    Ok(m.bandwidth_hz * alpha * m.f2(alpha)?)
}

pub fn f_and_derivative(alpha: f64, m: &CrossoverCoeffs) -> Result<(f64, f64)> {
    m.f_and_derivative(alpha)
}

/// Anything the solvers can search for a zero of on `(0, 1]`.
pub trait RootFunction {
    fn value(&self, alpha: f64) -> Result<f64>;
    fn derivative(&self, alpha: f64) -> Result<f64>;

    /// Magnitude the residual is divided by.
    fn scale(&self, _alpha: f64) -> Result<f64> {
        Ok(1.0)
    }

    fn residual(&self, alpha: f64) -> Result<f64> {
        Ok(normalized(self.value(alpha)?, self.scale(alpha)?))
    }
}

impl RootFunction for CrossoverCoeffs {
    fn value(&self, alpha: f64) -> Result<f64> {
        self.f(alpha)
    }

    fn derivative(&self, alpha: f64) -> Result<f64> {
        Ok(self.f_and_derivative(alpha)?.1)
    }

    fn scale(&self, alpha: f64) -> Result<f64> {
        Ok(self.f1(alpha)?.abs().max(self.f2(alpha)?.abs()))
    }
}

/// Adapter for closures, mostly for tests with known roots.
pub struct Closure<F, D> {
    pub f: F,
    pub df: D,
}

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> RootFunction for Closure<F, D> {
    fn value(&self, alpha: f64) -> Result<f64> {
        Ok((self.f)(alpha))
    }

    fn derivative(&self, alpha: f64) -> Result<f64> {
        Ok((self.df)(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Newton,
    Bisection,
    Annealing,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Newton, Method::Bisection, Method::Annealing];

    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Bisection => "bisection",
            Method::Annealing => "annealing",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Method::Newton),
            "bisection" => Ok(Method::Bisection),
            "annealing" => Ok(Method::Annealing),
            _ => Err(invalid("method", format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub alpha: f64,
    pub f: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSolveReport {
    pub method: Method,
    pub alpha_root: f64,
    pub n_equivalent: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

impl RootSolveReport {
    /// First iteration whose residual is at or below `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.trace
            .iter()
            .find(|p| p.residual <= tol)
            .map(|p| p.iteration)
    }
}

/// Stopping rules shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Converged once the normalized residual is at or below this.
    pub residual: f64,
    /// Bisection also stops once the bracket is this narrow.
    pub width: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            residual: 1e-12,
            width: 1e-18,
            max_iter: 200,
        }
    }
}

fn point<R: RootFunction + ?Sized>(func: &R, iteration: usize, alpha: f64) -> Result<TracePoint> {
    Ok(TracePoint {
        iteration,
        alpha,
        f: func.value(alpha)?,
        residual: func.residual(alpha)?,
    })
}

fn report(
    method: Method,
    best: &TracePoint,
    iterations: usize,
    tol: f64,
    trace: Vec<TracePoint>,
) -> RootSolveReport {
    RootSolveReport {
        method,
        alpha_root: best.alpha,
        n_equivalent: 1.0 / best.alpha,
        iterations,
        residual: best.residual,
        converged: best.residual <= tol,
        trace,
    }
}

/// Newton iteration with iterates clamped to `[ALPHA_MIN, 1]`.
pub fn solve_newton<R: RootFunction + ?Sized>(
    func: &R,
    alpha0: f64,
    tol: Tolerance,
) -> Result<RootSolveReport> {
    check_alpha(alpha0)?;
    let mut alpha = alpha0.clamp(ALPHA_MIN, ALPHA_MAX);
    let mut current = point(func, 0, alpha)?;
    let mut trace = vec![current];
    let mut iterations = 0;
    while current.residual > tol.residual && iterations < tol.max_iter {
        let d = func.derivative(alpha)?;
        if !(d.abs() >= MIN_DERIVATIVE) {
            return Err(Error::DerivativeVanished { alpha });
        }
        let next = (alpha - current.f / d).clamp(ALPHA_MIN, ALPHA_MAX);
        iterations += 1;
        current = point(func, iterations, next)?;
        trace.push(current);
        if next == alpha {
            // Pinned at a clamp or stalled in rounding.
            break;
        }
        alpha = next;
    }
    Ok(report(
        Method::Newton,
        &current,
        iterations,
        tol.residual,
        trace,
    ))
}

/// First sign-change sub-bracket among `SCAN_POINTS` log-spaced points.
pub fn scan_bracket<R: RootFunction + ?Sized>(
    func: &R,
    lo: f64,
    hi: f64,
) -> Result<Option<(f64, f64)>> {
    let (ll, lh) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| match i {
            0 => lo,
            _ if i == SCAN_POINTS - 1 => hi,
            _ => (ll + (lh - ll) * i as f64 / (SCAN_POINTS - 1) as f64).exp(),
        })
        .collect();
    let mut prev = (grid[0], func.value(grid[0])?);
    for &a in &grid[1..] {
        let fa = func.value(a)?;
        if prev.1 == 0.0 {
            return Ok(Some((prev.0, prev.0)));
        }
        if prev.1.signum() != fa.signum() {
            return Ok(Some((prev.0, a)));
        }
        prev = (a, fa);
    }
    Ok(None)
}

/// Interval halving on `[ALPHA_MIN, 1]`.
pub fn solve_bisection<R: RootFunction + ?Sized>(
    func: &R,
    tol: Tolerance,
) -> Result<RootSolveReport> {
    let (lo, hi) = (ALPHA_MIN, ALPHA_MAX);
    let (f_lo, f_hi) = (func.value(lo)?, func.value(hi)?);
    let (mut a, mut b) = if f_lo == 0.0 {
        (lo, lo)
    } else if f_hi == 0.0 {
        (hi, hi)
    } else if f_lo.signum() != f_hi.signum() {
        (lo, hi)
    } else {
        scan_bracket(func, lo, hi)?.ok_or(Error::NoCrossover {
            lower: lo,
            upper: hi,
        })?
    };
    let mut fa = func.value(a)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut best = point(func, 0, if a == b { a } else { 0.5 * (a + b) })?;
    while b - a > tol.width && iterations < tol.max_iter {
        let mid = 0.5 * (a + b);
        iterations += 1;
        let p = point(func, iterations, mid)?;
        trace.push(p);
        best = p;
        if p.f == 0.0 || p.residual <= tol.residual {
            break;
        }
        if p.f.signum() == fa.signum() {
            a = mid;
            fa = p.f;
        } else {
            b = mid;
        }
    }
    Ok(report(
        Method::Bisection,
        &best,
        iterations,
        tol.residual,
        trace,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub t0: f64,
    pub cooling: f64,
    pub proposals_per_temperature: usize,
    pub t_min: f64,
    /// Proposal standard deviation at `T0`, as a fraction of the width of
    /// the domain in `ln α`.
    pub step: f64,
    pub start: f64,
    /// Stop early once the best residual reaches this.
    pub tol: f64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            t0: 1.0,
            cooling: 0.95,
            proposals_per_temperature: 20,
            t_min: 1e-6,
            step: 0.1,
            start: NEWTON_START,
            tol: 1e-12,
        }
    }
}

impl AnnealingSchedule {
    pub fn check(&self) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(invalid("t0", "must be positive"));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(invalid("cooling", "must lie in (0, 1)"));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t0) {
            return Err(invalid("t_min", "must lie in (0, t0)"));
        }
        if self.proposals_per_temperature == 0 {
            return Err(invalid("proposals_per_temperature", "must be >= 1"));
        }
        if !(self.step > 0.0) {
            return Err(invalid("step", "must be positive"));
        }
        check_alpha(self.start)
    }
}

/// Draws a standard normal by Box-Muller.
fn standard_normal<G: Rng>(rng: &mut G) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Metropolis search on `ln α` with energy equal to the normalized residual.
/// Returns the best point seen.
pub fn solve_annealing<R: RootFunction + ?Sized>(
    func: &R,
    schedule: &AnnealingSchedule,
    seed: u64,
) -> Result<RootSolveReport> {
    schedule.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ln_lo, ln_hi) = (ALPHA_MIN.ln(), ALPHA_MAX.ln());

    let mut current = point(func, 0, schedule.start.clamp(ALPHA_MIN, ALPHA_MAX))?;
    let mut best = current;
    let mut trace = vec![current];
    let mut iterations = 0;
    let mut t = schedule.t0;
    'outer: while t >= schedule.t_min {
        let sigma = schedule.step * (ln_hi - ln_lo) * t / schedule.t0;
        // Each level restarts from the best state. Without this a walker
        // that drifted onto the flat small-N plateau while hot never returns.
        current = best;
        for _ in 0..schedule.proposals_per_temperature {
            if best.residual <= schedule.tol {
                break 'outer;
            }
            let ln_a = (current.alpha.ln() + sigma * standard_normal(&mut rng)).clamp(ln_lo, ln_hi);
            iterations += 1;
            let candidate = point(func, iterations, ln_a.exp())?;
            let eta = candidate.residual - current.residual;
            if eta <= 0.0 || rng.gen::<f64>() < (-eta / t).exp() {
                current = candidate;
            }
            if candidate.residual < best.residual {
                best = candidate;
            }
            // The trace records the best-so-far state, so it is monotone.
            trace.push(TracePoint {
                iteration: iterations,
                ..best
            });
        }
        t *= schedule.cooling;
    }
    Ok(report(
        Method::Annealing,
        &best,
        iterations,
        schedule.tol,
        trace,
    ))
}

/// Solver output converted to element counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub solve: RootSolveReport,
    pub n0: f64,
    pub n_floor: u64,
    pub n_ceil: u64,
    /// `f` at `N = n_floor` and `N = n_ceil`; positive means active wins.
    pub f_at_floor: f64,
    pub f_at_ceil: f64,
}

pub fn solve(
    m: &CrossoverCoeffs,
    method: Method,
    tol: Tolerance,
    seed: u64,
) -> Result<RootSolveReport> {
    match method {
        Method::Newton => solve_newton(m, NEWTON_START, tol),
        Method::Bisection => solve_bisection(m, tol),
        Method::Annealing => solve_annealing(
            m,
            &AnnealingSchedule {
                tol: tol.residual,
                ..AnnealingSchedule::default()
            },
            seed,
        ),
    }
}

/// Crossover element count with default tolerances and seed 0 for annealing.
pub fn crossover_n(
    config: &SystemConfig,
    k: &AsymptoticConstants,
    method: Method,
) -> Result<CrossoverReport> {
    let m = CrossoverCoeffs::new(config, k);
    let solve = solve(&m, method, Tolerance::default(), 0)?;
    let n0 = solve.n_equivalent;
    let n_floor = n0.floor().max(1.0);
    let n_ceil = n0.ceil().max(1.0);
    Ok(CrossoverReport {
        f_at_floor: m.f(1.0 / n_floor)?,
        f_at_ceil: m.f(1.0 / n_ceil)?,
        n0,
        n_floor: n_floor as u64,
        n_ceil: n_ceil as u64,
        solve,
    })
}
