//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{companion_roots, match_error, random_quartic, slope_sign_changes};
use ris_ee::asymptotic::{
    ee_asymptotic_active, BetaCoeffs, PowerCoeffs, RisNoiseCoeffs, UserNoiseCoeffs,
};
use ris_ee::channel::{moments, sample};
use ris_ee::crossover::{
    solve, solve_annealing, solve_bisection, solve_newton, AnnealingSchedule, CrossoverCoeffs,
    Method, Tolerance, ALPHA_MIN, NEWTON_START,
};
use ris_ee::exact_sim::{
    amplification_gain, exact_ee_active, exact_ee_passive, monte_carlo, monte_carlo_with_workers,
    reflected_power, Mode,
};
use ris_ee::experiments::grid_argmax;
use ris_ee::pa_opt::{optimal_beta, quartic_problem};
use ris_ee::params::dbm_to_watts;
use ris_ee::Scenario;

const SEED: u64 = 20_240_601;

struct Gate {
    failed: Vec<usize>,
}

impl Gate {
    fn report(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        println!(
            "{} criterion {id}: {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            self.failed.push(id);
        }
    }
}

fn scenario_with(n: u32) -> Scenario {
    let mut s = Scenario::default();
    s.config = s.config.with_elements(n);
    s
}

fn asymptotic_fit(gate: &mut Gate) {
    let start = Instant::now();
    let mut gaps = Vec::new();
    for n in [256, 1024, 4096] {
        let s = scenario_with(n);
        let k = s.constants().unwrap();
        let mc = monte_carlo(&s, Mode::Active, 100_000, SEED).unwrap();
        let asym = ee_asymptotic_active(&s.config, &k)
            .unwrap()
            .ee_bits_per_joule
            .unwrap();
        gaps.push(((mc.mean_ee - asym) / asym).abs());
    }
    let elapsed = start.elapsed();
    let ok = gaps.iter().all(|g| *g < 0.05)
        && gaps.windows(2).all(|w| w[1] <= w[0])
        && elapsed < Duration::from_secs(120);
    gate.report(
        1,
        "Monte Carlo vs asymptotic EE",
        ok,
        format!(
            "rel gaps [{}] at N=256/1024/4096 (< 5%, nonincreasing), {:.1}s (< 120s)",
            gaps.iter()
                .map(|g| format!("{g:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

fn beta_optimizer(gate: &mut Gate) {
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let mut worst: f64 = 0.0;
    let mut changes = Vec::new();
    for pt_dbm in [20.0, 30.0, 40.0] {
        let mut c = s.config.clone();
        c.total_power_w = dbm_to_watts(pt_dbm);
        let q = BetaCoeffs::new(&c, &k);
        let opt = optimal_beta(&c, &k).unwrap();
        let (argmax, _) = grid_argmax(&q, 1000).unwrap();
        worst = worst.max((opt.beta - argmax).abs());
        let ee: Vec<f64> = (0..1000).map(|i| q.ee(i as f64 / 999.0).unwrap()).collect();
        changes.push(slope_sign_changes(&ee));
    }
    let ok = worst <= 0.02 && changes.iter().all(|c| *c == 1);
    gate.report(
        2,
        "optimal PA factor",
        ok,
        format!("max |beta_b - grid argmax| = {worst:.2e} (<= 0.02) over P_t = 20/30/40 dBm; slope sign changes {changes:?} (each 1)"),
    );
}

fn pt_limit(gate: &mut Gate) {
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let coeffs = PowerCoeffs::new(&s.config, &k);
    let ee: Vec<f64> = (10..=100)
        .map(|p| coeffs.ee(dbm_to_watts(f64::from(p))).unwrap())
        .collect();
    let peak = ee.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = *ee.last().unwrap();
    let changes = slope_sign_changes(&ee);
    let ok = changes <= 1 && last < 0.1 * peak;
    gate.report(
        3,
        "EE vanishes for large P_t",
        ok,
        format!(
            "slope sign changes {changes} (<= 1), EE(100 dBm)/peak = {:.3e} (< 0.1)",
            last / peak
        ),
    );
}

fn noise_limits(gate: &mut Gate) {
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let rn = RisNoiseCoeffs::new(&s.config, &k);
    let un = UserNoiseCoeffs::new(&s.config, &k);
    let err_r = (rn.ee(1e-16).unwrap() / rn.limit_at_zero().unwrap() - 1.0).abs();
    let err_u = (un.ee(1e-16).unwrap() / un.limit_at_zero().unwrap() - 1.0).abs();
    let grid: Vec<f64> = (-130..=-40).map(|d| dbm_to_watts(f64::from(d))).collect();
    let mono = |f: &dyn Fn(f64) -> f64| grid.windows(2).all(|w| f(w[1]) <= f(w[0]));
    let mono_r = mono(&|x| rn.ee(x).unwrap());
    let mono_u = mono(&|x| un.ee(x).unwrap());
    let ok = err_r < 0.01 && err_u < 0.01 && mono_r && mono_u;
    gate.report(
        4,
        "noise limits",
        ok,
        format!("rel err at 1e-16 W: sigma_r {err_r:.2e}, sigma_u {err_u:.2e} (< 1%); nonincreasing on -130..-40 dBm: {mono_r}/{mono_u}"),
    );
}

fn crossover(gate: &mut Gate) {
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let m = CrossoverCoeffs::new(&s.config, &k);
    let signs: Vec<f64> = (16..=65_536u32)
        .map(|n| m.f(1.0 / f64::from(n)).unwrap().signum())
        .collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();

    let tol = Tolerance::default();
    let newton = solve_newton(&m, NEWTON_START, tol).unwrap();
    let bisect = solve_bisection(&m, tol).unwrap();
    let anneal = solve(&m, Method::Annealing, tol, SEED).unwrap();
    let rel = |a: f64| ((a - bisect.alpha_root) / bisect.alpha_root).abs();
    let (dn, ds) = (rel(newton.alpha_root), rel(anneal.alpha_root));
    let res = |a: f64| m.f(a).unwrap().abs() / m.f1(a).unwrap().abs().max(m.f2(a).unwrap().abs());
    let worst_res = res(bisect.alpha_root).max(res(newton.alpha_root));
    let n0 = bisect.n_equivalent;
    let below = m.f(4.0 / n0).unwrap();
    let above = m.f(1.0 / (4.0 * n0)).unwrap();
    let ok = sign_changes == 1
        && dn <= 1e-6
        && ds <= 1e-3
        && worst_res <= 1e-9
        && (256.0..=4096.0).contains(&n0)
        && below > 0.0
        && above < 0.0;
    gate.report(
        5,
        "active/passive crossover",
        ok,
        format!(
            "sign changes on [2^4, 2^16]: {sign_changes} (1); rel alpha diff newton {dn:.1e} (1e-6), annealing {ds:.1e} (1e-3); \
             |f|/max(|f1|,|f2|) = {worst_res:.1e} (1e-9); N0 = {n0:.2} = 2^{:.2} (2^8..2^12); f(N0/4) = {below:+.3e} (> 0), f(4N0) = {above:+.3e} (< 0)",
            n0.log2()
        ),
    );
}

fn convergence_order(gate: &mut Gate) {
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let m = CrossoverCoeffs::new(&s.config, &k);
    let tol = Tolerance::default();
    let n = solve_newton(&m, NEWTON_START, tol)
        .unwrap()
        .iterations_to(1e-6);
    let b = solve_bisection(&m, tol).unwrap().iterations_to(1e-6);
    let a = solve_annealing(&m, &AnnealingSchedule::default(), SEED)
        .unwrap()
        .iterations_to(1e-6);
    let ok = matches!((n, b, a), (Some(n), Some(b), Some(a)) if n < b && b < a);
    gate.report(
        6,
        "solver convergence order",
        ok,
        format!("iterations to residual 1e-6: newton {n:?} < bisection {b:?} < annealing {a:?}"),
    );
}

fn oracles(gate: &mut Gate) {
    // Ferrari vs companion matrix.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ferrari_err: f64 = 0.0;
    for i in 0..1000 {
        let (l, _) = random_quartic(&mut rng, [0, 2, 4][i % 3]);
        let ours: Vec<Complex<f64>> = quartic_problem(l)
            .unwrap()
            .roots
            .iter()
            .map(|z| Complex::new(z.re, z.im))
            .collect();
        ferrari_err =
            ferrari_err.max(match_error(&ours, &companion_roots(l)).unwrap_or(f64::INFINITY));
    }

    // Analytic f' vs central differences at log-uniform points.
    let s = Scenario::default();
    let k = s.constants().unwrap();
    let m = CrossoverCoeffs::new(&s.config, &k);
    let mut deriv_err: f64 = 0.0;
    for _ in 0..100 {
        let a = (rng.gen_range(ALPHA_MIN.ln()..0.0f64))
            .exp()
            .min(1.0 - 1e-6);
        let h = 1e-7 * a;
        let fd = (m.f(a + h).unwrap() - m.f(a - h).unwrap()) / (2.0 * h);
        let (_, d) = m.f_and_derivative(a).unwrap();
        deriv_err = deriv_err.max(((fd - d) / d).abs());
    }

    // Rayleigh moments at 1e6 draws.
    let p = s.rayleigh;
    let r = sample(&p, 1_000_000, SEED);
    let mo = moments(&p);
    let n = r.g_mag.len() as f64;
    let sd_mean = ((2.0 - std::f64::consts::FRAC_PI_2) * p.alpha_g_sq / n).sqrt();
    let sd_sq = 2.0 * p.alpha_g_sq / n.sqrt();
    let mut z: f64 = 0.0;
    for mags in [&r.g_mag, &r.f_mag] {
        let m1 = mags.iter().sum::<f64>() / n;
        let m2 = mags.iter().map(|x| x * x).sum::<f64>() / n;
        z = z
            .max((m1 - mo.mean_g).abs() / sd_mean)
            .max((m2 - mo.mean_sq_g).abs() / sd_sq);
    }

    // Reflected power equals the surface's share of the budget.
    let pl = s.path_loss().unwrap();
    let mut power_err: f64 = 0.0;
    for i in 0..1000u64 {
        let real = sample(&p, 1 + (i as usize * 37) % 2048, SEED ^ i);
        let gain = amplification_gain(&real, &s.config, &pl).unwrap();
        let out = reflected_power(&real, &s.config, &pl, gain);
        let share = (1.0 - s.config.pa_factor) * s.config.total_power_w;
        power_err = power_err.max(((out - share) / share).abs());
    }

    let ok = ferrari_err <= 1e-8 && deriv_err < 1e-5 && z <= 3.0 && power_err <= 1e-10;
    gate.report(
        7,
        "oracle suites",
        ok,
        format!(
            "Ferrari vs companion max err {ferrari_err:.1e} (1e-8); f' vs FD max rel err {deriv_err:.1e} (1e-5); \
             moment z-score max {z:.2} (3); power conservation max rel err {power_err:.1e} (1e-10)"
        ),
    );
}

fn structural(gate: &mut Gate) {
    let s = scenario_with(512);
    let pl = s.path_loss().unwrap();
    let k = s.constants().unwrap();
    let mut c2 = s.config.clone();
    c2.bandwidth_hz *= 2.0;
    let mut linear = true;
    for i in 0..200 {
        let r = sample(&s.rayleigh, 512, i);
        let a1 = exact_ee_active(&r, &s.config, &pl)
            .unwrap()
            .ee_bits_per_joule
            .unwrap();
        let a2 = exact_ee_active(&r, &c2, &pl)
            .unwrap()
            .ee_bits_per_joule
            .unwrap();
        let p1 = exact_ee_passive(&r, &s.config, &pl)
            .unwrap()
            .ee_bits_per_joule
            .unwrap();
        let p2 = exact_ee_passive(&r, &c2, &pl)
            .unwrap()
            .ee_bits_per_joule
            .unwrap();
        linear &= a2 == 2.0 * a1 && p2 == 2.0 * p1;
    }
    let beta_invariant = [0.5, 3.0, 1e3].iter().all(|f| {
        let mut c = s.config.clone();
        c.bandwidth_hz *= f;
        optimal_beta(&c, &k).unwrap().beta == optimal_beta(&s.config, &k).unwrap().beta
    });
    let runs: Vec<_> = [1, 2, 4, 7]
        .iter()
        .map(|w| monte_carlo_with_workers(&s, Mode::Active, 3000, SEED, *w).unwrap())
        .collect();
    let bit_identical = runs.windows(2).all(|w| {
        w[0].mean_ee.to_bits() == w[1].mean_ee.to_bits()
            && w[0].std_err_ee.to_bits() == w[1].std_err_ee.to_bits()
    });
    gate.report(
        8,
        "structural invariants",
        linear && beta_invariant && bit_identical,
        format!("EE(2B) == 2 EE(B): {linear}; beta_b invariant under B scaling: {beta_invariant}; MC bit-identical for 1/2/4/7 workers: {bit_identical}"),
    );
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };
    asymptotic_fit(&mut gate);
    beta_optimizer(&mut gate);
    pt_limit(&mut gate);
    noise_limits(&mut gate);
    crossover(&mut gate);
    convergence_order(&mut gate);
    oracles(&mut gate);
    structural(&mut gate);
    if gate.failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
    } else {
        println!("acceptance: failed criteria {:?}", gate.failed);
        std::process::exit(1);
    }
}
