//! Figure sweeps. Each figure is a table written as CSV with `#` metadata
//! lines, plus a JSON sidecar holding the resolved scenario.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotic::{
    ee_asymptotic_active, ee_asymptotic_passive, BetaCoeffs, PowerCoeffs, RisNoiseCoeffs,
    UserNoiseCoeffs,
};
use crate::crossover::{
    solve_annealing, solve_bisection, solve_newton, AnnealingSchedule, CrossoverCoeffs, Method,
    RootSolveReport, Tolerance, NEWTON_START,
};
use crate::error::{invalid, Error, Result};
use crate::exact_sim::{monte_carlo, Mode};
use crate::pa_opt::{optimal_beta, taylor_ee, BetaOptimum, TaylorBetaModel};
use crate::params::{dbm_to_watts, validate, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "fig2_ee_vs_n")]
    EeVsN,
    #[serde(rename = "fig3_ee_vs_pt")]
    EeVsPt,
    #[serde(rename = "fig4_ee_vs_sigmar")]
    EeVsSigmaR,
    #[serde(rename = "fig5_ee_vs_sigmau")]
    EeVsSigmaU,
    #[serde(rename = "fig6_ee_vs_beta")]
    EeVsBeta,
    #[serde(rename = "fig7_solver_convergence")]
    SolverConvergence,
    #[serde(rename = "fig8_f_vs_n")]
    FVsN,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::EeVsN,
        Figure::EeVsPt,
        Figure::EeVsSigmaR,
        Figure::EeVsSigmaU,
        Figure::EeVsBeta,
        Figure::SolverConvergence,
        Figure::FVsN,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::EeVsN => "fig2_ee_vs_n",
            Figure::EeVsPt => "fig3_ee_vs_pt",
            Figure::EeVsSigmaR => "fig4_ee_vs_sigmar",
            Figure::EeVsSigmaU => "fig5_ee_vs_sigmau",
            Figure::EeVsBeta => "fig6_ee_vs_beta",
            Figure::SolverConvergence => "fig7_solver_convergence",
            Figure::FVsN => "fig8_f_vs_n",
        }
    }

    /// Sweep grid used when none is given.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Figure::EeVsN => (4..=13).map(|e| f64::from(1u32 << e)).collect(),
            Figure::EeVsPt => (10..=100).map(f64::from).collect(),
            Figure::EeVsSigmaR | Figure::EeVsSigmaU => {
                (-130..=-40).step_by(2).map(f64::from).collect()
            }
            Figure::EeVsBeta => (0..=100).map(|i| f64::from(i) / 100.0).collect(),
            Figure::SolverConvergence => Vec::new(),
            Figure::FVsN => (0..=48)
                .map(|i| 2f64.powf(4.0 + f64::from(i) * 0.25))
                .collect(),
        }
    }

    /// Name and unit of the swept variable.
    pub fn grid_variable(self) -> Option<&'static str> {
        match self {
            Figure::EeVsN | Figure::FVsN => Some("n"),
            Figure::EeVsPt => Some("pt_dbm"),
            Figure::EeVsSigmaR => Some("sigma_r_dbm"),
            Figure::EeVsSigmaU => Some("sigma_u_dbm"),
            Figure::EeVsBeta => Some("beta"),
            Figure::SolverConvergence => None,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s || f.id().split('_').next() == Some(s))
            .ok_or_else(|| invalid("figure", format!("unknown figure `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub figure: Figure,
    /// `None` uses [`Figure::default_grid`].
    pub grid: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Budgets (dBm) for figures drawn as one curve per budget.
    pub pt_curves_dbm: Vec<f64>,
}

impl ExperimentSpec {
    pub fn new(figure: Figure) -> Self {
        Self {
            figure,
            grid: None,
            trials: 10_000,
            seed: 0,
            methods: Method::ALL.to_vec(),
            pt_curves_dbm: vec![20.0, 30.0, 40.0],
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.grid
            .clone()
            .unwrap_or_else(|| self.figure.default_grid())
    }

    fn check(&self) -> Result<()> {
        let grid = self.grid();
        if self.figure != Figure::SolverConvergence && grid.is_empty() {
            return Err(invalid("grid", "must not be empty"));
        }
        let in_domain = |x: &f64| match self.figure {
            Figure::EeVsN => *x >= 1.0 && x.fract() == 0.0 && *x <= f64::from(u32::MAX),
            Figure::FVsN => *x >= 1.0,
            Figure::EeVsBeta => (0.0..=1.0).contains(x),
            _ => x.is_finite(),
        };
        if let Some(bad) = grid.iter().find(|x| !in_domain(x)) {
            return Err(invalid(
                "grid",
                format!("{bad} outside the domain of {}", self.figure),
            ));
        }
        if self.figure == Figure::EeVsN && self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if self.figure == Figure::SolverConvergence && self.methods.is_empty() {
            return Err(invalid("method", "need at least one solver"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.11e}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Result<f64>> for Cell {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(x) => Cell::Num(x),
            Err(e) => {
                log::debug!("invalid point: {e}");
                Cell::Empty
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub figure: Figure,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Figure-specific results such as the chosen β or the crossover N.
    pub summary: Vec<(String, String)>,
}

impl Dataset {
    fn new(figure: Figure, columns: &[&str]) -> Self {
        Self {
            figure,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    /// CSV with `#` metadata lines ahead of the header. Deterministic: no
    /// timestamps or host information.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        spec: &ExperimentSpec,
        scenario: &Scenario,
    ) -> Result<()> {
        let io = |e: std::io::Error| invalid("output", e.to_string());
        writeln!(out, "# figure = {}", self.figure).map_err(io)?;
        writeln!(out, "# version = {VERSION}").map_err(io)?;
        writeln!(out, "# seed = {}", spec.seed).map_err(io)?;
        writeln!(out, "# trials = {}", spec.trials).map_err(io)?;
        for line in scenario.to_kv_string().lines() {
            writeln!(out, "# {line}").map_err(io)?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# {k} = {v}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| invalid("output", e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub figure: Figure,
    pub version: String,
    pub seed: u64,
    pub trials: u64,
    pub grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub pt_curves_dbm: Vec<f64>,
    pub annealing: AnnealingSchedule,
    pub scenario: Scenario,
    pub columns: Vec<String>,
    pub summary: Vec<(String, String)>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Rejects configurations that fail validation.
pub fn check_scenario(scenario: &Scenario) -> Result<()> {
    let k = scenario.constants()?;
    let violations = validate(&scenario.config, &k);
    if violations.is_empty() {
        Ok(())
    } else {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(invalid("config", text.join("; ")))
    }
}

pub fn run(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    spec.check()?;
    check_scenario(scenario)?;
    match spec.figure {
        Figure::EeVsN => fig_ee_vs_n(spec, scenario),
        Figure::EeVsPt => fig_ee_vs_pt(spec, scenario),
        Figure::EeVsSigmaR => fig_ee_vs_sigma_r(spec, scenario),
        Figure::EeVsSigmaU => fig_ee_vs_sigma_u(spec, scenario),
        Figure::EeVsBeta => fig_ee_vs_beta(spec, scenario),
        Figure::SolverConvergence => fig_solver_convergence(spec, scenario),
        Figure::FVsN => fig_f_vs_n(spec, scenario),
    }
}

fn fig_ee_vs_n(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let mut d = Dataset::new(
        Figure::EeVsN,
        &[
            "n",
            "ee_active_exact_mc",
            "stderr_active",
            "ee_active_asymptotic",
            "ee_passive_exact_mc",
            "stderr_passive",
            "ee_passive_asymptotic",
            "rel_gap_active",
        ],
    );
    for n in spec.grid() {
        let mut s = scenario.clone();
        s.config = s.config.with_elements(n as u32);
        let mc_a = monte_carlo(&s, Mode::Active, spec.trials, spec.seed);
        let mc_p = monte_carlo(&s, Mode::Passive, spec.trials, spec.seed);
        let asym_a = ee_asymptotic_active(&s.config, &k)
            .ok()
            .and_then(|r| r.ee_bits_per_joule);
        let asym_p = ee_asymptotic_passive(&s.config, &k)
            .ok()
            .and_then(|r| r.ee_bits_per_joule);
        let gap = match (&mc_a, asym_a) {
            (Ok(m), Some(a)) => Cell::Num((m.mean_ee - a).abs() / a),
            _ => Cell::Empty,
        };
        let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
        d.push(vec![
            Cell::Int(n as u64),
            opt(mc_a.as_ref().ok().map(|m| m.mean_ee)),
            opt(mc_a.as_ref().ok().map(|m| m.std_err_ee)),
            opt(asym_a),
            opt(mc_p.as_ref().ok().map(|m| m.mean_ee)),
            opt(mc_p.as_ref().ok().map(|m| m.std_err_ee)),
            opt(asym_p),
            gap,
        ]);
    }
    Ok(d)
}

fn fig_ee_vs_pt(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let coeffs = PowerCoeffs::new(&scenario.config, &k);
    let mut d = Dataset::new(
        Figure::EeVsPt,
        &[
            "pt_dbm",
            "pt_w",
            "ee_active",
            "ee_active_large_pt",
            "ee_passive",
        ],
    );
    for pt_dbm in spec.grid() {
        let pt = dbm_to_watts(pt_dbm);
        let mut c = scenario.config.clone();
        c.total_power_w = pt;
        let passive = ee_asymptotic_passive(&c, &k)
            .ok()
            .and_then(|r| r.ee_bits_per_joule);
        d.push(vec![
            pt_dbm.into(),
            pt.into(),
            coeffs.ee(pt).into(),
            coeffs.ee_large_pt(pt).into(),
            passive.map_or(Cell::Empty, Cell::Num),
        ]);
    }
    d.note("limit_pt_infinity", 0.0);
    Ok(d)
}

fn fig_ee_vs_sigma_r(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let coeffs = RisNoiseCoeffs::new(&scenario.config, &k);
    let limit = coeffs.limit_at_zero()?;
    let mut d = Dataset::new(
        Figure::EeVsSigmaR,
        &[
            "sigma_r_dbm",
            "sigma_r_w",
            "ee_active",
            "limit_sigma_r_zero",
        ],
    );
    for s_dbm in spec.grid() {
        let s = dbm_to_watts(s_dbm);
        d.push(vec![
            s_dbm.into(),
            s.into(),
            coeffs.ee(s).into(),
            limit.into(),
        ]);
    }
    d.note("limit_sigma_r_zero", format!("{limit:.11e}"));
    Ok(d)
}

fn fig_ee_vs_sigma_u(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let coeffs = UserNoiseCoeffs::new(&scenario.config, &k);
    let limit = coeffs.limit_at_zero()?;
    let mut d = Dataset::new(
        Figure::EeVsSigmaU,
        &[
            "sigma_u_dbm",
            "sigma_u_w",
            "ee_active",
            "ee_passive",
            "limit_sigma_u_zero",
        ],
    );
    for s_dbm in spec.grid() {
        let s = dbm_to_watts(s_dbm);
        let mut c = scenario.config.clone();
        c.noise_user_w = s;
        let passive = ee_asymptotic_passive(&c, &k)
            .ok()
            .and_then(|r| r.ee_bits_per_joule);
        d.push(vec![
            s_dbm.into(),
            s.into(),
            coeffs.ee(s).into(),
            passive.map_or(Cell::Empty, Cell::Num),
            limit.into(),
        ]);
    }
    d.note("limit_sigma_u_zero", format!("{limit:.11e}"));
    Ok(d)
}

fn fig_ee_vs_beta(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let mut d = Dataset::new(
        Figure::EeVsBeta,
        &["pt_dbm", "beta", "ee_active", "ee_taylor"],
    );
    for &pt_dbm in &spec.pt_curves_dbm {
        let mut c = scenario.config.clone();
        c.total_power_w = dbm_to_watts(pt_dbm);
        let q = BetaCoeffs::new(&c, &k);
        let model = TaylorBetaModel::new(&q).ok();
        for beta in spec.grid() {
            let taylor = model
                .as_ref()
                .map_or(Cell::Empty, |m| taylor_ee(beta, m).into());
            d.push(vec![pt_dbm.into(), beta.into(), q.ee(beta).into(), taylor]);
        }
        match optimal_beta(&c, &k) {
            Ok(opt) => {
                d.note(&format!("beta_b@{pt_dbm}dBm"), format!("{:.11e}", opt.beta));
                d.note(
                    &format!("ee_beta_b@{pt_dbm}dBm"),
                    format!("{:.11e}", opt.ee),
                );
            }
            Err(e) => d.note(&format!("beta_b@{pt_dbm}dBm"), format!("error: {e}")),
        }
    }
    Ok(d)
}

/// All configured solvers on the scenario's crossover function.
pub fn solver_reports(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Vec<RootSolveReport>> {
    let k = scenario.constants()?;
    let m = CrossoverCoeffs::new(&scenario.config, &k);
    let tol = Tolerance::default();
    spec.methods
        .iter()
        .map(|method| match method {
            Method::Newton => solve_newton(&m, NEWTON_START, tol),
            Method::Bisection => solve_bisection(&m, tol),
            Method::Annealing => solve_annealing(
                &m,
                &AnnealingSchedule {
                    tol: tol.residual,
                    ..AnnealingSchedule::default()
                },
                spec.seed,
            ),
        })
        .collect()
}

fn fig_solver_convergence(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let mut d = Dataset::new(
        Figure::SolverConvergence,
        &["method", "iteration", "alpha", "n", "f", "residual"],
    );
    for r in solver_reports(spec, scenario)? {
        for p in &r.trace {
            d.push(vec![
                Cell::Text(r.method.name().into()),
                Cell::Int(p.iteration as u64),
                p.alpha.into(),
                (1.0 / p.alpha).into(),
                p.f.into(),
                p.residual.into(),
            ]);
        }
        d.note(
            &format!("{}_alpha_root", r.method.name()),
            format!("{:.11e}", r.alpha_root),
        );
        d.note(&format!("{}_iterations", r.method.name()), r.iterations);
        let to = r
            .iterations_to(1e-6)
            .map_or("never".to_string(), |i| i.to_string());
        d.note(&format!("{}_iterations_to_1e-6", r.method.name()), to);
    }
    Ok(d)
}

fn fig_f_vs_n(spec: &ExperimentSpec, scenario: &Scenario) -> Result<Dataset> {
    let k = scenario.constants()?;
    let mut d = Dataset::new(
        Figure::FVsN,
        &[
            "pt_dbm",
            "n",
            "alpha",
            "f",
            "f1",
            "f2",
            "ee_active",
            "ee_passive",
        ],
    );
    for &pt_dbm in &spec.pt_curves_dbm {
        let mut c = scenario.config.clone();
        c.total_power_w = dbm_to_watts(pt_dbm);
        let m = CrossoverCoeffs::new(&c, &k);
        for n in spec.grid() {
            let a = 1.0 / n;
            d.push(vec![
                pt_dbm.into(),
                n.into(),
                a.into(),
                m.f(a).into(),
                m.f1(a).into(),
                m.f2(a).into(),
                crate::crossover::ee_active_of_n(n, &m).into(),
                crate::crossover::ee_passive_of_n(n, &m).into(),
            ]);
        }
        match solve_bisection(&m, Tolerance::default()) {
            Ok(r) => d.note(
                &format!("n0@{pt_dbm}dBm"),
                format!("{:.11e}", r.n_equivalent),
            ),
            Err(e) => d.note(&format!("n0@{pt_dbm}dBm"), format!("error: {e}")),
        }
    }
    Ok(d)
}

/// Sidecar path next to the CSV: `out.csv` → `out.csv.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Runs the spec and writes the CSV and its sidecar.
pub fn run_to_files(spec: &ExperimentSpec, scenario: &Scenario, out: &Path) -> Result<Dataset> {
    let data = run(spec, scenario)?;
    let io = |e: std::io::Error| invalid("output", format!("{}: {e}", out.display()));
    let file = std::fs::File::create(out).map_err(io)?;
    data.write_csv(std::io::BufWriter::new(file), spec, scenario)?;

    let sidecar = Sidecar {
        figure: spec.figure,
        version: VERSION.to_string(),
        seed: spec.seed,
        trials: spec.trials,
        grid: spec.grid(),
        methods: spec.methods.clone(),
        pt_curves_dbm: spec.pt_curves_dbm.clone(),
        annealing: AnnealingSchedule::default(),
        scenario: scenario.clone(),
        columns: data.columns.clone(),
        summary: data.summary.clone(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let json =
        serde_json::to_string_pretty(&sidecar).map_err(|e| invalid("output", e.to_string()))?;
    std::fs::write(sidecar_path(out), json + "\n").map_err(io)?;
    Ok(data)
}

/// Summary printed by `optimal-beta`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BetaReport {
    pub pt_w: f64,
    pub candidates: Vec<f64>,
    pub beta_b: f64,
    pub ee_beta_b: f64,
    pub grid_points: usize,
    pub grid_argmax: f64,
    pub ee_grid_max: f64,
}

pub fn report_optimal_beta(scenario: &Scenario, grid_points: usize) -> Result<BetaReport> {
    check_scenario(scenario)?;
    if grid_points < 2 {
        return Err(invalid("grid_points", "need at least 2"));
    }
    let k = scenario.constants()?;
    let BetaOptimum {
        beta,
        ee,
        candidates,
        ..
    } = optimal_beta(&scenario.config, &k)?;
    let (grid_argmax, ee_grid_max) =
        grid_argmax(&BetaCoeffs::new(&scenario.config, &k), grid_points)?;
    Ok(BetaReport {
        pt_w: scenario.config.total_power_w,
        candidates,
        beta_b: beta,
        ee_beta_b: ee,
        grid_points,
        grid_argmax,
        ee_grid_max,
    })
}

/// Argmax of the full EE over `points` evenly spaced β in `[0, 1]`.
pub fn grid_argmax(q: &BetaCoeffs, points: usize) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..points {
        let b = i as f64 / (points - 1) as f64;
        let e = q.ee(b)?;
        if e > best.1 {
            best = (b, e);
        }
    }
    Ok(best)
}
