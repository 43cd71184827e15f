use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_ee::crossover::{crossover_n, Method};
use ris_ee::experiments::{
    check_scenario, report_optimal_beta, run, run_to_files, ExperimentSpec, Figure,
};
use ris_ee::Scenario;

#[derive(Parser)]
#[command(
    version,
    about = "Energy efficiency of active and passive RIS-assisted links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a figure sweep and write CSV plus a JSON sidecar.
    Run {
        #[arg(long)]
        figure: Figure,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Output CSV; `-` writes to stdout without a sidecar.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        method: MethodArg,
        /// Comma-separated sweep values overriding the default grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Closed-form optimal power split, compared with a grid search.
    OptimalBeta {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        grid_points: usize,
        #[arg(long)]
        json: bool,
    },
    /// Element count where active and passive EE are equal.
    Crossover {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        method: MethodArg,
        #[arg(long)]
        json: bool,
    },
    /// Print the default configuration file.
    DefaultConfig,
}

#[derive(Clone, Copy)]
struct MethodArg(Option<Method>);

impl std::str::FromStr for MethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(MethodArg(None));
        }
        s.parse()
            .map(|m| MethodArg(Some(m)))
            .map_err(|e: ris_ee::Error| e.to_string())
    }
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        self.0.map_or_else(|| Method::ALL.to_vec(), |m| vec![m])
    }
}

fn load(config: Option<&PathBuf>) -> Result<Scenario, String> {
    let scenario = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Scenario::from_kv_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Scenario::default(),
    };
    check_scenario(&scenario).map_err(|e| e.to_string())?;
    Ok(scenario)
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            figure,
            config,
            seed,
            trials,
            out,
            method,
            grid,
        } => {
            let scenario = load(config.as_ref())?;
            let spec = ExperimentSpec {
                grid,
                trials,
                seed,
                methods: method.methods(),
                ..ExperimentSpec::new(figure)
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{figure}.csv")));
            if out.as_os_str() == "-" {
                let data = run(&spec, &scenario).map_err(|e| e.to_string())?;
                data.write_csv(std::io::stdout().lock(), &spec, &scenario)
                    .map_err(|e| e.to_string())?;
            } else {
                let data = run_to_files(&spec, &scenario, &out).map_err(|e| e.to_string())?;
                log::info!("wrote {} rows to {}", data.rows.len(), out.display());
            }
        }
        Command::OptimalBeta {
            config,
            grid_points,
            json,
        } => {
            let scenario = load(config.as_ref())?;
            let r = report_optimal_beta(&scenario, grid_points).map_err(|e| e.to_string())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?
                );
            } else {
                println!("candidates    {:?}", r.candidates);
                println!("beta_b        {:.6}", r.beta_b);
                println!("ee(beta_b)    {:.6e} bit/J", r.ee_beta_b);
                println!(
                    "grid argmax   {:.6} ({} points, ee {:.6e})",
                    r.grid_argmax, r.grid_points, r.ee_grid_max
                );
            }
        }
        Command::Crossover {
            config,
            method,
            json,
        } => {
            let scenario = load(config.as_ref())?;
            let k = scenario.constants().map_err(|e| e.to_string())?;
            let reports = method
                .methods()
                .into_iter()
                .map(|m| crossover_n(&scenario.config, &k, m))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?
                );
            } else {
                for r in reports {
                    println!(
                        "{:<10} N0 = {:.4} (floor {} f={:+.3e}, ceil {} f={:+.3e}), {} iterations, residual {:.2e}",
                        r.solve.method.name(),
                        r.n0,
                        r.n_floor,
                        r.f_at_floor,
                        r.n_ceil,
                        r.f_at_ceil,
                        r.solve.iterations,
                        r.solve.residual
                    );
                }
            }
        }
        Command::DefaultConfig => print!("{}", Scenario::default().to_kv_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
