use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kerr_dce::scenarios::{self, ScenarioConfig};
use kerr_dce::Error;

#[derive(Parser)]
#[command(name = "kerr-dce", version, about = "Photon generation from vacuum by modulated cavity nonlinearities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a builtin scenario.
    #[arg(long)]
    builtin: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        match (&self.config, &self.builtin) {
            (Some(path), _) => ScenarioConfig::from_file(path),
            (_, Some(name)) => scenarios::builtin(name),
            _ => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write `<name>.csv` and `<name>.summary.json`.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, env = "KERR_DCE_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Print the dressed ladder of the static Hamiltonian as CSV.
    Spectrum {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 7)]
        levels: usize,
    },
    /// Evaluate the `[sweep]` grid and write `<name>.sweep.csv`.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = "KERR_DCE_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Search a frequency bracket for the strongest photon growth.
    Resonance {
        #[command(flatten)]
        source: Source,
        /// `lo,hi`; defaults to the `[resonance]` table.
        #[arg(long, value_parser = parse_bracket)]
        bracket: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List builtin scenario names.
    Builtins,
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn execute(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Run { source, out } => {
            let cfg = source.load()?;
            let outcome = scenarios::run(&cfg)?;
            let s = &outcome.summary;
            println!(
                "t_star = {}  max <n> = {}  Q(t_star) = {}  n_max = {}",
                s.t_star, s.max_mean_n, s.mandel_q_at_t_star, outcome.n_max
            );
            for path in scenarios::export(&outcome, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Spectrum { source, levels } => {
            let cfg = source.load()?;
            let rows = scenarios::spectrum(&cfg, levels)?;
            scenarios::write_spectrum_csv(&rows, std::io::stdout().lock())?;
        }
        Command::Sweep { source, jobs, out } => {
            let cfg = source.load()?;
            let table = scenarios::sweep(&cfg, jobs)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join(format!("{}.sweep.csv", cfg.name));
            table.write_csv(fs::File::create(&path)?)?;
            let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
            println!("wrote {} ({} points, {failed} failed)", path.display(), table.rows.len());
        }
        Command::Resonance { source, bracket, jobs } => {
            let cfg = source.load()?;
            let report = scenarios::resonance_scan(&cfg, bracket, jobs)?;
            println!("eta_star = {}", report.eta_star);
            println!("peak <n> = {} within t = {}", report.peak_mean_n, report.probe_horizon);
        }
        Command::Builtins => {
            for name in scenarios::builtin_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let convergence = e.downcast_ref::<Error>().is_some_and(Error::is_convergence_failure);
            ExitCode::from(if convergence { 3 } else { 2 })
        }
    }
}
