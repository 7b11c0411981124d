use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use surfreach::explore::Algorithm;
use surfreach_cli::commands::{self, default_jobs, ParamOverrides};

#[derive(Parser)]
#[command(name = "surfreach", version, about = "Estimate the continuously reachable part of a surface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Rrt,
    Biased,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Rrt => Algorithm::Rrt,
            Algo::Biased => Algorithm::Biased,
        }
    }
}

#[derive(Args)]
struct Overrides {
    /// Sample attempts per run (defaults to the scenario's budget)
    #[arg(long)]
    samples: Option<u64>,
    /// Wall-clock limit per run in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    /// Standard deviation of biased Gaussian sampling
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    delta_check: Option<f64>,
    #[arg(long)]
    exterior_bias: Option<f64>,
}

impl From<&Overrides> for ParamOverrides {
    fn from(o: &Overrides) -> Self {
        ParamOverrides {
            samples: o.samples,
            time_limit: o.time_limit,
            d_max: o.d_max,
            sigma_sample: o.sigma,
            delta_check: o.delta_check,
            exterior_bias: o.exterior_bias,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Explore a scenario and write coverage artifacts
    Explore {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long, required_unless_present = "repeats", conflicts_with = "repeats")]
        seed: Option<u64>,
        /// Run seeds 1..=K into OUT/seed-K
        #[arg(long)]
        repeats: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Point-reachability baseline by exhaustive random projection
    Baseline {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of draws (defaults to the scenario's baseline_samples)
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a run against a baseline
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
    },
    /// Repeat runs over a list of parameter values
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        /// d_max, sigma_sample, delta_check or exterior_bias
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Existing baseline directory; computed into OUT when absent
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Draws for a computed baseline
        #[arg(long)]
        baseline_samples: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Explore {
            scenario,
            algo,
            seed,
            repeats,
            overrides,
            out,
        } => {
            let seeds: Vec<u64> = match (seed, repeats) {
                (Some(s), _) => vec![*s],
                (None, Some(k)) => (1..=*k).collect(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::cmd_explore(scenario, (*algo).into(), &overrides.into(), &seeds, out).map(drop)
        }
        Command::Baseline {
            scenario,
            samples,
            seed,
            jobs,
            out,
        } => commands::cmd_baseline(scenario, *samples, *seed, *jobs, out).map(drop),
        Command::Report { run, baseline } => commands::cmd_report(run, baseline).map(drop),
        Command::Sweep {
            scenario,
            algo,
            param,
            values,
            repeats,
            jobs,
            baseline,
            baseline_samples,
            overrides,
            out,
        } => commands::cmd_sweep(
            scenario,
            (*algo).into(),
            param,
            values,
            *repeats,
            *jobs,
            &overrides.into(),
            baseline.as_deref(),
            *baseline_samples,
            out,
        )
        .map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
