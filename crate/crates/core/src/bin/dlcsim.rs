//! Command-line front end: direct-load-control simulation and
//! inferential-privacy bounds for smart-meter sampling policies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dlc_privacy::commands::{
    cmd_gen_population, cmd_privacy, cmd_simulate, cmd_sweep, cmd_tradeoff, DEFAULT_MC_SAMPLES,
    DEFAULT_SWEEP_TRIALS,
};
use dlc_privacy::Error;

#[derive(Parser)]
#[command(
    name = "dlcsim",
    version,
    about = "Direct load control of thermostatically controlled loads under reduced-frequency \
             metering, with inferential-privacy bounds per sampling policy"
)]
struct Cli {
    /// Worker threads (default: all cores). Output is identical for any
    /// value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a TCL population and write it as JSON.
    GenPopulation {
        /// Scenario config JSON (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one closed-loop trial; write the trajectory CSV and envelope.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Disable the controller (uncontrolled baseline).
        #[arg(long)]
        uncontrolled: bool,
        /// Output prefix; writes <out>.csv and <out>.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo sweep of the sampling period; box statistics per h.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated sampling periods in minutes (default
        /// 1,2,5,10,15,30,60).
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        /// Trials per sampling period.
        #[arg(long, default_value_t = DEFAULT_SWEEP_TRIALS)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inferential-privacy bounds per sampling period.
    Privacy {
        /// Bundled scenario name (recs-income) or a scenario JSON path.
        #[arg(long, default_value = "recs-income")]
        scenario: String,
        /// Override the scenario's scaling rule (location-shift or
        /// explicit-table).
        #[arg(long)]
        scaling: Option<String>,
        /// Comma-separated sampling periods in minutes (default: the
        /// table's rows, or 1..window for location-shift).
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        /// Comma-separated methods: map-exact, map-mc, lecam-pinsker,
        /// lecam-exact-tv, fano.
        #[arg(long)]
        methods: Option<String>,
        /// Monte Carlo sample count for map-mc.
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joined utility-privacy table: tracking error and alpha per h.
    Tradeoff {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "recs-income")]
        scenario: String,
        #[arg(long)]
        scaling: Option<String>,
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_SWEEP_TRIALS)]
        trials: usize,
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> dlc_privacy::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::GenPopulation { config, seed, out } => {
            cmd_gen_population(config.as_deref(), seed, &out)
        }
        Command::Simulate { config, seed, uncontrolled, out } => {
            cmd_simulate(config.as_deref(), seed, uncontrolled, &out)
        }
        Command::Sweep { config, seed, h_list, trials, out } => {
            cmd_sweep(config.as_deref(), seed, h_list, trials, &out)
        }
        Command::Privacy { scenario, scaling, h_list, methods, mc_samples, seed, out } => {
            cmd_privacy(
                &scenario,
                scaling.as_deref(),
                h_list,
                methods.as_deref(),
                mc_samples,
                seed,
                &out,
            )
        }
        Command::Tradeoff {
            config,
            scenario,
            scaling,
            h_list,
            trials,
            methods,
            mc_samples,
            seed,
            out,
        } => cmd_tradeoff(
            config.as_deref(),
            &scenario,
            scaling.as_deref(),
            h_list,
            trials,
            methods.as_deref(),
            mc_samples,
            seed,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
