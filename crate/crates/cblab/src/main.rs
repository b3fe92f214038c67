//! Command-line driver for the lattice elastodynamics laboratory.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use cblab::harness::{
    run_convergence_study, run_garding_study, run_residual_study, run_simulate,
    run_stability_map, RunOptions, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "cblab",
    about = "Lattice elastodynamics laboratory: simulations, residual and convergence studies, \
             stability maps, and coercivity verification",
    long_about = "Each subcommand reads one scenario configuration (JSON; the schema ships at \
                  schema/scenario.schema.json) and writes CSV files into the output directory.\n\
                  Exit codes: 0 success, 2 precondition or hypothesis failure, 3 numerical \
                  failure (solver or admissibility), 4 configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (JSON).
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the epsilon ladder; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one lattice trajectory at the coarsest epsilon.
    ///
    /// Writes trajectory.csv (t, site, site position, position and
    /// velocity components, stride-sampled) and diagnostics.csv
    /// (t, energy, norm_energy, min_margin).
    Simulate(CommonArgs),
    /// Measure the lattice residual of the mollified reference across
    /// the epsilon ladder and fit its decay rate.
    ///
    /// Writes residual.csv (epsilon, interior_sites, residual_l2) and
    /// residual_fit.csv (slope, intercept, residual_rms, exact_zero).
    Residual(CommonArgs),
    /// Integrate the lattice problem against manufactured data across
    /// the epsilon ladder and fit the convergence rate.
    ///
    /// Writes converge.csv (epsilon, sites, interior_sites, steps, dt,
    /// sup_energy_root, sup_error_sum, perturbation norms) and
    /// converge_fit.csv.
    Converge(CommonArgs),
    /// Map the stability constants over a grid of homogeneous
    /// deformations.
    ///
    /// Writes stability_map.csv (parameter, deformation entries,
    /// lambda_lh, lambda_atom, minimizing wave vector, optional
    /// lambda_eps, sign_split, status).
    StabilityMap(CommonArgs),
    /// Verify the coercivity hypotheses of a reference coefficient field
    /// and measure the minimal penalty weight per epsilon.
    ///
    /// Writes garding.csv (epsilon, lambda1, r, mu_min, lambda2_star,
    /// status).
    Garding(CommonArgs),
}

fn options(cfg: &ScenarioConfig, args: &CommonArgs) -> RunOptions {
    let mut opts = RunOptions::from_config(cfg);
    if let Some(out) = &args.out {
        opts.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    opts.threads = args.threads;
    opts.quiet = args.quiet;
    opts
}

fn run(
    args: &CommonArgs,
    f: impl Fn(&ScenarioConfig, &RunOptions) -> cblab::Result<()>,
) -> ExitCode {
    let cfg = match ScenarioConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let opts = options(&cfg, args);
    match f(&cfg, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => run(a, |c, o| run_simulate(c, o)),
        Command::Residual(a) => run(a, |c, o| run_residual_study(c, o).map(|_| ())),
        Command::Converge(a) => run(a, |c, o| run_convergence_study(c, o).map(|_| ())),
        Command::StabilityMap(a) => run(a, |c, o| run_stability_map(c, o).map(|_| ())),
        Command::Garding(a) => run(a, |c, o| run_garding_study(c, o).map(|_| ())),
    }
}
