use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memcap::experiment::{emit_csv, emit_plot, reservoir_seed, run_point, run_sweep, SweepConfig};
use memcap::{
    dynamics::{default_washout, run, thresholds_for, InputProcess},
    linear_mc_oracle, Activation, Ensemble, Error, ReservoirSpec,
};
use nalgebra::DVector;

#[derive(Parser)]
#[command(
    name = "memcap",
    version,
    about = "Memory capacity of echo state networks under input rescaling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep sigma over a grid and aggregate total MC per grid point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Full result (config echo, per-cell outcomes) as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        fixed_reservoir: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Total MC of one reservoir at one input scale.
    Mc {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value = "orthogonal")]
        ensemble: Ensemble,
        #[arg(long, default_value = "tanh")]
        activation: Activation,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.95)]
        spectral_norm: f64,
        #[arg(long, default_value_t = 100_000)]
        length: usize,
        #[arg(long)]
        tau_max: Option<usize>,
        #[arg(long, default_value_t = memcap::capacity::DEFAULT_RELATIVE_RIDGE)]
        ridge: f64,
        /// Flat profile record.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump the post-washout trajectory as columns.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Save the sampled reservoir as JSON.
        #[arg(long)]
        spec_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the saturation and linearity thresholds of a config's reservoir.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
        /// Which replication's reservoir to use.
        #[arg(long, default_value_t = 0)]
        replication: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Per-lag MC of the linear network (population values).
    Oracle {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value = "orthogonal")]
        ensemble: Ensemble,
        #[arg(long, default_value_t = 0.95)]
        spectral_norm: f64,
        #[arg(long)]
        tau_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Io { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    // Usage errors are configuration errors; clap's own code 2 would read as
    // "every cell failed".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> memcap::Result<u8> {
    match cmd {
        Command::Sweep {
            config,
            out,
            plot,
            json,
            fixed_reservoir,
            common,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(seed) = common.seed {
                cfg.base_seed = seed;
            }
            cfg.fixed_reservoir |= fixed_reservoir;
            let res = run_sweep(&cfg, common.jobs)?;
            for row in &res.rows {
                println!(
                    "sigma={:.6e} mc_mean={:.4} mc_sd={:.4} ok={} failed={} sat={} lin={} mid={}",
                    row.sigma,
                    row.mc_mean,
                    row.mc_sd,
                    row.n_ok,
                    row.n_failed,
                    row.regime_saturated,
                    row.regime_linear,
                    row.regime_intermediate
                );
            }
            if let Some(path) = out {
                emit_csv(&res, &path)?;
            }
            if let Some(path) = plot {
                emit_plot(&res, &path)?;
            }
            if let Some(path) = json {
                std::fs::write(&path, res.to_json()?).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(if res.all_failed() { 2 } else { 0 })
        }
        Command::Mc {
            n,
            ensemble,
            activation,
            sigma,
            spectral_norm,
            length,
            tau_max,
            ridge,
            out,
            trajectory,
            spec_out,
            common,
        } => {
            let mut cfg = SweepConfig::new(ensemble, activation);
            cfg.n = n;
            cfg.spectral_norm = spectral_norm;
            cfg.trajectory_length = length;
            cfg.tau_max = tau_max;
            cfg.ridge = ridge;
            cfg.base_seed = common.seed.unwrap_or(0);
            cfg.validate()?;
            let point = run_point(&cfg, sigma, 0)?;
            println!(
                "sigma={sigma:e} total_mc={:.6} regime={:?} lags={} clipped={} condition={:.3e}",
                point.profile.total,
                point.regime,
                point.profile.per_lag.len(),
                point.profile.diagnostics.clip_count,
                point.profile.diagnostics.condition
            );
            match out {
                Some(path) => {
                    let file =
                        std::fs::File::create(&path).map_err(|e| Error::Io { path, source: e })?;
                    point.profile.write_record(sigma, file)?;
                }
                None => point.profile.write_record(sigma, std::io::stdout())?,
            }
            if let Some(path) = spec_out {
                std::fs::write(&path, point.spec.to_text()?)
                    .map_err(|e| Error::Io { path, source: e })?;
            }
            if let Some(path) = trajectory {
                let process = InputProcess::new(
                    sigma,
                    length,
                    default_washout(n),
                    memcap::experiment::input_seed(&cfg, 0, 0),
                );
                let traj = run(&point.spec, activation, &process, &DVector::zeros(n))?;
                traj.write_columns(&path)?;
            }
            Ok(0)
        }
        Command::Thresholds {
            config,
            replication,
            common,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(seed) = common.seed {
                cfg.base_seed = seed;
            }
            let spec = ReservoirSpec::sample(
                cfg.n,
                cfg.ensemble,
                cfg.spectral_norm,
                reservoir_seed(&cfg, 0, replication),
            )?;
            let (delta, d) = cfg.grid_threshold_params();
            let th = thresholds_for(&spec, delta, d)?;
            println!("delta                      {delta}");
            println!("d                          {d}");
            println!("sigma_lower                {:e}", th.sigma_lower);
            println!("sigma_upper                {:e}", th.sigma_upper);
            println!("sigma_lower_loose          {:e}", th.sigma_lower_loose);
            println!("sigma_upper_loose          {:e}", th.sigma_upper_loose);
            println!(
                "sigma_upper_loose_induced  {:e}",
                th.sigma_upper_loose_induced
            );
            Ok(0)
        }
        Command::Oracle {
            n,
            ensemble,
            spectral_norm,
            tau_max,
            common,
        } => {
            let spec = ReservoirSpec::sample(n, ensemble, spectral_norm, common.seed.unwrap_or(0))?;
            let profile = linear_mc_oracle(&spec, tau_max.unwrap_or(200))?;
            println!("tau,mc");
            for (tau, mc) in profile.per_lag.iter().enumerate() {
                println!("{tau},{mc}");
            }
            eprintln!("total = {}", profile.total);
            Ok(0)
        }
    }
}
