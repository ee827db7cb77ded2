use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SigmaBounds, SweepConfig};
use crate::capacity::{estimate_total_mc, CapacityProfile};
use crate::dynamics::{classify_regime, run, thresholds_for, InputProcess, Regime};
use crate::ensembles::ReservoirSpec;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

const RESERVOIR_DOMAIN: u64 = 0;
const INPUT_DOMAIN: u64 = 1;

/// Seed of the reservoir used in cell `(sigma_index, replication)`.
pub fn reservoir_seed(cfg: &SweepConfig, sigma_index: usize, replication: usize) -> u64 {
    if cfg.fixed_reservoir {
        derive_seed(cfg.base_seed, &[RESERVOIR_DOMAIN, replication as u64])
    } else {
        derive_seed(
            cfg.base_seed,
            &[RESERVOIR_DOMAIN, sigma_index as u64, replication as u64],
        )
    }
}

pub fn input_seed(cfg: &SweepConfig, sigma_index: usize, replication: usize) -> u64 {
    derive_seed(
        cfg.base_seed,
        &[INPUT_DOMAIN, sigma_index as u64, replication as u64],
    )
}

/// Outcome of one `(sigma, replication)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub sigma_index: usize,
    pub replication: usize,
    pub reservoir_seed: u64,
    pub input_seed: u64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Ok {
        total: f64,
        regime: Regime,
        per_lag: Vec<f64>,
    },
    Failed {
        reason: String,
    },
}

/// One grid point, aggregated over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub mc_mean: f64,
    pub mc_sd: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub regime_saturated: usize,
    pub regime_linear: usize,
    pub regime_intermediate: usize,
    /// Mean per-lag profile over successful cells, zero-padded past an
    /// early stop.
    pub per_lag_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub base_seed: u64,
    /// Resolved grid bounds.
    pub sigma_lower: f64,
    pub sigma_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellResult>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.n_ok == 0)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sigma).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mc_mean).collect()
    }
}

/// Draw every reservoir of the sweep, indexed `[sigma_index][replication]`.
/// Failures are kept as messages so the affected cells can report them.
fn draw_reservoirs(cfg: &SweepConfig) -> Vec<Vec<std::result::Result<ReservoirSpec, String>>> {
    let draw = |s: usize, r: usize| {
        ReservoirSpec::sample(
            cfg.n,
            cfg.ensemble,
            cfg.spectral_norm,
            reservoir_seed(cfg, s, r),
        )
        .map_err(|e| e.to_string())
    };
    if cfg.fixed_reservoir {
        let shared: Vec<_> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| draw(0, r))
            .collect();
        vec![shared; cfg.sigma_grid.count]
    } else {
        (0..cfg.sigma_grid.count)
            .into_par_iter()
            .map(|s| (0..cfg.replications).map(|r| draw(s, r)).collect())
            .collect()
    }
}

/// Grid bounds: explicit, or the widest `[sigma_lower, sigma_upper]` over
/// all reservoirs of the sweep, so both ends lie beyond every cell's own
/// threshold.
fn resolve_bounds(
    cfg: &SweepConfig,
    reservoirs: &[Vec<std::result::Result<ReservoirSpec, String>>],
) -> Result<(f64, f64)> {
    match cfg.sigma_grid.bounds {
        SigmaBounds::Explicit(lo, hi) => Ok((lo, hi)),
        SigmaBounds::Auto => {
            let (delta, d) = cfg.grid_threshold_params();
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for spec in reservoirs.iter().flatten().flatten() {
                if let Ok(th) = thresholds_for(spec, delta, d) {
                    lo = lo.min(th.sigma_lower);
                    hi = hi.max(th.sigma_upper);
                }
            }
            if lo.is_finite() && hi > lo {
                Ok((lo, hi))
            } else {
                Err(Error::Config(
                    "could not derive automatic sigma bounds from any reservoir".into(),
                ))
            }
        }
    }
}

fn run_cell(
    cfg: &SweepConfig,
    spec: &ReservoirSpec,
    sigma: f64,
    seed: u64,
) -> Result<(CapacityProfile, Regime)> {
    let process = InputProcess::new(sigma, cfg.trajectory_length, cfg.washout(), seed);
    let traj = run(spec, cfg.activation, &process, &DVector::zeros(cfg.n))?;
    let regime = classify_regime(&traj, sigma);
    let profile = estimate_total_mc(&traj, &cfg.estimator())?;
    Ok((profile, regime))
}

/// Run the full `(sigma grid x replications)` sweep on `jobs` threads.
/// Output does not depend on `jobs`.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| sweep_in_pool(cfg))
}

fn sweep_in_pool(cfg: &SweepConfig) -> Result<SweepResult> {
    let reservoirs = draw_reservoirs(cfg);
    let (lo, hi) = resolve_bounds(cfg, &reservoirs)?;
    let sigmas = cfg.sigma_grid.points(lo, hi);

    let work: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|s| (0..cfg.replications).map(move |r| (s, r)))
        .collect();
    let cells: Vec<CellResult> = work
        .par_iter()
        .map(|&(s, r)| {
            let outcome = match &reservoirs[s][r] {
                Err(reason) => CellOutcome::Failed {
                    reason: reason.clone(),
                },
                Ok(spec) => match run_cell(cfg, spec, sigmas[s], input_seed(cfg, s, r)) {
                    Ok((profile, regime)) => CellOutcome::Ok {
                        total: profile.total,
                        regime,
                        per_lag: profile.per_lag,
                    },
                    Err(e) => CellOutcome::Failed {
                        reason: e.to_string(),
                    },
                },
            };
            CellResult {
                sigma_index: s,
                replication: r,
                reservoir_seed: reservoir_seed(cfg, s, r),
                input_seed: input_seed(cfg, s, r),
                outcome,
            }
        })
        .collect();

    let rows = sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| aggregate(sigma, cells.iter().filter(|c| c.sigma_index == s)))
        .collect();

    Ok(SweepResult {
        config: cfg.clone(),
        rows,
        cells,
        provenance: Provenance {
            version: concat!("memcap ", env!("CARGO_PKG_VERSION")).to_string(),
            base_seed: cfg.base_seed,
            sigma_lower: lo,
            sigma_upper: hi,
        },
    })
}

fn aggregate<'a>(sigma: f64, cells: impl Iterator<Item = &'a CellResult>) -> SweepRow {
    let mut totals = Vec::new();
    let mut profiles: Vec<&[f64]> = Vec::new();
    let mut row = SweepRow {
        sigma,
        mc_mean: f64::NAN,
        mc_sd: f64::NAN,
        n_ok: 0,
        n_failed: 0,
        regime_saturated: 0,
        regime_linear: 0,
        regime_intermediate: 0,
        per_lag_mean: Vec::new(),
    };
    for cell in cells {
        match &cell.outcome {
            CellOutcome::Ok {
                total,
                regime,
                per_lag,
            } => {
                row.n_ok += 1;
                totals.push(*total);
                profiles.push(per_lag);
                match regime {
                    Regime::Saturated => row.regime_saturated += 1,
                    Regime::LinearEquivalent => row.regime_linear += 1,
                    Regime::Intermediate => row.regime_intermediate += 1,
                }
            }
            CellOutcome::Failed { .. } => row.n_failed += 1,
        }
    }
    if !totals.is_empty() {
        let k = totals.len() as f64;
        let mean = totals.iter().sum::<f64>() / k;
        row.mc_mean = mean;
        row.mc_sd = if totals.len() > 1 {
            (totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        let width = profiles.iter().map(|p| p.len()).max().unwrap_or(0);
        row.per_lag_mean = (0..width)
            .map(|tau| {
                profiles
                    .iter()
                    .map(|p| p.get(tau).copied().unwrap_or(0.0))
                    .sum::<f64>()
                    / k
            })
            .collect();
    }
    row
}

/// Single-point run: one reservoir, one input scale.
pub struct PointRun {
    pub spec: ReservoirSpec,
    pub profile: CapacityProfile,
    pub regime: Regime,
}

pub fn run_point(cfg: &SweepConfig, sigma: f64, replication: usize) -> Result<PointRun> {
    let spec = ReservoirSpec::sample(
        cfg.n,
        cfg.ensemble,
        cfg.spectral_norm,
        reservoir_seed(cfg, 0, replication),
    )?;
    let (profile, regime) = run_cell(cfg, &spec, sigma, input_seed(cfg, 0, replication))?;
    Ok(PointRun {
        spec,
        profile,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::Activation;
    use crate::ensembles::Ensemble;

    fn small(activation: Activation) -> SweepConfig {
        let mut cfg = SweepConfig::new(Ensemble::OrthogonalGaussian, activation);
        cfg.n = 6;
        cfg.trajectory_length = 4000;
        cfg.washout = Some(200);
        cfg.replications = 2;
        cfg.sigma_grid.count = 3;
        cfg
    }

    #[test]
    fn cell_counts_add_up() {
        let res = run_sweep(&small(Activation::Tanh), 2).unwrap();
        assert_eq!(res.rows.len(), 3);
        for row in &res.rows {
            assert_eq!(row.n_ok + row.n_failed, 2);
            assert!(row.mc_mean >= 0.0 && row.mc_mean <= 6.0);
        }
    }

    #[test]
    fn auto_bounds_bracket_every_reservoir() {
        let cfg = small(Activation::piecewise(0.5, 2.0).unwrap());
        let res = run_sweep(&cfg, 1).unwrap();
        let first = &res.rows[0];
        let last = res.rows.last().unwrap();
        assert_eq!(first.regime_linear, 2);
        assert_eq!(last.regime_saturated, 2);
    }

    #[test]
    fn fixed_reservoir_reuses_draws() {
        let mut cfg = small(Activation::Tanh);
        cfg.fixed_reservoir = true;
        assert_eq!(reservoir_seed(&cfg, 0, 1), reservoir_seed(&cfg, 2, 1));
        assert_ne!(input_seed(&cfg, 0, 1), input_seed(&cfg, 2, 1));
        let res = run_sweep(&cfg, 1).unwrap();
        assert!(res.rows.iter().all(|r| r.n_ok == 2));
    }

    #[test]
    fn failed_cells_are_counted_not_averaged() {
        let cell = |r, outcome| CellResult {
            sigma_index: 0,
            replication: r,
            reservoir_seed: 0,
            input_seed: 0,
            outcome,
        };
        let cells = [
            cell(
                0,
                CellOutcome::Failed {
                    reason: "boom".into(),
                },
            ),
            cell(
                1,
                CellOutcome::Ok {
                    total: 2.0,
                    regime: Regime::Intermediate,
                    per_lag: vec![1.0, 1.0],
                },
            ),
            cell(
                2,
                CellOutcome::Ok {
                    total: 4.0,
                    regime: Regime::LinearEquivalent,
                    per_lag: vec![1.0],
                },
            ),
        ];
        let row = aggregate(0.5, cells.iter());
        assert_eq!((row.n_ok, row.n_failed), (2, 1));
        assert_eq!(row.mc_mean, 3.0);
        assert!((row.mc_sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((row.regime_linear, row.regime_intermediate), (1, 1));
        assert_eq!(row.per_lag_mean, vec![1.0, 0.5]);

        let none = aggregate(0.5, cells[..1].iter());
        assert!(none.mc_mean.is_nan());
    }
}
