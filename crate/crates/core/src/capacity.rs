//! Memory capacity estimation.
//!
//! The lag-`tau` capacity is the normalized quadratic form
//! `Cov(z_{t-tau}, x_t)^T Gamma_x^{-1} Cov(x_t, z_{t-tau}) / Var(z)`, i.e. the
//! explained-variance ratio of the best linear readout of `z_{t-tau}` from
//! `x_t`. The sample estimator works on a trajectory; the oracle evaluates
//! the population quantity of the linear network through its stationary
//! covariance.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::ensembles::ReservoirSpec;
use crate::error::{Error, Result};

pub const DEFAULT_RELATIVE_RIDGE: f64 = 1e-10;
pub const EARLY_STOP_RUN: usize = 10;
pub const EARLY_STOP_THRESHOLD: f64 = 1e-4;
/// Eigenvalues of the stationary covariance below this fraction of the
/// largest are treated as zero by the oracle.
const PSEUDO_INVERSE_RTOL: f64 = 1e-12;

const LYAPUNOV_TOL: f64 = 1e-14;
const LYAPUNOV_MAX_ITER: usize = 200_000;

/// Ridge added to the sample state covariance before inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Ridge {
    /// `scale * trace(Gamma) / N`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::Relative(DEFAULT_RELATIVE_RIDGE)
    }
}

impl Ridge {
    fn resolve(self, gamma: &DMatrix<f64>) -> f64 {
        match self {
            Ridge::Relative(scale) => scale * gamma.trace() / gamma.nrows() as f64,
            Ridge::Absolute(value) => value,
        }
    }
}

/// `min(3 N, 200)`.
pub fn default_tau_max(n: usize) -> usize {
    (3 * n).min(200)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Last lag summed; `None` picks [`default_tau_max`].
    pub tau_max: Option<usize>,
    pub ridge: Ridge,
    /// Stop after [`EARLY_STOP_RUN`] consecutive lags below
    /// [`EARLY_STOP_THRESHOLD`].
    pub early_stop: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            tau_max: None,
            ridge: Ridge::default(),
            early_stop: true,
        }
    }
}

impl EstimatorConfig {
    pub fn with_tau_max(mut self, tau_max: usize) -> Self {
        self.tau_max = Some(tau_max);
        self
    }

    pub fn without_early_stop(mut self) -> Self {
        self.early_stop = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Ratio of extreme eigenvalues of the (regularized) covariance.
    pub condition: f64,
    /// Lags whose raw value fell outside `[0, 1]`.
    pub clip_count: usize,
    /// Set when the summed total exceeded `N` and was capped.
    pub total_capped: bool,
    pub stopped_early: bool,
    /// Population bound `MC >= 1` does not hold for this finite-sample total.
    pub below_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProfile {
    /// `MC_tau` for `tau = 0..per_lag.len()`.
    pub per_lag: Vec<f64>,
    pub total: f64,
    /// Requested last lag; `per_lag` is shorter after an early stop.
    pub tau_max: usize,
    /// Absolute ridge actually added.
    pub ridge: f64,
    pub diagnostics: Diagnostics,
}

impl CapacityProfile {
    fn from_lags(
        per_lag: Vec<f64>,
        n: usize,
        tau_max: usize,
        ridge: f64,
        mut diagnostics: Diagnostics,
    ) -> Self {
        let sum: f64 = per_lag.iter().sum();
        let cap = n as f64;
        let total = if sum > cap {
            diagnostics.total_capped = true;
            cap
        } else {
            sum
        };
        diagnostics.below_lower_bound = total < 1.0;
        Self {
            per_lag,
            total,
            tau_max,
            ridge,
            diagnostics,
        }
    }

    /// Header of the flat record for `max_lags` lags.
    pub fn record_header(max_lags: usize) -> Vec<String> {
        let mut h: Vec<String> = ["sigma", "total", "tau_max", "ridge", "clip_count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..max_lags).map(|k| format!("mc_{k}")));
        h
    }

    /// Flat record: sigma, total, tau_max, ridge, clip_count, per-lag values.
    pub fn to_record(&self, sigma: f64) -> Vec<String> {
        let mut r = vec![
            sigma.to_string(),
            self.total.to_string(),
            self.tau_max.to_string(),
            self.ridge.to_string(),
            self.diagnostics.clip_count.to_string(),
        ];
        r.extend(self.per_lag.iter().map(|v| v.to_string()));
        r
    }

    pub fn write_record<W: Write>(&self, sigma: f64, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let io_err = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(Self::record_header(self.per_lag.len()))
            .map_err(io_err)?;
        w.write_record(self.to_record(sigma)).map_err(io_err)?;
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Sample moments of a trajectory with the regularized covariance factored
/// once, shared by every lag.
pub struct SampleCovariance<'t> {
    states: &'t DMatrix<f64>,
    inputs: &'t [f64],
    input_variance: f64,
    factor: Cholesky<f64, Dyn>,
    ridge: f64,
    condition: f64,
}

impl<'t> SampleCovariance<'t> {
    pub fn new(traj: &'t Trajectory<'_>, ridge: Ridge) -> Result<Self> {
        let states = &traj.states;
        let (n, len) = states.shape();
        if len < n + 1 {
            return Err(Error::LagTooLarge { tau: 0, len, n });
        }
        let inv_len = 1.0 / len as f64;
        let mean = states.column_mean();
        let mut centered = states.clone();
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        let gamma = &centered * centered.transpose() * inv_len;
        let mut gamma = (&gamma + gamma.transpose()) * 0.5;

        let z_mean = traj.inputs.iter().sum::<f64>() * inv_len;
        let input_variance = traj
            .inputs
            .iter()
            .map(|z| (z - z_mean).powi(2))
            .sum::<f64>()
            * inv_len;
        if input_variance <= 0.0 {
            return Err(Error::InvalidArgument(
                "input sequence has zero variance".into(),
            ));
        }

        let ridge = ridge.resolve(&gamma);
        if !(ridge >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ridge must be nonnegative, got {ridge}"
            )));
        }
        for i in 0..n {
            gamma[(i, i)] += ridge;
        }
        let eig = gamma.symmetric_eigenvalues();
        let condition = eig.max() / eig.min();
        let factor = gamma
            .cholesky()
            .ok_or(Error::SingularCovariance { ridge })?;
        Ok(Self {
            states,
            inputs: &traj.inputs,
            input_variance,
            factor,
            ridge,
            condition,
        })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Sample `Cov(x_t, z_{t-tau})` over the aligned pairs `t = tau..T`.
    pub fn cross_covariance(&self, tau: usize) -> Result<DVector<f64>> {
        let (n, len) = self.states.shape();
        if tau + n >= len {
            return Err(Error::LagTooLarge { tau, len, n });
        }
        let count = len - tau;
        let lagged = &self.inputs[..count];
        let z_mean = lagged.iter().sum::<f64>() / count as f64;
        // Centering z alone suffices: sum_t (z_{t-tau} - mean) = 0 removes
        // the state mean from the product.
        let zc = DVector::from_iterator(count, lagged.iter().map(|z| z - z_mean));
        let window = self.states.columns(tau, count);
        let mut out = DVector::zeros(n);
        out.gemv(1.0 / count as f64, &window, &zc, 0.0);
        Ok(out)
    }

    /// Unclipped `c^T (Gamma + ridge I)^{-1} c / Var(z)`.
    pub fn raw_capacity(&self, tau: usize) -> Result<f64> {
        let c = self.cross_covariance(tau)?;
        let solved = self.factor.solve(&c);
        let value = c.dot(&solved) / self.input_variance;
        if !value.is_finite() {
            return Err(Error::SingularCovariance { ridge: self.ridge });
        }
        Ok(value)
    }
}

/// Estimated `MC_tau`, clipped to `[0, 1]`.
pub fn estimate_mc_tau(traj: &Trajectory<'_>, tau: usize, ridge: Ridge) -> Result<f64> {
    let cov = SampleCovariance::new(traj, ridge)?;
    Ok(cov.raw_capacity(tau)?.clamp(0.0, 1.0))
}

/// Per-lag capacities summed up to `tau_max` (or the early stop).
pub fn estimate_total_mc(
    traj: &Trajectory<'_>,
    config: &EstimatorConfig,
) -> Result<CapacityProfile> {
    let n = traj.dim();
    let tau_max = config.tau_max.unwrap_or_else(|| default_tau_max(n));
    if tau_max < 1 {
        return Err(Error::InvalidArgument("tau_max must be at least 1".into()));
    }
    let cov = SampleCovariance::new(traj, config.ridge)?;
    let mut diagnostics = Diagnostics {
        condition: cov.condition(),
        ..Diagnostics::default()
    };
    let mut per_lag = Vec::with_capacity(tau_max + 1);
    let mut quiet_run = 0;
    for tau in 0..=tau_max {
        let raw = cov.raw_capacity(tau)?;
        if !(0.0..=1.0).contains(&raw) {
            diagnostics.clip_count += 1;
        }
        let value = raw.clamp(0.0, 1.0);
        per_lag.push(value);
        quiet_run = if value < EARLY_STOP_THRESHOLD {
            quiet_run + 1
        } else {
            0
        };
        if config.early_stop && quiet_run >= EARLY_STOP_RUN && tau < tau_max {
            diagnostics.stopped_early = true;
            break;
        }
    }
    Ok(CapacityProfile::from_lags(
        per_lag,
        n,
        tau_max,
        cov.ridge(),
        diagnostics,
    ))
}

/// Stationary covariance of `x_t = A x_{t-1} + C z_t` for unit-variance
/// inputs: the fixed point of `G <- A G A^T + C C^T`.
pub fn stationary_covariance(spec: &ReservoirSpec) -> Result<DMatrix<f64>> {
    let norm = spec.spectral_norm();
    if norm >= 1.0 {
        return Err(Error::NotContractive(norm));
    }
    solve_discrete_lyapunov(
        &spec.connectivity,
        &(&spec.input_mask * spec.input_mask.transpose()),
    )
}

/// Fixed-point iteration for `G = A G A^T + Q`. Converges geometrically
/// at rate `||A||_2^2` when `||A||_2 < 1`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut g = q.clone();
    for _ in 0..LYAPUNOV_MAX_ITER {
        let next = a * &g * a.transpose() + q;
        let change = (&next - &g).amax();
        let scale = next.amax();
        g = next;
        if !scale.is_finite() {
            break;
        }
        if change <= LYAPUNOV_TOL * scale {
            return Ok((&g + g.transpose()) * 0.5);
        }
    }
    Err(Error::LyapunovDiverged {
        iterations: LYAPUNOV_MAX_ITER,
    })
}

type Solver = Box<dyn Fn(&DVector<f64>) -> DVector<f64>>;

/// `G^{-1}` as a closure. Falls back to the pseudo-inverse when `(A, C)` is
/// not controllable and `G` is singular; `A^tau C` always lies in the range
/// of `G`, so the quadratic form stays well defined and the total equals
/// `rank G` instead of `N`.
fn inverse_on_range(gamma: &DMatrix<f64>) -> Result<Solver> {
    let eig = gamma.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let floor = PSEUDO_INVERSE_RTOL * top;
    if eig.eigenvalues.min() > floor {
        let factor = gamma
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance { ridge: 0.0 })?;
        return Ok(Box::new(move |v| factor.solve(v)));
    }
    if !(top > 0.0) {
        return Err(Error::SingularCovariance { ridge: 0.0 });
    }
    let inv = eig
        .eigenvalues
        .map(|l| if l > floor { 1.0 / l } else { 0.0 });
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    Ok(Box::new(move |v| &pinv * v))
}

/// Population `MC_tau = (A^tau C)^T G^{-1} (A^tau C)` of the linear network,
/// with `G` the unit-variance stationary covariance. Independent of the
/// input scale.
pub fn linear_mc_oracle(spec: &ReservoirSpec, tau_max: usize) -> Result<CapacityProfile> {
    let gamma = stationary_covariance(spec)?;
    let eig = gamma.symmetric_eigenvalues();
    let mut diagnostics = Diagnostics {
        condition: eig.max() / eig.min(),
        ..Diagnostics::default()
    };
    let solve = inverse_on_range(&gamma)?;
    let mut v = spec.input_mask.clone();
    let mut per_lag = Vec::with_capacity(tau_max + 1);
    for _ in 0..=tau_max {
        let raw = v.dot(&solve(&v));
        if !(0.0..=1.0).contains(&raw) {
            diagnostics.clip_count += 1;
        }
        per_lag.push(raw.clamp(0.0, 1.0));
        v = &spec.connectivity * v;
    }
    Ok(CapacityProfile::from_lags(
        per_lag,
        spec.n,
        tau_max,
        0.0,
        diagnostics,
    ))
}
