//! State recursion `x_t = phi(A x_{t-1} + C z_t + xi)`, Rademacher inputs,
//! saturation and linearity thresholds, and regime classification.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::ensembles::{induced_inf_norm, max_abs_matrix_entry, ReservoirSpec};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Absolute tolerance for agreement with the linear replay.
pub const LINEAR_TOLERANCE: f64 = 1e-12;

/// For activations without exact saturation, states count as extreme when
/// they sit within this fraction of `||x_+ - x_-||_inf` of the reference.
pub const SATURATION_REL_TOLERANCE: f64 = 1e-3;

/// `max(1000, 10 N)`.
pub fn default_washout(n: usize) -> usize {
    (10 * n).max(1000)
}

/// i.i.d. inputs `z_t = sigma * zeta_t` with Rademacher `zeta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputProcess {
    pub sigma: f64,
    /// Retained steps T.
    pub length: usize,
    /// Discarded leading steps T0.
    pub washout: usize,
    pub seed: u64,
}

impl InputProcess {
    pub fn new(sigma: f64, length: usize, washout: usize, seed: u64) -> Self {
        Self {
            sigma,
            length,
            washout,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.length == 0 {
            return Err(Error::InvalidArgument(
                "input length must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// All `washout + length` inputs, washout first.
    pub fn draw_all(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let total = self.washout + self.length;
        let mut rng = stream_rng(self.seed, Stream::Inputs, 0);
        let mut out = Vec::with_capacity(total);
        let mut bits = 0u64;
        for k in 0..total {
            if k % 64 == 0 {
                bits = rng.next_u64();
            }
            let sign = if bits & 1 == 1 { 1.0 } else { -1.0 };
            bits >>= 1;
            out.push(sign * self.sigma);
        }
        Ok(out)
    }
}

/// The `length` post-washout inputs of `p`.
pub fn generate_inputs(p: &InputProcess) -> Result<Vec<f64>> {
    let mut all = p.draw_all()?;
    Ok(all.split_off(p.washout))
}

/// A realized input path and the post-washout states it drove.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    pub spec: &'a ReservoirSpec,
    pub activation: Activation,
    pub sigma: f64,
    /// `z_t` for the retained steps.
    pub inputs: Vec<f64>,
    /// `N x T`; column `t` is `x_t`.
    pub states: DMatrix<f64>,
    /// State immediately before the first retained step.
    pub initial_state: DVector<f64>,
}

impl Trajectory<'_> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, t: usize) -> DVectorView<'_, f64> {
        self.states.column(t)
    }

    /// Largest `|x_{t,i}|` over the trajectory.
    pub fn max_abs_state(&self) -> f64 {
        max_abs_matrix_entry(&self.states)
    }

    /// Columnar text dump: `t,z,x0,...,x{N-1}`.
    pub fn write_columns(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            write!(w, "t,z")?;
            for i in 0..self.dim() {
                write!(w, ",x{i}")?;
            }
            writeln!(w)?;
            for (t, z) in self.inputs.iter().enumerate() {
                write!(w, "{t},{z}")?;
                for v in self.state(t).iter() {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }
}

/// Row-major copy of the recursion operators for the inner loop.
struct Stepper {
    n: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    xi: Vec<f64>,
}

impl Stepper {
    fn new(spec: &ReservoirSpec) -> Self {
        let n = spec.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(spec.connectivity[(i, j)]);
            }
        }
        Self {
            n,
            a,
            c: spec.input_mask.iter().copied().collect(),
            xi: spec.input_shift.iter().copied().collect(),
        }
    }

    #[inline]
    fn pre_activation(&self, prev: &[f64], z: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let ax: f64 = row.iter().zip(prev).map(|(a, x)| a * x).sum();
            *o = ax + self.c[i] * z + self.xi[i];
        }
    }
}

/// Iterate the recursion from `x_init` over `washout + length` inputs and
/// keep the last `length` states.
pub fn run<'a>(
    spec: &'a ReservoirSpec,
    activation: Activation,
    process: &InputProcess,
    x_init: &DVector<f64>,
) -> Result<Trajectory<'a>> {
    let inputs = process.draw_all()?;
    run_with_inputs(
        spec,
        activation,
        process.sigma,
        &inputs,
        process.washout,
        x_init,
    )
}

/// [`run`] on an explicit input sequence whose first `washout` entries are
/// discarded.
pub fn run_with_inputs<'a>(
    spec: &'a ReservoirSpec,
    activation: Activation,
    sigma: f64,
    inputs: &[f64],
    washout: usize,
    x_init: &DVector<f64>,
) -> Result<Trajectory<'a>> {
    let n = spec.n;
    if x_init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x_init.len(),
        });
    }
    if inputs.len() <= washout {
        return Err(Error::InvalidArgument(format!(
            "{} inputs leave nothing after a washout of {washout}",
            inputs.len()
        )));
    }
    let length = inputs.len() - washout;
    let stepper = Stepper::new(spec);
    let mut prev: Vec<f64> = x_init.iter().copied().collect();
    let mut pre = vec![0.0; n];
    let mut states = DMatrix::zeros(n, length);
    let mut initial_state = x_init.clone();

    for (k, &z) in inputs.iter().enumerate() {
        if k == washout {
            initial_state = DVector::from_column_slice(&prev);
        }
        stepper.pre_activation(&prev, z, &mut pre);
        for (p, &v) in prev.iter_mut().zip(&pre) {
            *p = activation.eval(v);
        }
        if prev.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: k });
        }
        if k >= washout {
            states.column_mut(k - washout).copy_from_slice(&prev);
        }
    }

    Ok(Trajectory {
        spec,
        activation,
        sigma,
        inputs: inputs[washout..].to_vec(),
        states,
        initial_state,
    })
}

/// Replay the linear recursion `x_t = A x_{t-1} + C z_t + xi` from the
/// trajectory's initial state over its inputs, with the same arithmetic as
/// [`run`].
pub fn linear_replay(traj: &Trajectory<'_>) -> DMatrix<f64> {
    let stepper = Stepper::new(traj.spec);
    let n = traj.dim();
    let mut prev: Vec<f64> = traj.initial_state.iter().copied().collect();
    let mut pre = vec![0.0; n];
    let mut out = DMatrix::zeros(n, traj.len());
    for (t, &z) in traj.inputs.iter().enumerate() {
        stepper.pre_activation(&prev, z, &mut pre);
        prev.copy_from_slice(&pre);
        out.column_mut(t).copy_from_slice(&prev);
    }
    out
}

/// Largest absolute gap between the trajectory and its linear replay.
pub fn linear_deviation(traj: &Trajectory<'_>) -> f64 {
    let replay = linear_replay(traj);
    traj.states
        .iter()
        .zip(replay.iter())
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// The two `±1`-valued states that absorb the dynamics above the
/// saturation threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeStates {
    pub x_plus: DVector<f64>,
    pub x_minus: DVector<f64>,
}

/// `x_± = phi(±C D / c_min)` for a piecewise sigmoid.
pub fn extreme_states(spec: &ReservoirSpec, activation: Activation) -> Result<ExtremeStates> {
    let (_, d) = activation.piecewise_params().ok_or_else(|| {
        Error::InvalidArgument("extreme states are defined for the piecewise sigmoid".into())
    })?;
    spec.check_dense_mask()?;
    // `c / c_min` is exactly 1 for the smallest entry, so every argument
    // reaches the saturation point without rounding short of it.
    let floor = spec.mask_floor();
    let x_plus = spec.input_mask.map(|c| activation.eval(c / floor * d));
    let x_minus = spec.input_mask.map(|c| activation.eval(-c / floor * d));
    assert!(
        x_plus.iter().chain(x_minus.iter()).all(|v| v.abs() == 1.0),
        "extreme state entry is not ±1"
    );
    Ok(ExtremeStates { x_plus, x_minus })
}

/// Input-scale thresholds for a given linear radius `delta` and saturation
/// point `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Above this every state is extreme: `(sqrt(N) ||A||_2 + D) / c_min`.
    pub sigma_upper: f64,
    /// Below this the network is linear: `delta (1 - ||A||_2) / (sqrt(N) c_max)`.
    pub sigma_lower: f64,
    /// `(N max_ij |A_ij| + D) / c_min`.
    pub sigma_upper_loose: f64,
    /// `(||A||_inf + D) / c_min` with the induced (max row sum) norm.
    pub sigma_upper_loose_induced: f64,
    /// `delta (1 - ||A||_2) / c_max`.
    pub sigma_lower_loose: f64,
}

/// Thresholds for the piecewise sigmoid `activation`.
pub fn compute_thresholds(
    spec: &ReservoirSpec,
    activation: Activation,
) -> Result<RegimeThresholds> {
    let (delta, d) = activation.piecewise_params().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "thresholds need a piecewise sigmoid, got {activation}"
        ))
    })?;
    thresholds_for(spec, delta, d)
}

/// Thresholds evaluated at explicit `(delta, d)`.
pub fn thresholds_for(spec: &ReservoirSpec, delta: f64, d: f64) -> Result<RegimeThresholds> {
    spec.check_dense_mask()?;
    let norm = spec.spectral_norm();
    if norm >= 1.0 {
        return Err(Error::NotContractive(norm));
    }
    let n = spec.n as f64;
    let c_min = spec.mask_floor();
    let c_max = spec.mask_sup();
    Ok(RegimeThresholds {
        sigma_upper: (n.sqrt() * norm + d) / c_min,
        sigma_lower: delta * (1.0 - norm) / (n.sqrt() * c_max),
        sigma_upper_loose: (n * max_abs_matrix_entry(&spec.connectivity) + d) / c_min,
        sigma_upper_loose_induced: (induced_inf_norm(&spec.connectivity) + d) / c_min,
        sigma_lower_loose: delta * (1.0 - norm) / c_max,
    })
}

/// Bound on `max_t ||x_t||_inf` for the linear network driven at scale
/// `sigma`: `sqrt(N) c_max sigma / (1 - ||A||_2)`.
pub fn linear_state_bound(spec: &ReservoirSpec, sigma: f64) -> f64 {
    (spec.n as f64).sqrt() * spec.mask_sup() * sigma / (1.0 - spec.spectral_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Saturated,
    LinearEquivalent,
    Intermediate,
}

/// Decide whether a trajectory sits in the saturated regime, is
/// indistinguishable from the linear network, or neither.
///
/// For the piecewise sigmoid, saturation means every state equals `x_+` or
/// `x_-` (matched to the sign of `z_t`) exactly. Other activations compare
/// against `phi(±sigma C + xi)` with [`SATURATION_REL_TOLERANCE`].
pub fn classify_regime(traj: &Trajectory<'_>, sigma: f64) -> Regime {
    if is_saturated(traj, sigma) {
        Regime::Saturated
    } else if linear_deviation(traj) <= LINEAR_TOLERANCE {
        Regime::LinearEquivalent
    } else {
        Regime::Intermediate
    }
}

fn is_saturated(traj: &Trajectory<'_>, sigma: f64) -> bool {
    let spec = traj.spec;
    let act = traj.activation;
    let (plus, minus, tol) = match extreme_states(spec, act) {
        Ok(ext) => (ext.x_plus, ext.x_minus, 0.0),
        Err(_) => {
            let plus = spec
                .input_mask
                .zip_map(&spec.input_shift, |c, xi| act.eval(sigma * c + xi));
            let minus = spec
                .input_mask
                .zip_map(&spec.input_shift, |c, xi| act.eval(-sigma * c + xi));
            let gap = (&plus - &minus).amax();
            if gap == 0.0 || !gap.is_finite() {
                return false;
            }
            (plus, minus, SATURATION_REL_TOLERANCE * gap)
        }
    };
    traj.inputs.iter().enumerate().all(|(t, &z)| {
        let target = if z > 0.0 { &plus } else { &minus };
        traj.state(t)
            .iter()
            .zip(target.iter())
            .all(|(x, r)| (x - r).abs() <= tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Ensemble;

    fn scalar_spec(a: f64, c: f64) -> ReservoirSpec {
        ReservoirSpec::from_parts(DMatrix::from_element(1, 1, a), DVector::from_element(1, c))
            .unwrap()
    }

    #[test]
    fn inputs_are_reproducible_signs() {
        let p = InputProcess::new(1.0, 4, 0, 11);
        let z = generate_inputs(&p).unwrap();
        assert_eq!(z.len(), 4);
        assert!(z.iter().all(|v| v.abs() == 1.0));
        assert_eq!(z, generate_inputs(&p).unwrap());
    }

    #[test]
    fn input_moments() {
        let z = generate_inputs(&InputProcess::new(2.0, 100_000, 0, 5)).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!((3.9..=4.1).contains(&var), "{var}");
        let z = generate_inputs(&InputProcess::new(1.0, 100_000, 0, 6)).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!(mean.abs() <= 0.02, "{mean}");
    }

    #[test]
    fn washout_keeps_the_tail() {
        let p = InputProcess::new(1.0, 10, 5, 3);
        let all = p.draw_all().unwrap();
        assert_eq!(generate_inputs(&p).unwrap(), all[5..].to_vec());
    }

    #[test]
    fn invalid_process_is_rejected() {
        assert!(generate_inputs(&InputProcess::new(0.0, 4, 0, 1)).is_err());
        assert!(generate_inputs(&InputProcess::new(1.0, 0, 0, 1)).is_err());
    }

    #[test]
    fn memoryless_identity_copies_input() {
        let spec = scalar_spec(0.0, 1.0);
        let p = InputProcess::new(1.3, 50, 7, 2);
        let traj = run(&spec, Activation::Identity, &p, &DVector::zeros(1)).unwrap();
        for t in 0..traj.len() {
            assert_eq!(traj.states[(0, t)], traj.inputs[t]);
        }
    }

    #[test]
    fn zero_inputs_stay_at_fixed_point() {
        let spec = ReservoirSpec::from_parts(
            DMatrix::identity(2, 2) * 0.95,
            DVector::from_element(2, 1.0),
        )
        .unwrap();
        let zeros = vec![0.0; 20];
        let traj =
            run_with_inputs(&spec, Activation::Tanh, 1.0, &zeros, 5, &DVector::zeros(2)).unwrap();
        assert!(traj.states.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let spec = scalar_spec(0.5, 1.0);
        let p = InputProcess::new(1.0, 5, 0, 1);
        assert!(matches!(
            run(&spec, Activation::Tanh, &p, &DVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn divergence_names_the_step() {
        let spec = scalar_spec(1e200, 1.0);
        let p = InputProcess::new(1.0, 10, 0, 1);
        match run(&spec, Activation::Identity, &p, &DVector::zeros(1)) {
            Err(Error::NonFiniteState { step }) => assert!(step > 0 && step < 10),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn scalar_thresholds() {
        let spec = scalar_spec(0.5, 2.0);
        let th = compute_thresholds(&spec, Activation::piecewise(0.5, 2.0).unwrap()).unwrap();
        assert!((th.sigma_upper - 1.25).abs() < 1e-15);
        assert!((th.sigma_lower - 0.125).abs() < 1e-15);
        assert!((th.sigma_upper_loose - 1.25).abs() < 1e-15);
        assert!((th.sigma_lower_loose - 0.125).abs() < 1e-15);
    }

    #[test]
    fn thresholds_scale_with_delta_and_norm() {
        let spec = scalar_spec(0.5, 2.0);
        let small = thresholds_for(&spec, 1e-9, 2.0).unwrap();
        assert!(small.sigma_lower < 1e-9);
        let near_one = scalar_spec(1.0 - 1e-9, 2.0);
        let th = thresholds_for(&near_one, 0.5, 2.0).unwrap();
        assert!(th.sigma_lower < 1e-9);
    }

    #[test]
    fn threshold_errors() {
        let zero_mask = ReservoirSpec::from_parts(
            DMatrix::identity(2, 2) * 0.5,
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let pws = Activation::piecewise(0.5, 2.0).unwrap();
        assert!(matches!(
            compute_thresholds(&zero_mask, pws),
            Err(Error::ZeroMaskEntry)
        ));
        let expanding = scalar_spec(1.5, 1.0);
        assert!(matches!(
            compute_thresholds(&expanding, pws),
            Err(Error::NotContractive(_))
        ));
        assert!(compute_thresholds(&scalar_spec(0.5, 1.0), Activation::Tanh).is_err());
    }

    #[test]
    fn extreme_state_examples() {
        let spec = ReservoirSpec::from_parts(
            DMatrix::identity(2, 2) * 0.5,
            DVector::from_vec(vec![1.0, -2.0]),
        )
        .unwrap();
        let pws = Activation::piecewise(0.5, 2.0).unwrap();
        let ext = extreme_states(&spec, pws).unwrap();
        let args = spec.input_mask.map(|c| c * 2.0);
        assert_eq!(args.as_slice(), &[2.0, -4.0]);
        assert_eq!(ext.x_plus.as_slice(), &[1.0, -1.0]);
        assert_eq!(ext.x_minus.as_slice(), &[-1.0, 1.0]);
        assert_eq!(ext.x_minus, -ext.x_plus.clone());

        let positive = ReservoirSpec::sample(6, Ensemble::DenseGaussian, 0.9, 4).unwrap();
        let positive = ReservoirSpec {
            input_mask: positive.input_mask.map(f64::abs),
            ..positive
        };
        let ext = extreme_states(&positive, pws).unwrap();
        assert!(ext.x_plus.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn saturated_and_linear_classification() {
        let pws = Activation::piecewise(0.5, 2.0).unwrap();
        let spec = ReservoirSpec::sample(8, Ensemble::OrthogonalGaussian, 0.95, 21).unwrap();
        let th = compute_thresholds(&spec, pws).unwrap();
        let x0 = DVector::zeros(8);

        let high = InputProcess::new(2.0 * th.sigma_upper, 2000, 100, 1);
        let traj = run(&spec, pws, &high, &x0).unwrap();
        assert_eq!(classify_regime(&traj, high.sigma), Regime::Saturated);
        let ext = extreme_states(&spec, pws).unwrap();
        for t in 0..traj.len() {
            let want = if traj.inputs[t] > 0.0 {
                &ext.x_plus
            } else {
                &ext.x_minus
            };
            assert_eq!(traj.state(t), want.column(0));
        }

        let low = InputProcess::new(0.5 * th.sigma_lower, 2000, 100, 1);
        let traj = run(&spec, pws, &low, &x0).unwrap();
        assert_eq!(classify_regime(&traj, low.sigma), Regime::LinearEquivalent);
        assert!(traj.max_abs_state() <= linear_state_bound(&spec, low.sigma));
        assert!(linear_state_bound(&spec, low.sigma) < 0.5);
    }

    #[test]
    fn tanh_between_thresholds_is_intermediate() {
        let spec = ReservoirSpec::sample(8, Ensemble::OrthogonalGaussian, 0.95, 2).unwrap();
        let p = InputProcess::new(0.5, 2000, 100, 3);
        let traj = run(&spec, Activation::Tanh, &p, &DVector::zeros(8)).unwrap();
        assert_eq!(classify_regime(&traj, p.sigma), Regime::Intermediate);
    }

    #[test]
    fn columns_export() {
        let spec = scalar_spec(0.5, 1.0);
        let p = InputProcess::new(1.0, 3, 0, 1);
        let traj = run(&spec, Activation::Tanh, &p, &DVector::zeros(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        traj.write_columns(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,z,x0");
        assert_eq!(lines.len(), 4);
    }
}
