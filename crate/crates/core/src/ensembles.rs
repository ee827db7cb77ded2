//! Reservoir matrix ensembles and the matrix/vector functionals used by the
//! saturation and linearity thresholds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

const MAX_ATTEMPTS: u32 = 64;

/// Power iteration stops once the extrapolated remaining error drops below
/// this fraction of the current estimate.
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 20_000;

/// Law used to draw the connectivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    /// Gram-Schmidt orthonormalization of an i.i.d. N(0,1) matrix.
    OrthogonalGaussian,
    /// i.i.d. N(0,1) entries kept with probability `sparsity`, then singular
    /// values affinely mapped onto `[conditioning * s_max, s_max]`.
    SparseConditionedGaussian { sparsity: f64, conditioning: f64 },
    /// i.i.d. N(0,1) entries.
    DenseGaussian,
    /// Hand-built matrices supplied through [`ReservoirSpec::from_parts`].
    Custom,
}

impl Ensemble {
    /// Sparse conditioned Gaussian with the usual 0.1 sparsity / 0.7 ratio.
    pub fn sparse_default() -> Self {
        Ensemble::SparseConditionedGaussian {
            sparsity: 0.1,
            conditioning: 0.7,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        match *self {
            Ensemble::OrthogonalGaussian => sample_orthogonal(n, seed),
            Ensemble::SparseConditionedGaussian {
                sparsity,
                conditioning,
            } => sample_sparse_conditioned(n, sparsity, conditioning, seed),
            Ensemble::DenseGaussian => sample_dense_gaussian(n, seed),
            Ensemble::Custom => Err(Error::InvalidArgument(
                "custom ensembles cannot be sampled".into(),
            )),
        }
    }

    /// Short label used in CSV files and plot titles.
    pub fn label(&self) -> &'static str {
        match self {
            Ensemble::OrthogonalGaussian => "orthogonal",
            Ensemble::SparseConditionedGaussian { .. } => "sparse",
            Ensemble::DenseGaussian => "gaussian",
            Ensemble::Custom => "custom",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::SparseConditionedGaussian {
                sparsity,
                conditioning,
            } => write!(f, "sparse:sparsity={sparsity},conditioning={conditioning}"),
            other => f.write_str(other.label()),
        }
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    /// Accepts `orthogonal`, `gaussian`, `sparse` and
    /// `sparse:sparsity=0.1,conditioning=0.7`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), params) {
            ("orthogonal" | "ortho", None) => Ok(Ensemble::OrthogonalGaussian),
            ("gaussian" | "dense" | "normal", None) => Ok(Ensemble::DenseGaussian),
            ("sparse", None) => Ok(Ensemble::sparse_default()),
            ("sparse", Some(p)) => {
                let Ensemble::SparseConditionedGaussian {
                    mut sparsity,
                    mut conditioning,
                } = Ensemble::sparse_default()
                else {
                    unreachable!()
                };
                for (key, value) in parse_params(p)? {
                    match key {
                        "sparsity" | "sp" => sparsity = value,
                        "conditioning" | "cond" => conditioning = value,
                        _ => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown sparse ensemble parameter `{key}`"
                            )))
                        }
                    }
                }
                Ok(Ensemble::SparseConditionedGaussian {
                    sparsity,
                    conditioning,
                })
            }
            _ => Err(Error::InvalidArgument(format!("unknown ensemble `{s}`"))),
        }
    }
}

pub(crate) fn parse_params(p: &str) -> Result<Vec<(&str, f64)>> {
    p.split(',')
        .filter(|kv| !kv.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("`{v}` is not a number")))?;
            Ok((k.trim(), v))
        })
        .collect()
}

/// The sampled triple (A, C, xi) plus the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec {
    pub n: usize,
    pub connectivity: DMatrix<f64>,
    pub input_mask: DVector<f64>,
    pub input_shift: DVector<f64>,
    pub ensemble: Ensemble,
    pub target_spectral_norm: f64,
    pub seed: u64,
}

impl ReservoirSpec {
    /// Draw A from `ensemble`, rescale it to spectral norm `target`, and draw
    /// a Gaussian input mask. The shift is zero.
    pub fn sample(n: usize, ensemble: Ensemble, target: f64, seed: u64) -> Result<Self> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target spectral norm must lie in (0, 1), got {target}"
            )));
        }
        let raw = ensemble.sample(n, seed)?;
        let connectivity = normalize_spectral(&raw, target)?;
        let input_mask = sample_input_mask(n, seed)?;
        Ok(Self {
            n,
            connectivity,
            input_mask,
            input_shift: DVector::zeros(n),
            ensemble,
            target_spectral_norm: target,
            seed,
        })
    }

    /// Wrap hand-built matrices. The recorded target norm is the measured one.
    pub fn from_parts(connectivity: DMatrix<f64>, input_mask: DVector<f64>) -> Result<Self> {
        let n = input_mask.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty input mask".into()));
        }
        if connectivity.nrows() != n || connectivity.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: connectivity.nrows().max(connectivity.ncols()),
            });
        }
        let norm = spectral_norm(&connectivity);
        Ok(Self {
            n,
            connectivity,
            input_mask,
            input_shift: DVector::zeros(n),
            ensemble: Ensemble::Custom,
            target_spectral_norm: norm,
            seed: 0,
        })
    }

    pub fn with_shift(mut self, shift: DVector<f64>) -> Result<Self> {
        if shift.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: shift.len(),
            });
        }
        self.input_shift = shift;
        Ok(self)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.connectivity)
    }

    /// Smallest |C_i|.
    pub fn mask_floor(&self) -> f64 {
        min_abs_entry(self.input_mask.as_slice()).unwrap_or(0.0)
    }

    /// Largest |C_i|.
    pub fn mask_sup(&self) -> f64 {
        max_abs_entry(self.input_mask.as_slice()).unwrap_or(0.0)
    }

    /// Checks that every |C_i| is positive.
    pub fn check_dense_mask(&self) -> Result<()> {
        if self.mask_floor() > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroMaskEntry)
        }
    }

    /// JSON text with named fields and row-major matrix data.
    pub fn to_text(&self) -> Result<String> {
        serde_json::to_string_pretty(&SpecRecord::from(self))
            .map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rec: SpecRecord =
            serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        rec.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    n: usize,
    ensemble: Ensemble,
    target_spectral_norm: f64,
    seed: u64,
    connectivity: Vec<Vec<f64>>,
    input_mask: Vec<f64>,
    input_shift: Vec<f64>,
}

impl From<&ReservoirSpec> for SpecRecord {
    fn from(s: &ReservoirSpec) -> Self {
        Self {
            n: s.n,
            ensemble: s.ensemble,
            target_spectral_norm: s.target_spectral_norm,
            seed: s.seed,
            connectivity: s
                .connectivity
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            input_mask: s.input_mask.iter().copied().collect(),
            input_shift: s.input_shift.iter().copied().collect(),
        }
    }
}

impl TryFrom<SpecRecord> for ReservoirSpec {
    type Error = Error;

    fn try_from(r: SpecRecord) -> Result<Self> {
        let n = r.n;
        if r.connectivity.len() != n || r.connectivity.iter().any(|row| row.len() != n) {
            return Err(Error::Serde(format!("connectivity is not {n}x{n}")));
        }
        if r.input_mask.len() != n || r.input_shift.len() != n {
            return Err(Error::Serde(format!(
                "mask or shift length differs from n = {n}"
            )));
        }
        let flat: Vec<f64> = r.connectivity.into_iter().flatten().collect();
        Ok(Self {
            n,
            connectivity: DMatrix::from_row_slice(n, n, &flat),
            input_mask: DVector::from_vec(r.input_mask),
            input_shift: DVector::from_vec(r.input_shift),
            ensemble: r.ensemble,
            target_spectral_norm: r.target_spectral_norm,
            seed: r.seed,
        })
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order does not depend on storage layout.
    let data: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(n, n, &data)
}

/// Orthonormalize the columns of `m` with modified Gram-Schmidt, run twice.
/// Returns `None` if a column collapses (rank deficiency).
pub fn gram_schmidt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    let mut q = m.clone();
    for j in 0..cols {
        let original = q.column(j).norm();
        if original == 0.0 {
            return None;
        }
        for _pass in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                for i in 0..rows {
                    q[(i, j)] -= proj * q[(i, k)];
                }
            }
        }
        let norm = q.column(j).norm();
        if norm <= 1e-10 * original {
            return None;
        }
        q.column_mut(j).unscale_mut(norm);
    }
    Some(q)
}

pub fn sample_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, Stream::Matrix, attempt);
        if let Some(q) = gram_schmidt(&gaussian_matrix(&mut rng, n)) {
            return Ok(q);
        }
    }
    Err(Error::DegenerateDraw {
        attempts: MAX_ATTEMPTS,
    })
}

pub fn sample_dense_gaussian(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(gaussian_matrix(&mut stream_rng(seed, Stream::Matrix, 0), n))
}

pub fn sample_sparse_conditioned(
    n: usize,
    sparsity: f64,
    conditioning: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "sparse conditioned ensemble needs n >= 2".into(),
        ));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sparsity must lie in (0, 1], got {sparsity}"
        )));
    }
    if !(conditioning > 0.0 && conditioning <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "conditioning must lie in (0, 1], got {conditioning}"
        )));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let m = sparse_gaussian_draw(n, sparsity, seed, attempt);
        if m.iter().all(|&v| v == 0.0) {
            continue;
        }
        if let Some(conditioned) = condition_singular_values(&m, conditioning)? {
            return Ok(conditioned);
        }
    }
    Err(Error::DegenerateDraw {
        attempts: MAX_ATTEMPTS,
    })
}

/// The sparse stage of the conditioned ensemble: each entry is N(0,1) with
/// probability `sparsity` and zero otherwise. Conditioning mixes the entries,
/// so the zero pattern only survives in this intermediate draw.
pub fn sample_sparse_gaussian(n: usize, sparsity: f64, seed: u64) -> DMatrix<f64> {
    sparse_gaussian_draw(n, sparsity, seed, 0)
}

fn sparse_gaussian_draw(n: usize, sparsity: f64, seed: u64, attempt: u32) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, Stream::Matrix, attempt);
    let data: Vec<f64> = (0..n * n)
        .map(|_| {
            let keep = rng.random::<f64>() < sparsity;
            let value: f64 = rng.sample(StandardNormal);
            if keep {
                value
            } else {
                0.0
            }
        })
        .collect();
    DMatrix::from_row_slice(n, n, &data)
}

/// Map the singular values of `m` affinely onto `[ratio * s_max, s_max]`,
/// keeping their order and the singular vectors. `None` when all singular
/// values coincide and `ratio < 1`, since the map is then undefined.
fn condition_singular_values(m: &DMatrix<f64>, ratio: f64) -> Result<Option<DMatrix<f64>>> {
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("SVD did not converge while conditioning".into()))?;
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Decomposition("SVD returned no U".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Decomposition("SVD returned no V^T".into()))?;
    let s = &svd.singular_values;
    let s_max = s.max();
    let s_min = s.min();
    let spread = s_max - s_min;
    let floor = ratio * s_max;
    let mapped = if spread <= 1e-14 * s_max {
        if ratio < 1.0 {
            return Ok(None);
        }
        DVector::from_element(s.len(), s_max)
    } else {
        s.map(|x| floor + (x - s_min) * (s_max - floor) / spread)
    };
    Ok(Some(u * DMatrix::from_diagonal(&mapped) * v_t))
}

/// Standard Gaussian input mask, resampled if any entry is exactly zero.
pub fn sample_input_mask(n: usize, seed: u64) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, Stream::Mask, attempt);
        let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        if c.iter().all(|&v| v != 0.0) {
            return Ok(c);
        }
    }
    Err(Error::DegenerateDraw {
        attempts: MAX_ATTEMPTS,
    })
}

/// Rescale `m` so its spectral norm equals `target`.
pub fn normalize_spectral(m: &DMatrix<f64>, target: f64) -> Result<DMatrix<f64>> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target spectral norm must lie in (0, 1), got {target}"
        )));
    }
    let norm = spectral_norm(m);
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot normalize the zero matrix".into(),
        ));
    }
    Ok(m * (target / norm))
}

/// Largest singular value. Power iteration on `m^T m`, with a full SVD when
/// the iteration does not settle.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() || m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    power_iteration(m).unwrap_or_else(|| spectral_norm_svd(m))
}

pub fn spectral_norm_svd(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

fn power_iteration(m: &DMatrix<f64>) -> Option<f64> {
    let gram = m.tr_mul(m);
    let n = gram.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3);
    v.normalize_mut();
    let mut lambda = 0.0;
    let mut prev_change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let w = &gram * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return None;
        }
        v = w / norm;
        let change = (next - lambda).abs();
        lambda = next;
        if lambda > 0.0 && prev_change.is_finite() {
            if change <= f64::EPSILON * lambda {
                return Some(lambda.sqrt());
            }
            // Geometric extrapolation of the remaining error, trusted only
            // once the iterate has mostly settled.
            let rate = change / prev_change;
            if rate < 1.0 && change <= 1e-8 * lambda {
                let remaining = change * rate / (1.0 - rate);
                if remaining <= POWER_TOL * lambda {
                    return Some(lambda.sqrt());
                }
            }
        }
        prev_change = change;
    }
    None
}

/// Smallest absolute entry.
pub fn min_abs_entry(v: &[f64]) -> Result<f64> {
    v.iter()
        .map(|x| x.abs())
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidArgument("empty vector".into()))
}

/// Largest absolute entry (the infinity norm).
pub fn max_abs_entry(v: &[f64]) -> Result<f64> {
    v.iter()
        .map(|x| x.abs())
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidArgument("empty vector".into()))
}

/// Largest absolute entry of a matrix.
pub fn max_abs_matrix_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Induced infinity norm (maximum absolute row sum).
pub fn induced_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
