//! Seeded random transforms for dimension reduction: dense Gaussian and
//! sparse sign ensembles, plus the target-dimension formula.
//!
//! All sampling is a pure function of `(shape, seed)`. Column `j` draws from
//! its own substream, so generation is order-independent and a matrix is
//! fully reproducible from its descriptor alone — serialized transforms store
//! the seed, never the entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Which random ensemble a transform is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// i.i.d. normal entries scaled by `1/sqrt(d)`.
    Gaussian,
    /// Per column: `s` distinct rows, entries `+-1/sqrt(s)`.
    Sparse,
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ensemble::Gaussian => write!(f, "gaussian"),
            Ensemble::Sparse => write!(f, "sparse"),
        }
    }
}

/// Parameters of a sketch: accuracy `epsilon`, failure probability `delta`,
/// rank budget `k`, trace bound `eta`, ensemble and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Upper bound on the total rank of the matrices the transform must
    /// handle (declared by the caller; only an upper bound is needed).
    #[serde(rename = "k")]
    pub rank_budget: usize,
    /// Certified upper bound on the trace of an optimal primal point.
    #[serde(rename = "eta")]
    pub trace_bound: f64,
    pub ensemble: Ensemble,
    /// Nonzeros per column for the sparse ensemble; derived from
    /// `(epsilon, delta, k)` when absent.
    #[serde(rename = "s", skip_serializing_if = "Option::is_none", default)]
    pub sparsity: Option<usize>,
    /// Constant in front of the dimension formula.
    #[serde(rename = "c")]
    pub dim_constant: f64,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(epsilon: f64, delta: f64, rank_budget: usize, trace_bound: f64, seed: u64) -> Self {
        SketchConfig {
            epsilon,
            delta,
            rank_budget,
            trace_bound,
            ensemble: Ensemble::Gaussian,
            sparsity: None,
            dim_constant: DEFAULT_DIM_CONSTANT,
            seed,
        }
    }

    /// Check the configuration invariants. `epsilon = 0` is accepted only
    /// when `allow_degenerate_epsilon` is set (no-inflation sketching); the
    /// dimension formula itself needs `epsilon > 0`.
    pub fn validate(&self, allow_degenerate_epsilon: bool) -> Result<()> {
        let eps_ok = if allow_degenerate_epsilon {
            self.epsilon >= 0.0
        } else {
            self.epsilon > 0.0
        };
        if !eps_ok || self.epsilon > 1.0 || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.rank_budget == 0 {
            return Err(Error::InvalidConfig("rank budget k must be >= 1".into()));
        }
        if !(self.trace_bound >= 0.0 && self.trace_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "trace bound eta must be a nonnegative real, got {}",
                self.trace_bound
            )));
        }
        if !(self.dim_constant > 0.0 && self.dim_constant.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dimension constant c must be positive, got {}",
                self.dim_constant
            )));
        }
        if let Some(s) = self.sparsity {
            if s == 0 {
                return Err(Error::InvalidConfig("sparsity s must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Default per-column sparsity `ceil(2 eps^-1 ln(k/delta))`, clamped to
    /// the sketch dimension.
    pub fn derived_sparsity(&self, sketch_dim: usize) -> usize {
        let s = (2.0 / self.epsilon * (self.rank_budget as f64 / self.delta).ln()).ceil();
        (s.max(1.0) as usize).min(sketch_dim)
    }
}

pub const DEFAULT_DIM_CONSTANT: f64 = 8.0;

/// Sketch dimension `d = max(1, ceil(c eps^-2 ln(k/delta)))`.
pub fn required_dimension(config: &SketchConfig) -> Result<usize> {
    config.validate(false)?;
    let raw = config.dim_constant / (config.epsilon * config.epsilon)
        * (config.rank_budget as f64 / config.delta).ln();
    Ok(raw.ceil().max(1.0) as usize)
}

/// As [`required_dimension`] but never inflated past the ambient dimension.
pub fn sketch_dimension(config: &SketchConfig, ambient_dim: usize) -> Result<usize> {
    Ok(required_dimension(config)?.min(ambient_dim).max(1))
}

/// Serializable identity of a realized transform. The entries are re-derived
/// from the seed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchDescriptor {
    pub d: usize,
    #[serde(rename = "D")]
    pub ambient: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<usize>,
    pub c: f64,
}

impl SketchDescriptor {
    /// Re-derive the transform this descriptor identifies.
    pub fn realize(&self) -> Result<SketchMatrix> {
        match self.ensemble {
            Ensemble::Gaussian => sample_gaussian_jlt(self.d, self.ambient, self.seed),
            Ensemble::Sparse => {
                let s = self.s.ok_or_else(|| {
                    Error::InvalidConfig("sparse descriptor missing sparsity s".into())
                })?;
                sample_sparse_jlt(self.d, self.ambient, s, self.seed)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum SketchStorage {
    Dense(Mat),
    /// For each ambient column: sorted `(row, value)` pairs.
    SparseColumns(Vec<Vec<(u32, f64)>>),
}

/// A realized `d x D` transform.
#[derive(Debug, Clone)]
pub struct SketchMatrix {
    sketch_dim: usize,
    ambient_dim: usize,
    storage: SketchStorage,
    descriptor: Option<SketchDescriptor>,
}

impl SketchMatrix {
    #[inline]
    pub fn sketch_dim(&self) -> usize {
        self.sketch_dim
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Descriptor for serialization; absent for hand-built matrices.
    pub fn descriptor(&self) -> Option<&SketchDescriptor> {
        self.descriptor.as_ref()
    }

    /// Wrap an explicit dense matrix (tests, identity sketches). The result
    /// carries no descriptor and cannot be serialized seed-only.
    pub fn from_dense(entries: Mat) -> Self {
        let (d, ambient) = (entries.rows(), entries.cols());
        SketchMatrix {
            sketch_dim: d,
            ambient_dim: ambient,
            storage: SketchStorage::Dense(entries),
            descriptor: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        SketchMatrix::from_dense(Mat::identity(dim))
    }

    pub fn to_dense(&self) -> Mat {
        match &self.storage {
            SketchStorage::Dense(m) => m.clone(),
            SketchStorage::SparseColumns(cols) => {
                let mut m = Mat::zeros(self.sketch_dim, self.ambient_dim);
                for (j, col) in cols.iter().enumerate() {
                    for &(r, v) in col {
                        m.set(r as usize, j, v);
                    }
                }
                m
            }
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, SketchStorage::SparseColumns(_))
    }

    pub(crate) fn sparse_columns(&self) -> Option<&[Vec<(u32, f64)>]> {
        match &self.storage {
            SketchStorage::SparseColumns(cols) => Some(cols),
            _ => None,
        }
    }

    pub(crate) fn dense_entries(&self) -> Option<&Mat> {
        match &self.storage {
            SketchStorage::Dense(m) => Some(m),
            _ => None,
        }
    }

    /// `S v` for an ambient-dimension vector.
    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "apply_vec: vector length {} vs ambient dimension {}",
                v.len(),
                self.ambient_dim
            )));
        }
        let mut out = vec![0.0; self.sketch_dim];
        match &self.storage {
            SketchStorage::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = m.row(i);
                    let mut acc = 0.0;
                    for (a, b) in row.iter().zip(v.iter()) {
                        acc += a * b;
                    }
                    *o = acc;
                }
            }
            SketchStorage::SparseColumns(cols) => {
                for (j, col) in cols.iter().enumerate() {
                    let vj = v[j];
                    if vj != 0.0 {
                        for &(r, val) in col {
                            out[r as usize] += val * vj;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn column_rng(seed: u64, column: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column);
    rng
}

/// Dense transform with i.i.d. `N(0, 1/d)` entries.
pub fn sample_gaussian_jlt(d: usize, ambient: usize, seed: u64) -> Result<SketchMatrix> {
    if d == 0 || d > ambient {
        return Err(Error::InvalidShape(format!(
            "gaussian sketch needs 1 <= d <= D, got d={d}, D={ambient}"
        )));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut m = Mat::zeros(d, ambient);
    for j in 0..ambient {
        let mut rng = column_rng(seed, j as u64);
        for i in 0..d {
            let g: f64 = rng.sample(StandardNormal);
            m.set(i, j, g * scale);
        }
    }
    Ok(SketchMatrix {
        sketch_dim: d,
        ambient_dim: ambient,
        storage: SketchStorage::Dense(m),
        descriptor: Some(SketchDescriptor {
            d,
            ambient,
            ensemble: Ensemble::Gaussian,
            seed,
            s: None,
            c: DEFAULT_DIM_CONSTANT,
        }),
    })
}

/// Sparse transform: each column receives `s` distinct rows (uniform without
/// replacement) holding independent signs `+-1/sqrt(s)`.
pub fn sample_sparse_jlt(d: usize, ambient: usize, s: usize, seed: u64) -> Result<SketchMatrix> {
    if d == 0 || d > ambient || s == 0 || s > d {
        return Err(Error::InvalidShape(format!(
            "sparse sketch needs 1 <= s <= d <= D, got s={s}, d={d}, D={ambient}"
        )));
    }
    let magnitude = 1.0 / (s as f64).sqrt();
    let mut cols = Vec::with_capacity(ambient);
    for j in 0..ambient {
        let mut rng = column_rng(seed, j as u64);
        let mut rows = rand::seq::index::sample(&mut rng, d, s).into_vec();
        rows.sort_unstable();
        let col: Vec<(u32, f64)> = rows
            .into_iter()
            .map(|r| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (r as u32, sign * magnitude)
            })
            .collect();
        cols.push(col);
    }
    Ok(SketchMatrix {
        sketch_dim: d,
        ambient_dim: ambient,
        storage: SketchStorage::SparseColumns(cols),
        descriptor: Some(SketchDescriptor {
            d,
            ambient,
            ensemble: Ensemble::Sparse,
            seed,
            s: Some(s),
            c: DEFAULT_DIM_CONSTANT,
        }),
    })
}

/// Draw a transform as the configuration dictates, with the dimension clamped
/// to the ambient dimension.
pub fn sample_from_config(config: &SketchConfig, ambient: usize) -> Result<SketchMatrix> {
    let d = sketch_dimension(config, ambient)?;
    match config.ensemble {
        Ensemble::Gaussian => sample_gaussian_jlt(d, ambient, config.seed),
        Ensemble::Sparse => {
            let s = config
                .sparsity
                .unwrap_or_else(|| config.derived_sparsity(d))
                .min(d);
            sample_sparse_jlt(d, ambient, s, config.seed)
        }
    }
}

/// Worst pairwise inner-product distortion over the given unit vectors,
/// including each vector against itself:
/// `max |<Sv, Sw> - <v, w>|`.
pub fn jlt_distortion(s: &SketchMatrix, vectors: &[Vec<f64>]) -> Result<f64> {
    let sketched: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| s.apply_vec(v))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for i in 0..vectors.len() {
        for j in i..vectors.len() {
            let original: f64 = vectors[i]
                .iter()
                .zip(vectors[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            let mapped: f64 = sketched[i]
                .iter()
                .zip(sketched[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            worst = worst.max((mapped - original).abs());
        }
    }
    Ok(worst)
}
