//! Bundled parameter sets, the 5×5 box-QP example and the synthetic lasso
//! generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::portfolio::{default_names, AssetUniverse};

/// A universe with an optional benchmark.
#[derive(Debug, Clone)]
pub struct ParameterSet {
    pub universe: AssetUniverse,
    pub benchmark: Option<Vec<f64>>,
}

/// Volatilities of parameter set #1.
pub const SET1_VOLS: [f64; 8] = [0.21, 0.20, 0.40, 0.18, 0.35, 0.23, 0.07, 0.29];

/// Lower triangle (by row, in %) of the set #1 correlation matrix.
pub const SET1_CORR_LOWER: [&[f64]; 8] = [
    &[100.0],
    &[80.0, 100.0],
    &[70.0, 75.0, 100.0],
    &[60.0, 65.0, 90.0, 100.0],
    &[70.0, 50.0, 70.0, 85.0, 100.0],
    &[50.0, 60.0, 70.0, 80.0, 60.0, 100.0],
    &[70.0, 50.0, 70.0, 75.0, 80.0, 50.0, 100.0],
    &[60.0, 65.0, 70.0, 75.0, 65.0, 70.0, 80.0, 100.0],
];

/// Capitalization weights of the set #1 index. Only seven are published;
/// the fourth (13%) is reconstructed so that the weights sum to one and
/// `𝒩(b) = 6.435`.
pub const SET1_BENCHMARK: [f64; 8] = [0.23, 0.19, 0.17, 0.13, 0.09, 0.08, 0.06, 0.05];

/// Volatilities of parameter set #2.
pub const SET2_VOLS: [f64; 8] = [0.25, 0.20, 0.15, 0.18, 0.30, 0.20, 0.15, 0.35];

/// Correlation matrix from a lower triangle given in percent.
pub fn correlation_from_lower(lower: &[&[f64]]) -> Result<DenseMatrix> {
    let n = lower.len();
    let mut rho = DenseMatrix::zeros(n, n);
    for (i, row) in lower.iter().enumerate() {
        if row.len() != i + 1 {
            return Err(Error::BadDims(format!("row {i} has {} entries", row.len())));
        }
        for (j, v) in row.iter().enumerate() {
            rho.set(i, j, v / 100.0);
            rho.set(j, i, v / 100.0);
        }
    }
    Ok(rho)
}

/// `Σ_ij = ρ_ij σ_i σ_j`
pub fn covariance(vols: &[f64], rho: &DenseMatrix) -> DenseMatrix {
    let n = vols.len();
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, rho.get(i, j) * vols[i] * vols[j]);
        }
    }
    s
}

/// Parameter set #1: eight stocks with zero expected returns and a
/// capitalization-weighted benchmark.
pub fn parameter_set_1() -> ParameterSet {
    let rho = correlation_from_lower(&SET1_CORR_LOWER).expect("constant triangle is well formed");
    let universe = AssetUniverse::new(default_names(8), vec![0.0; 8], SET1_VOLS.to_vec(), rho, 0.0)
        .expect("bundled set #1 is valid");
    ParameterSet {
        universe,
        benchmark: Some(SET1_BENCHMARK.to_vec()),
    }
}

fn set2_correlation() -> DenseMatrix {
    let mut rho = DenseMatrix::zeros(8, 8);
    for i in 0..8 {
        for j in 0..8 {
            rho.set(i, j, if i == j { 1.0 } else { 0.60 });
        }
    }
    for (i, j, v) in [(1, 0, 0.20), (2, 0, 0.55)] {
        rho.set(i, j, v);
        rho.set(j, i, v);
    }
    rho
}

fn set2_with_vols(vols: Vec<f64>) -> ParameterSet {
    let universe = AssetUniverse::new(default_names(8), vec![0.0; 8], vols, set2_correlation(), 0.0)
        .expect("bundled set #2 is valid");
    ParameterSet {
        universe,
        benchmark: None,
    }
}

/// Parameter set #2 with the published volatilities.
pub fn parameter_set_2() -> ParameterSet {
    set2_with_vols(SET2_VOLS.to_vec())
}

/// Parameter set #2 with `σ₈ = 25%`, the value that reproduces the
/// published MDP table (with `σ₈ = 35%` the long/short column is off by
/// several percentage points).
pub fn parameter_set_2_table5() -> ParameterSet {
    let mut vols = SET2_VOLS.to_vec();
    vols[7] = 0.25;
    set2_with_vols(vols)
}

/// The 5×5 box-constrained QP example: `(Q, R, lo, hi)`.
pub fn box_qp_example() -> (DenseMatrix, Vec<f64>, Vec<f64>, Vec<f64>) {
    let q = DenseMatrix::from_rows(&[
        vec![5.76, 5.11, 3.47, 5.13, 6.82],
        vec![5.11, 7.98, 5.38, 4.30, 8.70],
        vec![3.47, 5.38, 4.01, 2.83, 5.91],
        vec![5.13, 4.30, 2.83, 4.70, 5.84],
        vec![6.82, 8.70, 5.91, 5.84, 10.18],
    ])
    .expect("constant matrix is well formed");
    let r = vec![0.65, 0.72, 0.46, 0.59, 1.26];
    (q, r, vec![-0.5; 5], vec![1.0; 5])
}

/// Synthetic regression data.
#[derive(Debug, Clone)]
pub struct LassoData {
    /// Row-major `n × p` design, standardized by column.
    pub x: DenseMatrix,
    /// Standardized response.
    pub y: Vec<f64>,
    /// Coefficients used to simulate the raw response.
    pub beta: Vec<f64>,
}

/// Magnitude of the four large coefficients.
pub const LASSO_LARGE_BETA: f64 = 6.0;
/// Residual standard deviation.
pub const LASSO_NOISE_SD: f64 = 0.2;
/// Default number of observations.
pub const LASSO_DEFAULT_N: usize = 10_000;
/// Default number of regressors.
pub const LASSO_DEFAULT_P: usize = 50;
/// Penalty used in the convergence experiments.
pub const LASSO_LAMBDA: f64 = 900.0;

/// `X_ij ~ U[0, 1]`, `β_j ~ U[−3, 3]` except four coefficients set to
/// `±6`, `ε ~ N(0, 0.2²)`, `Y = Xβ + ε`; then every column of `X` and `Y`
/// is centred and scaled to unit (population) variance.
pub fn lasso_synthetic(n: usize, p: usize, seed: u64) -> Result<LassoData> {
    if p < 4 || n <= p {
        return Err(Error::BadDims(format!("need n > p >= 4, got n={n}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let coef = Uniform::new_inclusive(-3.0, 3.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let noise = Normal::new(0.0, LASSO_NOISE_SD).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut beta: Vec<f64> = (0..p).map(|_| coef.sample(&mut rng)).collect();
    let large = rand::seq::index::sample(&mut rng, p, 4);
    for j in large.iter() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        beta[j] = sign * LASSO_LARGE_BETA;
    }
    let mut data: Vec<f64> = (0..n * p).map(|_| unit.sample(&mut rng)).collect();
    let mut y: Vec<f64> = (0..n)
        .map(|i| {
            let row = &data[i * p..(i + 1) * p];
            row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + noise.sample(&mut rng)
        })
        .collect();
    for j in 0..p {
        let mut col: Vec<f64> = (0..n).map(|i| data[i * p + j]).collect();
        standardize(&mut col)?;
        for (i, v) in col.into_iter().enumerate() {
            data[i * p + j] = v;
        }
    }
    standardize(&mut y)?;
    Ok(LassoData {
        x: DenseMatrix::new(n, p, data)?,
        y,
        beta,
    })
}

fn standardize(v: &mut [f64]) -> Result<()> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    for x in v.iter_mut() {
        *x -= mean;
    }
    let sd = (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("constant column".into()));
    }
    for x in v.iter_mut() {
        *x /= sd;
    }
    Ok(())
}

/// JSON form of a parameter set (decimals).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniverseJson {
    pub names: Vec<String>,
    pub mu: Vec<f64>,
    pub vols: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    #[serde(default)]
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<Vec<f64>>,
}

pub fn to_json(set: &ParameterSet) -> UniverseJson {
    let u = &set.universe;
    let rows = |m: &DenseMatrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    UniverseJson {
        names: u.names.clone(),
        mu: u.mu.clone(),
        vols: u.sigma.clone(),
        correlation: rows(&u.rho),
        covariance: rows(&u.cov),
        r: u.r,
        benchmark: set.benchmark.clone(),
    }
}

pub fn from_json(j: &UniverseJson) -> Result<ParameterSet> {
    let rho = DenseMatrix::from_rows(&j.correlation)?;
    let universe = AssetUniverse::new(j.names.clone(), j.mu.clone(), j.vols.clone(), rho, j.r)?;
    Ok(ParameterSet {
        universe,
        benchmark: j.benchmark.clone(),
    })
}
