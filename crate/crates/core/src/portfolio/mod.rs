//! Allocation models built on the prox, Dykstra, CCD, ADMM and QP engines.

pub mod entropy;
pub mod gmv;
pub mod mvo;
pub mod risk;
pub mod robo;
pub mod stats;

pub use entropy::{kl_portfolio, rqe_portfolio};
pub use gmv::{gmv_diversified, gmv_herfindahl, rebalance_penalized, GmvMethod, Rebalance};
pub use mvo::{
    index_sampling, mvo_benchmark, mvo_costs, mvo_gamma, mvo_target, mvo_turnover, Target,
};
pub use risk::{erc, mdp, risk_budgeting, RbEngine};
pub use robo::{robo_advisor, robo_cross_check, Formulation, RoboConfig};
pub use stats::{stats, PortfolioStats, RiskMeasure, StatsContext};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{min_eigenvalue, DenseMatrix};

/// Asset universe: returns, volatilities, correlations and the derived
/// covariance `Σ_ij = ρ_ij σ_i σ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetUniverse {
    pub names: Vec<String>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: DenseMatrix,
    pub cov: DenseMatrix,
    pub r: f64,
}

impl AssetUniverse {
    pub fn new(names: Vec<String>, mu: Vec<f64>, sigma: Vec<f64>, rho: DenseMatrix, r: f64) -> Result<Self> {
        let n = sigma.len();
        check_len("names", names.len(), n)?;
        check_len("mu", mu.len(), n)?;
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "correlation is {}x{}, expected {n}x{n}",
                rho.rows(),
                rho.cols()
            )));
        }
        crate::linalg::require_finite("mu", &mu)?;
        if let Some(i) = sigma.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::NonPositiveVariance(i));
        }
        if !rho.is_symmetric() {
            return Err(Error::InvalidInput("correlation matrix is not symmetric".into()));
        }
        for i in 0..n {
            if (rho.get(i, i) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("correlation diagonal {i} is not 1")));
            }
            for j in 0..n {
                if rho.get(i, j).abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidInput(format!("correlation ({i},{j}) outside [-1,1]")));
                }
            }
        }
        let mut cov = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                cov.set(i, j, rho.get(i, j) * sigma[i] * sigma[j]);
            }
        }
        check_psd(&cov)?;
        Ok(Self { names, mu, sigma, rho, cov, r })
    }

    /// Builds the universe from a covariance matrix.
    pub fn from_covariance(mu: Vec<f64>, cov: DenseMatrix, r: f64) -> Result<Self> {
        let n = cov.rows();
        if !cov.is_square() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        let sigma: Vec<f64> = (0..n).map(|i| cov.get(i, i).max(0.0).sqrt()).collect();
        if let Some(i) = sigma.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::NonPositiveVariance(i));
        }
        let mut rho = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { 1.0 } else { cov.get(i, j) / (sigma[i] * sigma[j]) };
                rho.set(i, j, v);
            }
        }
        let names = default_names(n);
        Self::new(names, mu, sigma, rho, r)
    }

    /// Same universe with zero expected returns.
    pub fn without_returns(n: usize, cov: DenseMatrix) -> Result<Self> {
        Self::from_covariance(vec![0.0; n], cov, 0.0)
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Result<Self> {
        check_len("mu", mu.len(), self.n())?;
        self.mu = mu;
        Ok(self)
    }

    /// Covariance rescaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_covariance(self.mu.clone(), self.cov.scaled(c), self.r)
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("asset{i}")).collect()
}

fn check_psd(cov: &DenseMatrix) -> Result<()> {
    let m = min_eigenvalue(cov);
    if m < -1e-10 {
        return Err(Error::InvalidInput(format!("covariance has eigenvalue {m:e}")));
    }
    Ok(())
}

/// Portfolio weights (decimals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub w: Vec<f64>,
}

impl PortfolioWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn is_long_only(&self) -> bool {
        self.w.iter().all(|&x| x >= -1e-12)
    }

    pub fn is_budgeted(&self) -> bool {
        (self.w.iter().sum::<f64>() - 1.0).abs() <= 1e-10
    }

    /// Weights in percent.
    pub fn percent(&self) -> Vec<f64> {
        self.w.iter().map(|x| 100.0 * x).collect()
    }
}

/// Weight-diversification requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiversificationConstraint {
    None,
    /// `𝒩(x) = 1/Σx_i² ≥ N⁻`
    EffectiveBets(f64),
    /// `−Σ x_i ln x_i ≥ SE⁻`
    ShannonEntropyFloor(f64),
}

/// Optional weight bounds and linear inequalities added to the budget.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub ineq: Option<(DenseMatrix, Vec<f64>)>,
}

impl Constraints {
    pub fn none() -> Self {
        Self::default()
    }

    /// `x ≥ 0`.
    pub fn long_only(n: usize) -> Self {
        Self {
            lower: Some(vec![0.0; n]),
            upper: Some(vec![1.0; n]),
            ineq: None,
        }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            ineq: None,
        }
    }

    pub fn is_long_only(&self) -> bool {
        self.lower.as_ref().is_some_and(|l| l.iter().all(|&x| x >= 0.0))
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_none() && self.upper.is_none() && self.ineq.is_none()
    }

    pub(crate) fn apply(&self, mut p: crate::qp::QpProblem) -> crate::qp::QpProblem {
        p.lo = self.lower.clone();
        p.hi = self.upper.clone();
        p.ineq = self.ineq.clone();
        p
    }
}

/// Single exit point for model outputs: clips round-off negatives of
/// long-only solutions and rescales to the budget.
pub(crate) fn gate(mut w: Vec<f64>, long_only: bool) -> Result<PortfolioWeights> {
    crate::linalg::require_finite("weights", &w)?;
    if long_only {
        if let Some(i) = w.iter().position(|&x| x < -1e-6) {
            return Err(Error::InfeasibleSuspected(format!(
                "weight {i} is {:e} in a long-only model",
                w[i]
            )));
        }
        for x in w.iter_mut() {
            *x = x.max(0.0);
        }
    }
    let s: f64 = w.iter().sum();
    if !(s.abs() > 1e-12) {
        return Err(Error::Degenerate("weights sum to zero".into()));
    }
    for x in w.iter_mut() {
        *x /= s;
    }
    Ok(PortfolioWeights { w })
}

pub(crate) fn equal_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}
