//! Portfolio statistics and risk decompositions.

use serde::{Deserialize, Serialize};

use super::AssetUniverse;
use crate::error::{check_len, Result};
use crate::linalg::{dot, sub, DenseMatrix};

/// Risk measure used for risk contributions and risk budgeting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiskMeasure {
    /// `σ(x) = √(xᵀΣx)`
    Volatility,
    /// `−xᵀ(μ − r) + ξσ(x)`
    StdevBased { xi: f64 },
}

/// Optional portfolios against which relative statistics are computed.
#[derive(Debug, Clone, Copy, Default)]
pub struct StatsContext<'a> {
    pub current: Option<&'a [f64]>,
    pub benchmark: Option<&'a [f64]>,
    pub reference: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub expected_return: f64,
    pub volatility: f64,
    pub herfindahl: f64,
    pub effective_bets: f64,
    pub diversification_ratio: f64,
    pub leverage: f64,
    pub long_exposure: f64,
    pub short_exposure: f64,
    /// Only for long-only portfolios.
    pub shannon_entropy: Option<f64>,
    pub risk_contributions: Vec<f64>,
    pub turnover: Option<f64>,
    pub active_share: Option<f64>,
    pub tracking_error: Option<f64>,
    pub kl_divergence: Option<f64>,
}

pub fn stats(w: &[f64], u: &AssetUniverse, ctx: &StatsContext<'_>) -> Result<PortfolioStats> {
    let n = u.n();
    check_len("weights", w.len(), n)?;
    for (what, v) in [("current", ctx.current), ("benchmark", ctx.benchmark), ("reference", ctx.reference)] {
        if let Some(v) = v {
            check_len(what, v.len(), n)?;
        }
    }
    let long_only = w.iter().all(|&x| x >= -1e-12);
    Ok(PortfolioStats {
        expected_return: dot(w, &u.mu),
        volatility: volatility(w, &u.cov),
        herfindahl: herfindahl(w),
        effective_bets: effective_bets(w),
        diversification_ratio: diversification_ratio(w, u),
        leverage: w.iter().map(|x| x.abs()).sum(),
        long_exposure: w.iter().filter(|&&x| x > 0.0).sum(),
        short_exposure: -w.iter().filter(|&&x| x < 0.0).sum::<f64>(),
        shannon_entropy: long_only.then(|| crate::prox::entropy(w)),
        risk_contributions: risk_contributions(w, u, RiskMeasure::Volatility),
        turnover: ctx.current.map(|c| turnover(w, c)),
        active_share: ctx.benchmark.map(|b| active_share(w, b)),
        tracking_error: ctx.benchmark.map(|b| tracking_error(w, b, &u.cov)),
        kl_divergence: ctx.reference.map(|r| kl_divergence(w, r)),
    })
}

pub fn volatility(w: &[f64], cov: &DenseMatrix) -> f64 {
    cov.quad_form(w).max(0.0).sqrt()
}

/// `ℋ(x) = Σ x_i²`
pub fn herfindahl(w: &[f64]) -> f64 {
    dot(w, w)
}

/// `𝒩(x) = 1/ℋ(x)`
pub fn effective_bets(w: &[f64]) -> f64 {
    1.0 / herfindahl(w)
}

/// `𝒟ℛ(x) = xᵀσ / σ(x)`
pub fn diversification_ratio(w: &[f64], u: &AssetUniverse) -> f64 {
    dot(w, &u.sigma) / volatility(w, &u.cov)
}

/// `Σ|x_i − x̄_i|`
pub fn turnover(x: &[f64], current: &[f64]) -> f64 {
    x.iter().zip(current).map(|(a, b)| (a - b).abs()).sum()
}

/// `½Σ|x_i − b_i|`
pub fn active_share(x: &[f64], b: &[f64]) -> f64 {
    0.5 * turnover(x, b)
}

/// `√((x − b)ᵀΣ(x − b))`
pub fn tracking_error(x: &[f64], b: &[f64], cov: &DenseMatrix) -> f64 {
    volatility(&sub(x, b), cov)
}

/// `Σ x_i ln(x_i / x̃_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(x: &[f64], reference: &[f64]) -> f64 {
    x.iter()
        .zip(reference)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

pub fn risk_measure(w: &[f64], u: &AssetUniverse, m: RiskMeasure) -> f64 {
    let s = volatility(w, &u.cov);
    match m {
        RiskMeasure::Volatility => s,
        RiskMeasure::StdevBased { xi } => {
            -w.iter().zip(&u.mu).map(|(x, mu)| x * (mu - u.r)).sum::<f64>() + xi * s
        }
    }
}

/// `RC_i = x_i ∂ℛ/∂x_i`; sums to `ℛ(x)`.
pub fn risk_contributions(w: &[f64], u: &AssetUniverse, m: RiskMeasure) -> Vec<f64> {
    let sx = u.cov.matvec(w);
    let s = volatility(w, &u.cov);
    if s == 0.0 {
        return vec![0.0; w.len()];
    }
    match m {
        RiskMeasure::Volatility => w.iter().zip(&sx).map(|(x, g)| x * g / s).collect(),
        RiskMeasure::StdevBased { xi } => w
            .iter()
            .zip(&sx)
            .zip(&u.mu)
            .map(|((x, g), mu)| x * (-(mu - u.r) + xi * g / s))
            .collect(),
    }
}
