//! Global minimum variance portfolios with diversification and rebalancing
//! penalties.

use serde::{Deserialize, Serialize};

use super::stats::effective_bets;
use super::{equal_weights, gate, AssetUniverse, DiversificationConstraint, PortfolioWeights};
use crate::admm::{admm_solve, AdmmConfig, AdmmProblem};
use crate::dykstra::{dykstra_cycle, project_box_ball, DykstraConfig};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::prox::{project, soft_threshold_two_sided, truncate, ConvexSet, Norm, Prox};
use crate::qp::{qp_solve, EqualityKkt, QpConfig, QpProblem, QuadTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GmvMethod {
    /// Bisection on `λ` in `min ½xᵀ(Σ + λI)x`.
    LambdaBisection,
    /// ADMM with `y ∈ Box[0, x⁺] ∩ B₂(0, √(1/N⁻))`.
    Admm,
}

/// Cap used for the `λ* = ∞` (equal-weight) end of the bisection.
pub const LAMBDA_MAX: f64 = 1e6;

fn upper_or_ones(upper: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match upper {
        Some(u) => {
            check_len("upper bound", u.len(), n)?;
            Ok(u.to_vec())
        }
        None => Ok(vec![1.0; n]),
    }
}

/// Long-only GMV of the ridge problem `½xᵀ(Σ + λI)x`.
pub fn gmv_ridge(u: &AssetUniverse, upper: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = u.n();
    let p = QpProblem::new(u.cov.add_diag(lambda), vec![0.0; n])
        .with_budget()
        .with_bounds(vec![0.0; n], upper.to_vec());
    let cfg = QpConfig::default().with_eps(1e-12);
    qp_solve(&p, &cfg).map(|(x, _)| x)
}

/// Long-only GMV with `𝒩(x) ≥ N⁻`. Bisection returns `λ*` (`∞` for the
/// equal-weight end, `0` when the constraint is inactive).
pub fn gmv_herfindahl(
    u: &AssetUniverse,
    upper: Option<&[f64]>,
    n_min: f64,
    method: GmvMethod,
) -> Result<(PortfolioWeights, Option<f64>)> {
    let n = u.n();
    if !(n_min >= 1.0 && n_min <= n as f64 + 1e-12) {
        return Err(Error::UnreachableDiversification(n_min));
    }
    let hi_w = upper_or_ones(upper, n)?;
    if method == GmvMethod::Admm {
        let w = gmv_diversified(u, Some(&hi_w), DiversificationConstraint::EffectiveBets(n_min))?;
        return Ok((w, None));
    }
    let x0 = gmv_ridge(u, &hi_w, 0.0)?;
    if effective_bets(&x0) >= n_min - 1e-12 {
        return Ok((gate(x0, true)?, Some(0.0)));
    }
    if n_min >= n as f64 - 1e-9 {
        let ew = equal_weights(n);
        if ew.iter().zip(&hi_w).any(|(w, h)| w > h) {
            return Err(Error::UnreachableDiversification(n_min));
        }
        return Ok((gate(ew, true)?, Some(f64::INFINITY)));
    }
    let mut lo = 0.0;
    let mut hi = 1e-3;
    let mut x_hi = loop {
        let x = gmv_ridge(u, &hi_w, hi)?;
        if effective_bets(&x) >= n_min {
            break x;
        }
        lo = hi;
        hi *= 2.0;
        if hi > LAMBDA_MAX {
            return Err(Error::UnreachableDiversification(n_min));
        }
    };
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let x = gmv_ridge(u, &hi_w, mid)?;
        if effective_bets(&x) >= n_min {
            hi = mid;
            x_hi = x;
        } else {
            lo = mid;
        }
    }
    Ok((gate(x_hi, true)?, Some(0.5 * (lo + hi))))
}

fn admm_cfg(u: &AssetUniverse) -> AdmmConfig {
    AdmmConfig {
        phi0: u.cov.trace() / u.n() as f64,
        eps: 1e-11,
        eps_dual: 1e-11,
        adaptive: true,
        ..AdmmConfig::default()
    }
}

fn budget_row(n: usize) -> (DenseMatrix, Vec<f64>) {
    (DenseMatrix::row_vector(&vec![1.0; n]), vec![1.0])
}

/// Long-only GMV `min ½xᵀΣx` s.t. `1ᵀx = 1`, `0 ≤ x ≤ x⁺`, `𝒟(x) ≥ 𝒟⁻`, by
/// ADMM: the x-update is the budget-constrained ridge QP and the y-update
/// projects onto the box intersected with the diversification set.
pub fn gmv_diversified(u: &AssetUniverse, upper: Option<&[f64]>, d: DiversificationConstraint) -> Result<PortfolioWeights> {
    let n = u.n();
    let hi = upper_or_ones(upper, n)?;
    let lo = vec![0.0; n];
    match d {
        DiversificationConstraint::EffectiveBets(m) => {
            if !(m >= 1.0 && m <= n as f64 + 1e-12) {
                return Err(Error::UnreachableDiversification(m));
            }
            if m >= n as f64 - 1e-12 {
                return gate(equal_weights(n), true);
            }
        }
        DiversificationConstraint::ShannonEntropyFloor(h) => {
            let cap = (n as f64).ln();
            if !(h <= cap + 1e-12) {
                return Err(Error::UnreachableDiversification(h));
            }
            if h >= cap - 1e-12 {
                return gate(equal_weights(n), true);
            }
        }
        DiversificationConstraint::None => {}
    }
    let dcfg = DykstraConfig {
        tol: 1e-13,
        max_cycles: 100_000,
    };
    let q = QuadTerm::Dense(u.cov.clone());
    let eq = budget_row(n);
    let mut kkt = EqualityKkt::new(&q, Some(&eq));
    let entropy_set = match d {
        DiversificationConstraint::ShannonEntropyFloor(h) => Some(ConvexSet::entropy_floor(h)?),
        _ => None,
    };
    let y_update = |v: &[f64], _phi: f64| -> Result<Vec<f64>> {
        match d {
            DiversificationConstraint::None => truncate(v, &lo, &hi),
            DiversificationConstraint::EffectiveBets(m) => {
                project_box_ball(v, &lo, &hi, &vec![0.0; n], (1.0 / m).sqrt(), &dcfg)
            }
            DiversificationConstraint::ShannonEntropyFloor(_) => {
                let set = entropy_set.as_ref().expect("entropy set built above");
                let p_box = |w: &[f64]| truncate(w, &lo, &hi);
                let p_ent = |w: &[f64]| project(set, w);
                let fns: [&dyn Prox; 2] = [&p_box, &p_ent];
                dykstra_cycle(&fns, v, &dcfg).map(|(x, _)| x)
            }
        }
    };
    let mut problem = AdmmProblem::consensus(
        |v, phi| {
            let w: Vec<f64> = v.iter().map(|x| phi * x).collect();
            kkt.solve(phi, &w)
        },
        y_update,
    );
    let ew = equal_weights(n);
    let out = admm_solve(&mut problem, &ew, &ew, &admm_cfg(u))?;
    gate(out.y, true)
}

/// Rebalancing penalty added to `½xᵀΣx` under the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rebalance {
    /// `λ Σ (c⁻_i (x_t,i − x_i)_+ + c⁺_i (x_i − x_t,i)_+)`
    Cost {
        c_minus: Vec<f64>,
        c_plus: Vec<f64>,
        scale: f64,
    },
    /// `Σ|x_i − x_t,i| ≤ TO⁺`
    Turnover { cap: f64 },
}

impl Rebalance {
    /// Penalty value at `x` (zero for the turnover constraint when met).
    pub fn penalty(&self, x: &[f64], current: &[f64]) -> f64 {
        match self {
            Self::Cost { c_minus, c_plus, scale } => {
                scale
                    * x.iter()
                        .zip(current)
                        .zip(c_minus.iter().zip(c_plus))
                        .map(|((a, b), (cm, cp))| cm * (b - a).max(0.0) + cp * (a - b).max(0.0))
                        .sum::<f64>()
            }
            Self::Turnover { .. } => 0.0,
        }
    }
}

/// `min ½xᵀΣx + cost(x | x_t)` (or with a turnover cap) s.t. `1ᵀx = 1`, by
/// ADMM with the cost prox `x_t + S(v − x_t; λc⁻/φ, λc⁺/φ)` or the ℓ1-ball
/// projection around `x_t` in the y-update.
pub fn rebalance_penalized(u: &AssetUniverse, current: &[f64], mode: &Rebalance) -> Result<PortfolioWeights> {
    let n = u.n();
    check_len("current weights", current.len(), n)?;
    match mode {
        Rebalance::Cost { c_minus, c_plus, scale } => {
            check_len("sell costs", c_minus.len(), n)?;
            check_len("buy costs", c_plus.len(), n)?;
            if !(*scale >= 0.0) || c_minus.iter().chain(c_plus).any(|&c| !(c >= 0.0)) {
                return Err(Error::NegativeCost);
            }
        }
        Rebalance::Turnover { cap } => {
            if !(*cap >= 0.0) {
                return Err(Error::InvalidInput(format!("turnover cap must be non-negative, got {cap}")));
            }
            if *cap == 0.0 {
                return gate(current.to_vec(), false);
            }
        }
    }
    let q = QuadTerm::Dense(u.cov.clone());
    let eq = budget_row(n);
    let mut kkt = EqualityKkt::new(&q, Some(&eq));
    let ball = match mode {
        Rebalance::Turnover { cap } => Some(ConvexSet::ball(Norm::L1, current.to_vec(), *cap)?),
        Rebalance::Cost { .. } => None,
    };
    let y_update = |v: &[f64], phi: f64| -> Result<Vec<f64>> {
        match mode {
            Rebalance::Cost { c_minus, c_plus, scale } => {
                let d: Vec<f64> = v.iter().zip(current).map(|(a, b)| a - b).collect();
                let lm: Vec<f64> = c_minus.iter().map(|c| scale * c / phi).collect();
                let lp: Vec<f64> = c_plus.iter().map(|c| scale * c / phi).collect();
                let s = soft_threshold_two_sided(&d, &lm, &lp)?;
                Ok(s.iter().zip(current).map(|(a, b)| a + b).collect())
            }
            Rebalance::Turnover { .. } => project(ball.as_ref().expect("ball built above"), v),
        }
    };
    let mut problem = AdmmProblem::consensus(
        |v, phi| {
            let w: Vec<f64> = v.iter().map(|x| phi * x).collect();
            kkt.solve(phi, &w)
        },
        y_update,
    );
    let out = admm_solve(&mut problem, current, current, &admm_cfg(u))?;
    gate(out.y, false)
}
