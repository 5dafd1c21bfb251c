//! Kullback-Leibler and Rao quadratic entropy portfolios.

use super::{equal_weights, gate, AssetUniverse, Constraints, PortfolioWeights};
use crate::admm::{admm_solve, AdmmConfig, AdmmProblem};
use crate::dykstra::{dykstra_cycle, DykstraConfig};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::numerics::smallest_eigenvalue_power;
use crate::prox::{project, prox_kl, BoxedProx, ConvexSet, Prox};
use crate::qp::{qp_solve_from, QpConfig, QpProblem};

/// `min KL(x | x̃)` s.t. `1ᵀx = 1`, `0 ≤ x ≤ 1`, `μ(x) ≥ μ*`, `σ(x) ≤ σ*`.
/// Pass `f64::NEG_INFINITY` / `f64::INFINITY` to drop a target. ADMM with
/// the KL prox in the x-update and Dykstra over the constraint sets in the
/// y-update.
pub fn kl_portfolio(u: &AssetUniverse, reference: &[f64], mu_min: f64, sigma_max: f64) -> Result<PortfolioWeights> {
    let n = u.n();
    check_len("reference", reference.len(), n)?;
    if reference.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    if sigma_max.is_nan() || mu_min.is_nan() || sigma_max <= 0.0 {
        return Err(Error::InfeasibleTargets);
    }
    let mut sets = vec![
        ConvexSet::hyperplane(vec![1.0; n], 1.0)?,
        ConvexSet::boxed(vec![0.0; n], vec![1.0; n])?,
    ];
    if mu_min.is_finite() {
        sets.push(ConvexSet::halfspace(u.mu.iter().map(|m| -m).collect(), -mu_min)?);
    }
    if sigma_max.is_finite() {
        sets.push(ConvexSet::ellipsoid(&u.cov, sigma_max)?);
    }
    if sets.iter().all(|s| s.contains(reference, 1e-12)) {
        return gate(reference.to_vec(), true);
    }
    let dcfg = DykstraConfig {
        tol: 1e-13,
        max_cycles: 100_000,
    };
    let projections: Vec<BoxedProx<'_>> = sets
        .iter()
        .map(|s| Box::new(move |v: &[f64]| project(s, v)) as Box<dyn Fn(&[f64]) -> Result<Vec<f64>>>)
        .collect();
    let fns: Vec<&dyn Prox> = projections.iter().map(|p| p as &dyn Prox).collect();
    let y_update = |v: &[f64], _phi: f64| -> Result<Vec<f64>> {
        dykstra_cycle(&fns, v, &dcfg).map(|(x, _)| x).map_err(|e| match e {
            Error::EmptySetSuspected(_) => Error::InfeasibleTargets,
            other => other,
        })
    };
    let mut problem = AdmmProblem::consensus(|v, phi| prox_kl(v, 1.0 / phi, reference), y_update);
    let cfg = AdmmConfig {
        phi0: 1.0,
        eps: 1e-11,
        eps_dual: 1e-11,
        adaptive: true,
        ..AdmmConfig::default()
    };
    let s: f64 = reference.iter().sum();
    let start: Vec<f64> = reference.iter().map(|r| r / s).collect();
    let out = admm_solve(&mut problem, &start, &start, &cfg)?;
    gate(out.y, true)
}

fn check_dissimilarity(d: &DenseMatrix) -> Result<()> {
    if !d.is_square() {
        return Err(Error::DimensionMismatch("dissimilarity matrix must be square".into()));
    }
    if !d.is_symmetric() {
        return Err(Error::InvalidInput("dissimilarity matrix must be symmetric".into()));
    }
    let n = d.rows();
    for i in 0..n {
        if d.get(i, i) != 0.0 {
            return Err(Error::InvalidInput(format!("dissimilarity diagonal {i} is not zero")));
        }
        for j in 0..n {
            if d.get(i, j) < 0.0 {
                return Err(Error::InvalidInput(format!("dissimilarity ({i},{j}) is negative")));
            }
        }
    }
    Ok(())
}

/// `min ½xᵀDx` s.t. `1ᵀx = 1` and `c` (long-only when `c` is empty). `D`
/// is usually indefinite, so the ADMM penalty is held fixed at
/// `φ ≥ 1.1 |λ_min(D)|` and inflated tenfold on failure. The start
/// `(n, n − 1, …, 1)/Σ` breaks ties towards low indices.
pub fn rqe_portfolio(d: &DenseMatrix, c: &Constraints) -> Result<PortfolioWeights> {
    check_dissimilarity(d)?;
    let n = d.rows();
    let c = if c.is_empty() { Constraints::long_only(n) } else { c.clone() };
    if d.as_slice().iter().all(|&x| x == 0.0) {
        return gate(equal_weights(n), c.is_long_only());
    }
    let lmin = smallest_eigenvalue_power(d);
    let scale = d.as_slice().iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let base = if lmin < 0.0 { 1.1 * lmin.abs() } else { scale };
    let p = c.apply(QpProblem::new(d.clone(), vec![0.0; n]).with_budget());
    let total = (n * (n + 1) / 2) as f64;
    let start: Vec<f64> = (0..n).map(|i| (n - i) as f64 / total).collect();
    for k in 0..4 {
        let mut cfg = QpConfig {
            phi0: Some(base * 10f64.powi(k)),
            ..QpConfig::default()
        };
        cfg.admm.adaptive = false;
        cfg.admm.max_iter = 50_000;
        match qp_solve_from(&p, &cfg, &start) {
            Ok((x, _)) => return gate(x, c.is_long_only()),
            Err(Error::MaxIterExceeded { .. } | Error::NotPositiveDefinite { .. } | Error::NonFinite(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::IndefiniteUnhandled)
}

/// `½xᵀDx`
pub fn rqe(d: &DenseMatrix, x: &[f64]) -> f64 {
    0.5 * dot(x, &d.matvec(x))
}
