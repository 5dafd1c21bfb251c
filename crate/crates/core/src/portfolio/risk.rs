//! Risk-based allocations: ERC, risk budgeting and the most diversified
//! portfolio.

use serde::{Deserialize, Serialize};

use super::stats::RiskMeasure;
use super::{equal_weights, gate, AssetUniverse, DiversificationConstraint, PortfolioWeights};
use crate::admm::{admm_solve, AdmmConfig, AdmmProblem, ShiftedFactor};
use crate::cd::{ccd_erc, ccd_qp_logbarrier, ccd_rb_stdev, erc_default_lambda, CdConfig};
use crate::dykstra::{dykstra_cycle, project_box_ball, DykstraConfig};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm_inf, symmetric_eigen, Cholesky, DenseMatrix};
use crate::numerics::{bisect, RootBracket};
use crate::prox::{project, prox_log_barrier, truncate, ConvexSet, Norm, Prox};
use crate::report::SolverReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RbEngine {
    Ccd,
    Admm,
}

fn tight_cd() -> CdConfig {
    CdConfig::default().with_tol(1e-12)
}

/// Equal risk contribution portfolio: the rescaled CCD solution of
/// `min ½xᵀΣx − λ Σ ln x_i` with `λ = √(x0ᵀΣx0)`, `x0 = 1/n`.
pub fn erc(u: &AssetUniverse) -> Result<PortfolioWeights> {
    let x0 = equal_weights(u.n());
    let lambda = erc_default_lambda(&u.cov, &x0);
    let (x, _) = ccd_erc(&u.cov, lambda, &x0, &tight_cd())?;
    gate(x, true)
}

/// ERC by ADMM with `f_x = ½xᵀΣx` and `f_y = −λ Σ ln y_i`:
/// `x = (Σ + φI)⁻¹φ(y − u)`, `y = ½(v + √(v² + 4λ/φ))`. Returns the
/// unscaled `y`.
pub fn erc_admm(sigma: &DenseMatrix, lambda: f64, x0: &[f64], cfg: &AdmmConfig) -> Result<(Vec<f64>, SolverReport)> {
    let n = x0.len();
    check_len("x0", sigma.rows(), n)?;
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let ones = vec![1.0; n];
    let mut factor = ShiftedFactor::new(sigma.clone());
    let mut problem = AdmmProblem::consensus(
        move |v, phi| {
            let rhs: Vec<f64> = v.iter().map(|x| phi * x).collect();
            factor.solve(phi, &rhs)
        },
        move |v, phi| prox_log_barrier(v, lambda / phi, &ones),
    );
    let out = admm_solve(&mut problem, x0, x0, cfg)?;
    let mut rep = out.report;
    rep.solver = "erc_admm".into();
    Ok((out.y, rep))
}

fn normalized_budgets(rb: &[f64], n: usize) -> Result<Vec<f64>> {
    check_len("risk budgets", rb.len(), n)?;
    if rb.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    let s: f64 = rb.iter().sum();
    Ok(rb.iter().map(|b| b / s).collect())
}

/// Risk budgeting portfolio `RC_i(x) ∝ RB_i`: the rescaled solution of
/// `min ℛ(x) − λ Σ RB_i ln x_i`. The volatility case uses the variance form
/// `½xᵀΣx`, which has the same rescaled solution.
pub fn risk_budgeting(u: &AssetUniverse, rb: &[f64], measure: RiskMeasure, engine: RbEngine) -> Result<PortfolioWeights> {
    let n = u.n();
    let rb = normalized_budgets(rb, n)?;
    let x0 = equal_weights(n);
    let lambda = erc_default_lambda(&u.cov, &x0);
    let x = match (engine, measure) {
        (RbEngine::Ccd, RiskMeasure::Volatility) => {
            let lams: Vec<f64> = rb.iter().map(|b| lambda * b).collect();
            ccd_qp_logbarrier(&u.cov, &vec![0.0; n], &lams, &x0, &tight_cd())?.0
        }
        (RbEngine::Ccd, RiskMeasure::StdevBased { xi }) => {
            ccd_rb_stdev(&u.mu, u.r, xi, &u.cov, &rb, lambda, &x0, &tight_cd())?.0
        }
        (RbEngine::Admm, m) => rb_admm(u, &rb, m, lambda, &x0)?,
    };
    gate(x, true)
}

fn rb_admm(u: &AssetUniverse, rb: &[f64], m: RiskMeasure, lambda: f64, x0: &[f64]) -> Result<Vec<f64>> {
    let cfg = AdmmConfig {
        phi0: 1.0,
        eps: 1e-12,
        eps_dual: 1e-12,
        adaptive: true,
        ..AdmmConfig::default()
    };
    let rbv = rb.to_vec();
    let y_update = move |v: &[f64], phi: f64| prox_log_barrier(v, lambda / phi, &rbv);
    let out = match m {
        RiskMeasure::Volatility => {
            let mut factor = ShiftedFactor::new(u.cov.clone());
            let mut problem = AdmmProblem::consensus(
                move |v, phi| {
                    let rhs: Vec<f64> = v.iter().map(|x| phi * x).collect();
                    factor.solve(phi, &rhs)
                },
                y_update,
            );
            admm_solve(&mut problem, x0, x0, &cfg)?
        }
        RiskMeasure::StdevBased { xi } => {
            if !(xi > 0.0) {
                return Err(Error::InvalidInput(format!("xi must be positive, got {xi}")));
            }
            let prox = VolatilityProx::new(&u.cov);
            let excess: Vec<f64> = u.mu.iter().map(|m| m - u.r).collect();
            let mut problem = AdmmProblem::consensus(
                move |v, phi| {
                    let w: Vec<f64> = v.iter().zip(&excess).map(|(a, e)| a + e / phi).collect();
                    prox.prox(&w, phi / xi)
                },
                y_update,
            );
            admm_solve(&mut problem, x0, x0, &cfg)?
        }
    };
    Ok(out.y)
}

/// Prox of `σ(x) = √(xᵀΣx)`: `argmin σ(x) + φ/2‖x − w‖²`. In the eigenbasis
/// `x̂_i = φs ĉ_i / (λ_i + φs)` where `s = σ(x)` solves
/// `Σ λ_i φ² ĉ_i² / (λ_i + φs)² = 1`; `x = 0` when no positive root exists.
pub struct VolatilityProx {
    eigvals: Vec<f64>,
    eigvecs: DenseMatrix,
}

impl VolatilityProx {
    pub fn new(sigma: &DenseMatrix) -> Self {
        let (eigvals, eigvecs) = symmetric_eigen(sigma);
        Self {
            eigvals: eigvals.into_iter().map(|l| l.max(0.0)).collect(),
            eigvecs,
        }
    }

    pub fn prox(&self, w: &[f64], phi: f64) -> Result<Vec<f64>> {
        let c = self.eigvecs.tr_matvec(w);
        let lam = &self.eigvals;
        let h = |s: f64| -> f64 {
            lam.iter()
                .zip(&c)
                .map(|(l, ci)| {
                    let d = l + phi * s;
                    if d == 0.0 {
                        if ci * ci * l > 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    } else {
                        l * (phi * ci / d).powi(2)
                    }
                })
                .sum::<f64>()
                - 1.0
        };
        if h(0.0) <= 0.0 {
            return Ok(vec![0.0; w.len()]);
        }
        let top: f64 = lam.iter().zip(&c).map(|(l, ci)| l * ci * ci).sum::<f64>().sqrt();
        let hi = top * (1.0 + 1e-9) + 1e-300;
        let s = bisect(h, RootBracket::new(0.0, hi)?.with_tol(1e-15 * hi.max(1e-300)).with_max_iter(400))?;
        let xhat: Vec<f64> = lam
            .iter()
            .zip(&c)
            .map(|(l, ci)| phi * s * ci / (l + phi * s))
            .collect();
        Ok(self.eigvecs.matvec(&xhat))
    }
}

/// Most diversified portfolio: maximizes `xᵀσ / √(xᵀΣx)`, i.e.
/// `min ½ ln(xᵀΣx) − ln(xᵀσ)` s.t. `1ᵀx = 1`. The unconstrained long/short
/// case is `Σ⁻¹σ` rescaled; otherwise ADMM with a projected-Newton x-update
/// on the budget hyperplane and a projection onto `Ω ∩ 𝔇` in the y-update.
pub fn mdp(u: &AssetUniverse, long_only: bool, d: DiversificationConstraint) -> Result<PortfolioWeights> {
    let n = u.n();
    if n == 1 {
        return gate(vec![1.0], long_only);
    }
    if !long_only && d == DiversificationConstraint::None {
        let x = crate::linalg::solve_spd(&u.cov, &u.sigma)?;
        return gate(x, false);
    }
    match d {
        DiversificationConstraint::EffectiveBets(m) if !(m >= 1.0 && m <= n as f64 + 1e-12) => {
            return Err(Error::UnreachableDiversification(m))
        }
        DiversificationConstraint::ShannonEntropyFloor(h) if !(h <= (n as f64).ln() + 1e-12) => {
            return Err(Error::UnreachableDiversification(h))
        }
        DiversificationConstraint::EffectiveBets(m) if m >= n as f64 - 1e-12 => {
            return gate(equal_weights(n), long_only)
        }
        DiversificationConstraint::ShannonEntropyFloor(h) if h >= (n as f64).ln() - 1e-12 => {
            return gate(equal_weights(n), long_only)
        }
        _ => {}
    }
    let dcfg = DykstraConfig {
        tol: 1e-13,
        max_cycles: 100_000,
    };
    let lo = vec![if long_only { 0.0 } else { f64::NEG_INFINITY }; n];
    let hi = vec![if long_only { 1.0 } else { f64::INFINITY }; n];
    let entropy_set = match d {
        DiversificationConstraint::ShannonEntropyFloor(h) => Some(ConvexSet::entropy_floor(h)?),
        _ => None,
    };
    let ball = match d {
        DiversificationConstraint::EffectiveBets(m) if !long_only => {
            Some(ConvexSet::ball(Norm::L2, vec![0.0; n], (1.0 / m).sqrt())?)
        }
        _ => None,
    };
    let y_update = |v: &[f64], _phi: f64| -> Result<Vec<f64>> {
        match d {
            DiversificationConstraint::None => truncate(v, &lo, &hi),
            DiversificationConstraint::EffectiveBets(m) => match &ball {
                Some(b) => project(b, v),
                None => project_box_ball(v, &lo, &hi, &vec![0.0; n], (1.0 / m).sqrt(), &dcfg),
            },
            DiversificationConstraint::ShannonEntropyFloor(_) => {
                let set = entropy_set.as_ref().expect("entropy set built above");
                let p_box = |w: &[f64]| truncate(w, &lo, &hi);
                let p_ent = |w: &[f64]| project(set, w);
                let fns: [&dyn Prox; 2] = [&p_box, &p_ent];
                dykstra_cycle(&fns, v, &dcfg).map(|(x, _)| x)
            }
        }
    };
    let x0 = equal_weights(n);
    let mut inner = MdpStep::new(u, x0.clone());
    let mut problem = AdmmProblem::consensus(|v, phi| inner.solve(v, phi), y_update);
    let (eig, _) = symmetric_eigen(&u.cov);
    let top = eig.iter().cloned().fold(0.0, f64::max);
    let cfg = AdmmConfig {
        phi0: top / u.cov.quad_form(&x0),
        eps: 1e-11,
        eps_dual: 1e-11,
        adaptive: true,
        ..AdmmConfig::default()
    };
    let out = admm_solve(&mut problem, &x0, &x0, &cfg)?;
    gate(out.y, long_only)
}

/// `½ ln(xᵀΣx) − ln(xᵀσ)`
pub fn mdp_objective(u: &AssetUniverse, x: &[f64]) -> f64 {
    0.5 * u.cov.quad_form(x).ln() - dot(x, &u.sigma).ln()
}

/// Gradient of the MDP objective projected on the budget hyperplane.
pub fn mdp_projected_gradient(u: &AssetUniverse, x: &[f64]) -> Vec<f64> {
    let g = mdp_gradient(u, x);
    project_out_mean(&g)
}

fn mdp_gradient(u: &AssetUniverse, x: &[f64]) -> Vec<f64> {
    let sx = u.cov.matvec(x);
    let q = dot(x, &sx);
    let s = dot(x, &u.sigma);
    sx.iter().zip(&u.sigma).map(|(a, b)| a / q - b / s).collect()
}

fn project_out_mean(g: &[f64]) -> Vec<f64> {
    let m = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| x - m).collect()
}

/// x-update `argmin ½ ln(xᵀΣx) − ln(xᵀσ) + φ/2‖x − v‖²` on `1ᵀx = 1`, warm
/// started from the previous solution.
struct MdpStep<'a> {
    u: &'a AssetUniverse,
    x: Vec<f64>,
}

impl<'a> MdpStep<'a> {
    fn new(u: &'a AssetUniverse, x: Vec<f64>) -> Self {
        Self { u, x }
    }

    fn value(&self, x: &[f64], v: &[f64], phi: f64) -> f64 {
        let q = self.u.cov.quad_form(x);
        let s = dot(x, &self.u.sigma);
        if !(q > 0.0 && s > 0.0) {
            return f64::INFINITY;
        }
        let pen: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * q.ln() - s.ln() + 0.5 * phi * pen
    }

    fn solve(&mut self, v: &[f64], phi: f64) -> Result<Vec<f64>> {
        let n = v.len();
        let u = self.u;
        let mut x = self.x.clone();
        if !self.value(&x, v, phi).is_finite() {
            x = equal_weights(n);
        }
        for _ in 0..200 {
            let sx = u.cov.matvec(&x);
            let q = dot(&x, &sx);
            let s = dot(&x, &u.sigma);
            let g: Vec<f64> = (0..n)
                .map(|i| sx[i] / q - u.sigma[i] / s + phi * (x[i] - v[i]))
                .collect();
            let pg = project_out_mean(&g);
            if norm_inf(&pg) <= 1e-14 {
                break;
            }
            let mut h = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let val = u.cov.get(i, j) / q - sx[i] * sx[j] / (q * q) + u.sigma[i] * u.sigma[j] / (s * s)
                        + if i == j { phi } else { 0.0 };
                    h.set(i, j, val);
                }
            }
            let dir = match Cholesky::new(&h) {
                Ok(c) => {
                    let hg = c.solve(&g);
                    let h1 = c.solve(&vec![1.0; n]);
                    let nu = -hg.iter().sum::<f64>() / h1.iter().sum::<f64>();
                    hg.iter().zip(&h1).map(|(a, b)| -(a + nu * b)).collect::<Vec<f64>>()
                }
                Err(_) => pg.iter().map(|x| -x).collect(),
            };
            let f0 = self.value(&x, v, phi);
            let slope = dot(&g, &dir);
            if !(slope < 0.0) {
                break;
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                if self.value(&cand, v, phi) <= f0 + 1e-4 * t * slope {
                    x = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        // keep the budget exact against drift
        let shift = (x.iter().sum::<f64>() - 1.0) / n as f64;
        for xi in x.iter_mut() {
            *xi -= shift;
        }
        self.x = x.clone();
        Ok(x)
    }
}

/// Risk contributions relative to their budgets, `RC_i / RB_i`.
pub fn budget_ratios(u: &AssetUniverse, w: &[f64], rb: &[f64], m: RiskMeasure) -> Vec<f64> {
    super::stats::risk_contributions(w, u, m)
        .iter()
        .zip(rb)
        .map(|(rc, b)| rc / b)
        .collect()
}
