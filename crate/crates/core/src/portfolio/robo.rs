//! Robo-advisor allocation: MVO with a benchmark, ℓ1/ℓ2 penalties around
//! the current and reference portfolios and a risk-budgeting log barrier,
//! under `1ᵀx = 1`, `0 ≤ x ≤ 1` and extra linear/non-linear constraints.

use serde::{Deserialize, Serialize};

use super::{equal_weights, gate, AssetUniverse, Constraints, PortfolioWeights};
use crate::admm::{admm_solve, AdmmConfig, AdmmProblem};
use crate::cd::{ccd_qp_logbarrier, CdConfig};
use crate::dykstra::{dykstra_cycle, dykstra_two, project_general_linear, DykstraConfig, LinearSet};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, max_abs_diff, sub, DenseMatrix};
use crate::prox::{project, BoxedProx, ConvexSet, Prox};
use crate::qp::{qp_solve_from, QpConfig, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// x-step: QP with the budget, box and linear constraints; y-step: ℓ1
    /// and barrier prox with the non-linear constraints.
    AdmmQp,
    /// x-step: CCD on the quadratic plus barrier; y-step: ℓ1 prox with all
    /// constraints.
    AdmmCcd,
}

/// Hyperparameters of
/// `½(x − b)ᵀΣ(x − b) − γ(x − b)ᵀμ + ϱ₁‖Γ₁(x − x_t)‖₁ + ½ϱ₂‖Γ₂(x − x_t)‖²
///  + ϱ̃₁‖Γ̃₁(x − x̃)‖₁ + ½ϱ̃₂‖Γ̃₂(x − x̃)‖² − λ Σ RB_i ln x_i`.
/// `Γ₁` and `Γ̃₁` are diagonal and stored as vectors.
#[derive(Debug, Clone)]
pub struct RoboConfig {
    pub benchmark: Vec<f64>,
    pub reference: Vec<f64>,
    pub current: Vec<f64>,
    pub gamma: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho1_ref: f64,
    pub rho2_ref: f64,
    pub lambda: f64,
    pub gamma1: Vec<f64>,
    pub gamma2: DenseMatrix,
    pub gamma1_ref: Vec<f64>,
    pub gamma2_ref: DenseMatrix,
    pub rb: Vec<f64>,
    pub linear: Constraints,
    pub nonlinear: Vec<ConvexSet>,
    pub formulation: Formulation,
}

impl RoboConfig {
    /// All penalties off, `b = 0`, `x̃ = x_t = 1/n`, identity shaping
    /// matrices and uniform risk budgets.
    pub fn new(n: usize) -> Self {
        Self {
            benchmark: vec![0.0; n],
            reference: equal_weights(n),
            current: equal_weights(n),
            gamma: 0.0,
            rho1: 0.0,
            rho2: 0.0,
            rho1_ref: 0.0,
            rho2_ref: 0.0,
            lambda: 0.0,
            gamma1: vec![1.0; n],
            gamma2: DenseMatrix::identity(n),
            gamma1_ref: vec![1.0; n],
            gamma2_ref: DenseMatrix::identity(n),
            rb: equal_weights(n),
            linear: Constraints::none(),
            nonlinear: Vec::new(),
            formulation: Formulation::AdmmQp,
        }
    }

    pub fn with_formulation(mut self, f: Formulation) -> Self {
        self.formulation = f;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (what, v) in [
            ("benchmark", &self.benchmark),
            ("reference", &self.reference),
            ("current", &self.current),
            ("gamma1", &self.gamma1),
            ("gamma1_ref", &self.gamma1_ref),
            ("risk budgets", &self.rb),
        ] {
            check_len(what, v.len(), n)?;
        }
        for (what, m) in [("gamma2", &self.gamma2), ("gamma2_ref", &self.gamma2_ref)] {
            check_len(what, m.cols(), n)?;
        }
        for h in [self.gamma, self.rho1, self.rho2, self.rho1_ref, self.rho2_ref, self.lambda] {
            if !(h >= 0.0) {
                return Err(Error::InvalidInput(format!("hyperparameters must be non-negative, got {h}")));
            }
        }
        if self.gamma1.iter().chain(&self.gamma1_ref).any(|&g| !(g >= 0.0)) {
            return Err(Error::InvalidInput("diagonal shaping weights must be non-negative".into()));
        }
        if self.lambda > 0.0 && self.rb.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::NonPositiveWeight);
        }
        Ok(())
    }

    fn barrier(&self) -> Vec<f64> {
        self.rb.iter().map(|b| self.lambda * b).collect()
    }
}

/// `Q = Σ + ϱ₂Γ₂ᵀΓ₂ + ϱ̃₂Γ̃₂ᵀΓ̃₂`,
/// `R = γμ + Σb + ϱ₂Γ₂ᵀΓ₂x_t + ϱ̃₂Γ̃₂ᵀΓ̃₂x̃`.
pub fn robo_qp_data(u: &AssetUniverse, cfg: &RoboConfig) -> Result<(DenseMatrix, Vec<f64>)> {
    let g2 = cfg.gamma2.gram().scaled(cfg.rho2);
    let g2r = cfg.gamma2_ref.gram().scaled(cfg.rho2_ref);
    let q = u.cov.add(&g2)?.add(&g2r)?;
    let sb = u.cov.matvec(&cfg.benchmark);
    let a = g2.matvec(&cfg.current);
    let b = g2r.matvec(&cfg.reference);
    let r = (0..u.n())
        .map(|i| cfg.gamma * u.mu[i] + sb[i] + a[i] + b[i])
        .collect();
    Ok((q, r))
}

/// Full objective (without the constraints).
pub fn robo_objective(u: &AssetUniverse, cfg: &RoboConfig, x: &[f64]) -> f64 {
    let d = sub(x, &cfg.benchmark);
    let dt = sub(x, &cfg.current);
    let dr = sub(x, &cfg.reference);
    let l1 = |w: &[f64], v: &[f64]| -> f64 { w.iter().zip(v).map(|(a, b)| (a * b).abs()).sum() };
    let l2 = |g: &DenseMatrix, v: &[f64]| -> f64 {
        let t = g.matvec(v);
        dot(&t, &t)
    };
    let barrier: f64 = if cfg.lambda > 0.0 {
        x.iter().zip(&cfg.rb).map(|(a, b)| b * a.ln()).sum()
    } else {
        0.0
    };
    0.5 * u.cov.quad_form(&d) - cfg.gamma * dot(&d, &u.mu)
        + cfg.rho1 * l1(&cfg.gamma1, &dt)
        + 0.5 * cfg.rho2 * l2(&cfg.gamma2, &dt)
        + cfg.rho1_ref * l1(&cfg.gamma1_ref, &dr)
        + 0.5 * cfg.rho2_ref * l2(&cfg.gamma2_ref, &dr)
        - cfg.lambda * barrier
}

/// Exact prox of `t (a|y − p| + c|y − q| − l ln y)` for a scalar: the
/// function is convex and smooth between the kinks, so the minimum is the
/// best of the kinks and of the stationary points clamped to each piece.
pub fn scalar_l1_barrier_prox(v: f64, t: f64, a: f64, p: f64, c: f64, q: f64, l: f64) -> f64 {
    let f = |y: f64| -> f64 {
        if l > 0.0 && y <= 0.0 {
            return f64::INFINITY;
        }
        let bar = if l > 0.0 { l * y.ln() } else { 0.0 };
        t * (a * (y - p).abs() + c * (y - q).abs() - bar) + 0.5 * (y - v) * (y - v)
    };
    let mut kinks: Vec<f64> = Vec::with_capacity(2);
    if a > 0.0 {
        kinks.push(p);
    }
    if c > 0.0 {
        kinks.push(q);
    }
    kinks.sort_by(f64::total_cmp);
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(&kinks);
    edges.push(f64::INFINITY);
    let mut best = f64::NAN;
    let mut best_val = f64::INFINITY;
    let mut consider = |y: f64| {
        let val = f(y);
        if val < best_val {
            best_val = val;
            best = y;
        }
    };
    for &k in &kinks {
        consider(k);
    }
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if l > 0.0 && hi <= 0.0 {
            continue;
        }
        let mid = if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            0.0
        };
        let sa = if a > 0.0 { a * (mid - p).signum() } else { 0.0 };
        let sc = if c > 0.0 { c * (mid - q).signum() } else { 0.0 };
        let s = sa + sc;
        let shifted = v - t * s;
        let y = if l > 0.0 {
            crate::prox::log_barrier_root(shifted, t * l)
        } else {
            shifted
        };
        consider(y.max(lo).min(hi));
    }
    best
}

struct SeparableProx<'a> {
    cfg: &'a RoboConfig,
    t: f64,
    with_barrier: bool,
}

impl Prox for SeparableProx<'_> {
    fn prox(&self, v: &[f64]) -> Result<Vec<f64>> {
        let c = self.cfg;
        Ok((0..v.len())
            .map(|i| {
                let l = if self.with_barrier { c.lambda * c.rb[i] } else { 0.0 };
                scalar_l1_barrier_prox(
                    v[i],
                    self.t,
                    c.rho1 * c.gamma1[i],
                    c.current[i],
                    c.rho1_ref * c.gamma1_ref[i],
                    c.reference[i],
                    l,
                )
            })
            .collect())
    }
}

fn dcfg() -> DykstraConfig {
    DykstraConfig {
        tol: 1e-13,
        max_cycles: 100_000,
    }
}

/// `Ω₀ ∩ Ω_linear` as a linear set.
fn base_linear_set(n: usize, lin: &Constraints) -> LinearSet {
    let lo = match &lin.lower {
        Some(l) => l.iter().map(|x| x.max(0.0)).collect(),
        None => vec![0.0; n],
    };
    let hi = match &lin.upper {
        Some(h) => h.iter().map(|x| x.min(1.0)).collect(),
        None => vec![1.0; n],
    };
    LinearSet {
        eq: Some((DenseMatrix::row_vector(&vec![1.0; n]), vec![1.0])),
        ineq: lin.ineq.clone(),
        lo: Some(lo),
        hi: Some(hi),
    }
}

/// `y = prox_{f/φ}` of `f_ℓ1` (plus the barrier when `with_barrier`) restricted
/// to the sets given by `projection`, via two-block Dykstra.
fn penalised_projection(
    cfg: &RoboConfig,
    v: &[f64],
    phi: f64,
    with_barrier: bool,
    projection: Option<&dyn Prox>,
) -> Result<Vec<f64>> {
    let sep = SeparableProx { cfg, t: 1.0 / phi, with_barrier };
    let has_l1 = cfg.rho1 > 0.0 || cfg.rho1_ref > 0.0;
    let has_sep = has_l1 || (with_barrier && cfg.lambda > 0.0);
    match (has_sep, projection) {
        (false, None) => Ok(v.to_vec()),
        (true, None) => sep.prox(v),
        (false, Some(p)) => p.prox(v),
        (true, Some(p)) => dykstra_two(&sep, p, v, &dcfg()).map(|(x, _)| x),
    }
}

/// Solves the robo-advisor problem with the configured formulation.
pub fn robo_advisor(u: &AssetUniverse, cfg: &RoboConfig) -> Result<PortfolioWeights> {
    let n = u.n();
    cfg.validate(n)?;
    let (q, r) = robo_qp_data(u, cfg)?;
    let admm_cfg = AdmmConfig {
        phi0: q.trace() / n as f64,
        eps: 1e-10,
        eps_dual: 1e-10,
        adaptive: true,
        ..AdmmConfig::default()
    };
    let lin = base_linear_set(n, &cfg.linear);
    let nl_fns: Vec<BoxedProx<'_>> = cfg
        .nonlinear
        .iter()
        .map(|s| Box::new(move |v: &[f64]| project(s, v)) as Box<dyn Fn(&[f64]) -> Result<Vec<f64>>>)
        .collect();
    let start = equal_weights(n);
    let out = match cfg.formulation {
        Formulation::AdmmQp => {
            let qp_cfg = QpConfig::default().with_eps(1e-12);
            let mut warm = start.clone();
            let x_update = |v: &[f64], phi: f64| -> Result<Vec<f64>> {
                let rhs: Vec<f64> = r.iter().zip(v).map(|(a, b)| a + phi * b).collect();
                let p = QpProblem {
                    eq: lin.eq.clone(),
                    ineq: lin.ineq.clone(),
                    lo: lin.lo.clone(),
                    hi: lin.hi.clone(),
                    ..QpProblem::new(q.add_diag(phi), rhs)
                };
                let (x, _) = qp_solve_from(&p, &qp_cfg, &warm)?;
                warm = x.clone();
                Ok(x)
            };
            let nl_proj = |w: &[f64]| -> Result<Vec<f64>> {
                let fns: Vec<&dyn Prox> = nl_fns.iter().map(|p| p as &dyn Prox).collect();
                dykstra_cycle(&fns, w, &dcfg()).map(|(x, _)| x)
            };
            let y_update = |v: &[f64], phi: f64| -> Result<Vec<f64>> {
                let proj: Option<&dyn Prox> = if nl_fns.is_empty() { None } else { Some(&nl_proj) };
                penalised_projection(cfg, v, phi, true, proj)
            };
            let mut problem = AdmmProblem::consensus(x_update, y_update);
            admm_solve(&mut problem, &start, &start, &admm_cfg)?
        }
        Formulation::AdmmCcd => {
            let lams = cfg.barrier();
            let cd_cfg = CdConfig::default().with_tol(1e-13);
            let mut warm = start.clone();
            let x_update = |v: &[f64], phi: f64| -> Result<Vec<f64>> {
                let rhs: Vec<f64> = r.iter().zip(v).map(|(a, b)| a + phi * b).collect();
                let (x, _) = ccd_qp_logbarrier(&q.add_diag(phi), &rhs, &lams, &warm, &cd_cfg)?;
                warm = x.clone();
                Ok(x)
            };
            let all_proj = |w: &[f64]| -> Result<Vec<f64>> {
                let p_lin = |z: &[f64]| project_general_linear(&lin, z, &dcfg());
                let mut fns: Vec<&dyn Prox> = vec![&p_lin];
                fns.extend(nl_fns.iter().map(|p| p as &dyn Prox));
                dykstra_cycle(&fns, w, &dcfg()).map(|(x, _)| x)
            };
            let y_update = |v: &[f64], phi: f64| -> Result<Vec<f64>> {
                penalised_projection(cfg, v, phi, false, Some(&all_proj))
            };
            let mut problem = AdmmProblem::consensus(x_update, y_update);
            admm_solve(&mut problem, &start, &start, &admm_cfg)?
        }
    };
    let w = match cfg.formulation {
        Formulation::AdmmQp => out.x,
        Formulation::AdmmCcd => out.y,
    };
    gate(w, true)
}

/// Runs both formulations; fails with `FormulationDisagreement` when the
/// weights differ by more than `1e-3`.
pub fn robo_cross_check(u: &AssetUniverse, cfg: &RoboConfig) -> Result<(PortfolioWeights, PortfolioWeights, f64)> {
    let a = robo_advisor(u, &cfg.clone().with_formulation(Formulation::AdmmQp))?;
    let b = robo_advisor(u, &cfg.clone().with_formulation(Formulation::AdmmCcd))?;
    let gap = max_abs_diff(&a.w, &b.w);
    if gap > 1e-3 {
        return Err(Error::FormulationDisagreement(gap));
    }
    Ok((a, b, gap))
}
