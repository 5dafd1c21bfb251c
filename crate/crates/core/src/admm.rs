//! ADMM for `min f_x(x) + f_y(y)` s.t. `Ax + By = c`, scaled-dual form:
//!
//! ```text
//! x ← argmin f_x(x) + φ/2 ‖Ax + By − c + u‖²
//! y ← argmin f_y(y) + φ/2 ‖Ax + By − c + u‖²
//! u ← u + Ax + By − c
//! ```
//!
//! with optional residual balancing of the penalty `φ`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{max_abs_diff, norm2, Cholesky, DenseMatrix};
use crate::prox::{project, soft_threshold, ConvexSet, Norm};
use crate::report::{SolverReport, Status};

/// A linear operator in the constraint `Ax + By = c`.
#[derive(Debug, Clone)]
pub enum Operator {
    Identity,
    NegIdentity,
    Matrix(DenseMatrix),
}

impl Operator {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => v.to_vec(),
            Self::NegIdentity => v.iter().map(|x| -x).collect(),
            Self::Matrix(m) => m.matvec(v),
        }
    }

    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => v.to_vec(),
            Self::NegIdentity => v.iter().map(|x| -x).collect(),
            Self::Matrix(m) => m.tr_matvec(v),
        }
    }

    fn out_dim(&self, input: usize) -> usize {
        match self {
            Self::Matrix(m) => m.rows(),
            _ => input,
        }
    }
}

/// Subproblem solver: `(other block, u, φ) ↦ minimiser`.
pub type Objective<'a> = Box<dyn Fn(&[f64], &[f64]) -> f64 + 'a>;

pub type Update<'a> = Box<dyn FnMut(&[f64], &[f64], f64) -> Result<Vec<f64>> + 'a>;

pub struct AdmmProblem<'a> {
    pub a: Operator,
    pub b: Operator,
    /// `None` means `c = 0`.
    pub c: Option<Vec<f64>>,
    /// `x ← argmin f_x(x) + φ/2 ‖Ax + By − c + u‖²`, called with `(y, u, φ)`.
    pub x_update: Update<'a>,
    /// `y ← argmin f_y(y) + φ/2 ‖Ax + By − c + u‖²`, called with `(x, u, φ)`.
    pub y_update: Update<'a>,
    /// Optional `f_x(x) + f_y(y)` for the objective trace.
    pub objective: Option<Objective<'a>>,
}

impl<'a> AdmmProblem<'a> {
    /// The common split `x − y = 0` with `x = prox_{f_x/φ}(y − u)` and
    /// `y = prox_{f_y/φ}(x + u)`; closures receive `(v, φ)`.
    pub fn consensus<FX, FY>(mut prox_x: FX, mut prox_y: FY) -> Self
    where
        FX: FnMut(&[f64], f64) -> Result<Vec<f64>> + 'a,
        FY: FnMut(&[f64], f64) -> Result<Vec<f64>> + 'a,
    {
        Self {
            a: Operator::Identity,
            b: Operator::NegIdentity,
            c: None,
            x_update: Box::new(move |y, u, phi| {
                let v: Vec<f64> = y.iter().zip(u).map(|(a, b)| a - b).collect();
                prox_x(&v, phi)
            }),
            y_update: Box::new(move |x, u, phi| {
                let v: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + b).collect();
                prox_y(&v, phi)
            }),
            objective: None,
        }
    }

    pub fn with_objective<F: Fn(&[f64], &[f64]) -> f64 + 'a>(mut self, f: F) -> Self {
        self.objective = Some(Box::new(f));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub phi0: f64,
    pub mu: f64,
    pub tau: f64,
    pub tau_prime: f64,
    /// Primal residual tolerance `‖r‖₂ ≤ eps`.
    pub eps: f64,
    /// Dual residual tolerance `‖s‖₂ ≤ eps_dual`.
    pub eps_dual: f64,
    pub max_iter: usize,
    pub adaptive: bool,
    /// When set, stop once both `max_i |x_i^(k+1) − x_i^(k)|` and the same
    /// change in `y` are `≤ tol`, instead of the residual rule.
    pub x_change_tol: Option<f64>,
    pub record_path: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            phi0: 1.0,
            mu: 1e3,
            tau: 2.0,
            tau_prime: 2.0,
            eps: 1e-15,
            eps_dual: 1e-15,
            max_iter: 100_000,
            adaptive: false,
            x_change_tol: None,
            record_path: false,
        }
    }
}

impl AdmmConfig {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self.eps_dual = eps;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi0 = phi;
        self
    }

    pub fn adaptive(mut self, on: bool) -> Self {
        self.adaptive = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.phi0 > 0.0) {
            return Err(Error::InvalidInput("phi0 must be positive".into()));
        }
        if !(self.mu >= 1.0 && self.tau >= 1.0 && self.tau_prime >= 1.0) {
            return Err(Error::InvalidInput("mu, tau and tau' must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps_dual > 0.0) {
            return Err(Error::InvalidInput("ADMM tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Residual balancing: `τφ` when `‖r‖² > μ‖s‖²`, `φ/τ′` when
/// `‖s‖² > μ‖r‖²`, otherwise `φ`.
pub fn penalty_update(phi: f64, r_norm: f64, s_norm: f64, cfg: &AdmmConfig) -> f64 {
    let (r2, s2) = (r_norm * r_norm, s_norm * s_norm);
    if r2 > cfg.mu * s2 {
        cfg.tau * phi
    } else if s2 > cfg.mu * r2 {
        phi / cfg.tau_prime
    } else {
        phi
    }
}

/// Result of [`admm_solve`].
#[derive(Debug, Clone)]
pub struct AdmmOutput {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Scaled dual variable at exit; `φ u` is the multiplier.
    pub u: Vec<f64>,
    pub phi: f64,
    pub report: SolverReport,
}

/// Runs ADMM from `(x0, y0)` with `u = 0`.
pub fn admm_solve(
    problem: &mut AdmmProblem<'_>,
    x0: &[f64],
    y0: &[f64],
    cfg: &AdmmConfig,
) -> Result<AdmmOutput> {
    cfg.validate()?;
    let m = problem.a.out_dim(x0.len());
    check_len("By", problem.b.out_dim(y0.len()), m)?;
    let c = match &problem.c {
        Some(c) => {
            check_len("c", c.len(), m)?;
            c.clone()
        }
        None => vec![0.0; m],
    };
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut u = vec![0.0; m];
    let mut phi = cfg.phi0;
    let mut report = SolverReport::new("admm");
    for _ in 0..cfg.max_iter {
        let x_new = (problem.x_update)(&y, &u, phi)?;
        check_len("x-update output", x_new.len(), x0.len())?;
        let y_new = (problem.y_update)(&x_new, &u, phi)?;
        check_len("y-update output", y_new.len(), y0.len())?;
        let ax = problem.a.apply(&x_new);
        let by = problem.b.apply(&y_new);
        let r: Vec<f64> = ax.iter().zip(&by).zip(&c).map(|((a, b), c)| a + b - c).collect();
        let dy: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
        let s_vec = problem.a.apply_t(&problem.b.apply(&dy));
        let r_norm = norm2(&r);
        let s_norm = phi * norm2(&s_vec);
        let x_change = max_abs_diff(&x_new, &x).max(max_abs_diff(&y_new, &y));
        for (ui, ri) in u.iter_mut().zip(&r) {
            *ui += ri;
        }
        x = x_new;
        y = y_new;
        if !crate::linalg::all_finite(&x) || !crate::linalg::all_finite(&y) {
            return Err(Error::NonFinite("ADMM iterate"));
        }
        report.push(r_norm, s_norm);
        if let Some(f) = &problem.objective {
            report.objective_trace.push(f(&x, &y));
        }
        if cfg.record_path {
            report.path.push(x.clone());
        }
        let done = match cfg.x_change_tol {
            Some(tol) => x_change <= tol,
            None => r_norm <= cfg.eps && s_norm <= cfg.eps_dual,
        };
        if done {
            report.status = Status::Converged;
            return Ok(AdmmOutput {
                x,
                y,
                u,
                phi,
                report,
            });
        }
        if cfg.adaptive {
            let next = penalty_update(phi, r_norm, s_norm, cfg);
            if next != phi {
                let k = phi / next;
                u.iter_mut().for_each(|ui| *ui *= k);
                phi = next;
            }
        }
    }
    Err(Error::MaxIterExceeded {
        solver: "admm",
        iterations: cfg.max_iter,
        last: x,
    })
}

/// Cholesky factor of `M + φI`, rebuilt only when `φ` changes.
#[derive(Debug, Clone)]
pub struct ShiftedFactor {
    base: DenseMatrix,
    phi: f64,
    factor: Option<Cholesky>,
}

impl ShiftedFactor {
    pub fn new(base: DenseMatrix) -> Self {
        Self {
            base,
            phi: f64::NAN,
            factor: None,
        }
    }

    /// Solves `(M + φI) x = rhs`.
    pub fn solve(&mut self, phi: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.factor.is_none() || self.phi != phi {
            self.factor = Some(Cholesky::new(&self.base.add_diag(phi))?);
            self.phi = phi;
        }
        Ok(self.factor.as_ref().expect("factor built above").solve(rhs))
    }

    pub fn base(&self) -> &DenseMatrix {
        &self.base
    }
}

fn lasso_data(x: &DenseMatrix, y: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
    check_len("Y", y.len(), x.rows())?;
    Ok((x.gram(), x.tr_matvec(y)))
}

/// Lasso `½‖Y − Xβ‖² + λ‖β‖₁` by ADMM:
/// `β ← (XᵀX + φI)⁻¹(XᵀY + φ(β̄ − u))`, `β̄ ← S(β + u; λ/φ)`.
/// Returns the thresholded block `β̄`.
pub fn admm_lasso_lambda(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    beta0: Option<&[f64]>,
    cfg: &AdmmConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let (gram, xty) = lasso_data(x, y)?;
    let p = x.cols();
    let start = beta0.map(|b| b.to_vec()).unwrap_or_else(|| vec![0.0; p]);
    check_len("beta0", start.len(), p)?;
    let mut factor = ShiftedFactor::new(gram);
    let mut problem = AdmmProblem::consensus(
        move |v, phi| {
            let rhs: Vec<f64> = xty.iter().zip(v).map(|(a, b)| a + phi * b).collect();
            factor.solve(phi, &rhs)
        },
        move |v, phi| soft_threshold(v, lambda / phi),
    )
    .with_objective(move |_, b| {
        let r: Vec<f64> = y.iter().zip(x.matvec(b)).map(|(a, p)| a - p).collect();
        0.5 * crate::linalg::dot(&r, &r) + lambda * crate::linalg::norm1(b)
    });
    let out = admm_solve(&mut problem, &start, &start, cfg)?;
    let mut rep = out.report;
    rep.solver = "admm_lasso_lambda".into();
    Ok((out.y, rep))
}

/// Constrained lasso `min ½‖Y − Xβ‖²` s.t. `‖β‖₁ ≤ τ`; the y-update is the
/// projection onto `B₁(0, τ)`, which does not depend on `φ`.
pub fn admm_lasso_tau(
    x: &DenseMatrix,
    y: &[f64],
    tau: f64,
    beta0: Option<&[f64]>,
    cfg: &AdmmConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    if !(tau > 0.0) {
        return Err(Error::OutOfDomain(format!("tau must be positive, got {tau}")));
    }
    let (gram, xty) = lasso_data(x, y)?;
    let p = x.cols();
    let start = beta0.map(|b| b.to_vec()).unwrap_or_else(|| vec![0.0; p]);
    check_len("beta0", start.len(), p)?;
    let ball = ConvexSet::ball(Norm::L1, vec![0.0; p], tau)?;
    let mut factor = ShiftedFactor::new(gram);
    let mut problem = AdmmProblem::consensus(
        move |v, phi| {
            let rhs: Vec<f64> = xty.iter().zip(v).map(|(a, b)| a + phi * b).collect();
            factor.solve(phi, &rhs)
        },
        move |v, _phi| project(&ball, v),
    );
    let out = admm_solve(&mut problem, &start, &start, cfg)?;
    let mut rep = out.report;
    rep.solver = "admm_lasso_tau".into();
    Ok((out.y, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_rule() {
        let cfg = AdmmConfig::default();
        assert_eq!(penalty_update(1.0, 1.0, 1.0, &cfg), 1.0);
        assert_eq!(penalty_update(1.0, 100.0, 1.0, &cfg), 2.0);
        assert_eq!(penalty_update(1.0, 1.0, 100.0, &cfg), 0.5);
        let constant = AdmmConfig {
            tau: 1.0,
            tau_prime: 1.0,
            ..cfg
        };
        assert_eq!(penalty_update(3.0, 100.0, 1.0, &constant), 3.0);
    }

    #[test]
    fn consensus_on_a_point() {
        let a = vec![1.0, -2.0, 0.5];
        let target = a.clone();
        let mut p = AdmmProblem::consensus(
            move |v, phi| Ok(v.iter().zip(&target).map(|(vi, ai)| (ai + phi * vi) / (1.0 + phi)).collect()),
            |v, _| Ok(v.to_vec()),
        );
        let out = admm_solve(&mut p, &[0.0; 3], &[0.0; 3], &AdmmConfig::default().with_eps(1e-12)).unwrap();
        assert!(max_abs_diff(&out.x, &a) < 1e-10);
        assert!(max_abs_diff(&out.y, &a) < 1e-10);
    }

    #[test]
    fn lasso_extremes() {
        let x = DenseMatrix::from_rows(&[
            vec![1.0, 0.2],
            vec![0.3, 1.0],
            vec![-0.5, 0.4],
            vec![0.1, -0.7],
        ])
        .unwrap();
        let y = [1.0, 2.0, -0.5, 0.3];
        let cfg = AdmmConfig::default().with_eps(1e-12);
        let (b, _) = admm_lasso_lambda(&x, &y, 0.0, None, &cfg).unwrap();
        let ols = crate::linalg::solve_spd(&x.gram(), &x.tr_matvec(&y)).unwrap();
        assert!(max_abs_diff(&b, &ols) < 1e-8);
        let (b, _) = admm_lasso_lambda(&x, &y, 1e6, None, &cfg).unwrap();
        assert!(b.iter().all(|v| *v == 0.0));
    }
}
