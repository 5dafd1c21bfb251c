//! Quadratic programs `min ½xᵀQx − xᵀR` s.t. `Ax = B`, `Cx ≤ D`,
//! `lo ≤ x ≤ hi`, solved by ADMM with Dykstra projections, plus the dual
//! transform.

use crate::admm::{admm_solve, AdmmConfig, AdmmProblem};
use crate::dykstra::{project_general_linear, DykstraConfig, LinearSet};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, pseudo_inverse, Cholesky, DenseMatrix};
use crate::report::{SolverReport, Status};

/// Quadratic term of the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadTerm {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
}

impl QuadTerm {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.rows(),
            Self::Diagonal(d) => d.len(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(m) => m.matvec(x),
            Self::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Dense(m) => m.trace(),
            Self::Diagonal(d) => d.iter().sum(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Self::Dense(m) => {
                if !m.is_square() {
                    return Err(Error::DimensionMismatch("Q must be square".into()));
                }
                if !m.is_symmetric() {
                    return Err(Error::InvalidInput("Q must be symmetric".into()));
                }
                Ok(())
            }
            Self::Diagonal(d) => crate::linalg::require_finite("Q diagonal", d),
        }
    }

    /// Factor of `Q + φI`.
    fn shifted(&self, phi: f64) -> Result<Shifted> {
        match self {
            Self::Dense(m) => Ok(Shifted::Dense(Cholesky::new(&m.add_diag(phi))?)),
            Self::Diagonal(d) => {
                let s: Vec<f64> = d.iter().map(|x| x + phi).collect();
                if let Some(i) = s.iter().position(|&x| !(x > 0.0)) {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s[i] });
                }
                Ok(Shifted::Diagonal(s))
            }
        }
    }
}

enum Shifted {
    Dense(Cholesky),
    Diagonal(Vec<f64>),
}

impl Shifted {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(c) => c.solve(b),
            Self::Diagonal(d) => b.iter().zip(d).map(|(x, s)| x / s).collect(),
        }
    }
}

/// `min ½xᵀQx − xᵀR` subject to the optional blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub q: QuadTerm,
    pub r: Vec<f64>,
    pub eq: Option<(DenseMatrix, Vec<f64>)>,
    pub ineq: Option<(DenseMatrix, Vec<f64>)>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl QpProblem {
    pub fn new(q: DenseMatrix, r: Vec<f64>) -> Self {
        Self {
            q: QuadTerm::Dense(q),
            r,
            eq: None,
            ineq: None,
            lo: None,
            hi: None,
        }
    }

    pub fn diagonal(d: Vec<f64>, r: Vec<f64>) -> Self {
        Self {
            q: QuadTerm::Diagonal(d),
            r,
            eq: None,
            ineq: None,
            lo: None,
            hi: None,
        }
    }

    pub fn with_eq(mut self, a: DenseMatrix, b: Vec<f64>) -> Self {
        self.eq = Some((a, b));
        self
    }

    /// Appends `1ᵀx = 1`.
    pub fn with_budget(self) -> Self {
        let n = self.dim();
        self.add_eq_row(&vec![1.0; n], 1.0)
    }

    pub fn add_eq_row(mut self, a: &[f64], b: f64) -> Self {
        self.eq = Some(append_row(self.eq.take(), a, b));
        self
    }

    pub fn with_ineq(mut self, c: DenseMatrix, d: Vec<f64>) -> Self {
        self.ineq = Some((c, d));
        self
    }

    /// Appends `cᵀx ≤ d`.
    pub fn add_ineq_row(mut self, c: &[f64], d: f64) -> Self {
        self.ineq = Some(append_row(self.ineq.take(), c, d));
        self
    }

    pub fn with_bounds(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.lo = Some(lo);
        self.hi = Some(hi);
        self
    }

    pub fn with_lower(mut self, lo: Vec<f64>) -> Self {
        self.lo = Some(lo);
        self
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.q.matvec(x)) - dot(x, &self.r)
    }

    fn check(&self) -> Result<()> {
        self.q.check()?;
        let n = self.dim();
        check_len("R", self.r.len(), n)?;
        self.linear_set(true).check(n)
    }

    fn linear_set(&self, with_eq: bool) -> LinearSet {
        LinearSet {
            eq: if with_eq { self.eq.clone() } else { None },
            ineq: self.ineq.clone(),
            lo: self.lo.clone(),
            hi: self.hi.clone(),
        }
    }

    /// Largest violation of any declared constraint.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v = 0.0_f64;
        if let Some((a, b)) = &self.eq {
            v = v.max(crate::linalg::max_abs_diff(&a.matvec(x), b));
        }
        if let Some((c, d)) = &self.ineq {
            for (cx, di) in c.matvec(x).iter().zip(d) {
                v = v.max(cx - di);
            }
        }
        if let Some(lo) = &self.lo {
            for (xi, l) in x.iter().zip(lo) {
                v = v.max(l - xi);
            }
        }
        if let Some(hi) = &self.hi {
            for (xi, h) in x.iter().zip(hi) {
                v = v.max(xi - h);
            }
        }
        v
    }
}

fn append_row(block: Option<(DenseMatrix, Vec<f64>)>, a: &[f64], b: f64) -> (DenseMatrix, Vec<f64>) {
    match block {
        None => (DenseMatrix::row_vector(a), vec![b]),
        Some((m, mut rhs)) => {
            let stacked = DenseMatrix::vstack(&[&m, &DenseMatrix::row_vector(a)])
                .expect("row length checked by the caller's dimension");
            rhs.push(b);
            (stacked, rhs)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpConfig {
    /// `None` uses `φ0 = trace(Q)/n`.
    pub phi0: Option<f64>,
    pub admm: AdmmConfig,
    /// Projection onto the inequality/box block in every y-update.
    pub dykstra: DykstraConfig,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self {
            phi0: None,
            admm: AdmmConfig {
                eps: 1e-10,
                eps_dual: 1e-10,
                adaptive: true,
                max_iter: 100_000,
                ..AdmmConfig::default()
            },
            dykstra: DykstraConfig {
                tol: 1e-13,
                max_cycles: 100_000,
            },
        }
    }
}

impl QpConfig {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.admm.eps = eps;
        self.admm.eps_dual = eps;
        self
    }
}

/// Solver for `min ½xᵀ(Q + φI)x − xᵀw` s.t. `Ax = B` through the Schur
/// complement `A(Q + φI)⁻¹Aᵀ`.
pub(crate) struct EqualityKkt<'a> {
    q: &'a QuadTerm,
    eq: Option<&'a (DenseMatrix, Vec<f64>)>,
    phi: f64,
    factor: Option<Shifted>,
    schur_pinv: Option<DenseMatrix>,
}

impl<'a> EqualityKkt<'a> {
    pub(crate) fn new(q: &'a QuadTerm, eq: Option<&'a (DenseMatrix, Vec<f64>)>) -> Self {
        Self {
            q,
            eq,
            phi: f64::NAN,
            factor: None,
            schur_pinv: None,
        }
    }

    fn refactor(&mut self, phi: f64) -> Result<()> {
        let f = self.q.shifted(phi)?;
        self.schur_pinv = match self.eq {
            Some((a, _)) => {
                let m = a.rows();
                // columns of M⁻¹Aᵀ
                let mut s = DenseMatrix::zeros(m, m);
                let mut cols = Vec::with_capacity(m);
                for i in 0..m {
                    cols.push(f.solve(a.row(i)));
                }
                for i in 0..m {
                    for j in 0..m {
                        s.set(i, j, dot(a.row(i), &cols[j]));
                    }
                }
                Some(pseudo_inverse(&s))
            }
            None => None,
        };
        self.factor = Some(f);
        self.phi = phi;
        Ok(())
    }

    pub(crate) fn solve(&mut self, phi: f64, w: &[f64]) -> Result<Vec<f64>> {
        if self.factor.is_none() || self.phi != phi {
            self.refactor(phi)?;
        }
        let f = self.factor.as_ref().expect("factored above");
        let x0 = f.solve(w);
        match (self.eq, &self.schur_pinv) {
            (Some((a, b)), Some(sp)) => {
                let gap: Vec<f64> = a.matvec(&x0).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
                let nu = sp.matvec(&gap);
                let corr = f.solve(&a.tr_matvec(&nu));
                Ok(x0.iter().zip(&corr).map(|(x, c)| x - c).collect())
            }
            _ => Ok(x0),
        }
    }
}

/// Solves the QP. The x-update keeps the quadratic and the equalities (KKT
/// solve), the y-update projects onto the inequalities and bounds with
/// Dykstra. The result is finally projected onto the full feasible set.
pub fn qp_solve(p: &QpProblem, cfg: &QpConfig) -> Result<(Vec<f64>, SolverReport)> {
    qp_solve_from(p, cfg, &vec![0.0; p.dim()])
}

/// [`qp_solve`] with ADMM started at `x = y = start`.
pub fn qp_solve_from(p: &QpProblem, cfg: &QpConfig, start: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    p.check()?;
    let n = p.dim();
    check_len("start", start.len(), n)?;
    let has_y_block = p.ineq.is_some() || p.lo.is_some() || p.hi.is_some();

    if !has_y_block {
        // only equalities: one KKT solve when Q is positive definite
        let mut kkt = EqualityKkt::new(&p.q, p.eq.as_ref());
        if let Ok(x) = kkt.solve(0.0, &p.r) {
            let mut rep = SolverReport::new("qp_solve");
            rep.push(p.max_violation(&x).max(0.0), 0.0);
            rep.status = Status::Converged;
            return Ok((x, rep));
        }
    }

    let phi0 = cfg
        .phi0
        .unwrap_or_else(|| {
            let t = p.q.trace() / n.max(1) as f64;
            if t > 0.0 {
                t
            } else {
                1.0
            }
        });
    let admm_cfg = AdmmConfig {
        phi0,
        ..cfg.admm.clone()
    };
    let y_set = p.linear_set(false);
    let dcfg = cfg.dykstra;
    let r = p.r.clone();
    let mut kkt = EqualityKkt::new(&p.q, p.eq.as_ref());
    let mut problem = AdmmProblem::consensus(
        move |v, phi| {
            let w: Vec<f64> = r.iter().zip(v).map(|(ri, vi)| ri + phi * vi).collect();
            kkt.solve(phi, &w)
        },
        move |v, _phi| project_general_linear(&y_set, v, &dcfg).map_err(infeasible),
    )
    .with_objective(|x, _| p.objective(x));
    let out = admm_solve(&mut problem, start, start, &admm_cfg)?;
    let mut report = out.report;
    report.solver = "qp_solve".into();
    let x = if p.eq.is_some() {
        let full = p.linear_set(true);
        project_general_linear(&full, &out.y, &dcfg).map_err(infeasible)?
    } else {
        out.y
    };
    Ok((x, report))
}

fn infeasible(e: Error) -> Error {
    match e {
        Error::EmptySetSuspected(z) => {
            Error::InfeasibleSuspected(format!("Dykstra residuals diverged ({z:e})"))
        }
        other => other,
    }
}

/// Stacked form `Sx ≤ T` with rows `[−A; A; C; −I; I]` against
/// `[−B; B; D; −lo; hi]`; absent blocks are skipped.
pub fn canonicalize(p: &QpProblem) -> (DenseMatrix, Vec<f64>) {
    let n = p.dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    if let Some((a, b)) = &p.eq {
        for i in 0..a.rows() {
            rows.push(a.row(i).iter().map(|x| -x).collect());
            rhs.push(-b[i]);
        }
        for i in 0..a.rows() {
            rows.push(a.row(i).to_vec());
            rhs.push(b[i]);
        }
    }
    if let Some((c, d)) = &p.ineq {
        for i in 0..c.rows() {
            rows.push(c.row(i).to_vec());
            rhs.push(d[i]);
        }
    }
    if let Some(lo) = &p.lo {
        for (i, l) in lo.iter().enumerate() {
            let mut row = vec![0.0; n];
            row[i] = -1.0;
            rows.push(row);
            rhs.push(-l);
        }
    }
    if let Some(hi) = &p.hi {
        for (i, h) in hi.iter().enumerate() {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            rows.push(row);
            rhs.push(*h);
        }
    }
    let m = rows.len();
    let s = DenseMatrix::new(m, n, rows.concat()).unwrap_or_else(|_| DenseMatrix::zeros(m, n));
    (s, rhs)
}

/// Dual data of `min ½xᵀQx − xᵀR` s.t. `Sx ≤ T`.
#[derive(Debug, Clone)]
pub struct QpDual {
    /// `Q̄ = S Q⁻¹ Sᵀ`
    pub qbar: DenseMatrix,
    /// `R̄ = S Q⁻¹ R − T`
    pub rbar: Vec<f64>,
    factor: Cholesky,
    s: DenseMatrix,
    r: Vec<f64>,
}

impl QpDual {
    /// Primal point `x = Q⁻¹(R − Sᵀλ)` for dual multipliers `λ ≥ 0`.
    pub fn primal(&self, lambda: &[f64]) -> Vec<f64> {
        let st = self.s.tr_matvec(lambda);
        let w: Vec<f64> = self.r.iter().zip(&st).map(|(a, b)| a - b).collect();
        self.factor.solve(&w)
    }

    /// Primal optimal value implied by `λ`:
    /// `−(½λᵀQ̄λ − λᵀR̄) − ½RᵀQ⁻¹R`.
    pub fn primal_value(&self, lambda: &[f64]) -> f64 {
        let inner = 0.5 * self.qbar.quad_form(lambda) - dot(lambda, &self.rbar);
        -inner - 0.5 * dot(&self.r, &self.factor.solve(&self.r))
    }

    /// The dual as a QP over `λ ≥ 0`.
    pub fn as_problem(&self) -> QpProblem {
        let m = self.rbar.len();
        QpProblem::new(self.qbar.clone(), self.rbar.clone()).with_lower(vec![0.0; m])
    }
}

pub fn qp_dual(q: &DenseMatrix, r: &[f64], s: &DenseMatrix, t: &[f64]) -> Result<QpDual> {
    check_len("R", r.len(), q.rows())?;
    check_len("S columns", s.cols(), q.rows())?;
    check_len("T", t.len(), s.rows())?;
    let factor = Cholesky::new(q)?;
    let m = s.rows();
    let qinv_st: Vec<Vec<f64>> = (0..m).map(|i| factor.solve(s.row(i))).collect();
    let mut qbar = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            qbar.set(i, j, dot(s.row(i), &qinv_st[j]));
        }
    }
    // symmetrise against rounding
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (qbar.get(i, j) + qbar.get(j, i));
            qbar.set(i, j, v);
            qbar.set(j, i, v);
        }
    }
    let qinv_r = factor.solve(r);
    let rbar: Vec<f64> = s.matvec(&qinv_r).iter().zip(t).map(|(a, b)| a - b).collect();
    Ok(QpDual {
        qbar,
        rbar,
        factor,
        s: s.clone(),
        r: r.to_vec(),
    })
}
