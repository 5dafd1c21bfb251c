//! Coordinate descent: a generic driver and the closed-form coordinate
//! solvers for least squares, lasso, box-constrained QP, QP with a log
//! barrier, ERC and standard-deviation risk budgeting.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::prox::{log_barrier_root, project, soft_threshold, ConvexSet};
use crate::report::{SolverReport, Status};

/// How coordinates are picked within a cycle of `n` updates.
#[derive(Debug, Clone, PartialEq)]
pub enum CoordinateRule {
    /// `i = k mod n`
    Cyclic,
    UniformRandom { seed: u64 },
    /// `π_i ∝ L_i^α`; `α = ∞` always picks the largest constant (lowest
    /// index on ties).
    LipschitzWeighted {
        alpha: f64,
        seed: u64,
        constants: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    /// Stop when `max_i |x_i^(k+1) − x_i^(k)| ≤ tol` over a full cycle.
    pub tol: f64,
    pub max_cycles: usize,
    pub rule: CoordinateRule,
    /// Keep the iterate after every cycle in the report.
    pub record_path: bool,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_cycles: 10_000,
            rule: CoordinateRule::Cyclic,
            record_path: false,
        }
    }
}

impl CdConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_path = true;
        self
    }
}

/// Draws the coordinate sequence of one cycle.
pub struct CoordinateSampler {
    n: usize,
    kind: SamplerKind,
}

enum SamplerKind {
    Cyclic,
    Uniform(ChaCha8Rng),
    Weighted(ChaCha8Rng, WeightedIndex<f64>),
    Greedy(usize),
}

impl CoordinateSampler {
    pub fn new(rule: &CoordinateRule, n: usize) -> Result<Self> {
        let kind = match rule {
            CoordinateRule::Cyclic => SamplerKind::Cyclic,
            CoordinateRule::UniformRandom { seed } => {
                SamplerKind::Uniform(ChaCha8Rng::seed_from_u64(*seed))
            }
            CoordinateRule::LipschitzWeighted {
                alpha,
                seed,
                constants,
            } => {
                check_len("Lipschitz constants", constants.len(), n)?;
                if constants.iter().any(|&l| !(l > 0.0)) {
                    return Err(Error::InvalidInput(
                        "Lipschitz constants must be positive".into(),
                    ));
                }
                if alpha.is_infinite() && *alpha > 0.0 {
                    let best = constants
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |b, (i, &l)| if l > b.1 { (i, l) } else { b })
                        .0;
                    SamplerKind::Greedy(best)
                } else {
                    let w: Vec<f64> = constants.iter().map(|l| l.powf(*alpha)).collect();
                    let dist = WeightedIndex::new(&w)
                        .map_err(|e| Error::InvalidInput(format!("coordinate weights: {e}")))?;
                    SamplerKind::Weighted(ChaCha8Rng::seed_from_u64(*seed), dist)
                }
            }
        };
        Ok(Self { n, kind })
    }

    /// Probability of picking each coordinate.
    pub fn probabilities(rule: &CoordinateRule, n: usize) -> Vec<f64> {
        match rule {
            CoordinateRule::Cyclic | CoordinateRule::UniformRandom { .. } => vec![1.0 / n as f64; n],
            CoordinateRule::LipschitzWeighted {
                alpha, constants, ..
            } => {
                if alpha.is_infinite() {
                    let mut p = vec![0.0; n];
                    let best = (0..n).fold(0, |b, i| if constants[i] > constants[b] { i } else { b });
                    p[best] = 1.0;
                    p
                } else {
                    let w: Vec<f64> = constants.iter().map(|l| l.powf(*alpha)).collect();
                    let s: f64 = w.iter().sum();
                    w.iter().map(|x| x / s).collect()
                }
            }
        }
    }

    pub fn draw(&mut self, k: usize) -> usize {
        match &mut self.kind {
            SamplerKind::Cyclic => k % self.n,
            SamplerKind::Uniform(rng) => rng.random_range(0..self.n),
            SamplerKind::Weighted(rng, dist) => dist.sample(rng),
            SamplerKind::Greedy(i) => *i,
        }
    }
}

type Objective<'a> = Option<&'a dyn Fn(&[f64]) -> f64>;

fn run_cd<F>(
    name: &str,
    mut coord_min: F,
    x0: &[f64],
    cfg: &CdConfig,
    objective: Objective<'_>,
) -> Result<(Vec<f64>, SolverReport)>
where
    F: FnMut(usize, &[f64]) -> Result<f64>,
{
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("CD tolerance must be positive".into()));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut report = SolverReport::new(name);
    if n == 0 {
        report.status = Status::Converged;
        return Ok((x, report));
    }
    let mut sampler = CoordinateSampler::new(&cfg.rule, n)?;
    if let Some(f) = objective {
        report.objective_trace.push(f(&x));
    }
    let mut step = 0usize;
    for _ in 0..cfg.max_cycles {
        let before = x.clone();
        for _ in 0..n {
            let i = sampler.draw(step);
            step += 1;
            let xi = coord_min(i, &x)?;
            if !xi.is_finite() {
                return Err(Error::NonFinite("coordinate update"));
            }
            x[i] = xi;
        }
        let change = crate::linalg::max_abs_diff(&x, &before);
        report.push(change, 0.0);
        if let Some(f) = objective {
            report.objective_trace.push(f(&x));
        }
        if cfg.record_path {
            report.path.push(x.clone());
        }
        if change <= cfg.tol {
            report.status = Status::Converged;
            return Ok((x, report));
        }
    }
    Err(Error::MaxCyclesExceeded {
        solver: "coordinate descent",
        cycles: cfg.max_cycles,
        last: x,
    })
}

/// Generic coordinate descent: `coord_min(i, x)` returns the minimiser over
/// coordinate `i` with the others fixed. The closure sees every accepted
/// update (the returned value is always written back), so it may keep its
/// own running sums.
pub fn ccd_generic<F>(coord_min: F, x0: &[f64], cfg: &CdConfig) -> Result<(Vec<f64>, SolverReport)>
where
    F: FnMut(usize, &[f64]) -> f64,
{
    let mut f = coord_min;
    run_cd("ccd", |i, x| Ok(f(i, x)), x0, cfg, None)
}

/// [`ccd_generic`] with an objective evaluated after every cycle.
pub fn ccd_generic_traced<F, O>(
    coord_min: F,
    objective: &O,
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)>
where
    F: FnMut(usize, &[f64]) -> f64,
    O: Fn(&[f64]) -> f64,
{
    let mut f = coord_min;
    run_cd("ccd", |i, x| Ok(f(i, x)), x0, cfg, Some(objective))
}

struct Columns {
    cols: Vec<Vec<f64>>,
    sq: Vec<f64>,
}

fn columns(x: &DenseMatrix) -> Result<Columns> {
    let t = x.transpose();
    let cols: Vec<Vec<f64>> = (0..t.rows()).map(|j| t.row(j).to_vec()).collect();
    let sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    if let Some(j) = sq.iter().position(|&s| s == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    Ok(Columns { cols, sq })
}

fn lasso_cd(
    name: &str,
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    beta0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_len("Y", y.len(), x.rows())?;
    check_len("beta0", beta0.len(), x.cols())?;
    if !(lambda >= 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let c = columns(x)?;
    // residual Y − Xβ kept in sync with β
    let mut resid: Vec<f64> = y.iter().zip(x.matvec(beta0)).map(|(a, b)| a - b).collect();
    let objective = |b: &[f64]| -> f64 {
        let r: Vec<f64> = y.iter().zip(x.matvec(b)).map(|(a, p)| a - p).collect();
        0.5 * dot(&r, &r) + lambda * crate::linalg::norm1(b)
    };
    let coord = |j: usize, b: &[f64]| -> Result<f64> {
        let rho = dot(&c.cols[j], &resid) + c.sq[j] * b[j];
        let bj = if lambda > 0.0 {
            soft_threshold(&[rho], lambda)?[0] / c.sq[j]
        } else {
            rho / c.sq[j]
        };
        let delta = bj - b[j];
        if delta != 0.0 {
            crate::linalg::axpy(-delta, &c.cols[j], &mut resid);
        }
        Ok(bj)
    };
    let obj: &dyn Fn(&[f64]) -> f64 = &objective;
    run_cd(name, coord, beta0, cfg, Some(obj))
}

/// Least squares by cyclic coordinate descent.
pub fn cd_ols(
    x: &DenseMatrix,
    y: &[f64],
    beta0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    lasso_cd("cd_ols", x, y, 0.0, beta0, cfg)
}

/// Lasso `½‖Y − Xβ‖² + λ‖β‖₁` by coordinate descent:
/// `β_j = S(x_jᵀ(Y − X_(−j)β_(−j)); λ) / x_jᵀx_j`.
pub fn cd_lasso(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    beta0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    lasso_cd("cd_lasso", x, y, lambda, beta0, cfg)
}

fn check_square(q: &DenseMatrix, r: &[f64], x0: &[f64]) -> Result<()> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch("Q must be square".into()));
    }
    check_len("R", r.len(), q.rows())?;
    check_len("x0", x0.len(), q.rows())
}

/// Keeps `Qx` in sync with coordinate updates.
struct Gradient<'a> {
    q: &'a DenseMatrix,
    qx: Vec<f64>,
}

impl<'a> Gradient<'a> {
    fn new(q: &'a DenseMatrix, x: &[f64]) -> Self {
        Self { q, qx: q.matvec(x) }
    }

    /// `Σ_{j≠i} Q_ij x_j`
    fn off_diag(&self, i: usize, x: &[f64]) -> f64 {
        self.qx[i] - self.q.get(i, i) * x[i]
    }

    fn update(&mut self, i: usize, delta: f64) {
        if delta != 0.0 {
            // Q symmetric: column i equals row i
            crate::linalg::axpy(delta, self.q.row(i), &mut self.qx);
        }
    }
}

fn quad_objective<'a>(q: &'a DenseMatrix, r: &'a [f64]) -> impl Fn(&[f64]) -> f64 + 'a {
    move |x: &[f64]| 0.5 * q.quad_form(x) - dot(x, r)
}

/// `min ½xᵀQx − xᵀR` s.t. `lo ≤ x ≤ hi`:
/// `x_i = T((R_i − Σ_{j≠i} Q_ij x_j) / Q_ii; lo_i, hi_i)`.
pub fn ccd_qp_box(
    q: &DenseMatrix,
    r: &[f64],
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_square(q, r, x0)?;
    check_len("lower bound", lo.len(), r.len())?;
    check_len("upper bound", hi.len(), r.len())?;
    if let Some(i) = lo.iter().zip(hi).position(|(l, h)| l > h) {
        return Err(Error::InvertedBounds(i));
    }
    if let Some(i) = (0..q.rows()).find(|&i| !(q.get(i, i) > 0.0)) {
        return Err(Error::NonPositiveDiagonal(i));
    }
    let mut g = Gradient::new(q, x0);
    let coord = |i: usize, x: &[f64]| -> Result<f64> {
        let xi = ((r[i] - g.off_diag(i, x)) / q.get(i, i)).max(lo[i]).min(hi[i]);
        g.update(i, xi - x[i]);
        Ok(xi)
    };
    let obj = quad_objective(q, r);
    run_cd("ccd_qp_box", coord, x0, cfg, Some(&obj))
}

/// `min ½xᵀQx − xᵀR − Σ λ_i ln x_i`; every coordinate update is the
/// positive root of `Q_ii x² + (Σ_{j≠i} Q_ij x_j − R_i) x − λ_i = 0`.
/// Coordinates with `λ_i = 0` fall back to the plain quadratic update.
pub fn ccd_qp_logbarrier(
    q: &DenseMatrix,
    r: &[f64],
    lambdas: &[f64],
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_square(q, r, x0)?;
    check_len("lambda", lambdas.len(), r.len())?;
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::NegativeLambda(
            lambdas.iter().copied().find(|&l| !(l >= 0.0)).unwrap_or(f64::NAN),
        ));
    }
    if x0.iter().zip(lambdas).any(|(&x, &l)| l > 0.0 && !(x > 0.0)) {
        return Err(Error::NonPositiveStart);
    }
    if let Some(i) = (0..q.rows()).find(|&i| !(q.get(i, i) > 0.0)) {
        return Err(Error::NonPositiveDiagonal(i));
    }
    let mut g = Gradient::new(q, x0);
    let coord = |i: usize, x: &[f64]| -> Result<f64> {
        let qii = q.get(i, i);
        let b = r[i] - g.off_diag(i, x);
        let xi = if lambdas[i] > 0.0 {
            log_barrier_root(b / qii, lambdas[i] / qii)
        } else {
            b / qii
        };
        g.update(i, xi - x[i]);
        Ok(xi)
    };
    let obj = move |x: &[f64]| -> f64 {
        let barrier: f64 = x
            .iter()
            .zip(lambdas)
            .map(|(&xi, &l)| if l > 0.0 { l * xi.ln() } else { 0.0 })
            .sum();
        0.5 * q.quad_form(x) - dot(x, r) - barrier
    };
    run_cd("ccd_qp_logbarrier", coord, x0, cfg, Some(&obj))
}

fn check_covariance(sigma: &DenseMatrix, x0: &[f64]) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch("covariance must be square".into()));
    }
    check_len("x0", x0.len(), sigma.rows())?;
    if let Some(i) = (0..sigma.rows()).find(|&i| !(sigma.get(i, i) > 0.0)) {
        return Err(Error::NonPositiveVariance(i));
    }
    if x0.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveStart);
    }
    Ok(())
}

/// `λ = √(x0ᵀΣx0)`.
pub fn erc_default_lambda(sigma: &DenseMatrix, x0: &[f64]) -> f64 {
    sigma.quad_form(x0).sqrt()
}

/// Unscaled ERC solution of `min ½xᵀΣx − λ Σ ln x_i`:
/// `x_i = (−v_i + √(v_i² + 4λσ_i²)) / (2σ_i²)`, `v_i = Σ_{j≠i} Σ_ij x_j`.
/// Rescale by `1ᵀx` to get weights.
pub fn ccd_erc(
    sigma: &DenseMatrix,
    lambda: f64,
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_covariance(sigma, x0)?;
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let n = x0.len();
    let (x, mut rep) = ccd_qp_logbarrier(sigma, &vec![0.0; n], &vec![lambda; n], x0, cfg)?;
    rep.solver = "ccd_erc".into();
    Ok((x, rep))
}

/// Unscaled risk-budgeting solution for `R(x) = −xᵀ(μ − r) + ξ√(xᵀΣx)`,
/// holding `σ(x)` fixed within each coordinate step:
/// `x_i = (−β_i + √(β_i² − 4α_iγ_i)) / (2α_i)` with `α_i = ξσ_i²`,
/// `β_i = ξ Σ_{j≠i} Σ_ij x_j − (μ_i − r)σ(x)`, `γ_i = −λσ(x)RB_i`.
#[allow(clippy::too_many_arguments)]
pub fn ccd_rb_stdev(
    mu: &[f64],
    r: f64,
    xi: f64,
    sigma: &DenseMatrix,
    rb: &[f64],
    lambda: f64,
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_covariance(sigma, x0)?;
    let n = x0.len();
    check_len("mu", mu.len(), n)?;
    check_len("risk budgets", rb.len(), n)?;
    if !(xi > 0.0) {
        return Err(Error::InvalidInput(format!("xi must be positive, got {xi}")));
    }
    if rb.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let mut g = Gradient::new(sigma, x0);
    let mut var = dot(x0, &g.qx);
    let coord = |i: usize, x: &[f64]| -> Result<f64> {
        let s = var.max(0.0).sqrt();
        let a = xi * sigma.get(i, i);
        let b = xi * g.off_diag(i, x) - (mu[i] - r) * s;
        let c = lambda * s * rb[i];
        // positive root of a x² + b x − c = 0
        let new = log_barrier_root(-b / a, c / a);
        let delta = new - x[i];
        var += delta * (2.0 * g.qx[i] + delta * sigma.get(i, i));
        g.update(i, delta);
        Ok(new)
    };
    let obj = move |x: &[f64]| -> f64 {
        let excess: f64 = x.iter().zip(mu).map(|(a, m)| a * (m - r)).sum();
        let barrier: f64 = x.iter().zip(rb).map(|(a, b)| b * a.ln()).sum();
        -excess + xi * sigma.quad_form(x).sqrt() - lambda * barrier
    };
    run_cd("ccd_rb_stdev", coord, x0, cfg, Some(&obj))
}

/// Projected coordinate descent `x_i ← P_{Ω_i}(x_i − η ∂_i f(x))` for
/// pointwise sets (each `Ω_i` one-dimensional).
pub fn projected_cd<G>(
    mut grad: G,
    sets: &[ConvexSet],
    eta: f64,
    x0: &[f64],
    cfg: &CdConfig,
) -> Result<(Vec<f64>, SolverReport)>
where
    G: FnMut(usize, &[f64]) -> f64,
{
    check_len("coordinate sets", sets.len(), x0.len())?;
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {eta}")));
    }
    let coord = |i: usize, x: &[f64]| -> Result<f64> {
        let step = x[i] - eta * grad(i, x);
        Ok(project(&sets[i], &[step])?[0])
    };
    run_cd("projected_cd", coord, x0, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_in_one_cycle() {
        let a = [1.0, -2.0, 3.5];
        let (x, rep) = ccd_generic(|i, _| a[i], &[0.0; 3], &CdConfig::default().recording()).unwrap();
        assert_eq!(x, a.to_vec());
        assert_eq!(rep.path[0], a.to_vec());
    }

    #[test]
    fn constant_function_keeps_start() {
        let x0 = [0.3, 0.4];
        let (x, rep) = ccd_generic(|i, x| x[i], &x0, &CdConfig::default()).unwrap();
        assert_eq!(x, x0.to_vec());
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn box_qp_scalar() {
        let q = DenseMatrix::identity(1);
        let (x, _) = ccd_qp_box(&q, &[10.0], &[0.0], &[1.0], &[0.0], &CdConfig::default()).unwrap();
        assert_eq!(x, vec![1.0]);
        let q = DenseMatrix::diag(&[0.0]);
        assert!(matches!(
            ccd_qp_box(&q, &[1.0], &[0.0], &[1.0], &[0.0], &CdConfig::default()),
            Err(Error::NonPositiveDiagonal(0))
        ));
    }

    #[test]
    fn log_barrier_scalar() {
        let q = DenseMatrix::diag(&[2.0]);
        let (x, _) = ccd_qp_logbarrier(&q, &[1.0], &[3.0], &[1.0], &CdConfig::default()).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-14);
        let (x, _) = ccd_qp_logbarrier(
            &DenseMatrix::identity(3),
            &[0.0; 3],
            &[1.0; 3],
            &[0.5; 3],
            &CdConfig::default(),
        )
        .unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn erc_two_assets_symmetric() {
        let s = DenseMatrix::from_rows(&[vec![0.04, 0.012], vec![0.012, 0.04]]).unwrap();
        let (x, _) = ccd_erc(&s, 1.0, &[0.5, 0.5], &CdConfig::default()).unwrap();
        assert!((x[0] / (x[0] + x[1]) - 0.5).abs() < 1e-12);
        assert!(matches!(
            ccd_erc(&s, 1.0, &[0.0, 0.5], &CdConfig::default()),
            Err(Error::NonPositiveStart)
        ));
    }

    #[test]
    fn greedy_rule_picks_largest() {
        let rule = CoordinateRule::LipschitzWeighted {
            alpha: f64::INFINITY,
            seed: 1,
            constants: vec![1.0, 3.0, 3.0, 2.0],
        };
        let mut s = CoordinateSampler::new(&rule, 4).unwrap();
        assert!((0..10).all(|k| s.draw(k) == 1));
    }
}
