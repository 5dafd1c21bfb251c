//! Proximal operators and Euclidean projections.
//!
//! Every operator maps `v` to `argmin_x f(x) + ½‖x − v‖²` for its own `f`;
//! parameters such as `λ`, centres and bounds are fixed at construction.

use crate::dykstra::{self, DykstraConfig};
use crate::error::{check_len, Error, Result};
use crate::linalg::{
    dot, norm1, norm2, pseudo_inverse, require_finite, symmetric_eigen, Cholesky, DenseMatrix,
};
use crate::numerics::{lambert_w_exp, threshold_sum_root};

/// Anything that evaluates a proximal operator.
/// A boxed projection or prox closure.
pub type BoxedProx<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a>;

pub trait Prox {
    fn prox(&self, v: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Prox for F
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn prox(&self, v: &[f64]) -> Result<Vec<f64>> {
        self(v)
    }
}

/// Norms with a closed-form prox and ball projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl Norm {
    pub fn from_p(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Norm::L1)
        } else if p == 2.0 {
            Ok(Norm::L2)
        } else if p.is_infinite() && p > 0.0 {
            Ok(Norm::Inf)
        } else {
            Err(Error::UnsupportedNorm(p.to_string()))
        }
    }

    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => norm1(v),
            Norm::L2 => norm2(v),
            Norm::Inf => crate::linalg::norm_inf(v),
        }
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

/// `sign(a)` with `sign(0) = 1`.
#[inline]
fn sign_nonneg(a: f64) -> f64 {
    if a >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `S(v; λ) = sign(v) (|v| − λ)_+`.
pub fn soft_threshold(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    Ok(v.iter()
        .map(|&x| {
            let m = x.abs() - lambda;
            if m > 0.0 {
                x.signum() * m
            } else {
                0.0
            }
        })
        .collect())
}

/// `(v − λ⁺)_+ − (v + λ⁻)_-`, with `x_- = max(−x, 0)`.
pub fn soft_threshold_two_sided(
    v: &[f64],
    lambda_minus: &[f64],
    lambda_plus: &[f64],
) -> Result<Vec<f64>> {
    check_len("lambda_minus", lambda_minus.len(), v.len())?;
    check_len("lambda_plus", lambda_plus.len(), v.len())?;
    if let Some(&l) = lambda_minus.iter().chain(lambda_plus).find(|&&l| !(l >= 0.0)) {
        return Err(Error::NegativeLambda(l));
    }
    Ok(v.iter()
        .zip(lambda_minus.iter().zip(lambda_plus))
        .map(|(&x, (&lm, &lp))| pos(x - lp) - neg(x + lm))
        .collect())
}

/// Clamp each entry into `[lo_i, hi_i]`.
pub fn truncate(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    check_len("lower bound", lo.len(), v.len())?;
    check_len("upper bound", hi.len(), v.len())?;
    check_bounds(lo, hi)?;
    Ok(v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.max(l).min(h))
        .collect())
}

fn check_bounds(lo: &[f64], hi: &[f64]) -> Result<()> {
    match lo.iter().zip(hi).position(|(l, h)| l > h || l.is_nan() || h.is_nan()) {
        Some(i) => Err(Error::InvertedBounds(i)),
        None => Ok(()),
    }
}

/// `prox_{λ max(x)}(v) = min(v, s*)` with `Σ (v_i − s*)_+ = λ`.
pub fn prox_max(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let s = threshold_sum_root(v, lambda)?;
    Ok(v.iter().map(|&x| x.min(s)).collect())
}

/// Prox of `λ‖x‖_p` for `p ∈ {1, 2, ∞}`.
pub fn prox_lp_norm(p: Norm, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    match p {
        Norm::L1 => soft_threshold(v, lambda),
        Norm::L2 => {
            let n = norm2(v);
            let k = 1.0 - lambda / lambda.max(n);
            Ok(v.iter().map(|x| k * x).collect())
        }
        Norm::Inf => {
            // sign(v) ⊙ min(|v|, s*) with s* clamped at zero when ‖v‖₁ ≤ λ
            let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            let s = pos(threshold_sum_root(&a, lambda)?);
            Ok(v.iter().map(|&x| x.signum() * x.abs().min(s)).collect())
        }
    }
}

/// Prox of `−λ Σ b_i ln x_i`: `(v + √(v² + 4λb)) / 2`.
pub fn prox_log_barrier(v: &[f64], lambda: f64, b: &[f64]) -> Result<Vec<f64>> {
    check_len("barrier weights", b.len(), v.len())?;
    if !(lambda > 0.0) || b.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    Ok(v.iter()
        .zip(b)
        .map(|(&x, &w)| log_barrier_root(x, lambda * w))
        .collect())
}

/// Positive root of `x² − v x − c = 0`, computed without cancellation.
#[inline]
pub(crate) fn log_barrier_root(v: f64, c: f64) -> f64 {
    let d = (v * v + 4.0 * c).sqrt();
    if v >= 0.0 {
        0.5 * (v + d)
    } else {
        2.0 * c / (d - v)
    }
}

/// Prox of `½xᵀQx − xᵀR`: `(Q + I)⁻¹(R + v)`.
pub fn prox_quadratic(v: &[f64], q: &DenseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    check_len("R", r.len(), q.rows())?;
    check_len("v", v.len(), q.rows())?;
    let chol = Cholesky::new(&q.add_diag(1.0))?;
    Ok(chol.solve(&crate::linalg::add(r, v)))
}

/// Prox of `λ Σ x_i ln(x_i / x̃_i)`.
///
/// Stationarity `λ(1 + ln(x/x̃)) + x − v = 0` gives
/// `x = λ W(x̃ e^{v/λ − 1} / λ)`, evaluated in log space so that large `v/λ`
/// does not overflow.
pub fn prox_kl(v: &[f64], lambda: f64, reference: &[f64]) -> Result<Vec<f64>> {
    check_len("reference", reference.len(), v.len())?;
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    if reference.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    v.iter()
        .zip(reference)
        .map(|(&x, &r)| {
            let l = r.ln() + x / lambda - 1.0 - lambda.ln();
            let w = lambert_w_exp(l);
            if w.is_finite() {
                Ok(lambda * w)
            } else {
                Err(Error::OutOfDomain(format!("lambert_w(exp({l}))")))
            }
        })
        .collect()
}

/// Prox of `λ Σ (α_i (x_i − γ_i)_- + β_i (x_i − γ_i)_+)`:
/// `γ + (v − γ − λβ)_+ − (v − γ + λα)_-`.
pub fn prox_bid_ask(
    v: &[f64],
    lambda: f64,
    alpha: &[f64],
    beta: &[f64],
    gamma: &[f64],
) -> Result<Vec<f64>> {
    check_len("alpha", alpha.len(), v.len())?;
    check_len("beta", beta.len(), v.len())?;
    check_len("gamma", gamma.len(), v.len())?;
    if !(lambda >= 0.0) || alpha.iter().chain(beta).any(|&c| !(c >= 0.0)) {
        return Err(Error::NegativeCost);
    }
    let shifted: Vec<f64> = v.iter().zip(gamma).map(|(a, g)| a - g).collect();
    let lm: Vec<f64> = alpha.iter().map(|a| lambda * a).collect();
    let lp: Vec<f64> = beta.iter().map(|b| lambda * b).collect();
    let s = soft_threshold_two_sided(&shifted, &lm, &lp)?;
    Ok(s.iter().zip(gamma).map(|(a, g)| a + g).collect())
}

/// Prox of `λ` times the sum of the `k` largest entries:
/// `v − λ P_Ω(v/λ)` with `Ω = Box[0,1] ∩ {1ᵀx = k}`.
pub fn prox_sum_k_largest(v: &[f64], lambda: f64, k: usize) -> Result<Vec<f64>> {
    let n = v.len();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    if !(lambda > 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / lambda).collect();
    let hyper = ConvexSet::hyperplane(vec![1.0; n], k as f64)?;
    let boxed = ConvexSet::boxed(vec![0.0; n], vec![1.0; n])?;
    let cfg = DykstraConfig {
        tol: 1e-13,
        max_cycles: 100_000,
    };
    let (p, _) = dykstra::dykstra_cycle(
        &[&ProxOp::Project(hyper), &ProxOp::Project(boxed)],
        &scaled,
        &cfg,
    )?;
    Ok(v.iter().zip(&p).map(|(x, q)| x - lambda * q).collect())
}

/// Prox of `g(x) = f(a x + b)` from the prox of `a² f`:
/// `(prox_{a²f}(a v + b) − b) / a`.
pub fn prox_scale_translate<P: Prox + ?Sized>(
    base: &P,
    a: f64,
    b: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::ZeroScale);
    }
    check_len("translation", b.len(), v.len())?;
    let w: Vec<f64> = v.iter().zip(b).map(|(x, t)| a * x + t).collect();
    let p = base.prox(&w)?;
    check_len("base prox output", p.len(), v.len())?;
    Ok(p.iter().zip(b).map(|(x, t)| (x - t) / a).collect())
}

/// Basic convex (and two non-convex) sets with a Euclidean projection.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    /// `{x: aᵀx = b}`
    Hyperplane { a: Vec<f64>, b: f64 },
    /// `{x: cᵀx ≤ d}`
    Halfspace { c: Vec<f64>, d: f64 },
    /// `{x: Ax = B}`, pseudo-inverse kept for repeated projections.
    AffineSet {
        a: DenseMatrix,
        b: Vec<f64>,
        pinv: DenseMatrix,
    },
    /// `{x: lo ≤ x ≤ hi}`
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x: ‖x − c‖_p ≤ r}`
    LpBall {
        p: Norm,
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x: ‖x − c‖_p ≥ r}` for `p ∈ {1, 2}`; not convex, the projection is
    /// one selection of the nearest points.
    LpBallComplement {
        p: Norm,
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x ≥ 0: 1ᵀx = 1}`
    Simplex,
    /// `{x: Cx ≤ D}`, projected with Dykstra over the rows.
    Polyhedron { c: DenseMatrix, d: Vec<f64> },
    /// `{x: xᵀΣx ≤ r²}`; the eigen-decomposition of `Σ` is stored.
    Ellipsoid {
        radius: f64,
        eigvals: Vec<f64>,
        eigvecs: DenseMatrix,
    },
    /// `{x ≥ 0: −Σ x_i ln x_i ≥ h}`
    EntropyFloor { min_entropy: f64 },
}

impl ConvexSet {
    pub fn hyperplane(a: Vec<f64>, b: f64) -> Result<Self> {
        require_finite("hyperplane normal", &a)?;
        if norm2(&a) == 0.0 {
            return Err(Error::DegenerateSet("hyperplane normal is zero"));
        }
        Ok(Self::Hyperplane { a, b })
    }

    pub fn halfspace(c: Vec<f64>, d: f64) -> Result<Self> {
        require_finite("halfspace normal", &c)?;
        if norm2(&c) == 0.0 {
            return Err(Error::DegenerateSet("halfspace normal is zero"));
        }
        Ok(Self::Halfspace { c, d })
    }

    pub fn affine(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        check_len("affine rhs", b.len(), a.rows())?;
        let pinv = pseudo_inverse(&a);
        Ok(Self::AffineSet { a, b, pinv })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len("box", hi.len(), lo.len())?;
        check_bounds(&lo, &hi)?;
        Ok(Self::Box { lo, hi })
    }

    pub fn ball(p: Norm, center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::DegenerateSet("ball radius must be positive"));
        }
        Ok(Self::LpBall { p, center, radius })
    }

    pub fn ball_complement(p: Norm, center: Vec<f64>, radius: f64) -> Result<Self> {
        if p == Norm::Inf {
            return Err(Error::UnsupportedNorm("inf (ball complement)".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::DegenerateSet("ball radius must be positive"));
        }
        Ok(Self::LpBallComplement { p, center, radius })
    }

    pub fn polyhedron(c: DenseMatrix, d: Vec<f64>) -> Result<Self> {
        check_len("polyhedron rhs", d.len(), c.rows())?;
        for i in 0..c.rows() {
            if norm2(c.row(i)) == 0.0 {
                return Err(Error::DegenerateSet("polyhedron row is zero"));
            }
        }
        Ok(Self::Polyhedron { c, d })
    }

    /// `{x: √(xᵀΣx) ≤ radius}`.
    pub fn ellipsoid(sigma: &DenseMatrix, radius: f64) -> Result<Self> {
        if !sigma.is_symmetric() {
            return Err(Error::InvalidInput("ellipsoid matrix is not symmetric".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::DegenerateSet("ellipsoid radius must be positive"));
        }
        let (eigvals, eigvecs) = symmetric_eigen(sigma);
        if eigvals.iter().any(|&d| d < -1e-12) {
            return Err(Error::NotPositiveDefinite {
                row: 0,
                pivot: eigvals.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        Ok(Self::Ellipsoid {
            radius,
            eigvals: eigvals.into_iter().map(|d| d.max(0.0)).collect(),
            eigvecs,
        })
    }

    pub fn entropy_floor(min_entropy: f64) -> Result<Self> {
        if !min_entropy.is_finite() {
            return Err(Error::NonFinite("entropy floor"));
        }
        Ok(Self::EntropyFloor { min_entropy })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Hyperplane { .. } => "hyperplane",
            Self::Halfspace { .. } => "halfspace",
            Self::AffineSet { .. } => "affine",
            Self::Box { .. } => "box",
            Self::LpBall { .. } => "ball",
            Self::LpBallComplement { .. } => "ball_complement",
            Self::Simplex => "simplex",
            Self::Polyhedron { .. } => "polyhedron",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::EntropyFloor { .. } => "entropy_floor",
        }
    }

    /// Whether `x` lies in the set up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Self::Hyperplane { a, b } => (dot(a, x) - b).abs() <= tol,
            Self::Halfspace { c, d } => dot(c, x) <= d + tol,
            Self::AffineSet { a, b, .. } => {
                crate::linalg::max_abs_diff(&a.matvec(x), b) <= tol
            }
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol),
            Self::LpBall { p, center, radius } => {
                p.eval(&crate::linalg::sub(x, center)) <= radius + tol
            }
            Self::LpBallComplement { p, center, radius } => {
                p.eval(&crate::linalg::sub(x, center)) >= radius - tol
            }
            Self::Simplex => {
                x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
            Self::Polyhedron { c, d } => {
                c.matvec(x).iter().zip(d).all(|(cx, di)| *cx <= di + tol)
            }
            Self::Ellipsoid {
                radius,
                eigvals,
                eigvecs,
            } => {
                let z = eigvecs.tr_matvec(x);
                let q: f64 = z.iter().zip(eigvals).map(|(zi, d)| d * zi * zi).sum();
                q.sqrt() <= radius + tol
            }
            Self::EntropyFloor { min_entropy } => {
                x.iter().all(|&v| v >= -tol) && entropy(x) >= min_entropy - tol
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::Hyperplane { a, .. } => Some(a.len()),
            Self::Halfspace { c, .. } => Some(c.len()),
            Self::AffineSet { a, .. } => Some(a.cols()),
            Self::Box { lo, .. } => Some(lo.len()),
            Self::LpBall { center, .. } | Self::LpBallComplement { center, .. } => {
                Some(center.len())
            }
            Self::Polyhedron { c, .. } => Some(c.cols()),
            Self::Ellipsoid { eigvals, .. } => Some(eigvals.len()),
            Self::Simplex | Self::EntropyFloor { .. } => None,
        }
    }
}

/// Shannon entropy `−Σ x_i ln x_i` with `0 ln 0 = 0`.
pub fn entropy(x: &[f64]) -> f64 {
    -x.iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
}

/// Euclidean projection of `v` onto `set`.
pub fn project(set: &ConvexSet, v: &[f64]) -> Result<Vec<f64>> {
    if let Some(n) = set.dim() {
        check_len(set.name(), v.len(), n)?;
    }
    match set {
        ConvexSet::Hyperplane { a, b } => {
            let k = (dot(a, v) - b) / dot(a, a);
            Ok(v.iter().zip(a).map(|(x, ai)| x - k * ai).collect())
        }
        ConvexSet::Halfspace { c, d } => {
            let k = pos(dot(c, v) - d) / dot(c, c);
            Ok(v.iter().zip(c).map(|(x, ci)| x - k * ci).collect())
        }
        ConvexSet::AffineSet { a, b, pinv } => {
            let r = crate::linalg::sub(&a.matvec(v), b);
            Ok(crate::linalg::sub(v, &pinv.matvec(&r)))
        }
        ConvexSet::Box { lo, hi } => truncate(v, lo, hi),
        ConvexSet::LpBall { p, center, radius } => {
            let w = crate::linalg::sub(v, center);
            let r = *radius;
            let out = match p {
                Norm::L2 => {
                    let k = r / r.max(norm2(&w));
                    w.iter().map(|x| k * x).collect()
                }
                Norm::L1 => {
                    if norm1(&w) <= r {
                        w
                    } else {
                        let a: Vec<f64> = w.iter().map(|x| x.abs()).collect();
                        let s = threshold_sum_root(&a, r)?;
                        w.iter().map(|&x| x.signum() * pos(x.abs() - s)).collect()
                    }
                }
                Norm::Inf => w.iter().map(|&x| x.max(-r).min(r)).collect(),
            };
            Ok(crate::linalg::add(&out, center))
        }
        ConvexSet::LpBallComplement { p, center, radius } => {
            let w = crate::linalg::sub(v, center);
            let r = *radius;
            match p {
                Norm::L2 => {
                    let nw = norm2(&w);
                    if nw >= r {
                        Ok(v.to_vec())
                    } else if nw == 0.0 {
                        let mut out = center.clone();
                        if let Some(first) = out.first_mut() {
                            *first += r;
                        }
                        Ok(out)
                    } else {
                        let k = r / nw;
                        Ok(center.iter().zip(&w).map(|(c, x)| c + k * x).collect())
                    }
                }
                Norm::L1 => {
                    let nw = norm1(&w);
                    if nw >= r {
                        Ok(v.to_vec())
                    } else {
                        let shift = (r - nw) / v.len() as f64;
                        Ok(v.iter()
                            .zip(&w)
                            .map(|(x, wi)| x + sign_nonneg(*wi) * shift)
                            .collect())
                    }
                }
                Norm::Inf => Err(Error::UnsupportedNorm("inf (ball complement)".into())),
            }
        }
        ConvexSet::Simplex => {
            if v.is_empty() {
                return Err(Error::DimensionMismatch("empty vector".into()));
            }
            let mu = threshold_sum_root(v, 1.0)?;
            Ok(v.iter().map(|&x| pos(x - mu)).collect())
        }
        ConvexSet::Polyhedron { c, d } => {
            dykstra::project_polyhedron(c, d, v, &DykstraConfig::default())
        }
        ConvexSet::Ellipsoid {
            radius,
            eigvals,
            eigvecs,
        } => Ok(project_ellipsoid(*radius, eigvals, eigvecs, v)),
        ConvexSet::EntropyFloor { min_entropy } => project_entropy_floor(*min_entropy, v),
    }
}

/// `x(ν) = (I + νΣ)⁻¹ v` with `ν ≥ 0` chosen so that `x(ν)ᵀΣx(ν) = r²`.
fn project_ellipsoid(radius: f64, eigvals: &[f64], u: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    let z = u.tr_matvec(v);
    let r2 = radius * radius;
    let q = |nu: f64| -> f64 {
        z.iter()
            .zip(eigvals)
            .map(|(zi, d)| d * (zi / (1.0 + nu * d)).powi(2))
            .sum()
    };
    if q(0.0) <= r2 {
        return v.to_vec();
    }
    let mut hi = 1.0;
    while q(hi) > r2 {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) > r2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the upper end is always feasible
    let scaled: Vec<f64> = z
        .iter()
        .zip(eigvals)
        .map(|(zi, d)| zi / (1.0 + hi * d))
        .collect();
    u.matvec(&scaled)
}

/// Projection onto the entropy super-level set through the prox of
/// `ν Σ x ln x`, with the multiplier `ν` found by bisection.
fn project_entropy_floor(h: f64, v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty vector".into()));
    }
    // prox_{ν x ln x} pushes every entry towards 1/e, where entropy is n/e
    if h > n as f64 / std::f64::consts::E {
        return Err(Error::EmptySetSuspected(h));
    }
    // the clip onto x ≥ 0 is the projection whenever it already meets the floor
    let clipped: Vec<f64> = v.iter().map(|&x| pos(x)).collect();
    if entropy(&clipped) >= h {
        return Ok(clipped);
    }
    let ones = vec![1.0; n];
    let at = |nu: f64| prox_kl(v, nu, &ones);
    let mut hi = 1.0;
    while entropy(&at(hi)?) < h {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::EmptySetSuspected(h));
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // an overflow at tiny ν means the prox is still the clip, below the floor
        match at(mid) {
            Ok(x) if entropy(&x) >= h => hi = mid,
            _ => lo = mid,
        }
    }
    at(hi)
}

/// A catalogued proximal operator with its parameters bound.
#[derive(Debug, Clone)]
pub enum ProxOp {
    /// `f = 0`
    Identity,
    SoftThreshold { lambda: f64 },
    TwoSided {
        lambda_minus: Vec<f64>,
        lambda_plus: Vec<f64>,
    },
    Truncate { lo: Vec<f64>, hi: Vec<f64> },
    Project(ConvexSet),
    Max { lambda: f64 },
    LpNorm { p: Norm, lambda: f64 },
    LogBarrier { lambda: f64, b: Vec<f64> },
    /// `(Q + I)⁻¹(R + v)` with the factor of `Q + I` cached.
    Quadratic { factor: Cholesky, r: Vec<f64> },
    Kl { lambda: f64, reference: Vec<f64> },
    BidAsk {
        lambda: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
    },
    SumKLargest { lambda: f64, k: usize },
    /// `base` is the prox of `a² f`; the result is the prox of `f(a x + b)`.
    ScaleTranslate {
        base: Box<ProxOp>,
        a: f64,
        b: Vec<f64>,
    },
}

impl ProxOp {
    pub fn soft_threshold(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::NegativeLambda(lambda));
        }
        Ok(Self::SoftThreshold { lambda })
    }

    pub fn quadratic(q: &DenseMatrix, r: Vec<f64>) -> Result<Self> {
        check_len("R", r.len(), q.rows())?;
        Ok(Self::Quadratic {
            factor: Cholesky::new(&q.add_diag(1.0))?,
            r,
        })
    }

    pub fn log_barrier(lambda: f64, b: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0) || b.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::NonPositiveWeight);
        }
        Ok(Self::LogBarrier { lambda, b })
    }

    /// Prox of `f(x − center)` built from the prox of `f`.
    pub fn translated(base: ProxOp, center: &[f64]) -> Self {
        Self::ScaleTranslate {
            base: Box::new(base),
            a: 1.0,
            b: center.iter().map(|c| -c).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::SoftThreshold { .. } => "soft_threshold",
            Self::TwoSided { .. } => "soft_threshold_two_sided",
            Self::Truncate { .. } => "truncate",
            Self::Project(s) => s.name(),
            Self::Max { .. } => "max",
            Self::LpNorm { .. } => "lp_norm",
            Self::LogBarrier { .. } => "log_barrier",
            Self::Quadratic { .. } => "quadratic",
            Self::Kl { .. } => "kl",
            Self::BidAsk { .. } => "bid_ask",
            Self::SumKLargest { .. } => "sum_k_largest",
            Self::ScaleTranslate { .. } => "scale_translate",
        }
    }
}

impl Prox for ProxOp {
    fn prox(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Identity => Ok(v.to_vec()),
            Self::SoftThreshold { lambda } => soft_threshold(v, *lambda),
            Self::TwoSided {
                lambda_minus,
                lambda_plus,
            } => soft_threshold_two_sided(v, lambda_minus, lambda_plus),
            Self::Truncate { lo, hi } => truncate(v, lo, hi),
            Self::Project(set) => project(set, v),
            Self::Max { lambda } => prox_max(v, *lambda),
            Self::LpNorm { p, lambda } => prox_lp_norm(*p, v, *lambda),
            Self::LogBarrier { lambda, b } => prox_log_barrier(v, *lambda, b),
            Self::Quadratic { factor, r } => {
                check_len("v", v.len(), r.len())?;
                Ok(factor.solve(&crate::linalg::add(r, v)))
            }
            Self::Kl { lambda, reference } => prox_kl(v, *lambda, reference),
            Self::BidAsk {
                lambda,
                alpha,
                beta,
                gamma,
            } => prox_bid_ask(v, *lambda, alpha, beta, gamma),
            Self::SumKLargest { lambda, k } => prox_sum_k_largest(v, *lambda, *k),
            Self::ScaleTranslate { base, a, b } => prox_scale_translate(base.as_ref(), *a, b, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -0.5], 1.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(
            soft_threshold(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1.5).unwrap(),
            vec![-0.5, 0.0, 0.0, 0.0, 0.5]
        );
        assert!(matches!(soft_threshold(&[1.0], -1.0), Err(Error::NegativeLambda(_))));
        assert_eq!(soft_threshold_two_sided(&[2.0], &[1.0], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(soft_threshold_two_sided(&[-3.0], &[1.0], &[5.0]).unwrap(), vec![-2.0]);
    }

    #[test]
    fn truncate_examples() {
        let t = truncate(&[-1.0, 0.3, 2.0], &[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(t, vec![0.0, 0.3, 1.0]);
        assert_eq!(truncate(&[1.5], &[-0.5], &[1.0]).unwrap(), vec![1.0]);
        assert!(matches!(truncate(&[0.0], &[1.0], &[0.0]), Err(Error::InvertedBounds(0))));
    }

    #[test]
    fn projection_examples() {
        let h = ConvexSet::hyperplane(vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(project(&h, &[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        let b1 = ConvexSet::ball(Norm::L1, vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(project(&b1, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let b2 = ConvexSet::ball(Norm::L2, vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(project(&b2, &[0.0, 3.0]).unwrap(), vec![0.0, 1.0]);
        let c2 = ConvexSet::ball_complement(Norm::L2, vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(project(&c2, &[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(project(&ConvexSet::Simplex, &[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        assert!(ConvexSet::hyperplane(vec![0.0, 0.0], 1.0).is_err());
        assert!(matches!(
            project(&h, &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn l1_complement_sign_convention() {
        let c1 = ConvexSet::ball_complement(Norm::L1, vec![0.0, 0.0], 1.0).unwrap();
        // sign(0) = +1
        assert!(close(&project(&c1, &[0.0, 0.0]).unwrap(), &[0.5, 0.5], 1e-15));
        assert!(close(&project(&c1, &[-0.2, 0.0]).unwrap(), &[-0.6, 0.4], 1e-15));
    }

    #[test]
    fn prox_max_and_norms() {
        assert_eq!(prox_max(&[1.0, 2.0], 1.0).unwrap(), vec![1.0, 1.0]);
        let v = [0.7; 4];
        assert!(close(&prox_max(&v, 4.0 * 0.2).unwrap(), &[0.5; 4], 1e-15));
        assert_eq!(prox_lp_norm(Norm::Inf, &[1.0, 2.0], 1.0).unwrap(), vec![1.0, 1.0]);
        assert!(close(&prox_lp_norm(Norm::L2, &[3.0, 4.0], 2.5).unwrap(), &[1.5, 2.0], 1e-15));
        assert_eq!(prox_lp_norm(Norm::L2, &[0.3, 0.4], 1.0).unwrap(), vec![0.0, 0.0]);
        assert!(Norm::from_p(3.0).is_err());
    }

    #[test]
    fn barrier_quadratic_kl() {
        assert_eq!(prox_log_barrier(&[0.0], 1.0, &[1.0]).unwrap(), vec![1.0]);
        let x = prox_log_barrier(&[3.0], 1.0, &[1.0]).unwrap()[0];
        assert!((x - (3.0 + 13f64.sqrt()) / 2.0).abs() < 1e-15);
        let x = prox_quadratic(&[2.0, 4.0], &DenseMatrix::identity(2), &[0.0, 0.0]).unwrap();
        assert!(close(&x, &[1.0, 2.0], 1e-15));
        let x = prox_kl(&[1.0], 1.0, &[1.0]).unwrap()[0];
        assert!((x - 0.567_143_290_409_783_8).abs() < 1e-14);
    }

    #[test]
    fn bid_ask_and_sum_k() {
        let g = [0.3, -0.2];
        assert_eq!(prox_bid_ask(&g, 1.0, &[1.0, 1.0], &[1.0, 1.0], &g).unwrap(), g.to_vec());
        let v = [2.3, 1.8];
        let out = prox_bid_ask(&v, 1.0, &[1.0, 1.0], &[1.0, 1.0], &g).unwrap();
        assert!(close(&out, &[1.3, 0.8], 1e-15));
        let out = prox_sum_k_largest(&[10.0, 10.0], 1.0, 2).unwrap();
        assert!(close(&out, &[9.0, 9.0], 1e-10));
        let out = prox_sum_k_largest(&[1.0, 2.0], 1.0, 1).unwrap();
        assert!(close(&out, &[1.0, 1.0], 1e-10));
        assert!(matches!(prox_sum_k_largest(&[1.0], 1.0, 2), Err(Error::BadK { .. })));
    }

    #[test]
    fn scale_translate_ball() {
        let c = vec![1.0, -2.0];
        let centred = ProxOp::Project(ConvexSet::ball(Norm::L2, vec![0.0, 0.0], 1.0).unwrap());
        let shifted = ProxOp::translated(centred, &c);
        let direct = ConvexSet::ball(Norm::L2, c.clone(), 1.0).unwrap();
        let v = [4.0, 2.0];
        assert!(close(&shifted.prox(&v).unwrap(), &project(&direct, &v).unwrap(), 1e-15));
        assert!(matches!(
            prox_scale_translate(&ProxOp::Identity, 0.0, &[0.0], &[1.0]),
            Err(Error::ZeroScale)
        ));
    }

    #[test]
    fn ellipsoid_and_entropy() {
        let sigma = DenseMatrix::diag(&[4.0, 1.0]);
        let e = ConvexSet::ellipsoid(&sigma, 1.0).unwrap();
        let x = project(&e, &[2.0, 0.0]).unwrap();
        assert!(close(&x, &[0.5, 0.0], 1e-12));
        let h = ConvexSet::entropy_floor(2f64.ln()).unwrap();
        let x = project(&h, &[1.0, 0.0]).unwrap();
        assert!(entropy(&x) >= 2f64.ln() - 1e-10);
    }
}
