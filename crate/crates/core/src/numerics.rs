//! Scalar root finding and special functions.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};

/// Search interval and stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("bracket [{lo}, {hi}] is empty")));
        }
        Ok(Self {
            lo,
            hi,
            tol: 1e-10,
            max_iter: 200,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Root of a monotone function by bisection.
///
/// Stops when `|f(s)| <= tol` or the bracket is narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, b: RootBracket) -> Result<f64> {
    if !(b.tol > 0.0) || !(b.lo < b.hi) {
        return Err(Error::InvalidInput("bad root bracket".into()));
    }
    let (mut lo, mut hi) = (b.lo, b.hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::NonFinite("bisection endpoint"));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoSignChange { flo, fhi });
    }
    let lo_neg = flo < 0.0;
    let mut last = 0.5 * (lo + hi);
    for _ in 0..b.max_iter {
        let mid = 0.5 * (lo + hi);
        last = mid;
        let fm = f(mid);
        if fm.abs() <= b.tol || hi - lo <= b.tol {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MaxIterExceeded {
        solver: "bisect",
        iterations: b.max_iter,
        last: vec![last],
    })
}

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Principal branch of the Lambert W function, `W(x) e^{W(x)} = x`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("lambert_w argument"));
    }
    if x < -INV_E {
        // tolerate rounding right at the branch point
        if x > -INV_E - 1e-15 {
            return Ok(-1.0);
        }
        return Err(Error::OutOfDomain(format!("lambert_w({x}) needs x >= -1/e")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x > 1e300 {
        return Ok(lambert_w_exp(x.ln()));
    }
    let mut w = if x >= 0.0 {
        if x < 3.0 {
            (1.0 + x).ln() * 0.75
        } else {
            let l = x.ln();
            l - l.ln()
        }
    } else {
        // series about the branch point
        let p = (2.0 * (1.0 + std::f64::consts::E * x)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 1e-16 * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// `W(e^l)` evaluated without forming `e^l`, for large `l`.
pub fn lambert_w_exp(l: f64) -> f64 {
    if l < 20.0 {
        return lambert_w(l.exp()).unwrap_or(f64::NAN);
    }
    // solve w + ln w = l by Newton
    let mut w = l - l.ln();
    for _ in 0..50 {
        let f = w + w.ln() - l;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-16 * w {
            break;
        }
    }
    w
}

/// Solves `sum_i (v_i - s)_+ = target` for `s` by a sorted segment scan.
///
/// The left side is continuous and decreasing in `s` and unbounded below, so a
/// root exists for every `target > 0`.
pub fn threshold_sum_root(v: &[f64], target: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Degenerate("empty vector".into()));
    }
    if !(target > 0.0) {
        return Err(Error::OutOfDomain(format!("target must be positive, got {target}")));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut s = f64::NAN;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let cand = (cum - target) / (k + 1) as f64;
        if uk > cand {
            s = cand;
        } else {
            break;
        }
    }
    Ok(s)
}

/// Dominant eigenvalue (largest magnitude) of a symmetric matrix by power
/// iteration with Rayleigh quotient.
pub fn power_iteration(m: &DenseMatrix, max_iter: usize, tol: f64) -> f64 {
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start, not orthogonal to generic eigenvectors
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64 + 1.0).sin()).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|xi| *xi /= nx);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = m.matvec(&x);
        let ny = norm2(&y);
        if ny == 0.0 {
            return 0.0;
        }
        let next = dot(&x, &y);
        x = y.iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Lower estimate of the smallest eigenvalue of a symmetric matrix, from
/// power iteration on the shifted matrix `g I - M` with `g` the Gershgorin
/// bound.
pub fn smallest_eigenvalue_power(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let g = (0..n)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let shifted = m.scaled(-1.0).add_diag(g);
    g - power_iteration(&shifted, 10_000, 1e-12)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain(format!("normal_quantile({p})")));
    }
    Ok(statrs::function::erf::erfc_inv(2.0 * p) * -std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_examples() {
        let r = bisect(|s| s - 1.0, RootBracket::new(0.0, 2.0).unwrap()).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
        let r = bisect(|s| s * s - 2.0, RootBracket::new(0.0, 2.0).unwrap().with_tol(1e-12)).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
        assert!(matches!(
            bisect(|s| s + 10.0, RootBracket::new(0.0, 2.0).unwrap()),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn lambert_w_examples() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        assert!((lambert_w(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-14);
        assert!(lambert_w(-0.5).is_err());
        assert!((lambert_w(-INV_E).unwrap() + 1.0).abs() < 1e-6);
        let w = lambert_w_exp(1000.0);
        assert!((w + w.ln() - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_root_examples() {
        assert_eq!(threshold_sum_root(&[1.0, 2.0], 1.0).unwrap(), 1.0);
        assert_eq!(threshold_sum_root(&[3.0], 2.0).unwrap(), 1.0);
        let s = threshold_sum_root(&[0.7; 5], 5.0 * 0.2).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile() {
        assert!((normal_quantile(0.99).unwrap() - 2.326_347_874_040_841).abs() < 1e-9);
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn smallest_eigen() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((smallest_eigenvalue_power(&m) + 1.0).abs() < 1e-6);
    }
}
