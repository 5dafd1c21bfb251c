//! Dykstra's algorithm: the prox of a sum of functions, and the projection
//! onto an intersection of convex sets.

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, max_abs_diff, norm_inf, pseudo_inverse, DenseMatrix};
use crate::prox::{truncate, Prox};
use crate::report::{SolverReport, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraConfig {
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_cycles: 10_000,
        }
    }
}

/// Residuals larger than this (relative to the input) are read as an empty
/// intersection.
const BLOWUP: f64 = 1e6;

fn check_cfg(cfg: &DykstraConfig) -> Result<()> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("Dykstra tolerance must be positive".into()));
    }
    Ok(())
}

fn blowup_limit(v: &[f64]) -> f64 {
    BLOWUP * (1.0 + norm_inf(v))
}

/// Two-function scheme:
///
/// ```text
/// x ← prox_f1(y + p),  p ← y + p − x,
/// y ← prox_f2(x + q),  q ← x + q − y
/// ```
///
/// started at `x = y = v`, `p = q = 0`. Returns the last `f2` iterate.
pub fn dykstra_two<F1, F2>(
    f1: &F1,
    f2: &F2,
    v: &[f64],
    cfg: &DykstraConfig,
) -> Result<(Vec<f64>, SolverReport)>
where
    F1: Prox + ?Sized,
    F2: Prox + ?Sized,
{
    check_cfg(cfg)?;
    let n = v.len();
    let mut x = v.to_vec();
    let mut y = v.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut report = SolverReport::new("dykstra_two");
    let limit = blowup_limit(v);
    for _ in 0..cfg.max_cycles {
        let w: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a + b).collect();
        let x_new = f1.prox(&w)?;
        check_len("f1 output", x_new.len(), n)?;
        let p_new: Vec<f64> = w.iter().zip(&x_new).map(|(a, b)| a - b).collect();
        let w: Vec<f64> = x_new.iter().zip(&q).map(|(a, b)| a + b).collect();
        let y_new = f2.prox(&w)?;
        check_len("f2 output", y_new.len(), n)?;
        let q_new: Vec<f64> = w.iter().zip(&y_new).map(|(a, b)| a - b).collect();
        let change = max_abs_diff(&x_new, &x)
            .max(max_abs_diff(&y_new, &y))
            .max(max_abs_diff(&p_new, &p))
            .max(max_abs_diff(&q_new, &q));
        x = x_new;
        y = y_new;
        p = p_new;
        q = q_new;
        report.push(change, max_abs_diff(&x, &y));
        let z = norm_inf(&p).max(norm_inf(&q));
        if z > limit {
            return Err(Error::EmptySetSuspected(z));
        }
        if change <= cfg.tol {
            report.status = Status::Converged;
            return Ok((y, report));
        }
    }
    Err(Error::MaxCyclesExceeded {
        solver: "dykstra_two",
        cycles: cfg.max_cycles,
        last: y,
    })
}

/// `m`-function cyclic scheme with one residual per function:
///
/// ```text
/// x^(k+1,j) = prox_fj(x^(k+1,j−1) + z^(k,j))
/// z^(k+1,j) = x^(k+1,j−1) + z^(k,j) − x^(k+1,j)
/// ```
///
/// Stops when `max_j ‖x^(k+1,j) − x^(k,j)‖_∞ ≤ tol` and the residuals have
/// settled to the same tolerance; on an empty intersection the iterates can
/// be periodic while the residuals drift.
pub fn dykstra_cycle(
    fns: &[&dyn Prox],
    v: &[f64],
    cfg: &DykstraConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_cfg(cfg)?;
    let m = fns.len();
    if m == 0 {
        return Err(Error::InvalidInput("Dykstra needs at least one function".into()));
    }
    let n = v.len();
    let mut report = SolverReport::new("dykstra_cycle");
    if m == 1 {
        let x = fns[0].prox(v)?;
        report.push(0.0, 0.0);
        report.status = Status::Converged;
        return Ok((x, report));
    }
    let mut x = v.to_vec();
    let mut z = vec![vec![0.0; n]; m];
    let mut prev: Vec<Option<Vec<f64>>> = vec![None; m];
    let limit = blowup_limit(v);
    for _ in 0..cfg.max_cycles {
        let mut change = 0.0_f64;
        for j in 0..m {
            let w: Vec<f64> = x.iter().zip(&z[j]).map(|(a, b)| a + b).collect();
            let xj = fns[j].prox(&w)?;
            check_len("prox output", xj.len(), n)?;
            let zj: Vec<f64> = w.iter().zip(&xj).map(|(a, b)| a - b).collect();
            change = change.max(match &prev[j] {
                Some(p) => max_abs_diff(p, &xj).max(max_abs_diff(&z[j], &zj)),
                None => f64::INFINITY,
            });
            z[j] = zj;
            prev[j] = Some(xj.clone());
            x = xj;
        }
        let zmax = z.iter().map(|zj| norm_inf(zj)).fold(0.0, f64::max);
        report.push(change, zmax);
        if zmax > limit {
            return Err(Error::EmptySetSuspected(zmax));
        }
        if change <= cfg.tol {
            report.status = Status::Converged;
            return Ok((x, report));
        }
    }
    Err(Error::MaxCyclesExceeded {
        solver: "dykstra_cycle",
        cycles: cfg.max_cycles,
        last: x,
    })
}

/// Projection onto `{x: Cx ≤ D}` by Dykstra over the rows. Each residual
/// `z_j` is a multiple `α_j c_j` of its row, so only `α` is stored.
pub fn project_polyhedron(
    c: &DenseMatrix,
    d: &[f64],
    v: &[f64],
    cfg: &DykstraConfig,
) -> Result<Vec<f64>> {
    project_polyhedron_report(c, d, v, cfg).map(|(x, _)| x)
}

pub fn project_polyhedron_report(
    c: &DenseMatrix,
    d: &[f64],
    v: &[f64],
    cfg: &DykstraConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    check_cfg(cfg)?;
    check_len("polyhedron rhs", d.len(), c.rows())?;
    check_len("v", v.len(), c.cols())?;
    let m = c.rows();
    let norms: Vec<f64> = (0..m).map(|j| dot(c.row(j), c.row(j))).collect();
    if norms.contains(&0.0) {
        return Err(Error::DegenerateSet("polyhedron row is zero"));
    }
    let row_inf: Vec<f64> = (0..m).map(|j| norm_inf(c.row(j))).collect();
    let mut x = v.to_vec();
    let mut alpha = vec![0.0; m];
    let mut report = SolverReport::new("project_polyhedron");
    let limit = blowup_limit(v);
    for _ in 0..cfg.max_cycles {
        let mut change = 0.0_f64;
        for j in 0..m {
            let cj = c.row(j);
            // w = x + α_j c_j, new α_j = (c_j' w − d_j)_+ / ‖c_j‖²
            let cw = dot(cj, &x) + alpha[j] * norms[j];
            let a_new = (cw - d[j]).max(0.0) / norms[j];
            let delta = alpha[j] - a_new;
            if delta != 0.0 {
                crate::linalg::axpy(delta, cj, &mut x);
            }
            change = change.max(delta.abs() * row_inf[j]);
            alpha[j] = a_new;
        }
        let zmax = alpha
            .iter()
            .zip(&row_inf)
            .map(|(a, r)| a.abs() * r)
            .fold(0.0, f64::max);
        report.push(change, zmax);
        if zmax > limit {
            return Err(Error::EmptySetSuspected(zmax));
        }
        // relative to the iterate so rounding noise cannot stall the test
        if change <= cfg.tol * (1.0 + norm_inf(&x)) {
            report.status = Status::Converged;
            return Ok((x, report));
        }
    }
    Err(Error::MaxCyclesExceeded {
        solver: "project_polyhedron",
        cycles: cfg.max_cycles,
        last: x,
    })
}

/// Linear constraint blocks `Ax = B`, `Cx ≤ D`, `lo ≤ x ≤ hi`; any block may
/// be absent.
#[derive(Debug, Clone, Default)]
pub struct LinearSet {
    pub eq: Option<(DenseMatrix, Vec<f64>)>,
    pub ineq: Option<(DenseMatrix, Vec<f64>)>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl LinearSet {
    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if let Some((a, b)) = &self.eq {
            check_len("A columns", a.cols(), n)?;
            check_len("B", b.len(), a.rows())?;
        }
        if let Some((c, d)) = &self.ineq {
            check_len("C columns", c.cols(), n)?;
            check_len("D", d.len(), c.rows())?;
        }
        if let Some(lo) = &self.lo {
            check_len("lower bound", lo.len(), n)?;
        }
        if let Some(hi) = &self.hi {
            check_len("upper bound", hi.len(), n)?;
        }
        Ok(())
    }
}

/// Projection onto `{x: Ax = B, Cx ≤ D, lo ≤ x ≤ hi}`: Dykstra over the
/// affine set, the polyhedron (itself projected by [`project_polyhedron`])
/// and the box.
pub fn project_general_linear(set: &LinearSet, v: &[f64], cfg: &DykstraConfig) -> Result<Vec<f64>> {
    let n = v.len();
    set.check(n)?;
    let lo = set.lo.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY; n]);
    let hi = set.hi.clone().unwrap_or_else(|| vec![f64::INFINITY; n]);
    let affine = set.eq.as_ref().map(|(a, b)| (a, b, pseudo_inverse(a)));
    let inner = DykstraConfig {
        tol: (cfg.tol * 1e-3).max(1e-15),
        max_cycles: cfg.max_cycles.max(10_000) * 10,
    };

    let p_affine = |w: &[f64]| -> Result<Vec<f64>> {
        let (a, b, pinv) = affine.as_ref().expect("affine block present");
        let r = crate::linalg::sub(&a.matvec(w), b);
        Ok(crate::linalg::sub(w, &pinv.matvec(&r)))
    };
    let p_poly = |w: &[f64]| -> Result<Vec<f64>> {
        let (c, d) = set.ineq.as_ref().expect("inequality block present");
        project_polyhedron(c, d, w, &inner)
    };
    let p_box = |w: &[f64]| -> Result<Vec<f64>> { truncate(w, &lo, &hi) };

    let mut fns: Vec<&dyn Prox> = Vec::with_capacity(3);
    if affine.is_some() {
        fns.push(&p_affine);
    }
    if set.ineq.is_some() {
        fns.push(&p_poly);
    }
    if set.lo.is_some() || set.hi.is_some() {
        check_bounds_finite(&lo, &hi)?;
        fns.push(&p_box);
    }
    match fns.as_slice() {
        [] => Ok(v.to_vec()),
        [only] => only.prox(v),
        _ => dykstra_cycle(&fns, v, cfg).map(|(x, _)| x),
    }
}

fn check_bounds_finite(lo: &[f64], hi: &[f64]) -> Result<()> {
    match lo.iter().zip(hi).position(|(l, h)| l > h) {
        Some(i) => Err(Error::InvertedBounds(i)),
        None => Ok(()),
    }
}

/// Projection onto `Box[lo, hi] ∩ B₂(c, r)`.
pub fn project_box_ball(
    v: &[f64],
    lo: &[f64],
    hi: &[f64],
    center: &[f64],
    radius: f64,
    cfg: &DykstraConfig,
) -> Result<Vec<f64>> {
    let n = v.len();
    check_len("lower bound", lo.len(), n)?;
    check_len("upper bound", hi.len(), n)?;
    check_len("centre", center.len(), n)?;
    if !(radius > 0.0) {
        return Err(Error::DegenerateSet("ball radius must be positive"));
    }
    let p_box = |w: &[f64]| truncate(w, lo, hi);
    let p_ball = |w: &[f64]| -> Result<Vec<f64>> {
        let d = crate::linalg::sub(w, center);
        let k = radius / radius.max(crate::linalg::norm2(&d));
        Ok(center.iter().zip(&d).map(|(c, x)| c + k * x).collect())
    };
    dykstra_cycle(&[&p_box, &p_ball], v, cfg).map(|(x, _)| x)
}
