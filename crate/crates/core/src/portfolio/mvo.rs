//! Mean-variance models: γ-problem, target calibration, benchmark tracking,
//! index sampling, turnover and transaction-cost rebalancing.

use serde::{Deserialize, Serialize};

use super::{gate, AssetUniverse, Constraints, PortfolioWeights};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, sub, DenseMatrix};
use crate::qp::{qp_solve, QpConfig, QpProblem};

fn budget_qp(u: &AssetUniverse, r: Vec<f64>, c: &Constraints) -> Result<QpProblem> {
    check_constraints(c, u.n())?;
    Ok(c.apply(QpProblem::new(u.cov.clone(), r).with_budget()))
}

fn check_constraints(c: &Constraints, n: usize) -> Result<()> {
    if let Some(l) = &c.lower {
        check_len("lower bound", l.len(), n)?;
    }
    if let Some(h) = &c.upper {
        check_len("upper bound", h.len(), n)?;
    }
    if let Some((m, d)) = &c.ineq {
        check_len("C columns", m.cols(), n)?;
        check_len("D", d.len(), m.rows())?;
    }
    Ok(())
}

/// `x*(γ) = argmin ½xᵀΣx − γxᵀμ` s.t. `1ᵀx = 1` and `c`.
pub fn mvo_gamma(u: &AssetUniverse, gamma: f64, c: &Constraints) -> Result<PortfolioWeights> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be non-negative, got {gamma}")));
    }
    let r = u.mu.iter().map(|m| gamma * m).collect();
    let (x, _) = qp_solve(&budget_qp(u, r, c)?, &QpConfig::default())?;
    gate(x, c.is_long_only())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Return(f64),
    Volatility(f64),
}

impl Target {
    fn value(self) -> f64 {
        match self {
            Self::Return(v) | Self::Volatility(v) => v,
        }
    }

    fn measure(self, u: &AssetUniverse, w: &[f64]) -> f64 {
        match self {
            Self::Return(_) => dot(w, &u.mu),
            Self::Volatility(_) => super::stats::volatility(w, &u.cov),
        }
    }
}

const GAMMA_MAX: f64 = 1e6;

/// Calibrates `γ` by bisection so that `μ(x*(γ))` or `σ(x*(γ))` hits the
/// target; both are non-decreasing in `γ`.
pub fn mvo_target(u: &AssetUniverse, target: Target, c: &Constraints) -> Result<PortfolioWeights> {
    let t = target.value();
    let eval = |g: f64| -> Result<(PortfolioWeights, f64)> {
        let w = mvo_gamma(u, g, c)?;
        let m = target.measure(u, &w.w);
        Ok((w, m))
    };
    let (w0, m0) = eval(0.0)?;
    if (m0 - t).abs() <= 1e-9 {
        return Ok(w0);
    }
    if t < m0 {
        return Err(Error::TargetUnreachable(format!("{t} is below the minimum {m0}")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let (w, m) = eval(hi)?;
        if (m - t).abs() <= 1e-9 {
            return Ok(w);
        }
        if m > t {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_MAX {
            return Err(Error::TargetUnreachable(format!("{t} exceeds the attainable {m}")));
        }
    }
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (w, m) = eval(mid)?;
        let gap = m - t;
        best = Some(w);
        if gap.abs() <= 1e-9 || hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        if gap > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    best.ok_or_else(|| Error::TargetUnreachable(format!("{t}")))
}

/// Tracking problem `½(x − b)ᵀΣ(x − b) − γ(x − b)ᵀμ`, solved as the QP with
/// `R = γμ + Σb`.
pub fn mvo_benchmark(u: &AssetUniverse, b: &[f64], gamma: f64, c: &Constraints) -> Result<PortfolioWeights> {
    check_len("benchmark", b.len(), u.n())?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be non-negative, got {gamma}")));
    }
    let sb = u.cov.matvec(b);
    let r = u.mu.iter().zip(&sb).map(|(m, s)| gamma * m + s).collect();
    let (x, _) = qp_solve(&budget_qp(u, r, c)?, &QpConfig::default())?;
    gate(x, c.is_long_only())
}

/// `½(x − b)ᵀΣ(x − b) − γ(x − b)ᵀμ`
pub fn benchmark_objective(u: &AssetUniverse, b: &[f64], gamma: f64, x: &[f64]) -> f64 {
    let d = sub(x, b);
    0.5 * u.cov.quad_form(&d) - gamma * dot(&d, &u.mu)
}

/// Greedy index sampling: solve the long-only tracking QP, drop the asset
/// with the lowest non-zero weight (lowest index on ties) by forcing its
/// upper bound to zero, and repeat until `n_x` assets remain.
pub fn index_sampling(u: &AssetUniverse, b: &[f64], n_x: usize, c: &Constraints) -> Result<PortfolioWeights> {
    let n = u.n();
    check_len("benchmark", b.len(), n)?;
    check_constraints(c, n)?;
    if n_x == 0 || n_x > n {
        return Err(Error::BadK { k: n_x, n });
    }
    let mut lower = c.lower.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut upper = c.upper.clone().unwrap_or_else(|| vec![1.0; n]);
    let r = u.cov.matvec(b);
    let cfg = QpConfig::default();
    loop {
        let p = QpProblem {
            lo: Some(lower.clone()),
            hi: Some(upper.clone()),
            ineq: c.ineq.clone(),
            ..QpProblem::new(u.cov.clone(), r.clone()).with_budget()
        };
        let (mut x, _) = qp_solve(&p, &cfg)?;
        for xi in x.iter_mut() {
            if xi.abs() <= 1e-9 {
                *xi = 0.0;
            }
        }
        let active: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0).collect();
        if active.len() <= n_x {
            return gate(x, true);
        }
        let mut drop = active[0];
        for &i in &active[1..] {
            if x[i] < x[drop] - 1e-12 {
                drop = i;
            }
        }
        lower[drop] = 0.0;
        upper[drop] = 0.0;
    }
}

/// Weights together with the sell and buy legs `x = x̄ + x⁺ − x⁻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebalanced {
    pub weights: PortfolioWeights,
    pub sells: Vec<f64>,
    pub buys: Vec<f64>,
}

/// Builds the augmented `3n` problem over `z = (x, x⁻, x⁺)` with the
/// trade identity `x + x⁻ − x⁺ = x̄`.
fn augmented(u: &AssetUniverse, r_x: &[f64], r_trades: (&[f64], &[f64]), current: &[f64], c: &Constraints) -> Result<QpProblem> {
    let n = u.n();
    check_constraints(c, n)?;
    let m = 3 * n;
    let mut q = DenseMatrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            q.set(i, j, u.cov.get(i, j));
        }
    }
    let mut r = r_x.to_vec();
    r.extend_from_slice(r_trades.0);
    r.extend_from_slice(r_trades.1);
    let mut a = DenseMatrix::zeros(n, m);
    for i in 0..n {
        a.set(i, i, 1.0);
        a.set(i, n + i, 1.0);
        a.set(i, 2 * n + i, -1.0);
    }
    let mut lo = c.lower.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY; n]);
    lo.extend(std::iter::repeat_n(0.0, 2 * n));
    let mut hi = c.upper.clone().unwrap_or_else(|| vec![f64::INFINITY; n]);
    hi.extend(std::iter::repeat_n(f64::INFINITY, 2 * n));
    let mut p = QpProblem::new(q, r).with_eq(a, current.to_vec()).with_bounds(lo, hi);
    if let Some((cm, d)) = &c.ineq {
        let mut wide = DenseMatrix::zeros(cm.rows(), m);
        for i in 0..cm.rows() {
            for j in 0..n {
                wide.set(i, j, cm.get(i, j));
            }
        }
        p = p.with_ineq(wide, d.clone());
    }
    Ok(p)
}

fn split(z: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (z[..n].to_vec(), z[n..2 * n].to_vec(), z[2 * n..].to_vec())
}

/// `min ½xᵀΣx − γxᵀμ` s.t. `1ᵀx = 1`, `Σ|x_i − x̄_i| ≤ TO⁺` and `c`, solved
/// as the augmented QP with `Σ(x⁺_i + x⁻_i) ≤ TO⁺`.
pub fn mvo_turnover(u: &AssetUniverse, gamma: f64, current: &[f64], to_max: f64, c: &Constraints) -> Result<Rebalanced> {
    let n = u.n();
    check_len("current weights", current.len(), n)?;
    if !(to_max >= 0.0) {
        return Err(Error::InvalidInput(format!("turnover cap must be non-negative, got {to_max}")));
    }
    let r_x: Vec<f64> = u.mu.iter().map(|m| gamma * m).collect();
    let zeros = vec![0.0; n];
    let mut budget = vec![1.0; n];
    budget.extend(std::iter::repeat_n(0.0, 2 * n));
    let mut to_row = vec![0.0; n];
    to_row.extend(std::iter::repeat_n(1.0, 2 * n));
    let p = augmented(u, &r_x, (&zeros, &zeros), current, c)?
        .add_eq_row(&budget, 1.0)
        .add_ineq_row(&to_row, to_max);
    let (z, _) = qp_solve(&p, &QpConfig::default())?;
    let (x, _, _) = split(&z, n);
    // net the legs so that one of x⁺_i, x⁻_i is zero
    let sells = x.iter().zip(current).map(|(a, b)| (b - a).max(0.0)).collect();
    let buys = x.iter().zip(current).map(|(a, b)| (a - b).max(0.0)).collect();
    Ok(Rebalanced {
        weights: gate(x, c.is_long_only())?,
        sells,
        buys,
    })
}

/// `min ½xᵀΣx − γxᵀμ + c⁻ᵀx⁻ + c⁺ᵀx⁺` s.t. the financing identity
/// `1ᵀx + c⁻ᵀx⁻ + c⁺ᵀx⁺ = 1` and `c`. The weights are not rescaled: they
/// sum to one minus the costs paid.
pub fn mvo_costs(
    u: &AssetUniverse,
    gamma: f64,
    current: &[f64],
    c_minus: &[f64],
    c_plus: &[f64],
    c: &Constraints,
) -> Result<Rebalanced> {
    let n = u.n();
    check_len("current weights", current.len(), n)?;
    check_len("sell costs", c_minus.len(), n)?;
    check_len("buy costs", c_plus.len(), n)?;
    if c_minus.iter().chain(c_plus).any(|&x| !(x >= 0.0)) {
        return Err(Error::NegativeCost);
    }
    let r_x: Vec<f64> = u.mu.iter().map(|m| gamma * m).collect();
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let mut financing = vec![1.0; n];
    financing.extend_from_slice(c_minus);
    financing.extend_from_slice(c_plus);
    let p = augmented(u, &r_x, (&neg(c_minus), &neg(c_plus)), current, c)?.add_eq_row(&financing, 1.0);
    let (z, _) = qp_solve(&p, &QpConfig::default())?;
    let (mut x, mut sells, mut buys) = split(&z, n);
    for i in 0..n {
        // with zero round-trip cost the legs are not pinned down
        if c_minus[i] + c_plus[i] == 0.0 {
            let d = buys[i] - sells[i];
            buys[i] = d.max(0.0);
            sells[i] = (-d).max(0.0);
        }
    }
    if c.is_long_only() {
        if let Some(i) = x.iter().position(|&v| v < -1e-6) {
            return Err(Error::InfeasibleSuspected(format!("weight {i} is {:e}", x[i])));
        }
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(Rebalanced {
        weights: PortfolioWeights { w: x },
        sells,
        buys,
    })
}

/// `½xᵀΣx − γxᵀμ + c⁻ᵀx⁻ + c⁺ᵀx⁺`
pub fn cost_objective(u: &AssetUniverse, gamma: f64, r: &Rebalanced, c_minus: &[f64], c_plus: &[f64]) -> f64 {
    let x = &r.weights.w;
    0.5 * u.cov.quad_form(x) - gamma * dot(x, &u.mu) + dot(&r.sells, c_minus) + dot(&r.buys, c_plus)
}
