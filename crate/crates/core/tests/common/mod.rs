#![allow(dead_code)]
//! Property checkers shared by the proptest suites and the acceptance
//! binary. Inputs come from proptest strategies or from a seeded RNG.

use proxport::fixtures::parameter_set_1;
use proxport::linalg::{dot, norm2, sub, DenseMatrix};
use proxport::numerics::{lambert_w, lambert_w_exp};
use proxport::portfolio::stats::{risk_contributions, risk_measure};
use proxport::portfolio::{robo_cross_check, AssetUniverse, RiskMeasure, RoboConfig};
use proxport::prox::{project, prox_lp_norm, ConvexSet, Norm, Prox, ProxOp};
use proxport::qp::{qp_dual, qp_solve, QpConfig, QpProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 6;

fn spd(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DenseMatrix::new(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    a.transpose().matmul(&a).unwrap().add_diag(0.5)
}

/// Every convex operator in the catalogue, with fixed parameters in
/// dimension [`DIM`]. Ball complements are not convex and are left out.
pub fn convex_catalogue() -> Vec<(&'static str, ProxOp)> {
    let n = DIM;
    let center: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.2).collect();
    let reference: Vec<f64> = (0..n).map(|i| 0.05 + 0.03 * i as f64).collect();
    let mut poly = DenseMatrix::zeros(3, n);
    for j in 0..n {
        poly.set(0, j, 1.0);
        poly.set(1, j, (-(j as f64 + 1.0)).exp());
        poly.set(2, j, if j % 2 == 0 { 1.0 } else { -0.5 });
    }
    let mut aff = DenseMatrix::zeros(2, n);
    for j in 0..n {
        aff.set(0, j, 1.0);
        aff.set(1, j, j as f64 - 2.0);
    }
    vec![
        ("soft_threshold", ProxOp::soft_threshold(0.7).unwrap()),
        (
            "soft_threshold_two_sided",
            ProxOp::TwoSided {
                lambda_minus: vec![0.3; n],
                lambda_plus: (0..n).map(|i| 0.1 * i as f64).collect(),
            },
        ),
        (
            "truncate",
            ProxOp::Truncate {
                lo: vec![-1.0; n],
                hi: vec![0.5; n],
            },
        ),
        ("max", ProxOp::Max { lambda: 0.8 }),
        ("l1_norm", ProxOp::LpNorm { p: Norm::L1, lambda: 0.5 }),
        ("l2_norm", ProxOp::LpNorm { p: Norm::L2, lambda: 0.9 }),
        ("linf_norm", ProxOp::LpNorm { p: Norm::Inf, lambda: 1.3 }),
        ("log_barrier", ProxOp::log_barrier(0.3, reference.clone()).unwrap()),
        ("quadratic", ProxOp::quadratic(&spd(n, 3), center.clone()).unwrap()),
        (
            "kl",
            ProxOp::Kl {
                lambda: 0.4,
                reference: reference.clone(),
            },
        ),
        (
            "bid_ask",
            ProxOp::BidAsk {
                lambda: 0.5,
                alpha: vec![0.2; n],
                beta: vec![0.4; n],
                gamma: center.clone(),
            },
        ),
        ("sum_k_largest", ProxOp::SumKLargest { lambda: 0.6, k: 2 }),
        (
            "scale_translate",
            ProxOp::ScaleTranslate {
                base: Box::new(ProxOp::soft_threshold(4.0 * 0.5).unwrap()),
                a: 2.0,
                b: center.clone(),
            },
        ),
        (
            "hyperplane",
            ProxOp::Project(ConvexSet::hyperplane(reference.clone(), 0.3).unwrap()),
        ),
        (
            "halfspace",
            ProxOp::Project(ConvexSet::halfspace(center.iter().map(|c| c + 0.5).collect(), 0.1).unwrap()),
        ),
        ("affine", ProxOp::Project(ConvexSet::affine(aff, vec![1.0, 0.5]).unwrap())),
        (
            "box",
            ProxOp::Project(ConvexSet::boxed(vec![-0.5; n], vec![0.8; n]).unwrap()),
        ),
        (
            "l1_ball",
            ProxOp::Project(ConvexSet::ball(Norm::L1, center.clone(), 1.5).unwrap()),
        ),
        (
            "l2_ball",
            ProxOp::Project(ConvexSet::ball(Norm::L2, center.clone(), 1.2).unwrap()),
        ),
        (
            "linf_ball",
            ProxOp::Project(ConvexSet::ball(Norm::Inf, center.clone(), 0.7).unwrap()),
        ),
        ("simplex", ProxOp::Project(ConvexSet::Simplex)),
        (
            "polyhedron",
            ProxOp::Project(ConvexSet::polyhedron(poly, vec![0.5, 0.0, 0.4]).unwrap()),
        ),
        ("ellipsoid", ProxOp::Project(ConvexSet::ellipsoid(&spd(n, 7), 0.8).unwrap())),
        ("entropy_floor", ProxOp::Project(ConvexSet::entropy_floor(1.2).unwrap())),
    ]
}

/// Tolerance for firm non-expansiveness, scaled with the step.
pub const FNE_TOL: f64 = 1e-9;

/// `‖P(x) − P(y)‖² ≤ ⟨P(x) − P(y), x − y⟩`.
pub fn check_firmly_nonexpansive(op: &ProxOp, x: &[f64], y: &[f64]) -> Result<(), String> {
    let px = op.prox(x).map_err(|e| e.to_string())?;
    let py = op.prox(y).map_err(|e| e.to_string())?;
    let d = sub(&px, &py);
    let lhs = dot(&d, &d);
    let rhs = dot(&d, &sub(x, y));
    let scale = 1.0 + dot(&sub(x, y), &sub(x, y));
    if lhs <= rhs + FNE_TOL * scale {
        Ok(())
    } else {
        Err(format!("{}: ‖Δp‖² = {lhs:e} > ⟨Δp, Δv⟩ = {rhs:e}", op.name()))
    }
}

/// `P(P(x)) = P(x)` for projections.
pub fn check_idempotent(op: &ProxOp, x: &[f64]) -> Result<(), String> {
    let p = op.prox(x).map_err(|e| e.to_string())?;
    let pp = op.prox(&p).map_err(|e| e.to_string())?;
    let gap = proxport::linalg::max_abs_diff(&p, &pp);
    if gap <= 1e-9 * (1.0 + norm2(&p)) {
        Ok(())
    } else {
        Err(format!("{}: ‖P(P(x)) − P(x)‖∞ = {gap:e}", op.name()))
    }
}

pub fn is_projection(op: &ProxOp) -> bool {
    matches!(op, ProxOp::Project(_) | ProxOp::Truncate { .. })
}

/// Dual norm pairs `(p, q)`.
pub const MOREAU_PAIRS: [(Norm, Norm); 3] = [(Norm::L1, Norm::Inf), (Norm::L2, Norm::L2), (Norm::Inf, Norm::L1)];

/// `prox_{λ‖·‖_p}(v) + λ P_{B_q}(v/λ) − v`, sup norm.
pub fn moreau_residual(p: Norm, q: Norm, v: &[f64], lambda: f64) -> f64 {
    let a = prox_lp_norm(p, v, lambda).unwrap();
    let ball = ConvexSet::ball(q, vec![0.0; v.len()], 1.0).unwrap();
    let scaled: Vec<f64> = v.iter().map(|x| x / lambda).collect();
    let b = project(&ball, &scaled).unwrap();
    a.iter()
        .zip(&b)
        .zip(v)
        .map(|((a, b), v)| (a + lambda * b - v).abs())
        .fold(0.0, f64::max)
}

/// `|W(x) e^{W(x)} − x| / max(1, |x|)`.
pub fn lambert_residual(x: f64) -> f64 {
    let w = lambert_w(x).unwrap();
    (w * w.exp() - x).abs() / x.abs().max(1.0)
}

/// `|W + ln W − l| / max(1, |l|)` for `W = W(e^l)`.
pub fn lambert_exp_residual(l: f64) -> f64 {
    let w = lambert_w_exp(l);
    (w + w.ln() - l).abs() / l.abs().max(1.0)
}

/// Grid over `[−1/e, 1e6]`.
pub fn lambert_grid() -> Vec<f64> {
    let e_inv = (-1.0f64).exp();
    let mut g: Vec<f64> = (0..=1000).map(|i| -e_inv + (1.0 + e_inv) * i as f64 / 1000.0).collect();
    g.extend((0..=600).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 600.0)));
    g
}

pub fn lambert_exp_grid() -> Vec<f64> {
    (0..=2000).map(|i| -20.0 + 1020.0 * i as f64 / 2000.0).collect()
}

/// `|Σ RC_i − ℛ(x)|`.
pub fn euler_residual(u: &AssetUniverse, w: &[f64], m: RiskMeasure) -> f64 {
    let rc = risk_contributions(w, u, m);
    (rc.iter().sum::<f64>() - risk_measure(w, u, m)).abs()
}

/// Set #1 with expected returns drawn from the seed.
pub fn universe_with_returns(seed: u64) -> AssetUniverse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = parameter_set_1().universe;
    let mu: Vec<f64> = (0..u.n()).map(|_| rng.random_range(0.0..0.1)).collect();
    u.with_mu(mu).unwrap()
}

fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// A random robo-advisor configuration on set #1.
pub fn random_robo_config(seed: u64) -> (AssetUniverse, RoboConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = universe_with_returns(seed ^ 0x5eed);
    let n = u.n();
    let mut cfg = RoboConfig::new(n);
    cfg.benchmark = simplex_point(&mut rng, n);
    cfg.current = simplex_point(&mut rng, n);
    cfg.reference = simplex_point(&mut rng, n);
    cfg.gamma = rng.random_range(0.0..0.5);
    cfg.rho1 = rng.random_range(0.0..0.005);
    cfg.rho2 = rng.random_range(0.0..0.05);
    cfg.rho1_ref = rng.random_range(0.0..0.005);
    cfg.rho2_ref = rng.random_range(0.0..0.05);
    cfg.lambda = rng.random_range(0.0..0.002);
    cfg.gamma1 = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    cfg.rb = simplex_point(&mut rng, n);
    (u, cfg)
}

/// Gap between the two robo-advisor formulations.
pub fn robo_gap(seed: u64) -> Result<f64, String> {
    let (u, cfg) = random_robo_config(seed);
    robo_cross_check(&u, &cfg).map(|(_, _, g)| g).map_err(|e| e.to_string())
}

/// A random strictly convex QP `min ½xᵀQx − xᵀR` s.t. `Sx ≤ T` with `0`
/// strictly feasible.
pub fn random_qp(seed: u64) -> (DenseMatrix, Vec<f64>, DenseMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..9);
    let m = rng.random_range(1..7);
    let q = spd(n, seed.wrapping_mul(31).wrapping_add(1));
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let s = DenseMatrix::new(m, n, (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let t: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    (q, r, s, t)
}

/// `|primal optimum − dual-implied optimum|` for [`random_qp`].
pub fn qp_duality_gap(seed: u64) -> Result<f64, String> {
    let (q, r, s, t) = random_qp(seed);
    let primal = QpProblem::new(q.clone(), r.clone()).with_ineq(s.clone(), t.clone());
    let cfg = QpConfig::default().with_eps(1e-12);
    let (x, _) = qp_solve(&primal, &cfg).map_err(|e| e.to_string())?;
    let dual = qp_dual(&q, &r, &s, &t).map_err(|e| e.to_string())?;
    let (lam, _) = qp_solve(&dual.as_problem(), &cfg).map_err(|e| e.to_string())?;
    Ok((primal.objective(&x) - dual.primal_value(&lam)).abs())
}

/// Lasso through the augmented QP in `(β⁺, β⁻) ≥ 0`:
/// `Q = [[G, −G], [−G, G]]`, `R = [Xᵀy − λ; −Xᵀy − λ]`, `G = XᵀX`.
pub fn lasso_by_qp(x: &DenseMatrix, y: &[f64], lambda: f64, eps: f64) -> Result<Vec<f64>, String> {
    let p = x.cols();
    let g = x.gram();
    let xty = x.tr_matvec(y);
    let mut q = DenseMatrix::zeros(2 * p, 2 * p);
    for i in 0..p {
        for j in 0..p {
            let v = g.get(i, j);
            q.set(i, j, v);
            q.set(i + p, j + p, v);
            q.set(i, j + p, -v);
            q.set(i + p, j, -v);
        }
    }
    let mut r: Vec<f64> = xty.iter().map(|v| v - lambda).collect();
    r.extend(xty.iter().map(|v| -v - lambda));
    let problem = QpProblem::new(q, r).with_lower(vec![0.0; 2 * p]);
    let (z, _) = qp_solve(&problem, &QpConfig::default().with_eps(eps)).map_err(|e| e.to_string())?;
    Ok((0..p).map(|j| z[j] - z[j + p]).collect())
}

/// `Ω = {Σx_i ≤ ½, Σ e^{−i} x_i ≥ 0}` as `Cx ≤ D`, and `v_i = ln(1 + i²)`.
pub fn polyhedron_example(n: usize) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let mut c = DenseMatrix::zeros(2, n);
    for j in 0..n {
        let i = (j + 1) as f64;
        c.set(0, j, 1.0);
        c.set(1, j, -(-i).exp());
    }
    let v: Vec<f64> = (1..=n).map(|i| (1.0 + (i * i) as f64).ln()).collect();
    (c, vec![0.5, 0.0], v)
}

/// Closed-form projection onto `{x: Cx ≤ D}` with two rows, by
/// enumerating the four active sets and keeping the feasible KKT point
/// with non-negative multipliers.
pub fn project_two_rows(c: &DenseMatrix, d: &[f64], v: &[f64]) -> Vec<f64> {
    let rows = [c.row(0), c.row(1)];
    let feasible = |x: &[f64]| rows.iter().zip(d).all(|(r, di)| dot(r, x) <= di + 1e-9 * (1.0 + di.abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| {
        if feasible(&x) {
            let dist = dot(&sub(&x, v), &sub(&x, v));
            if best.as_ref().is_none_or(|(b, _)| dist < *b) {
                best = Some((dist, x));
            }
        }
    };
    consider(v.to_vec());
    for k in 0..2 {
        let a = rows[k];
        let t = (dot(a, v) - d[k]) / dot(a, a);
        if t >= 0.0 {
            consider(v.iter().zip(a).map(|(vi, ai)| vi - t * ai).collect());
        }
    }
    // both active: solve the 2×2 Gram system for the multipliers
    let g = [
        [dot(rows[0], rows[0]), dot(rows[0], rows[1])],
        [dot(rows[1], rows[0]), dot(rows[1], rows[1])],
    ];
    let b = [dot(rows[0], v) - d[0], dot(rows[1], v) - d[1]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.abs() > 0.0 {
        let l0 = (b[0] * g[1][1] - b[1] * g[0][1]) / det;
        let l1 = (g[0][0] * b[1] - g[1][0] * b[0]) / det;
        if l0 >= 0.0 && l1 >= 0.0 {
            consider(
                v.iter()
                    .zip(rows[0].iter().zip(rows[1]))
                    .map(|(vi, (a0, a1))| vi - l0 * a0 - l1 * a1)
                    .collect(),
            );
        }
    }
    best.expect("the projection exists").1
}
