mod common;

use proxport::fixtures::{parameter_set_1, parameter_set_2_table5};
use proxport::portfolio::risk::mdp_objective;
use proxport::portfolio::stats::{diversification_ratio, effective_bets, risk_contributions};
use proxport::portfolio::{
    erc, gmv_diversified, gmv_herfindahl, kl_portfolio, mdp, risk_budgeting, robo_cross_check, rqe_portfolio,
    Constraints, DiversificationConstraint, GmvMethod, RbEngine, RiskMeasure, RoboConfig,
};
use proxport::portfolio::AssetUniverse;
use proxport::portfolio::gmv::gmv_ridge;
use proxport::DenseMatrix;
use proptest::prelude::*;

fn assert_pct(got: &[f64], want: &[f64], tol: f64) {
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((100.0 * g - w).abs() <= tol, "asset {i}: {} vs {w}", 100.0 * g);
    }
}

#[test]
fn erc_set1() {
    let u = parameter_set_1().universe;
    let w = erc(&u).unwrap();
    assert_pct(w.as_slice(), &[11.40, 12.29, 5.49, 11.91, 6.65, 10.81, 33.52, 7.93], 0.006);
    let rc = risk_contributions(w.as_slice(), &u, RiskMeasure::Volatility);
    let m = rc.iter().sum::<f64>() / 8.0;
    assert!(rc.iter().all(|r| (r - m).abs() < 1e-9));
}

#[test]
fn gmv_n5_bisection_and_admm() {
    let u = parameter_set_1().universe;
    let want = [15.18, 16.19, 0.0, 17.21, 0.71, 13.68, 31.52, 5.51];
    let (w, lam) = gmv_herfindahl(&u, None, 5.0, GmvMethod::LambdaBisection).unwrap();
    assert_pct(w.as_slice(), &want, 0.006);
    assert!((100.0 * lam.unwrap() - 10.38).abs() < 0.006);
    let (a, _) = gmv_herfindahl(&u, None, 5.0, GmvMethod::Admm).unwrap();
    assert_pct(a.as_slice(), &want, 0.006);
    assert!((effective_bets(a.as_slice()) - 5.0).abs() < 1e-6);
}

#[test]
fn gmv_benchmark_diversification() {
    let u = parameter_set_1().universe;
    let (w, _) = gmv_herfindahl(&u, None, 6.435, GmvMethod::LambdaBisection).unwrap();
    assert_pct(w.as_slice(), &[14.74, 15.45, 1.79, 15.49, 6.17, 13.83, 23.21, 9.31], 0.006);
}

#[test]
fn gmv_entropy_floor() {
    let u = parameter_set_1().universe;
    let w = gmv_diversified(&u, None, DiversificationConstraint::ShannonEntropyFloor(1.8)).unwrap();
    let h: f64 = w.as_slice().iter().filter(|&&x| x > 0.0).map(|x| -x * x.ln()).sum();
    assert!(h >= 1.8 - 1e-6, "entropy {h}");
}

#[test]
fn mdp_table5() {
    let u = parameter_set_2_table5().universe;
    let ls = mdp(&u, false, DiversificationConstraint::None).unwrap();
    assert_pct(ls.as_slice(), &[41.81, 51.88, 8.20, -0.43, -0.26, -0.38, -0.51, -0.31], 0.006);
    let lo = mdp(&u, true, DiversificationConstraint::None).unwrap();
    assert_pct(lo.as_slice(), &[41.04, 50.92, 8.05, 0.0, 0.0, 0.0, 0.0, 0.0], 0.006);
    let d6 = mdp(&u, true, DiversificationConstraint::EffectiveBets(6.0)).unwrap();
    assert_pct(d6.as_slice(), &[22.44, 26.12, 12.80, 8.90, 5.02, 8.02, 10.44, 6.27], 0.006);
    assert!(diversification_ratio(ls.as_slice(), &u) >= diversification_ratio(lo.as_slice(), &u) - 1e-9);
    assert!(mdp_objective(&u, d6.as_slice()).is_finite());
}

#[test]
fn rb_engines_agree() {
    let u = parameter_set_1().universe;
    let rb = [0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
    let a = risk_budgeting(&u, &rb, RiskMeasure::Volatility, RbEngine::Ccd).unwrap();
    let b = risk_budgeting(&u, &rb, RiskMeasure::Volatility, RbEngine::Admm).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((x - y).abs() < 1e-6);
    }
    let m = RiskMeasure::StdevBased { xi: 2.0 };
    let c = risk_budgeting(&u, &rb, m, RbEngine::Ccd).unwrap();
    let d = risk_budgeting(&u, &rb, m, RbEngine::Admm).unwrap();
    for (x, y) in c.as_slice().iter().zip(d.as_slice()) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn two_asset_rb_closed_form() {
    let cov = DenseMatrix::diag(&[0.04, 0.09]);
    let u = AssetUniverse::without_returns(2, cov).unwrap();
    let w = risk_budgeting(&u, &[0.7, 0.3], RiskMeasure::Volatility, RbEngine::Ccd).unwrap();
    let raw = [0.7f64.sqrt() / 0.2, 0.3f64.sqrt() / 0.3];
    let s = raw[0] + raw[1];
    assert!((w.as_slice()[0] - raw[0] / s).abs() < 1e-9);
}

#[test]
fn kl_and_rqe_run() {
    let u = parameter_set_1().universe;
    let b = parameter_set_1().benchmark.unwrap();
    let w = kl_portfolio(&u, &b, f64::NEG_INFINITY, 0.15).unwrap();
    assert!(proxport::portfolio::stats::volatility(w.as_slice(), &u.cov) <= 0.15 + 1e-6);
    let n = u.n();
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d.set(i, j, 1.0 - u.rho.get(i, j));
        }
    }
    let r = rqe_portfolio(&d, &Constraints::none()).unwrap();
    assert!(r.is_budgeted() && r.is_long_only());
}

#[test]
fn robo_formulations_agree() {
    let u = parameter_set_1().universe;
    let mut cfg = RoboConfig::new(8);
    cfg.benchmark = parameter_set_1().benchmark.unwrap();
    cfg.rho1 = 0.002;
    cfg.rho2 = 0.01;
    cfg.lambda = 0.001;
    let (a, b, gap) = robo_cross_check(&u, &cfg).unwrap();
    assert!(gap < 1e-4, "gap {gap}: {:?} vs {:?}", a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn euler_decomposition(raw in prop::collection::vec(0.01f64..1.0, 8), seed in 0u64..1000, xi in 0.0f64..3.0) {
        let u = common::universe_with_returns(seed);
        let s: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        for m in [RiskMeasure::Volatility, RiskMeasure::StdevBased { xi }] {
            let r = common::euler_residual(&u, &w, m);
            prop_assert!(r <= 1e-10, "{m:?}: {r:e}");
        }
    }
}

#[test]
fn robo_formulations_agree_over_seeds() {
    for seed in 0..20 {
        let gap = common::robo_gap(seed).unwrap();
        assert!(gap <= 1e-4, "seed {seed}: gap {gap:e}");
    }
}

#[test]
fn erc_is_scale_invariant() {
    let u = parameter_set_1().universe;
    let a = erc(&u).unwrap();
    for c in [0.01, 3.0, 250.0] {
        let b = erc(&u.scaled(c).unwrap()).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-8, "c = {c}");
        }
    }
}

#[test]
fn effective_bets_grow_with_ridge() {
    let u = parameter_set_1().universe;
    let upper = vec![1.0; 8];
    let mut last = 0.0;
    for lam in [0.0, 0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 10.0] {
        let w = gmv_ridge(&u, &upper, lam).unwrap();
        let nb = effective_bets(&w);
        assert!(nb >= last - 1e-8, "λ = {lam}: {nb} < {last}");
        last = nb;
    }
    assert!(last > 7.9);
}

#[test]
fn mdp_ratio_dominates_other_portfolios() {
    let u = parameter_set_1().universe;
    let best = mdp(&u, true, DiversificationConstraint::None).unwrap();
    let dr = diversification_ratio(best.as_slice(), &u);
    let others = [
        erc(&u).unwrap().as_slice().to_vec(),
        vec![0.125; 8],
        gmv_herfindahl(&u, None, 5.0, GmvMethod::LambdaBisection).unwrap().0.as_slice().to_vec(),
    ];
    for w in others {
        assert!(dr >= diversification_ratio(&w, &u) - 1e-9);
    }
}
