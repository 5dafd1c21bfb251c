//! Risk-based allocations on the bundled parameter sets.

use proxport::fixtures::{parameter_set_1, parameter_set_2_table5};
use proxport::portfolio::stats::{diversification_ratio, effective_bets};
use proxport::portfolio::{
    erc, gmv_herfindahl, kl_portfolio, mdp, risk_budgeting, DiversificationConstraint, GmvMethod, RbEngine,
    RiskMeasure,
};

fn pct(w: &[f64]) -> Vec<String> {
    w.iter().map(|x| format!("{:.2}", 100.0 * x)).collect()
}

fn main() -> proxport::Result<()> {
    let set1 = parameter_set_1();
    let u = &set1.universe;

    let w = erc(u)?;
    println!("ERC: {:?}", pct(&w.w));

    let rb = [0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
    let w = risk_budgeting(u, &rb, RiskMeasure::Volatility, RbEngine::Ccd)?;
    println!("RB:  {:?}", pct(&w.w));

    for n_min in [3.0, 5.0, 6.435] {
        let (w, lam) = gmv_herfindahl(u, None, n_min, GmvMethod::LambdaBisection)?;
        println!(
            "GMV N ≥ {n_min}: {:?}, λ* = {:.2}%, N = {:.3}",
            pct(&w.w),
            100.0 * lam.unwrap_or(f64::NAN),
            effective_bets(&w.w)
        );
    }

    if let Some(b) = &set1.benchmark {
        let w = kl_portfolio(u, b, f64::NEG_INFINITY, 0.12)?;
        println!("KL towards the benchmark, σ ≤ 12%: {:?}", pct(&w.w));
    }

    let u2 = parameter_set_2_table5().universe;
    for (label, d) in [
        ("MDP", DiversificationConstraint::None),
        ("MDP N ≥ 5", DiversificationConstraint::EffectiveBets(5.0)),
    ] {
        let w = mdp(&u2, true, d)?;
        println!("{label}: {:?}, DR = {:.4}", pct(&w.w), diversification_ratio(&w.w, &u2));
    }
    Ok(())
}
