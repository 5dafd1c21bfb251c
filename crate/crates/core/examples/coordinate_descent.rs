//! Cyclical coordinate descent on the 5×5 box QP and on the ERC problem.

use proxport::cd::{ccd_erc, ccd_qp_box, erc_default_lambda, CdConfig};
use proxport::fixtures::{box_qp_example, parameter_set_1};

fn main() -> proxport::Result<()> {
    let (q, r, lo, hi) = box_qp_example();
    let cfg = CdConfig::default().with_tol(1e-8);
    for x0 in [0.0, 1.0] {
        let (x, rep) = ccd_qp_box(&q, &r, &lo, &hi, &[x0; 5], &cfg)?;
        println!("box QP from x₀ = {x0}: {x:.4?} after {} cycles", rep.iterations);
    }

    let u = parameter_set_1().universe;
    let x0 = vec![0.125; 8];
    let lambda = erc_default_lambda(&u.cov, &x0);
    let (y, rep) = ccd_erc(&u.cov, lambda, &x0, &cfg)?;
    let s: f64 = y.iter().sum();
    let w: Vec<f64> = y.iter().map(|v| 100.0 * v / s).collect();
    println!("ERC weights (%): {w:.2?} after {} cycles", rep.iterations);
    Ok(())
}
