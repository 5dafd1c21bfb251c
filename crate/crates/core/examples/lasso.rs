//! Lasso on the synthetic fixture: coordinate descent against ADMM.

use proxport::admm::{admm_lasso_lambda, AdmmConfig};
use proxport::cd::{cd_lasso, CdConfig};
use proxport::fixtures::lasso_synthetic;
use proxport::linalg::max_abs_diff;

fn main() -> proxport::Result<()> {
    let data = lasso_synthetic(2000, 20, 42)?;
    let lambda = 200.0;
    let (cd, cd_rep) = cd_lasso(&data.x, &data.y, lambda, &[0.0; 20], &CdConfig::default().with_tol(1e-12))?;
    let (admm, admm_rep) = admm_lasso_lambda(&data.x, &data.y, lambda, None, &AdmmConfig::default().with_phi(lambda).with_eps(1e-10))?;
    println!("CD:   {}", cd_rep.summary());
    println!("ADMM: {}", admm_rep.summary());
    println!("non-zero coefficients: {}", cd.iter().filter(|b| **b != 0.0).count());
    println!("max |Δβ| = {:.2e}", max_abs_diff(&cd, &admm));
    Ok(())
}
