//! The robo-advisor problem solved by both formulations.

use proxport::fixtures::parameter_set_1;
use proxport::portfolio::{robo_cross_check, RoboConfig};

fn main() -> proxport::Result<()> {
    let u = parameter_set_1().universe;
    let mu = vec![0.05, 0.06, 0.07, 0.06, 0.08, 0.04, 0.03, 0.09];
    let u = u.with_mu(mu)?;
    let n = u.n();
    let mut cfg = RoboConfig::new(n);
    cfg.gamma = 0.2;
    cfg.rho1 = 0.001;
    cfg.rho2 = 0.01;
    cfg.lambda = 0.0005;
    let (a, b, gap) = robo_cross_check(&u, &cfg)?;
    println!("ADMM-QP:  {:.4?}", a.w);
    println!("ADMM-CCD: {:.4?}", b.w);
    println!("gap {gap:.2e}");
    Ok(())
}
