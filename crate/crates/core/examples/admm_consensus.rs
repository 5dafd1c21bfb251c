//! A generic ADMM split: non-negative least squares as `f_x + f_y` with
//! `f_y` the indicator of the positive orthant.

use proxport::admm::{admm_solve, AdmmConfig, AdmmProblem, ShiftedFactor};
use proxport::linalg::DenseMatrix;

fn main() -> proxport::Result<()> {
    let a = DenseMatrix::from_rows(&[
        vec![1.0, 0.2, 0.0],
        vec![0.3, 1.0, 0.5],
        vec![0.0, 0.4, 1.0],
        vec![0.5, 0.0, 0.2],
    ])?;
    let b = [1.0, -2.0, 0.5, 0.3];
    let atb = a.tr_matvec(&b);
    let mut factor = ShiftedFactor::new(a.gram());
    let mut problem = AdmmProblem::consensus(
        move |v, phi| {
            let rhs: Vec<f64> = atb.iter().zip(v).map(|(g, x)| g + phi * x).collect();
            factor.solve(phi, &rhs)
        },
        |v, _| Ok(v.iter().map(|x| x.max(0.0)).collect()),
    );
    let cfg = AdmmConfig::default().with_eps(1e-10).adaptive(true);
    let out = admm_solve(&mut problem, &[0.0; 3], &[0.0; 3], &cfg)?;
    println!("x = {:.6?} ({})", out.y, out.report.summary());
    Ok(())
}
