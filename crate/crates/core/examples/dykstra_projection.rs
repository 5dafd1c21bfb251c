//! Projection onto an intersection of convex sets with Dykstra.

use proxport::dykstra::{dykstra_cycle, project_polyhedron, DykstraConfig};
use proxport::linalg::DenseMatrix;
use proxport::prox::{ConvexSet, Norm, Prox, ProxOp};

fn main() -> proxport::Result<()> {
    // {Σx ≤ ½, Σ e^{−i} x_i ≥ 0} with v_i = ln(1 + i²)
    let n = 10;
    let mut c = DenseMatrix::zeros(2, n);
    for j in 0..n {
        c.set(0, j, 1.0);
        c.set(1, j, -(-((j + 1) as f64)).exp());
    }
    let v: Vec<f64> = (1..=n).map(|i| (1.0 + (i * i) as f64).ln()).collect();
    let x = project_polyhedron(&c, &[0.5, 0.0], &v, &DykstraConfig::default())?;
    println!("polyhedron projection: {x:.4?}");
    println!("Σx = {:.6}", x.iter().sum::<f64>());

    // simplex ∩ ℓ2 ball around equal weights
    let simplex = ProxOp::Project(ConvexSet::Simplex);
    let ball = ProxOp::Project(ConvexSet::ball(Norm::L2, vec![0.25; 4], 0.2)?);
    let sets: [&dyn Prox; 2] = [&simplex, &ball];
    let (y, rep) = dykstra_cycle(&sets, &[0.9, 0.3, -0.1, 0.0], &DykstraConfig::default())?;
    println!("simplex ∩ ball: {y:.4?} ({})", rep.summary());
    Ok(())
}
