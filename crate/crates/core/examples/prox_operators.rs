//! Closed-form proximal operators and projections.

use proxport::numerics::lambert_w;
use proxport::prox::{project, soft_threshold, ConvexSet, Norm, Prox, ProxOp};

fn main() -> proxport::Result<()> {
    let v = [3.0, -0.5, 1.2, -2.0];
    println!("soft threshold (λ = 1): {:?}", soft_threshold(&v, 1.0)?);

    let ball = ConvexSet::ball(Norm::L1, vec![0.0; 4], 2.0)?;
    println!("projection onto B₁(0, 2): {:?}", project(&ball, &v)?);

    println!("projection onto the simplex: {:?}", project(&ConvexSet::Simplex, &v)?);

    let kl = ProxOp::Kl {
        lambda: 0.5,
        reference: vec![0.25; 4],
    };
    println!("KL prox (λ = 0.5): {:?}", kl.prox(&v)?);

    let top2 = ProxOp::SumKLargest { lambda: 1.0, k: 2 };
    println!("prox of the sum of the 2 largest: {:?}", top2.prox(&v)?);

    println!("Lambert W(1) = {:.15}", lambert_w(1.0)?);
    Ok(())
}
