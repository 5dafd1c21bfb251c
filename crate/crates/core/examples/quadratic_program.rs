//! A small QP with equality, inequality and box constraints, plus its dual.

use proxport::linalg::DenseMatrix;
use proxport::qp::{qp_dual, qp_solve, QpConfig, QpProblem};

fn main() -> proxport::Result<()> {
    let q = DenseMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 1.5]])?;
    let r = vec![1.0, 0.5, -0.3];
    let p = QpProblem::new(q.clone(), r.clone())
        .with_budget()
        .add_ineq_row(&[1.0, -1.0, 0.0], 0.1)
        .with_bounds(vec![0.0; 3], vec![0.6; 3]);
    let (x, rep) = qp_solve(&p, &QpConfig::default())?;
    println!("x = {x:.6?}, objective {:.8}, violation {:.1e}", p.objective(&x), p.max_violation(&x));
    println!("{}", rep.summary());

    // inequality-only problem and its dual
    let s = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![-1.0, 0.0, 0.0]])?;
    let t = vec![0.5, 0.0];
    let primal = QpProblem::new(q.clone(), r.clone()).with_ineq(s.clone(), t.clone());
    let (xp, _) = qp_solve(&primal, &QpConfig::default().with_eps(1e-12))?;
    let dual = qp_dual(&q, &r, &s, &t)?;
    let (lam, _) = qp_solve(&dual.as_problem(), &QpConfig::default().with_eps(1e-12))?;
    println!("primal {:.10}, dual {:.10}", primal.objective(&xp), dual.primal_value(&lam));
    Ok(())
}
