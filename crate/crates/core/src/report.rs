//! Iteration records shared by every solver.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIter,
}

/// What a solver did: iteration (or cycle) count, residual traces and final
/// status. Traces hold one entry per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: String,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub primal_trace: Vec<f64>,
    pub dual_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
    /// Optional per-iteration iterates (only filled when requested).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub path: Vec<Vec<f64>>,
    pub status: Status,
}

impl SolverReport {
    pub fn new(solver: &str) -> Self {
        Self {
            solver: solver.to_string(),
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            primal_trace: Vec::new(),
            dual_trace: Vec::new(),
            objective_trace: Vec::new(),
            path: Vec::new(),
            status: Status::MaxIter,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub(crate) fn push(&mut self, primal: f64, dual: f64) {
        self.iterations += 1;
        self.primal_residual = primal;
        self.dual_residual = dual;
        self.primal_trace.push(primal);
        self.dual_trace.push(dual);
    }

    /// One-line summary for logs and the CLI.
    pub fn summary(&self) -> String {
        format!(
            "{}: {:?} after {} iterations (primal {:.3e}, dual {:.3e})",
            self.solver, self.status, self.iterations, self.primal_residual, self.dual_residual
        )
    }
}
