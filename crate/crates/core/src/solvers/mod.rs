//! Dense optimization engines: simplex LP, a barrier method for problems
//! with Hermitian PSD blocks, a barrier method for smooth convex programs,
//! and Hermitian eigen utilities.

pub mod conic;
pub mod eig;
pub mod lp;
pub mod smooth;

pub use conic::{solve_conic, ConicProgram, ConicSettings, ConicSolution, LinearForm, ScalarConstraint};
pub use eig::{rank_one_ratio, top_eigpair};
pub use lp::{solve_lp, LinearProgram};
pub use smooth::{solve_smooth, FnSmooth, SmoothConvexProgram, SmoothFunction, SmoothSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Largest constraint violation of `x`.
    pub residual: f64,
    /// Duality gap bound or stationarity residual at exit.
    pub gap: f64,
    pub iterations: usize,
    /// Objective after each outer step.
    pub history: Vec<f64>,
}

impl SolverReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
