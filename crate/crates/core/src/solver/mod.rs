//! Continuation of arbitrary initial functions by the method of steps.

mod high_order;
mod initial;
mod steps;

pub use high_order::{continue_high_order, HighOrderFDE, HighOrderSolution, HighOrderTerm};
pub use initial::{InitialFunction, Interp, JOINT_TOL};
pub use steps::{
    continue_solution, continue_solution_with, eval_derivative, eval_solution, PiecewiseSolution, ResidualReport,
    SolutionPiece, SolverOptions,
};
