//! Problem definitions, benchmark systems and fixed-step reference solvers.
//!
//! Reference trajectories are for validation only; certificates never use them.

mod problem;
mod solver;

pub use problem::{
    decay_1d, inverted_pendulum, inverted_pendulum_with, linear, Dynamics, OdeProblem,
    PendulumParams,
};
pub use solver::{solve_reference, uniform_grid, Method, Producer, Trajectory};
