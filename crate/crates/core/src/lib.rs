//! Discrete calculus of variations for windowed scale-derivative operators.
//!
//! The crate builds operators `Box_eps x(t) = sum_l c_l x(t + l eps) chi_{-l}(t)`
//! on uniform grids, evaluates classical and discrete Euler-Lagrange residuals
//! for quadratic lagrangians, solves the discrete boundary-value problem, and
//! measures how the discrete equations approach the classical ones.

pub mod banded;
pub mod convergence;
pub mod error;
pub mod euler_lagrange;
pub mod grid;
pub mod lagrangian;
pub mod leibniz;
pub mod oscillator;
pub mod path;
pub mod solver;
pub mod stencil;
pub mod trajectory;

pub use banded::{BandLu, BandMatrix};
pub use convergence::{
    del_convergence_sweep, estimate_order, kernel_bound_check, operator_consistency_sweep, KernelReport, OrderEstimate,
    SweepReport, Verdict,
};
pub use error::{Error, Result};
pub use euler_lagrange::{
    cel_discretized_residual, del_residual_general, del_residual_quadratic, discrete_action, Theta,
};
pub use grid::Grid;
pub use lagrangian::{ConstantLagrangianSpec, GeneralLagrangian, QuadraticLagrangian};
pub use num_complex::Complex64;
pub use oscillator::{
    general_oscillation_test, oscillation_inequalities, oscillator_char_poly, unit_modulus_roots, CharPolynomial,
    OscillationTest, RootReport,
};
pub use path::{Path, Samples};
pub use solver::{solve_bvp, BandedSystem, BvpSolution};
pub use stencil::{Classification, Direction, Stencil, StencilDecomposition, DEFAULT_TOL};
pub use trajectory::{TestFunction, Trajectory};
