//! Discrete Euler-Lagrange boundary-value problem as a banded linear system.
//!
//! Unknowns are the interior node values `x_1 .. x_{M-1}`, component `j` of
//! node `k` at index `(k - 1) d + j`. Row `(k - 1) d + i` is component `i` of
//! `Theta(x)(t_k)`; near the ends the window-truncated rows are kept as they
//! are, and the `x_0 = alpha`, `x_M = beta` columns move to the right-hand side.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::euler_lagrange::Theta;
use crate::grid::Grid;
use crate::lagrangian::QuadraticLagrangian;
use crate::path::{Path, Samples};
use crate::stencil::Stencil;

/// Condition estimates above this are reported as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative bound for the post-solve residual check.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BandedSystem {
    theta: Theta,
    matrix: BandMatrix,
    rhs: Vec<Complex64>,
    alpha: DVector<Complex64>,
    beta: DVector<Complex64>,
}

impl BandedSystem {
    pub fn assemble(
        l: &QuadraticLagrangian,
        s: &Stencil,
        grid: Grid,
        alpha: DVector<Complex64>,
        beta: DVector<Complex64>,
    ) -> Result<Self> {
        let d = l.dim();
        for v in [&alpha, &beta] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        grid.require_safety_interval(s.half_width())?;
        let theta = Theta::new(l, s, grid)?;
        let m = grid.subdivisions();
        let n = (m - 1) * d;
        let band = ((2 * s.half_width() + 1) * d - 1).min(n - 1);
        let mut matrix = BandMatrix::zeros(n, band, band);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..m {
            let row0 = (k - 1) * d;
            let mut known = theta.source(k);
            for (node, block) in theta.blocks(k) {
                if node == 0 {
                    known += &block * &alpha;
                } else if node == m {
                    known += &block * &beta;
                } else {
                    let col0 = (node - 1) * d;
                    for i in 0..d {
                        for j in 0..d {
                            matrix.add(row0 + i, col0 + j, block[(i, j)]);
                        }
                    }
                }
            }
            for i in 0..d {
                rhs[row0 + i] = -known[i];
            }
        }
        Ok(BandedSystem {
            theta,
            matrix,
            rhs,
            alpha,
            beta,
        })
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    /// `A u - rhs`, which is `Theta` of the completed path at interior nodes.
    pub fn apply(&self, unknowns: &[Complex64]) -> Vec<Complex64> {
        self.matrix
            .mul_vec(unknowns)
            .into_iter()
            .zip(&self.rhs)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Completes interior unknowns with the boundary data.
    pub fn path_from_unknowns(&self, unknowns: &[Complex64]) -> Result<Path> {
        let d = self.theta.dim();
        let interior: Samples = unknowns.chunks(d).map(DVector::from_column_slice).collect();
        Path::with_boundary(*self.theta.grid(), self.alpha.clone(), interior, self.beta.clone())
    }

    pub fn factor(&self) -> Result<(BandLu, f64)> {
        let lu = self.matrix.lu()?;
        let condition = lu.condition_estimate();
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::SingularSystem { condition });
        }
        Ok((lu, condition))
    }

    pub fn solve(&self) -> Result<BvpSolution> {
        let (lu, condition) = self.factor()?;
        let unknowns = lu.solve(&self.rhs);
        let path = self.path_from_unknowns(&unknowns)?;
        let theta = self.theta.eval(&path)?;
        let m = self.theta.grid().subdivisions();
        let residual = (1..m)
            .flat_map(|k| theta[k].iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        let sup_u = unknowns.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let sup_rhs = self.rhs.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let scale = (self.matrix.norm1() * sup_u + sup_rhs).max(1.0);
        if residual > RESIDUAL_TOL * scale {
            return Err(Error::ResidualCheck {
                residual,
                bound: RESIDUAL_TOL * scale,
            });
        }
        Ok(BvpSolution {
            path,
            theta,
            residual,
            scale,
            condition,
        })
    }
}

/// Solved path together with its residual and conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub path: Path,
    /// `Theta` of the solution at every node (endpoint rows are not imposed).
    pub theta: Samples,
    /// `max |Theta|` over interior nodes.
    pub residual: f64,
    pub scale: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BvpDiagnostics {
    pub residual: f64,
    pub scale: f64,
    pub condition: f64,
}

impl BvpSolution {
    pub fn diagnostics(&self) -> BvpDiagnostics {
        BvpDiagnostics {
            residual: self.residual,
            scale: self.scale,
            condition: self.condition,
        }
    }
}

/// Solves `Theta(x)(t_k) = 0`, `k = 1..M-1`, with `x_0 = alpha`, `x_M = beta`.
pub fn solve_bvp(
    l: &QuadraticLagrangian,
    s: &Stencil,
    grid: Grid,
    alpha: DVector<Complex64>,
    beta: DVector<Complex64>,
) -> Result<BvpSolution> {
    BandedSystem::assemble(l, s, grid, alpha, beta)?.solve()
}
