//! Discrete Euler-Lagrange residuals and the discrete action.
//!
//! For a quadratic lagrangian the discrete equation at node `t_k` reads
//!
//! ```text
//! Theta(x)(t_k) = sum_{l=-2N..2N} chi_{-l}(t_k) B_l(k) x_{k+l} + (Box_-eps J1 + J2)(t_k)
//! ```
//!
//! where the block `B_l(k)` collects the `P` double sum, the `Q` diagonal and
//! the two `R` window terms. [`Theta`] exposes the blocks so the solver can
//! assemble the same rows it evaluates here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lagrangian::{evaluate_with, Coefficients, GeneralLagrangian, QuadraticLagrangian};
use crate::path::{Path, Samples};
use crate::stencil::{Direction, Stencil};

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn complexify_vec(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

fn check_dim(l: &QuadraticLagrangian, x: &Path) -> Result<()> {
    if x.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// The linear operator `x -> Theta(x)` on a fixed grid, with coefficients
/// sampled once per node.
#[derive(Debug, Clone)]
pub struct Theta {
    stencil: Stencil,
    grid: Grid,
    dim: usize,
    coeffs: Vec<Coefficients>,
}

impl Theta {
    pub fn new(l: &QuadraticLagrangian, stencil: &Stencil, grid: Grid) -> Result<Self> {
        stencil.check_grid(&grid)?;
        let coeffs = grid.nodes().map(|t| l.coefficients(t)).collect::<Result<Vec<_>>>()?;
        Ok(Theta {
            stencil: stencil.clone(),
            grid,
            dim: l.dim(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// Nonzero-window blocks of row `k` as `(node index k + l, B_l(k))`,
    /// ordered by increasing node index.
    pub fn blocks(&self, k: usize) -> Vec<(usize, DMatrix<Complex64>)> {
        let n = self.stencil.half_width() as isize;
        let g = &self.grid;
        let d = self.dim;
        let c = |ell: isize| self.stencil.coefficient(ell);
        let mut out = Vec::with_capacity(4 * n as usize + 1);
        for ell in -2 * n..=2 * n {
            let Some(target) = g.shifted(k, ell) else {
                continue;
            };
            let mut block = DMatrix::<Complex64>::zeros(d, d);
            for j in -n..=n {
                if (ell + j).abs() > n || !g.window(j, k) {
                    continue;
                }
                let src = (k as isize - j) as usize;
                let w = c(ell + j) * c(j);
                block += complexify(&self.coeffs[src].p) * w;
            }
            if ell == 0 {
                block += complexify(&self.coeffs[k].q);
            }
            if ell.abs() <= n {
                block += complexify(&self.coeffs[k].r) * c(ell);
                block -= complexify(&self.coeffs[target].r) * c(-ell);
            }
            out.push((target, block));
        }
        out
    }

    /// Affine part `(Box_-eps J1)(t_k) + J2(t_k)`.
    pub fn source(&self, k: usize) -> DVector<Complex64> {
        let mut acc = complexify_vec(&self.coeffs[k].j2);
        for ell in self.stencil.offsets() {
            if self.grid.window(ell, k) {
                let src = (k as isize - ell) as usize;
                acc += complexify_vec(&self.coeffs[src].j1) * self.stencil.coefficient(ell);
            }
        }
        acc
    }

    /// `Theta(x)(t_k)`.
    pub fn eval_node(&self, values: &[DVector<Complex64>], k: usize) -> DVector<Complex64> {
        let mut acc = self.source(k);
        for (j, block) in self.blocks(k) {
            acc += block * &values[j];
        }
        acc
    }

    pub fn eval(&self, x: &Path) -> Result<Samples> {
        if x.grid() != &self.grid {
            return Err(Error::StepMismatch {
                stencil: self.grid.step(),
                grid: x.grid().step(),
            });
        }
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok((0..self.grid.len()).map(|k| self.eval_node(x.values(), k)).collect())
    }
}

/// `Theta(x)` at every node.
pub fn del_residual_quadratic(l: &QuadraticLagrangian, s: &Stencil, x: &Path) -> Result<Samples> {
    check_dim(l, x)?;
    Theta::new(l, s, *x.grid())?.eval(x)
}

/// Classical equation discretized after the fact:
/// `-P Box(Box x) + (-P' + 2R) Box x + (R' + Q) x - J1' + J2`.
pub fn cel_discretized_residual(l: &QuadraticLagrangian, s: &Stencil, x: &Path) -> Result<Samples> {
    check_dim(l, x)?;
    let grid = *x.grid();
    let bx = s.apply(x, Direction::Plus)?;
    let bbx = s.apply_samples(&grid, &bx, Direction::Plus)?;
    grid.nodes()
        .enumerate()
        .map(|(k, t)| {
            let c = l.coefficients(t)?;
            let r = l.rates(t)?;
            Ok(-complexify(&c.p) * &bbx[k]
                + complexify(&(&c.r * 2.0 - &r.p_dot)) * &bx[k]
                + complexify(&(&r.r_dot + &c.q)) * x.node(k)
                + complexify_vec(&(&c.j2 - &r.j1_dot)))
        })
        .collect()
}

/// `Box_-eps[dL/dv(t, x, Box x)] + dL/dx(t, x, Box x)` at every node.
///
/// The gradient path is sampled at all nodes, endpoints included, so on a
/// wrapped quadratic lagrangian this reproduces [`del_residual_quadratic`]
/// everywhere.
pub fn del_residual_general(l: &GeneralLagrangian, s: &Stencil, x: &Path) -> Result<Samples> {
    if x.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: x.dim(),
        });
    }
    let grid = *x.grid();
    let bx = s.apply(x, Direction::Plus)?;
    let ts: Vec<f64> = grid.nodes().collect();
    let gv: Samples = (0..grid.len()).map(|k| l.grad_v(ts[k], x.node(k), &bx[k])).collect();
    let back = s.apply_samples(&grid, &gv, Direction::Minus)?;
    Ok(back
        .into_iter()
        .enumerate()
        .map(|(k, b)| b + l.grad_x(ts[k], x.node(k), &bx[k]))
        .collect())
}

/// Left rectangle rule `eps * sum_{k<M} L(t_k, x_k, (Box x)_k)`.
pub fn discrete_action(l: &QuadraticLagrangian, s: &Stencil, x: &Path) -> Result<Complex64> {
    check_dim(l, x)?;
    let grid = *x.grid();
    let bx = s.apply(x, Direction::Plus)?;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..grid.subdivisions() {
        let c = l.coefficients(grid.node(k))?;
        total += evaluate_with(&c, x.node(k), &bx[k]);
    }
    Ok(total * grid.step())
}
