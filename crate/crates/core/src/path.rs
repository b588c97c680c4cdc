use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Node values of a complex vector valued function on a [`Grid`].
pub type Samples = Vec<DVector<Complex64>>;

/// A sampled path with Dirichlet data `x_0 = alpha`, `x_M = beta`.
///
/// The boundary data are the first and last samples, so the endpoint
/// conditions hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: Grid,
    dim: usize,
    values: Samples,
}

impl Path {
    pub fn new(grid: Grid, values: Samples) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Path { grid, dim, values })
    }

    /// Builds the path from boundary data and the `M - 1` interior values.
    pub fn with_boundary(
        grid: Grid,
        alpha: DVector<Complex64>,
        interior: Samples,
        beta: DVector<Complex64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(alpha);
        values.extend(interior);
        values.push(beta);
        Path::new(grid, values)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> DVector<Complex64>) -> Result<Self> {
        Path::new(grid, grid.nodes().map(f).collect())
    }

    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid
            .nodes()
            .map(|t| DVector::from_element(1, Complex64::new(f(t), 0.0)))
            .collect();
        Path { grid, dim: 1, values }
    }

    pub fn from_scalars(grid: Grid, xs: &[Complex64]) -> Result<Self> {
        Path::new(grid, xs.iter().map(|&x| DVector::from_element(1, x)).collect())
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Path {
            grid,
            dim,
            values: vec![DVector::zeros(dim); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[DVector<Complex64>] {
        &self.values
    }

    pub fn into_values(self) -> Samples {
        self.values
    }

    pub fn node(&self, k: usize) -> &DVector<Complex64> {
        &self.values[k]
    }

    pub fn alpha(&self) -> &DVector<Complex64> {
        &self.values[0]
    }

    pub fn beta(&self) -> &DVector<Complex64> {
        &self.values[self.grid.subdivisions()]
    }

    /// First component at every node.
    pub fn scalars(&self) -> Vec<Complex64> {
        self.values.iter().map(|v| v[0]).collect()
    }

    /// Time reversal `x2(t) = x1(a + b - t)`; swaps the boundary data.
    pub fn reversed(&self) -> Path {
        let mut values = self.values.clone();
        values.reverse();
        Path {
            grid: self.grid,
            dim: self.dim,
            values,
        }
    }

    pub fn scaled(&self, lambda: Complex64) -> Path {
        Path {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| v * lambda).collect(),
        }
    }

    pub fn plus(&self, other: &Path) -> Result<Path> {
        if other.grid != self.grid || other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(Path {
            grid: self.grid,
            dim: self.dim,
            values,
        })
    }

    /// Largest component modulus over all nodes.
    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

pub(crate) fn sup_norm(values: &[DVector<Complex64>]) -> f64 {
    values.iter().flat_map(|v| v.iter()).fold(0.0, |m, z| m.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_data_are_endpoints() {
        let g = Grid::unit(4).unwrap();
        let a = DVector::from_element(2, Complex64::new(1.0, -1.0));
        let b = DVector::from_element(2, Complex64::new(0.0, 3.0));
        let interior = vec![DVector::zeros(2); 3];
        let p = Path::with_boundary(g, a.clone(), interior, b.clone()).unwrap();
        assert_eq!(p.alpha(), &a);
        assert_eq!(p.beta(), &b);
        assert_eq!(p.values().len(), 5);
    }

    #[test]
    fn rejects_wrong_length_and_ragged_dims() {
        let g = Grid::unit(4).unwrap();
        assert!(Path::new(g, vec![DVector::zeros(1); 4]).is_err());
        let mut v = vec![DVector::zeros(2); 5];
        v[3] = DVector::zeros(1);
        assert!(Path::new(g, v).is_err());
    }

    #[test]
    fn reversal_swaps_boundary() {
        let g = Grid::unit(5).unwrap();
        let p = Path::from_scalar_fn(g, |t| t * t);
        let r = p.reversed();
        assert_eq!(r.alpha(), p.beta());
        assert_eq!(r.node(1)[0].re, g.node(4).powi(2));
    }
}
