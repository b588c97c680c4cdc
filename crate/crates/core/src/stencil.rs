//! Windowed scale-derivative operators
//!
//! A [`Stencil`] stores the dimensionless weights `gamma_l`, `l = -N..=N`,
//! and a step `eps`; the operator coefficients are `c_l = gamma_l / eps`:
//!
//! ```text
//! (Box_eps x)(t)  = sum_l c_l x(t + l eps) chi_{-l}(t)
//! (Box_-eps x)(t) = sum_l c_l x(t - l eps) chi_{l}(t)
//! ```
//!
//! Terms whose shifted argument leaves `[a, b]` are removed by the window,
//! never by reading out of bounds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::path::{Path, Samples};

/// Default tolerance for membership tests and decomposition residuals.
pub const DEFAULT_TOL: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sign of the step in `Box_{+eps}` / `Box_{-eps}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `Box_eps`, reading `x(t + l eps)` under `chi_{-l}`.
    Plus,
    /// `Box_{-eps}`, reading `x(t - l eps)` under `chi_l`.
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StencilRepr", into = "StencilRepr")]
pub struct Stencil {
    half_width: usize,
    gamma: Vec<Complex64>,
    eps: f64,
}

/// Outcome of the two linear membership conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub in_o_tilde: bool,
    /// `(sum gamma_l, 1/2 sum l (gamma_l - gamma_{-l}) - 1)`.
    pub defect: (Complex64, Complex64),
}

/// Weights `k_1..k_{2N-1}` writing the operator as the forward difference
/// plus shifted second differences, with the least-squares fit error.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilDecomposition {
    pub k: Vec<Complex64>,
    pub residual: f64,
}

impl StencilDecomposition {
    pub fn is_exact(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

impl Stencil {
    pub fn new(gamma: Vec<Complex64>, eps: f64) -> Result<Self> {
        if gamma.len() < 3 || gamma.len().is_multiple_of(2) {
            return Err(Error::InvalidStencil(format!(
                "need 2N+1 >= 3 coefficients, got {}",
                gamma.len()
            )));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidStencil(format!("step must be positive, got {eps}")));
        }
        if gamma.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::InvalidStencil("non-finite coefficient".into()));
        }
        Ok(Stencil {
            half_width: gamma.len() / 2,
            gamma,
            eps,
        })
    }

    pub fn from_real(gamma: &[f64], eps: f64) -> Result<Self> {
        Stencil::new(gamma.iter().map(|&g| Complex64::new(g, 0.0)).collect(), eps)
    }

    /// Two-point operator `Box^{[r,s]}`: weights `(-s, s - r, r)`.
    pub fn two_point(r: Complex64, s: Complex64, eps: f64) -> Result<Self> {
        Stencil::new(vec![-s, s - r, r], eps)
    }

    /// `Box^{[1,0]}`.
    pub fn forward(eps: f64) -> Result<Self> {
        Stencil::two_point(1.0.into(), 0.0.into(), eps)
    }

    /// `Box^{[0,1]}`.
    pub fn backward(eps: f64) -> Result<Self> {
        Stencil::two_point(0.0.into(), 1.0.into(), eps)
    }

    /// `Box^{[1/2,1/2]}`.
    pub fn symmetric(eps: f64) -> Result<Self> {
        Stencil::two_point(0.5.into(), 0.5.into(), eps)
    }

    /// `Box^{[(1-i)/2,(1+i)/2]}`.
    pub fn cresson(eps: f64) -> Result<Self> {
        Stencil::two_point(Complex64::new(0.5, -0.5), Complex64::new(0.5, 0.5), eps)
    }

    /// Member of the unit-circle family `Box^{[1/2,1/2]} + i k Box^{[1,-1]}`.
    pub fn unit_circle_family(k: f64, eps: f64) -> Result<Self> {
        let ik = I * k;
        Stencil::new(vec![-0.5 + ik, -2.0 * ik, 0.5 + ik], eps)
    }

    /// Named constructors: `forward`, `backward`, `symmetric`, `cresson`.
    pub fn named(key: &str, eps: f64) -> Result<Self> {
        match key {
            "forward" => Stencil::forward(eps),
            "backward" => Stencil::backward(eps),
            "symmetric" => Stencil::symmetric(eps),
            "cresson" => Stencil::cresson(eps),
            _ => Err(Error::UnknownKey {
                kind: "stencil",
                key: key.to_string(),
            }),
        }
    }

    pub const NAMES: [&'static str; 4] = ["forward", "backward", "symmetric", "cresson"];

    /// Same weights on a different step.
    pub fn with_step(&self, eps: f64) -> Result<Self> {
        Stencil::new(self.gamma.clone(), eps)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.eps
    }

    /// Weights `gamma_{-N}, .., gamma_N`.
    pub fn gammas(&self) -> &[Complex64] {
        &self.gamma
    }

    /// `gamma_l`, zero outside `-N..=N`.
    pub fn gamma(&self, ell: isize) -> Complex64 {
        let idx = ell + self.half_width as isize;
        if idx < 0 || idx as usize >= self.gamma.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.gamma[idx as usize]
        }
    }

    /// Operator coefficient `c_l = gamma_l / eps`.
    pub fn coefficient(&self, ell: isize) -> Complex64 {
        self.gamma(ell) / self.eps
    }

    pub fn offsets(&self) -> impl Iterator<Item = isize> {
        let n = self.half_width as isize;
        -n..=n
    }

    /// Complex conjugate operator.
    pub fn conj(&self) -> Stencil {
        Stencil {
            half_width: self.half_width,
            gamma: self.gamma.iter().map(|g| g.conj()).collect(),
            eps: self.eps,
        }
    }

    /// Sum of `|c_l|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.gamma.iter().map(|g| g.norm()).sum::<f64>() / self.eps
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let g = grid.step();
        if (g - self.eps).abs() > 1e-12 * self.eps.max(g) {
            return Err(Error::StepMismatch {
                stencil: self.eps,
                grid: g,
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &Path, direction: Direction) -> Result<Samples> {
        self.apply_samples(x.grid(), x.values(), direction)
    }

    /// Applies the operator to raw node values on `grid`.
    pub fn apply_samples(&self, grid: &Grid, values: &[DVector<Complex64>], direction: Direction) -> Result<Samples> {
        self.check_grid(grid)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let dim = values[0].len();
        let out = (0..grid.len())
            .map(|k| {
                let mut acc = DVector::zeros(dim);
                for ell in self.offsets() {
                    let read = match direction {
                        Direction::Plus => ell,
                        Direction::Minus => -ell,
                    };
                    if let Some(j) = grid.shifted(k, read) {
                        acc.axpy(self.coefficient(ell), &values[j], Complex64::new(1.0, 0.0));
                    }
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// Scalar convenience over [`Stencil::apply_samples`].
    pub fn apply_scalars(&self, grid: &Grid, values: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
        let lifted: Samples = values.iter().map(|&v| DVector::from_element(1, v)).collect();
        Ok(self
            .apply_samples(grid, &lifted, direction)?
            .into_iter()
            .map(|v| v[0])
            .collect())
    }

    /// Evaluates `sum gamma_l = 0` and `1/2 sum l (gamma_l - gamma_{-l}) = 1`.
    pub fn classify(&self, tol: f64) -> Classification {
        let total: Complex64 = self.gamma.iter().sum();
        let slope: Complex64 = self
            .offsets()
            .map(|l| (self.gamma(l) - self.gamma(-l)) * l as f64)
            .sum::<Complex64>()
            * 0.5;
        let defect = (total, slope - 1.0);
        Classification {
            in_o_tilde: defect.0.norm() <= tol && defect.1.norm() <= tol,
            defect,
        }
    }

    /// Least-squares fit of
    /// `gamma = forward + sum_{l=-(N-1)}^{N-1} k_{l+N} shift_{-l}(1, -2, 1)`.
    pub fn decompose(&self, _tol: f64) -> StencilDecomposition {
        let n = self.half_width as isize;
        let rows = self.gamma.len();
        let cols = (2 * n - 1) as usize;
        let mut basis = DMatrix::<Complex64>::zeros(rows, cols);
        for (col, ell) in (-(n - 1)..=(n - 1)).enumerate() {
            for (m, w) in [(-1isize, 1.0), (0, -2.0), (1, 1.0)] {
                let pos = m - ell + n;
                basis[(pos as usize, col)] = Complex64::new(w, 0.0);
            }
        }
        let target = DVector::from_iterator(
            rows,
            self.offsets().map(|l| {
                let fwd = match l {
                    0 => -1.0,
                    1 => 1.0,
                    _ => 0.0,
                };
                self.gamma(l) - fwd
            }),
        );
        let svd = basis.clone().svd(true, true);
        let k = svd.solve(&target, 1e-14).expect("SVD computed with both factors");
        let residual = (&basis * &k - &target).norm();
        StencilDecomposition {
            k: k.iter().copied().collect(),
            residual,
        }
    }

    /// Real `k` with `self = Box^{[1/2,1/2]} + i k Box^{[1,-1]}`, if any.
    pub fn unit_circle_family_member(&self, tol: f64) -> Result<Option<f64>> {
        if self.half_width != 1 {
            return Err(Error::InvalidStencil(format!(
                "unit-circle family needs N = 1, got N = {}",
                self.half_width
            )));
        }
        let diff = [self.gamma[0] + 0.5, self.gamma[1], self.gamma[2] - 0.5];
        let basis = [1.0, -2.0, 1.0];
        // Projection onto (1, -2, 1): ik = <b, diff> / |b|^2.
        let ik: Complex64 = diff.iter().zip(basis).map(|(d, b)| d * b).sum::<Complex64>() / 6.0;
        let misfit = diff
            .iter()
            .zip(basis)
            .map(|(d, b)| (d - ik * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let k = -I * ik;
        Ok((misfit <= tol && k.im.abs() <= tol).then_some(k.re))
    }
}

#[derive(Serialize, Deserialize)]
struct StencilRepr {
    #[serde(rename = "N")]
    n: usize,
    gamma: Vec<[f64; 2]>,
    eps: f64,
}

impl From<Stencil> for StencilRepr {
    fn from(s: Stencil) -> Self {
        StencilRepr {
            n: s.half_width,
            gamma: s.gamma.iter().map(|g| [g.re, g.im]).collect(),
            eps: s.eps,
        }
    }
}

impl TryFrom<StencilRepr> for Stencil {
    type Error = Error;

    fn try_from(r: StencilRepr) -> Result<Self> {
        if r.gamma.len() != 2 * r.n + 1 {
            return Err(Error::InvalidStencil(format!(
                "N = {} requires {} coefficients, got {}",
                r.n,
                2 * r.n + 1,
                r.gamma.len()
            )));
        }
        Stencil::new(r.gamma.iter().map(|g| Complex64::new(g[0], g[1])).collect(), r.eps)
    }
}
