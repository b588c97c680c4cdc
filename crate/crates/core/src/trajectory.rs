use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::path::Path;

/// A smooth real path with known first and second derivatives.
pub trait Trajectory {
    fn dim(&self) -> usize;
    fn position(&self, t: f64) -> DVector<f64>;
    fn velocity(&self, t: f64) -> DVector<f64>;
    fn acceleration(&self, t: f64) -> DVector<f64>;

    /// Samples the position on every node.
    fn sample(&self, grid: Grid) -> Path {
        let values = grid
            .nodes()
            .map(|t| self.position(t).map(|v| Complex64::new(v, 0.0)))
            .collect();
        Path::new(grid, values).expect("trajectory has a fixed positive dimension")
    }
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar test function `x`, with `x'` and `x''`.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    x: Scalar,
    dx: Scalar,
    ddx: Scalar,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        x: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dx: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddx: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.into(),
            x: Arc::new(x),
            dx: Arc::new(dx),
            ddx: Arc::new(ddx),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sin() -> Self {
        TestFunction::new("sin", f64::sin, f64::cos, |t| -t.sin())
    }

    pub fn exp() -> Self {
        TestFunction::new("exp", f64::exp, f64::exp, f64::exp)
    }

    /// `t^3 - t^2 + t/2 + 1`.
    pub fn poly3() -> Self {
        TestFunction::new(
            "poly3",
            |t| t * t * t - t * t + 0.5 * t + 1.0,
            |t| 3.0 * t * t - 2.0 * t + 0.5,
            |t| 6.0 * t - 2.0,
        )
    }

    /// `t^2 + (t - 1/2)_+^3`: twice differentiable, second derivative kinked at 1/2.
    pub fn kink() -> Self {
        let pos = |t: f64| (t - 0.5).max(0.0);
        TestFunction::new(
            "kink",
            move |t| t * t + pos(t).powi(3),
            move |t| 2.0 * t + 3.0 * pos(t).powi(2),
            move |t| 2.0 + 6.0 * pos(t),
        )
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::new("one", move |_| c, |_| 0.0, |_| 0.0)
    }

    pub fn linear() -> Self {
        TestFunction::new("t", |t| t, |_| 1.0, |_| 0.0)
    }

    /// `c0 + c1 t + c2 t^2`.
    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        TestFunction::new(
            "t2",
            move |t| c0 + c1 * t + c2 * t * t,
            move |t| c1 + 2.0 * c2 * t,
            move |_| 2.0 * c2,
        )
    }

    /// `sin(omega t)`.
    pub fn sine(omega: f64) -> Self {
        TestFunction::new(
            "sine",
            move |t| (omega * t).sin(),
            move |t| omega * (omega * t).cos(),
            move |t| -omega * omega * (omega * t).sin(),
        )
    }

    /// Keys accepted by [`TestFunction::named`].
    pub const NAMES: [&'static str; 7] = ["sin", "exp", "poly3", "kink", "one", "t", "t2"];

    pub fn named(key: &str) -> Result<Self> {
        Ok(match key {
            "sin" => TestFunction::sin(),
            "exp" => TestFunction::exp(),
            "poly3" => TestFunction::poly3(),
            "kink" => TestFunction::kink(),
            "one" => TestFunction::constant(1.0),
            "t" => TestFunction::linear(),
            "t2" => TestFunction::quadratic(0.0, 0.0, 1.0),
            _ => {
                return Err(Error::UnknownKey {
                    kind: "test function",
                    key: key.to_string(),
                })
            }
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.x)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.dx)(t)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        (self.ddx)(t)
    }

    /// Same function in each of `dim` components, component `j` scaled by `j + 1`.
    pub fn replicated(self, dim: usize) -> Replicated {
        Replicated { f: self, dim }
    }
}

impl Trajectory for TestFunction {
    fn dim(&self) -> usize {
        1
    }

    fn position(&self, t: f64) -> DVector<f64> {
        DVector::from_element(1, self.value(t))
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        DVector::from_element(1, self.derivative(t))
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        DVector::from_element(1, self.second_derivative(t))
    }
}

#[derive(Debug, Clone)]
pub struct Replicated {
    f: TestFunction,
    dim: usize,
}

impl Replicated {
    fn lift(&self, v: f64) -> DVector<f64> {
        DVector::from_fn(self.dim, |j, _| v * (j + 1) as f64)
    }
}

impl Trajectory for Replicated {
    fn dim(&self) -> usize {
        self.dim
    }

    fn position(&self, t: f64) -> DVector<f64> {
        self.lift(self.f.value(t))
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        self.lift(self.f.derivative(t))
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        self.lift(self.f.second_derivative(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for key in TestFunction::NAMES {
            let f = TestFunction::named(key).unwrap();
            for &t in &[0.13, 0.37, 0.71, 0.94] {
                let d1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
                let d2 = (f.derivative(t + h) - f.derivative(t - h)) / (2.0 * h);
                assert!((d1 - f.derivative(t)).abs() < 1e-7, "{key}");
                assert!((d2 - f.second_derivative(t)).abs() < 1e-6, "{key}");
            }
        }
        assert!(TestFunction::named("cos").is_err());
    }

    #[test]
    fn replicated_components() {
        let r = TestFunction::linear().replicated(3);
        assert_eq!(r.position(2.0).as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(r.sample(Grid::unit(4).unwrap()).dim(), 3);
    }
}
