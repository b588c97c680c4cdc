//! Quadratic and general lagrangians.
//!
//! The quadratic family is
//!
//! ```text
//! L(t, x, v) = 1/2 v'P v + 1/2 x'Q x + x'R v + J1'v + J2'x + J3
//! ```
//!
//! with `P`, `Q` symmetric and `R` skew-symmetric at every time. Transposes
//! are plain (not conjugate), so `L` is holomorphic in `(x, v)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const SYMMETRY_TOL: f64 = 1e-12;

/// Coefficients of a [`QuadraticLagrangian`] frozen at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub j1: DVector<f64>,
    pub j2: DVector<f64>,
    pub j3: f64,
}

/// Time derivatives needed by the classical equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub p_dot: DMatrix<f64>,
    pub r_dot: DMatrix<f64>,
    pub j1_dot: DVector<f64>,
}

#[derive(Clone)]
pub struct QuadraticLagrangian {
    dim: usize,
    p: MatrixFn,
    q: MatrixFn,
    r: MatrixFn,
    j1: VectorFn,
    j2: VectorFn,
    j3: ScalarFn,
    p_dot: Option<MatrixFn>,
    r_dot: Option<MatrixFn>,
    j1_dot: Option<VectorFn>,
}

impl std::fmt::Debug for QuadraticLagrangian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadraticLagrangian")
            .field("dim", &self.dim)
            .field("p_dot", &self.p_dot.is_some())
            .field("r_dot", &self.r_dot.is_some())
            .field("j1_dot", &self.j1_dot.is_some())
            .finish_non_exhaustive()
    }
}

fn const_matrix(m: DMatrix<f64>) -> MatrixFn {
    Arc::new(move |_| m.clone())
}

fn const_vector(v: DVector<f64>) -> VectorFn {
    Arc::new(move |_| v.clone())
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn complexify_vec(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

fn asymmetry(m: &DMatrix<f64>, sign: f64) -> f64 {
    let scale = m.amax().max(1.0);
    (m - m.transpose() * sign).amax() / scale
}

impl QuadraticLagrangian {
    /// All coefficients zero, with zero rates.
    pub fn zero(dim: usize) -> Self {
        let zm = DMatrix::zeros(dim, dim);
        let zv = DVector::zeros(dim);
        QuadraticLagrangian {
            dim,
            p: const_matrix(zm.clone()),
            q: const_matrix(zm.clone()),
            r: const_matrix(zm.clone()),
            j1: const_vector(zv.clone()),
            j2: const_vector(zv.clone()),
            j3: Arc::new(|_| 0.0),
            p_dot: Some(const_matrix(zm.clone())),
            r_dot: Some(const_matrix(zm)),
            j1_dot: Some(const_vector(zv)),
        }
    }

    /// Time-independent coefficients; symmetry is checked here.
    pub fn constant(
        p: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        j1: DVector<f64>,
        j2: DVector<f64>,
        j3: f64,
    ) -> Result<Self> {
        let dim = p.nrows();
        let l = QuadraticLagrangian::zero(dim)
            .with_constant_p(p)
            .with_constant_q(q)
            .with_constant_r(r)
            .with_constant_j1(j1)
            .with_constant_j2(j2)
            .with_j3(move |_| j3);
        l.coefficients(0.0)?;
        Ok(l)
    }

    /// `d = 1`, `P = p`, `Q = q`, no sources.
    pub fn harmonic(p: f64, q: f64) -> Self {
        QuadraticLagrangian::zero(1)
            .with_constant_p(DMatrix::from_element(1, 1, p))
            .with_constant_q(DMatrix::from_element(1, 1, q))
    }

    /// `L = v^2 / 2`.
    pub fn free() -> Self {
        QuadraticLagrangian::harmonic(1.0, 0.0)
    }

    /// `d = 2`, `P = Q = I`, `R = [[0, 1], [-1, 0]]`.
    pub fn lq2d() -> Self {
        QuadraticLagrangian::zero(2)
            .with_constant_p(DMatrix::identity(2, 2))
            .with_constant_q(DMatrix::identity(2, 2))
            .with_constant_r(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Replaces `P`; its rate becomes unknown until [`Self::with_p_rate`].
    pub fn with_p(mut self, p: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.p = Arc::new(p);
        self.p_dot = None;
        self
    }

    pub fn with_p_rate(mut self, p_dot: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.p_dot = Some(Arc::new(p_dot));
        self
    }

    pub fn with_constant_p(mut self, p: DMatrix<f64>) -> Self {
        self.p_dot = Some(const_matrix(DMatrix::zeros(p.nrows(), p.ncols())));
        self.p = const_matrix(p);
        self
    }

    pub fn with_q(mut self, q: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.q = Arc::new(q);
        self
    }

    pub fn with_constant_q(mut self, q: DMatrix<f64>) -> Self {
        self.q = const_matrix(q);
        self
    }

    pub fn with_r(mut self, r: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.r = Arc::new(r);
        self.r_dot = None;
        self
    }

    pub fn with_r_rate(mut self, r_dot: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.r_dot = Some(Arc::new(r_dot));
        self
    }

    pub fn with_constant_r(mut self, r: DMatrix<f64>) -> Self {
        self.r_dot = Some(const_matrix(DMatrix::zeros(r.nrows(), r.ncols())));
        self.r = const_matrix(r);
        self
    }

    pub fn with_j1(mut self, j1: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.j1 = Arc::new(j1);
        self.j1_dot = None;
        self
    }

    pub fn with_j1_rate(mut self, j1_dot: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.j1_dot = Some(Arc::new(j1_dot));
        self
    }

    pub fn with_constant_j1(mut self, j1: DVector<f64>) -> Self {
        self.j1_dot = Some(const_vector(DVector::zeros(j1.len())));
        self.j1 = const_vector(j1);
        self
    }

    pub fn with_j2(mut self, j2: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.j2 = Arc::new(j2);
        self
    }

    pub fn with_constant_j2(mut self, j2: DVector<f64>) -> Self {
        self.j2 = const_vector(j2);
        self
    }

    pub fn with_j3(mut self, j3: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.j3 = Arc::new(j3);
        self
    }

    /// Coefficients at `t`, after shape and symmetry checks.
    pub fn coefficients(&self, t: f64) -> Result<Coefficients> {
        let c = Coefficients {
            p: (self.p)(t),
            q: (self.q)(t),
            r: (self.r)(t),
            j1: (self.j1)(t),
            j2: (self.j2)(t),
            j3: (self.j3)(t),
        };
        let d = self.dim;
        for (name, m) in [("P", &c.p), ("Q", &c.q), ("R", &c.r)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidLagrangian(format!(
                    "{name}({t}) is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (name, v) in [("J1", &c.j1), ("J2", &c.j2)] {
            if v.len() != d {
                return Err(Error::InvalidLagrangian(format!(
                    "{name}({t}) has length {}, expected {d}",
                    v.len()
                )));
            }
        }
        for (name, m, sign, expected) in [
            ("P", &c.p, 1.0, "symmetric"),
            ("Q", &c.q, 1.0, "symmetric"),
            ("R", &c.r, -1.0, "skew-symmetric"),
        ] {
            let asym = asymmetry(m, sign);
            if asym > SYMMETRY_TOL {
                return Err(Error::Symmetry {
                    name,
                    expected,
                    t,
                    asymmetry: asym,
                });
            }
        }
        Ok(c)
    }

    pub fn rates(&self, t: f64) -> Result<Rates> {
        Ok(Rates {
            p_dot: self.p_dot.as_ref().ok_or(Error::MissingDerivative("P"))?(t),
            r_dot: self.r_dot.as_ref().ok_or(Error::MissingDerivative("R"))?(t),
            j1_dot: self.j1_dot.as_ref().ok_or(Error::MissingDerivative("J1"))?(t),
        })
    }

    /// `L(t, x, v)`.
    pub fn evaluate(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> Result<Complex64> {
        let c = self.coefficients(t)?;
        Ok(evaluate_with(&c, x, v))
    }

    /// `dL/dx = Q x + R v + J2`.
    pub fn grad_x(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let c = self.coefficients(t)?;
        Ok(complexify(&c.q) * x + complexify(&c.r) * v + complexify_vec(&c.j2))
    }

    /// `dL/dv = P v - R x + J1`.
    pub fn grad_v(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let c = self.coefficients(t)?;
        Ok(complexify(&c.p) * v - complexify(&c.r) * x + complexify_vec(&c.j1))
    }

    /// Classical Euler-Lagrange residual at `t`:
    /// `-P x'' + (-P' + 2R) x' + (R' + Q) x - J1' + J2`.
    pub fn cel_residual(&self, path: &dyn Trajectory, t: f64) -> Result<DVector<f64>> {
        let c = self.coefficients(t)?;
        let rates = self.rates(t)?;
        Ok(-&c.p * path.acceleration(t)
            + (&c.r * 2.0 - &rates.p_dot) * path.velocity(t)
            + (&rates.r_dot + &c.q) * path.position(t)
            - &rates.j1_dot
            + &c.j2)
    }
}

pub(crate) fn evaluate_with(c: &Coefficients, x: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    let p = complexify(&c.p);
    let q = complexify(&c.q);
    let r = complexify(&c.r);
    let half = Complex64::new(0.5, 0.0);
    half * v.dot(&(p * v))
        + half * x.dot(&(q * x))
        + x.dot(&(r * v))
        + complexify_vec(&c.j1).dot(v)
        + complexify_vec(&c.j2).dot(x)
        + c.j3
}

/// Constant-coefficient lagrangian in its JSON form
/// `{"P": [[..]], "Q": [[..]], "R": [[..]], "J1": [..], "J2": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantLagrangianSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R", default)]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(rename = "J1", default)]
    pub j1: Option<Vec<f64>>,
    #[serde(rename = "J2", default)]
    pub j2: Option<Vec<f64>>,
    #[serde(rename = "J3", default)]
    pub j3: Option<f64>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidLagrangian(format!("{name} must be {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl ConstantLagrangianSpec {
    pub fn build(&self) -> Result<QuadraticLagrangian> {
        let dim = self.p.len();
        if dim == 0 {
            return Err(Error::InvalidLagrangian("P is empty".into()));
        }
        let vector = |name: &str, v: &Option<Vec<f64>>| -> Result<DVector<f64>> {
            match v {
                None => Ok(DVector::zeros(dim)),
                Some(v) if v.len() == dim => Ok(DVector::from_column_slice(v)),
                Some(_) => Err(Error::InvalidLagrangian(format!("{name} must have length {dim}"))),
            }
        };
        let r = match &self.r {
            Some(r) => rows_to_matrix("R", r, dim)?,
            None => DMatrix::zeros(dim, dim),
        };
        QuadraticLagrangian::constant(
            rows_to_matrix("P", &self.p, dim)?,
            rows_to_matrix("Q", &self.q, dim)?,
            r,
            vector("J1", &self.j1)?,
            vector("J2", &self.j2)?,
            self.j3.unwrap_or(0.0),
        )
    }
}

/// Built-in lagrangians addressable by key.
pub fn preset(key: &str, p: f64, q: f64) -> Result<QuadraticLagrangian> {
    match key {
        "harmonic" => Ok(QuadraticLagrangian::harmonic(p, q)),
        "free" => Ok(QuadraticLagrangian::free()),
        "lq2d" => Ok(QuadraticLagrangian::lq2d()),
        _ => Err(Error::UnknownKey {
            kind: "lagrangian",
            key: key.to_string(),
        }),
    }
}

pub type ValueFn = Arc<dyn Fn(f64, &DVector<Complex64>, &DVector<Complex64>) -> Complex64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, &DVector<Complex64>, &DVector<Complex64>) -> DVector<Complex64> + Send + Sync>;

/// An arbitrary lagrangian given by its value and partial gradients.
#[derive(Clone)]
pub struct GeneralLagrangian {
    dim: usize,
    value: ValueFn,
    grad_x: GradientFn,
    grad_v: GradientFn,
}

impl GeneralLagrangian {
    pub fn new(
        dim: usize,
        value: impl Fn(f64, &DVector<Complex64>, &DVector<Complex64>) -> Complex64 + Send + Sync + 'static,
        grad_x: impl Fn(f64, &DVector<Complex64>, &DVector<Complex64>) -> DVector<Complex64> + Send + Sync + 'static,
        grad_v: impl Fn(f64, &DVector<Complex64>, &DVector<Complex64>) -> DVector<Complex64> + Send + Sync + 'static,
    ) -> Self {
        GeneralLagrangian {
            dim,
            value: Arc::new(value),
            grad_x: Arc::new(grad_x),
            grad_v: Arc::new(grad_v),
        }
    }

    /// Wraps a quadratic lagrangian.
    ///
    /// # Panics
    /// The wrapped closures panic if the coefficients fail their symmetry
    /// checks at an evaluated time.
    pub fn from_quadratic(l: &QuadraticLagrangian) -> Self {
        let (a, b, c) = (l.clone(), l.clone(), l.clone());
        GeneralLagrangian::new(
            l.dim(),
            move |t, x, v| a.evaluate(t, x, v).expect("valid quadratic lagrangian"),
            move |t, x, v| b.grad_x(t, x, v).expect("valid quadratic lagrangian"),
            move |t, x, v| c.grad_v(t, x, v).expect("valid quadratic lagrangian"),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
        (self.value)(t, x, v)
    }

    pub fn grad_x(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
        (self.grad_x)(t, x, v)
    }

    pub fn grad_v(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
        (self.grad_v)(t, x, v)
    }

    /// Largest gap between the supplied gradients and central differences of
    /// the value along real coordinate directions, relative to `max(1, |grad|)`.
    pub fn gradient_mismatch(&self, t: f64, x: &DVector<Complex64>, v: &DVector<Complex64>, h: f64) -> f64 {
        let gx = self.grad_x(t, x, v);
        let gv = self.grad_v(t, x, v);
        let mut worst: f64 = 0.0;
        for j in 0..self.dim {
            let mut e = DVector::zeros(self.dim);
            e[j] = Complex64::new(h, 0.0);
            let fd_x = (self.value(t, &(x + &e), v) - self.value(t, &(x - &e), v)) / (2.0 * h);
            let fd_v = (self.value(t, x, &(v + &e)) - self.value(t, x, &(v - &e))) / (2.0 * h);
            worst = worst
                .max((fd_x - gx[j]).norm() / gx[j].norm().max(1.0))
                .max((fd_v - gv[j]).norm() / gv[j].norm().max(1.0));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TestFunction;
    use approx::assert_abs_diff_eq;

    fn cv(xs: &[f64]) -> DVector<Complex64> {
        DVector::from_iterator(xs.len(), xs.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    #[test]
    fn evaluate_examples() {
        let l = QuadraticLagrangian::harmonic(1.0, -1.0);
        let val = l.evaluate(0.3, &cv(&[1.0]), &cv(&[0.0])).unwrap();
        assert_eq!(val, Complex64::new(-0.5, 0.0));

        // skew R contributes nothing when x = v
        let skew = QuadraticLagrangian::zero(2).with_constant_r(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]));
        let x = cv(&[1.5, -0.25]);
        assert_eq!(skew.evaluate(0.0, &x, &x).unwrap(), Complex64::new(0.0, 0.0));

        let w = 2.0;
        let osc = QuadraticLagrangian::harmonic(1.0, -w * w);
        let t = 0.4;
        let got = osc
            .evaluate(t, &cv(&[(w * t).sin()]), &cv(&[w * (w * t).cos()]))
            .unwrap();
        let want = 0.5 * w * w * (w * t).cos().powi(2) - 0.5 * w * w * (w * t).sin().powi(2);
        assert_abs_diff_eq!(got.re, want, epsilon = 1e-14);
    }

    #[test]
    fn symmetry_is_enforced() {
        let bad_r = QuadraticLagrangian::constant(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            DVector::zeros(2),
            DVector::zeros(2),
            0.0,
        );
        assert!(matches!(bad_r, Err(Error::Symmetry { name: "R", .. })));
        let bad_p = QuadraticLagrangian::zero(2).with_p(|t| DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]));
        assert!(bad_p.coefficients(0.0).is_ok());
        assert!(matches!(
            bad_p.coefficients(0.5),
            Err(Error::Symmetry { name: "P", .. })
        ));
    }

    #[test]
    fn cel_examples() {
        let w = 1.7;
        let osc = QuadraticLagrangian::harmonic(1.0, -w * w);
        let x = TestFunction::sine(w);
        for &t in &[0.0, 0.3, 1.1] {
            assert!(osc.cel_residual(&x, t).unwrap().amax() < 1e-13);
        }

        let zero = TestFunction::constant(0.0);
        assert_eq!(
            QuadraticLagrangian::harmonic(2.0, 5.0)
                .cel_residual(&zero, 0.7)
                .unwrap()[0],
            0.0
        );

        // P = I, Q = I, R = [[0,1],[-1,0]], x = (t, 0): residual (t, -2)
        let lq = QuadraticLagrangian::lq2d();
        struct Line;
        impl Trajectory for Line {
            fn dim(&self) -> usize {
                2
            }
            fn position(&self, t: f64) -> DVector<f64> {
                DVector::from_vec(vec![t, 0.0])
            }
            fn velocity(&self, _: f64) -> DVector<f64> {
                DVector::from_vec(vec![1.0, 0.0])
            }
            fn acceleration(&self, _: f64) -> DVector<f64> {
                DVector::zeros(2)
            }
        }
        let res = lq.cel_residual(&Line, 0.8).unwrap();
        assert_abs_diff_eq!(res[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(res[1], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn cel_needs_rates() {
        let l = QuadraticLagrangian::harmonic(1.0, 1.0).with_p(|t| DMatrix::from_element(1, 1, 2.0 + t.sin()));
        let x = TestFunction::sin();
        assert!(matches!(l.cel_residual(&x, 0.5), Err(Error::MissingDerivative("P"))));
        let l = l.with_p_rate(|t| DMatrix::from_element(1, 1, t.cos()));
        assert!(l.cel_residual(&x, 0.5).is_ok());
    }

    #[test]
    fn quadratic_gradients_match_finite_differences() {
        let l = QuadraticLagrangian::lq2d()
            .with_constant_j1(DVector::from_vec(vec![0.3, -1.0]))
            .with_constant_j2(DVector::from_vec(vec![2.0, 0.5]));
        let g = GeneralLagrangian::from_quadratic(&l);
        let x = DVector::from_vec(vec![Complex64::new(0.3, 0.1), Complex64::new(-1.2, 0.4)]);
        let v = DVector::from_vec(vec![Complex64::new(1.0, -0.5), Complex64::new(0.25, 2.0)]);
        assert!(g.gradient_mismatch(0.2, &x, &v, 1e-4) < 1e-8);
    }

    #[test]
    fn json_spec_round_trip() {
        let json = r#"{"P": [[1.0, 0.0], [0.0, 2.0]], "Q": [[1.0, 0.5], [0.5, 1.0]],
                       "R": [[0.0, 1.0], [-1.0, 0.0]], "J1": [0.0, 1.0], "J2": [1.0, 1.0]}"#;
        let spec: ConstantLagrangianSpec = serde_json::from_str(json).unwrap();
        let l = spec.build().unwrap();
        assert_eq!(l.dim(), 2);
        let c = l.coefficients(3.0).unwrap();
        assert_eq!(c.q[(0, 1)], 0.5);
        assert_eq!(c.j1[1], 1.0);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ConstantLagrangianSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let skew_q = r#"{"P": [[1.0]], "Q": [[1.0]], "R": [[1.0]]}"#;
        let spec: ConstantLagrangianSpec = serde_json::from_str(skew_q).unwrap();
        assert!(spec.build().is_err());
        assert!(preset("quartic", 1.0, 1.0).is_err());
    }
}
