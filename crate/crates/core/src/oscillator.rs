//! Root analysis of the constant-coefficient oscillator recurrence.
//!
//! Inside the safety interval the discrete equation for `L = p v^2/2 + q x^2/2`
//! with a three-point stencil is a five-term recurrence. Its characteristic
//! polynomial, scaled by `eps^2 / p`, is
//!
//! ```text
//! D(l) = g1 g-1 (l^4 + 1) + g0 (g1 + g-1) (l^3 + l) + (g-1^2 + g0^2 + g1^2 + (q/p) eps^2) l^2
//! ```
//!
//! It is palindromic, so `mu = l + 1/l` reduces it to a quadratic `E(mu)`
//! and `|l| = 1` for both roots of `l^2 - mu l + 1` exactly when `mu` is real
//! in `[-2, 2]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stencil::Stencil;

/// Tolerance on `||l| - 1|`.
pub const UNIT_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPolynomial {
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    /// `(gamma_-1, gamma_0, gamma_1)`.
    pub gamma: [Complex64; 3],
    /// Coefficients of `l^4, l^3, l^2, l, 1`.
    pub quartic: [Complex64; 5],
    /// Coefficients of `mu^2, mu, 1`.
    pub reduced: [Complex64; 3],
}

pub fn oscillator_char_poly(s: &Stencil, p: f64, q: f64) -> Result<CharPolynomial> {
    if s.half_width() != 1 {
        return Err(Error::InvalidStencil(format!(
            "oscillator analysis needs N = 1, got N = {}",
            s.half_width()
        )));
    }
    if p == 0.0 || !p.is_finite() || !q.is_finite() {
        return Err(Error::SingularParameters(format!(
            "need finite p != 0, got p={p}, q={q}"
        )));
    }
    let eps = s.step();
    let (gm, g0, g1) = (s.gamma(-1), s.gamma(0), s.gamma(1));
    let outer = g1 * gm;
    let middle = g0 * (g1 + gm);
    let load = q / p * eps * eps;
    let centre = gm * gm + g0 * g0 + g1 * g1 + load;
    Ok(CharPolynomial {
        p,
        q,
        eps,
        gamma: [gm, g0, g1],
        quartic: [outer, middle, centre, middle, outer],
        reduced: [outer, middle, centre - outer * 2.0],
    })
}

impl CharPolynomial {
    pub fn quartic_at(&self, l: Complex64) -> Complex64 {
        self.quartic.iter().fold(ZERO, |acc, c| acc * l + c)
    }

    pub fn reduced_at(&self, mu: Complex64) -> Complex64 {
        self.reduced.iter().fold(ZERO, |acc, c| acc * mu + c)
    }

    /// Largest gap between the coefficient lists of `D(l)` and `l^4 D(1/l)`.
    pub fn asymmetry(&self) -> f64 {
        (0..5)
            .map(|i| (self.quartic[i] - self.quartic[4 - i]).norm())
            .fold(0.0, f64::max)
    }

    fn scale(&self) -> f64 {
        self.quartic.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `g1 g-1 = 0`: the quartic loses its leading and constant terms.
    pub fn is_degenerate(&self) -> bool {
        self.quartic[0].norm() <= 1e-14 * self.scale()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    /// Finite roots, each with multiplicity.
    pub roots: Vec<Complex64>,
    /// Moduli of the four roots; roots lost with the leading term count as
    /// infinite.
    pub moduli: Vec<f64>,
    pub all_unit: bool,
    pub degenerate: bool,
}

/// Roots of `a x^2 + b x + c` without cancellation.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - a * c * 4.0).sqrt();
    // pick the sign that adds magnitudes
    let s = if (b.conj() * disc).re >= 0.0 {
        b + disc
    } else {
        b - disc
    };
    if s == ZERO {
        return [ZERO, ZERO];
    }
    let r1 = -s / (a * 2.0);
    let r2 = -(c * 2.0) / s;
    [r1, r2]
}

/// Eigenvalues of the companion matrix of a polynomial given by
/// descending coefficients with nonzero leading term.
fn companion_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    m.schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default()
}

pub fn unit_modulus_roots(cp: &CharPolynomial, tol: f64) -> Result<RootReport> {
    let scale = cp.scale();
    if scale == 0.0 {
        return Err(Error::SingularParameters(
            "characteristic polynomial is identically zero".into(),
        ));
    }
    let degenerate = cp.is_degenerate();
    let roots: Vec<Complex64> = if !degenerate {
        let [a, b, c] = cp.reduced;
        quadratic_roots(a, b, c)
            .into_iter()
            .flat_map(|mu| {
                let [l1, l2] = quadratic_roots(Complex64::new(1.0, 0.0), -mu, Complex64::new(1.0, 0.0));
                [l1, l2]
            })
            .collect()
    } else {
        let first = cp.quartic.iter().position(|c| c.norm() > 1e-14 * scale).unwrap_or(4);
        let mut trimmed = cp.quartic[first..].to_vec();
        // trailing negligible coefficients are exact roots at zero
        let mut zeros = 0;
        while trimmed.len() > 1 && trimmed.last().unwrap().norm() <= 1e-14 * scale {
            trimmed.pop();
            zeros += 1;
        }
        let mut r = companion_roots(&trimmed);
        r.extend(std::iter::repeat_n(ZERO, zeros));
        r
    };
    let mut moduli: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
    moduli.resize(4, f64::INFINITY);
    let all_unit = moduli.iter().all(|m| (m - 1.0).abs() <= tol);
    Ok(RootReport {
        roots,
        moduli,
        all_unit,
        degenerate,
    })
}

/// The four inequalities on `alpha = g1 g-1`, `beta = g0 (g1 + g-1)`,
/// `gamma = g0^2 + g1^2 + g-1^2 - 2 g1 g-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationTest {
    /// `alpha`, `beta`, `gamma` real (up to rounding).
    pub real: bool,
    /// `4|alpha| - |beta| >= 0`, `4|alpha| - |gamma| >= 0`,
    /// `beta^2 - 4 alpha gamma >= 0`, `16|alpha| + 4 gamma sgn(alpha) - 8|beta| >= 0`.
    pub inequalities: [bool; 4],
    pub holds: bool,
}

pub fn oscillation_inequalities(gm: Complex64, g0: Complex64, g1: Complex64) -> OscillationTest {
    let alpha = g1 * gm;
    let beta = g0 * (g1 + gm);
    let gamma = g0 * g0 + g1 * g1 + gm * gm - g1 * gm * 2.0;
    let scale = [alpha, beta, gamma].iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-12 * scale * scale;
    let real = [alpha, beta, gamma].iter().all(|z| z.im.abs() <= 1e-12 * scale);
    let (a, b, c) = (alpha.re, beta.re, gamma.re);
    let sgn = if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    };
    let inequalities = [
        4.0 * a.abs() - b.abs() >= -tol,
        4.0 * a.abs() - c.abs() >= -tol,
        b * b - 4.0 * a * c >= -tol,
        16.0 * a.abs() + 4.0 * c * sgn - 8.0 * b.abs() >= -tol,
    ];
    OscillationTest {
        real,
        inequalities,
        holds: real && inequalities.iter().all(|&ok| ok),
    }
}

/// Conjunction of [`oscillation_inequalities`].
pub fn general_oscillation_test(gm: Complex64, g0: Complex64, g1: Complex64) -> bool {
    oscillation_inequalities(gm, g0, g1).holds
}

/// Largest step keeping every root of a family member on the unit circle:
/// `1 / (|omega| sqrt(1 + 4 k^2))` with `omega^2 = -q/p`.
pub fn unit_circle_threshold(k: f64, p: f64, q: f64) -> f64 {
    let omega = (-q / p).abs().sqrt();
    1.0 / (omega * (1.0 + 4.0 * k * k).sqrt())
}
