//! Product rules for two-point operators.
//!
//! For `W = Box^{[r,s]}` and a companion `W~ = Box^{[r',s']}` with
//! `r s' != s r'`,
//!
//! ```text
//! W(fg) = W(f) g + f W(g)
//!       + d1 W f W g + d2 W~f W g + d3 W f W~g + d4 W~f W~g
//! ```
//!
//! where `d1 = eps (r s'^2 - s r'^2) / delta`, `d2 = d3 = eps r s (r' - s') / delta`,
//! `d4 = eps r s (s - r) / delta` and `delta = (r s' - s r')^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::Path;
use crate::stencil::{Direction, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeibnizCoefficients {
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
    pub d4: Complex64,
    pub r: Complex64,
    pub s: Complex64,
    pub rp: Complex64,
    pub sp: Complex64,
    pub eps: f64,
}

impl LeibnizCoefficients {
    pub fn new(r: Complex64, s: Complex64, rp: Complex64, sp: Complex64, eps: f64) -> Result<Self> {
        let minor = r * sp - s * rp;
        if minor.norm() <= 1e-14 * (r.norm() * sp.norm() + s.norm() * rp.norm()).max(f64::MIN_POSITIVE) {
            return Err(Error::SingularParameters(format!(
                "r s' - s r' vanishes for r={r}, s={s}, r'={rp}, s'={sp}"
            )));
        }
        let delta = minor * minor;
        let d1 = (r * sp * sp - s * rp * rp) * eps / delta;
        let d23 = r * s * (rp - sp) * eps / delta;
        let d4 = r * s * (s - r) * eps / delta;
        Ok(LeibnizCoefficients {
            d1,
            d2: d23,
            d3: d23,
            d4,
            r,
            s,
            rp,
            sp,
            eps,
        })
    }

    /// Closed-form determinant of the 4x4 system, `-(r s' - s r')^4`.
    pub fn det(&self) -> Complex64 {
        -(self.r * self.sp - self.s * self.rp).powi(4)
    }

    /// Matrix of the linear conditions on `(d1, d2, d3, d4)`.
    pub fn system_matrix(&self) -> DMatrix<Complex64> {
        let (r, s, rp, sp) = (self.r, self.s, self.rp, self.sp);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                r * r,
                r * rp,
                r * rp,
                rp * rp,
                r * s,
                s * rp,
                r * sp,
                rp * sp,
                r * s,
                r * sp,
                s * rp,
                rp * sp,
                s * s,
                s * sp,
                s * sp,
                sp * sp,
            ],
        )
    }

    pub fn system_rhs(&self) -> DVector<Complex64> {
        DVector::from_vec(vec![
            self.r * self.eps,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            -self.s * self.eps,
        ])
    }

    /// Largest entry of `A d - rhs` for the closed-form coefficients.
    pub fn system_residual(&self) -> f64 {
        let d = DVector::from_vec(vec![self.d1, self.d2, self.d3, self.d4]);
        (self.system_matrix() * d - self.system_rhs())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Which operator pairs with `Box^{[r,s]}` in the product rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Companion {
    /// `Box^{[conj r, conj s]}`; requires `s / r` not real.
    Conjugate,
    Explicit {
        rp: Complex64,
        sp: Complex64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeibnizResidual {
    /// `max |LHS - RHS|` over nodes where every window is one.
    pub max_abs: f64,
    /// `max(1, max_k |f_k| |g_k|)`.
    pub scale: f64,
}

impl LeibnizResidual {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale
    }
}

fn companion_params(r: Complex64, s: Complex64, companion: Companion) -> Result<(Complex64, Complex64)> {
    match companion {
        Companion::Conjugate => {
            if r.norm() == 0.0 || s.norm() == 0.0 {
                return Err(Error::SingularParameters("r and s must be nonzero".into()));
            }
            let ratio = s / r;
            if ratio.im.abs() <= 1e-12 * ratio.norm() {
                return Err(Error::SingularParameters(format!(
                    "s/r = {ratio} is real; the conjugate pair is degenerate"
                )));
            }
            Ok((r.conj(), s.conj()))
        }
        Companion::Explicit { rp, sp } => Ok((rp, sp)),
    }
}

fn scalar_path(p: &Path) -> Result<Vec<Complex64>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: p.dim(),
        });
    }
    Ok(p.scalars())
}

struct ProductTerms {
    lhs: Vec<Complex64>,
    f: Vec<Complex64>,
    g: Vec<Complex64>,
    wf: Vec<Complex64>,
    wg: Vec<Complex64>,
    tf: Vec<Complex64>,
    tg: Vec<Complex64>,
}

fn product_terms(w: &Stencil, tilde: &Stencil, f: &Path, g: &Path) -> Result<ProductTerms> {
    if f.grid() != g.grid() {
        return Err(Error::InvalidStencil("f and g live on different grids".into()));
    }
    let grid = f.grid();
    let fs = scalar_path(f)?;
    let gs = scalar_path(g)?;
    let fg: Vec<Complex64> = fs.iter().zip(&gs).map(|(a, b)| a * b).collect();
    Ok(ProductTerms {
        lhs: w.apply_scalars(grid, &fg, Direction::Plus)?,
        wf: w.apply_scalars(grid, &fs, Direction::Plus)?,
        wg: w.apply_scalars(grid, &gs, Direction::Plus)?,
        tf: tilde.apply_scalars(grid, &fs, Direction::Plus)?,
        tg: tilde.apply_scalars(grid, &gs, Direction::Plus)?,
        f: fs,
        g: gs,
    })
}

/// Nodes `k` with `k - 1` and `k + 1` interior, where all windows are one.
fn identity_nodes(m: usize) -> std::ops::RangeInclusive<usize> {
    2..=m.saturating_sub(2)
}

/// Nodewise `W(fg)` and the right-hand side assembled from `d1..d4`.
pub fn product_rule_sides(
    r: Complex64,
    s: Complex64,
    companion: Companion,
    f: &Path,
    g: &Path,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let eps = f.grid().step();
    let (rp, sp) = companion_params(r, s, companion)?;
    let d = LeibnizCoefficients::new(r, s, rp, sp, eps)?;
    let w = Stencil::two_point(r, s, eps)?;
    let tilde = Stencil::two_point(rp, sp, eps)?;
    let t = product_terms(&w, &tilde, f, g)?;
    let rhs = (0..t.lhs.len())
        .map(|k| {
            t.wf[k] * t.g[k]
                + t.f[k] * t.wg[k]
                + d.d1 * t.wf[k] * t.wg[k]
                + d.d2 * t.tf[k] * t.wg[k]
                + d.d3 * t.wf[k] * t.tg[k]
                + d.d4 * t.tf[k] * t.tg[k]
        })
        .collect();
    Ok((t.lhs, rhs))
}

/// Right-hand side of the conjugate-pair formula written directly in
/// `r, s, conj r, conj s`, independent of [`LeibnizCoefficients`].
pub fn conjugate_formula_rhs(r: Complex64, s: Complex64, f: &Path, g: &Path) -> Result<Vec<Complex64>> {
    let (rb, sb) = companion_params(r, s, Companion::Conjugate)?;
    let eps = f.grid().step();
    let w = Stencil::two_point(r, s, eps)?;
    let tilde = Stencil::two_point(rb, sb, eps)?;
    let t = product_terms(&w, &tilde, f, g)?;
    let den = (r * sb - rb * s).powi(2);
    let same = (r * sb * sb - rb * rb * s) * eps / den;
    let conj = r * s * (r - s) * eps / den;
    let mixed = r * s * (rb - sb) * eps / den;
    Ok((0..t.lhs.len())
        .map(|k| {
            t.f[k] * t.wg[k] + t.g[k] * t.wf[k] + same * t.wf[k] * t.wg[k] - conj * t.tf[k] * t.tg[k]
                + mixed * (t.wf[k] * t.tg[k] + t.tf[k] * t.wg[k])
        })
        .collect())
}

/// Largest violation of the generalized product rule over window-free nodes.
pub fn leibniz_residual(
    r: Complex64,
    s: Complex64,
    companion: Companion,
    f: &Path,
    g: &Path,
) -> Result<LeibnizResidual> {
    let (lhs, rhs) = product_rule_sides(r, s, companion, f, g)?;
    let m = f.grid().subdivisions();
    let max_abs = identity_nodes(m).map(|k| (lhs[k] - rhs[k]).norm()).fold(0.0, f64::max);
    let fs = f.scalars();
    let gs = g.scalars();
    let scale = fs.iter().zip(&gs).map(|(a, b)| a.norm() * b.norm()).fold(1.0, f64::max);
    Ok(LeibnizResidual { max_abs, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_c(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    }

    fn random_real_path(rng: &mut ChaCha8Rng, grid: Grid) -> Path {
        // piecewise: random jumps on top of a smooth part
        let jump_at = rng.random_range(0.2..0.8);
        let amp: f64 = rng.random_range(-3.0..3.0);
        let freq: f64 = rng.random_range(0.5..6.0);
        let xs: Vec<Complex64> = grid
            .nodes()
            .map(|t| {
                let base = amp * (freq * t).sin() + rng.random_range(-0.5..0.5);
                c(if t > jump_at { base + 1.5 } else { base }, 0.0)
            })
            .collect();
        Path::from_scalars(grid, &xs).unwrap()
    }

    #[test]
    fn cresson_coefficients_closed_form() {
        let eps = 0.01;
        let r = c(0.5, -0.5);
        let s = c(0.5, 0.5);
        let d = LeibnizCoefficients::new(r, s, r.conj(), s.conj(), eps).unwrap();
        let half = c(0.0, -0.5 * eps);
        assert_eq!(-d.d1, half);
        assert_eq!(d.d2, half);
        assert_eq!(d.d3, half);
        assert_eq!(d.d4, half);
    }

    #[test]
    fn determinant_unit_case() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let d = LeibnizCoefficients::new(one, zero, zero, one, 0.1).unwrap();
        assert_eq!(d.det(), c(-1.0, 0.0));
        assert!((d.system_matrix().determinant() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_parameters_rejected() {
        let r = c(1.0, 2.0);
        let s = c(-0.5, 0.25);
        // r' = 2r, s' = 2s makes r s' - s r' vanish
        assert!(matches!(
            LeibnizCoefficients::new(r, s, r * 2.0, s * 2.0, 0.1),
            Err(Error::SingularParameters(_))
        ));
        let g = Grid::unit(8).unwrap();
        let f = Path::from_scalar_fn(g, |t| t);
        assert!(leibniz_residual(c(1.0, 0.0), c(2.0, 0.0), Companion::Conjugate, &f, &f).is_err());
    }

    #[test]
    fn closed_form_solves_linear_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (r, s, rp, sp) = (
                random_c(&mut rng),
                random_c(&mut rng),
                random_c(&mut rng),
                random_c(&mut rng),
            );
            let eps = rng.random_range(0.001..0.5);
            let d = LeibnizCoefficients::new(r, s, rp, sp, eps).unwrap();
            // independent route: numeric LU solve of the 4x4 system
            let solved = d.system_matrix().lu().solve(&d.system_rhs()).unwrap();
            let scale = solved.iter().fold(1.0f64, |m, z| m.max(z.norm()));
            for (got, want) in [d.d1, d.d2, d.d3, d.d4].iter().zip(solved.iter()) {
                assert!((got - want).norm() <= 1e-9 * scale, "{got} vs {want}");
            }
            let det = d.system_matrix().determinant();
            assert!((det - d.det()).norm() <= 1e-9 * d.det().norm());
        }
    }

    #[test]
    fn zero_functions_have_zero_residual() {
        let g = Grid::unit(16).unwrap();
        let z = Path::zeros(g, 1);
        let res = leibniz_residual(c(0.5, -0.5), c(0.5, 0.5), Companion::Conjugate, &z, &z).unwrap();
        assert_eq!(res.max_abs, 0.0);
    }

    #[test]
    fn identity_holds_on_random_real_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Grid::unit(64).unwrap();
        for (r, s) in [(c(0.5, -0.5), c(0.5, 0.5)), (c(1.0, 1.0), c(1.0, -2.0))] {
            for _ in 0..20 {
                let f = random_real_path(&mut rng, g);
                let h = random_real_path(&mut rng, g);
                let res = leibniz_residual(r, s, Companion::Conjugate, &f, &h).unwrap();
                assert!(res.relative() <= 1e-12, "{res:?}");
            }
        }
    }

    #[test]
    fn general_companion_also_balances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(-1.0, 1.0, 40).unwrap();
        let f = random_real_path(&mut rng, g);
        let h = random_real_path(&mut rng, g);
        let companion = Companion::Explicit {
            rp: c(0.3, 0.0),
            sp: c(-1.2, 0.4),
        };
        let res = leibniz_residual(c(2.0, 0.0), c(0.7, 0.0), companion, &f, &h).unwrap();
        assert!(res.relative() <= 1e-12);
    }

    #[test]
    fn conjugate_formula_matches_coefficient_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid::unit(32).unwrap();
        for _ in 0..60 {
            let r = random_c(&mut rng);
            let s = random_c(&mut rng);
            // keep s/r away from the real axis so delta stays O(1)
            if (s / r).arg().sin().abs() < 0.2 {
                continue;
            }
            let f = random_real_path(&mut rng, g);
            let h = random_real_path(&mut rng, g);
            let (_, general) = product_rule_sides(r, s, Companion::Conjugate, &f, &h).unwrap();
            let printed = conjugate_formula_rhs(r, s, &f, &h).unwrap();
            let scale = general.iter().fold(1.0f64, |m, z| m.max(z.norm()));
            for (a, b) in general.iter().zip(&printed) {
                assert!(
                    (a - b).norm() <= 1e-12 * scale,
                    "{} vs scale {scale} (r={r}, s={s})",
                    (a - b).norm()
                );
            }
        }
    }

    #[test]
    fn residual_is_bilinear() {
        // The defect LHS - RHS is linear in f for a fixed g, so scaling f
        // scales the raw residual.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Grid::unit(24).unwrap();
        let f = random_real_path(&mut rng, g);
        let h = random_real_path(&mut rng, g);
        let r = c(0.2, 1.1);
        let s = c(-0.4, 0.3);
        let (l1, r1) = product_rule_sides(r, s, Companion::Conjugate, &f, &h).unwrap();
        let (l2, r2) = product_rule_sides(r, s, Companion::Conjugate, &f.scaled(c(3.0, 0.0)), &h).unwrap();
        for k in 0..l1.len() {
            let d1 = l1[k] - r1[k];
            let d2 = l2[k] - r2[k];
            assert!((d2 - d1 * 3.0).norm() <= 1e-10 * (1.0 + l2[k].norm()));
        }
    }
}
