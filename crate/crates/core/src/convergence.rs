//! Refinement sweeps: operator consistency, discrete-to-classical residual
//! convergence, the Taylor remainder kernel, and order fits.
//!
//! "Locally uniform" convergence is measured as the sup over grid nodes in
//! `[a + delta, b - delta]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler_lagrange::Theta;
use crate::grid::Grid;
use crate::lagrangian::QuadraticLagrangian;
use crate::path::Path;
use crate::stencil::{Direction, Stencil};
use crate::trajectory::Trajectory;

/// Errors at or below this are "exact" when no rounding floor is known.
pub const EXACT_TOL: f64 = 1e-14;

/// Minimum fitted order for a decreasing sweep to count as converging.
pub const MIN_ORDER: f64 = 0.5;

/// Multiple of machine epsilon times the operator scale below which a sweep
/// error is indistinguishable from rounding.
const ROUNDING_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Every error sits at the rounding floor.
    Exact,
    /// Fitted order at least [`MIN_ORDER`] and the last error below the first.
    Converging,
    /// Error at the smallest step exceeds the error at the largest.
    Diverging,
    /// Neither: the error levels off.
    Stagnant,
}

impl Verdict {
    pub fn converges(self) -> bool {
        matches!(self, Verdict::Exact | Verdict::Converging)
    }
}

/// Result of a least-squares order fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderEstimate {
    Exact,
    Order(f64),
}

/// Slope of `log(error)` against `log(eps)` over the positive errors.
pub fn estimate_order(eps: &[f64], errors: &[f64]) -> Result<OrderEstimate> {
    if eps.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: eps.len(),
            got: errors.len(),
        });
    }
    if !errors.is_empty() && errors.iter().all(|&e| e <= EXACT_TOL) {
        return Ok(OrderEstimate::Exact);
    }
    fit_slope(eps, errors).map(OrderEstimate::Order)
}

fn fit_slope(eps: &[f64], errors: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(errors)
        .filter(|(&h, &e)| h > 0.0 && e > 0.0 && e.is_finite())
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Operator,
    Del,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub direction: Direction,
    /// Stencil weights, identical at every step.
    pub gamma: Vec<Complex64>,
    /// Test function or lagrangian label.
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub m: Vec<usize>,
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Rounding floor of each error.
    pub floors: Vec<f64>,
    /// Fitted order; `None` when exact or when too few errors are positive.
    pub order: Option<f64>,
    pub verdict: Verdict,
}

impl SweepReport {
    fn finish(mut self) -> Self {
        let exact = self.errors.iter().zip(&self.floors).all(|(e, f)| e <= f);
        self.order = if exact {
            None
        } else {
            fit_slope(&self.eps, &self.errors).ok()
        };
        let (first, last) = (self.errors[0], *self.errors.last().unwrap());
        self.verdict = if exact {
            Verdict::Exact
        } else if self.order.is_some_and(|o| o >= MIN_ORDER) && last < first {
            Verdict::Converging
        } else if last > first {
            Verdict::Diverging
        } else {
            Verdict::Stagnant
        };
        self
    }

    pub fn estimate_order(&self) -> Result<OrderEstimate> {
        if self.verdict == Verdict::Exact {
            return Ok(OrderEstimate::Exact);
        }
        fit_slope(&self.eps, &self.errors).map(OrderEstimate::Order)
    }
}

/// Grids for a refinement list; `M` must be strictly increasing and the
/// widest stencil reach `2 N eps` must stay below `delta`.
fn sweep_grids(a: f64, b: f64, ms: &[usize], delta: f64, half_width: usize) -> Result<Vec<Grid>> {
    if ms.len() < 2 {
        return Err(Error::InvalidSweep(format!(
            "need at least two values of M, got {}",
            ms.len()
        )));
    }
    if ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep(format!("M values must increase strictly: {ms:?}")));
    }
    let grids = ms.iter().map(|&m| Grid::new(a, b, m)).collect::<Result<Vec<_>>>()?;
    let reach = 2.0 * half_width as f64 * grids[0].step();
    if !(delta > reach) || 2.0 * delta >= b - a {
        return Err(Error::MarginTooSmall { delta, reach });
    }
    Ok(grids)
}

/// `max |Box x - x'|` (or `|Box_-eps x + x'|`) over the margin nodes, for each step.
#[allow(clippy::too_many_arguments)]
pub fn operator_consistency_sweep(
    stencil: &Stencil,
    f: &dyn Trajectory,
    label: &str,
    a: f64,
    b: f64,
    ms: &[usize],
    delta: f64,
    direction: Direction,
) -> Result<SweepReport> {
    let grids = sweep_grids(a, b, ms, delta, stencil.half_width())?;
    let sign = match direction {
        Direction::Plus => 1.0,
        Direction::Minus => -1.0,
    };
    let mut errors = Vec::with_capacity(grids.len());
    let mut floors = Vec::with_capacity(grids.len());
    for grid in &grids {
        let s = stencil.with_step(grid.step())?;
        let x = f.sample(*grid);
        let bx = s.apply(&x, direction)?;
        let mut err: f64 = 0.0;
        for k in grid.margin_nodes(delta) {
            let v = f.velocity(grid.node(k));
            for (i, z) in bx[k].iter().enumerate() {
                err = err.max((z - sign * v[i]).norm());
            }
        }
        errors.push(err);
        floors.push(ROUNDING_FACTOR * f64::EPSILON * x.sup_norm().max(1.0) * s.coefficient_l1());
    }
    Ok(SweepReport {
        kind: SweepKind::Operator,
        direction,
        gamma: stencil.gammas().to_vec(),
        label: label.to_string(),
        a,
        b,
        delta,
        m: ms.to_vec(),
        eps: grids.iter().map(Grid::step).collect(),
        errors,
        floors,
        order: None,
        verdict: Verdict::Stagnant,
    }
    .finish())
}

/// `max |Theta(x) - CEL(x)|` over the margin nodes, for each step.
#[allow(clippy::too_many_arguments)]
pub fn del_convergence_sweep(
    l: &QuadraticLagrangian,
    stencil: &Stencil,
    x: &dyn Trajectory,
    label: &str,
    a: f64,
    b: f64,
    ms: &[usize],
    delta: f64,
) -> Result<SweepReport> {
    if x.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: x.dim(),
        });
    }
    let grids = sweep_grids(a, b, ms, delta, stencil.half_width())?;
    let mut errors = Vec::with_capacity(grids.len());
    let mut floors = Vec::with_capacity(grids.len());
    for grid in &grids {
        let s = stencil.with_step(grid.step())?;
        let path = x.sample(*grid);
        let theta = Theta::new(l, &s, *grid)?.eval(&path)?;
        let c1 = s.coefficient_l1();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for k in grid.margin_nodes(delta) {
            let t = grid.node(k);
            let cel = l.cel_residual(x, t)?;
            for i in 0..l.dim() {
                err = err.max((theta[k][i] - cel[i]).norm());
            }
            let co = l.coefficients(t)?;
            let size = |m: &nalgebra::DMatrix<f64>| m.amax() * l.dim() as f64;
            scale = scale.max(
                path.sup_norm() * (size(&co.p) * c1 * c1 + size(&co.q) + 2.0 * size(&co.r) * c1)
                    + co.j1.amax() * c1
                    + co.j2.amax(),
            );
        }
        errors.push(err);
        floors.push(ROUNDING_FACTOR * f64::EPSILON * scale);
    }
    Ok(SweepReport {
        kind: SweepKind::Del,
        direction: Direction::Plus,
        gamma: stencil.gammas().to_vec(),
        label: label.to_string(),
        a,
        b,
        delta,
        m: ms.to_vec(),
        eps: grids.iter().map(Grid::step).collect(),
        errors,
        floors,
        order: None,
        verdict: Verdict::Stagnant,
    }
    .finish())
}

/// Remainder kernel `G(s, t_k)` at `s = t_k + u`, with the orientation sign
/// of `int_t^{t + l eps}` for negative `l`, so that
/// `Box x = (Box 1) x + (Box t - t Box 1) x' + int G(s, t) x''(s) ds`.
///
/// `G` jumps at `u = 0`; there the right-hand limit is returned.
pub fn kernel_value(stencil: &Stencil, grid: &Grid, k: usize, u: f64) -> Complex64 {
    kernel_limit(stencil, grid, k, u, false)
}

fn kernel_limit(stencil: &Stencil, grid: &Grid, k: usize, u: f64, from_left: bool) -> Complex64 {
    let s = grid.node(k) + u;
    if s < grid.a() || s > grid.b() {
        return Complex64::new(0.0, 0.0);
    }
    let eps = stencil.step();
    let negative_side = u < 0.0 || (u == 0.0 && from_left);
    let mut acc = Complex64::new(0.0, 0.0);
    for ell in stencil.offsets() {
        if ell == 0 || !grid.window(-ell, k) {
            continue;
        }
        let reach = ell as f64 * eps;
        let inside = if ell > 0 {
            !negative_side && u <= reach
        } else {
            negative_side && u >= reach
        };
        if inside {
            let orient = if ell < 0 { -1.0 } else { 1.0 };
            acc += stencil.coefficient(ell) * (orient * (reach - u));
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// Sup of `|G(s, t)|` over `s` in `[a, b]`, `t` at margin nodes.
    pub sup_g: f64,
    /// `2 max(|b-a|, 2|a|, 2|b|) ||Box 1|| + N eps sum|c_l| + eps sum|l c_l|`.
    pub bound: f64,
    pub holds: bool,
    /// `||Box 1||` over margin nodes.
    pub box_one: f64,
    /// Sup over margin nodes of `int |G(s, t)| ds`.
    pub integrated: f64,
}

/// `int_0^h |v(s)| ds` for `v` linear from `v0` to `v1` (composite Simpson;
/// `|v|` is convex along the segment).
fn segment_abs_integral(v0: Complex64, v1: Complex64, h: f64) -> f64 {
    let n = 16;
    let step = h / n as f64;
    let f = |i: usize| (v0 + (v1 - v0) * (i as f64 / n as f64)).norm();
    let mut acc = f(0) + f(n);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    acc * step / 3.0
}

pub fn kernel_bound_check(stencil: &Stencil, grid: Grid, delta: f64) -> Result<KernelReport> {
    stencil.check_grid(&grid)?;
    let n = stencil.half_width() as isize;
    let eps = grid.step();
    let one = Path::from_scalar_fn(grid, |_| 1.0);
    let box_one_values = stencil.apply(&one, Direction::Plus)?;
    let nodes = grid.margin_nodes(delta);
    let box_one = nodes.clone().map(|k| box_one_values[k][0].norm()).fold(0.0, f64::max);
    let mut sup_g: f64 = 0.0;
    let mut integrated: f64 = 0.0;
    for k in nodes {
        let mut total = 0.0;
        for j in -n..n {
            let (u0, u1) = (j as f64 * eps, (j + 1) as f64 * eps);
            // G is linear on each cell; take the inner limits at the jump u = 0
            let v0 = kernel_limit(stencil, &grid, k, u0, false);
            let v1 = kernel_limit(stencil, &grid, k, u1, true);
            sup_g = sup_g.max(v0.norm()).max(v1.norm());
            total += segment_abs_integral(v0, v1, u1 - u0);
        }
        integrated = integrated.max(total);
    }
    let c1 = stencil.coefficient_l1();
    let lc1: f64 = stencil
        .offsets()
        .map(|l| (l as f64 * stencil.coefficient(l)).norm())
        .sum();
    let (a, b) = (grid.a(), grid.b());
    let span = (b - a).abs().max(2.0 * a.abs()).max(2.0 * b.abs());
    let bound = 2.0 * span * box_one + n as f64 * eps * c1 + eps * lc1;
    Ok(KernelReport {
        sup_g,
        bound,
        holds: sup_g <= bound * (1.0 + 1e-12),
        box_one,
        integrated,
    })
}
