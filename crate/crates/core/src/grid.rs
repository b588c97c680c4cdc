use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of `[a, b]` with `M` subdivisions.
///
/// The step is always derived as `(b - a) / M`, so every shift `t_k + l*eps`
/// that stays in `[a, b]` lands exactly on another node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b && m > 0) {
            return Err(Error::InvalidGrid { a, b, m });
        }
        Ok(Grid { a, b, m })
    }

    /// `[0, 1]` split into `m` cells.
    pub fn unit(m: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, m)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Number of subdivisions `M`.
    pub fn subdivisions(&self) -> usize {
        self.m
    }

    /// Number of nodes, `M + 1`.
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    /// Node `t_k`. Computed from the interval so that `t_M == b` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.m {
            self.b
        } else {
            self.a + (self.b - self.a) * (k as f64 / self.m as f64)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.m).map(move |k| self.node(k))
    }

    /// Characteristic window `chi_l(t_k)`: indicator of
    /// `[max(a, a + l*eps), min(b, b + l*eps)]` evaluated at node `k`,
    /// closed at both ends. On nodes this is `0 <= k - l <= M`.
    pub fn window(&self, ell: isize, k: usize) -> bool {
        if k > self.m {
            return false;
        }
        let shifted = k as isize - ell;
        shifted >= 0 && shifted <= self.m as isize
    }

    /// Index `k + l` when it is a valid node.
    pub fn shifted(&self, k: usize, ell: isize) -> Option<usize> {
        let j = k as isize + ell;
        (j >= 0 && j <= self.m as isize).then_some(j as usize)
    }

    /// `[a + 2N eps, b - 2N eps]`, or `None` when `4 N eps > b - a`.
    pub fn safety_interval(&self, half_width: usize) -> Option<(f64, f64)> {
        self.safety_nodes(half_width)
            .map(|r| (self.node(*r.start()), self.node(*r.end())))
    }

    /// Node indices of the safety interval, `2N ..= M - 2N`.
    pub fn safety_nodes(&self, half_width: usize) -> Option<RangeInclusive<usize>> {
        let reach = 2 * half_width;
        (2 * reach <= self.m).then(|| reach..=self.m - reach)
    }

    /// Fails with [`Error::EmptySafetyInterval`] when `4 N eps > b - a`.
    pub fn require_safety_interval(&self, half_width: usize) -> Result<RangeInclusive<usize>> {
        self.safety_nodes(half_width).ok_or(Error::EmptySafetyInterval {
            width: 4.0 * half_width as f64 * self.step(),
            length: self.length(),
        })
    }

    /// Nodes lying in `[a + delta, b - delta]`.
    pub fn margin_nodes(&self, delta: f64) -> RangeInclusive<usize> {
        let cells = delta / self.step();
        // Nodes sitting on a + delta up to rounding are included.
        let first = (cells - 1e-9).ceil().max(0.0) as usize;
        let last = self.m.saturating_sub(first);
        first..=last
    }

    /// Mirror index: `t_{M-k} = a + b - t_k`.
    pub fn reflect(&self, k: usize) -> usize {
        self.m - k
    }
}
