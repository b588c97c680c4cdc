//! Complex band matrices and their LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK general-band layout: column `j` holds entries
//! `i` in `j-ku-kl ..= j+kl` at row `kl + ku + i - j` of a `(2kl + ku + 1) x n`
//! column-major array. The extra `kl` rows absorb pivoting fill-in.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![ZERO; ldab * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    fn index(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            ZERO
        }
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let idx = self.index(i, j);
        self.data[idx] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.index(i, j)] * x[j];
            }
        }
        y
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| {
                let lo = j.saturating_sub(self.ku);
                let hi = (j + self.kl).min(self.n - 1);
                (lo..=hi).map(|i| self.get(i, j).norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Factorizes `A = P L U`. An exactly zero pivot is reported as an
    /// infinite condition number.
    pub fn lu(&self) -> Result<BandLu> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let anorm = self.norm1();
        let mut ab = self.data.clone();
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = -1.0;
            for i in 0..=km {
                let v = ab[kv + i + col].norm();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if ab[kv + jp + col] == ZERO {
                return Err(Error::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(kv + j - c + c * ldab, kv + j + jp - c + c * ldab);
                }
            }
            if km > 0 {
                let pivot = ab[kv + col];
                for i in 1..=km {
                    ab[kv + i + col] /= pivot;
                }
                for c in j + 1..=ju {
                    let u = ab[kv + j - c + c * ldab];
                    if u == ZERO {
                        continue;
                    }
                    for i in 1..=km {
                        let l = ab[kv + i + col];
                        ab[kv + j + i - c + c * ldab] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            kv,
            ldab,
            ab,
            ipiv,
            anorm,
        })
    }
}

/// Band LU factors with row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
    anorm: f64,
}

impl BandLu {
    fn l(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.kv + i - j + j * self.ldab]
    }

    fn u(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.kv + i - j + j * self.ldab]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= self.l(j + i, j) * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.u(j, j);
            let bj = b[j];
            for i in j.saturating_sub(self.kv)..j {
                b[i] -= self.u(i, j) * bj;
            }
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(self.kv)..j {
                acc -= self.u(i, j).conj() * b[i];
            }
            b[j] = acc / self.u(j, j).conj();
        }
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let mut acc = b[j];
            for i in 1..=km {
                acc -= self.l(j + i, j).conj() * b[j + i];
            }
            b[j] = acc;
            b.swap(j, self.ipiv[j]);
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Lower estimate of `||A^-1||_1` (Hager's method with Higham's
    /// alternating test vector).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let norm1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            self.solve_in_place(&mut x);
            let new_est = norm1(&x);
            if iter > 0 && new_est <= est {
                break;
            }
            est = new_est;
            let mut z: Vec<Complex64> = x
                .iter()
                .map(|y| {
                    if y.norm() > 0.0 {
                        y / y.norm()
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            self.solve_adjoint_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if j == last_j || (iter > 0 && zmax <= est / n as f64) {
                break;
            }
            last_j = j;
            x = vec![ZERO; n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        let mut alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let ramp = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                Complex64::new(sign * (1.0 + ramp), 0.0)
            })
            .collect();
        self.solve_in_place(&mut alt);
        est.max(2.0 * norm1(&alt) / (3.0 * n as f64))
    }

    /// Estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.anorm * self.inverse_norm1_estimate()
    }
}
