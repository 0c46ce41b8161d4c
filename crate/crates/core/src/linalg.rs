//! Banded LU with partial pivoting (LAPACK `dgbtrf`-style storage) and
//! finite-difference stencil weights. The Newton collocation systems for the
//! front profiles are banded with small bandwidth, so a dense solve would be
//! wasteful at the grid sizes involved.

use nalgebra::{DMatrix, DVector};

use crate::error::{LvError, Result};

/// Band matrix in column-major band storage with room for pivoting fill-in.
///
/// Entry `(i, j)` with `j - ku <= i <= j + kl` lives at band row
/// `kl + ku + i - j` of column `j`; rows `0..kl` hold fill-in.
pub struct BandedMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && i <= j + self.kl);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// In-place LU factorization with partial pivoting; returns the pivot
    /// vector. Fails on a numerically singular pivot.
    pub fn lu_factor(&mut self) -> Result<Vec<usize>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search in column j, rows j..=j+km
            let mut p = j;
            let mut pmax = self.get(j, j).abs();
            for i in j + 1..=j + km {
                let a = self.get(i, j).abs();
                if a > pmax {
                    pmax = a;
                    p = i;
                }
            }
            ipiv[j] = p;
            if pmax == 0.0 {
                return Err(LvError::NoConvergence { residual: f64::NAN });
            }
            let jend = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=jend {
                    let a = self.get(j, c);
                    let b = self.get(p, c);
                    self.set(j, c, b);
                    self.set(p, c, a);
                }
            }
            let piv = self.get(j, j);
            for i in j + 1..=j + km {
                let l = self.get(i, j) / piv;
                self.set(i, j, l);
                if l != 0.0 {
                    for c in j + 1..=jend {
                        let v = self.get(i, c) - l * self.get(j, c);
                        self.set(i, c, v);
                    }
                }
            }
        }
        Ok(ipiv)
    }

    /// Solve `L U x = P b` after `lu_factor`.
    pub fn lu_solve(&self, ipiv: &[usize], b: &mut [f64]) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let p = ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for i in j + 1..=j + km {
                b[i] -= self.get(i, j) * b[j];
            }
        }
        for j in (0..n).rev() {
            let jend = (j + kl + ku).min(n - 1);
            let mut s = b[j];
            for c in j + 1..=jend {
                s -= self.get(j, c) * b[c];
            }
            b[j] = s / self.get(j, j);
        }
    }
}

/// Finite-difference weights for the `m`-th derivative on the node offsets
/// `offsets` (in units of the evaluation point): solves the moment system
/// `sum_j w_j s_j^p = p! [p == m]`, `p = 0..len-1`.
pub fn fd_weights(offsets: &[f64], m: usize) -> Vec<f64> {
    let n = offsets.len();
    assert!(m < n);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for p in 0..n {
        for (j, &s) in offsets.iter().enumerate() {
            a[(p, j)] = s.powi(p as i32);
        }
    }
    rhs[m] = (1..=m).map(|k| k as f64).product::<f64>().max(1.0);
    let sol = a.lu().solve(&rhs).expect("Vandermonde system is nonsingular");
    sol.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_matches_dense() {
        // pseudo-random but deterministic banded system vs dense LU
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                let v = rnd() + if i == j { 4.0 } else { 0.0 };
                band.set(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let x_true = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
        let b = &dense * &x_true;
        let mut rhs: Vec<f64> = b.iter().copied().collect();
        let ipiv = band.lu_factor().unwrap();
        band.lu_solve(&ipiv, &mut rhs);
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).abs() < 1e-11, "i={i}");
        }
    }

    #[test]
    fn banded_needs_pivoting() {
        // zero on the diagonal forces a row swap
        let mut band = BandedMatrix::zeros(2, 1, 1);
        band.set(0, 0, 0.0);
        band.set(0, 1, 1.0);
        band.set(1, 0, 1.0);
        band.set(1, 1, 1.0);
        let mut rhs = vec![2.0, 3.0];
        let ipiv = band.lu_factor().unwrap();
        band.lu_solve(&ipiv, &mut rhs);
        // x + y = 3, y = 2
        assert!((rhs[0] - 1.0).abs() < 1e-14);
        assert!((rhs[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fd_weights_classic_stencils() {
        // centered 3-point second derivative: (1, -2, 1)/h^2
        let w = fd_weights(&[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] + 2.0).abs() < 1e-12);
        assert!((w[2] - 1.0).abs() < 1e-12);
        // centered 5-point first derivative: (1, -8, 0, 8, -1)/12
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // exactness on polynomials for a 6-point midpoint second derivative
        let offs = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
        let w = fd_weights(&offs, 2);
        for deg in 0..6 {
            let d2: f64 = offs
                .iter()
                .zip(&w)
                .map(|(&s, &wj)| wj * s.powi(deg))
                .sum();
            let expect = if deg == 2 { 2.0 } else { 0.0 };
            assert!((d2 - expect).abs() < 1e-10, "deg {deg}");
        }
    }
}
