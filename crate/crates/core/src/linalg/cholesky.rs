//! Cholesky factorization `M = L·Lᵀ` with a cached log-determinant.

use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a positive-definite matrix.
///
/// `lower` is stored row-major as a full `d×d` buffer; the strict upper
/// triangle is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholFactor {
    d: usize,
    lower: Vec<f64>,
    logdet: f64,
}

/// Factors `m`. Fails with [`Error::NotPositiveDefinite`] on the first pivot
/// that is `≤ 0` or not finite.
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor> {
    cholesky_with_floor(m, 0.0)
}

/// As [`cholesky`], but pivots must exceed `floor` (an absolute threshold on
/// the squared diagonal entry).
pub(crate) fn cholesky_with_floor(m: &SymMatrix, floor: f64) -> Result<CholFactor> {
    let d = m.dim();
    let mut lower = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= lower[j * d + k] * lower[j * d + k];
        }
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        lower[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= lower[i * d + k] * lower[j * d + k];
            }
            lower[i * d + j] = s / ljj;
        }
    }
    let mut f = CholFactor {
        d,
        lower,
        logdet: 0.0,
    };
    f.logdet = f.logdet_from_diagonal();
    Ok(f)
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// `log det(L·Lᵀ)`.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.d + j]
    }

    fn logdet_from_diagonal(&self) -> f64 {
        2.0 * (0..self.d)
            .map(|i| self.lower[i * self.d + i].ln())
            .sum::<f64>()
    }

    /// Factor of `L·Lᵀ + x·xᵀ`. O(d²).
    pub fn rank_one_update(&self, x: &[f64]) -> CholFactor {
        let mut out = self.clone();
        out.update_in_place(x);
        out
    }

    /// In-place variant of [`CholFactor::rank_one_update`].
    pub fn update_in_place(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.d, "dimension mismatch in rank-one update");
        let d = self.d;
        let mut v = x.to_vec();
        for j in 0..d {
            let vj = v[j];
            if vj == 0.0 {
                continue;
            }
            let ljj = self.lower[j * d + j];
            let r = ljj.hypot(vj);
            let c = r / ljj;
            let s = vj / ljj;
            self.lower[j * d + j] = r;
            for i in (j + 1)..d {
                let lij = (self.lower[i * d + j] + s * v[i]) / c;
                self.lower[i * d + j] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
        self.logdet = self.logdet_from_diagonal();
    }

    /// `L⁻¹·b` by forward substitution.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut y = b.to_vec();
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / self.lower[i * d + i];
        }
        y
    }

    /// `L⁻ᵀ·b` by back substitution.
    pub fn backward_solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut y = b.to_vec();
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s -= self.lower[k * d + i] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
        y
    }

    /// Solves `(L·Lᵀ)·y = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.d, "dimension mismatch in solve");
        self.backward_solve(&self.forward_solve(b))
    }

    /// `vᵀ·(L·Lᵀ)⁻¹·v = ‖L⁻¹v‖²`.
    pub fn quad_form_inv(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.d, "dimension mismatch in quad_form_inv");
        super::norm_sq(&self.forward_solve(v))
    }

    /// `L·v`.
    pub fn lower_mul(&self, v: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|i| super::dot(&self.lower[i * d..=i * d + i], &v[..=i]))
            .collect()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.d;
        SymMatrix::from_fn(d, |i, j| {
            let m = i.min(j);
            (0..=m)
                .map(|k| self.lower[i * d + k] * self.lower[j * d + k])
                .sum()
        })
    }

    /// `(L·Lᵀ)⁻¹` via `d` solves against the identity.
    pub fn inverse(&self) -> SymMatrix {
        let d = self.d;
        let mut cols = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..d {
                cols[i * d + j] = col[i];
            }
        }
        SymMatrix::symmetrize(d, &cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_and_diagonal() {
        let f = cholesky(&SymMatrix::identity(2)).unwrap();
        assert_eq!(f.reconstruct(), SymMatrix::identity(2));
        assert_eq!(f.logdet(), 0.0);

        let f = cholesky(&SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert_eq!(f.lower(0, 0), 2.0);
        assert_eq!(f.lower(1, 1), 3.0);
        assert_eq!(f.lower(1, 0), 0.0);
        assert!(close(f.logdet(), 36f64.ln(), 1e-14));
    }

    #[test]
    fn two_by_two_logdet() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(close(cholesky(&m).unwrap().logdet(), 3f64.ln(), 1e-14));
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        assert!(cholesky(&SymMatrix::zeros(1)).is_err());
        assert!(cholesky(&SymMatrix::diag(&[1.0, f64::NAN])).is_err());
    }

    #[test]
    fn rank_one_examples() {
        let f = cholesky(&SymMatrix::identity(1)).unwrap().rank_one_update(&[1.0]);
        assert!(close(f.reconstruct().get(0, 0), 2.0, 1e-15));
        assert!(close(f.logdet(), 2f64.ln(), 1e-15));

        let base = cholesky(&SymMatrix::diag(&[3.0, 5.0])).unwrap();
        assert_eq!(base.rank_one_update(&[0.0, 0.0]), base);

        // oracle: factor the summed matrix from scratch
        let f = cholesky(&SymMatrix::identity(2))
            .unwrap()
            .rank_one_update(&[1.0, 1.0]);
        let summed = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let direct = cholesky(&summed).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(f.lower(i, j), direct.lower(i, j), 1e-15));
            }
        }
        assert!(close(f.logdet(), 3f64.ln(), 1e-15));
    }

    #[test]
    fn solve_and_quad_form_small_cases() {
        let id = cholesky(&SymMatrix::identity(3)).unwrap();
        assert_eq!(id.solve(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
        assert_eq!(id.quad_form_inv(&[1.0, -2.0, 3.0]), 14.0);
        let f4 = cholesky(&SymMatrix::diag(&[4.0])).unwrap();
        assert_eq!(f4.solve(&[8.0]), vec![2.0]);
        assert_eq!(f4.quad_form_inv(&[2.0]), 1.0);
        assert_eq!(f4.quad_form_inv(&[0.0]), 0.0);
    }

    #[test]
    fn solve_residual_on_pd_system() {
        let m = SymMatrix::from_rows(&[
            vec![6.0, 1.0, 0.5, 0.2, 0.1],
            vec![1.0, 5.0, 0.3, 0.4, 0.0],
            vec![0.5, 0.3, 4.0, 0.6, 0.7],
            vec![0.2, 0.4, 0.6, 3.0, 0.2],
            vec![0.1, 0.0, 0.7, 0.2, 2.0],
        ])
        .unwrap();
        let b = [1.0, -2.0, 0.5, 3.0, -1.0];
        let y = cholesky(&m).unwrap().solve(&b);
        let r: Vec<f64> = m.mul_vec(&y).iter().zip(&b).map(|(a, c)| a - c).collect();
        assert!(dot(&r, &r).sqrt() <= 1e-10 * dot(&b, &b).sqrt());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let inv = cholesky(&m).unwrap().inverse();
        let prod = m.to_nalgebra() * inv.to_nalgebra();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!(close(prod[(i, j)], e, 1e-14));
            }
        }
    }
}
