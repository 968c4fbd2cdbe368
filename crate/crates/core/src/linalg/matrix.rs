use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::check_dim;
use crate::error::{Error, Result};

/// Dense symmetric `d×d` matrix. Writes always go through both triangles,
/// so `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    d: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            data: vec![0.0; d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = c;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = Self::zeros(d);
        for (i, v) in values.iter().enumerate() {
            m.data[i * d + i] = *v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts rows that are symmetric up to rounding (relative 1e-12) and
    /// stores the symmetrized average.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for row in rows {
            check_dim(d, row.len())?;
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(d, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Symmetrizes an arbitrary square row-major buffer as `(A + Aᵀ)/2`.
    pub(crate) fn symmetrize(d: usize, data: &[f64]) -> Self {
        Self::from_fn(d, |i, j| 0.5 * (data[i * d + j] + data[j * d + i]))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.d + j] = v;
        self.data[j * self.d + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.d.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += scale · x·xᵀ`
    pub fn add_outer(&mut self, x: &[f64], scale: f64) {
        let d = self.d;
        for i in 0..d {
            let xi = scale * x[i];
            for j in i..d {
                let v = self.data[i * d + j] + xi * x[j];
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.d)
            .map(|row| super::dot(row, x))
            .collect()
    }

    /// `xᵀ·self·x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        super::dot(x, &self.mul_vec(x))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            d: self.d,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.data)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.d == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_nalgebra())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigenvalues (ascending) and matching unit eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let eig = SymmetricEigen::new(self.to_nalgebra());
        let mut order: Vec<usize> = (0..self.d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Errors with [`Error::NotPsd`] when the smallest eigenvalue is below `-tol`.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        let min_eigenvalue = self.min_eigenvalue();
        if min_eigenvalue >= -tol {
            Ok(())
        } else {
            Err(Error::NotPsd { min_eigenvalue })
        }
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        SymMatrix {
            d: self.d,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        SymMatrix {
            d: self.d,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;

    fn mul(self, c: f64) -> SymMatrix {
        self.scale(c)
    }
}

/// Default tolerance for `a ⪯ b`: `1e-9·(1 + ‖b‖_F)`.
pub fn default_psd_tol(b: &SymMatrix) -> f64 {
    1e-9 * (1.0 + b.frobenius_norm())
}

/// Smallest eigenvalue of `b − a`; non-negative iff `a ⪯ b`.
pub fn psd_order_margin(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (b - a).min_eigenvalue()
}

/// `a ⪯ b` in the Loewner order, up to `tol` on the smallest eigenvalue of `b − a`.
pub fn psd_order_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
    psd_order_margin(a, b) >= -tol
}
