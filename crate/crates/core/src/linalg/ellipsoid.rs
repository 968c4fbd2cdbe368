use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_dim, cholesky, CholFactor, SymMatrix};
use crate::error::Result;

/// The set `{x : (x − center)ᵀ · shape⁻¹ · (x − center) ≤ 1}`.
///
/// `shape` must be positive definite; the Cholesky factor is computed once at
/// construction and doubles as the PD check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    center: Vec<f64>,
    shape: SymMatrix,
    chol: CholFactor,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: SymMatrix) -> Result<Self> {
        check_dim(shape.dim(), center.len())?;
        let chol = cholesky(&shape)?;
        Ok(Self {
            center,
            shape,
            chol,
        })
    }

    pub fn unit_ball(d: usize) -> Self {
        Self::new(vec![0.0; d], SymMatrix::identity(d)).expect("identity is PD")
    }

    /// The set `{x : (x − center)ᵀ · precision · (x − center) ≤ level}`,
    /// i.e. `shape = level · precision⁻¹`.
    pub fn from_precision(center: Vec<f64>, precision: &SymMatrix, level: f64) -> Result<Self> {
        let inv = cholesky(precision)?.inverse();
        Self::new(center, inv.scale(level))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &SymMatrix {
        &self.shape
    }

    pub fn shape_factor(&self) -> &CholFactor {
        &self.chol
    }

    pub fn logdet_shape(&self) -> f64 {
        self.chol.logdet()
    }

    /// `(x − c)ᵀ Σ⁻¹ (x − c)`.
    pub fn form(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.chol.quad_form_inv(&diff)
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.form(x) <= 1.0 + tol
    }

    pub fn translated(&self, center: Vec<f64>) -> Result<Self> {
        Self::new(center, self.shape.clone())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        sample_uniform_ellipsoid(self, rng)
    }
}

/// Uniform draw from the ellipsoid: `center + L·(r·u)` with `u` a normalized
/// Gaussian direction and `r = U^{1/d}`.
pub fn sample_uniform_ellipsoid<R: Rng + ?Sized>(e: &Ellipsoid, rng: &mut R) -> Vec<f64> {
    let d = e.dim();
    let u = unit_ball_point(d, rng);
    let mut x = e.chol.lower_mul(&u);
    for (xi, ci) in x.iter_mut().zip(&e.center) {
        *xi += ci;
    }
    x
}

pub(crate) fn unit_sphere_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = super::norm_sq(&g).sqrt();
        if n > 0.0 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

pub(crate) fn unit_ball_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut u = unit_sphere_point(d, rng);
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    u.iter_mut().for_each(|v| *v *= r);
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn unit_ball_draws_stay_inside() {
        let e = Ellipsoid::unit_ball(4);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = e.sample(&mut rng);
            assert!(crate::linalg::norm_sq(&x) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn one_dimensional_second_moment_is_one_third() {
        let e = Ellipsoid::unit_ball(1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 100_000;
        let m2: f64 = (0..n).map(|_| e.sample(&mut rng)[0].powi(2)).sum::<f64>() / n as f64;
        assert!((m2 - 1.0 / 3.0).abs() <= 0.01, "{m2}");
    }

    #[test]
    fn rejects_non_pd_shape() {
        assert!(Ellipsoid::new(vec![0.0, 0.0], SymMatrix::diag(&[1.0, 0.0])).is_err());
        assert!(Ellipsoid::new(vec![0.0], SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn from_precision_matches_shape_convention() {
        let p = SymMatrix::diag(&[4.0, 1.0]);
        let e = Ellipsoid::from_precision(vec![0.0, 0.0], &p, 2.0).unwrap();
        assert!((e.shape().get(0, 0) - 0.5).abs() < 1e-15);
        assert!((e.shape().get(1, 1) - 2.0).abs() < 1e-15);
        // boundary point of xᵀPx = 2 along the first axis
        let x = [(2.0f64 / 4.0).sqrt(), 0.0];
        assert!((e.form(&x) - 1.0).abs() < 1e-14);
    }
}
