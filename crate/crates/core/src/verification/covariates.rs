use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{norm_sq, SymMatrix};

/// Bounded covariate processes. Each draw depends only on the past of the
/// covariate process itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateModel {
    /// Cycles through the listed vectors.
    FixedDesign { vectors: Vec<Vec<f64>> },
    /// Uniform on the sphere of the given radius.
    RandomSphere { radius: f64 },
    /// `X_{k+1} = clip_r(A·X_k + scale·ξ_k)` with `X_0 = 0`, `ξ` standard normal
    /// and `clip_r` the projection onto the ball of radius `r`.
    Ar1 {
        a: Vec<Vec<f64>>,
        noise_scale: f64,
        radius: f64,
    },
}

impl CovariateModel {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Self::FixedDesign { vectors } => {
                if vectors.is_empty() {
                    return Err(invalid("covariates.vectors", "empty design"));
                }
                if vectors.iter().any(|v| v.len() != d) {
                    return Err(invalid("covariates.vectors", format!("every vector needs length {d}")));
                }
                Ok(())
            }
            Self::RandomSphere { radius } => {
                if *radius > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("covariates.radius", "must be positive"))
                }
            }
            Self::Ar1 { a, noise_scale, radius } => {
                if a.len() != d || a.iter().any(|r| r.len() != d) {
                    return Err(invalid("covariates.a", format!("must be {d}x{d}")));
                }
                if !(*radius > 0.0) || !(*noise_scale >= 0.0) {
                    return Err(invalid("covariates.radius", "radius > 0 and noise_scale ≥ 0 required"));
                }
                Ok(())
            }
        }
    }

    /// Radius `r` with `‖X‖ ≤ r` a.s.
    pub fn radius(&self) -> f64 {
        match self {
            Self::FixedDesign { vectors } => vectors.iter().map(|v| norm_sq(v)).fold(0.0, f64::max).sqrt(),
            Self::RandomSphere { radius } | Self::Ar1 { radius, .. } => *radius,
        }
    }

    /// `B_X² = r²·I`, so `XXᵀ ⪯ B_X²` a.s.
    pub fn b_x_sq(&self, d: usize) -> SymMatrix {
        SymMatrix::scaled_identity(d, self.radius().powi(2))
    }

    pub fn stream(&self, d: usize) -> CovariateStream {
        CovariateStream {
            model: self.clone(),
            k: 0,
            prev: vec![0.0; d],
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::FixedDesign { vectors } => format!("fixed_design(n={})", vectors.len()),
            Self::RandomSphere { radius } => format!("random_sphere(r={radius})"),
            Self::Ar1 { radius, .. } => format!("ar1(r={radius})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CovariateStream {
    model: CovariateModel,
    k: usize,
    prev: Vec<f64>,
}

impl CovariateStream {
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let d = self.prev.len();
        let x = match &self.model {
            CovariateModel::FixedDesign { vectors } => vectors[self.k % vectors.len()].clone(),
            CovariateModel::RandomSphere { radius } => {
                let u = crate::linalg::unit_sphere_point(d, rng);
                u.into_iter().map(|v| v * radius).collect()
            }
            CovariateModel::Ar1 { a, noise_scale, radius } => {
                let mut x: Vec<f64> = a
                    .iter()
                    .map(|row| crate::linalg::dot(row, &self.prev))
                    .collect();
                for xi in &mut x {
                    let xi_noise: f64 = rng.sample(StandardNormal);
                    *xi += noise_scale * xi_noise;
                }
                let n = norm_sq(&x).sqrt();
                if n > *radius {
                    x.iter_mut().for_each(|v| *v *= radius / n);
                }
                x
            }
        };
        self.k += 1;
        self.prev.clone_from(&x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_order_leq;
    use crate::verification::trial_rng;

    #[test]
    fn draws_respect_the_bound() {
        let d = 3;
        let models = [
            CovariateModel::FixedDesign {
                vectors: vec![vec![1.0, 0.0, 0.0], vec![0.3, -0.4, 0.5]],
            },
            CovariateModel::RandomSphere { radius: 2.0 },
            CovariateModel::Ar1 {
                a: vec![vec![0.9, 0.1, 0.0], vec![0.0, 0.9, 0.1], vec![0.1, 0.0, 0.9]],
                noise_scale: 1.0,
                radius: 1.5,
            },
        ];
        for m in &models {
            m.validate(d).unwrap();
            let bx = m.b_x_sq(d);
            let mut rng = trial_rng(3, 0);
            let mut s = m.stream(d);
            for _ in 0..2000 {
                let x = s.next(&mut rng);
                let mut xx = SymMatrix::zeros(d);
                xx.add_outer(&x, 1.0);
                assert!(psd_order_leq(&xx, &bx, 1e-12), "{}", m.label());
            }
        }
    }

    #[test]
    fn fixed_design_cycles() {
        let m = CovariateModel::FixedDesign {
            vectors: vec![vec![1.0], vec![2.0]],
        };
        let mut rng = trial_rng(0, 0);
        let mut s = m.stream(1);
        let xs: Vec<f64> = (0..5).map(|_| s.next(&mut rng)[0]).collect();
        assert_eq!(xs, vec![1.0, 2.0, 1.0, 2.0, 1.0]);
    }
}
