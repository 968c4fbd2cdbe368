use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, Result};

/// Symmetric bounded noise with exactly known conditional variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `±b` with probability ½ each.
    RademacherScaled { b: f64 },
    /// `±b` with probability `p/2` each, `0` otherwise.
    TwoPoint { p: f64, b: f64 },
    /// `N(0, s²)` conditioned on `|W| ≤ b`.
    TruncatedGaussian { s: f64, b: f64 },
    /// Uniform on `[−b, b]`.
    Uniform { b: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be positive")))
            }
        };
        match *self {
            Self::RademacherScaled { b } | Self::Uniform { b } => pos("noise.b", b),
            Self::TwoPoint { p, b } => {
                pos("noise.b", b)?;
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid("noise.p", format!("{p} not in (0, 1]")))
                }
            }
            Self::TruncatedGaussian { s, b } => {
                pos("noise.s", s)?;
                pos("noise.b", b)
            }
        }
    }

    /// a.s. bound `B_W`.
    pub fn b_w(&self) -> f64 {
        match *self {
            Self::RademacherScaled { b }
            | Self::TwoPoint { b, .. }
            | Self::TruncatedGaussian { b, .. }
            | Self::Uniform { b } => b,
        }
    }

    /// Exact `E[W²]`.
    pub fn sigma_var_sq(&self) -> f64 {
        match *self {
            Self::RademacherScaled { b } => b * b,
            Self::TwoPoint { p, b } => p * b * b,
            Self::Uniform { b } => b * b / 3.0,
            Self::TruncatedGaussian { s, b } => {
                let beta = b / s;
                let pdf = (-0.5 * beta * beta).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let mass = erf(beta / std::f64::consts::SQRT_2);
                s * s * (1.0 - 2.0 * beta * pdf / mass)
            }
        }
    }

    /// Hoeffding proxy `b²`, valid for every symmetric kind bounded by `b`.
    pub fn sigma_subg_sq(&self) -> f64 {
        self.b_w().powi(2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::RademacherScaled { b } => {
                if rng.random::<bool>() {
                    b
                } else {
                    -b
                }
            }
            Self::TwoPoint { p, b } => {
                let u: f64 = rng.random();
                if u < 0.5 * p {
                    b
                } else if u < p {
                    -b
                } else {
                    0.0
                }
            }
            Self::Uniform { b } => rng.random_range(-b..=b),
            Self::TruncatedGaussian { s, b } => {
                let normal = Normal::new(0.0, s).expect("s > 0");
                loop {
                    let w = normal.sample(rng);
                    if w.abs() <= b {
                        return w;
                    }
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::RademacherScaled { b } => format!("rademacher(b={b})"),
            Self::TwoPoint { p, b } => format!("two_point(p={p},b={b})"),
            Self::TruncatedGaussian { s, b } => format!("truncated_gaussian(s={s},b={b})"),
            Self::Uniform { b } => format!("uniform(b={b})"),
        }
    }
}
