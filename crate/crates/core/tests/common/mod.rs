#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use selfnorm::SymMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `G Gᵀ + floor·I` with `G` a `d×k` Gaussian matrix.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, k: usize, floor: f64) -> SymMatrix {
    let g = DMatrix::<f64>::from_fn(d, k, |_, _| rng.sample(StandardNormal));
    let m = &g * g.transpose() + DMatrix::<f64>::identity(d, d) * floor;
    to_sym(&m)
}

pub fn to_sym(m: &DMatrix<f64>) -> SymMatrix {
    SymMatrix::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn dense(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
}

pub fn dense_logdet(m: &SymMatrix) -> f64 {
    let c = dense(m).cholesky().expect("positive definite");
    2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn dense_quad_inv(m: &SymMatrix, v: &[f64]) -> f64 {
    let a = dense(m);
    let b = DVector::from_column_slice(v);
    let x = a.lu().solve(&b).expect("invertible");
    b.dot(&x)
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Lower bound on `max_{x∈inner} (x−c_out)ᵀΣ_out⁻¹(x−c_out)` by boundary
/// sampling followed by fixed-point ascent `u ← ∇f(u)/‖∇f(u)‖` from the best
/// starts; `f` is convex in `u`, so each step does not decrease it.
pub fn brute_max_form(
    c_out: &[f64],
    s_out: &SymMatrix,
    c_in: &[f64],
    s_in: &SymMatrix,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let d = c_out.len();
    let p = dense(s_out).try_inverse().expect("invertible");
    let l = dense(s_in).cholesky().expect("positive definite").l();
    let off = DVector::from_column_slice(c_in) - DVector::from_column_slice(c_out);
    let f = |u: &DVector<f64>| {
        let y = &off + &l * u;
        (y.transpose() * &p * &y)[(0, 0)]
    };
    let mut starts: Vec<(f64, DVector<f64>)> = (0..samples)
        .map(|_| {
            let g = DVector::from_vec(gaussian_vec(rng, d));
            let u = &g / g.norm();
            (f(&u), u)
        })
        .collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0].0;
    for (_, mut u) in starts.into_iter().take(8) {
        for _ in 0..2000 {
            let grad = l.transpose() * (&p * (&off + &l * &u));
            let n = grad.norm();
            if n == 0.0 {
                break;
            }
            let next = grad / n;
            let moved = (&next - &u).norm();
            u = next;
            if moved < 1e-14 {
                break;
            }
        }
        best = best.max(f(&u));
    }
    best
}
