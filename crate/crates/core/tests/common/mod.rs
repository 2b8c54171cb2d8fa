#![allow(dead_code)]

use gradkit_core::linalg::{matmul, Matrix, Vector};
use gradkit_core::QuadraticForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>().into()
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..r * c).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::new(r, c, data).unwrap()
}

/// Orthonormal columns by twice-applied Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut cols: Vec<Vector> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = gaussian_vector(d, rng);
        for _ in 0..2 {
            for u in &cols {
                let p = u.dot(&v);
                v = v.axpy(-p, u);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.scaled(1.0 / n));
        }
    }
    Matrix::from_columns(&cols).unwrap()
}

/// `Q diag(eigs) Qᵀ` for a random orthogonal `Q`, symmetrised.
pub fn with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let q = random_orthogonal(eigs.len(), rng);
    let qd = matmul(&q, &Matrix::from_diag(eigs)).unwrap();
    matmul(&qd, &q.transpose()).unwrap().symmetrized()
}

/// Eigenvalues log-uniform in `[1, kappa]` with both endpoints present.
pub fn log_spectrum(d: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d)
        .map(|i| match i {
            0 => kappa,
            1 => 1.0,
            _ => kappa.powf(rng.random::<f64>()),
        })
        .collect()
}

pub fn random_spd(d: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Matrix {
    if d == 1 {
        return Matrix::from_diag(&[kappa]);
    }
    let eigs = log_spectrum(d, kappa, rng);
    with_spectrum(&eigs, rng)
}

/// `GᵀG + 1e−3·I`
pub fn gram_spd(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian_matrix(d, d, rng);
    let mut a = matmul(&g.transpose(), &g).unwrap();
    for i in 0..d {
        a[(i, i)] += 1e-3;
    }
    a
}

pub fn random_quadratic(d: usize, kappa: f64, rng: &mut ChaCha8Rng) -> QuadraticForm {
    let a = random_spd(d, kappa, rng);
    let b = gaussian_vector(d, rng);
    QuadraticForm::new(a, b, 0.0).unwrap()
}

pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
}
