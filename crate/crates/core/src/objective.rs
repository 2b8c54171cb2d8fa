//! Objective functions: the quadratic testbed and a small softmax MLP trained
//! on synthetic Gaussian blobs.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, cholesky, Matrix, Vector};

/// A differentiable loss `L(x)`.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> Result<f64>;

    fn gradient(&self, x: &Vector) -> Result<Vector>;

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &Vector) -> Result<Vector> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        (**self).hessian(x)
    }
}

/// `½xᵀAx − bᵀx + c`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    a: Matrix,
    b: Vector,
    c: f64,
    sym_h: Matrix,
}

impl QuadraticForm {
    pub fn new(a: Matrix, b: Vector, c: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        check_dim(a.rows(), b.dim())?;
        let sym_h = a.symmetrized();
        Ok(QuadraticForm { a, b, c, sym_h })
    }

    /// `½xᵀAx` with no linear or constant term.
    pub fn homogeneous(a: Matrix) -> Result<Self> {
        let d = a.rows();
        Self::new(a, Vector::zeros(d), 0.0)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// ½(Aᵀ + A)
    pub fn hessian_matrix(&self) -> &Matrix {
        &self.sym_h
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(0.5 * self.a.bilinear(x, x) - self.b.dot(x) + self.c)
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.sym_h.mul_vec(x).sub(&self.b))
    }

    /// Solves `½(Aᵀ+A)x = b` by Cholesky.
    pub fn minimizer(&self) -> Result<Vector> {
        let f = cholesky(&self.sym_h).map_err(|e| match e {
            Error::NotPositiveDefinite => Error::Singular,
            other => other,
        })?;
        f.solve(&self.b)
    }

    /// `b − Ax`
    pub fn residual(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.b.sub(&self.a.mul_vec(x)))
    }
}

impl Objective for QuadraticForm {
    fn dim(&self) -> usize {
        QuadraticForm::dim(self)
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        QuadraticForm::value(self, x)
    }
    fn gradient(&self, x: &Vector) -> Result<Vector> {
        QuadraticForm::gradient(self, x)
    }
    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.sym_h.clone())
    }
}

/// Euclidean projection onto `{x : xᵀx ≤ cap}`.
pub fn project_l2_ball(x: &Vector, cap: f64) -> Vector {
    let n2 = x.norm_sq();
    if n2 <= cap {
        x.clone()
    } else {
        x.scaled(libm::sqrt(cap) / libm::sqrt(n2))
    }
}

/// Dataset positions making up one mini-batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatch {
    pub indices: Vec<usize>,
}

impl MiniBatch {
    pub fn new(indices: Vec<usize>) -> Self {
        MiniBatch { indices }
    }

    pub fn all(n: usize) -> Self {
        MiniBatch { indices: (0..n).collect() }
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Whether dropout is active; train mode draws masks from the given generator.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// A loss defined as a mean over samples, evaluated on mini-batches.
pub trait StochasticObjective {
    fn dim(&self) -> usize;

    fn num_samples(&self) -> usize;

    fn loss_and_grad(&self, x: &Vector, batch: &MiniBatch, mode: Mode<'_>) -> Result<(f64, Vector)>;

    fn full_loss_and_grad(&self, x: &Vector) -> Result<(f64, Vector)> {
        self.loss_and_grad(x, &MiniBatch::all(self.num_samples()), Mode::Eval)
    }
}

/// One-hidden-layer ReLU network with inverted dropout and a softmax output.
///
/// Weights are one flat vector: `W₁` (hidden × input, row-major), `b₁`,
/// `W₂` (classes × hidden, row-major), `b₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpTask {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub weights: Vector,
    pub dataset: Vec<(Vector, usize)>,
    pub rng_seed: u64,
}

impl MlpTask {
    pub fn new(
        dataset: Vec<(Vector, usize)>,
        num_classes: usize,
        hidden_width: usize,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let input_dim = dataset.first().map_or(0, |(x, _)| x.dim());
        if input_dim == 0 || num_classes == 0 || hidden_width == 0 {
            return Err(Error::InvalidSpec("mlp needs a non-empty dataset, classes and hidden units"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidSpec("dropout rate must lie in [0, 1)"));
        }
        for (x, y) in &dataset {
            check_dim(input_dim, x.dim())?;
            if *y >= num_classes {
                return Err(Error::InvalidSpec("label out of range"));
            }
        }
        let mut task = MlpTask {
            input_dim,
            hidden_width,
            num_classes,
            dropout_rate,
            weights: Vector::zeros(0),
            dataset,
            rng_seed: seed,
        };
        task.weights = task.init_weights(seed);
        Ok(task)
    }

    pub fn num_params(&self) -> usize {
        let (d, h, k) = (self.input_dim, self.hidden_width, self.num_classes);
        h * d + h + k * h + k
    }

    /// Uniform in ±1/√fan_in per layer.
    pub fn init_weights(&self, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let (d, h, k) = (self.input_dim, self.hidden_width, self.num_classes);
        let mut w = Vec::with_capacity(self.num_params());
        let s1 = 1.0 / libm::sqrt(d as f64);
        let s2 = 1.0 / libm::sqrt(h as f64);
        for _ in 0..(h * d + h) {
            w.push(rng.random_range(-s1..=s1));
        }
        for _ in 0..(k * h + k) {
            w.push(rng.random_range(-s2..=s2));
        }
        w.into()
    }

    /// Generator for dropout masks, independent of the initialisation stream.
    pub fn dropout_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(1);
        rng
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (d, h, k) = (self.input_dim, self.hidden_width, self.num_classes);
        let b1 = h * d;
        let w2 = b1 + h;
        let b2 = w2 + k * h;
        (b1, w2, b2)
    }

    /// Class probabilities for one input, eval mode.
    pub fn predict_proba(&self, weights: &Vector, x: &Vector) -> Vec<f64> {
        let (_, h) = self.hidden(weights, x);
        self.output(weights, &h)
    }

    pub fn predict(&self, weights: &Vector, x: &Vector) -> usize {
        let p = self.predict_proba(weights, x);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        best
    }

    /// Fraction of the dataset classified correctly.
    pub fn accuracy(&self, weights: &Vector) -> f64 {
        let hits = self.dataset.iter().filter(|(x, y)| self.predict(weights, x) == *y).count();
        hits as f64 / self.dataset.len() as f64
    }

    fn hidden(&self, w: &Vector, x: &Vector) -> (Vec<f64>, Vec<f64>) {
        let (b1, _, _) = self.offsets();
        let d = self.input_dim;
        let mut z = Vec::with_capacity(self.hidden_width);
        for j in 0..self.hidden_width {
            let row = &w[j * d..(j + 1) * d];
            let s: f64 = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            z.push(s + w[b1 + j]);
        }
        let a = z.iter().map(|&v| v.max(0.0)).collect();
        (z, a)
    }

    fn output(&self, w: &Vector, h: &[f64]) -> Vec<f64> {
        let (_, w2, b2) = self.offsets();
        let hw = self.hidden_width;
        let mut z: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let row = &w[w2 + c * hw..w2 + (c + 1) * hw];
                row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() + w[b2 + c]
            })
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in z.iter_mut() {
            *v = libm::exp(*v - m);
            total += *v;
        }
        for v in z.iter_mut() {
            *v /= total;
        }
        z
    }

    /// Mean cross-entropy over the batch and its exact gradient.
    pub fn mlp_loss_and_grad(&self, weights: &Vector, batch: &MiniBatch, mut mode: Mode<'_>) -> Result<(f64, Vector)> {
        check_dim(self.num_params(), weights.dim())?;
        if batch.size() == 0 {
            return Err(Error::EmptyBatch);
        }
        let (b1, w2, b2) = self.offsets();
        let (d, hw, k) = (self.input_dim, self.hidden_width, self.num_classes);
        let keep = 1.0 - self.dropout_rate;
        let mut grad = Vector::zeros(self.num_params());
        let mut loss = 0.0;
        let mut mask = alloc::vec![1.0; hw];

        for &i in &batch.indices {
            let (x, y) = self.dataset.get(i).ok_or(Error::DimensionMismatch {
                expected: self.dataset.len(),
                found: i,
            })?;
            let (z1, a1) = self.hidden(weights, x);
            if let Mode::Train(rng) = &mut mode {
                if self.dropout_rate > 0.0 {
                    for m in mask.iter_mut() {
                        *m = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                    }
                }
            }
            let h: Vec<f64> = a1.iter().zip(&mask).map(|(a, m)| a * m).collect();

            // log-softmax directly for the loss, probabilities for the gradient
            let logits: Vec<f64> = (0..k)
                .map(|c| {
                    let row = &weights[w2 + c * hw..w2 + (c + 1) * hw];
                    row.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + weights[b2 + c]
                })
                .collect();
            let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logits.iter().map(|&l| libm::exp(l - mx)).sum();
            let lse = mx + libm::log(sum_exp);
            loss += lse - logits[*y];

            let mut dh = alloc::vec![0.0; hw];
            for c in 0..k {
                let p = libm::exp(logits[c] - lse);
                let dz = p - if c == *y { 1.0 } else { 0.0 };
                grad[b2 + c] += dz;
                for j in 0..hw {
                    grad[w2 + c * hw + j] += dz * h[j];
                    dh[j] += dz * weights[w2 + c * hw + j];
                }
            }
            for j in 0..hw {
                if z1[j] <= 0.0 {
                    continue;
                }
                let dz = dh[j] * mask[j];
                grad[b1 + j] += dz;
                for q in 0..d {
                    grad[j * d + q] += dz * x[q];
                }
            }
        }
        let n = batch.size() as f64;
        Ok((loss / n, grad.scaled(1.0 / n)))
    }
}

impl StochasticObjective for MlpTask {
    fn dim(&self) -> usize {
        self.num_params()
    }
    fn num_samples(&self) -> usize {
        self.dataset.len()
    }
    fn loss_and_grad(&self, x: &Vector, batch: &MiniBatch, mode: Mode<'_>) -> Result<(f64, Vector)> {
        self.mlp_loss_and_grad(x, batch, mode)
    }
}

/// Full-batch, eval-mode view of the network loss.
impl Objective for MlpTask {
    fn dim(&self) -> usize {
        self.num_params()
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.full_loss_and_grad(x)?.0)
    }
    fn gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(self.full_loss_and_grad(x)?.1)
    }
}

/// Class centres pairwise at least 4 apart.
fn class_centers(num_classes: usize, dim: usize) -> Vec<Vector> {
    if num_classes == 2 {
        return alloc::vec![Vector::basis(dim, 0).scaled(-2.0), Vector::basis(dim, 0).scaled(2.0)];
    }
    if num_classes <= dim {
        let r = 2.0 * core::f64::consts::SQRT_2;
        return (0..num_classes).map(|k| Vector::basis(dim, k).scaled(r)).collect();
    }
    if dim == 1 {
        let mid = 2.0 * (num_classes as f64 - 1.0);
        return (0..num_classes).map(|k| Vector::filled(1, 4.0 * k as f64 - mid)).collect();
    }
    let radius = 2.0 / libm::sin(PI / num_classes as f64);
    (0..num_classes)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / num_classes as f64;
            let mut c = Vector::zeros(dim);
            c[0] = radius * libm::cos(angle);
            c[1] = radius * libm::sin(angle);
            c
        })
        .collect()
}

/// Unit-variance Gaussian blobs, samples interleaved by class.
pub fn make_synthetic_dataset(num_classes: usize, per_class: usize, dim: usize, seed: u64) -> Vec<(Vector, usize)> {
    let centers = class_centers(num_classes, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(num_classes * per_class);
    for _ in 0..per_class {
        for (label, c) in centers.iter().enumerate() {
            let x: Vec<f64> = c.iter().map(|&m| m + rng.sample::<f64, _>(StandardNormal)).collect();
            data.push((x.into(), label));
        }
    }
    data
}

/// Synthetic classification task with 16 hidden units and no dropout.
pub fn make_synthetic_task(num_classes: usize, per_class: usize, dim: usize, seed: u64) -> Result<MlpTask> {
    if num_classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::InvalidSpec("synthetic task sizes must be positive"));
    }
    MlpTask::new(make_synthetic_dataset(num_classes, per_class, dim, seed), num_classes, 16, 0.0, seed)
}
