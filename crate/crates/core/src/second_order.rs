//! Newton-type steps and critical-point classification.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, solve_symmetric, spectral, Matrix, Vector};
use crate::objective::Objective;

fn hessian_and_gradient<O: Objective + ?Sized>(objective: &O, x: &Vector) -> Result<(Matrix, Vector)> {
    check_dim(objective.dim(), x.dim())?;
    let h = objective.hessian(x).ok_or(Error::SingularHessian)?;
    let g = objective.gradient(x)?;
    if !g.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    Ok((h, g))
}

fn solve_step(h: &Matrix, g: &Vector) -> Result<Vector> {
    match solve_symmetric(h, g) {
        Ok(v) => Ok(v.neg()),
        Err(Error::Singular) | Err(Error::NotPositiveDefinite) => Err(Error::SingularHessian),
        Err(e) => Err(e),
    }
}

/// `Δx = −H⁻¹g`, by a linear solve.
pub fn newton_step<O: Objective + ?Sized>(objective: &O, x: &Vector) -> Result<Vector> {
    let (h, g) = hessian_and_gradient(objective, x)?;
    solve_step(&h, &g)
}

/// `Δx = −(H + αI)⁻¹g`
pub fn damped_newton_step<O: Objective + ?Sized>(objective: &O, x: &Vector, alpha: f64) -> Result<Vector> {
    let (mut h, g) = hessian_and_gradient(objective, x)?;
    for i in 0..h.rows() {
        h[(i, i)] += alpha;
    }
    solve_step(&h, &g)
}

/// `Δx = −(H + α·diag(H))⁻¹g`
pub fn lm_step<O: Objective + ?Sized>(objective: &O, x: &Vector, alpha: f64) -> Result<Vector> {
    let (mut h, g) = hessian_and_gradient(objective, x)?;
    for i in 0..h.rows() {
        h[(i, i)] *= 1.0 + alpha;
    }
    solve_step(&h, &g)
}

/// Adapts the damping of a Levenberg iteration from the observed loss change.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DampingController {
    pub alpha: f64,
    pub up_factor: f64,
    pub down_factor: f64,
}

impl Default for DampingController {
    fn default() -> Self {
        DampingController { alpha: 1.0, up_factor: 10.0, down_factor: 0.1 }
    }
}

impl DampingController {
    pub const MIN_ALPHA: f64 = 1e-12;
    pub const MAX_ALPHA: f64 = 1e12;
}

/// Raises α when the loss went up, lowers it otherwise (ties count as a decrease).
pub fn lm_adapt(ctrl: DampingController, loss_prev: f64, loss_new: f64) -> DampingController {
    let factor = if loss_new > loss_prev { ctrl.up_factor } else { ctrl.down_factor };
    let alpha = (ctrl.alpha * factor).clamp(DampingController::MIN_ALPHA, DampingController::MAX_ALPHA);
    DampingController { alpha, ..ctrl }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CriticalPointKind {
    LocalMin,
    LocalMax,
    Saddle,
    Degenerate,
}

/// Classifies by Hessian eigenvalue signs, treating `|λ| ≤ 1e−10·max|λ|` as zero.
pub fn classify_critical_point(h: &Matrix) -> Result<CriticalPointKind> {
    let s = spectral(h)?;
    let tau = 1e-10 * s.max_abs_eigenvalue();
    let lambda = &s.lambda;
    if lambda.is_empty() || lambda.iter().any(|l| l.abs() <= tau) {
        return Ok(CriticalPointKind::Degenerate);
    }
    let pos = lambda.iter().any(|&l| l > tau);
    let neg = lambda.iter().any(|&l| l < -tau);
    Ok(match (pos, neg) {
        (true, false) => CriticalPointKind::LocalMin,
        (false, true) => CriticalPointKind::LocalMax,
        _ => CriticalPointKind::Saddle,
    })
}
