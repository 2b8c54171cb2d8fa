//! Closed-form convergence predictors for quadratic objectives.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, eig2x2, energy_norm, spectral, Matrix, SpectralDecomposition, Vector};
use crate::objective::QuadraticForm;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePrediction {
    pub per_mode_factors: Vector,
    pub overall_rate: f64,
    pub converges: bool,
}

impl RatePrediction {
    pub fn from_factors(per_mode_factors: Vector) -> Self {
        let overall_rate = per_mode_factors.max_abs();
        RatePrediction { converges: overall_rate < 1.0, per_mode_factors, overall_rate }
    }
}

fn spd_spectrum(q: &QuadraticForm) -> Result<SpectralDecomposition> {
    let s = spectral(q.hessian_matrix())?;
    match s.lambda.last() {
        Some(&l) if l > 0.0 => Ok(s),
        _ => Err(Error::NotSpd),
    }
}

/// `x_{t+1} = x⋆ + Q(I − ηΛ)ᵗQᵀ(x₁ − x⋆)`
pub fn vanilla_gd_closed_form(q: &QuadraticForm, x1: &Vector, eta: f64, t: u32) -> Result<Vector> {
    check_dim(q.dim(), x1.dim())?;
    let s = spd_spectrum(q)?;
    let star = q.minimizer()?;
    let power = s.with_eigenvalues(|l| libm::pow(1.0 - eta * l, t as f64));
    Ok(star.add(&power.mul_vec(&x1.sub(&star))))
}

/// Per-mode factors `1 − ηλᵢ` of plain gradient descent.
pub fn vanilla_gd_rate(lambdas: &Vector, eta: f64) -> RatePrediction {
    RatePrediction::from_factors(lambdas.iter().map(|l| 1.0 - eta * l).collect::<Vec<_>>().into())
}

/// `η = 2/(λ₁ + λ_d)` and the rate `(κ − 1)/(κ + 1)` it achieves.
pub fn vanilla_gd_optimal(q: &QuadraticForm) -> Result<(f64, f64)> {
    let s = spd_spectrum(q)?;
    let hi = s.lambda[0];
    let lo = s.lambda[s.lambda.dim() - 1];
    let kappa = hi / lo;
    Ok((2.0 / (hi + lo), (kappa - 1.0) / (kappa + 1.0)))
}

/// Spectral radius of `[[ρ, −ηλ], [ρ, 1 − ηλ]]` for every `λ`.
pub fn momentum_rate(eta: f64, rho: f64, lambdas: &Vector) -> RatePrediction {
    let factors: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let b = Matrix::from_rows(&[[rho, -eta * l], [rho, 1.0 - eta * l]]).expect("2x2 literal");
            eig2x2(&b).expect("2x2 input").spectral_radius()
        })
        .collect();
    RatePrediction::from_factors(factors.into())
}

/// Steepest-descent rate in two dimensions as a function of the condition
/// number and the error's eigen-coordinate slope `σ₂`.
pub fn steepest_rate_2d(kappa: f64, sigma2: f64) -> f64 {
    if sigma2.abs() > 1e12 {
        return 0.0;
    }
    let s2 = sigma2 * sigma2;
    let num = (kappa * kappa + s2) * (kappa * kappa + s2);
    let den = (kappa * kappa * kappa + s2) * (kappa + s2);
    libm::sqrt((1.0 - num / den).max(0.0))
}

/// Period `N` of the moving average equivalent to decay `ρ`: `1 − ρ = 2/(N + 1)`.
pub fn ema_period(rho: f64) -> f64 {
    2.0 / (1.0 - rho) - 1.0
}

/// Predicted one-step energy factor of steepest descent at `x`,
/// `1 − (gᵀg)² / ((gᵀAg)(eᵀAe))`.
pub fn steepest_energy_drop(q: &QuadraticForm, x: &Vector) -> Result<f64> {
    check_dim(q.dim(), x.dim())?;
    let h = q.hessian_matrix();
    let star = q.minimizer().map_err(|_| Error::NotSpd)?;
    let e = x.sub(&star);
    let g = q.gradient(x)?;
    let gg = g.norm_sq();
    if gg == 0.0 {
        return Ok(0.0);
    }
    let gag = h.bilinear(&g, &g);
    let eae = energy_norm(&e, h).map_err(|_| Error::NotSpd)?;
    if gag <= 0.0 {
        return Err(Error::NotSpd);
    }
    Ok((1.0 - gg * gg / (gag * eae * eae)).max(0.0))
}
