//! Step-size selection along a fixed direction, `J(η) = L(x + ηd)`.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, Vector};
use crate::objective::{Objective, QuadraticForm};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 200;
/// Perturbation for the derivative-free slope estimate.
pub const SECANT_EPS: f64 = 1e-8;

const GOLDEN: f64 = 1.618_033_988_749_895;

/// How `J′(η)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slope {
    /// `dᵀ∇L(x + ηd)`
    Analytic,
    /// `(J(η + ε) − J(η)) / ε`
    Secant,
}

/// The restriction of an objective to the ray `x + ηd`.
pub struct RaySlice<'a, O: Objective + ?Sized> {
    pub objective: &'a O,
    pub x: Vector,
    pub d: Vector,
    pub slope: Slope,
}

impl<'a, O: Objective + ?Sized> RaySlice<'a, O> {
    pub fn new(objective: &'a O, x: Vector, d: Vector) -> Result<Self> {
        check_dim(objective.dim(), x.dim())?;
        check_dim(objective.dim(), d.dim())?;
        Ok(RaySlice { objective, x, d, slope: Slope::Analytic })
    }

    pub fn with_slope(mut self, slope: Slope) -> Self {
        self.slope = slope;
        self
    }

    pub fn point(&self, eta: f64) -> Vector {
        self.x.axpy(eta, &self.d)
    }

    pub fn value(&self, eta: f64) -> Result<f64> {
        self.objective.value(&self.point(eta))
    }

    pub fn derivative(&self, eta: f64) -> Result<f64> {
        match self.slope {
            Slope::Analytic => Ok(self.d.dot(&self.objective.gradient(&self.point(eta))?)),
            Slope::Secant => Ok((self.value(eta + SECANT_EPS)? - self.value(eta)?) / SECANT_EPS),
        }
    }

    /// `dᵀ∇L(x)`; negative for a descent direction.
    pub fn initial_slope(&self) -> Result<f64> {
        Ok(self.d.dot(&self.objective.gradient(&self.x)?))
    }
}

/// `η = −dᵀg / dᵀAd`
pub fn exact_quadratic_step(q: &QuadraticForm, x: &Vector, d: &Vector) -> Result<f64> {
    check_dim(q.dim(), d.dim())?;
    let g = q.gradient(x)?;
    let curv = q.hessian_matrix().bilinear(d, d);
    if curv <= 1e-14 {
        return Err(Error::NonPositiveCurvature);
    }
    Ok(-d.dot(&g) / curv)
}

/// Halves `[0, eta_max]` on the sign of `J′` at the midpoint.
pub fn bisection<O: Objective + ?Sized>(slice: &RaySlice<'_, O>, eta_max: f64, tol: f64) -> Result<f64> {
    if !(slice.derivative(0.0)? < 0.0 && slice.derivative(eta_max)? > 0.0) {
        return Err(Error::BracketInvalid);
    }
    let (mut a, mut b) = (0.0, eta_max);
    let mut iters = 0;
    while b - a > tol {
        if iters == DEFAULT_MAX_ITERS {
            return Err(Error::MaxIters);
        }
        iters += 1;
        let mid = 0.5 * (a + b);
        if slice.derivative(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Shrinks `[0, eta_max]` by 1/φ per iteration, keeping the side with the
/// smallest of the four probed values. Ties keep the left side.
pub fn golden_section<O: Objective + ?Sized>(slice: &RaySlice<'_, O>, eta_max: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (0.0, eta_max);
    let mut iters = 0;
    while b - a > tol {
        if iters == DEFAULT_MAX_ITERS {
            return Err(Error::MaxIters);
        }
        iters += 1;
        let (lo, hi) = golden_probes(a, b);
        let vals = [slice.value(a)?, slice.value(lo)?, slice.value(hi)?, slice.value(b)?];
        let mut best = 0;
        for i in 1..4 {
            if vals[i] < vals[best] {
                best = i;
            }
        }
        if best <= 1 {
            b = hi;
        } else {
            a = lo;
        }
    }
    Ok(0.5 * (a + b))
}

/// Interior probe points `c₁ < c₂` of `[a, b]`.
pub fn golden_probes(a: f64, b: f64) -> (f64, f64) {
    (b - (b - a) / GOLDEN, a + (b - a) / GOLDEN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmijoConfig {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_iters: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        ArmijoConfig { s: 1.0, alpha: 0.5, beta: 0.5, max_iters: 60 }
    }
}

impl ArmijoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if self.s > 0.0 && unit(self.alpha) && unit(self.beta) {
            Ok(())
        } else {
            Err(Error::InvalidSpec("armijo needs s > 0 and alpha, beta in (0, 1)"))
        }
    }
}

/// First `η = s·βᵏ` with `L(x+ηd) − L(x) ≤ α·η·dᵀ∇L(x)`.
pub fn armijo<O: Objective + ?Sized>(slice: &RaySlice<'_, O>, cfg: &ArmijoConfig) -> Result<f64> {
    cfg.validate()?;
    let base = slice.value(0.0)?;
    let slope = slice.initial_slope()?;
    let mut eta = cfg.s;
    for _ in 0..=cfg.max_iters {
        if slice.value(eta)? - base <= cfg.alpha * eta * slope {
            return Ok(eta);
        }
        eta *= cfg.beta;
    }
    Err(Error::MaxIters)
}
