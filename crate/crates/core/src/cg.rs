//! Conjugate direction and conjugate gradient methods: the quadratic solvers,
//! nonlinear CG with Fletcher–Reeves, Polak–Ribière and Hestenes–Stiefel
//! coefficients, and both preconditioned forms.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, cholesky, energy_norm, inverse, matmul, CholeskyFactor, Matrix, Vector};
use crate::linesearch::{armijo, exact_quadratic_step, ArmijoConfig, RaySlice};
use crate::objective::{Objective, QuadraticForm};

pub const DEFAULT_TOL: f64 = 1e-10;

/// The sequence of iterates, gradients, directions and coefficients of one run.
///
/// `iterates` and `gradients` hold one more entry than there are iterations;
/// `directions`, `betas` and `etas` hold one entry per iteration.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CgRun {
    pub iterates: Vec<Vector>,
    pub gradients: Vec<Vector>,
    pub directions: Vec<Vector>,
    pub betas: Vec<f64>,
    pub etas: Vec<f64>,
    /// Iterations performed.
    pub terminated_at: usize,
}

impl CgRun {
    fn start(x1: &Vector, g1: Vector) -> Self {
        CgRun { iterates: alloc::vec![x1.clone()], gradients: alloc::vec![g1], ..Default::default() }
    }

    fn push(&mut self, d: Vector, beta: f64, eta: f64, x: Vector, g: Vector) {
        self.directions.push(d);
        self.betas.push(beta);
        self.etas.push(eta);
        self.iterates.push(x);
        self.gradients.push(g);
        self.terminated_at += 1;
    }

    pub fn final_x(&self) -> &Vector {
        self.iterates.last().expect("a run holds its starting point")
    }

    pub fn final_gradient(&self) -> &Vector {
        self.gradients.last().expect("a run holds its starting gradient")
    }

    /// Energy-norm error `‖x_t − x⋆‖_A` of every iterate.
    pub fn energy_errors(&self, q: &QuadraticForm) -> Result<Vec<f64>> {
        let star = q.minimizer()?;
        self.iterates.iter().map(|x| energy_norm(&x.sub(&star), q.hessian_matrix())).collect()
    }
}

fn converged(g: &Vector, g1_norm: f64, tol: f64) -> bool {
    g.norm() <= tol * g1_norm.max(1.0)
}

fn curvature(h: &Matrix, d: &Vector) -> Result<(Vector, f64)> {
    let ad = h.mul_vec(d);
    let c = d.dot(&ad);
    if !(c > 0.0) {
        return Err(Error::NotSpd);
    }
    Ok((ad, c))
}

/// Exact line searches along supplied pairwise conjugate directions.
pub fn cd_solve(q: &QuadraticForm, x1: &Vector, dirs: &[Vector]) -> Result<CgRun> {
    let h = q.hessian_matrix();
    check_dim(q.dim(), x1.dim())?;
    check_dim(q.dim(), dirs.len())?;
    let mut norms = Vec::with_capacity(dirs.len());
    for d in dirs {
        check_dim(q.dim(), d.dim())?;
        norms.push(libm::sqrt(curvature(h, d)?.1));
    }
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            if h.bilinear(&dirs[i], &dirs[j]).abs() > 1e-8 * norms[i] * norms[j] {
                return Err(Error::NotConjugate);
            }
        }
    }
    let mut run = CgRun::start(x1, q.gradient(x1)?);
    let mut x = x1.clone();
    for d in dirs {
        let eta = exact_quadratic_step(q, &x, d).map_err(|_| Error::NotSpd)?;
        x = x.axpy(eta, d);
        let g = q.gradient(&x)?;
        run.push(d.clone(), 0.0, eta, x.clone(), g);
    }
    Ok(run)
}

/// How a CG run keeps its gradients orthogonal and its directions conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Recurrence {
    /// Two-term recurrences only.
    #[default]
    Short,
    /// Also re-orthogonalises each new gradient against every earlier one (in
    /// the `M⁻¹` inner product) and re-conjugates each new direction against
    /// every earlier one. The corrections vanish in exact arithmetic; in
    /// floating point they hold on to the orthogonality and conjugacy the
    /// short recurrence loses on ill-conditioned systems.
    Reorthogonalized,
}

/// CG with `β = gᵀg / g_prevᵀg_prev` and the gradient carried by recurrence.
/// Stops at `‖g‖ ≤ tol·max(1, ‖g₁‖)` or after `d` iterations.
pub fn cg_practical(q: &QuadraticForm, x1: &Vector, tol: f64) -> Result<CgRun> {
    cg_with(q, x1, tol, Recurrence::Short)
}

pub fn cg_with(q: &QuadraticForm, x1: &Vector, tol: f64, recurrence: Recurrence) -> Result<CgRun> {
    let g1 = q.gradient(x1)?.norm();
    pcg_loop(q, x1, &Preconditioner::Identity, recurrence, |g| converged(g, g1, tol))
}

fn pcg_loop(
    q: &QuadraticForm,
    x1: &Vector,
    m: &Preconditioner,
    recurrence: Recurrence,
    done: impl Fn(&Vector) -> bool,
) -> Result<CgRun> {
    let reorth = recurrence == Recurrence::Reorthogonalized;
    let h = q.hessian_matrix();
    let mut g = q.gradient(x1)?;
    let mut run = CgRun::start(x1, g.clone());
    let mut x = x1.clone();
    let mut z = m.apply_inverse(&g)?;
    let mut gz = g.dot(&z);
    let mut d = z.neg();
    let mut beta = 0.0;
    // (d, Ad, dᵀAd) per iteration and (M⁻¹g, gᵀM⁻¹g) per stored gradient
    let mut dirs: Vec<(Vector, Vector, f64)> = Vec::new();
    let mut zs: Vec<(Vector, f64)> = alloc::vec![(z.clone(), gz)];
    while run.terminated_at < q.dim() && !done(&g) {
        if run.terminated_at > 0 {
            d = z.neg().axpy(beta, &d);
            if reorth {
                for _ in 0..2 {
                    for (di, adi, dadi) in &dirs {
                        d = d.axpy(-d.dot(adi) / dadi, di);
                    }
                }
            }
        }
        let (ad, dad) = curvature(h, &d)?;
        let eta = if reorth { -d.dot(&g) / dad } else { gz / dad };
        x = x.axpy(eta, &d);
        g = g.axpy(eta, &ad);
        if reorth {
            for _ in 0..2 {
                for (gi, (zi, gzi)) in run.gradients.iter().zip(&zs) {
                    g = g.axpy(-g.dot(zi) / gzi, gi);
                }
            }
        }
        z = m.apply_inverse(&g)?;
        let gz_new = g.dot(&z);
        run.push(d.clone(), beta, eta, x.clone(), g.clone());
        if reorth {
            dirs.push((d.clone(), ad, dad));
            zs.push((z.clone(), gz_new));
        }
        beta = gz_new / gz;
        gz = gz_new;
    }
    Ok(run)
}

/// CG with `β = gᵀA d_prev / d_prevᵀA d_prev` and gradients recomputed from `x`.
pub fn cg_vanilla(q: &QuadraticForm, x1: &Vector, tol: f64) -> Result<CgRun> {
    let h = q.hessian_matrix();
    let mut g = q.gradient(x1)?;
    let g1 = g.norm();
    let mut run = CgRun::start(x1, g.clone());
    let mut x = x1.clone();
    let mut d = g.neg();
    let mut prev: Option<(Vector, f64)> = None;
    while run.terminated_at < q.dim() && !converged(&g, g1, tol) {
        let beta = match &prev {
            Some((ad_prev, dad_prev)) => {
                let b = g.dot(ad_prev) / dad_prev;
                d = g.neg().axpy(b, &d);
                b
            }
            None => 0.0,
        };
        let (ad, dad) = curvature(h, &d)?;
        let eta = -d.dot(&g) / dad;
        x = x.axpy(eta, &d);
        g = q.gradient(&x)?;
        run.push(d.clone(), beta, eta, x.clone(), g.clone());
        prev = Some((ad, dad));
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BetaKind {
    FletcherReeves,
    PolakRibiere,
    HestenesStiefel,
}

impl BetaKind {
    /// Coefficient from the new gradient, the previous gradient and direction.
    pub fn beta(&self, g: &Vector, g_prev: &Vector, d_prev: &Vector) -> f64 {
        match self {
            BetaKind::FletcherReeves => g.norm_sq() / g_prev.norm_sq(),
            BetaKind::PolakRibiere => g.dot(&g.sub(g_prev)) / g_prev.norm_sq(),
            BetaKind::HestenesStiefel => {
                let y = g.sub(g_prev);
                g.dot(&y) / d_prev.dot(&y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateRule {
    Fixed(f64),
    /// Minimises along the direction using the objective's Hessian.
    Exact,
    Armijo(ArmijoConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgGeneralConfig {
    pub beta: BetaKind,
    pub rate: RateRule,
    pub max_iters: usize,
    /// Stops once `‖g‖ ≤ tol·max(1, ‖g₁‖)`.
    pub tol: f64,
}

/// Nonlinear CG. When the direction stops being a descent direction it is
/// reset to `−g` and the coefficient recorded as 0.
pub fn cg_general<O: Objective + ?Sized>(objective: &O, x1: &Vector, cfg: &CgGeneralConfig) -> Result<CgRun> {
    check_dim(objective.dim(), x1.dim())?;
    let mut g = objective.gradient(x1)?;
    if !g.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    let g1 = g.norm();
    let mut run = CgRun::start(x1, g.clone());
    let mut x = x1.clone();
    let mut prev: Option<(Vector, Vector)> = None;
    while run.terminated_at < cfg.max_iters && !converged(&g, g1, cfg.tol) {
        let (mut d, mut beta) = match &prev {
            Some((g_prev, d_prev)) => {
                let b = cfg.beta.beta(&g, g_prev, d_prev);
                (g.neg().axpy(b, d_prev), b)
            }
            None => (g.neg(), 0.0),
        };
        if !(d.dot(&g) < 0.0) || !d.is_finite() {
            d = g.neg();
            beta = 0.0;
        }
        let eta = match cfg.rate {
            RateRule::Fixed(eta) => eta,
            RateRule::Exact => {
                let h = objective.hessian(&x).ok_or(Error::InvalidSpec("exact rate needs a hessian"))?;
                let curv = h.bilinear(&d, &d);
                if curv <= 1e-14 {
                    return Err(Error::NonPositiveCurvature);
                }
                -d.dot(&g) / curv
            }
            RateRule::Armijo(a) => armijo(&RaySlice::new(objective, x.clone(), d.clone())?, &a)?,
        };
        let g_prev = g;
        x = x.axpy(eta, &d);
        g = objective.gradient(&x)?;
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        run.push(d.clone(), beta, eta, x.clone(), g.clone());
        prev = Some((g_prev, d));
    }
    Ok(run)
}

/// A symmetric positive definite `M`, applied as `M⁻¹v` by triangular solves.
#[derive(Debug, Clone, PartialEq)]
pub enum Preconditioner {
    Identity,
    Diagonal(Vector),
    Perfect(CholeskyFactor),
    Custom { m: Matrix, factor: CholeskyFactor },
}

impl Preconditioner {
    /// Jacobi preconditioner from the diagonal of `a`.
    pub fn diagonal(a: &Matrix) -> Result<Self> {
        let diag = a.diagonal();
        if diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotSpd);
        }
        Ok(Preconditioner::Diagonal(diag))
    }

    /// `M = A`
    pub fn perfect(a: &Matrix) -> Result<Self> {
        Ok(Preconditioner::Perfect(cholesky(a).map_err(spd_error)?))
    }

    pub fn custom(m: Matrix) -> Result<Self> {
        let factor = cholesky(&m).map_err(spd_error)?;
        Ok(Preconditioner::Custom { m, factor })
    }

    pub fn apply_inverse(&self, v: &Vector) -> Result<Vector> {
        match self {
            Preconditioner::Identity => Ok(v.clone()),
            Preconditioner::Diagonal(diag) => {
                check_dim(diag.dim(), v.dim())?;
                Ok(v.iter().zip(diag.iter()).map(|(a, b)| a / b).collect::<Vec<_>>().into())
            }
            Preconditioner::Perfect(f) | Preconditioner::Custom { factor: f, .. } => f.solve(v),
        }
    }
}

fn spd_error(e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite | Error::NonSymmetric => Error::NotSpd,
        other => other,
    }
}

/// Preconditioned CG in the original coordinates, with `z = M⁻¹g`,
/// `η = gᵀz / dᵀAd` and `β = g_newᵀz_new / gᵀz`.
pub fn pcg_untransformed(q: &QuadraticForm, x1: &Vector, m: &Preconditioner, tol: f64) -> Result<CgRun> {
    pcg_untransformed_with(q, x1, m, tol, Recurrence::Short)
}

pub fn pcg_untransformed_with(
    q: &QuadraticForm,
    x1: &Vector,
    m: &Preconditioner,
    tol: f64,
    recurrence: Recurrence,
) -> Result<CgRun> {
    let g1 = q.gradient(x1)?.norm();
    pcg_loop(q, x1, m, recurrence, |g| converged(g, g1, tol))
}

/// Runs CG on `P⁻ᵀAP⁻¹x̂ = P⁻ᵀb` from `x̂₁ = Px₁` and maps everything back:
/// `x = P⁻¹x̂`, `d = P⁻¹d̂`, `g = Pᵀĝ`.
pub fn pcg_transformed(q: &QuadraticForm, x1: &Vector, p: &Matrix, tol: f64) -> Result<CgRun> {
    pcg_transformed_with(q, x1, p, tol, Recurrence::Short)
}

pub fn pcg_transformed_with(
    q: &QuadraticForm,
    x1: &Vector,
    p: &Matrix,
    tol: f64,
    recurrence: Recurrence,
) -> Result<CgRun> {
    check_dim(q.dim(), p.rows())?;
    let p_inv = inverse(p)?;
    let p_inv_t = p_inv.transpose();
    let a_hat = matmul(&matmul(&p_inv_t, q.hessian_matrix())?, &p_inv)?.symmetrized();
    let b_hat = p_inv_t.matvec(q.b())?;
    let q_hat = QuadraticForm::new(a_hat, b_hat, q.c())?;
    let x_hat = p.matvec(x1)?;

    let g1 = q.gradient(x1)?.norm();
    let p_t = p.transpose();
    // same stopping rule as the untransformed form, on the mapped-back gradient
    let done = |g_hat: &Vector| converged(&p_t.mul_vec(g_hat), g1, tol);
    let inner = pcg_loop(&q_hat, &x_hat, &Preconditioner::Identity, recurrence, done)?;
    let back = |v: &Vector| p_inv.mul_vec(v);
    Ok(CgRun {
        iterates: inner.iterates.iter().map(back).collect(),
        gradients: inner.gradients.iter().map(|g| p_t.mul_vec(g)).collect(),
        directions: inner.directions.iter().map(back).collect(),
        betas: inner.betas,
        etas: inner.etas,
        terminated_at: inner.terminated_at,
    })
}

/// `2((√κ − 1)/(√κ + 1))ᵗ`
pub fn chebyshev_bound(kappa: f64, t: u32) -> f64 {
    let s = libm::sqrt(kappa);
    2.0 * libm::pow((s - 1.0) / (s + 1.0), t as f64)
}
