//! Learning-rate schedules as pure functions of a step counter `t ≥ 0`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Denominator guard used by the cyclical polynomial schedule at `t = 0`.
const POLY_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case", deny_unknown_fields))]
pub enum ScheduleSpec {
    Constant { eta: f64 },
    /// `η₀·d^⌊t/n⌋`
    StepDecay { eta0: f64, d: f64, n: u64 },
    /// Multiplies by `d` at each milestone passed.
    MultiStep { eta0: f64, d: f64, milestones: Vec<u64> },
    /// `η₀·e^{−kt}`
    Exponential { eta0: f64, k: f64 },
    /// `η₀/(1 + kt)`
    Inverse { eta0: f64, k: f64 },
    /// Flat at `η₀` for `w` steps, then `η₀·√(w/t)`.
    InverseSqrt { eta0: f64, w: u64 },
    /// `(η₀ − η_T)(1 − t/M)^p + η_T`, held at `η_T` from `t = M` on.
    AnnealingPoly { eta0: f64, eta_t: f64, m: u64, p: f64 },
    /// Slanted triangle: linear rise over the first `frac` of `T` steps, then linear decay.
    Stlr { eta_max: f64, t_total: u64, frac: f64, ratio: f64 },
    /// `α·d_model^{−½}·min(t^{−½}, t·w^{−3/2})`
    Noam { alpha: f64, d_model: f64, w: u64 },
    /// Noam with `d_model = w`.
    WarmupNoam { alpha: f64, w: u64 },
    Triangular { eta0: f64, eta_max: f64, s: u64 },
    /// Triangular with the amplitude halved every cycle.
    Triangular2 { eta0: f64, eta_max: f64, s: u64 },
    /// Triangular with the amplitude scaled by `γᵗ`.
    ExpRange { eta0: f64, eta_max: f64, s: u64, gamma: f64 },
    /// Cosine annealing restarted `M` times over `T` steps.
    CyclicalCosine { eta0: f64, t_total: u64, m: u64 },
    /// `η_max − (t mod M)·η_min`
    CyclicalStep { eta_min: f64, eta_max: f64, m: u64 },
    /// Polynomial decay whose horizon is extended to the next multiple of `M`.
    CyclicalPoly { eta0: f64, eta_t: f64, m: u64, p: f64 },
}

impl ScheduleSpec {
    /// Polynomial annealing with `η₀ = 0.001`, `η_T = 1e−10`, `p = 2`.
    pub fn annealing_poly_default(m: u64) -> Self {
        ScheduleSpec::AnnealingPoly { eta0: 0.001, eta_t: 1e-10, m, p: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        use ScheduleSpec::*;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        let ok = match self {
            Constant { eta } => *eta >= 0.0 && eta.is_finite(),
            StepDecay { eta0, d, n } => pos(*eta0) && unit(*d) && *n > 0,
            MultiStep { eta0, d, milestones } => {
                pos(*eta0) && unit(*d) && milestones.windows(2).all(|w| w[0] < w[1])
            }
            Exponential { eta0, k } | Inverse { eta0, k } => pos(*eta0) && *k >= 0.0,
            InverseSqrt { eta0, w } => pos(*eta0) && *w > 0,
            AnnealingPoly { eta0, eta_t, m, p } | CyclicalPoly { eta0, eta_t, m, p } => {
                pos(*eta0) && *eta_t >= 0.0 && *m > 0 && *p >= 0.0
            }
            Stlr { eta_max, t_total, frac, ratio } => {
                pos(*eta_max) && *t_total > 0 && *frac > 0.0 && *frac < 1.0 && *ratio >= 1.0
            }
            Noam { alpha, d_model, w } => pos(*alpha) && pos(*d_model) && *w > 0,
            WarmupNoam { alpha, w } => pos(*alpha) && *w > 0,
            Triangular { eta0, eta_max, s } | Triangular2 { eta0, eta_max, s } => {
                pos(*eta0) && *eta_max >= *eta0 && *s > 0
            }
            ExpRange { eta0, eta_max, s, gamma } => pos(*eta0) && *eta_max >= *eta0 && *s > 0 && unit(*gamma),
            CyclicalCosine { eta0, t_total, m } => pos(*eta0) && *t_total > 0 && *m > 0,
            CyclicalStep { eta_min, eta_max, m } => {
                pos(*eta_min) && pos(*eta_max) && *m > 0 && *eta_min * (*m - 1) as f64 <= *eta_max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec("schedule parameters out of range"))
        }
    }

    pub fn rate_at(&self, t: u64) -> f64 {
        use ScheduleSpec::*;
        let tf = t as f64;
        match self {
            Constant { eta } => *eta,
            StepDecay { eta0, d, n } => eta0 * libm::pow(*d, (t / n) as f64),
            MultiStep { eta0, d, milestones } => {
                let stage = milestones.iter().filter(|&&m| m <= t).count();
                eta0 * libm::pow(*d, stage as f64)
            }
            Exponential { eta0, k } => eta0 * libm::exp(-k * tf),
            Inverse { eta0, k } => eta0 / (1.0 + k * tf),
            InverseSqrt { eta0, w } => {
                let w = *w as f64;
                eta0 * libm::sqrt(w) / libm::sqrt(tf.max(w))
            }
            AnnealingPoly { eta0, eta_t, m, p } => {
                let frac = (t.min(*m)) as f64 / *m as f64;
                (eta0 - eta_t) * libm::pow(1.0 - frac, *p) + eta_t
            }
            Stlr { eta_max, t_total, frac, ratio } => {
                let cut = libm::ceil(*t_total as f64 * frac).max(1.0);
                let p = if tf < cut {
                    tf / cut
                } else {
                    1.0 - (tf - cut) / (cut * (1.0 / frac - 1.0))
                };
                let p = p.clamp(0.0, 1.0);
                eta_max * (1.0 + p * (ratio - 1.0)) / ratio
            }
            Noam { alpha, d_model, w } => noam(*alpha, *d_model, *w, tf),
            WarmupNoam { alpha, w } => noam(*alpha, *w as f64, *w, tf),
            Triangular { eta0, eta_max, s } => {
                let (_, x) = triangle(t, *s);
                eta0 + (eta_max - eta0) * (1.0 - x).max(0.0)
            }
            Triangular2 { eta0, eta_max, s } => {
                let (cycle, x) = triangle(t, *s);
                let shrink = libm::pow(2.0, (cycle - 1) as f64);
                eta0 + (eta_max - eta0) * (1.0 - x).max(0.0) / shrink
            }
            ExpRange { eta0, eta_max, s, gamma } => {
                let (_, x) = triangle(t, *s);
                eta0 + (eta_max - eta0) * (1.0 - x).max(0.0) * libm::pow(*gamma, tf)
            }
            CyclicalCosine { eta0, t_total, m } => {
                let period = t_total.div_ceil(*m).max(1) as i64;
                let phase = (t as i64 - 1).rem_euclid(period) as f64;
                eta0 / 2.0 * (libm::cos(PI * phase / period as f64) + 1.0)
            }
            CyclicalStep { eta_min, eta_max, m } => eta_max - (t % m) as f64 * eta_min,
            CyclicalPoly { eta0, eta_t, m, p } => {
                let decay_batch = (m * t.div_ceil(*m)) as f64;
                let base = (1.0 - tf / (decay_batch + POLY_EPS)).max(0.0);
                (eta0 - eta_t) * libm::pow(base, *p) + eta_t
            }
        }
    }

    /// Length of one cycle for the periodic families.
    pub fn period(&self) -> Option<u64> {
        use ScheduleSpec::*;
        match self {
            Triangular { s, .. } | Triangular2 { s, .. } | ExpRange { s, .. } => Some(2 * s),
            CyclicalCosine { t_total, m, .. } => Some(t_total.div_ceil(*m).max(1)),
            CyclicalStep { m, .. } | CyclicalPoly { m, .. } => Some(*m),
            _ => None,
        }
    }
}

fn noam(alpha: f64, d_model: f64, w: u64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let w = w as f64;
    let decay = 1.0 / libm::sqrt(t);
    let warm = t * libm::pow(w, -1.5);
    alpha / libm::sqrt(d_model) * decay.min(warm)
}

/// Cycle number (from 1) and distance from the peak in `[0, 1]`.
fn triangle(t: u64, s: u64) -> (u64, f64) {
    let cycle = 1 + t / (2 * s);
    // |t/s − 2·cycle + 1| from the remainder, so t and t + 2s give identical bits
    let r = t % (2 * s);
    let x = r.abs_diff(s) as f64 / s as f64;
    (cycle, x)
}

/// `(t, η_t)` for `t` in `0..t_max`.
pub fn schedule_table(spec: &ScheduleSpec, t_max: u64) -> Vec<(u64, f64)> {
    (0..t_max).map(|t| (t, spec.rate_at(t))).collect()
}
