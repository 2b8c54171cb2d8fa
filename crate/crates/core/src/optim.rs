//! First-order update rules with per-dimension state, the effective-ratio
//! window used by AdaSmooth, and training loops over deterministic and
//! mini-batch objectives.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, Vector};
use crate::objective::{MiniBatch, Mode, Objective, StochasticObjective};
use crate::schedule::ScheduleSpec;

/// Loss above which a run is declared diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;
/// Longest effective-ratio window when no epochs are defined.
pub const DEFAULT_WINDOW_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case", deny_unknown_fields))]
pub enum OptimizerSpec {
    Sgd,
    Momentum { rho: f64 },
    Nag { rho: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "adagrad"))]
    AdaGrad { eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "rmsprop"))]
    RmsProp { rho: f64, eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "rmsprop_nesterov"))]
    RmsPropNesterov { rho: f64, alpha: f64, eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "adadelta"))]
    AdaDelta { rho: f64, eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "adasmooth"))]
    AdaSmooth { rho1: f64, rho2: f64, eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "adasmooth_delta"))]
    AdaSmoothDelta { rho1: f64, rho2: f64, eps: f64 },
    Adam { rho1: f64, rho2: f64, eps: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "adamax"))]
    AdaMax { rho1: f64, rho2: f64 },
    Nadam { rho1: f64, rho2: f64, eps: f64 },
    NadamPrime { rho1: f64, rho2: f64, eps: f64 },
    NoisySgd { sigma: f64, seed: u64 },
}

impl OptimizerSpec {
    pub fn rmsprop() -> Self {
        OptimizerSpec::RmsProp { rho: 0.9, eps: 1e-6 }
    }

    pub fn adam() -> Self {
        OptimizerSpec::Adam { rho1: 0.9, rho2: 0.999, eps: 1e-8 }
    }

    pub fn adamax() -> Self {
        OptimizerSpec::AdaMax { rho1: 0.9, rho2: 0.999 }
    }

    pub fn adasmooth() -> Self {
        OptimizerSpec::AdaSmooth { rho1: 0.5, rho2: 0.99, eps: 1e-6 }
    }

    pub fn name(&self) -> &'static str {
        use OptimizerSpec::*;
        match self {
            Sgd => "sgd",
            Momentum { .. } => "momentum",
            Nag { .. } => "nag",
            AdaGrad { .. } => "adagrad",
            RmsProp { .. } => "rmsprop",
            RmsPropNesterov { .. } => "rmsprop_nesterov",
            AdaDelta { .. } => "adadelta",
            AdaSmooth { .. } => "adasmooth",
            AdaSmoothDelta { .. } => "adasmooth_delta",
            Adam { .. } => "adam",
            AdaMax { .. } => "adamax",
            Nadam { .. } => "nadam",
            NadamPrime { .. } => "nadam_prime",
            NoisySgd { .. } => "noisy_sgd",
        }
    }

    pub fn validate(&self) -> Result<()> {
        use OptimizerSpec::*;
        let decay = |r: f64| (0.0..1.0).contains(&r);
        let eps_ok = |e: f64| e > 0.0 && e.is_finite();
        let ok = match *self {
            Sgd => true,
            // ρ = 1 is allowed so the undamped case can be studied
            Momentum { rho } | Nag { rho } => (0.0..=1.0).contains(&rho),
            AdaGrad { eps } => eps_ok(eps),
            RmsProp { rho, eps } | AdaDelta { rho, eps } => decay(rho) && eps_ok(eps),
            RmsPropNesterov { rho, alpha, eps } => decay(rho) && (0.0..=1.0).contains(&alpha) && eps_ok(eps),
            AdaSmooth { rho1, rho2, eps } | AdaSmoothDelta { rho1, rho2, eps } => {
                decay(rho1) && decay(rho2) && rho1 <= rho2 && eps_ok(eps)
            }
            Adam { rho1, rho2, eps } | Nadam { rho1, rho2, eps } | NadamPrime { rho1, rho2, eps } => {
                decay(rho1) && decay(rho2) && eps_ok(eps)
            }
            AdaMax { rho1, rho2 } => decay(rho1) && decay(rho2),
            NoisySgd { sigma, .. } => sigma >= 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec("optimizer parameters out of range"))
        }
    }

    fn lookahead(&self) -> Option<f64> {
        match *self {
            OptimizerSpec::Nag { rho } => Some(rho),
            OptimizerSpec::RmsPropNesterov { alpha, .. } => Some(alpha),
            _ => None,
        }
    }
}

/// Per-dimension accumulators of one optimizer run; all start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// `Δx_{t−1}`
    pub prev_delta: Vector,
    /// `E[g²]`, `Σg²` or Adam's `v`
    pub accum_sq: Vector,
    /// `E[Δx²]`
    pub accum_dx_sq: Vector,
    /// `m`
    pub first_moment: Vector,
    /// `u`
    pub inf_norm: Vector,
    /// Bias-corrected `m̂` of the last step (Adam family).
    pub m_hat: Vector,
    /// Bias-corrected `v̂` of the last step (Adam family).
    pub v_hat: Vector,
    /// `Σ Δx` over the effective-ratio window
    pub er_signal_accum: Vector,
    /// `Σ |Δx|` over the effective-ratio window
    pub er_noise_accum: Vector,
    pub step_count: u64,
    /// Current window length `M`.
    pub window_len: usize,
    pub window_cap: usize,
    window: VecDeque<Vector>,
    rng: Option<ChaCha8Rng>,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        OptimizerState {
            prev_delta: Vector::zeros(dim),
            accum_sq: Vector::zeros(dim),
            accum_dx_sq: Vector::zeros(dim),
            first_moment: Vector::zeros(dim),
            inf_norm: Vector::zeros(dim),
            m_hat: Vector::zeros(dim),
            v_hat: Vector::zeros(dim),
            er_signal_accum: Vector::zeros(dim),
            er_noise_accum: Vector::zeros(dim),
            step_count: 0,
            window_len: 0,
            window_cap: DEFAULT_WINDOW_CAP,
            window: VecDeque::new(),
            rng: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.prev_delta.dim()
    }

    /// Starts a fresh effective-ratio window at an epoch boundary. The last
    /// update carries over so the first batch of the epoch sees `M = 1`.
    pub fn begin_epoch(&mut self) {
        self.window.clear();
        if self.step_count > 0 {
            self.window.push_back(self.prev_delta.clone());
        }
        self.refresh_window_sums();
    }

    /// Records one update in the window, evicting the oldest beyond the cap.
    pub fn push_window(&mut self, delta: &Vector) {
        self.window.push_back(delta.clone());
        while self.window.len() > self.window_cap.max(1) {
            self.window.pop_front();
        }
        self.refresh_window_sums();
    }

    fn refresh_window_sums(&mut self) {
        let d = self.dim();
        let mut signal = Vector::zeros(d);
        let mut noise = Vector::zeros(d);
        for delta in &self.window {
            for i in 0..d {
                signal[i] += delta[i];
                noise[i] += delta[i].abs();
            }
        }
        self.er_signal_accum = signal;
        self.er_noise_accum = noise;
        self.window_len = self.window.len();
    }

    pub fn window(&self) -> impl Iterator<Item = &Vector> {
        self.window.iter()
    }
}

/// `|Σ Δx| / Σ |Δx|` over the current window, entrywise in `[0, 1]`.
pub fn effective_ratio(state: &OptimizerState) -> Vector {
    state
        .er_signal_accum
        .iter()
        .zip(state.er_noise_accum.iter())
        .map(|(s, n)| if *n > 0.0 { (s.abs() / n).min(1.0) } else { 0.0 })
        .collect::<Vec<_>>()
        .into()
}

/// `c = (ρ₂ − ρ₁)·e + (1 − ρ₂)`
pub fn scaled_smoothing(rho1: f64, rho2: f64, e: &Vector) -> Vector {
    e.iter().map(|ei| (rho2 - rho1) * ei + (1.0 - rho2)).collect::<Vec<_>>().into()
}

/// An update rule together with its state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub spec: OptimizerSpec,
    pub state: OptimizerState,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        let mut state = OptimizerState::new(dim);
        if let OptimizerSpec::NoisySgd { seed, .. } = spec {
            state.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        }
        Ok(Optimizer { spec, state })
    }

    pub fn with_window_cap(mut self, cap: usize) -> Self {
        self.state.window_cap = cap.max(1);
        self
    }

    /// Where the gradient for the next step must be evaluated.
    pub fn eval_point(&self, x: &Vector) -> Vector {
        match self.spec.lookahead() {
            Some(r) => x.axpy(r, &self.state.prev_delta),
            None => x.clone(),
        }
    }

    /// Applies one update for gradient `g` (taken at [`Self::eval_point`]) and
    /// returns `Δx`.
    pub fn step(&mut self, g: &Vector, eta: f64) -> Result<Vector> {
        check_dim(self.state.dim(), g.dim())?;
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        let st = &mut self.state;
        st.step_count += 1;
        let t = st.step_count as f64;
        let d = g.dim();
        let mut delta = Vector::zeros(d);

        use OptimizerSpec::*;
        match self.spec {
            Sgd => {
                for i in 0..d {
                    delta[i] = -eta * g[i];
                }
            }
            Momentum { rho } | Nag { rho } => {
                for i in 0..d {
                    delta[i] = rho * st.prev_delta[i] - eta * g[i];
                }
            }
            AdaGrad { eps } => {
                for i in 0..d {
                    st.accum_sq[i] += g[i] * g[i];
                    delta[i] = -eta * g[i] / libm::sqrt(st.accum_sq[i] + eps);
                }
            }
            RmsProp { rho, eps } => {
                for i in 0..d {
                    st.accum_sq[i] = rho * st.accum_sq[i] + (1.0 - rho) * g[i] * g[i];
                    delta[i] = -eta * g[i] / libm::sqrt(st.accum_sq[i] + eps);
                }
            }
            RmsPropNesterov { rho, alpha, eps } => {
                for i in 0..d {
                    st.accum_sq[i] = rho * st.accum_sq[i] + (1.0 - rho) * g[i] * g[i];
                    delta[i] = alpha * st.prev_delta[i] - eta * g[i] / libm::sqrt(st.accum_sq[i] + eps);
                }
            }
            AdaDelta { rho, eps } => {
                for i in 0..d {
                    st.accum_sq[i] = rho * st.accum_sq[i] + (1.0 - rho) * g[i] * g[i];
                    let rms_dx = libm::sqrt(st.accum_dx_sq[i] + eps);
                    delta[i] = -eta * rms_dx / libm::sqrt(st.accum_sq[i] + eps) * g[i];
                    st.accum_dx_sq[i] = rho * st.accum_dx_sq[i] + (1.0 - rho) * delta[i] * delta[i];
                }
            }
            AdaSmooth { rho1, rho2, eps } | AdaSmoothDelta { rho1, rho2, eps } => {
                let c = scaled_smoothing(rho1, rho2, &effective_ratio(st));
                let with_delta = matches!(self.spec, AdaSmoothDelta { .. });
                for i in 0..d {
                    let c2 = c[i] * c[i];
                    st.accum_sq[i] = c2 * g[i] * g[i] + (1.0 - c2) * st.accum_sq[i];
                    let denom = libm::sqrt(st.accum_sq[i] + eps);
                    if with_delta {
                        let rms_dx = libm::sqrt(st.accum_dx_sq[i] + eps);
                        delta[i] = -eta * rms_dx / denom * g[i];
                        st.accum_dx_sq[i] = (1.0 - c2) * delta[i] * delta[i] + c2 * st.accum_dx_sq[i];
                    } else {
                        delta[i] = -eta * g[i] / denom;
                    }
                }
            }
            Adam { rho1, rho2, eps } => {
                let bc1 = 1.0 - libm::pow(rho1, t);
                let bc2 = 1.0 - libm::pow(rho2, t);
                for i in 0..d {
                    st.m_hat[i] = corrected(rho1, st.first_moment[i], g[i], bc1);
                    st.v_hat[i] = corrected(rho2, st.accum_sq[i], g[i] * g[i], bc2);
                    st.first_moment[i] = rho1 * st.first_moment[i] + (1.0 - rho1) * g[i];
                    st.accum_sq[i] = rho2 * st.accum_sq[i] + (1.0 - rho2) * g[i] * g[i];
                    delta[i] = -eta * st.m_hat[i] / (libm::sqrt(st.v_hat[i]) + eps);
                }
            }
            AdaMax { rho1, rho2 } => {
                let bc1 = 1.0 - libm::pow(rho1, t);
                for i in 0..d {
                    st.m_hat[i] = corrected(rho1, st.first_moment[i], g[i], bc1);
                    st.first_moment[i] = rho1 * st.first_moment[i] + (1.0 - rho1) * g[i];
                    st.inf_norm[i] = (rho2 * st.inf_norm[i]).max(g[i].abs());
                    delta[i] = if st.inf_norm[i] > 0.0 { -eta * st.m_hat[i] / st.inf_norm[i] } else { 0.0 };
                }
            }
            Nadam { rho1, rho2, eps } => {
                let bc1 = 1.0 - libm::pow(rho1, t);
                let bc1_next = 1.0 - libm::pow(rho1, t + 1.0);
                let bc2 = 1.0 - libm::pow(rho2, t);
                for i in 0..d {
                    st.v_hat[i] = corrected(rho2, st.accum_sq[i], g[i] * g[i], bc2);
                    st.first_moment[i] = rho1 * st.first_moment[i] + (1.0 - rho1) * g[i];
                    st.accum_sq[i] = rho2 * st.accum_sq[i] + (1.0 - rho2) * g[i] * g[i];
                    st.m_hat[i] = rho1 * st.first_moment[i] / bc1_next + (1.0 - rho1) * g[i] / bc1;
                    delta[i] = -eta * st.m_hat[i] / (libm::sqrt(st.v_hat[i]) + eps);
                }
            }
            NadamPrime { rho1, rho2, eps } => {
                let bc1 = 1.0 - libm::pow(rho1, t);
                let bc2 = 1.0 - libm::pow(rho2, t);
                for i in 0..d {
                    let m_hat = corrected(rho1, st.first_moment[i], g[i], bc1);
                    st.m_hat[i] = rho1 * m_hat + (1.0 - rho1) * g[i] / bc1;
                    st.v_hat[i] = corrected(rho2, st.accum_sq[i], g[i] * g[i], bc2);
                    st.first_moment[i] = rho1 * st.first_moment[i] + (1.0 - rho1) * g[i];
                    st.accum_sq[i] = rho2 * st.accum_sq[i] + (1.0 - rho2) * g[i] * g[i];
                    delta[i] = -eta * st.m_hat[i] / (libm::sqrt(st.v_hat[i]) + eps);
                }
            }
            NoisySgd { sigma, .. } => {
                let rng = st.rng.as_mut().expect("noisy sgd state carries a generator");
                for i in 0..d {
                    let noise: f64 = rng.sample(StandardNormal);
                    delta[i] = -eta * g[i] + sigma * noise;
                }
            }
        }

        st.prev_delta = delta.clone();
        st.push_window(&delta);
        Ok(delta)
    }
}

/// `(ρ·prev + (1 − ρ)·new) / bc`, split so that the first step (`prev = 0`,
/// `bc = 1 − ρ`) returns `new` bit for bit.
fn corrected(rho: f64, prev: f64, new: f64, bc: f64) -> f64 {
    rho * prev / bc + ((1.0 - rho) / bc) * new
}

/// One row of a trajectory, describing the iterate before update `t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub eta: f64,
    pub x: Vector,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainTrajectory {
    pub records: Vec<TrajectoryRecord>,
    pub final_x: Vector,
    pub final_loss: f64,
    pub diverged: bool,
}

impl TrainTrajectory {
    /// Number of updates applied.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn initial_loss(&self) -> f64 {
        self.records.first().map_or(self.final_loss, |r| r.loss)
    }

    /// All iterates, starting point first and final point last.
    pub fn iterates(&self) -> Vec<Vector> {
        let mut xs: Vec<Vector> = self.records.iter().map(|r| r.x.clone()).collect();
        xs.push(self.final_x.clone());
        xs
    }
}

fn is_divergent(loss: f64) -> bool {
    !loss.is_finite() || loss > DIVERGENCE_LOSS
}

/// Runs `steps` full-gradient updates from `x₁`, with `η_t` taken from the
/// schedule at `t = 1, 2, …`. Stops early when the loss blows up.
pub fn train<O: Objective + ?Sized>(
    objective: &O,
    spec: &OptimizerSpec,
    schedule: &ScheduleSpec,
    x1: &Vector,
    steps: usize,
) -> Result<TrainTrajectory> {
    let opt = Optimizer::new(spec.clone(), x1.dim())?;
    train_with(objective, opt, schedule, x1, steps)
}

/// As [`train`] with a preconfigured optimizer.
pub fn train_with<O: Objective + ?Sized>(
    objective: &O,
    mut opt: Optimizer,
    schedule: &ScheduleSpec,
    x1: &Vector,
    steps: usize,
) -> Result<TrainTrajectory> {
    check_dim(objective.dim(), x1.dim())?;
    schedule.validate()?;
    let mut x = x1.clone();
    let mut records = Vec::with_capacity(steps);
    for t in 1..=steps as u64 {
        let loss = objective.value(&x)?;
        let g_here = objective.gradient(&x)?;
        if is_divergent(loss) || !g_here.is_finite() {
            return Ok(TrainTrajectory { records, final_x: x, final_loss: loss, diverged: true });
        }
        let eta = schedule.rate_at(t);
        records.push(TrajectoryRecord { t, loss, grad_norm: g_here.norm(), eta, x: x.clone() });
        let probe = opt.eval_point(&x);
        let g = if probe == x { g_here } else { objective.gradient(&probe)? };
        if !g.is_finite() {
            let final_loss = objective.value(&x)?;
            return Ok(TrainTrajectory { records, final_x: x, final_loss, diverged: true });
        }
        let delta = opt.step(&g, eta)?;
        x.add_assign_scaled(1.0, &delta);
    }
    let final_loss = objective.value(&x)?;
    let diverged = is_divergent(final_loss) || !x.is_finite();
    Ok(TrainTrajectory { records, final_x: x, final_loss, diverged })
}

/// Mini-batch sampling: a fresh seeded shuffle each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Batcher {
    pub batch_size: usize,
    pub seed: u64,
}

impl Batcher {
    pub fn epoch_batches(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<MiniBatch> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx.chunks(self.batch_size.max(1)).map(|c| MiniBatch::new(c.to_vec())).collect()
    }
}

/// Epoch-based mini-batch training. Each record holds the full-dataset,
/// eval-mode loss at the start of an epoch; `t` counts epochs and `eta` is
/// the rate of the epoch's first update. The effective-ratio window restarts
/// every epoch so that `M` equals the batch index.
pub fn train_stochastic<O: StochasticObjective + ?Sized>(
    objective: &O,
    spec: &OptimizerSpec,
    schedule: &ScheduleSpec,
    x1: &Vector,
    epochs: usize,
    batcher: Batcher,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<TrainTrajectory> {
    check_dim(objective.dim(), x1.dim())?;
    schedule.validate()?;
    let mut opt = Optimizer::new(spec.clone(), x1.dim())?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(batcher.seed);
    let mut x = x1.clone();
    let mut records = Vec::with_capacity(epochs);
    let mut step: u64 = 0;
    for epoch in 1..=epochs as u64 {
        let (loss, g_full) = objective.full_loss_and_grad(&x)?;
        if is_divergent(loss) || !g_full.is_finite() {
            return Ok(TrainTrajectory { records, final_x: x, final_loss: loss, diverged: true });
        }
        records.push(TrajectoryRecord {
            t: epoch,
            loss,
            grad_norm: g_full.norm(),
            eta: schedule.rate_at(step + 1),
            x: x.clone(),
        });
        opt.state.begin_epoch();
        for batch in batcher.epoch_batches(objective.num_samples(), &mut shuffle_rng) {
            step += 1;
            let probe = opt.eval_point(&x);
            let (_, g) = objective.loss_and_grad(&probe, &batch, Mode::Train(dropout_rng))?;
            if !g.is_finite() {
                return Ok(TrainTrajectory { records, final_x: x, final_loss: f64::NAN, diverged: true });
            }
            let delta = opt.step(&g, schedule.rate_at(step))?;
            x.add_assign_scaled(1.0, &delta);
        }
    }
    let (final_loss, _) = objective.full_loss_and_grad(&x)?;
    let diverged = is_divergent(final_loss) || !x.is_finite();
    Ok(TrainTrajectory { records, final_x: x, final_loss, diverged })
}
