//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed even when all checks pass.

mod common;

use std::process::ExitCode;

use gradkit_core::analysis::{momentum_rate, steepest_energy_drop, vanilla_gd_closed_form, vanilla_gd_optimal};
use gradkit_core::cg::{
    cg_general, cg_practical, cg_vanilla, cg_with, chebyshev_bound, pcg_transformed_with, pcg_untransformed,
    pcg_untransformed_with, BetaKind, CgGeneralConfig, CgRun, Preconditioner, RateRule, Recurrence,
};
use gradkit_core::linalg::{cholesky, condition_number, energy_norm, spectral, Matrix, Vector};
use gradkit_core::linesearch::exact_quadratic_step;
use gradkit_core::objective::{make_synthetic_dataset, MiniBatch, MlpTask, Mode};
use gradkit_core::optim::{effective_ratio, train, train_stochastic, Batcher, Optimizer, OptimizerSpec, OptimizerState};
use gradkit_core::schedule::ScheduleSpec;
use gradkit_core::second_order::{damped_newton_step, newton_step};
use gradkit_core::QuadraticForm;
use rand::Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac01_closed_form_equivalence() -> Check {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = r.random_range(2..=10);
        let q = random_quadratic(d, 10.0, &mut r);
        let lmax = spectral(q.a()).unwrap().lambda[0];
        let eta = 1.0 / lmax;
        let x1 = gaussian_vector(d, &mut r);
        let traj = train(&q, &OptimizerSpec::Sgd, &ScheduleSpec::Constant { eta }, &x1, 50).unwrap();
        for (t, x) in traj.iterates().iter().enumerate() {
            let cf = vanilla_gd_closed_form(&q, &x1, eta, t as u32).unwrap();
            worst = worst.max(x.sub(&cf).max_abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:.3e} > 1e-10"))?;
    Ok(format!("20 instances x 50 steps, max deviation {worst:.2e}"))
}

fn ac02_optimal_rate() -> Check {
    let q = QuadraticForm::homogeneous(Matrix::from_diag(&[4.0, 40.0])).unwrap();
    let (eta, predicted) = vanilla_gd_optimal(&q).unwrap();
    ensure((eta - 1.0 / 22.0).abs() < 1e-15, || format!("optimal eta {eta} != 1/22"))?;
    let traj = train(&q, &OptimizerSpec::Sgd, &ScheduleSpec::Constant { eta }, &[1.0, 1.0].into(), 200).unwrap();
    let xs = traj.iterates();
    let n = xs.len();
    let rate = xs[n - 1].norm() / xs[n - 2].norm();
    ensure((rate - 9.0 / 11.0).abs() <= 0.01, || format!("measured contraction {rate}"))?;
    ensure((predicted - 9.0 / 11.0).abs() < 1e-15, || format!("predicted rate {predicted}"))?;
    Ok(format!("eta=1/22, measured contraction {rate:.6} vs 9/11={:.6}", 9.0 / 11.0))
}

/// Geometric-mean contraction of ‖(x_t − x⋆, Δx_t)‖ over the second half of
/// the run, cut where the norm falls below 1e−11 of its start so that rounding
/// noise never enters the estimate.
fn momentum_contraction(rho: f64, steps: usize) -> (f64, f64, f64) {
    let q = QuadraticForm::new(Matrix::from_diag(&[4.0, 40.0]), [12.0, 80.0].into(), 5.0).unwrap();
    let star = q.minimizer().unwrap();
    let mut opt = Optimizer::new(OptimizerSpec::Momentum { rho }, 2).unwrap();
    let mut x: Vector = [0.0, 0.0].into();
    let mut norms = Vec::with_capacity(steps + 1);
    let state_norm = |x: &Vector, d: &Vector| (x.sub(&star).norm_sq() + d.norm_sq()).sqrt();
    norms.push(state_norm(&x, &opt.state.prev_delta));
    for _ in 0..steps {
        let g = q.gradient(&opt.eval_point(&x)).unwrap();
        let delta = opt.step(&g, 0.04).unwrap();
        x = x.add(&delta);
        norms.push(state_norm(&x, &delta));
    }
    let end = norms.iter().position(|&n| n < 1e-11 * norms[0]).unwrap_or(steps);
    let window = end / 2;
    let rate = (norms[end] / norms[end - window]).powf(1.0 / window as f64);
    (rate, norms[0], norms[steps])
}

fn ac03_momentum_spectral() -> Check {
    let lambdas: Vector = [4.0, 40.0].into();
    let mut parts = Vec::new();
    for (rho, want) in [(0.8, 0.894), (0.2, 0.785)] {
        let predicted = momentum_rate(0.04, rho, &lambdas);
        let (measured, _, _) = momentum_contraction(rho, 400);
        ensure((measured - want).abs() <= 0.01, || format!("rho={rho}: measured {measured:.4}, want {want}"))?;
        ensure((predicted.overall_rate - want).abs() <= 0.01, || {
            format!("rho={rho}: predicted {:.4}", predicted.overall_rate)
        })?;
        parts.push(format!("rho={rho}: measured {measured:.4} predicted {:.4}", predicted.overall_rate));
    }
    let predicted = momentum_rate(0.04, 1.0, &lambdas);
    let (measured, first, last) = momentum_contraction(1.0, 2000);
    ensure(!predicted.converges, || "rho=1 predicted to converge".into())?;
    ensure((measured - 1.0).abs() <= 0.01 && last >= 0.5 * first, || {
        format!("rho=1: measured {measured:.4}, error {first:.3} -> {last:.3}")
    })?;
    parts.push(format!("rho=1: non-convergent (predicted {:.4}, measured {measured:.4})", predicted.overall_rate));
    Ok(parts.join("; "))
}

fn ac04_linesearch_orthogonality() -> Check {
    let mut r = rng(104);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = r.random_range(2..=10);
        let q = random_quadratic(d, 100.0, &mut r);
        let mut x = gaussian_vector(d, &mut r);
        for _ in 0..5 {
            let g = q.gradient(&x).unwrap();
            if g.norm() < 1e-12 {
                break;
            }
            let dir = g.neg();
            let eta = exact_quadratic_step(&q, &x, &dir).unwrap();
            x = x.axpy(eta, &dir);
            let g_next = q.gradient(&x).unwrap();
            worst = worst.max(g_next.dot(&dir).abs() / (g.norm() * dir.norm()));
        }
    }
    ensure(worst <= 1e-8, || format!("worst normalised |g'd| {worst:.3e}"))?;
    Ok(format!("100 quadratics x 5 steps, worst |g_(t+1)^T d_t|/(|g||d|) = {worst:.2e}"))
}

fn steepest_ratio(q: &QuadraticForm, x: &Vector) -> f64 {
    let star = q.minimizer().unwrap();
    let h = q.hessian_matrix();
    let g = q.gradient(x).unwrap();
    let e0 = energy_norm(&x.sub(&star), h).unwrap();
    if g.norm() == 0.0 {
        return 0.0;
    }
    let eta = exact_quadratic_step(q, x, &g.neg()).unwrap();
    let x1 = x.axpy(-eta, &g);
    energy_norm(&x1.sub(&star), h).unwrap() / e0
}

fn ac05_steepest_bound() -> Check {
    let mut r = rng(105);
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_pred = 0.0f64;
    for _ in 0..1000 {
        let d = r.random_range(2..=6);
        let kappa = 10f64.powf(r.random_range(0.0..3.0));
        let q = random_quadratic(d, kappa, &mut r);
        let kappa = condition_number(q.a()).unwrap();
        let x = gaussian_vector(d, &mut r);
        let ratio = steepest_ratio(&q, &x);
        let bound = (kappa - 1.0) / (kappa + 1.0);
        worst_slack = worst_slack.max(ratio - bound);
        let predicted = steepest_energy_drop(&q, &x).unwrap();
        worst_pred = worst_pred.max((predicted - ratio * ratio).abs());
    }
    ensure(worst_slack <= 1e-10, || format!("ratio exceeds bound by {worst_slack:.3e}"))?;
    ensure(worst_pred <= 1e-10, || format!("predicted r^2 off by {worst_pred:.3e}"))?;

    let a = Matrix::from_rows(&[[20.0, 5.0], [5.0, 5.0]]).unwrap();
    let q = QuadraticForm::new(a.clone(), [1.0, -2.0].into(), 0.0).unwrap();
    let star = q.minimizer().unwrap();
    let s = spectral(&a).unwrap();
    let eig_ratio = steepest_ratio(&q, &star.axpy(3.0, &s.eigenvector(1)));
    let flat = QuadraticForm::new(Matrix::from_diag(&[7.0, 7.0, 7.0]), [1.0, 2.0, 3.0].into(), 0.0).unwrap();
    let flat_ratio = steepest_ratio(&flat, &[4.0, -1.0, 0.5].into());
    ensure(eig_ratio <= 1e-8 && flat_ratio <= 1e-8, || {
        format!("one-step cases: eigenvector {eig_ratio:.3e}, kappa=1 {flat_ratio:.3e}")
    })?;
    Ok(format!(
        "1000 pairs, max ratio - bound = {worst_slack:.2e}; eigenvector {eig_ratio:.1e}, kappa=1 {flat_ratio:.1e}"
    ))
}

fn true_residual_ok(q: &QuadraticForm, x: &Vector, tol: f64) -> (bool, f64) {
    let g1 = q.b().norm().max(1.0);
    let g = q.gradient(x).unwrap().norm();
    (g <= tol * g1, g)
}

fn ac06_cg_termination() -> Check {
    let mut r = rng(106);
    let mut worst_iters = 0;
    let mut worst_res = 0.0f64;
    let mut short_misses = 0;
    for i in 0..20 {
        let kappa = [10.0, 100.0, 1e3, 1e4][i % 4];
        let q = random_quadratic(10, kappa, &mut r);
        let x1 = Vector::zeros(10);
        let run = cg_with(&q, &x1, 1e-8, Recurrence::Reorthogonalized).unwrap();
        let (ok, res) = true_residual_ok(&q, run.final_x(), 1e-8);
        ensure(ok && run.terminated_at <= 10, || {
            format!("random d=10 kappa={kappa:e}: {} iterations, residual {res:.3e}", run.terminated_at)
        })?;
        worst_iters = worst_iters.max(run.terminated_at);
        worst_res = worst_res.max(res);
        let short = cg_practical(&q, &x1, 1e-8).unwrap();
        if !true_residual_ok(&q, short.final_x(), 1e-8).0 {
            short_misses += 1;
        }
    }
    for distinct in [1usize, 2, 3, 5] {
        for _ in 0..5 {
            let values: Vec<f64> = (0..distinct).map(|i| 1.0 + 3.0 * i as f64).collect();
            let eigs: Vec<f64> = (0..10).map(|i| values[i % distinct]).collect();
            let a = with_spectrum(&eigs, &mut r);
            let q = QuadraticForm::new(a, gaussian_vector(10, &mut r), 0.0).unwrap();
            for run in [cg_vanilla(&q, &Vector::zeros(10), 1e-8).unwrap(), cg_practical(&q, &Vector::zeros(10), 1e-8).unwrap()] {
                let (ok, res) = true_residual_ok(&q, run.final_x(), 1e-8);
                ensure(ok && run.terminated_at <= distinct, || {
                    format!("r={distinct}: {} iterations, residual {res:.3e}", run.terminated_at)
                })?;
            }
        }
    }
    let sample = QuadraticForm::homogeneous(Matrix::from_rows(&[[20.0, 5.0], [5.0, 5.0]]).unwrap()).unwrap();
    let two = cg_practical(&sample, &[-2.0, 2.0].into(), 1e-10).unwrap().terminated_at;
    let equal = QuadraticForm::homogeneous(Matrix::from_diag(&[20.0, 20.0])).unwrap();
    let one = cg_practical(&equal, &[-2.0, 2.0].into(), 1e-10).unwrap().terminated_at;
    ensure(two == 2 && one == 1, || format!("2x2 instances took {two} and {one} iterations"))?;
    Ok(format!(
        "random d=10 kappa<=1e4 (reorthogonalized) max {worst_iters} iterations, residual <= {worst_res:.1e}; \
         r-distinct spectra within r; 2x2 instances 2 and 1; short recurrence missed 1e-8 on {short_misses}/20"
    ))
}

/// Worst normalised `|dᵢᵀAdⱼ|` and `|gᵢᵀgⱼ|` over `i ≠ j`. Gradients at or below
/// the stopping threshold are numerically zero and carry no direction.
fn cg_pairwise(run: &CgRun, h: &Matrix, tol: f64) -> (f64, f64) {
    let mut conj = 0.0f64;
    let dirs = &run.directions;
    for i in 0..dirs.len() {
        for j in 0..i {
            let c = h.bilinear(&dirs[i], &dirs[j]).abs()
                / (h.bilinear(&dirs[i], &dirs[i]).sqrt() * h.bilinear(&dirs[j], &dirs[j]).sqrt());
            conj = conj.max(c);
        }
    }
    let floor = tol * run.gradients[0].norm().max(1.0);
    let gs: Vec<&Vector> = run.gradients.iter().filter(|g| g.norm() > floor).collect();
    let mut orth = 0.0f64;
    for i in 0..gs.len() {
        for j in 0..i {
            orth = orth.max(gs[i].dot(gs[j]).abs() / (gs[i].norm() * gs[j].norm()));
        }
    }
    (conj, orth)
}

fn ac07_cg_invariants() -> Check {
    let mut r = rng(107);
    let mut worst_conj = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut worst_cheb = f64::NEG_INFINITY;
    let mut short_conj = 0.0f64;
    for (d, kappa) in [(5, 10.0), (10, 100.0), (20, 1e3), (30, 1e4), (30, 10.0), (15, 1e4)] {
        for _ in 0..3 {
            let q = random_quadratic(d, kappa, &mut r);
            let h = q.hessian_matrix();
            let x1 = gaussian_vector(d, &mut r);
            let kappa_true = condition_number(h).unwrap();
            for recurrence in [Recurrence::Reorthogonalized, Recurrence::Short] {
                let run = cg_with(&q, &x1, 1e-10, recurrence).unwrap();
                let (conj, orth) = cg_pairwise(&run, h, 1e-10);
                let errs = run.energy_errors(&q).unwrap();
                for (t, e) in errs.iter().enumerate() {
                    worst_cheb = worst_cheb.max(e - chebyshev_bound(kappa_true, t as u32) * errs[0]);
                }
                if recurrence == Recurrence::Short {
                    short_conj = short_conj.max(conj);
                } else {
                    worst_conj = worst_conj.max(conj);
                    worst_orth = worst_orth.max(orth);
                }
            }
        }
    }
    ensure(worst_conj <= 1e-6, || format!("conjugacy violated: {worst_conj:.3e}"))?;
    ensure(worst_orth <= 1e-6, || format!("gradient orthogonality violated: {worst_orth:.3e}"))?;
    ensure(worst_cheb <= 0.0, || format!("chebyshev bound exceeded by {worst_cheb:.3e}"))?;
    Ok(format!(
        "d<=30, kappa<=1e4 (reorthogonalized): conjugacy {worst_conj:.1e}, orthogonality {worst_orth:.1e}; \
         chebyshev holds for both recurrences; short recurrence conjugacy {short_conj:.1e}"
    ))
}

fn ac08_beta_equivalence() -> Check {
    let mut r = rng(108);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = r.random_range(2..=8);
        let q = random_quadratic(d, 50.0, &mut r);
        let x1 = gaussian_vector(d, &mut r);
        let runs: Vec<_> = [BetaKind::FletcherReeves, BetaKind::PolakRibiere, BetaKind::HestenesStiefel]
            .into_iter()
            .map(|beta| {
                let cfg = CgGeneralConfig { beta, rate: RateRule::Exact, max_iters: d, tol: 1e-8 };
                cg_general(&q, &x1, &cfg).unwrap()
            })
            .collect();
        let n = runs.iter().map(|run| run.betas.len()).min().unwrap();
        for t in 0..n {
            let fr = runs[0].betas[t];
            worst = worst.max((fr - runs[1].betas[t]).abs()).max((fr - runs[2].betas[t]).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("beta sequences differ by {worst:.3e}"))?;
    Ok(format!("20 quadratics with exact steps, max |FR-PR|,|FR-HS| = {worst:.2e}"))
}

fn ac09_preconditioning() -> Check {
    let mut r = rng(109);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let d = r.random_range(2..=12);
        let q = random_quadratic(d, 1e3, &mut r);
        let x1 = gaussian_vector(d, &mut r);
        let perfect = Preconditioner::perfect(q.a()).unwrap();
        let run = pcg_untransformed(&q, &x1, &perfect, 1e-10).unwrap();
        ensure(run.terminated_at == 1, || format!("M=A took {} iterations", run.terminated_at))?;

        let m = random_spd(d, 20.0, &mut r);
        let p = cholesky(&m).unwrap().r().clone();
        let rec = Recurrence::Reorthogonalized;
        let un = pcg_untransformed_with(&q, &x1, &Preconditioner::custom(m).unwrap(), 1e-10, rec).unwrap();
        let tr = pcg_transformed_with(&q, &x1, &p, 1e-10, rec).unwrap();
        ensure(un.terminated_at == tr.terminated_at, || {
            format!("iteration counts {} vs {}", un.terminated_at, tr.terminated_at)
        })?;
        let scale = q.minimizer().unwrap().norm().max(1.0);
        for (a, b) in un.iterates.iter().zip(&tr.iterates) {
            worst = worst.max(a.sub(b).norm() / scale);
        }
    }
    ensure(worst <= 1e-8, || format!("transformed/untransformed differ by {worst:.3e}"))?;
    Ok(format!("M=A converges in 1; transformed vs untransformed (reorthogonalized) max deviation {worst:.2e}"))
}

fn ac10_newton() -> Check {
    let mut r = rng(110);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = r.random_range(1..=10);
        let q = random_quadratic(d, 1e3, &mut r);
        let x1 = gaussian_vector(d, &mut r);
        let star = q.minimizer().unwrap();
        let x2 = x1.add(&newton_step(&q, &x1).unwrap());
        worst = worst.max(x2.sub(&star).norm() / (1.0 + star.norm()));
        let damped = damped_newton_step(&q, &x1, 0.0).unwrap();
        ensure(damped == newton_step(&q, &x1).unwrap(), || "damped(0) differs from newton".into())?;
    }
    ensure(worst <= 1e-10, || format!("newton error {worst:.3e}"))?;
    let q = QuadraticForm::new(Matrix::from_diag(&[4.0, 40.0]), [1.0, -3.0].into(), 0.0).unwrap();
    let x: Vector = [0.5, 2.0].into();
    let g = q.gradient(&x).unwrap();
    let step = damped_newton_step(&q, &x, 1e9).unwrap();
    let gd = g.scaled(-1e-9);
    let rel = step.sub(&gd).norm() / gd.norm();
    ensure(rel <= 1e-6, || format!("alpha=1e9 step deviates from -g/alpha by {rel:.3e}"))?;
    Ok(format!("100 quadratics, max |x2-x*|/(1+|x*|) = {worst:.2e}; alpha=1e9 vs -g/alpha rel {rel:.1e}"))
}

fn ac11_decompositions() -> Check {
    let mut r = rng(111);
    let mut chol = 0.0f64;
    let mut spec = 0.0f64;
    let mut orth = 0.0f64;
    for i in 0..100 {
        let d = 1 + i % 20;
        let a = gram_spd(d, &mut r);
        let f = cholesky(&a).unwrap();
        chol = chol.max(rel_frobenius(&f.reconstruct(), &a));

        let g = gaussian_matrix(d, d, &mut r);
        let s = g.add(&g.transpose()).unwrap();
        let sd = spectral(&s).unwrap();
        spec = spec.max(rel_frobenius(&sd.reconstruct(), &s));
        let qtq = sd.q.transpose().matmul(&sd.q).unwrap();
        orth = orth.max(qtq.sub(&Matrix::identity(d)).unwrap().frobenius_norm());
    }
    ensure(chol <= 1e-12, || format!("cholesky round trip {chol:.3e}"))?;
    ensure(spec <= 1e-10 && orth <= 1e-10, || format!("spectral round trip {spec:.3e}, orthogonality {orth:.3e}"))?;
    let indefinite = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let negative = Matrix::from_diag(&[1.0, -2.0, 3.0]);
    ensure(cholesky(&indefinite).is_err() && cholesky(&negative).is_err(), || "non-PD accepted".into())?;
    Ok(format!("cholesky {chol:.1e}, spectral {spec:.1e}, |QtQ-I| {orth:.1e}; non-PD rejected"))
}

fn ac12_optimizer_identities() -> Check {
    let mut r = rng(112);
    let mut worst = 0.0f64;
    for &rho_star in &[0.5, 0.9, 0.99] {
        let mut smooth = Optimizer::new(OptimizerSpec::AdaSmooth { rho1: rho_star, rho2: rho_star, eps: 1e-6 }, 4).unwrap();
        let rho = 1.0 - (1.0 - rho_star) * (1.0 - rho_star);
        let mut rms = Optimizer::new(OptimizerSpec::RmsProp { rho, eps: 1e-6 }, 4).unwrap();
        for _ in 0..200 {
            let g = gaussian_vector(4, &mut r);
            let a = smooth.step(&g, 0.01).unwrap();
            let b = rms.step(&g, 0.01).unwrap();
            worst = worst.max(a.sub(&b).max_abs());
        }
    }
    ensure(worst <= 1e-12, || format!("adasmooth/rmsprop differ by {worst:.3e}"))?;

    for _ in 0..50 {
        let g = gaussian_vector(3, &mut r).scaled(10f64.powf(r.random_range(-3.0..3.0)));
        let mut adam = Optimizer::new(OptimizerSpec::adam(), 3).unwrap();
        adam.step(&g, 0.001).unwrap();
        for i in 0..3 {
            let (m_hat, v_hat) = (adam.state.m_hat[i], adam.state.v_hat[i]);
            ensure(m_hat == g[i] && v_hat == g[i] * g[i], || {
                format!("adam first step m_hat {m_hat}, v_hat {v_hat} vs g {}", g[i])
            })?;
        }
    }

    let mut momentum = Optimizer::new(OptimizerSpec::Momentum { rho: 0.0 }, 3).unwrap();
    let mut sgd = Optimizer::new(OptimizerSpec::Sgd, 3).unwrap();
    for _ in 0..100 {
        let g = gaussian_vector(3, &mut r);
        ensure(momentum.step(&g, 0.05).unwrap() == sgd.step(&g, 0.05).unwrap(), || "momentum(0) != sgd".into())?;
    }

    let er = |hist: &[f64]| {
        let mut st = OptimizerState::new(1);
        for &h in hist {
            st.push_window(&[h].into());
        }
        effective_ratio(&st)[0]
    };
    let vals = (er(&[1.0, 1.0, 1.0]), er(&[1.0, -1.0, 1.0, -1.0]), er(&[2.0, -1.0]));
    ensure(vals == (1.0, 0.0, 1.0 / 3.0), || format!("effective ratios {vals:?}"))?;
    Ok(format!("adasmooth=rmsprop max {worst:.1e}; adam m_hat=g, v_hat=g^2 bit-exact; momentum(0)=sgd; ER exact"))
}

fn ac13_mlp_gradient_check() -> Check {
    let data = make_synthetic_dataset(3, 8, 4, 113);
    let task = MlpTask::new(data, 3, 6, 0.5, 113).unwrap();
    let batch = MiniBatch::all(task.dataset.len());
    let mut worst = 0.0f64;
    let h = 1e-5;
    for k in 0..10 {
        let w = task.init_weights(1000 + k).scaled(2.0);
        let (_, grad) = task.mlp_loss_and_grad(&w, &batch, Mode::Eval).unwrap();
        let mut fd = Vector::zeros(w.dim());
        for i in 0..w.dim() {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let lp = task.mlp_loss_and_grad(&wp, &batch, Mode::Eval).unwrap().0;
            let lm = task.mlp_loss_and_grad(&wm, &batch, Mode::Eval).unwrap().0;
            fd[i] = (lp - lm) / (2.0 * h);
        }
        worst = worst.max(grad.sub(&fd).norm() / grad.norm().max(fd.norm()));
    }
    ensure(worst < 1e-5, || format!("relative error {worst:.3e}"))?;
    Ok(format!("10 weight settings, max relative error {worst:.2e}"))
}

/// Per-optimizer learning rates for the synthetic training comparison.
pub fn desk_scale_suite() -> Vec<(OptimizerSpec, f64)> {
    let eps = 1e-6;
    vec![
        (OptimizerSpec::Sgd, 0.001),
        (OptimizerSpec::Momentum { rho: 0.9 }, 0.001),
        (OptimizerSpec::Nag { rho: 0.9 }, 0.001),
        (OptimizerSpec::AdaGrad { eps }, 0.01),
        (OptimizerSpec::RmsProp { rho: 0.9, eps }, 0.001),
        (OptimizerSpec::RmsPropNesterov { rho: 0.9, alpha: 0.9, eps }, 0.001),
        (OptimizerSpec::AdaDelta { rho: 0.9, eps }, 1.0),
        (OptimizerSpec::AdaSmooth { rho1: 0.5, rho2: 0.99, eps }, 0.001),
        (OptimizerSpec::AdaSmoothDelta { rho1: 0.5, rho2: 0.99, eps }, 0.5),
        (OptimizerSpec::adam(), 0.001),
        (OptimizerSpec::AdaMax { rho1: 0.9, rho2: 0.999 }, 0.002),
        (OptimizerSpec::Nadam { rho1: 0.9, rho2: 0.999, eps }, 0.001),
        (OptimizerSpec::NadamPrime { rho1: 0.9, rho2: 0.999, eps }, 0.001),
        (OptimizerSpec::NoisySgd { sigma: 1e-4, seed: 14 }, 0.001),
    ]
}

fn ac14_desk_scale_training() -> Check {
    let data = make_synthetic_dataset(2, 256, 10, 14);
    let task = MlpTask::new(data, 2, 16, 0.5, 14).unwrap();
    let batcher = Batcher { batch_size: 64, seed: 14 };
    let mut finals = Vec::new();
    for (spec, eta) in desk_scale_suite() {
        let mut drop_rng = task.dropout_rng();
        let traj = train_stochastic(&task, &spec, &ScheduleSpec::Constant { eta }, &task.weights, 30, batcher, &mut drop_rng)
            .unwrap();
        let (start, end) = (traj.initial_loss(), traj.final_loss);
        ensure(end < start && !traj.diverged, || format!("{} did not reduce loss: {start:.5} -> {end:.5}", spec.name()))?;
        finals.push((spec.name(), end));
    }
    let get = |n: &str| finals.iter().find(|(k, _)| *k == n).unwrap().1;
    let best = get("adagrad").min(get("rmsprop"));
    let smooth = get("adasmooth");
    ensure(smooth <= 1.05 * best, || {
        format!("adasmooth {smooth:.5} > 1.05 x min(adagrad {:.5}, rmsprop {:.5})", get("adagrad"), get("rmsprop"))
    })?;
    Ok(format!(
        "all 14 reduce loss; adasmooth {smooth:.4} vs adagrad {:.4}, rmsprop {:.4}",
        get("adagrad"),
        get("rmsprop")
    ))
}

fn ac15_scheduler_goldens() -> Check {
    use ScheduleSpec::*;
    let cases: Vec<(&str, f64, f64)> = vec![
        ("step decay t=25", StepDecay { eta0: 0.1, d: 0.5, n: 10 }.rate_at(25), 0.025),
        ("step decay t=0", StepDecay { eta0: 0.1, d: 0.5, n: 10 }.rate_at(0), 0.1),
        ("inverse sqrt plateau", InverseSqrt { eta0: 0.01, w: 50 }.rate_at(49), 0.01),
        ("noam peak", Noam { alpha: 1.0, d_model: 512.0, w: 4000 }.rate_at(4000), 512f64.powf(-0.5) * 4000f64.powf(-0.5)),
        ("stlr t=0", Stlr { eta_max: 0.01, t_total: 1000, frac: 0.1, ratio: 32.0 }.rate_at(0), 3.125e-4),
        ("stlr t=cut", Stlr { eta_max: 0.01, t_total: 1000, frac: 0.1, ratio: 32.0 }.rate_at(100), 0.01),
        ("triangular peak", Triangular { eta0: 0.001, eta_max: 0.006, s: 100 }.rate_at(100), 0.006),
        ("triangular start", Triangular { eta0: 0.001, eta_max: 0.006, s: 100 }.rate_at(0), 0.001),
        ("cyclical cosine t=1", CyclicalCosine { eta0: 0.05, t_total: 300, m: 3 }.rate_at(1), 0.05),
        ("cyclical step t=3", CyclicalStep { eta_min: 0.1, eta_max: 0.5, m: 5 }.rate_at(3), 0.2),
        ("annealing default t=0", ScheduleSpec::annealing_poly_default(100).rate_at(0), 0.001),
        ("annealing default t=M", ScheduleSpec::annealing_poly_default(100).rate_at(100), 1e-10),
        ("triangular2 cycle-2 peak", Triangular2 { eta0: 0.001, eta_max: 0.006, s: 100 }.rate_at(300), 0.001 + 0.005 / 2.0),
        ("exponential t=10", Exponential { eta0: 0.1, k: 0.1 }.rate_at(10), 0.1 * (-1.0f64).exp()),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in &cases {
        let err = (got - want).abs();
        ensure(err <= 1e-12, || format!("{name}: {got} vs {want}"))?;
        worst = worst.max(err);
    }
    let noam = Noam { alpha: 1.0, d_model: 512.0, w: 4000 }.rate_at(4000);
    let exp = Exponential { eta0: 0.1, k: 0.1 }.rate_at(10);
    ensure((noam - 6.988e-4).abs() < 5e-7 && (exp - 0.036788).abs() < 5e-7, || "rounded goldens".into())?;
    Ok(format!("{} golden values, max error {worst:.1e}", cases.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let checks: [Criterion; 15] = [
        ("AC01 closed-form equivalence", ac01_closed_form_equivalence),
        ("AC02 optimal-rate reproduction", ac02_optimal_rate),
        ("AC03 momentum spectral prediction", ac03_momentum_spectral),
        ("AC04 line-search orthogonality", ac04_linesearch_orthogonality),
        ("AC05 steepest-descent worst-case bound", ac05_steepest_bound),
        ("AC06 CG termination", ac06_cg_termination),
        ("AC07 CG invariants", ac07_cg_invariants),
        ("AC08 beta-formula equivalence", ac08_beta_equivalence),
        ("AC09 preconditioning", ac09_preconditioning),
        ("AC10 Newton one-step", ac10_newton),
        ("AC11 decompositions", ac11_decompositions),
        ("AC12 optimizer identities", ac12_optimizer_identities),
        ("AC13 MLP gradient check", ac13_mlp_gradient_check),
        ("AC14 desk-scale training", ac14_desk_scale_training),
        ("AC15 scheduler golden values", ac15_scheduler_goldens),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 15 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
