use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::datagen::Partition;
use crate::error::{invalid, Error, Result};
use crate::linalg::{standard_normal_matrix, Matrix};
use crate::losses::{LossSpec, Objective};
use crate::scalar::Real;

/// How the step for the next iteration is derived from the chosen multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMode {
    /// `step ← step · m`, carried across iterations.
    #[default]
    Running,
    /// Every iteration tries `step_init · m`.
    Fixed,
}

/// Which candidate step is adopted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcceptRule {
    /// The lowest-loss candidate, even if it does not decrease the loss.
    #[default]
    Best,
    /// The lowest-loss candidate only if it strictly decreases the loss;
    /// otherwise `G` and the step are left unchanged for this iteration.
    Decrease,
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(&self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => invalid(format!(
                        concat!("unknown ", stringify!($ty), " `{}` (expected one of: {})"),
                        other,
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}

named_enum!(StepMode { Running => "running", Fixed => "fixed" });
named_enum!(AcceptRule { Best => "best", Decrease => "decrease" });

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GdOptions {
    pub max_iters: usize,
    /// Standard deviation of the i.i.d. Gaussian entries of `G₀`.
    pub init_std: f64,
    pub step_init: f64,
    /// Tried in order each iteration; the first minimizer wins ties.
    pub step_multipliers: Vec<f64>,
    /// Stop once `‖∇L‖_F` falls below this.
    pub grad_stop: f64,
    /// A step with `‖ΔG‖_F` below this counts toward stalling.
    pub move_tol: f64,
    /// Stop after more than this many consecutive stalled steps.
    pub stall_limit: usize,
    pub step_mode: StepMode,
    pub accept_rule: AcceptRule,
    /// Keep the loss after every iteration in [`TrainResult::loss_trace`].
    pub record_trace: bool,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            init_std: 0.03,
            step_init: 1e-4,
            step_multipliers: vec![1e-7, 5e-6, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0],
            grad_stop: 0.05,
            move_tol: 1e-5,
            stall_limit: 5,
            step_mode: StepMode::Running,
            accept_rule: AcceptRule::Best,
            record_trace: false,
        }
    }
}

impl GdOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("init_std", self.init_std),
            ("step_init", self.step_init),
            ("grad_stop", self.grad_stop),
            ("move_tol", self.move_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.step_multipliers.is_empty() {
            return invalid("step_multipliers must not be empty");
        }
        if let Some(m) = self.step_multipliers.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return invalid(format!("step multipliers must be positive and finite, got {m}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    GradSmall,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult<T> {
    pub g: Matrix<T>,
    /// Number of parameter updates performed.
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Loss at the returned `g`, evaluated directly.
    pub final_train_loss: T,
    /// Initial loss followed by the loss after each iteration.
    pub loss_trace: Option<Vec<T>>,
}

/// Trains a `d x k` generator from `G₀ ~ N(0, init_std²)` drawn from `rng`.
pub fn gd_train<T: Real, R: Rng + ?Sized>(
    spec: LossSpec,
    part: &Partition<T>,
    k: usize,
    opts: &GdOptions,
    rng: &mut R,
) -> Result<TrainResult<T>> {
    if k == 0 {
        return invalid("latent dimension k must be at least 1");
    }
    let objective = Objective::new(spec, part)?;
    let g0 = standard_normal_matrix::<T, _>(part.d(), k, rng).scale(T::lit(opts.init_std));
    gd_train_from(&objective, g0, opts)
}

/// Adaptive-step gradient descent from a given starting point.
///
/// Each iteration evaluates the loss at `G - (s·mᵢ)∇L` for every multiplier
/// `mᵢ`, adopts the lowest (first on ties), and in running mode carries
/// `s ← s·m`. Stops when the gradient norm drops below `grad_stop` (checked
/// before stepping), after more than `stall_limit` consecutive steps shorter
/// than `move_tol`, or after `max_iters` steps.
pub fn gd_train_from<T: Real>(objective: &Objective<T>, g0: Matrix<T>, opts: &GdOptions) -> Result<TrainResult<T>> {
    opts.validate()?;
    let multipliers: Vec<T> = opts.step_multipliers.iter().map(|&m| T::lit(m)).collect();
    let step_init = T::lit(opts.step_init);
    let grad_stop = T::lit(opts.grad_stop);
    let move_tol = T::lit(opts.move_tol);

    let mut g = g0;
    let mut loss = objective.value(&g)?;
    let mut trace = opts.record_trace.then(|| vec![loss]);
    let mut step = step_init;
    let mut stalled = 0usize;

    let finish = |g: Matrix<T>, iterations, stop_reason, loss, trace| {
        Ok(TrainResult {
            g,
            iterations,
            stop_reason,
            final_train_loss: loss,
            loss_trace: trace,
        })
    };

    for it in 0..opts.max_iters {
        let grad = objective.gradient(&g)?;
        let grad_norm = grad.frobenius_norm();
        if grad_norm < grad_stop {
            return finish(g, it, StopReason::GradSmall, loss, trace);
        }

        let base = match opts.step_mode {
            StepMode::Running => step,
            StepMode::Fixed => step_init,
        };
        let line = objective.line(&g, &grad)?;
        let mut best: Option<(T, T)> = None;
        for &m in &multipliers {
            let t = base * m;
            let value = line.eval(t)?;
            let value = if value.is_finite() { value } else { T::infinity() };
            if best.is_none_or(|(_, b)| value < b) {
                best = Some((m, value));
            }
        }
        let (m, candidate) = best.expect("multipliers are nonempty");

        let adopt = match opts.accept_rule {
            AcceptRule::Best => candidate.is_finite(),
            AcceptRule::Decrease => candidate < loss,
        };
        let moved = if adopt {
            let t = base * m;
            g.add_scaled(-t, &grad);
            g.ensure_finite("generator after step")?;
            loss = objective.value(&g)?;
            step = base * m;
            t * grad_norm
        } else {
            T::zero()
        };
        if let Some(tr) = trace.as_mut() {
            tr.push(loss);
        }

        if moved < move_tol {
            stalled += 1;
            if stalled > opts.stall_limit {
                return finish(g, it + 1, StopReason::Stalled, loss, trace);
            }
        } else {
            stalled = 0;
        }
    }
    finish(g, opts.max_iters, StopReason::MaxIters, loss, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_model, make_pseudo_partition, sample, GammaKind};
    use crate::trainers::pca_fit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_partition(n_ps: usize, k: usize, seed: u64) -> Partition<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = build_model(64, 10, 0.15, GammaKind::Hadamard, &mut rng).unwrap();
        let data = sample(&model, 20, &mut rng).unwrap();
        make_pseudo_partition(&data, n_ps, k, &mut rng).unwrap()
    }

    #[test]
    fn starting_at_global_minimum_stops_quickly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g: Matrix<f64> = standard_normal_matrix(6, 4, &mut rng);
        let z: Matrix<f64> = standard_normal_matrix(4, 5, &mut rng);
        let part = Partition::new(g.matmul(&z), z, Matrix::zeros(6, 0)).unwrap();
        let obj = Objective::new(LossSpec::PsPlain, &part).unwrap();
        let opts = GdOptions::default();
        let res = gd_train_from(&obj, g.clone(), &opts).unwrap();
        assert!(res.iterations <= opts.stall_limit + 1);
        assert!(matches!(res.stop_reason, StopReason::GradSmall | StopReason::Stalled));
        assert_eq!(res.g, g);
    }

    #[test]
    fn training_is_deterministic() {
        let part = default_partition(12, 15, 3);
        let opts = GdOptions {
            max_iters: 60,
            ..GdOptions::default()
        };
        let run = || gd_train(LossSpec::PsPlain, &part, 15, &opts, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn loss_trace_is_nonincreasing() {
        for spec in [LossSpec::PsPlain, LossSpec::PsRegularized, LossSpec::PsPinv] {
            let part = default_partition(12, 8, 4);
            let opts = GdOptions {
                max_iters: 80,
                record_trace: true,
                ..GdOptions::default()
            };
            let res = gd_train(spec, &part, 8, &opts, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let trace = res.loss_trace.unwrap();
            assert_eq!(trace.len(), res.iterations + 1);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{spec}: {} -> {}", w[0], w[1]);
            }
            assert_eq!(*trace.last().unwrap(), res.final_train_loss);
            assert!(res.final_train_loss <= trace[0]);
            assert!(res.iterations <= opts.max_iters);
        }
    }

    #[test]
    fn interpolating_regime_reaches_small_loss() {
        // n_ps = 0 turns ps_plain into the scaled projection loss.
        let part = default_partition(0, 24, 6);
        let res = gd_train(
            LossSpec::PsPlain,
            &part,
            24,
            &GdOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(7),
        )
        .unwrap();
        assert!(res.final_train_loss < 0.1, "{}", res.final_train_loss);
        // The closed form attains 0 at k >= n.
        let fit = pca_fit(&part.x_unsup, 24).unwrap();
        let obj = Objective::new(LossSpec::PsPlain, &part).unwrap();
        assert!(obj.value(&fit.components).unwrap() < 1e-9);
    }

    #[test]
    fn final_loss_matches_returned_generator() {
        let part = default_partition(20, 30, 8);
        let opts = GdOptions {
            max_iters: 40,
            ..GdOptions::default()
        };
        let res = gd_train(LossSpec::PsPinv, &part, 30, &opts, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let obj = Objective::new(LossSpec::PsPinv, &part).unwrap();
        assert_eq!(obj.value(&res.g).unwrap(), res.final_train_loss);
    }

    #[test]
    fn fixed_mode_and_decrease_rule_run() {
        let part = default_partition(12, 10, 2);
        let opts = GdOptions {
            max_iters: 50,
            step_mode: StepMode::Fixed,
            accept_rule: AcceptRule::Decrease,
            record_trace: true,
            ..GdOptions::default()
        };
        let res = gd_train(LossSpec::PsPlain, &part, 10, &opts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let trace = res.loss_trace.unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(*trace.last().unwrap() < trace[0]);
    }

    #[test]
    fn options_validation() {
        let bad = GdOptions {
            step_multipliers: vec![],
            ..GdOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = GdOptions {
            init_std: 0.0,
            ..GdOptions::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("fixed".parse::<StepMode>().unwrap(), StepMode::Fixed);
        assert!("sometimes".parse::<AcceptRule>().is_err());
    }
}
