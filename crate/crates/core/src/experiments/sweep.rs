use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    build_model, make_pseudo_partition, make_supervised_partition, random_subsample, sample, DataModel, Dataset,
    Partition,
};
use crate::error::{invalid, Error, Result};
use crate::experiments::config::{Convention, ExperimentConfig, SubsampleRule, Target, Variant};
use crate::gaussian::{w2_squared_factored, CoordinateSet};
use crate::linalg::{psd_sqrt, Matrix};
use crate::losses::{LossSpec, Objective};
use crate::scalar::Real;
use crate::trainers::{gd_train, PcaBasis};

/// Generator streams derived from one trial seed. Streams that depend on `k`
/// add it to a per-purpose base so every `(purpose, k)` pair is distinct.
mod stream {
    pub const MODEL: u64 = 1;
    pub const DATA: u64 = 2;
    pub const SUBSET: u64 = 1 << 32;
    pub const LATENT: u64 = 2 << 32;
    pub const INIT: u64 = 3 << 32;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of trial `trial_index`.
pub fn trial_seed(base_seed: u64, trial_index: usize) -> u64 {
    base_seed.wrapping_add(trial_index as u64)
}

/// Test error of generators against one model, with the target factor
/// precomputed.
///
/// The generated law is `N(0, GGᵀ)`; the target is `N(0, FFᵀ)` with `F = Γ`
/// (clean) or `F = (ΓΓᵀ + σ²I)^½` (noisy). Distances are evaluated from the
/// factors directly, which never forms `GGᵀ`.
#[derive(Debug, Clone)]
pub struct TestMetric<T> {
    target_factor: Matrix<T>,
    convention: Convention,
}

impl<T: Real> TestMetric<T> {
    pub fn new(model: &DataModel<T>, convention: Convention, target: Target) -> Result<Self> {
        let target_factor = match target {
            Target::Clean => model.gamma.clone(),
            Target::Noisy => {
                let d = model.d();
                let mut cov = model.gamma.gram_outer();
                let s2 = model.sigma * model.sigma;
                for i in 0..d {
                    cov[(i, i)] += s2;
                }
                psd_sqrt(&cov)?
            }
        };
        Ok(Self {
            target_factor,
            convention,
        })
    }

    pub fn eval(&self, g: &Matrix<T>) -> Result<T> {
        if g.rows() != self.target_factor.rows() {
            return invalid(format!(
                "G has {} rows, model dimension is {}",
                g.rows(),
                self.target_factor.rows()
            ));
        }
        let sq = w2_squared_factored(T::zero(), g, &self.target_factor)?;
        Ok(match self.convention {
            Convention::W2 => sq.sqrt(),
            Convention::W2Squared => sq,
        })
    }
}

/// Distance between `N(0, GGᵀ)` and the selected target of `model`.
pub fn test_error<T: Real>(g: &Matrix<T>, model: &DataModel<T>, convention: Convention, target: Target) -> Result<T> {
    TestMetric::new(model, convention, target)?.eval(g)
}

/// Result of one `(k, n_ps)` cell of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub test_error: f64,
    pub train_error: f64,
    pub iterations: usize,
}

/// Everything a trial shares across its grid cells: the model, the dataset,
/// and (for the closed form) the sample-covariance eigenbasis.
#[derive(Debug, Clone)]
pub struct TrialContext {
    config: ExperimentConfig,
    seed: u64,
    model: DataModel<f64>,
    data: Dataset<f64>,
    metric: TestMetric<f64>,
    pca: Option<PcaBasis<f64>>,
}

impl TrialContext {
    pub fn new(config: &ExperimentConfig, trial_index: usize) -> Result<Self> {
        let seed = trial_seed(config.base_seed, trial_index);
        let model = build_model(
            config.d,
            config.m,
            config.sigma,
            config.gamma_kind,
            &mut rng_for(seed, stream::MODEL),
        )?;
        let data = sample(&model, config.n, &mut rng_for(seed, stream::DATA))?;
        let metric = TestMetric::new(&model, config.test_convention, config.test_target)?;
        let pca = match config.variant {
            Variant::Pca => Some(PcaBasis::new(&data.x)?),
            Variant::Gd(_) => None,
        };
        Ok(Self {
            config: config.clone(),
            seed,
            model,
            data,
            metric,
            pca,
        })
    }

    pub fn model(&self) -> &DataModel<f64> {
        &self.model
    }

    pub fn data(&self) -> &Dataset<f64> {
        &self.data
    }

    /// The training split used at `(k, n_ps)`.
    pub fn partition(&self, k: usize, n_ps: usize) -> Result<Partition<f64>> {
        if self.config.variant.is_supervised() {
            let subset = match self.config.subsample {
                SubsampleRule::First => CoordinateSet::first(self.config.m, k)?,
                SubsampleRule::Random => {
                    random_subsample(self.config.m, k, &mut rng_for(self.seed, stream::SUBSET + k as u64))?
                }
            };
            make_supervised_partition(&self.data, n_ps, &subset)
        } else {
            make_pseudo_partition(&self.data, n_ps, k, &mut rng_for(self.seed, stream::LATENT + k as u64))
        }
    }

    pub fn run(&self, k: usize, n_ps: usize) -> Result<TrialOutcome> {
        match (self.config.variant, &self.pca) {
            (Variant::Pca, Some(pca)) => {
                let g = pca.generator(k)?;
                let comps = pca.fit(k.min(pca.d()))?.components;
                let train = Objective::new(LossSpec::PcaProj, &Partition::unsupervised(self.data.x.clone(), k))?
                    .value(&comps)?;
                Ok(TrialOutcome {
                    test_error: self.metric.eval(&g)?,
                    train_error: train,
                    iterations: 0,
                })
            }
            (Variant::Gd(spec), _) => {
                let part = self.partition(k, n_ps)?;
                let mut init = rng_for(self.seed, stream::INIT + k as u64);
                let res = gd_train(spec, &part, k, &self.config.gd, &mut init)?;
                Ok(TrialOutcome {
                    test_error: self.metric.eval(&res.g)?,
                    train_error: res.final_train_loss,
                    iterations: res.iterations,
                })
            }
            (Variant::Pca, None) => unreachable!("PCA basis is built for the closed-form variant"),
        }
    }
}

/// One trial at one grid cell.
pub fn run_trial(config: &ExperimentConfig, k: usize, n_ps: usize, trial_index: usize) -> Result<TrialOutcome> {
    TrialContext::new(config, trial_index)?.run(k, n_ps)
}

/// Aggregate over trials at one `(variant, k, n_ps)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub variant: String,
    pub k: usize,
    pub n_ps: usize,
    pub trials: usize,
    pub test_mean: f64,
    pub test_std: f64,
    pub train_mean: f64,
    pub train_std: f64,
    pub iters_mean: f64,
    pub iters_std: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
    (mean, var.max(0.0).sqrt())
}

/// All cells of one trial, in `(n_ps, k)` order.
fn run_trial_grid(config: &ExperimentConfig, grid: &[(usize, usize)], trial: usize) -> Result<Vec<TrialOutcome>> {
    let wrap = |k: usize, n_ps: usize, e: Error| Error::Trial {
        trial,
        k,
        n_ps,
        source: Box::new(e),
    };
    let (n0, k0) = grid[0];
    let ctx = TrialContext::new(config, trial).map_err(|e| wrap(k0, n0, e))?;
    grid.iter()
        .map(|&(n_ps, k)| ctx.run(k, n_ps).map_err(|e| wrap(k, n_ps, e)))
        .collect()
}

/// Runs every trial over the full `n_ps_list x k_grid` product.
///
/// Trials run in parallel on `config.workers` threads; aggregation is done in
/// trial order after all trials finish, so the output does not depend on the
/// worker count. Records are sorted by `(n_ps, k)`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let mut n_ps_list = config.n_ps_list.clone();
    n_ps_list.sort_unstable();
    n_ps_list.dedup();
    let mut k_grid = config.k_grid();
    k_grid.sort_unstable();
    k_grid.dedup();
    let grid: Vec<(usize, usize)> = n_ps_list
        .iter()
        .flat_map(|&p| k_grid.iter().map(move |&k| (p, k)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<TrialOutcome>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial_grid(config, &grid, t))
            .collect::<Result<Vec<_>>>()
    })?;

    let name = config.variant.name().to_string();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(cell, &(n_ps, k))| {
            let col = |f: fn(&TrialOutcome) -> f64| -> Vec<f64> { per_trial.iter().map(|t| f(&t[cell])).collect() };
            let (test_mean, test_std) = mean_std(&col(|o| o.test_error));
            let (train_mean, train_std) = mean_std(&col(|o| o.train_error));
            let (iters_mean, iters_std) = mean_std(&col(|o| o.iterations as f64));
            SweepRecord {
                variant: name.clone(),
                k,
                n_ps,
                trials: config.trials,
                test_mean,
                test_std,
                train_mean,
                train_std,
                iters_mean,
                iters_std,
            }
        })
        .collect())
}

/// Looks up the record at `(k, n_ps)`.
pub fn find_record(records: &[SweepRecord], k: usize, n_ps: usize) -> Option<&SweepRecord> {
    records.iter().find(|r| r.k == k && r.n_ps == n_ps)
}
