use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::{build_model, GammaKind, Partition};
use crate::error::Result;
use crate::experiments::config::{Convention, ExperimentConfig, Target, Variant};
use crate::experiments::sweep::{TestMetric, TrialContext};
use crate::gaussian::{gaussian_kl, norm_concentration, pseudo_w2, pseudo_w2_zero_padded, w2, CoordinateSet, Gaussian};
use crate::linalg::{qr, random_orthonormal_cols, standard_normal_matrix, Matrix};
use crate::losses::{finite_diff_gradient, relative_deviations, LossSpec, Objective, DEFAULT_FD_STEP};
use crate::trainers::PcaBasis;

/// One assertion of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            detail: format!("{value:.3e} < {tolerance:.1e}"),
            passed: value < tolerance,
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            detail: detail.into(),
            passed,
        }
    }
}

/// Outcome of a verification suite: the checks plus informational notes.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite)?;
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  {tag} {}: {}", c.name, c.detail)?;
        }
        for n in &self.notes {
            writeln!(f, "  note {n}")?;
        }
        write!(
            f,
            "{}",
            if self.passed() {
                "all checks passed"
            } else {
                "some checks FAILED"
            }
        )
    }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Closed-form PCA constancy over the latent dimensions `ks`, for every trial
/// of `config`: the W2 test error and the KL divergence between the
/// noise-padded generated law `N(0, GGᵀ + σ²I)` and `N(0, ΓΓᵀ + σ²I)` must
/// not depend on `k` (to `1e-9`). A single `k` passes vacuously.
pub fn verify_theorem1(config: &ExperimentConfig, ks: &[usize]) -> Result<VerifyReport> {
    let cfg = ExperimentConfig {
        variant: Variant::Pca,
        ..config.clone()
    };
    cfg.validate()?;
    let mut report = VerifyReport::new("theorem1");
    let mut w2_dev = 0.0f64;
    let mut kl_dev = 0.0f64;
    let kl_branch = cfg.sigma > 0.0;
    for trial in 0..cfg.trials {
        let ctx = TrialContext::new(&cfg, trial)?;
        let w2s: Vec<f64> = ks
            .iter()
            .map(|&k| ctx.run(k, 0).map(|o| o.test_error))
            .collect::<Result<_>>()?;
        w2_dev = w2_dev.max(spread(&w2s));
        if kl_branch {
            let basis = PcaBasis::new(&ctx.data().x)?;
            let d = cfg.d;
            let s2 = cfg.sigma * cfg.sigma;
            let pad = |mut c: Matrix<f64>| {
                for i in 0..d {
                    c[(i, i)] += s2;
                }
                c
            };
            let target = Gaussian::zero_mean(pad(ctx.model().gamma.gram_outer()))?;
            let kls: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    let g = basis.generator(k)?;
                    gaussian_kl(&Gaussian::zero_mean(pad(g.gram_outer()))?, &target)
                })
                .collect::<Result<_>>()?;
            kl_dev = kl_dev.max(spread(&kls));
        }
    }
    report.checks.push(Check::below("w2 constant across k", w2_dev, 1e-9));
    if kl_branch {
        report.checks.push(Check::below("kl constant across k", kl_dev, 1e-9));
    } else {
        report
            .notes
            .push("sigma = 0: noise-padded covariances are singular, KL branch skipped".into());
    }

    let model = build_model(
        cfg.d,
        cfg.m,
        cfg.sigma,
        cfg.gamma_kind,
        &mut ChaCha8Rng::seed_from_u64(cfg.base_seed),
    )?;
    let zero = Matrix::zeros(cfg.d, 1);
    for target in [Target::Clean, Target::Noisy] {
        for conv in [Convention::W2, Convention::W2Squared] {
            let v = TestMetric::new(&model, conv, target)?.eval(&zero)?;
            report.notes.push(format!("null estimator {conv} x {target}: {v:.6}"));
        }
    }
    Ok(report)
}

/// Right-multiplying `G` by an orthogonal `U` leaves `GGᵀ` and the test
/// error unchanged. Draw 0 uses `U = I`; a `k = 1` sign flip is added.
pub fn verify_orthonormal_invariance(d: usize, k: usize, seed: u64, draws: usize) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = d.min(10);
    let kind = if d.is_power_of_two() {
        GammaKind::Hadamard
    } else {
        GammaKind::RandomOrthonormal
    };
    let model = build_model(d, m, 0.15, kind, &mut rng)?;
    let metric = TestMetric::new(&model, Convention::W2, Target::Clean)?;
    let mut cov_dev = 0.0f64;
    let mut err_dev = 0.0f64;
    let mut identity_exact = true;
    for draw in 0..draws.max(1) {
        let g: Matrix<f64> = standard_normal_matrix(d, k, &mut rng);
        let u = if draw == 0 {
            Matrix::identity(k)
        } else {
            qr(&standard_normal_matrix::<f64, _>(k, k, &mut rng)).q
        };
        let gu = g.matmul(&u);
        let cd = (&g.gram_outer() - &gu.gram_outer()).frobenius_norm();
        let ed = (metric.eval(&g)? - metric.eval(&gu)?).abs();
        if draw == 0 {
            identity_exact = cd == 0.0 && ed == 0.0;
        }
        cov_dev = cov_dev.max(cd);
        err_dev = err_dev.max(ed);
    }
    let g1: Matrix<f64> = standard_normal_matrix(d, 1, &mut rng);
    let flipped = g1.scale(-1.0);
    let flip_exact = g1.gram_outer() == flipped.gram_outer() && metric.eval(&g1)? == metric.eval(&flipped)?;

    let mut report = VerifyReport::new("orthonormal");
    report
        .checks
        .push(Check::below("covariance invariance", cov_dev, 1e-10));
    report
        .checks
        .push(Check::below("test error invariance", err_dev, 1e-10));
    report
        .checks
        .push(Check::holds("U = I exact", identity_exact, "bitwise equal"));
    report
        .checks
        .push(Check::holds("k = 1 sign flip exact", flip_exact, "bitwise equal"));
    report.notes.push(format!("d = {d}, k = {k}, draws = {}", draws.max(1)));
    Ok(report)
}

fn random_gaussian(d: usize, rng: &mut ChaCha8Rng) -> Result<Gaussian<f64>> {
    let rank = rng.random_range(1..=d);
    let f: Matrix<f64> = standard_normal_matrix(d, rank, rng);
    let mean = standard_normal_matrix::<f64, _>(d, 1, rng).column(0);
    Gaussian::from_factor(mean, &f)
}

/// Marginal-path and zero-padded-path evaluations of the coordinate
/// pseudometric agree (to `1e-8`) on random Gaussians and coordinate sets.
pub fn verify_pseudometric(d: usize, trials: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let a = random_gaussian(d, &mut rng)?;
        let b = random_gaussian(d, &mut rng)?;
        let ignored = CoordinateSet::new(d, (0..d).filter(|_| rng.random_bool(0.5)))?;
        let marginal = pseudo_w2(&a, &b, &ignored)?;
        let padded = pseudo_w2_zero_padded(&a, &b, &ignored)?;
        dev = dev.max((marginal - padded).abs());
    }
    let a = random_gaussian(d, &mut rng)?;
    let b = random_gaussian(d, &mut rng)?;
    let none = CoordinateSet::empty(d);
    let all = CoordinateSet::all(d);
    let empty_dev = (pseudo_w2(&a, &b, &none)? - w2(&a, &b)?).abs();
    let all_marg = pseudo_w2(&a, &b, &all)?;
    let all_pad = pseudo_w2_zero_padded(&a, &b, &all)?;

    let mut report = VerifyReport::new("pseudometric");
    report.checks.push(Check::below("marginal vs zero-padded", dev, 1e-8));
    report
        .checks
        .push(Check::below("ignored = {} equals w2", empty_dev, 1e-12));
    report
        .checks
        .push(Check::below("ignored = all is 0", all_marg.max(all_pad), 1e-12));
    report.notes.push(format!("d = {d}, trials = {trials}"));
    Ok(report)
}

/// Normalized norms `‖z‖/√m` concentrate as `m` grows.
pub fn verify_concentration(m_list: &[usize], samples: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport::new("concentration");
    let mut rows = Vec::new();
    for &m in m_list {
        let s = norm_concentration(m, samples, &mut rng)?;
        report.notes.push(format!(
            "m = {m}: mean_ratio = {:.5}, std_ratio = {:.5}",
            s.mean_ratio, s.std_ratio
        ));
        if m >= 1000 {
            report.checks.push(Check::holds(
                format!("mean_ratio(m={m}) in [0.995, 1.005]"),
                (0.995..=1.005).contains(&s.mean_ratio),
                format!("{:.5}", s.mean_ratio),
            ));
        }
        rows.push((m, s));
    }
    let lo = rows.iter().min_by_key(|r| r.0);
    let hi = rows.iter().max_by_key(|r| r.0);
    if let (Some(lo), Some(hi)) = (lo, hi) {
        if hi.0 > lo.0 {
            report.checks.push(Check::holds(
                format!("std_ratio(m={}) < std_ratio(m={})", hi.0, lo.0),
                hi.1.std_ratio < lo.1.std_ratio,
                format!("{:.5} vs {:.5}", hi.1.std_ratio, lo.1.std_ratio),
            ));
        }
    }
    Ok(report)
}

/// Worst and median entrywise deviation for one loss variant.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStats {
    pub spec: LossSpec,
    pub cases: usize,
    pub worst: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub per_variant: Vec<GradientStats>,
    /// `|∇ - (-2xzᵀ)|_max` for the single-pair supervised case at `G = 0`.
    pub hand_case_error: f64,
    /// Worst deviation for `ps_pinv` at generators with condition ~1e3.
    /// Reported, not gated.
    pub pinv_stress_worst: f64,
    pub tolerance: f64,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.per_variant.iter().all(|s| s.worst < self.tolerance) && self.hand_case_error == 0.0
    }
}

impl fmt::Display for GradientReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.per_variant {
            let tag = if s.worst < self.tolerance { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{tag} {:<15} cases={:<4} worst={:.3e} median={:.3e}",
                s.spec.name(),
                s.cases,
                s.worst,
                s.median
            )?;
        }
        let tag = if self.hand_case_error == 0.0 { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "{tag} supervised hand case at G=0: max error {:.3e}",
            self.hand_case_error
        )?;
        write!(
            f,
            "info ps_pinv near-singular stress: worst={:.3e}",
            self.pinv_stress_worst
        )
    }
}

pub const GRADIENT_SPECS: [LossSpec; 6] = [
    LossSpec::PcaProj,
    LossSpec::Supervised,
    LossSpec::PsPlain,
    LossSpec::PsRegularized,
    LossSpec::PsWeighted { alpha: 0.98 },
    LossSpec::PsPinv,
];

/// `(d, k, n)` for case `i`, cycling through `k < n`, `k = n`,
/// `n < k < d`, and `k > d`.
fn gradient_shape(i: usize, rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    match i % 4 {
        0 => {
            let n = rng.random_range(3..=10);
            let k = rng.random_range(1..=(n - 1).min(8));
            (rng.random_range(k.max(2)..=16), k, n)
        }
        1 => {
            let n = rng.random_range(2..=8);
            (rng.random_range(2..=16), n, n)
        }
        2 => {
            let n = rng.random_range(2..=6);
            let k = rng.random_range(n + 1..=8);
            (rng.random_range(k + 1..=16), k, n)
        }
        _ => {
            let d = rng.random_range(2..=7);
            (d, rng.random_range(d + 1..=8), rng.random_range(2..=10))
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

/// Compares analytic gradients with central differences (`h = 1e-5`) on
/// `cases` random instances per variant.
pub fn check_gradients(seed: u64, cases: usize) -> Result<GradientReport> {
    let mut per_variant = Vec::new();
    for (vi, &spec) in GRADIENT_SPECS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(vi as u64));
        let mut devs = Vec::new();
        let mut worst = 0.0f64;
        let mut done = 0;
        let mut i = 0;
        while done < cases {
            let (d, k, n) = gradient_shape(i, &mut rng);
            i += 1;
            let n_ps = rng.random_range(0..=n);
            let part = Partition::new(
                standard_normal_matrix(d, n_ps, &mut rng),
                standard_normal_matrix(k, n_ps, &mut rng),
                standard_normal_matrix(d, n - n_ps, &mut rng),
            )?;
            let g = standard_normal_matrix::<f64, _>(d, k, &mut rng).scale(0.5);
            let obj = match Objective::new(spec, &part) {
                Ok(o) => o,
                Err(_) => continue,
            };
            let a = obj.gradient(&g)?;
            let f = finite_diff_gradient(spec, &g, &part, DEFAULT_FD_STEP)?;
            let dv = relative_deviations(&a, &f);
            worst = dv.iter().copied().fold(worst, f64::max);
            devs.extend(dv);
            done += 1;
        }
        per_variant.push(GradientStats {
            spec,
            cases,
            worst,
            median: median(devs),
        });
    }

    let x = Matrix::from_rows(&[&[1.0], &[0.0], &[0.0]]);
    let z = Matrix::from_rows(&[&[1.0], &[0.0]]);
    let part = Partition::new(x, z, Matrix::zeros(3, 0))?;
    let grad = Objective::new(LossSpec::Supervised, &part)?.gradient(&Matrix::zeros(3, 2))?;
    let mut want = Matrix::zeros(3, 2);
    want[(0, 0)] = -2.0;
    let hand_case_error = (&grad - &want).max_abs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut stress = 0.0f64;
    for _ in 0..10 {
        let (d, k, n) = (10, 4, 6);
        let q = random_orthonormal_cols::<f64, _>(d, k, &mut rng)?;
        let v = qr(&standard_normal_matrix::<f64, _>(k, k, &mut rng)).q;
        let s = [1.0, 0.7, 0.3, 1e-3];
        let g = Matrix::from_fn(d, k, |i, j| q[(i, j)] * s[j]).matmul_t(&v);
        let part = Partition::new(
            standard_normal_matrix(d, 2, &mut rng),
            standard_normal_matrix(k, 2, &mut rng),
            standard_normal_matrix(d, n - 2, &mut rng),
        )?;
        let a = Objective::new(LossSpec::PsPinv, &part)?.gradient(&g)?;
        let f = finite_diff_gradient(LossSpec::PsPinv, &g, &part, DEFAULT_FD_STEP)?;
        stress = relative_deviations(&a, &f).into_iter().fold(stress, f64::max);
    }

    Ok(GradientReport {
        per_variant,
        hand_case_error,
        pinv_stress_worst: stress,
        tolerance: 1e-4,
    })
}
