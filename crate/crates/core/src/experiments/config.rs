use std::fmt;
use std::str::FromStr;

use crate::datagen::GammaKind;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::trainers::GdOptions;

/// What is trained at each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Closed-form PCA generator; no training loop.
    Pca,
    /// Gradient descent on the given loss.
    Gd(LossSpec),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Pca => "pca",
            Variant::Gd(spec) => spec.name(),
        }
    }

    pub fn from_name(name: &str, alpha: f64) -> Result<Self> {
        if name == "pca" {
            Ok(Variant::Pca)
        } else {
            Ok(Variant::Gd(LossSpec::from_name(name, alpha)?))
        }
    }

    pub fn is_supervised(&self) -> bool {
        matches!(self, Variant::Gd(LossSpec::Supervised))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Distance reported as test error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    W2,
    W2Squared,
}

/// Distribution the generated `N(0, GGᵀ)` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Target {
    /// `N(0, ΓΓᵀ)`.
    #[default]
    Clean,
    /// `N(0, ΓΓᵀ + σ²I)`.
    Noisy,
}

/// Latent coordinates kept by the supervised loss for a given `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsampleRule {
    /// `{0, …, k-1}`.
    #[default]
    First,
    /// A seeded uniformly random `k`-subset per trial.
    Random,
}

macro_rules! keyword_enum {
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
                    other => Err(Error::InvalidInput(format!(
                        "`{}` is not one of: {}",
                        other,
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Convention { W2 => "w2", W2Squared => "w2_squared" });
keyword_enum!(Target { Clean => "clean", Noisy => "noisy" });
keyword_enum!(SubsampleRule { First => "first", Random => "random" });

pub fn gamma_kind_name(kind: GammaKind) -> &'static str {
    match kind {
        GammaKind::Hadamard => "hadamard",
        GammaKind::RandomOrthonormal => "random_orthonormal",
    }
}

pub fn parse_gamma_kind(s: &str) -> Result<GammaKind> {
    match s {
        "hadamard" => Ok(GammaKind::Hadamard),
        "random_orthonormal" => Ok(GammaKind::RandomOrthonormal),
        other => Err(Error::InvalidInput(format!(
            "`{other}` is not one of: hadamard, random_orthonormal"
        ))),
    }
}

/// Odd latent dimensions `1, 3, …, 127`.
pub fn default_pseudo_k_grid() -> Vec<usize> {
    (1..=127).step_by(2).collect()
}

/// `1, …, 40`.
pub fn default_supervised_k_grid() -> Vec<usize> {
    (1..=40).collect()
}

/// One sweep: model, data, grid, trainer, and evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub gamma_kind: GammaKind,
    pub trials: usize,
    pub base_seed: u64,
    /// `None` selects the variant's default grid.
    pub k_grid: Option<Vec<usize>>,
    /// Paired-sample counts; for the supervised variant these are `n_sup`.
    pub n_ps_list: Vec<usize>,
    pub variant: Variant,
    pub alpha: f64,
    pub test_convention: Convention,
    pub test_target: Target,
    pub gd: GdOptions,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub subsample: SubsampleRule,
    /// Allow dimension orders other than `m < n < d` (with a warning).
    pub relax_dims: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 64,
            m: 10,
            n: 20,
            sigma: 0.15,
            gamma_kind: GammaKind::Hadamard,
            trials: 200,
            base_seed: 0,
            k_grid: None,
            n_ps_list: vec![0, 2, 4, 12, 18, 20],
            variant: Variant::Pca,
            alpha: 0.98,
            test_convention: Convention::W2,
            test_target: Target::Clean,
            gd: GdOptions::default(),
            workers: 0,
            subsample: SubsampleRule::First,
            relax_dims: false,
        }
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// The explicit grid, or the variant default.
    pub fn k_grid(&self) -> Vec<usize> {
        match &self.k_grid {
            Some(g) => g.clone(),
            None if self.variant.is_supervised() => default_supervised_k_grid(),
            None => default_pseudo_k_grid(),
        }
    }

    /// Rebinds the `ps_weighted` weight so it tracks `alpha`.
    pub fn with_alpha_synced(mut self) -> Self {
        if let Variant::Gd(LossSpec::PsWeighted { .. }) = self.variant {
            self.variant = Variant::Gd(LossSpec::PsWeighted { alpha: self.alpha });
        }
        self
    }

    /// Checks every field, returning warnings for tolerated irregularities.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.d == 0 || self.m == 0 || self.n == 0 {
            return Err(config_error("d", "d, m and n must all be positive"));
        }
        if self.m > self.d {
            return Err(config_error("m", format!("m={} exceeds d={}", self.m, self.d)));
        }
        if !(self.m < self.n && self.n < self.d) {
            let msg = format!("dimensions m={}, n={}, d={} violate m < n < d", self.m, self.n, self.d);
            if self.relax_dims {
                warnings.push(msg);
            } else {
                return Err(config_error("n", format!("{msg} (set relax_dims = true to allow)")));
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(config_error("sigma", "must be finite and nonnegative"));
        }
        if self.gamma_kind == GammaKind::Hadamard && !self.d.is_power_of_two() {
            return Err(config_error(
                "gamma_kind",
                format!("hadamard needs d a power of two, got {}", self.d),
            ));
        }
        if self.trials == 0 {
            return Err(config_error("trials", "must be at least 1"));
        }
        let grid = self.k_grid();
        if grid.is_empty() {
            return Err(config_error("k_grid", "must not be empty"));
        }
        if grid.contains(&0) {
            return Err(config_error("k_grid", "latent dimensions must be at least 1"));
        }
        if self.variant.is_supervised() {
            if let Some(&k) = grid.iter().find(|&&k| k > self.m) {
                return Err(config_error(
                    "k_grid",
                    format!("supervised latents subsample k={k} of only m={} coordinates", self.m),
                ));
            }
        }
        if self.n_ps_list.is_empty() {
            return Err(config_error("n_ps_list", "must not be empty"));
        }
        if let Some(&bad) = self.n_ps_list.iter().find(|&&p| p > self.n) {
            return Err(config_error("n_ps_list", format!("n_ps={bad} exceeds n={}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(config_error("alpha", "must lie in [0, 1]"));
        }
        if let Variant::Gd(spec) = self.variant {
            spec.validate().map_err(|e| config_error("variant", e.to_string()))?;
        }
        let gd = &self.gd;
        gd.validate().map_err(|e| {
            let msg = e.to_string();
            let key = ["init_std", "step_init", "grad_stop", "move_tol", "step_multipliers"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("max_iters");
            config_error(key, msg)
        })?;
        Ok(warnings)
    }

    /// `key = value` lines covering every setting, in file syntax.
    pub fn render(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let gd = &self.gd;
        let lines = [
            format!("d = {}", self.d),
            format!("m = {}", self.m),
            format!("n = {}", self.n),
            format!("sigma = {}", self.sigma),
            format!("gamma_kind = {}", gamma_kind_name(self.gamma_kind)),
            format!("trials = {}", self.trials),
            format!("base_seed = {}", self.base_seed),
            format!("k_grid = {}", list(&self.k_grid())),
            format!("n_ps_list = {}", list(&self.n_ps_list)),
            format!("variant = {}", self.variant),
            format!("alpha = {}", self.alpha),
            format!("test_convention = {}", self.test_convention),
            format!("test_target = {}", self.test_target),
            format!("max_iters = {}", gd.max_iters),
            format!("init_std = {}", gd.init_std),
            format!("step_init = {}", gd.step_init),
            format!("grad_stop = {}", gd.grad_stop),
            format!("move_tol = {}", gd.move_tol),
            format!("stall_limit = {}", gd.stall_limit),
            format!("workers = {}", self.workers),
            format!("step_mode = {}", gd.step_mode),
            format!("accept_rule = {}", gd.accept_rule),
            format!("subsample = {}", self.subsample),
            format!("relax_dims = {}", self.relax_dims),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().unwrap().is_empty());
        assert_eq!(cfg.k_grid().len(), 64);
        assert_eq!(*cfg.k_grid().last().unwrap(), 127);
        let sup = ExperimentConfig {
            variant: Variant::Gd(LossSpec::Supervised),
            m: 40,
            relax_dims: true,
            ..ExperimentConfig::default()
        };
        assert_eq!(sup.k_grid(), (1..=40).collect::<Vec<_>>());
        assert_eq!(sup.validate().unwrap().len(), 1);
    }

    #[test]
    fn dimension_order_enforced() {
        let cfg = ExperimentConfig {
            n: 8,
            n_ps_list: vec![0, 4],
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
        let relaxed = ExperimentConfig {
            relax_dims: true,
            ..cfg
        };
        assert_eq!(relaxed.validate().unwrap().len(), 1);
    }

    #[test]
    fn bad_fields_name_their_key() {
        let key_of = |cfg: ExperimentConfig| match cfg.validate() {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(
            key_of(ExperimentConfig {
                n_ps_list: vec![21],
                ..Default::default()
            }),
            "n_ps_list"
        );
        assert_eq!(
            key_of(ExperimentConfig {
                d: 48,
                ..Default::default()
            }),
            "gamma_kind"
        );
        assert_eq!(
            key_of(ExperimentConfig {
                trials: 0,
                ..Default::default()
            }),
            "trials"
        );
        let mut cfg = ExperimentConfig::default();
        cfg.gd.step_init = -1.0;
        assert_eq!(key_of(cfg), "step_init");
    }

    #[test]
    fn enum_keywords_round_trip() {
        for c in [Convention::W2, Convention::W2Squared] {
            assert_eq!(c.name().parse::<Convention>().unwrap(), c);
        }
        assert!("l2".parse::<Target>().is_err());
        assert_eq!(Variant::from_name("pca", 0.5).unwrap(), Variant::Pca);
        assert_eq!(
            Variant::from_name("ps_weighted", 0.5).unwrap(),
            Variant::Gd(LossSpec::PsWeighted { alpha: 0.5 })
        );
    }
}
