//! Synthetic data from the spiked model `x = Γz + ε` and the
//! supervised / pseudo-supervised / unsupervised splits used for training.

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::gaussian::CoordinateSet;
use crate::linalg::{hadamard, random_orthonormal_cols, standard_normal_matrix, Matrix};
use crate::scalar::Real;

/// How the ground-truth factor `Γ` is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaKind {
    /// First `m` columns of the Sylvester Hadamard matrix, scaled by `1/√d`.
    #[default]
    Hadamard,
    /// Haar-random orthonormal columns.
    RandomOrthonormal,
}

/// Ground truth `x = Γz + ε` with `z ~ N(0, I_m)` and `ε ~ N(0, σ² I_d)`.
#[derive(Debug, Clone)]
pub struct DataModel<T> {
    pub gamma: Matrix<T>,
    pub sigma: T,
}

impl<T: Real> DataModel<T> {
    /// Rejects a `Γ` without full column rank.
    pub fn new(gamma: Matrix<T>, sigma: T) -> Result<Self> {
        if gamma.cols() > gamma.rows() {
            return invalid(format!("Γ of shape {:?} cannot have full column rank", gamma.shape()));
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return invalid("noise level must be finite and nonnegative");
        }
        gamma.ensure_finite("Γ")?;
        Ok(Self { gamma, sigma })
    }

    pub fn d(&self) -> usize {
        self.gamma.rows()
    }

    pub fn m(&self) -> usize {
        self.gamma.cols()
    }
}

/// Builds `Γ` (`d x m`, orthonormal columns). The Hadamard kind does not
/// touch `rng`.
pub fn build_model<T: Real, R: Rng + ?Sized>(
    d: usize,
    m: usize,
    sigma: T,
    kind: GammaKind,
    rng: &mut R,
) -> Result<DataModel<T>> {
    if m > d {
        return invalid(format!("latent dimension m={m} exceeds ambient d={d}"));
    }
    let gamma = match kind {
        GammaKind::Hadamard => {
            let h = hadamard::<T>(d)?;
            let scale = T::one() / T::from_usize_lossy(d).sqrt();
            h.columns(0, m).scale(scale)
        }
        GammaKind::RandomOrthonormal => random_orthonormal_cols(d, m, rng)?,
    };
    DataModel::new(gamma, sigma)
}

/// Samples stored as columns, with the latents that produced them.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub z_true: Option<Matrix<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Matrix<T>, z_true: Option<Matrix<T>>) -> Result<Self> {
        if let Some(z) = &z_true {
            if z.cols() != x.cols() {
                return invalid(format!("latents have {} columns, data has {}", z.cols(), x.cols()));
            }
        }
        Ok(Self { x, z_true })
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }
}

/// Draws `n` samples: first all latents `Z` (`m x n`), then all noise.
pub fn sample<T: Real, R: Rng + ?Sized>(model: &DataModel<T>, n: usize, rng: &mut R) -> Result<Dataset<T>> {
    if n == 0 {
        return invalid("cannot sample an empty dataset");
    }
    let z: Matrix<T> = standard_normal_matrix(model.m(), n, rng);
    let noise: Matrix<T> = standard_normal_matrix(model.d(), n, rng);
    let mut x = model.gamma.matmul(&z);
    x.add_scaled(model.sigma, &noise);
    Dataset::new(x, Some(z))
}

/// Training data split into latent-paired columns and unpaired columns.
#[derive(Debug, Clone)]
pub struct Partition<T> {
    /// `d x n_ps` paired samples.
    pub x_ps: Matrix<T>,
    /// `k x n_ps` latents paired with `x_ps`.
    pub z_ps: Matrix<T>,
    /// `d x n_unsup` unpaired samples.
    pub x_unsup: Matrix<T>,
}

impl<T: Real> Partition<T> {
    pub fn new(x_ps: Matrix<T>, z_ps: Matrix<T>, x_unsup: Matrix<T>) -> Result<Self> {
        if x_ps.cols() != z_ps.cols() {
            return invalid(format!("{} paired samples but {} latents", x_ps.cols(), z_ps.cols()));
        }
        if x_ps.rows() != x_unsup.rows() {
            return invalid(format!(
                "paired samples have dimension {}, unpaired {}",
                x_ps.rows(),
                x_unsup.rows()
            ));
        }
        Ok(Self { x_ps, z_ps, x_unsup })
    }

    /// Every sample unpaired.
    pub fn unsupervised(x: Matrix<T>, k: usize) -> Self {
        Self {
            x_ps: Matrix::zeros(x.rows(), 0),
            z_ps: Matrix::zeros(k, 0),
            x_unsup: x,
        }
    }

    pub fn d(&self) -> usize {
        self.x_unsup.rows()
    }

    pub fn k(&self) -> usize {
        self.z_ps.rows()
    }

    pub fn n_ps(&self) -> usize {
        self.x_ps.cols()
    }

    pub fn n_unsup(&self) -> usize {
        self.x_unsup.cols()
    }

    pub fn n(&self) -> usize {
        self.n_ps() + self.n_unsup()
    }

    /// `[x_ps | x_unsup]`, i.e. the original data matrix.
    pub fn full_x(&self) -> Matrix<T> {
        self.x_ps
            .hcat(&self.x_unsup)
            .expect("row counts checked at construction")
    }
}

/// Pairs the first `n_ps` samples with fresh `N(0, I_k)` latents.
///
/// Latents are drawn one column at a time, so for a fixed generator state the
/// pairs for a smaller `n_ps` are a prefix of those for a larger one.
pub fn make_pseudo_partition<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    n_ps: usize,
    k: usize,
    rng: &mut R,
) -> Result<Partition<T>> {
    let n = data.n();
    if n_ps > n {
        return invalid(format!("n_ps={n_ps} exceeds sample count {n}"));
    }
    if k == 0 {
        return invalid("latent dimension k must be at least 1");
    }
    let z_cols: Matrix<T> = standard_normal_matrix(n_ps, k, rng);
    Partition::new(data.x.columns(0, n_ps), z_cols.transpose(), data.x.columns(n_ps, n))
}

/// Pairs the first `n_sup` samples with the rows `subsample` of their true
/// latents.
pub fn make_supervised_partition<T: Real>(
    data: &Dataset<T>,
    n_sup: usize,
    subsample: &CoordinateSet,
) -> Result<Partition<T>> {
    let Some(z) = &data.z_true else {
        return invalid("supervised partition needs the true latents");
    };
    let n = data.n();
    if n_sup > n {
        return invalid(format!("n_sup={n_sup} exceeds sample count {n}"));
    }
    if subsample.universe() != z.rows() {
        return invalid(format!(
            "latent subsample drawn from {} coordinates, model has m={}",
            subsample.universe(),
            z.rows()
        ));
    }
    Partition::new(
        data.x.columns(0, n_sup),
        z.select_rows(subsample.indices()).columns(0, n_sup),
        data.x.columns(n_sup, n),
    )
}

/// Uniformly random `k`-subset of `{0, …, m-1}`.
pub fn random_subsample<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<CoordinateSet> {
    if k > m {
        return invalid(format!("cannot subsample {k} of {m} latent coordinates"));
    }
    CoordinateSet::new(m, index::sample(rng, m, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormal_dev(g: &Matrix<f64>) -> f64 {
        (&g.gram_inner() - &Matrix::identity(g.cols())).max_abs()
    }

    fn default_model() -> DataModel<f64> {
        build_model(64, 10, 0.15, GammaKind::Hadamard, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn hadamard_model_is_orthonormal() {
        let model = default_model();
        assert_eq!(model.gamma.shape(), (64, 10));
        assert!(orthonormal_dev(&model.gamma) < 1e-12);
        let sq: DataModel<f64> =
            build_model(4, 4, 0.0, GammaKind::Hadamard, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(sq.gamma.as_slice().iter().all(|&x| x.abs() == 0.5));
        assert!(orthonormal_dev(&sq.gamma) < 1e-15);
    }

    #[test]
    fn model_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            build_model::<f64, _>(48, 10, 0.1, GammaKind::Hadamard, &mut rng),
            Err(Error::UnsupportedDimension(48))
        ));
        assert!(matches!(
            build_model::<f64, _>(8, 9, 0.1, GammaKind::RandomOrthonormal, &mut rng),
            Err(Error::InvalidInput(_))
        ));
        assert!(build_model::<f64, _>(48, 10, 0.1, GammaKind::RandomOrthonormal, &mut rng).is_ok());
    }

    #[test]
    fn random_model_is_reproducible() {
        let a: DataModel<f64> = build_model(
            20,
            5,
            0.1,
            GammaKind::RandomOrthonormal,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let b: DataModel<f64> = build_model(
            20,
            5,
            0.1,
            GammaKind::RandomOrthonormal,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(a.gamma, b.gamma);
        assert!(orthonormal_dev(&a.gamma) < 1e-12);
    }

    #[test]
    fn noiseless_samples_stay_in_column_space() {
        let mut model = default_model();
        model.sigma = 0.0;
        let data = sample(&model, 30, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let proj = model.gamma.matmul(&model.gamma.t_matmul(&data.x));
        assert!((&data.x - &proj).frobenius_norm() < 1e-9);
        assert_eq!(data.z_true.as_ref().unwrap().shape(), (10, 30));
    }

    #[test]
    fn sample_trace_matches_expectation() {
        let model = default_model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reps = 2000;
        let total: f64 = (0..reps)
            .map(|_| {
                let x = sample(&model, 20, &mut rng).unwrap().x;
                x.frobenius_sq() / 20.0
            })
            .sum();
        let mean = total / reps as f64;
        let want = 10.0 + 64.0 * 0.15 * 0.15;
        assert!((mean - want).abs() < 0.05 * want, "{mean} vs {want}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = default_model();
        let a = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.x, b.x);
        assert!(sample(&model, 0, &mut ChaCha8Rng::seed_from_u64(11)).is_err());
    }

    #[test]
    fn pseudo_partition_shapes() {
        let model = default_model();
        let data = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p0 = make_pseudo_partition(&data, 0, 7, &mut rng).unwrap();
        assert_eq!((p0.n_ps(), p0.n_unsup(), p0.k()), (0, 20, 7));
        assert_eq!(p0.x_unsup, data.x);
        let full = make_pseudo_partition(&data, 20, 7, &mut rng).unwrap();
        assert_eq!(full.n_unsup(), 0);
        assert_eq!(full.z_ps.shape(), (7, 20));
        assert!(make_pseudo_partition(&data, 21, 7, &mut rng).is_err());
        assert_eq!(full.full_x(), data.x);
    }

    #[test]
    fn pseudo_pairs_are_nested_and_data_fixed() {
        let model = default_model();
        let data = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let small = make_pseudo_partition(&data, 12, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let big = make_pseudo_partition(&data, 18, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(big.z_ps.columns(0, 12), small.z_ps);
        assert_eq!(big.x_ps.columns(0, 12), small.x_ps);
        let other_k = make_pseudo_partition(&data, 12, 30, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(other_k.x_ps, small.x_ps);
    }

    #[test]
    fn pseudo_latents_uncorrelated_with_data() {
        let model = default_model();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let draws = 10_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..draws {
            let data = sample(&model, 1, &mut rng).unwrap();
            let p = make_pseudo_partition(&data, 1, 1, &mut rng).unwrap();
            let x = p.x_ps[(0, 0)];
            let z = p.z_ps[(0, 0)];
            sxy += x * z;
            sxx += x * x;
            syy += z * z;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.05, "{corr}");
    }

    #[test]
    fn supervised_partition_slices_true_latents() {
        let model = default_model();
        let data = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let z = data.z_true.clone().unwrap();
        let all = make_supervised_partition(&data, 20, &CoordinateSet::all(10)).unwrap();
        assert_eq!(all.z_ps, z);
        assert_eq!(all.n_unsup(), 0);
        let first = make_supervised_partition(&data, 6, &CoordinateSet::new(10, [0]).unwrap()).unwrap();
        assert_eq!(first.z_ps, z.select_rows(&[0]).columns(0, 6));
        assert_eq!(first.n_unsup(), 14);

        let no_latents = Dataset::new(data.x.clone(), None).unwrap();
        assert!(make_supervised_partition(&no_latents, 5, &CoordinateSet::all(10)).is_err());
        assert!(make_supervised_partition(&data, 5, &CoordinateSet::all(11)).is_err());
    }

    #[test]
    fn noiseless_full_supervision_is_recovered_by_gamma() {
        let mut model = default_model();
        model.sigma = 0.0;
        let data = sample(&model, 20, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let p = make_supervised_partition(&data, 20, &CoordinateSet::all(10)).unwrap();
        assert!((&model.gamma.matmul(&p.z_ps) - &p.x_ps).frobenius_norm() < 1e-12);
    }

    #[test]
    fn random_subsample_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_subsample(10, 4, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        assert!(random_subsample(3, 4, &mut rng).is_err());
    }
}
