//! Gaussian distributions and the distances between them: closed-form
//! 2-Wasserstein, KL divergence, and the coordinate-ignoring pseudometric.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, orthonormal_complement, psd_sqrt, solve_lower, svd, Matrix, SYMMETRY_TOL};
use crate::scalar::Real;

/// Relative slack under which a negative W2 radicand counts as roundoff.
pub const RADICAND_TOL: f64 = 1e-9;

/// Max-entry deviation of `UᵀU` from `I` accepted as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Multivariate normal `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T> {
    mean: Vec<T>,
    cov: Matrix<T>,
}

impl<T: Real> Gaussian<T> {
    /// Checks shapes, finiteness and symmetry (relative asymmetry at most
    /// `1e-9`). Positive semidefiniteness is checked where a square root is
    /// taken.
    pub fn new(mean: Vec<T>, cov: Matrix<T>) -> Result<Self> {
        if !cov.is_square() || cov.rows() != mean.len() {
            return invalid(format!(
                "mean of length {} does not match covariance {:?}",
                mean.len(),
                cov.shape()
            ));
        }
        cov.ensure_finite("covariance")?;
        if mean.iter().any(|x| !x.is_finite()) {
            return invalid("mean contains NaN or infinite entries");
        }
        if cov.relative_asymmetry() > T::lit(SYMMETRY_TOL) {
            return invalid("covariance is not symmetric");
        }
        Ok(Self { mean, cov })
    }

    pub fn zero_mean(cov: Matrix<T>) -> Result<Self> {
        let d = cov.rows();
        Self::new(vec![T::zero(); d], cov)
    }

    /// `N(mean, AAᵀ)`.
    pub fn from_factor(mean: Vec<T>, factor: &Matrix<T>) -> Result<Self> {
        Self::new(mean, factor.gram_outer())
    }

    pub fn standard(d: usize) -> Self {
        Self {
            mean: vec![T::zero(); d],
            cov: Matrix::identity(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<T> {
        &self.cov
    }
}

/// Sorted, duplicate-free subset of `{0, …, d-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSet {
    d: usize,
    indices: Vec<usize>,
}

impl CoordinateSet {
    /// Sorts and deduplicates; any index `>= d` is rejected.
    pub fn new(d: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
            return invalid(format!("coordinate {bad} out of range for dimension {d}"));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { d, indices })
    }

    pub fn empty(d: usize) -> Self {
        Self { d, indices: Vec::new() }
    }

    pub fn all(d: usize) -> Self {
        Self {
            d,
            indices: (0..d).collect(),
        }
    }

    /// `{0, …, count-1}` inside dimension `d`.
    pub fn first(d: usize, count: usize) -> Result<Self> {
        Self::new(d, 0..count)
    }

    pub fn universe(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self {
            d: self.d,
            indices: (0..self.d).filter(|&i| !self.contains(i)).collect(),
        }
    }
}

fn check_same_dim<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    Ok(())
}

fn check_coords<T: Real>(g: &Gaussian<T>, set: &CoordinateSet) -> Result<()> {
    if set.universe() != g.dim() {
        return invalid(format!(
            "coordinate set over dimension {} used on a {}-dimensional Gaussian",
            set.universe(),
            g.dim()
        ));
    }
    Ok(())
}

/// Squared 2-Wasserstein distance between `N(0, AAᵀ)` and `N(0, BBᵀ)`,
/// plus `mean_gap_sq` for the mean term.
///
/// Evaluated as the orthogonal Procrustes residual
/// `min_R ‖A - B R‖_F²` over partial isometries `R`, which is nonnegative by
/// construction and exactly 0 for `A = B`. The trace form
/// `‖A‖² + ‖B‖² - 2‖BᵀA‖_*` is computed alongside as a consistency check;
/// if it falls below `-1e-9 (tr Σ₁ + tr Σ₂ + 1)` the factorization is
/// inconsistent and [`Error::NumericalFailure`] is returned.
pub fn w2_squared_factored<T: Real>(mean_gap_sq: T, a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    if a.rows() != b.rows() {
        return invalid(format!("factor row mismatch: {} vs {}", a.rows(), b.rows()));
    }
    let tr_a = a.frobenius_sq();
    let tr_b = b.frobenius_sq();
    if a.cols() == 0 || b.cols() == 0 {
        return Ok(mean_gap_sq + tr_a + tr_b);
    }
    let c = b.t_matmul(a);
    let f = svd(&c)?;
    // R = P Qᵀ maps span(A-side) onto the best-aligned B-side directions.
    let r = f.u.matmul_t(&f.v);
    let fit = (a - &b.matmul(&r)).frobenius_sq();
    let unused = if f.u.cols() < f.u.rows() {
        b.matmul(&orthonormal_complement(&f.u)).frobenius_sq()
    } else {
        T::zero()
    };
    let residual = fit + unused;

    let radicand = mean_gap_sq + tr_a + tr_b - T::lit(2.0) * f.nuclear_norm();
    let window = T::lit(RADICAND_TOL) * (tr_a + tr_b + T::one());
    if radicand < -window || !residual.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "W2 radicand {:e} below clamp window {:e}",
            radicand.to_f64_lossy(),
            -window.to_f64_lossy()
        )));
    }
    Ok(mean_gap_sq + residual)
}

fn mean_gap_sq<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Squared closed-form 2-Wasserstein distance.
pub fn w2_squared<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>) -> Result<T> {
    check_same_dim(a, b)?;
    let sa = psd_sqrt(&a.cov)?;
    let sb = psd_sqrt(&b.cov)?;
    w2_squared_factored(mean_gap_sq(&a.mean, &b.mean), &sa, &sb)
}

/// Closed-form 2-Wasserstein distance between Gaussians.
pub fn w2<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>) -> Result<T> {
    Ok(w2_squared(a, b)?.sqrt())
}

/// `KL(a ‖ b)`; both covariances must be positive definite.
pub fn gaussian_kl<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>) -> Result<T> {
    check_same_dim(a, b)?;
    let d = a.dim();
    let la = cholesky(&a.cov)?;
    let lb = cholesky(&b.cov)?;
    let trace_term = solve_lower(&lb, &la).frobenius_sq();
    let gap = Matrix::from_fn(d, 1, |i, _| b.mean[i] - a.mean[i]);
    let maha = solve_lower(&lb, &gap).frobenius_sq();
    let log_det = |l: &Matrix<T>| -> T { (0..d).map(|i| l[(i, i)].ln()).sum::<T>() * T::lit(2.0) };
    let kl = T::lit(0.5) * (trace_term + maha - T::from_usize_lossy(d) + log_det(&lb) - log_det(&la));
    Ok(kl.max(T::zero()))
}

/// Marginal on the coordinates not in `drop`.
pub fn marginalize<T: Real>(g: &Gaussian<T>, drop: &CoordinateSet) -> Result<Gaussian<T>> {
    check_coords(g, drop)?;
    let keep = drop.complement();
    let idx = keep.indices();
    Ok(Gaussian {
        mean: idx.iter().map(|&i| g.mean[i]).collect(),
        cov: g.cov.select_rows(idx).select_cols(idx),
    })
}

/// Same-dimension Gaussian with the coordinates in `zeroed` replaced by a
/// point mass at 0.
pub fn zero_pad_coords<T: Real>(g: &Gaussian<T>, zeroed: &CoordinateSet) -> Result<Gaussian<T>> {
    check_coords(g, zeroed)?;
    let mut mean = g.mean.clone();
    let mut cov = g.cov.clone();
    let d = g.dim();
    for &i in zeroed.indices() {
        mean[i] = T::zero();
        for j in 0..d {
            cov[(i, j)] = T::zero();
            cov[(j, i)] = T::zero();
        }
    }
    Ok(Gaussian { mean, cov })
}

/// 2-Wasserstein pseudometric ignoring the coordinates in `ignored`,
/// evaluated on the marginals.
pub fn pseudo_w2<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>, ignored: &CoordinateSet) -> Result<T> {
    check_same_dim(a, b)?;
    let ma = marginalize(a, ignored)?;
    let mb = marginalize(b, ignored)?;
    w2(&ma, &mb)
}

/// The same pseudometric evaluated on zero-padded full-dimension Gaussians.
pub fn pseudo_w2_zero_padded<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>, ignored: &CoordinateSet) -> Result<T> {
    check_same_dim(a, b)?;
    w2(&zero_pad_coords(a, ignored)?, &zero_pad_coords(b, ignored)?)
}

/// Basis `U = [V | complement]`, rejected unless `UᵀU = I` to `1e-10`.
pub fn subspace_pseudo_basis<T: Real>(v_basis: &Matrix<T>, complement: &Matrix<T>) -> Result<Matrix<T>> {
    let u = v_basis.hcat(complement)?;
    if !u.is_square() {
        return invalid(format!("combined basis has shape {:?}, expected square", u.shape()));
    }
    let dev = (&u.gram_inner() - &Matrix::identity(u.cols())).max_abs();
    if dev > T::lit(ORTHONORMAL_TOL) {
        return invalid(format!(
            "combined basis is not orthonormal (max |UᵀU - I| = {:e})",
            dev.to_f64_lossy()
        ));
    }
    Ok(u)
}

/// Distribution of `Uᵀx` for `x ~ g`.
pub fn rotate_into_basis<T: Real>(g: &Gaussian<T>, u: &Matrix<T>) -> Result<Gaussian<T>> {
    if u.rows() != g.dim() {
        return invalid(format!(
            "basis has {} rows, Gaussian has dimension {}",
            u.rows(),
            g.dim()
        ));
    }
    let mean = u.transpose().mul_vec(&g.mean);
    let cov = u.t_matmul(&g.cov).matmul(u).symmetrized();
    Ok(Gaussian { mean, cov })
}

/// Pseudometric ignoring the subspace spanned by the first `dim_v` columns of
/// the orthonormal basis `u`.
pub fn subspace_pseudo_w2<T: Real>(a: &Gaussian<T>, b: &Gaussian<T>, u: &Matrix<T>, dim_v: usize) -> Result<T> {
    check_same_dim(a, b)?;
    if dim_v > a.dim() {
        return invalid(format!("subspace dimension {dim_v} exceeds {}", a.dim()));
    }
    let ra = rotate_into_basis(a, u)?;
    let rb = rotate_into_basis(b, u)?;
    pseudo_w2(&ra, &rb, &CoordinateSet::first(a.dim(), dim_v)?)
}

/// Mean and population standard deviation of `‖z‖₂ / √m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationSummary {
    pub mean_ratio: f64,
    pub std_ratio: f64,
}

/// Draws `samples` vectors from `N(0, I_m)` and summarizes their normalized
/// norms.
pub fn norm_concentration<R: Rng + ?Sized>(m: usize, samples: usize, rng: &mut R) -> Result<ConcentrationSummary> {
    if m == 0 || samples == 0 {
        return invalid("norm_concentration needs m >= 1 and samples >= 1");
    }
    let scale = 1.0 / (m as f64).sqrt();
    let ratios: Vec<f64> = (0..samples)
        .map(|_| {
            let sq: f64 = (0..m)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * z
                })
                .sum();
            sq.sqrt() * scale
        })
        .collect();
    let n = samples as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(ConcentrationSummary {
        mean_ratio: mean,
        std_ratio: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qr, random_orthonormal_cols, standard_normal_matrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(mean: &[f64], var: &[f64]) -> Gaussian<f64> {
        Gaussian::new(mean.to_vec(), Matrix::from_diagonal(var)).unwrap()
    }

    /// Independent W2 oracle through the textbook route
    /// `tr Σ₁ + tr Σ₂ - 2 tr (Σ₁^½ Σ₂ Σ₁^½)^½`.
    fn w2_sq_trace_form(a: &Gaussian<f64>, b: &Gaussian<f64>) -> f64 {
        let s1 = psd_sqrt(a.cov()).unwrap();
        let inner = s1.matmul(b.cov()).matmul(&s1).symmetrized();
        let cross = psd_sqrt(&inner).unwrap().trace();
        mean_gap_sq(a.mean(), b.mean()) + a.cov().trace() + b.cov().trace() - 2.0 * cross
    }

    fn random_gaussian(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> Gaussian<f64> {
        let f: Matrix<f64> = standard_normal_matrix(d, rank, rng);
        let mean: Vec<f64> = standard_normal_matrix::<f64, _>(d, 1, rng).column(0);
        Gaussian::from_factor(mean, &f).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let g = diag(&[1.0, -2.0], &[3.0, 0.5]);
        assert_abs_diff_eq!(w2(&g, &g).unwrap(), 0.0, epsilon = 1e-10);
        let shift = w2(&diag(&[3.0, 4.0], &[1.0, 1.0]), &diag(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(shift, 5.0, epsilon = 1e-10);
        let a = diag(&[0.0, 0.0], &[4.0, 9.0]);
        let b = diag(&[0.0, 0.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(w2(&a, &b).unwrap(), 5f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(w2_squared(&a, &b).unwrap(), 5.0, epsilon = 1e-10);
        let s = w2_squared(&diag(&[3.0, 4.0], &[2.0, 2.0]), &diag(&[0.0, 0.0], &[2.0, 2.0])).unwrap();
        assert_abs_diff_eq!(s, 25.0, epsilon = 1e-10);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Gaussian::<f64>::standard(2);
        let b = Gaussian::<f64>::standard(3);
        assert!(matches!(w2(&a, &b), Err(Error::InvalidInput(_))));
        assert!(Gaussian::new(vec![0.0], Matrix::<f64>::identity(2)).is_err());
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let a = diag(&[0.0, 0.0], &[1.0, -1.0]);
        assert!(matches!(w2(&a, &a), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn rank_deficient_matches_trace_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(r1, r2) in &[(2, 3), (6, 1), (6, 6), (0, 4)] {
            let a = random_gaussian(6, r1, &mut rng);
            let b = random_gaussian(6, r2, &mut rng);
            let got = w2_squared(&a, &b).unwrap();
            let want = w2_sq_trace_form(&a, &b);
            assert!((got - want).abs() < 1e-8 * (1.0 + want), "{got} vs {want}");
        }
    }

    #[test]
    fn factored_route_matches_covariance_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(p, q) in &[(3, 10), (10, 3), (7, 7), (12, 20)] {
            let a: Matrix<f64> = standard_normal_matrix(8, p, &mut rng);
            let b: Matrix<f64> = standard_normal_matrix(8, q, &mut rng);
            let fac = w2_squared_factored(0.0, &a, &b).unwrap();
            let ga = Gaussian::from_factor(vec![0.0; 8], &a).unwrap();
            let gb = Gaussian::from_factor(vec![0.0; 8], &b).unwrap();
            let cov = w2_squared(&ga, &gb).unwrap();
            assert!((fac - cov).abs() < 1e-9 * (1.0 + cov), "{p}x{q}: {fac} vs {cov}");
        }
    }

    #[test]
    fn zero_factor_gives_trace() {
        let b = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let z = Matrix::<f64>::zeros(2, 3);
        assert_abs_diff_eq!(w2_squared_factored(0.0, &z, &b).unwrap(), 5.0, epsilon = 1e-14);
        let empty = Matrix::<f64>::zeros(2, 0);
        assert_abs_diff_eq!(w2_squared_factored(1.0, &empty, &b).unwrap(), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn kl_examples() {
        let a = diag(&[0.0], &[1.0]);
        let b = diag(&[0.0], &[4.0]);
        let want = 0.5 * (0.25 + 4f64.ln() - 1.0);
        assert_abs_diff_eq!(gaussian_kl(&a, &b).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(want, 0.31815, epsilon = 1e-4);
        let g = diag(&[1.0, 2.0], &[2.0, 3.0]);
        assert_abs_diff_eq!(gaussian_kl(&g, &g).unwrap(), 0.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let low = random_gaussian(4, 2, &mut rng);
        let full = Gaussian::<f64>::standard(4);
        assert!(matches!(gaussian_kl(&full, &low), Err(Error::SingularCovariance(_))));
        assert!(matches!(gaussian_kl(&low, &full), Err(Error::SingularCovariance(_))));
    }

    #[test]
    fn kl_matches_mean_shift_formula() {
        let a = diag(&[1.0, 0.0], &[2.0, 2.0]);
        let b = diag(&[0.0, 2.0], &[2.0, 2.0]);
        // Equal covariances leave only half the Mahalanobis term: (1 + 4) / 2 / 2.
        assert_abs_diff_eq!(gaussian_kl(&a, &b).unwrap(), 1.25, epsilon = 1e-12);
    }

    #[test]
    fn marginal_and_padding_examples() {
        let g = diag(&[1.0, 2.0], &[1.0, 4.0]);
        assert_eq!(marginalize(&g, &CoordinateSet::empty(2)).unwrap(), g);
        assert_eq!(zero_pad_coords(&g, &CoordinateSet::empty(2)).unwrap(), g);
        let drop0 = CoordinateSet::new(2, [0]).unwrap();
        assert_eq!(marginalize(&g, &drop0).unwrap(), diag(&[2.0], &[4.0]));
        assert_eq!(zero_pad_coords(&g, &drop0).unwrap(), diag(&[0.0, 2.0], &[0.0, 4.0]));
        assert!(marginalize(&g, &CoordinateSet::empty(3)).is_err());
        assert!(CoordinateSet::new(2, [2]).is_err());
    }

    #[test]
    fn marginal_is_principal_submatrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = random_gaussian(7, 7, &mut rng);
        let drop = CoordinateSet::new(7, [1, 4, 5]).unwrap();
        let m = marginalize(&g, &drop).unwrap();
        let keep = [0usize, 2, 3, 6];
        for (a, &i) in keep.iter().enumerate() {
            assert_eq!(m.mean()[a], g.mean()[i]);
            for (b, &j) in keep.iter().enumerate() {
                assert_eq!(m.cov()[(a, b)], g.cov()[(i, j)]);
            }
        }
    }

    #[test]
    fn pseudometric_examples() {
        let a = diag(&[1.0, 2.0], &[1.0, 4.0]);
        let b = diag(&[0.0, 0.0], &[9.0, 1.0]);
        let drop0 = CoordinateSet::new(2, [0]).unwrap();
        assert_abs_diff_eq!(pseudo_w2(&a, &b, &drop0).unwrap(), 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(pseudo_w2(&a, &b, &CoordinateSet::all(2)).unwrap(), 0.0);
        // Differ only on coordinate 0.
        let c = diag(&[-7.0, 2.0], &[0.1, 4.0]);
        assert_abs_diff_eq!(pseudo_w2(&a, &c, &drop0).unwrap(), 0.0, epsilon = 1e-12);
        assert!(w2(&a, &c).unwrap() > 1.0);
        assert_abs_diff_eq!(
            pseudo_w2(&a, &b, &CoordinateSet::empty(2)).unwrap(),
            w2(&a, &b).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn subspace_basis_validation() {
        let e1 = Matrix::from_rows(&[&[1.0], &[0.0], &[0.0]]);
        let rest = Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let u = subspace_pseudo_basis(&e1, &rest).unwrap();
        assert_eq!(u, Matrix::identity(3));
        let bad = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!(subspace_pseudo_basis(&e1, &bad).is_err());
        assert!(subspace_pseudo_basis(&e1, &rest.columns(0, 1)).is_err());
    }

    #[test]
    fn standard_basis_reduces_to_coordinate_ignoring() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_gaussian(4, 4, &mut rng);
        let b = random_gaussian(4, 2, &mut rng);
        let u = Matrix::identity(4);
        let via_subspace = subspace_pseudo_w2(&a, &b, &u, 2).unwrap();
        let direct = pseudo_w2(&a, &b, &CoordinateSet::first(4, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(via_subspace, direct, epsilon = 1e-12);
    }

    #[test]
    fn rotation_inside_ignored_subspace_is_invisible() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let (d, dv) = (6, 2);
        for _ in 0..20 {
            let v: Matrix<f64> = random_orthonormal_cols(d, dv, &mut rng).unwrap();
            let comp = orthonormal_complement(&v);
            let u = subspace_pseudo_basis(&v, &comp).unwrap();
            assert!((&u.gram_inner() - &Matrix::identity(d)).max_abs() < 1e-10);
            // R = I + V (Q - I) Vᵀ rotates within span(V) and fixes its complement.
            let q = qr(&standard_normal_matrix::<f64, _>(dv, dv, &mut rng)).q;
            let inner = &q - &Matrix::identity(dv);
            let r = &Matrix::identity(d) + &v.matmul(&inner).matmul_t(&v);
            let g = random_gaussian(d, d, &mut rng);
            let rotated = Gaussian::new(r.mul_vec(g.mean()), r.matmul(g.cov()).matmul_t(&r).symmetrized()).unwrap();
            assert!(w2(&g, &rotated).unwrap() > 1e-3);
            assert!(subspace_pseudo_w2(&g, &rotated, &u, dv).unwrap() < 1e-7);
        }
    }

    #[test]
    fn concentration_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let one = norm_concentration(1, 100_000, &mut rng).unwrap();
        assert!((one.mean_ratio - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02);
        let ten = norm_concentration(10, 10_000, &mut rng).unwrap();
        let big = norm_concentration(1000, 10_000, &mut rng).unwrap();
        assert!((0.995..=1.005).contains(&big.mean_ratio));
        assert!(big.std_ratio < ten.std_ratio);
        assert!(norm_concentration(0, 5, &mut rng).is_err());
    }

    fn gaussian_strategy(d: usize) -> impl Strategy<Value = Gaussian<f64>> {
        (1..=d, any::<u64>()).prop_map(move |(rank, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_gaussian(d, rank, &mut rng)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_metric_axioms(a in gaussian_strategy(5), b in gaussian_strategy(5), c in gaussian_strategy(5)) {
            let ab = w2(&a, &b).unwrap();
            let ba = w2(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-9 * (1.0 + ab));
            prop_assert!(w2(&a, &a).unwrap() < 1e-9 * (1.0 + a.cov().trace().sqrt()));
            let ac = w2(&a, &c).unwrap();
            let cb = w2(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-8);
        }

        #[test]
        fn prop_pseudometric_two_paths(
            a in gaussian_strategy(6),
            b in gaussian_strategy(6),
            mask in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let ignored = CoordinateSet::new(6, (0..6).filter(|&i| mask[i])).unwrap();
            let marginal = pseudo_w2(&a, &b, &ignored).unwrap();
            let padded = pseudo_w2_zero_padded(&a, &b, &ignored).unwrap();
            prop_assert!((marginal - padded).abs() < 1e-8, "{} vs {}", marginal, padded);
        }

        #[test]
        fn prop_right_invariance(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g: Matrix<f64> = standard_normal_matrix(5, k, &mut rng);
            let u = qr(&standard_normal_matrix::<f64, _>(k, k, &mut rng)).q;
            let t = random_gaussian(5, 3, &mut rng);
            let gu = g.matmul(&u);
            prop_assert!((&g.gram_outer() - &gu.gram_outer()).frobenius_norm() < 1e-10);
            let lhs = w2(&Gaussian::from_factor(vec![0.0; 5], &g).unwrap(), &t).unwrap();
            let rhs = w2(&Gaussian::from_factor(vec![0.0; 5], &gu).unwrap(), &t).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs));
        }

        #[test]
        fn prop_kl_nonnegative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_gaussian(4, 6, &mut rng);
            let b = random_gaussian(4, 6, &mut rng);
            prop_assert!(gaussian_kl(&a, &b).unwrap() >= 0.0);
            prop_assert!(gaussian_kl(&a, &a).unwrap() < 1e-9);
        }
    }
}
