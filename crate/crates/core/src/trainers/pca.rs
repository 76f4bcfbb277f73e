use crate::error::{invalid, Result};
use crate::linalg::{clamp_psd_spectrum, orthonormal_complement, svd, sym_eigen, Matrix};
use crate::scalar::Real;

/// Top-`k` principal directions of `(1/n) X Xᵀ`.
#[derive(Debug, Clone)]
pub struct PcaFit<T> {
    /// `d x k`, orthonormal columns.
    pub components: Matrix<T>,
    /// Nonincreasing; exactly 0 beyond the numerical rank of `X`.
    pub eigenvalues: Vec<T>,
}

/// Eigendecomposition of the sample covariance, computed once and truncated
/// for any number of components.
#[derive(Debug, Clone)]
pub struct PcaBasis<T> {
    vectors: Matrix<T>,
    values: Vec<T>,
}

impl<T: Real> PcaBasis<T> {
    /// Eigenvalues at or below `d * eps * λ_max` are set to exactly 0, so
    /// generator columns past the rank of `X` are exactly zero.
    pub fn new(x: &Matrix<T>) -> Result<Self> {
        if x.cols() == 0 {
            return invalid("PCA needs at least one sample");
        }
        if x.cols() < x.rows() {
            return Self::from_thin_svd(x);
        }
        let cov = x
            .gram_outer()
            .scale(T::one() / T::from_usize_lossy(x.cols()))
            .symmetrized();
        let eig = sym_eigen(&cov)?;
        let values = clamp_psd_spectrum(&eig)?;
        Ok(Self {
            vectors: eig.vectors,
            values,
        })
    }

    /// `n < d`: left singular vectors of `X`, completed to an orthonormal
    /// basis of `R^d`. Same clamping rule as the covariance route.
    fn from_thin_svd(x: &Matrix<T>) -> Result<Self> {
        let (d, n) = x.shape();
        let f = svd(x)?;
        let inv_n = T::one() / T::from_usize_lossy(n);
        let lambda: Vec<T> = f.s.iter().map(|&s| s * s * inv_n).collect();
        let scale = lambda.first().copied().unwrap_or_else(T::zero);
        let floor = T::from_usize_lossy(d) * T::epsilon() * scale;
        let r = lambda.iter().take_while(|&&l| l > floor).count();
        let kept = f.u.columns(0, r);
        let vectors = kept.hcat(&orthonormal_complement(&kept))?;
        let mut values = lambda[..r].to_vec();
        values.resize(d, T::zero());
        Ok(Self { vectors, values })
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    /// Full spectrum, nonincreasing.
    pub fn eigenvalues(&self) -> &[T] {
        &self.values
    }

    /// `k ≤ d` leading components. Directions past the rank of `X` are an
    /// orthonormal completion of its null space.
    pub fn fit(&self, k: usize) -> Result<PcaFit<T>> {
        if k == 0 || k > self.d() {
            return invalid(format!(
                "cannot take {k} orthonormal components in dimension {}",
                self.d()
            ));
        }
        Ok(PcaFit {
            components: self.vectors.columns(0, k),
            eigenvalues: self.values[..k].to_vec(),
        })
    }

    /// `V_k diag(√λ)`, padded with zero columns when `k > d`.
    pub fn generator(&self, k: usize) -> Result<Matrix<T>> {
        if k == 0 {
            return invalid("generator needs at least one latent dimension");
        }
        let d = self.d();
        let roots: Vec<T> = self.values.iter().map(|l| l.sqrt()).collect();
        Ok(Matrix::from_fn(d, k, |i, j| {
            if j < d {
                self.vectors[(i, j)] * roots[j]
            } else {
                T::zero()
            }
        }))
    }
}

pub fn pca_fit<T: Real>(x: &Matrix<T>, k: usize) -> Result<PcaFit<T>> {
    PcaBasis::new(x)?.fit(k)
}

/// Generator whose `GGᵀ` is the best rank-`k` approximation of the sample
/// covariance; equal to it once `k` reaches the rank of `X`.
pub fn pca_generator<T: Real>(x: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    PcaBasis::new(x)?.generator(k)
}
