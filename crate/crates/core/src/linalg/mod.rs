//! Dense linear algebra: symmetric eigendecomposition, SVD, QR, PSD square
//! roots, Moore-Penrose pseudoinverse, and the Hadamard / random orthonormal
//! constructions used to build ground-truth factor matrices.

mod eigen;
mod matrix;
mod qr;
mod svd;

pub use eigen::{sym_eigen, SymmetricEigen, SYMMETRY_TOL};
pub use matrix::Matrix;
pub use qr::{cholesky, qr, solve_lower, upper_triangular_inverse, Qr};
pub use svd::{svd, Svd};

use std::ops::Neg;

use num_traits::Num;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Relative size below which a negative eigenvalue counts as roundoff.
pub const PSD_NEGATIVE_TOL: f64 = 1e-10;

/// Symmetric PSD square root via eigendecomposition.
///
/// Roundoff-level eigenvalues are clamped to zero (see
/// [`clamp_psd_spectrum`]); anything below `-1e-10 * max|λ|` is rejected with
/// [`Error::NotPsd`].
pub fn psd_sqrt<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = sym_eigen(a)?;
    let clamped = clamp_psd_spectrum(&eig)?;
    let n = a.rows();
    let roots: Vec<T> = clamped.iter().map(|l| l.sqrt()).collect();
    let scaled = Matrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] * roots[j]);
    Ok(scaled.matmul_t(&eig.vectors).symmetrized())
}

/// Eigenvalues with roundoff-level values set to zero.
///
/// Negatives down to `-1e-10 * max|λ|` and positives up to
/// `n * eps * max|λ|` both become 0. The latter are indistinguishable from
/// rounding in the input, and keeping them would inject `sqrt(eps)`-sized
/// noise into square roots of rank-deficient matrices.
pub fn clamp_psd_spectrum<T: Real>(eig: &SymmetricEigen<T>) -> Result<Vec<T>> {
    let scale = eig.max_abs_value();
    let tol = T::lit(PSD_NEGATIVE_TOL) * scale;
    let floor = T::from_usize_lossy(eig.values.len()) * T::epsilon() * scale;
    let mut out = Vec::with_capacity(eig.values.len());
    for &l in &eig.values {
        if l < -tol {
            return Err(Error::NotPsd {
                min_eigenvalue: l.to_f64_lossy(),
                tolerance: -tol.to_f64_lossy(),
            });
        }
        out.push(if l <= floor { T::zero() } else { l });
    }
    Ok(out)
}

/// Moore-Penrose pseudoinverse with singular values at or below
/// `max(rows, cols) * eps * s_max` treated as zero.
pub fn pinv<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let d = svd(a)?;
    let r = d.rank();
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for j in 0..r {
        let inv = T::one() / d.s[j];
        for i in 0..a.cols() {
            let vi = d.v[(i, j)] * inv;
            if vi.is_zero() {
                continue;
            }
            for c in 0..a.rows() {
                out[(i, c)] += vi * d.u[(c, j)];
            }
        }
    }
    Ok(out)
}

/// Sylvester Hadamard matrix of order `d` (a power of two).
///
/// Generic over any signed ring, so integer instantiations give exact
/// arithmetic.
pub fn hadamard<T: Copy + Num + Neg<Output = T>>(d: usize) -> Result<Matrix<T>> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut h = Matrix::from_rows(&[&[T::one()]]);
    while h.rows() < d {
        let n = h.rows();
        h = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            let v = h[(i % n, j % n)];
            if i >= n && j >= n {
                -v
            } else {
                v
            }
        });
    }
    Ok(h)
}

/// `d x m` matrix with orthonormal columns, from the QR of a Gaussian matrix.
///
/// With the diagonal of R made positive the result is Haar-distributed.
pub fn random_orthonormal_cols<T: Real, R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Matrix<T>> {
    if m > d {
        return invalid(format!("cannot fit {m} orthonormal columns in dimension {d}"));
    }
    let g = standard_normal_matrix(d, m, rng);
    Ok(qr(&g).q)
}

/// Matrix of i.i.d. standard normal entries, drawn in row-major order.
pub fn standard_normal_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// Orthonormal basis for the orthogonal complement of the column span of
/// `basis` (whose columns must already be orthonormal). Returns
/// `n x (n - r)`.
pub fn orthonormal_complement<T: Real>(basis: &Matrix<T>) -> Matrix<T> {
    let n = basis.rows();
    let r = basis.cols().min(n);
    let mut cols: Vec<Vec<T>> = (0..r).map(|j| basis.column(j)).collect();
    // captured[i] = squared norm of the projection of e_i onto span(cols).
    let mut captured: Vec<T> = (0..n).map(|i| cols.iter().map(|c| c[i] * c[i]).sum()).collect();
    let mut extra: Vec<Vec<T>> = Vec::with_capacity(n - r);
    while cols.len() < n {
        // The unit vector with the largest residual has residual^2 >= 1/n.
        let e = (0..n)
            .min_by(|&a, &b| {
                captured[a]
                    .partial_cmp(&captured[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mut v: Vec<T> = (0..n).map(|i| if i == e { T::one() } else { T::zero() }).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: T = c.iter().zip(&v).map(|(&a, &b)| a * b).sum();
                for (x, &ci) in v.iter_mut().zip(c) {
                    *x -= proj * ci;
                }
            }
        }
        let inv = T::one() / v.iter().map(|&x| x * x).sum::<T>().sqrt();
        let unit: Vec<T> = v.iter().map(|&x| x * inv).collect();
        for (cap, &u) in captured.iter_mut().zip(&unit) {
            *cap += u * u;
        }
        cols.push(unit.clone());
        extra.push(unit);
    }
    Matrix::from_fn(n, extra.len(), |i, j| extra[j][i])
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Relative Frobenius residuals of the four Penrose identities.
    fn penrose_residuals(a: &Matrix<f64>, p: &Matrix<f64>) -> [f64; 4] {
        let apa = a.matmul(p).matmul(a);
        let pap = p.matmul(a).matmul(p);
        let ap = a.matmul(p);
        let pa = p.matmul(a);
        let rel = |x: &Matrix<f64>, y: &Matrix<f64>| (x - y).frobenius_norm() / y.frobenius_norm().max(1.0);
        [
            rel(&apa, a),
            rel(&pap, p),
            rel(&ap.transpose(), &ap),
            rel(&pa.transpose(), &pa),
        ]
    }

    #[test]
    fn psd_sqrt_identity_and_diagonal() {
        let i4 = Matrix::<f64>::identity(4);
        assert!(psd_sqrt(&i4).unwrap().rel_diff(&i4) < 1e-15);
        let s = psd_sqrt(&Matrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(s, Matrix::from_diagonal(&[2.0, 3.0]));
    }

    #[test]
    fn psd_sqrt_of_low_rank_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = random_matrix(6, 3, &mut rng);
        let a = b.gram_outer();
        let s = psd_sqrt(&a).unwrap();
        assert!(s.matmul(&s).rel_diff(&a) < 1e-9);
        assert!(s.relative_asymmetry() < 1e-14);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let a = Matrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&a), Err(Error::NotPsd { .. })));
        // Roundoff-level negatives are clamped.
        let b = Matrix::from_diagonal(&[1.0, -1e-13]);
        assert!(psd_sqrt(&b).is_ok());
    }

    #[test]
    fn pinv_small_cases() {
        let p = pinv(&Matrix::from_diagonal(&[2.0, 0.0])).unwrap();
        assert_eq!(p, Matrix::from_diagonal(&[0.5, 0.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g: Matrix<f64> = random_orthonormal_cols(7, 3, &mut rng).unwrap();
        assert!(pinv(&g).unwrap().rel_diff(&g.transpose()) < 1e-12);

        let zero = pinv(&Matrix::<f64>::zeros(2, 3)).unwrap();
        assert_eq!(zero, Matrix::zeros(3, 2));
    }

    #[test]
    fn pinv_penrose_on_random_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(5, 8, &mut rng);
        let p = pinv(&a).unwrap();
        for r in penrose_residuals(&a, &p) {
            assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn hadamard_small_orders() {
        assert_eq!(hadamard::<i64>(1).unwrap(), Matrix::from_rows(&[&[1]]));
        assert_eq!(hadamard::<i64>(2).unwrap(), Matrix::from_rows(&[&[1, 1], &[1, -1]]));
        assert!(matches!(hadamard::<i64>(12), Err(Error::UnsupportedDimension(12))));
        assert!(hadamard::<i64>(0).is_err());
    }

    #[test]
    fn hadamard_64_is_orthogonal_exactly() {
        let h = hadamard::<i64>(64).unwrap();
        assert!(h.as_slice().iter().all(|&x| x == 1 || x == -1));
        assert_eq!(h.t_matmul(&h), Matrix::identity(64).scale(64));
        let hf = hadamard::<f64>(64).unwrap();
        assert_eq!(hf.t_matmul(&hf), Matrix::identity(64).scale(64.0));
    }

    #[test]
    fn random_orthonormal_shapes_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q: Matrix<f64> = random_orthonormal_cols(3, 3, &mut rng).unwrap();
        assert!(orthonormality_error(&q) < 1e-12);
        let q: Matrix<f64> = random_orthonormal_cols(64, 10, &mut rng).unwrap();
        assert!(orthonormality_error(&q) < 1e-10);

        let a: Matrix<f64> = random_orthonormal_cols(9, 4, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b: Matrix<f64> = random_orthonormal_cols(9, 4, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
        assert!(random_orthonormal_cols::<f64, _>(3, 4, &mut rng).is_err());
    }

    #[test]
    fn complement_completes_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q: Matrix<f64> = random_orthonormal_cols(6, 2, &mut rng).unwrap();
        let c = orthonormal_complement(&q);
        assert_eq!(c.shape(), (6, 4));
        let full = q.hcat(&c).unwrap();
        assert!(orthonormality_error(&full) < 1e-12);
    }

    fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix<f64>> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3.0f64..3.0, r * c).prop_map(move |data| Matrix::from_vec(r, c, data).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_psd_sqrt_squares_back(b in matrix_strategy(8, 8)) {
            let a = b.gram_outer();
            let s = psd_sqrt(&a).unwrap();
            let err = (&s.matmul(&s) - &a).frobenius_norm() / a.frobenius_norm().max(1e-300);
            prop_assert!(err < 1e-9, "relative error {err}");
        }

        #[test]
        fn prop_pinv_penrose(a in matrix_strategy(7, 7)) {
            let p = pinv(&a).unwrap();
            for r in penrose_residuals(&a, &p) {
                prop_assert!(r < 1e-8, "residual {r}");
            }
        }

        #[test]
        fn prop_eigen_sorted_and_orthonormal(b in matrix_strategy(7, 7)) {
            if b.is_square() {
                let a = b.symmetrized();
                let e = sym_eigen(&a).unwrap();
                prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
                prop_assert!(orthonormality_error(&e.vectors) < 1e-10);
                prop_assert!(e.reconstruct().rel_diff(&a) < 1e-10);
            }
        }
    }
}
