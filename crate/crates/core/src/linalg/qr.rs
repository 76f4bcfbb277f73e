use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Thin Householder QR of an `m x n` matrix with `m >= n`.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    /// `m x n` with orthonormal columns.
    pub q: Matrix<T>,
    /// `n x n` upper triangular with a nonnegative diagonal.
    pub r: Matrix<T>,
}

/// Householder QR; requires `rows >= cols`.
pub fn qr<T: Real>(a: &Matrix<T>) -> Qr<T> {
    let (m, n) = a.shape();
    assert!(m >= n, "qr needs a tall matrix, got {m}x{n}");
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(n);

    for j in 0..n {
        let norm = (j..m).map(|i| r[(i, j)] * r[(i, j)]).sum::<T>().sqrt();
        let mut v: Vec<T> = (j..m).map(|i| r[(i, j)]).collect();
        if norm.is_zero() {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= T::zero() { -norm } else { norm };
        v[0] -= alpha;
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        if vnorm_sq.is_zero() {
            reflectors.push(Vec::new());
            continue;
        }
        let two_over = T::lit(2.0) / vnorm_sq;
        for c in j..n {
            let dot: T = (j..m).map(|i| v[i - j] * r[(i, c)]).sum();
            let f = dot * two_over;
            for i in j..m {
                let delta = f * v[i - j];
                r[(i, c)] -= delta;
            }
        }
        reflectors.push(v);
    }

    // Accumulate the thin Q by applying reflectors to the first n unit columns.
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { T::one() } else { T::zero() });
    for j in (0..n).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        let two_over = T::lit(2.0) / vnorm_sq;
        // Columns left of j are still unit vectors above row j.
        for c in j..n {
            let dot: T = (j..m).map(|i| v[i - j] * q[(i, c)]).sum();
            let f = dot * two_over;
            for i in j..m {
                let delta = f * v[i - j];
                q[(i, c)] -= delta;
            }
        }
    }

    let mut rr = Matrix::from_fn(n, n, |i, j| if j >= i { r[(i, j)] } else { T::zero() });
    // Sign-normalize so diag(R) >= 0; makes the factorization unique.
    for i in 0..n {
        if rr[(i, i)] < T::zero() {
            for c in 0..n {
                rr[(i, c)] = -rr[(i, c)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Qr { q, r: rr }
}

/// Inverse of an upper triangular matrix; `None` if a diagonal entry is zero.
pub fn upper_triangular_inverse<T: Real>(r: &Matrix<T>) -> Option<Matrix<T>> {
    let n = r.rows();
    if (0..n).any(|i| r[(i, i)].is_zero()) {
        return None;
    }
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = T::one() / r[(j, j)];
        for i in (0..j).rev() {
            let mut acc = T::zero();
            for k in (i + 1)..=j {
                acc += r[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc / r[(i, i)];
        }
    }
    Some(inv)
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
///
/// Fails with [`Error::SingularCovariance`] when a pivot is not clearly
/// positive (below `n * eps * max diag`).
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "cholesky needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    let max_diag = a.diagonal().into_iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = T::from_usize_lossy(n.max(1)) * T::epsilon() * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::SingularCovariance(format!(
                "pivot {j} is {:e}, not above {:e}",
                d.to_f64_lossy(),
                floor.to_f64_lossy()
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower triangular `L`, column by column of `b`.
pub fn solve_lower<T: Real>(l: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}
