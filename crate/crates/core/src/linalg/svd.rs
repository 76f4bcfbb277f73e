use crate::error::Result;
use crate::linalg::{orthonormal_complement, Matrix};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(s) Vᵀ`.
///
/// For an `m x n` input with `r = min(m, n)`: `u` is `m x r`, `v` is `n x r`,
/// both with orthonormal columns, and `s` is nonincreasing. Left vectors
/// belonging to exactly-zero singular values are an orthonormal completion.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub s: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `max(m, n) * eps * s_max`.
    pub fn rank(&self) -> usize {
        let cutoff = self.cutoff();
        self.s.iter().take_while(|&&x| x > cutoff).count()
    }

    pub fn cutoff(&self) -> T {
        let dim = self.u.rows().max(self.v.rows());
        let smax = self.s.first().copied().unwrap_or_else(T::zero);
        T::from_usize_lossy(dim) * T::epsilon() * smax
    }

    pub fn nuclear_norm(&self) -> T {
        self.s.iter().copied().sum()
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        let scaled = Matrix::from_fn(self.u.rows(), self.s.len(), |i, j| self.u[(i, j)] * self.s[j]);
        scaled.matmul_t(&self.v)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Real>(a: &Matrix<T>) -> Result<Svd<T>> {
    a.ensure_finite("svd input")?;
    if a.rows() >= a.cols() {
        Ok(hestenes(a))
    } else {
        let t = hestenes(&a.transpose());
        Ok(Svd { u: t.v, s: t.s, v: t.u })
    }
}

/// Orthogonalizes the columns of a tall matrix (`m >= n`).
fn hestenes<T: Real>(a: &Matrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    // Columns stored contiguously.
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    let tiny = T::min_positive_value().sqrt();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (&w[p], &w[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for (&x, &y) in wp.iter().zip(wq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma.abs() <= tiny || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = w
        .iter()
        .map(|col| col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let s: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let mut u = Matrix::zeros(m, n);
    let mut filled = 0;
    for (slot, &j) in order.iter().enumerate() {
        if norms[j] > T::zero() {
            let inv = T::one() / norms[j];
            let col: Vec<T> = w[j].iter().map(|&x| x * inv).collect();
            u.set_column(slot, &col);
            filled = slot + 1;
        }
    }
    if filled < n {
        let basis = u.columns(0, filled);
        let extra = orthonormal_complement(&basis);
        for slot in filled..n {
            u.set_column(slot, &extra.column(slot - filled));
        }
    }
    let vm = Matrix::from_fn(n, n, |i, slot| v[order[slot]][i]);
    Svd { u, s, v: vm }
}

fn rotate_pair<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}
