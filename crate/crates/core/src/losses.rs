//! Training losses for the linear generator `G` (`d x k`) and their analytic
//! gradients.
//!
//! Every loss is a weighted sum of at most two terms:
//!
//! * a fit term `w_fit ‖G Z - X_ps‖²` on the latent-paired samples, and
//! * a projection term on unpaired (or all) samples, either
//!   `w ‖(I - GGᵀ) Y‖²` or, for [`LossSpec::PsPinv`], `w ‖(I - GG⁺) Y‖²`.
//!
//! | variant          | fit weight | second term     | `Y`       | weight          |
//! |------------------|------------|-----------------|-----------|-----------------|
//! | `PcaProj`        | none       | `I - GGᵀ`       | all `X`   | 1               |
//! | `Supervised`     | `1/n_ps`   | `I - GGᵀ`       | `X_unsup` | `1/n_unsup`     |
//! | `PsPlain`        | `1/n_ps`   | `I - GGᵀ`       | `X_unsup` | `1/n_unsup`     |
//! | `PsRegularized`  | `1/n_ps`   | `I - GGᵀ`       | all `X`   | `1/n`           |
//! | `PsWeighted(α)`  | `α/n_ps`   | `I - GGᵀ`       | all `X`   | `(1-α)/n`       |
//! | `PsPinv`         | `1/n_ps`   | `I - GG⁺`       | all `X`   | `1/n`           |
//!
//! A term whose sample count is zero is dropped. A loss with no terms left is
//! rejected.

use std::fmt;
use std::str::FromStr;

use crate::datagen::Partition;
use crate::error::{invalid, Error, Result};
use crate::linalg::{qr, svd, upper_triangular_inverse, Matrix};
use crate::scalar::Real;

/// Frobenius condition estimate `‖R‖_F ‖R⁻¹‖_F` above which the
/// pseudoinverse falls back from QR to a rank-revealing SVD.
pub const PINV_QR_MAX_CONDITION: f64 = 1e8;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Which training loss to minimize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    PcaProj,
    Supervised,
    PsPlain,
    PsRegularized,
    PsWeighted { alpha: f64 },
    PsPinv,
}

impl LossSpec {
    pub const NAMES: [&'static str; 6] = [
        "pca_proj",
        "supervised",
        "ps_plain",
        "ps_regularized",
        "ps_weighted",
        "ps_pinv",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::PcaProj => "pca_proj",
            LossSpec::Supervised => "supervised",
            LossSpec::PsPlain => "ps_plain",
            LossSpec::PsRegularized => "ps_regularized",
            LossSpec::PsWeighted { .. } => "ps_weighted",
            LossSpec::PsPinv => "ps_pinv",
        }
    }

    /// Parses a variant name; `ps_weighted` takes `alpha`, others ignore it.
    pub fn from_name(name: &str, alpha: f64) -> Result<Self> {
        let spec = match name {
            "pca_proj" => LossSpec::PcaProj,
            "supervised" => LossSpec::Supervised,
            "ps_plain" => LossSpec::PsPlain,
            "ps_regularized" => LossSpec::PsRegularized,
            "ps_weighted" => LossSpec::PsWeighted { alpha },
            "ps_pinv" => LossSpec::PsPinv,
            other => return invalid(format!("unknown loss variant `{other}`")),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let LossSpec::PsWeighted { alpha } = self {
            if !(0.0..=1.0).contains(alpha) {
                return invalid(format!("alpha must lie in [0, 1], got {alpha}"));
            }
        }
        Ok(())
    }

    /// True when the fit term uses the latents of the partition.
    pub fn uses_latents(&self) -> bool {
        !matches!(self, LossSpec::PcaProj)
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, 0.98)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Projector {
    /// `I - GGᵀ`.
    Orthogonal,
    /// `I - GG⁺`.
    Pseudoinverse,
}

#[derive(Debug, Clone)]
struct FitTerm<T> {
    weight: T,
    z: Matrix<T>,
    x: Matrix<T>,
}

#[derive(Debug, Clone)]
struct ProjTerm<T> {
    weight: T,
    projector: Projector,
    x: Matrix<T>,
}

/// A loss bound to a fixed partition, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Objective<T> {
    spec: LossSpec,
    d: usize,
    fit: Option<FitTerm<T>>,
    proj: Option<ProjTerm<T>>,
}

impl<T: Real> Objective<T> {
    pub fn new(spec: LossSpec, part: &Partition<T>) -> Result<Self> {
        spec.validate()?;
        let n_ps = part.n_ps();
        let n_u = part.n_unsup();
        let n = part.n();
        let inv = |c: usize| T::one() / T::from_usize_lossy(c);
        let fit_with = |w: T| {
            (n_ps > 0 && spec.uses_latents()).then(|| FitTerm {
                weight: w,
                z: part.z_ps.clone(),
                x: part.x_ps.clone(),
            })
        };
        let full = || part.full_x();

        let (fit, proj) = match spec {
            LossSpec::PcaProj => (
                None,
                (n > 0).then(|| ProjTerm {
                    weight: T::one(),
                    projector: Projector::Orthogonal,
                    x: full(),
                }),
            ),
            LossSpec::Supervised | LossSpec::PsPlain => (
                fit_with(inv(n_ps.max(1))),
                (n_u > 0).then(|| ProjTerm {
                    weight: inv(n_u),
                    projector: Projector::Orthogonal,
                    x: part.x_unsup.clone(),
                }),
            ),
            LossSpec::PsRegularized => (
                fit_with(inv(n_ps.max(1))),
                (n > 0).then(|| ProjTerm {
                    weight: inv(n),
                    projector: Projector::Orthogonal,
                    x: full(),
                }),
            ),
            LossSpec::PsWeighted { alpha } => {
                let a = T::lit(alpha);
                (
                    fit_with(a * inv(n_ps.max(1))),
                    (n > 0).then(|| ProjTerm {
                        weight: (T::one() - a) * inv(n.max(1)),
                        projector: Projector::Orthogonal,
                        x: full(),
                    }),
                )
            }
            LossSpec::PsPinv => (
                fit_with(inv(n_ps.max(1))),
                (n > 0).then(|| ProjTerm {
                    weight: inv(n),
                    projector: Projector::Pseudoinverse,
                    x: full(),
                }),
            ),
        };
        if fit.is_none() && proj.is_none() {
            return invalid(format!("loss `{spec}` has no terms (n_ps = {n_ps}, n_unsup = {n_u})"));
        }
        Ok(Self {
            spec,
            d: part.d(),
            fit,
            proj,
        })
    }

    pub fn spec(&self) -> LossSpec {
        self.spec
    }

    fn check_shape(&self, g: &Matrix<T>) -> Result<()> {
        if g.rows() != self.d {
            return invalid(format!("G has {} rows, data has dimension {}", g.rows(), self.d));
        }
        if let Some(fit) = &self.fit {
            if g.cols() != fit.z.rows() {
                return invalid(format!(
                    "G has {} columns but latents have dimension {}",
                    g.cols(),
                    fit.z.rows()
                ));
            }
        }
        if g.cols() == 0 {
            return invalid("G must have at least one column");
        }
        g.ensure_finite("G")
    }

    pub fn value(&self, g: &Matrix<T>) -> Result<T> {
        self.check_shape(g)?;
        let mut total = T::zero();
        if let Some(fit) = &self.fit {
            total += fit.weight * (&g.matmul(&fit.z) - &fit.x).frobenius_sq();
        }
        if let Some(p) = &self.proj {
            total += p.weight * proj_residual(p, g)?.frobenius_sq();
        }
        Ok(total)
    }

    pub fn gradient(&self, g: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_shape(g)?;
        let mut grad = Matrix::zeros(g.rows(), g.cols());
        if let Some(fit) = &self.fit {
            // 2w (GZ - X) Zᵀ
            let r = &g.matmul(&fit.z) - &fit.x;
            grad.add_scaled(T::lit(2.0) * fit.weight, &r.matmul_t(&fit.z));
        }
        if let Some(p) = &self.proj {
            match p.projector {
                Projector::Orthogonal => {
                    // w (-4 XXᵀG + 2 XXᵀG GᵀG + 2 G GᵀXXᵀG), with Y = XᵀG.
                    // Products are grouped so each costs O(dnk), never O(dk²).
                    let y = p.x.t_matmul(g);
                    let xy = p.x.matmul(&y);
                    let xy_gtg = p.x.matmul(&y.matmul_t(g).matmul(g));
                    let g_yty = g.matmul_t(&y).matmul(&y);
                    grad.add_scaled(T::lit(-4.0) * p.weight, &xy);
                    grad.add_scaled(T::lit(2.0) * p.weight, &xy_gtg);
                    grad.add_scaled(T::lit(2.0) * p.weight, &g_yty);
                }
                Projector::Pseudoinverse => {
                    // -2w (I - GG⁺) X Xᵀ (G⁺)ᵀ
                    let parts = pinv_parts(g, &p.x)?;
                    if let Some(pt) = parts.pinv_t {
                        let xp = p.x.t_matmul(&pt);
                        grad.add_scaled(T::lit(-2.0) * p.weight, &parts.residual.matmul(&xp));
                    }
                }
            }
        }
        Ok(grad)
    }

    /// The loss along `t ↦ G - t D`.
    ///
    /// Fit and orthogonal-projection terms are polynomials in `t` (degree 2
    /// and 4) whose coefficients are computed once here; a pseudoinverse
    /// term is evaluated directly at each `t`.
    pub fn line<'a>(&'a self, g: &'a Matrix<T>, dir: &'a Matrix<T>) -> Result<LineProfile<'a, T>> {
        self.check_shape(g)?;
        if dir.shape() != g.shape() {
            return invalid("search direction shape differs from G");
        }
        let two = T::lit(2.0);
        let mut c = [T::zero(); 5];
        if let Some(fit) = &self.fit {
            let r0 = &g.matmul(&fit.z) - &fit.x;
            let r1 = dir.matmul(&fit.z);
            let w = fit.weight;
            c[0] += w * r0.frobenius_sq();
            c[1] -= w * two * r0.dot(&r1);
            c[2] += w * r1.frobenius_sq();
        }
        let mut pinv = None;
        if let Some(p) = &self.proj {
            match p.projector {
                Projector::Orthogonal => {
                    let gtx = g.t_matmul(&p.x);
                    let dtx = dir.t_matmul(&p.x);
                    let e0 = &p.x - &g.matmul(&gtx);
                    let e1 = &g.matmul(&dtx) + &dir.matmul(&gtx);
                    let e2 = -&dir.matmul(&dtx);
                    let w = p.weight;
                    c[0] += w * e0.frobenius_sq();
                    c[1] += w * two * e0.dot(&e1);
                    c[2] += w * (e1.frobenius_sq() + two * e0.dot(&e2));
                    c[3] += w * two * e1.dot(&e2);
                    c[4] += w * e2.frobenius_sq();
                }
                Projector::Pseudoinverse => pinv = Some(p),
            }
        }
        Ok(LineProfile {
            coeffs: c,
            pinv,
            g,
            dir,
        })
    }
}

/// Loss values along a line, see [`Objective::line`].
#[derive(Debug)]
pub struct LineProfile<'a, T> {
    coeffs: [T; 5],
    pinv: Option<&'a ProjTerm<T>>,
    g: &'a Matrix<T>,
    dir: &'a Matrix<T>,
}

impl<T: Real> LineProfile<'_, T> {
    pub fn eval(&self, t: T) -> Result<T> {
        let c = &self.coeffs;
        let poly = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
        match self.pinv {
            None => Ok(poly.max(T::zero())),
            Some(p) => {
                let mut gt = self.g.clone();
                gt.add_scaled(-t, self.dir);
                gt.ensure_finite("line-search candidate")?;
                Ok(poly.max(T::zero()) + p.weight * proj_residual(p, &gt)?.frobenius_sq())
            }
        }
    }
}

fn proj_residual<T: Real>(p: &ProjTerm<T>, g: &Matrix<T>) -> Result<Matrix<T>> {
    match p.projector {
        Projector::Orthogonal => Ok(&p.x - &g.matmul(&g.t_matmul(&p.x))),
        Projector::Pseudoinverse => Ok(pinv_parts(g, &p.x)?.residual),
    }
}

struct PinvParts<T> {
    /// `(I - GG⁺) X`.
    residual: Matrix<T>,
    /// `(G⁺)ᵀ`, absent when the residual is identically zero.
    pinv_t: Option<Matrix<T>>,
}

fn frobenius_condition<T: Real>(r: &Matrix<T>) -> Option<Matrix<T>> {
    let inv = upper_triangular_inverse(r)?;
    let kappa = r.frobenius_norm() * inv.frobenius_norm();
    (kappa.is_finite() && kappa <= T::lit(PINV_QR_MAX_CONDITION)).then_some(inv)
}

/// Range projector of `G` applied to `X`, via QR when `G` is well
/// conditioned and via a rank-truncated SVD otherwise.
fn pinv_parts<T: Real>(g: &Matrix<T>, x: &Matrix<T>) -> Result<PinvParts<T>> {
    if g.max_abs().is_zero() {
        return Err(Error::DegenerateOperand(
            "pseudoinverse loss is undefined at G = 0".into(),
        ));
    }
    let (d, k) = g.shape();
    if k <= d {
        let f = qr(g);
        if let Some(rinv) = frobenius_condition(&f.r) {
            let residual = x - &f.q.matmul(&f.q.t_matmul(x));
            // G⁺ = R⁻¹ Qᵀ, so (G⁺)ᵀ = Q R⁻ᵀ.
            let pinv_t = f.q.matmul_t(&rinv);
            return Ok(PinvParts {
                residual,
                pinv_t: Some(pinv_t),
            });
        }
    } else {
        let f = qr(&g.transpose());
        if frobenius_condition(&f.r).is_some() {
            // Full row rank: GG⁺ = I.
            return Ok(PinvParts {
                residual: Matrix::zeros(x.rows(), x.cols()),
                pinv_t: None,
            });
        }
    }
    let s = svd(g)?;
    let r = s.rank();
    let ur = s.u.columns(0, r);
    let residual = x - &ur.matmul(&ur.t_matmul(x));
    let scaled = Matrix::from_fn(d, r, |i, j| ur[(i, j)] / s.s[j]);
    let pinv_t = scaled.matmul_t(&s.v.columns(0, r));
    Ok(PinvParts {
        residual,
        pinv_t: Some(pinv_t),
    })
}

pub fn loss_value<T: Real>(spec: LossSpec, g: &Matrix<T>, part: &Partition<T>) -> Result<T> {
    Objective::new(spec, part)?.value(g)
}

pub fn loss_gradient<T: Real>(spec: LossSpec, g: &Matrix<T>, part: &Partition<T>) -> Result<Matrix<T>> {
    Objective::new(spec, part)?.gradient(g)
}

/// Entrywise central differences `(L(G + hE) - L(G - hE)) / 2h`.
pub fn finite_diff_gradient<T: Real>(spec: LossSpec, g: &Matrix<T>, part: &Partition<T>, h: T) -> Result<Matrix<T>> {
    if !(h > T::zero()) {
        return invalid("finite-difference step must be positive");
    }
    let obj = Objective::new(spec, part)?;
    obj.check_shape(g)?;
    let mut out = Matrix::zeros(g.rows(), g.cols());
    let mut probe = g.clone();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = obj.value(&probe)?;
            probe[(i, j)] = orig - h;
            let down = obj.value(&probe)?;
            probe[(i, j)] = orig;
            out[(i, j)] = (up - down) / (h + h);
        }
    }
    Ok(out)
}

/// Entrywise `|a - b| / max(1, |a|, |b|)`: relative where entries are large,
/// absolute where they are below one.
pub fn relative_deviations<T: Real>(analytic: &Matrix<T>, numeric: &Matrix<T>) -> Vec<f64> {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(&a, &b)| {
            let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
            (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
        })
        .collect()
}
