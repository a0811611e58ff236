//! Barycenters of HPD matrices used as clutter-covariance estimators.
//!
//! The total-Bregman means are closed-form: the stationary condition of
//! `G(X) = (1/m) Σ δ_F(X, X_i)` is
//!
//! ```text
//! ∇F(X) = Σ_i ∇F(X_i)/w_i  /  Σ_j 1/w_j,      w_i = sqrt(1 + ‖∇F(X_i)‖²)
//! ```
//!
//! and inverting `∇F` gives the mean (identity for TSL, `−(·)⁻¹` for TLD,
//! `exp` for TVN). The AIRM (Karcher) mean has no closed form and is found
//! by fixed-point iteration.

use serde::{Deserialize, Serialize};

use crate::divergence::{dissimilarity, potential_gradient, slope_weight, DivergenceKind};
use crate::error::{Error, Result};
use crate::hpd::{matrix_exp, CMatrix, CVector, Hermitian, Hpd};
use crate::sum::{pairwise_sum, pairwise_sum_matrices};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanKind {
    Tsl,
    Tld,
    Tvn,
    Airm,
    ScmArithmetic,
}

impl MeanKind {
    pub const ALL: [MeanKind; 5] = [Self::Tsl, Self::Tld, Self::Tvn, Self::Airm, Self::ScmArithmetic];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tsl => "TSL",
            Self::Tld => "TLD",
            Self::Tvn => "TVN",
            Self::Airm => "AIRM",
            Self::ScmArithmetic => "SCM",
        }
    }

    /// The divergence whose barycenter this is; `None` for the arithmetic mean.
    pub fn divergence(self) -> Option<DivergenceKind> {
        match self {
            Self::Tsl => Some(DivergenceKind::Tsl),
            Self::Tld => Some(DivergenceKind::Tld),
            Self::Tvn => Some(DivergenceKind::Tvn),
            Self::Airm => Some(DivergenceKind::Airm),
            Self::ScmArithmetic => None,
        }
    }

    fn total_bregman(self) -> Option<DivergenceKind> {
        self.divergence().filter(|k| *k != DivergenceKind::Airm)
    }
}

impl std::fmt::Display for MeanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct MeanReport {
    pub mean: Hpd,
    pub iterations: usize,
    /// First-order residual of the mean's objective at `mean`.
    pub gradient_norm: f64,
}

fn check_set(xs: &[Hpd]) -> Result<usize> {
    let first = xs.first().ok_or(Error::EmptyInput)?;
    let n = first.dim();
    if let Some(bad) = xs.iter().find(|x| x.dim() != n) {
        return Err(Error::DimensionMismatch(n, bad.dim()));
    }
    Ok(n)
}

/// Gradients `∇F(X_i)` and slope weights `w_i`.
pub(crate) fn gradients_and_weights(kind: DivergenceKind, xs: &[Hpd]) -> Result<(Vec<Hermitian>, Vec<f64>)> {
    let mut grads = Vec::with_capacity(xs.len());
    let mut weights = Vec::with_capacity(xs.len());
    for x in xs {
        weights.push(slope_weight(kind, x)?);
        grads.push(potential_gradient(kind, x)?);
    }
    Ok((grads, weights))
}

/// Invert the gradient map: the HPD matrix whose `∇F` is `g`.
pub(crate) fn inverse_gradient(kind: DivergenceKind, g: &Hermitian) -> Result<Hpd> {
    match kind {
        DivergenceKind::Tsl => Hpd::from_hermitian(g.clone(), crate::hpd::PD_TOL),
        DivergenceKind::Tld => {
            Ok(Hpd::from_hermitian(g.scale(-1.0), crate::hpd::PD_TOL)?.inverse())
        }
        DivergenceKind::Tvn => matrix_exp(g),
        DivergenceKind::Airm => Err(Error::UnsupportedKind("AIRM has no gradient map")),
    }
}

/// Weighted combination `Σ a_i G_i / Σ a_i` with pairwise sums.
pub(crate) fn weighted_average(items: &[(&CMatrix, f64)]) -> Hermitian {
    let terms: Vec<CMatrix> = items.iter().map(|(m, a)| m.scale(*a)).collect();
    let coeffs: Vec<f64> = items.iter().map(|(_, a)| *a).collect();
    let total = pairwise_sum_matrices(&terms).expect("nonempty");
    Hermitian::from_hermitian_part(&total.scale(1.0 / pairwise_sum(&coeffs)))
}

/// Closed-form total-Bregman mean for `kind` ∈ {TSL, TLD, TVN}.
pub fn tbd_mean(kind: DivergenceKind, xs: &[Hpd]) -> Result<MeanReport> {
    check_set(xs)?;
    if kind == DivergenceKind::Airm {
        return Err(Error::UnsupportedKind("use airm_mean for the Karcher mean"));
    }
    let (grads, weights) = gradients_and_weights(kind, xs)?;
    let items: Vec<(&CMatrix, f64)> = grads
        .iter()
        .zip(&weights)
        .map(|(g, w)| (g.matrix(), 1.0 / w))
        .collect();
    let target = weighted_average(&items);
    let mean = inverse_gradient(kind, &target)?;
    let residual = tbd_objective_gradient_from(kind, &mean, &grads, &weights)?.norm();
    Ok(MeanReport {
        mean,
        iterations: 1,
        gradient_norm: residual,
    })
}

pub(crate) fn tbd_objective_gradient_from(
    kind: DivergenceKind,
    x: &Hpd,
    grads: &[Hermitian],
    weights: &[f64],
) -> Result<Hermitian> {
    let gx = potential_gradient(kind, x)?;
    let terms: Vec<CMatrix> = grads
        .iter()
        .zip(weights)
        .map(|(g, w)| (gx.matrix() - g.matrix()).scale(1.0 / w))
        .collect();
    let total = pairwise_sum_matrices(&terms).expect("nonempty");
    Ok(Hermitian::from_hermitian_part(&total.scale(1.0 / grads.len() as f64)))
}

pub const AIRM_TOL: f64 = 1e-10;
pub const AIRM_MAX_ITER: usize = 200;

/// Arithmetic mean of HPD matrices.
pub fn arithmetic_mean(xs: &[Hpd]) -> Result<Hpd> {
    check_set(xs)?;
    let ms: Vec<CMatrix> = xs.iter().map(|x| x.matrix().clone()).collect();
    let total = pairwise_sum_matrices(&ms).expect("nonempty");
    Hpd::new(total.scale(1.0 / xs.len() as f64))
}

/// Karcher residual `‖(1/m) Σ Log(X_i⁻¹ X)‖` at `x`, together with the
/// Hermitian tangent average `M = (1/m) Σ Log(X^{-1/2} X_i X^{-1/2})` that
/// drives the fixed-point step. `Log(X_i⁻¹X) = −X^{-1/2} Log(X^{-1/2}X_iX^{-1/2}) X^{1/2}`.
fn karcher_step(x: &Hpd, xs: &[Hpd], weights: Option<&[f64]>) -> Result<(Hermitian, f64)> {
    let w = x.inv_sqrt();
    let logs: Vec<CMatrix> = xs
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let c = Hpd::new(Hermitian::from_hermitian_part(&(w.matrix() * xi.matrix() * w.matrix())).into_matrix())?;
            let a = weights.map_or(1.0, |ws| ws[i]);
            Ok(c.log().into_matrix().scale(a))
        })
        .collect::<Result<_>>()?;
    let total = pairwise_sum_matrices(&logs).expect("nonempty");
    let denom = weights.map_or(xs.len() as f64, pairwise_sum);
    let m = Hermitian::from_hermitian_part(&total.scale(1.0 / denom));
    let s = x.sqrt();
    let residual = (w.matrix() * m.matrix() * s.matrix()).norm();
    Ok((m, residual))
}

/// Step bounds for the Karcher iteration. The Hessian of the objective is
/// at least the identity on this manifold, so steps above 1 never help.
const MIN_STEP: f64 = 0.05;
const MAX_STEP: f64 = 1.0;

/// Barzilai–Borwein length `⟨s, s⟩ / ⟨s, y⟩` from the previous tangent
/// step `s = t·M_prev` and gradient change `y = M_prev − M`, both read in
/// whitened coordinates.
fn barzilai_borwein_step(prev: &Hermitian, current: &Hermitian, prev_step: f64) -> f64 {
    let s = prev.matrix().scale(prev_step);
    let y = prev.matrix() - current.matrix();
    let ss = s.norm_squared();
    let sy = s.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    if sy > 0.0 {
        (ss / sy).clamp(MIN_STEP, MAX_STEP)
    } else {
        MAX_STEP
    }
}

/// Karcher mean by the gradient iteration
/// `X ← X^{1/2} exp(t·(1/m) Σ Log(X^{-1/2} X_i X^{-1/2})) X^{1/2}`,
/// started at the arithmetic mean. The first step is the classical full
/// fixed-point step; later steps use the Barzilai–Borwein length.
pub fn airm_mean(xs: &[Hpd], max_iter: usize, tol: f64) -> Result<MeanReport> {
    weighted_airm_mean(xs, None, None, max_iter, tol)
}

/// Weighted Karcher mean minimizing `Σ a_i d²(X, X_i)`, optionally started
/// from `start`.
pub fn weighted_airm_mean(
    xs: &[Hpd],
    weights: Option<&[f64]>,
    start: Option<&Hpd>,
    max_iter: usize,
    tol: f64,
) -> Result<MeanReport> {
    check_set(xs)?;
    if let Some(ws) = weights {
        if ws.len() != xs.len() {
            return Err(Error::LengthMismatch(ws.len(), xs.len()));
        }
    }
    let mut x = match (start, weights) {
        (Some(s), _) => s.clone(),
        (None, None) => arithmetic_mean(xs)?,
        (None, Some(ws)) => {
            let items: Vec<(&CMatrix, f64)> = xs.iter().map(|x| x.matrix()).zip(ws.iter().copied()).collect();
            Hpd::from_hermitian(weighted_average(&items), crate::hpd::PD_TOL)?
        }
    };
    let mut step = 1.0;
    let mut previous: Option<(Hermitian, f64)> = None;
    for iteration in 1..=max_iter.max(1) {
        let (m, residual) = karcher_step(&x, xs, weights)?;
        if residual <= tol {
            return Ok(MeanReport {
                mean: x,
                iterations: iteration,
                gradient_norm: residual,
            });
        }
        if iteration == max_iter.max(1) {
            return Err(Error::MaxIterExceeded {
                iterations: iteration,
                residual,
                last: Box::new(MeanReport {
                    mean: x,
                    iterations: iteration,
                    gradient_norm: residual,
                }),
            });
        }
        if let Some((prev_m, prev_step)) = &previous {
            step = barzilai_borwein_step(prev_m, &m, *prev_step);
        }
        let s = x.sqrt();
        let e = matrix_exp(&m.scale(step))?;
        x = Hpd::new(s.matrix() * e.matrix() * s.matrix())?;
        previous = Some((m, step));
    }
    unreachable!("loop returns on its last iteration")
}

/// The mean of `xs` for any kind. SCM here is the arithmetic mean of the
/// given matrices; use [`scm`] for raw snapshots.
pub fn mean(kind: MeanKind, xs: &[Hpd]) -> Result<MeanReport> {
    match kind {
        MeanKind::Airm => airm_mean(xs, AIRM_MAX_ITER, AIRM_TOL),
        MeanKind::ScmArithmetic => {
            let mean = arithmetic_mean(xs)?;
            let residual = mean_objective_gradient(kind, &mean, xs)?.norm();
            Ok(MeanReport {
                mean,
                iterations: 1,
                gradient_norm: residual,
            })
        }
        _ => tbd_mean(kind.total_bregman().expect("TBD kind"), xs),
    }
}

/// Sample covariance `(1/K) Σ x_k x_k^H`. Positive semidefinite; positive
/// definite only for `K ≥ N` generic samples.
pub fn scm(samples: &[CVector]) -> Result<Hermitian> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch(n, bad.len()));
    }
    let outer: Vec<CMatrix> = samples.iter().map(|x| x * x.adjoint()).collect();
    let total = pairwise_sum_matrices(&outer).expect("nonempty");
    Ok(Hermitian::from_hermitian_part(&total.scale(1.0 / samples.len() as f64)))
}

/// The objective each mean minimizes, evaluated at `x`:
/// `(1/m) Σ δ_F(X, X_i)` for the TBD kinds, `(1/m) Σ d²(X, X_i)` for AIRM
/// and `(1/m) Σ ‖X − X_i‖²` for the arithmetic mean.
pub fn mean_objective(kind: MeanKind, x: &Hpd, xs: &[Hpd]) -> Result<f64> {
    check_set(xs)?;
    let terms: Vec<f64> = match kind {
        MeanKind::Airm => xs
            .iter()
            .map(|xi| dissimilarity(DivergenceKind::Airm, x, xi).map(|d| d * d))
            .collect::<Result<_>>()?,
        MeanKind::ScmArithmetic => xs.iter().map(|xi| (x.matrix() - xi.matrix()).norm_squared()).collect(),
        _ => {
            let k = kind.total_bregman().expect("TBD kind");
            xs.iter().map(|xi| dissimilarity(k, x, xi)).collect::<Result<_>>()?
        }
    };
    Ok(pairwise_sum(&terms) / xs.len() as f64)
}

/// Gradient of [`mean_objective`]. For AIRM this is the Hermitian form
/// `(2/m) Σ X^{1/2} Log(X^{1/2} X_i⁻¹ X^{1/2}) X^{1/2}` of `(2/m) Σ X Log(X_i⁻¹ X)`.
pub fn mean_objective_gradient(kind: MeanKind, x: &Hpd, xs: &[Hpd]) -> Result<Hermitian> {
    check_set(xs)?;
    if x.dim() != xs[0].dim() {
        return Err(Error::DimensionMismatch(x.dim(), xs[0].dim()));
    }
    let m = xs.len() as f64;
    match kind {
        MeanKind::Airm => {
            let s = x.sqrt();
            let terms: Vec<CMatrix> = xs
                .iter()
                .map(|xi| {
                    let c = Hpd::new(s.matrix() * xi.inverse().matrix() * s.matrix())?;
                    Ok(s.matrix() * c.log().matrix() * s.matrix())
                })
                .collect::<Result<_>>()?;
            let total = pairwise_sum_matrices(&terms).expect("nonempty");
            Ok(Hermitian::from_hermitian_part(&total.scale(2.0 / m)))
        }
        MeanKind::ScmArithmetic => {
            let terms: Vec<CMatrix> = xs.iter().map(|xi| x.matrix() - xi.matrix()).collect();
            let total = pairwise_sum_matrices(&terms).expect("nonempty");
            Ok(Hermitian::from_hermitian_part(&total.scale(2.0 / m)))
        }
        _ => {
            let k = kind.total_bregman().expect("TBD kind");
            let (grads, weights) = gradients_and_weights(k, xs)?;
            tbd_objective_gradient_from(k, x, &grads, &weights)
        }
    }
}
