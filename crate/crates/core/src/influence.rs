//! First-order sensitivity of the means to ε-weighted outliers.
//!
//! Adding outliers `P_1..P_n` with total weight ε to inliers `X_1..X_m`
//! moves the mean to `X̂ = X̄ + εH + O(ε²)`. The closed-form `H` below comes
//! from differentiating the stationary condition of the ε-weighted
//! objective at ε = 0; [`influence_fd_oracle`] recomputes it by actually
//! solving the contaminated problem.

use crate::divergence::{potential_gradient, slope_weight, DivergenceKind};
use crate::error::{Error, Result};
use crate::hpd::{CMatrix, Hermitian, Hpd};
use crate::means::{
    gradients_and_weights, inverse_gradient, mean, weighted_airm_mean, weighted_average, MeanKind,
};
use crate::sum::{pairwise_sum, pairwise_sum_matrices};

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const MAX_EPSILON: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct ContaminationSetup {
    pub base: Vec<Hpd>,
    pub outliers: Vec<Hpd>,
    pub epsilon: f64,
}

impl ContaminationSetup {
    pub fn new(base: Vec<Hpd>, outliers: Vec<Hpd>, epsilon: f64) -> Result<Self> {
        if base.is_empty() || outliers.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
            return Err(Error::InvalidParameter(format!(
                "contamination weight {epsilon} outside (0, {MAX_EPSILON}]"
            )));
        }
        let n = base[0].dim();
        if let Some(bad) = base.iter().chain(&outliers).find(|x| x.dim() != n) {
            return Err(Error::DimensionMismatch(n, bad.dim()));
        }
        Ok(Self { base, outliers, epsilon })
    }

    pub fn with_default_epsilon(base: Vec<Hpd>, outliers: Vec<Hpd>) -> Result<Self> {
        Self::new(base, outliers, DEFAULT_EPSILON)
    }
}

fn sum_hermitian(terms: &[CMatrix], scale: f64) -> Hermitian {
    let total = pairwise_sum_matrices(terms).expect("nonempty");
    Hermitian::from_hermitian_part(&total.scale(scale))
}

/// Closed-form influence direction `H` at the uncontaminated mean.
pub fn influence_matrix(kind: MeanKind, setup: &ContaminationSetup) -> Result<Hermitian> {
    let center = mean(kind, &setup.base)?.mean;
    influence_matrix_at(kind, &center, setup)
}

/// [`influence_matrix`] with the uncontaminated mean supplied by the caller.
pub fn influence_matrix_at(kind: MeanKind, center: &Hpd, setup: &ContaminationSetup) -> Result<Hermitian> {
    let m = setup.base.len() as f64;
    let n = setup.outliers.len() as f64;
    match kind {
        MeanKind::ScmArithmetic => {
            let terms: Vec<CMatrix> = setup.outliers.iter().map(|p| p.matrix() - center.matrix()).collect();
            Ok(sum_hermitian(&terms, 1.0 / n))
        }
        MeanKind::Airm => {
            // X̄ Log(P⁻¹X̄) and Log(X̄P⁻¹) X̄ both equal X̄^{1/2} Log(X̄^{1/2}P⁻¹X̄^{1/2}) X̄^{1/2}
            let s = center.sqrt();
            let terms: Vec<CMatrix> = setup
                .outliers
                .iter()
                .map(|p| {
                    let inner = Hpd::new(s.matrix() * p.inverse().matrix() * s.matrix())?;
                    Ok(s.matrix() * inner.log().matrix() * s.matrix())
                })
                .collect::<Result<_>>()?;
            Ok(sum_hermitian(&terms, -1.0 / n))
        }
        _ => {
            let div = kind.divergence().expect("TBD kind");
            let base_weights: Vec<f64> = setup
                .base
                .iter()
                .map(|x| slope_weight(div, x).map(|w| 1.0 / w))
                .collect::<Result<_>>()?;
            let prefactor = m / (n * pairwise_sum(&base_weights));
            let grad_center = potential_gradient(div, center)?;
            let terms: Vec<CMatrix> = setup
                .outliers
                .iter()
                .map(|p| {
                    let v = slope_weight(div, p)?;
                    let diff = grad_center.matrix() - potential_gradient(div, p)?.matrix();
                    Ok(diff.scale(1.0 / v))
                })
                .collect::<Result<_>>()?;
            let d = sum_hermitian(&terms, prefactor);
            // d = −(d/dε)∇F(X̂); map back through the derivative of ∇F
            let h = match div {
                DivergenceKind::Tsl => d.matrix().scale(-1.0),
                // (d/dε)(−X̂⁻¹) = X̄⁻¹HX̄⁻¹
                DivergenceKind::Tld => -(center.matrix() * d.matrix() * center.matrix()),
                // trace-level choice: tr(X̄⁻¹H) = −tr(d)
                DivergenceKind::Tvn => {
                    let s = center.sqrt();
                    -(s.matrix() * d.matrix() * s.matrix())
                }
                DivergenceKind::Airm => unreachable!(),
            };
            Ok(Hermitian::from_hermitian_part(&h))
        }
    }
}

/// Influence value `h = ‖H‖`.
pub fn influence_value(kind: MeanKind, setup: &ContaminationSetup) -> Result<f64> {
    Ok(influence_matrix(kind, setup)?.norm())
}

/// Tolerance for the weighted Karcher solve inside the oracle.
const ORACLE_KARCHER_TOL: f64 = 1e-13;
const ORACLE_KARCHER_MAX_ITER: usize = 1000;

/// `(X̂ − X̄)/ε` where `X̂` minimizes the ε-weighted objective
/// `((1−ε)/m) Σ δ(X, X_i) + (ε/n) Σ δ(X, P_j)`.
pub fn influence_fd_oracle(kind: MeanKind, setup: &ContaminationSetup) -> Result<Hermitian> {
    let eps = setup.epsilon;
    let m = setup.base.len() as f64;
    let n = setup.outliers.len() as f64;
    let (center, contaminated) = match kind {
        MeanKind::ScmArithmetic => {
            let center = mean(kind, &setup.base)?.mean;
            let items: Vec<(&CMatrix, f64)> = setup
                .base
                .iter()
                .map(|x| (x.matrix(), (1.0 - eps) / m))
                .chain(setup.outliers.iter().map(|p| (p.matrix(), eps / n)))
                .collect();
            let contaminated = Hpd::from_hermitian(weighted_average(&items), crate::hpd::PD_TOL)?;
            (center, contaminated)
        }
        MeanKind::Airm => {
            let center = weighted_airm_mean(&setup.base, None, None, ORACLE_KARCHER_MAX_ITER, ORACLE_KARCHER_TOL)?.mean;
            let all: Vec<Hpd> = setup.base.iter().chain(&setup.outliers).cloned().collect();
            let weights: Vec<f64> = std::iter::repeat_n((1.0 - eps) / m, setup.base.len())
                .chain(std::iter::repeat_n(eps / n, setup.outliers.len()))
                .collect();
            let contaminated = weighted_airm_mean(
                &all,
                Some(&weights),
                Some(&center),
                ORACLE_KARCHER_MAX_ITER,
                ORACLE_KARCHER_TOL,
            )?
            .mean;
            (center, contaminated)
        }
        _ => {
            let div = kind.divergence().expect("TBD kind");
            let center = mean(kind, &setup.base)?.mean;
            let (gx, wx) = gradients_and_weights(div, &setup.base)?;
            let (gp, wp) = gradients_and_weights(div, &setup.outliers)?;
            let items: Vec<(&CMatrix, f64)> = gx
                .iter()
                .zip(&wx)
                .map(|(g, w)| (g.matrix(), (1.0 - eps) / (m * w)))
                .chain(gp.iter().zip(&wp).map(|(g, w)| (g.matrix(), eps / (n * w))))
                .collect();
            let contaminated = inverse_gradient(div, &weighted_average(&items))?;
            (center, contaminated)
        }
    };
    let diff = contaminated.matrix() - center.matrix();
    Ok(Hermitian::from_hermitian_part(&diff.scale(1.0 / eps)))
}

/// Outlier-independent bound `(‖∇F(X̄)‖ + 1) · m (Σ 1/w_i)⁻¹` on the
/// gradient-space influence of the TBD means.
pub fn influence_bound(kind: DivergenceKind, base: &[Hpd]) -> Result<f64> {
    if kind == DivergenceKind::Airm {
        return Err(Error::UnsupportedKind("the AIRM influence is unbounded"));
    }
    if base.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean_kind = match kind {
        DivergenceKind::Tsl => MeanKind::Tsl,
        DivergenceKind::Tld => MeanKind::Tld,
        _ => MeanKind::Tvn,
    };
    let center = mean(mean_kind, base)?.mean;
    let inv_weights: Vec<f64> = base
        .iter()
        .map(|x| slope_weight(kind, x).map(|w| 1.0 / w))
        .collect::<Result<_>>()?;
    let prefactor = base.len() as f64 / pairwise_sum(&inv_weights);
    let grad = potential_gradient(kind, &center)?.norm();
    Ok((grad + 1.0) * prefactor)
}

/// Factor relating the gradient-space bound to `‖H‖`: `‖X̄‖₂²` for TLD,
/// `‖X̄‖₂` for TVN (from the congruences in the closed forms), 1 for TSL.
pub fn conjugation_factor(kind: DivergenceKind, center: &Hpd) -> f64 {
    let top = *center.eigenvalues().last().expect("nonempty spectrum");
    match kind {
        DivergenceKind::Tld => top * top,
        DivergenceKind::Tvn => top,
        _ => 1.0,
    }
}
