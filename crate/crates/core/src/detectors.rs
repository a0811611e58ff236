//! Test statistics and the threshold decision.

use serde::{Deserialize, Serialize};

use crate::divergence::{airm_distance, tbd, DivergenceKind};
use crate::error::{Error, Result};
use crate::hpd::{CMatrix, Hermitian, Hpd, PD_TOL};
use crate::means::{scm, MeanKind};
use crate::signal::{diagonal_loading_feature, toeplitz_feature_with_report, Feature, Snapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Matched filter with the true clutter covariance (benchmark).
    Mf,
    Amf,
    AirmMig,
    TslMig,
    TldMig,
    TvnMig,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        Self::Mf,
        Self::Amf,
        Self::AirmMig,
        Self::TslMig,
        Self::TldMig,
        Self::TvnMig,
    ];
    pub const MIG: [DetectorKind; 4] = [Self::AirmMig, Self::TslMig, Self::TldMig, Self::TvnMig];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mf => "MF",
            Self::Amf => "AMF",
            Self::AirmMig => "AIRM-MIG",
            Self::TslMig => "TSL-MIG",
            Self::TldMig => "TLD-MIG",
            Self::TvnMig => "TVN-MIG",
        }
    }

    pub fn is_mig(self) -> bool {
        self.divergence().is_some()
    }

    /// Dissimilarity used by a MIG detector.
    pub fn divergence(self) -> Option<DivergenceKind> {
        match self {
            Self::AirmMig => Some(DivergenceKind::Airm),
            Self::TslMig => Some(DivergenceKind::Tsl),
            Self::TldMig => Some(DivergenceKind::Tld),
            Self::TvnMig => Some(DivergenceKind::Tvn),
            Self::Mf | Self::Amf => None,
        }
    }

    /// Mean used to summarize the secondary features of a MIG detector.
    pub fn mean_kind(self) -> Option<MeanKind> {
        match self {
            Self::AirmMig => Some(MeanKind::Airm),
            Self::TslMig => Some(MeanKind::Tsl),
            Self::TldMig => Some(MeanKind::Tld),
            Self::TvnMig => Some(MeanKind::Tvn),
            Self::Mf | Self::Amf => None,
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown detector {s:?}")))
    }
}

/// How a single snapshot is turned into an HPD matrix for the MIG detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureStructure {
    Toeplitz,
    DiagonalLoading,
}

impl FeatureStructure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Toeplitz => "toeplitz",
            Self::DiagonalLoading => "diagonal-loading",
        }
    }

    pub fn feature(self, x: &Snapshot) -> Result<Feature> {
        match self {
            Self::Toeplitz => toeplitz_feature_with_report(x),
            Self::DiagonalLoading => Ok(Feature {
                matrix: diagonal_loading_feature(x)?,
                regularized: false,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub declared: bool,
}

/// `|x^H R⁻¹ p|² / (p^H R⁻¹ p)`.
pub fn amf_statistic(x: &Snapshot, r: &Hpd, p: &Snapshot) -> Result<f64> {
    if x.len() != r.dim() {
        return Err(Error::DimensionMismatch(x.len(), r.dim()));
    }
    if p.len() != r.dim() {
        return Err(Error::DimensionMismatch(p.len(), r.dim()));
    }
    let num = r.inv_quadratic(x, p).norm_sqr();
    let den = r.inv_quadratic(p, p).re;
    let t = num / den;
    if !t.is_finite() {
        return Err(Error::NonFinite(t));
    }
    Ok(t)
}

/// MIG statistic: the AIRM distance, or the total Bregman divergence with
/// the mean in the second slot.
pub fn mig_statistic(kind: DivergenceKind, x_cut: &Hpd, r_mean: &Hpd) -> Result<f64> {
    match kind {
        DivergenceKind::Airm => airm_distance(x_cut, r_mean),
        _ => tbd(kind, x_cut, r_mean),
    }
}

/// Declares a target iff `statistic > threshold`; ties go to H₀.
pub fn decide(statistic: f64, threshold: f64) -> Result<DetectionDecision> {
    if !statistic.is_finite() {
        return Err(Error::NonFinite(statistic));
    }
    if !threshold.is_finite() {
        return Err(Error::NonFinite(threshold));
    }
    Ok(DetectionDecision {
        statistic,
        threshold,
        declared: statistic > threshold,
    })
}

/// Condition number above which the sample covariance is loaded.
pub const SCM_MAX_CONDITION: f64 = 1e12;
/// Loading `1e-8 · tr/N` added to an ill-conditioned sample covariance.
pub const SCM_LOADING: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ScmEstimate {
    pub matrix: Hpd,
    pub regularized: bool,
}

/// Sample covariance of the secondary data, diagonally loaded when it is
/// singular or its condition number exceeds [`SCM_MAX_CONDITION`].
pub fn regularized_scm(samples: &[Snapshot]) -> Result<ScmEstimate> {
    let s = scm(samples)?;
    if let Ok(matrix) = Hpd::from_hermitian(s.clone(), PD_TOL) {
        if matrix.condition_number() <= SCM_MAX_CONDITION {
            return Ok(ScmEstimate {
                matrix,
                regularized: false,
            });
        }
    }
    let n = s.dim();
    let trace = s.trace();
    if !(trace > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let loaded = s.matrix() + CMatrix::identity(n, n).scale(SCM_LOADING * trace / n as f64);
    Ok(ScmEstimate {
        matrix: Hpd::from_hermitian(Hermitian::from_hermitian_part(&loaded), PD_TOL)?,
        regularized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{steering_vector, SteeringSpec};
    use num_complex::Complex64;

    #[test]
    fn amf_examples() {
        let p = steering_vector(SteeringSpec { n: 4, doppler: 0.2 }).unwrap();
        let r = Hpd::identity(4);
        assert!((amf_statistic(&p, &r, &p).unwrap() - 1.0).abs() < 1e-14);
        let q = steering_vector(SteeringSpec { n: 4, doppler: 0.45 }).unwrap();
        let orth = &q - &p * p.dotc(&q);
        assert!(amf_statistic(&orth, &r, &p).unwrap() < 1e-28);
        let c = Complex64::new(1.5, -2.0);
        let t = amf_statistic(&q, &r, &p).unwrap();
        let tc = amf_statistic(&q.scale(1.0).map(|v| v * c), &r, &p).unwrap();
        assert!((tc - c.norm_sqr() * t).abs() < 1e-12);
    }

    #[test]
    fn mig_examples() {
        let one = Hpd::from_real_diagonal(&[1.0]).unwrap();
        let e = Hpd::from_real_diagonal(&[std::f64::consts::E]).unwrap();
        let two = Hpd::from_real_diagonal(&[2.0]).unwrap();
        assert!((mig_statistic(DivergenceKind::Airm, &one, &e).unwrap() - 1.0).abs() < 1e-14);
        let t = mig_statistic(DivergenceKind::Tld, &one, &two).unwrap();
        assert!((t - (2f64.ln() - 0.5) / 1.25f64.sqrt()).abs() < 1e-15);
        for kind in DivergenceKind::ALL {
            assert!(mig_statistic(kind, &two, &two).unwrap() < 1e-14);
        }
    }

    #[test]
    fn decision_rule() {
        assert!(decide(2.0, 1.0).unwrap().declared);
        assert!(!decide(1.0, 1.0).unwrap().declared);
        assert!(!decide(0.0, 0.5).unwrap().declared);
        assert!(matches!(decide(f64::NAN, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn detector_names_round_trip() {
        for k in DetectorKind::ALL {
            assert_eq!(k.name().parse::<DetectorKind>().unwrap(), k);
        }
        assert!("nope".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn rank_deficient_scm_is_loaded() {
        let x = Snapshot::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let est = regularized_scm(&[x]).unwrap();
        assert!(est.regularized);
        assert!(est.matrix.eigenvalues()[0] > 0.0);
    }
}
