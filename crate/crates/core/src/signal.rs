//! Data generation: steering vectors, clutter covariance, Gaussian and
//! compound-Gaussian snapshots, target and interference injection, and the
//! two HPD feature matrices built from a single snapshot.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpd::{CMatrix, CVector, Hermitian, Hpd, PD_TOL};
use crate::random::complex_normal_vector;

/// One range cell's returns across the N channels.
pub type Snapshot = CVector;

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringSpec {
    pub n: usize,
    /// Normalized Doppler frequency in cycles per sample.
    pub doppler: f64,
}

impl SteeringSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("steering dimension {} < 2", self.n)));
        }
        if !(-0.5..=0.5).contains(&self.doppler) {
            return Err(Error::InvalidParameter(format!(
                "normalized Doppler {} outside [-0.5, 0.5]",
                self.doppler
            )));
        }
        Ok(())
    }
}

/// Unit-norm steering vector with entries `exp(−i2πf k)/√N`.
pub fn steering_vector(spec: SteeringSpec) -> Result<Snapshot> {
    spec.validate()?;
    let norm = 1.0 / (spec.n as f64).sqrt();
    Ok(Snapshot::from_fn(spec.n, |k, _| {
        Complex64::from_polar(norm, -2.0 * PI * spec.doppler * k as f64)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterCovarianceSpec {
    pub n: usize,
    /// One-lag correlation coefficient in [0, 1).
    pub rho: f64,
    /// Clutter-to-noise power ratio in dB.
    pub cnr_db: f64,
    /// Clutter normalized Doppler frequency.
    pub doppler: f64,
}

/// `Σ(i,k) = σ² ρ^{|i−k|} e^{i2πf(i−k)} + δ_ik` with `σ² = 10^{cnr/10}`.
pub fn clutter_covariance(spec: ClutterCovarianceSpec) -> Result<Hpd> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("clutter dimension 0".into()));
    }
    if !(0.0..1.0).contains(&spec.rho) {
        return Err(Error::InvalidParameter(format!("correlation {} outside [0, 1)", spec.rho)));
    }
    let power = db_to_linear(spec.cnr_db);
    let m = CMatrix::from_fn(spec.n, spec.n, |i, k| {
        let lag = i as f64 - k as f64;
        let mut v = Complex64::from_polar(power * spec.rho.powf(lag.abs()), 2.0 * PI * spec.doppler * lag);
        if i == k {
            v += 1.0;
        }
        v
    });
    let h = Hermitian::from_hermitian_part(&m);
    let sigma = Hpd::from_hermitian(h, PD_TOL);
    debug_assert!(sigma.is_ok(), "Kac–Murdock–Szegő plus identity is positive definite");
    sigma
}

/// Gamma texture with shape `v` and scale `s` (mean `v·s`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub scale: f64,
    pub shape: f64,
}

impl TextureSpec {
    pub fn mean(&self) -> f64 {
        self.scale * self.shape
    }

    fn distribution(&self) -> Result<Gamma<f64>> {
        if !(self.scale > 0.0 && self.shape > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "texture scale {} and shape {} must be positive",
                self.scale, self.shape
            )));
        }
        Gamma::new(self.shape, self.scale).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Draws clutter snapshots `√τ Σ^{1/2} z`; `τ = 1` without texture.
#[derive(Clone, Debug)]
pub struct ClutterSampler {
    coloring: CMatrix,
    texture: Option<Gamma<f64>>,
}

impl ClutterSampler {
    pub fn new(sigma: &Hpd, texture: Option<TextureSpec>) -> Result<Self> {
        Ok(Self {
            coloring: sigma.sqrt().into_matrix(),
            texture: texture.map(|t| t.distribution()).transpose()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.coloring.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Snapshot {
        let tau = self.texture.as_ref().map_or(1.0, |g| g.sample(rng));
        let z = complex_normal_vector(rng, self.dim());
        (&self.coloring * z).scale(tau.sqrt())
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Snapshot> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

pub fn sample_clutter<R: Rng + ?Sized>(sigma: &Hpd, texture: Option<TextureSpec>, rng: &mut R) -> Result<Snapshot> {
    Ok(ClutterSampler::new(sigma, texture)?.sample(rng))
}

/// Amplitude `|α|` giving `|α|² p^H R⁻¹ p = 10^{ratio_db/10}`; zero for −∞ dB.
pub fn amplitude_for_ratio(p: &Snapshot, ratio_db: f64, r: &Hpd) -> Result<f64> {
    if p.len() != r.dim() {
        return Err(Error::DimensionMismatch(p.len(), r.dim()));
    }
    if ratio_db == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if !ratio_db.is_finite() {
        return Err(Error::NonFinite(ratio_db));
    }
    let gain = r.inv_quadratic(p, p).re;
    Ok((db_to_linear(ratio_db) / gain).sqrt())
}

/// `c + α p` with the given `|α|` and a uniformly drawn phase. A zero
/// amplitude returns `c` without consuming randomness.
pub fn add_with_random_phase<R: Rng + ?Sized>(c: &Snapshot, p: &Snapshot, amplitude: f64, rng: &mut R) -> Snapshot {
    if amplitude == 0.0 {
        return c.clone();
    }
    let phase = rng.random_range(0.0..2.0 * PI);
    c + p * Complex64::from_polar(amplitude, phase)
}

/// Injects `αp` into `c` at the requested signal-to-clutter ratio relative
/// to `R`.
pub fn inject_target<R: Rng + ?Sized>(
    c: &Snapshot,
    p: &Snapshot,
    scr_db: f64,
    r: &Hpd,
    rng: &mut R,
) -> Result<Snapshot> {
    if c.len() != p.len() {
        return Err(Error::LengthMismatch(c.len(), p.len()));
    }
    let amplitude = amplitude_for_ratio(p, scr_db, r)?;
    Ok(add_with_random_phase(c, p, amplitude, rng))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSpec {
    pub count: usize,
    pub doppler: f64,
    pub icr_db: f64,
    /// 1-based secondary cells receiving an interferer; defaults to the first `count`.
    pub placement: Option<Vec<usize>>,
}

impl InterferenceSpec {
    /// Zero-based indices of the contaminated secondary cells. Explicit
    /// placements are 1-based cell numbers in `1..=secondary`.
    pub fn cells(&self, secondary: usize) -> Result<Vec<usize>> {
        if self.count > secondary {
            return Err(Error::InvalidParameter(format!(
                "{} interferers exceed {} secondary cells",
                self.count, secondary
            )));
        }
        let Some(placement) = &self.placement else {
            return Ok((0..self.count).collect());
        };
        if placement.len() != self.count {
            return Err(Error::InvalidParameter(format!(
                "interference placement lists {} cells for count {}",
                placement.len(),
                self.count
            )));
        }
        let mut sorted = placement.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != placement.len() || placement.iter().any(|&c| c == 0 || c > secondary) {
            return Err(Error::InvalidParameter(format!(
                "interference cells {placement:?} must be distinct and within 1..={secondary}"
            )));
        }
        Ok(placement.iter().map(|c| c - 1).collect())
    }
}

/// Biased autocorrelation estimate `r̃_l = (1/N) Σ_{i=0}^{N−1−l} x_i conj(x_{i+l})`.
pub fn autocorrelation(x: &Snapshot) -> Result<CVector> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("snapshot length {n} < 2")));
    }
    if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite(f64::NAN));
    }
    if x.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::DegenerateSample);
    }
    let inv = 1.0 / n as f64;
    Ok(CVector::from_fn(n, |l, _| {
        (0..n - l).map(|i| x[i] * x[i + l].conj()).sum::<Complex64>() * inv
    }))
}

/// Hermitian Toeplitz matrix with first row `r`, i.e. entry `(j, k)` is
/// `r[k − j]` above the diagonal and `conj(r[j − k])` below it. With `r`
/// the autocorrelation `r_l ≈ E[x_i conj(x_{i+l})]` this estimates
/// `E[x x^H]`.
pub fn hermitian_toeplitz(r: &CVector) -> CMatrix {
    let n = r.len();
    CMatrix::from_fn(n, n, |j, k| if k >= j { r[k - j] } else { r[j - k].conj() })
}

/// Loading added when round-off pushes the Toeplitz feature off the cone,
/// relative to its trace.
pub const TOEPLITZ_SAFEGUARD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Feature {
    pub matrix: Hpd,
    /// Whether the positive-definiteness safeguard was applied.
    pub regularized: bool,
}

/// Toeplitz feature matrix built from the biased autocorrelation of `x`.
pub fn toeplitz_feature(x: &Snapshot) -> Result<Hpd> {
    Ok(toeplitz_feature_with_report(x)?.matrix)
}

pub fn toeplitz_feature_with_report(x: &Snapshot) -> Result<Feature> {
    let r = autocorrelation(x)?;
    let m = Hermitian::from_hermitian_part(&hermitian_toeplitz(&r));
    match Hpd::from_hermitian(m.clone(), PD_TOL) {
        Ok(matrix) => Ok(Feature {
            matrix,
            regularized: false,
        }),
        Err(Error::NotPositiveDefinite { .. }) => {
            let n = m.dim();
            let loading = TOEPLITZ_SAFEGUARD * m.trace();
            let loaded = m.matrix() + CMatrix::identity(n, n).scale(loading);
            Ok(Feature {
                matrix: Hpd::from_hermitian(Hermitian::from_hermitian_part(&loaded), PD_TOL)?,
                regularized: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Diagonal-loading feature `r̃ r̃^H + ‖r̃‖² I`.
pub fn diagonal_loading_feature(x: &Snapshot) -> Result<Hpd> {
    let r = autocorrelation(x)?;
    let n = r.len();
    let energy = r.norm_squared();
    let m = &r * r.adjoint() + CMatrix::identity(n, n).scale(energy);
    Hpd::from_hermitian(Hermitian::from_hermitian_part(&m), PD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::trial_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_examples() {
        let p = steering_vector(SteeringSpec { n: 4, doppler: 0.0 }).unwrap();
        assert!(p.iter().all(|v| (*v - c(0.5, 0.0)).norm() < 1e-15));
        let p = steering_vector(SteeringSpec { n: 2, doppler: 0.25 }).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((p[1] - c(0.0, -s)).norm() < 1e-15);
        assert!(steering_vector(SteeringSpec { n: 1, doppler: 0.0 }).is_err());
        assert!(steering_vector(SteeringSpec { n: 4, doppler: 0.7 }).is_err());
    }

    #[test]
    fn covariance_examples() {
        let spec = ClutterCovarianceSpec {
            n: 8,
            rho: 0.9,
            cnr_db: 20.0,
            doppler: 0.1,
        };
        let sigma = clutter_covariance(spec).unwrap();
        let m = sigma.matrix();
        for i in 0..8 {
            assert!((m[(i, i)] - c(101.0, 0.0)).norm() < 1e-12);
        }
        assert!((m[(0, 1)].norm() - 90.0).abs() < 1e-12);
        for i in 0..8 {
            for k in 0..8 {
                assert!((m[(i, k)] - m[(k, i)].conj()).norm() < 1e-12);
                if i > 0 && k > 0 {
                    assert!((m[(i, k)] - m[(i - 1, k - 1)]).norm() < 1e-12);
                }
            }
        }
        let white = clutter_covariance(ClutterCovarianceSpec { rho: 0.0, ..spec }).unwrap();
        assert!((white.matrix() - CMatrix::identity(8, 8).scale(101.0)).norm() < 1e-12);
        assert!(clutter_covariance(ClutterCovarianceSpec { rho: 1.0, ..spec }).is_err());
    }

    #[test]
    fn toeplitz_examples() {
        let x = Snapshot::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let f = toeplitz_feature(&x).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        assert!((f.matrix() - expected).norm() < 1e-15);
        assert!((f.eigenvalues()[0] - 0.5).abs() < 1e-14);
        assert!((f.eigenvalues()[1] - 1.5).abs() < 1e-14);

        let mut e = Snapshot::zeros(5);
        e[0] = c(1.0, 0.0);
        let f = toeplitz_feature(&e).unwrap();
        assert!((f.matrix() - CMatrix::identity(5, 5).scale(0.2)).norm() < 1e-15);

        assert!(matches!(toeplitz_feature(&Snapshot::zeros(4)), Err(Error::DegenerateSample)));
        assert!(matches!(diagonal_loading_feature(&Snapshot::zeros(4)), Err(Error::DegenerateSample)));
    }

    #[test]
    fn lag_layout_estimates_outer_product() {
        let x = Snapshot::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.3), c(0.2, -1.0)]);
        let r = autocorrelation(&x).unwrap();
        let f = toeplitz_feature(&x).unwrap();
        for l in 0..3 {
            assert!((f.matrix()[(0, l)] - r[l]).norm() < 1e-15);
            assert!((f.matrix()[(l, 0)] - r[l].conj()).norm() < 1e-15);
        }
        let direct = (x[0] * x[1].conj() + x[1] * x[2].conj()) / 3.0;
        assert!((r[1] - direct).norm() < 1e-15);
    }

    #[test]
    fn loading_example() {
        // a snapshot whose autocorrelation is [1, 0]
        let x = Snapshot::from_vec(vec![c(2f64.sqrt(), 0.0), c(0.0, 0.0)]);
        let r = autocorrelation(&x).unwrap();
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-15 && r[1].norm() == 0.0);
        let f = diagonal_loading_feature(&x).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((f.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn injection() {
        let mut rng = trial_rng(0, 0, 0);
        let p = steering_vector(SteeringSpec { n: 4, doppler: 0.1 }).unwrap();
        let cl = Snapshot::from_element(4, c(0.3, -0.1));
        let r = Hpd::identity(4);
        let out = inject_target(&cl, &p, f64::NEG_INFINITY, &r, &mut rng).unwrap();
        assert_eq!(out, cl);
        assert!((amplitude_for_ratio(&p, 0.0, &r).unwrap() - 1.0).abs() < 1e-14);
        let sigma = clutter_covariance(ClutterCovarianceSpec {
            n: 4,
            rho: 0.5,
            cnr_db: 10.0,
            doppler: 0.0,
        })
        .unwrap();
        let amp = amplitude_for_ratio(&p, 17.0, &sigma).unwrap();
        let scr = 10.0 * (amp * amp * sigma.inv_quadratic(&p, &p).re).log10();
        assert!((scr - 17.0).abs() < 1e-10);
        let out = inject_target(&cl, &p, 17.0, &sigma, &mut rng).unwrap();
        let alpha = (out[0] - cl[0]) / p[0];
        assert!((alpha.norm() - amp).abs() < 1e-12);
    }

    #[test]
    fn interference_cells() {
        let spec = InterferenceSpec {
            count: 2,
            doppler: 0.22,
            icr_db: 20.0,
            placement: None,
        };
        assert_eq!(spec.cells(8).unwrap(), vec![0, 1]);
        assert!(spec.cells(1).is_err());
        let dup = InterferenceSpec {
            placement: Some(vec![3, 3]),
            ..spec.clone()
        };
        assert!(dup.cells(8).is_err());
        let explicit = InterferenceSpec {
            placement: Some(vec![3, 8]),
            ..spec.clone()
        };
        assert_eq!(explicit.cells(8).unwrap(), vec![2, 7]);
        assert!(explicit.cells(7).is_err());
        let zero = InterferenceSpec {
            placement: Some(vec![0, 1]),
            ..spec
        };
        assert!(zero.cells(8).is_err());
    }

    #[test]
    fn deterministic_stream_gives_whitened_draw() {
        let sampler = ClutterSampler::new(&Hpd::identity(3), None).unwrap();
        let x = sampler.sample(&mut trial_rng(4, 4, 4));
        let z = complex_normal_vector(&mut trial_rng(4, 4, 4), 3);
        assert!((x - z).norm() < 1e-15);
    }
}
