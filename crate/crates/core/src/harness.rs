//! Monte Carlo experiments: CFAR threshold calibration, detection
//! probability sweeps, false-alarm validation, and the mean offset-error and
//! influence studies.
//!
//! Every trial draws from its own stream `trial_rng(master, experiment, i)`,
//! so results are a pure function of the configuration and master seed and
//! do not depend on the number of worker threads. Within a trial all
//! detectors see the same data (common random numbers).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{amf_statistic, mig_statistic, regularized_scm, DetectorKind, FeatureStructure};
use crate::error::{Error, Result};
use crate::hpd::{Hermitian, Hpd};
use crate::influence::{influence_matrix_at, ContaminationSetup, DEFAULT_EPSILON};
use crate::means::{mean, scm, MeanKind};
use crate::random::{experiment_seed, trial_rng};
use crate::signal::{
    add_with_random_phase, amplitude_for_ratio, clutter_covariance, steering_vector, toeplitz_feature,
    ClutterCovarianceSpec, ClutterSampler, InterferenceSpec, Snapshot, SteeringSpec, TextureSpec,
};

/// Experiment identifiers keying the per-trial random streams.
pub mod experiment {
    pub const CALIBRATION: u64 = 1;
    pub const DETECTION: u64 = 2;
    pub const CFAR_VALIDATION: u64 = 3;
    pub const OFFSET_ERROR: u64 = 4;
    pub const INFLUENCE: u64 = 5;
    pub const DIVERGENCE_TABLE: u64 = 6;
    pub const MEAN: u64 = 7;
}

/// Two-sided 95% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionScenario {
    pub n: usize,
    /// Number of secondary cells.
    pub k: usize,
    pub clutter: ClutterCovarianceSpec,
    pub texture: Option<TextureSpec>,
    pub steering: SteeringSpec,
    pub interference: Option<InterferenceSpec>,
    pub feature: FeatureStructure,
    pub detector: DetectorKind,
}

impl DetectionScenario {
    /// N = 8, ICR 20 dB, clutter Doppler 0.1, target Doppler 0.2,
    /// interferer Doppler 0.22 (two interferers), clutter one-lag
    /// correlation 0.9 at 20 dB clutter-to-noise ratio, Gaussian clutter.
    pub fn standard(k: usize, feature: FeatureStructure, detector: DetectorKind) -> Self {
        let n = 8;
        Self {
            n,
            k,
            clutter: ClutterCovarianceSpec {
                n,
                rho: 0.9,
                cnr_db: 20.0,
                doppler: 0.1,
            },
            texture: None,
            steering: SteeringSpec { n, doppler: 0.2 },
            interference: Some(InterferenceSpec {
                count: 2,
                doppler: 0.22,
                icr_db: 20.0,
                placement: None,
            }),
            feature,
            detector,
        }
    }

    /// Gamma texture with scale 1 and shape 3.
    pub fn standard_texture() -> TextureSpec {
        TextureSpec { scale: 1.0, shape: 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("at least one secondary cell is required".into()));
        }
        if self.clutter.n != self.n || self.steering.n != self.n {
            return Err(Error::InvalidParameter(format!(
                "clutter dimension {} and steering dimension {} must equal n = {}",
                self.clutter.n, self.steering.n, self.n
            )));
        }
        self.steering.validate()?;
        if let Some(i) = &self.interference {
            i.cells(self.k)?;
            SteeringSpec { n: self.n, doppler: i.doppler }.validate()?;
        }
        Ok(())
    }
}

/// Scenario quantities computed once and shared by all trials.
struct Environment {
    k: usize,
    sigma: Hpd,
    sampler: ClutterSampler,
    steering: Snapshot,
    /// Target amplitude at 0 dB SCR.
    unit_amplitude: f64,
    interference: Option<(Snapshot, f64, Vec<usize>)>,
    feature: FeatureStructure,
}

impl Environment {
    fn new(s: &DetectionScenario) -> Result<Self> {
        s.validate()?;
        let sigma = clutter_covariance(s.clutter)?;
        // SCR and ICR are measured against the clutter power E[τ]Σ.
        let texture_mean = s.texture.map_or(1.0, |t| t.mean());
        let reference = sigma.scale(texture_mean)?;
        let steering = steering_vector(s.steering)?;
        let unit_amplitude = amplitude_for_ratio(&steering, 0.0, &reference)?;
        let interference = match &s.interference {
            Some(spec) if spec.count > 0 => {
                let p = steering_vector(SteeringSpec {
                    n: s.n,
                    doppler: spec.doppler,
                })?;
                let amp = amplitude_for_ratio(&p, spec.icr_db, &reference)?;
                Some((p, amp, spec.cells(s.k)?))
            }
            _ => None,
        };
        Ok(Self {
            k: s.k,
            sampler: ClutterSampler::new(&sigma, s.texture)?,
            sigma,
            steering,
            unit_amplitude,
            interference,
            feature: s.feature,
        })
    }

    fn secondary_snapshots<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Snapshot> {
        (0..self.k)
            .map(|cell| {
                let c = self.sampler.sample(rng);
                match &self.interference {
                    Some((p, amp, cells)) if cells.contains(&cell) => add_with_random_phase(&c, p, *amp, rng),
                    _ => c,
                }
            })
            .collect()
    }
}

/// Per-trial estimates from the secondary data, one slot per detector.
pub struct SecondaryEstimate {
    detectors: Vec<DetectorKind>,
    references: Vec<Hpd>,
    feature_events: usize,
    scm_event: bool,
}

impl SecondaryEstimate {
    fn build(env: &Environment, detectors: &[DetectorKind], snapshots: &[Snapshot]) -> Result<Self> {
        let mut feature_events = 0;
        let features = if detectors.iter().any(|d| d.is_mig()) {
            snapshots
                .iter()
                .map(|x| {
                    let f = env.feature.feature(x)?;
                    feature_events += usize::from(f.regularized);
                    Ok(f.matrix)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let mut scm_event = false;
        let mut references = Vec::with_capacity(detectors.len());
        for d in detectors {
            let r = match d {
                DetectorKind::Mf => env.sigma.clone(),
                DetectorKind::Amf => {
                    let est = regularized_scm(snapshots)?;
                    scm_event |= est.regularized;
                    est.matrix
                }
                _ => mean(d.mean_kind().expect("MIG detector"), &features)?.mean,
            };
            references.push(r);
        }
        Ok(Self {
            detectors: detectors.to_vec(),
            references,
            feature_events,
            scm_event,
        })
    }

    /// The matrix a detector compares the cell under test against: the
    /// mean of the secondary features for MIG detectors, the (loaded)
    /// sample covariance for the AMF, the true covariance for the MF.
    pub fn reference(&self, detector: DetectorKind) -> Option<&Hpd> {
        self.detectors.iter().position(|d| *d == detector).map(|i| &self.references[i])
    }

    fn events(&self, detector: DetectorKind) -> usize {
        match detector {
            DetectorKind::Mf => 0,
            DetectorKind::Amf => usize::from(self.scm_event),
            _ => self.feature_events,
        }
    }
}

/// Statistics of every detector for one cell under test.
fn cut_statistics(
    env: &Environment,
    secondary: &SecondaryEstimate,
    x: &Snapshot,
    events: &mut [usize],
) -> Result<Vec<f64>> {
    let cut_feature = if secondary.detectors.iter().any(|d| d.is_mig()) {
        Some(env.feature.feature(x)?)
    } else {
        None
    };
    secondary
        .detectors
        .iter()
        .zip(&secondary.references)
        .enumerate()
        .map(|(i, (d, r))| {
            let t = match d.divergence() {
                None => amf_statistic(x, r, &env.steering)?,
                Some(kind) => {
                    let f = cut_feature.as_ref().expect("built for MIG detectors");
                    events[i] += usize::from(f.regularized);
                    mig_statistic(kind, &f.matrix, r)?
                }
            };
            if !t.is_finite() {
                return Err(Error::NonFinite(t));
            }
            Ok(t)
        })
        .collect()
}

struct TrialOutcome {
    /// `[scr][detector]`, a single row under H₀.
    statistics: Vec<Vec<f64>>,
    events: Vec<usize>,
}

/// One trial: K secondary snapshots, then the cell under test, then the
/// target phase. Under H₁ the same clutter and phase are reused for every
/// SCR in `scr_grid`.
fn run_trial<R: Rng + ?Sized>(
    env: &Environment,
    detectors: &[DetectorKind],
    scr_grid: Option<&[f64]>,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let snapshots = env.secondary_snapshots(rng);
    let secondary = SecondaryEstimate::build(env, detectors, &snapshots)?;
    let mut events: Vec<usize> = detectors.iter().map(|d| secondary.events(*d)).collect();
    let clutter = env.sampler.sample(rng);
    let phase = rng.random_range(0.0..2.0 * PI);
    let statistics = match scr_grid {
        None => vec![cut_statistics(env, &secondary, &clutter, &mut events)?],
        Some(grid) => grid
            .iter()
            .map(|&scr| {
                let amp = if scr == f64::NEG_INFINITY {
                    0.0
                } else {
                    env.unit_amplitude * 10f64.powf(scr / 20.0)
                };
                let x = &clutter + &env.steering * Complex64::from_polar(amp, phase);
                cut_statistics(env, &secondary, &x, &mut events)
            })
            .collect::<Result<_>>()?,
    };
    Ok(TrialOutcome { statistics, events })
}

/// Runs `f` on trials `0..n` in parallel and returns results in trial
/// order. The first failing trial (by index) is reported with its seed.
pub fn map_trials<T, F>(master_seed: u64, experiment: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha20Rng) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(master_seed, experiment, trial);
            f(trial, &mut rng).map_err(|source| Error::Trial {
                experiment,
                trial,
                seed: experiment_seed(master_seed, experiment),
                source: Box::new(source),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Statistic of the scenario's detector for one H₀ trial.
pub fn run_trial_h0<R: Rng + ?Sized>(scenario: &DetectionScenario, rng: &mut R) -> Result<f64> {
    let env = Environment::new(scenario)?;
    Ok(run_trial(&env, &[scenario.detector], None, rng)?.statistics[0][0])
}

/// Statistic of the scenario's detector for one H₁ trial at `scr_db`.
pub fn run_trial_h1<R: Rng + ?Sized>(scenario: &DetectionScenario, scr_db: f64, rng: &mut R) -> Result<f64> {
    let env = Environment::new(scenario)?;
    Ok(run_trial(&env, &[scenario.detector], Some(&[scr_db]), rng)?.statistics[0][0])
}

/// Secondary-data estimate of one trial, for inspecting or replacing the
/// cell under test.
pub fn secondary_estimate<R: Rng + ?Sized>(
    scenario: &DetectionScenario,
    detectors: &[DetectorKind],
    rng: &mut R,
) -> Result<SecondaryEstimate> {
    let env = Environment::new(scenario)?;
    let snapshots = env.secondary_snapshots(rng);
    SecondaryEstimate::build(&env, detectors, &snapshots)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub n_trials: usize,
    pub target_pfa: f64,
    pub empirical_pfa: f64,
    pub regularization_events: usize,
}

/// Index (1-based, from the top) of the order statistic used as threshold.
fn threshold_rank(n: usize, pfa: f64) -> Result<usize> {
    if !(pfa > 0.0 && pfa <= 1.0) {
        return Err(Error::InvalidParameter(format!("false-alarm probability {pfa} outside (0, 1]")));
    }
    let expected = n as f64 * pfa;
    if expected < 1.0 {
        return Err(Error::InsufficientTrials { trials: n, pfa });
    }
    // tolerate representation error in n·pfa (e.g. 1000 · 0.01)
    Ok(((expected - 1e-9).ceil() as usize).clamp(1, n))
}

/// Threshold = the ⌈n·pfa⌉-th largest statistic, so that at most a
/// fraction `pfa` of the calibration statistics exceed it.
pub fn threshold_from_statistics(
    detector: DetectorKind,
    statistics: &[f64],
    pfa: f64,
) -> Result<ThresholdReport> {
    let n = statistics.len();
    let rank = threshold_rank(n, pfa)?;
    if let Some(bad) = statistics.iter().find(|t| !t.is_finite()) {
        return Err(Error::NonFinite(*bad));
    }
    let mut sorted = statistics.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[rank - 1];
    let exceed = sorted.iter().take_while(|t| **t > threshold).count();
    Ok(ThresholdReport {
        detector,
        threshold,
        n_trials: n,
        target_pfa: pfa,
        empirical_pfa: exceed as f64 / n as f64,
        regularization_events: 0,
    })
}

/// Calibrates the scenario's detector from `n_trials` H₀ trials.
pub fn calibrate_threshold(
    scenario: &DetectionScenario,
    pfa: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<ThresholdReport> {
    Ok(calibrate_thresholds(scenario, &[scenario.detector], pfa, n_trials, master_seed)?.remove(0))
}

/// Calibrates several detectors on the same H₀ trials.
pub fn calibrate_thresholds(
    scenario: &DetectionScenario,
    detectors: &[DetectorKind],
    pfa: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<ThresholdReport>> {
    threshold_rank(n_trials, pfa)?;
    let env = Environment::new(scenario)?;
    let outcomes = map_trials(master_seed, experiment::CALIBRATION, n_trials, |_, rng| {
        run_trial(&env, detectors, None, rng)
    })?;
    detectors
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let stats: Vec<f64> = outcomes.iter().map(|o| o.statistics[0][i]).collect();
            let mut report = threshold_from_statistics(*d, &stats, pfa)?;
            report.regularization_events = outcomes.iter().map(|o| o.events[i]).sum();
            Ok(report)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdRow {
    pub scr_db: f64,
    pub pd: f64,
    pub n_trials: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdCurve {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub rows: Vec<PdRow>,
    pub regularization_events: usize,
}

impl PdCurve {
    pub fn at(&self, scr_db: f64) -> Option<&PdRow> {
        self.rows.iter().find(|r| r.scr_db == scr_db)
    }
}

/// Wilson score interval for `successes` out of `n` at confidence `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

pub fn wilson_95(successes: usize, n: usize) -> (f64, f64) {
    wilson_interval(successes, n, Z_95)
}

/// Probability of detection of the scenario's detector at each SCR.
pub fn estimate_pd(
    scenario: &DetectionScenario,
    threshold: f64,
    scr_grid: &[f64],
    n_trials: usize,
    master_seed: u64,
) -> Result<PdCurve> {
    Ok(estimate_pd_all(scenario, &[(scenario.detector, threshold)], scr_grid, n_trials, master_seed)?.remove(0))
}

/// Pd curves for several detectors on shared H₁ trials.
pub fn estimate_pd_all(
    scenario: &DetectionScenario,
    thresholds: &[(DetectorKind, f64)],
    scr_grid: &[f64],
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<PdCurve>> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("no detection trials requested".into()));
    }
    if let Some(bad) = scr_grid.iter().find(|s| s.is_nan() || **s == f64::INFINITY) {
        return Err(Error::NonFinite(*bad));
    }
    let mut grid = scr_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let env = Environment::new(scenario)?;
    let detectors: Vec<DetectorKind> = thresholds.iter().map(|(d, _)| *d).collect();
    let outcomes = map_trials(master_seed, experiment::DETECTION, n_trials, |_, rng| {
        run_trial(&env, &detectors, Some(&grid), rng)
    })?;
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(i, (d, threshold))| {
            let rows = grid
                .iter()
                .enumerate()
                .map(|(s, &scr_db)| {
                    let hits = outcomes.iter().filter(|o| o.statistics[s][i] > *threshold).count();
                    let (ci_low, ci_high) = wilson_95(hits, n_trials);
                    PdRow {
                        scr_db,
                        pd: hits as f64 / n_trials as f64,
                        n_trials,
                        ci_low,
                        ci_high,
                    }
                })
                .collect();
            PdCurve {
                detector: *d,
                threshold: *threshold,
                rows,
                regularization_events: outcomes.iter().map(|o| o.events[i]).sum(),
            }
        })
        .collect())
}

/// Central interval `[low, high]` of exceedance counts for Binomial(n, p)
/// with at most `(1 − level)/2` probability in each tail.
pub fn binomial_interval(n: usize, p: f64, level: f64) -> (usize, usize) {
    if p <= 0.0 {
        return (0, 0);
    }
    if p >= 1.0 {
        return (n, n);
    }
    // pmf up to normalization, grown outward from the mode by the ratio
    // pmf(k+1)/pmf(k) = (n−k)/(k+1) · p/(1−p)
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let odds = p / (1.0 - p);
    let mut weights = vec![0.0; n + 1];
    weights[mode] = 1.0;
    for k in mode..n {
        weights[k + 1] = weights[k] * (n - k) as f64 / (k + 1) as f64 * odds;
        if weights[k + 1] < 1e-300 {
            break;
        }
    }
    for k in (1..=mode).rev() {
        weights[k - 1] = weights[k] * k as f64 / ((n - k + 1) as f64 * odds);
        if weights[k - 1] < 1e-300 {
            break;
        }
    }
    let total: f64 = weights.iter().sum();
    let tail = (1.0 - level) / 2.0 * total;
    let mut low = 0;
    let mut acc = 0.0;
    while low < n && acc + weights[low] <= tail {
        acc += weights[low];
        low += 1;
    }
    let mut high = n;
    let mut acc = 0.0;
    while high > 0 && acc + weights[high] <= tail {
        acc += weights[high];
        high -= 1;
    }
    (low, high)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfarCheck {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub n_trials: usize,
    pub exceedances: usize,
    pub empirical_pfa: f64,
    pub target_pfa: f64,
    /// 99% binomial interval for the exceedance count.
    pub interval: (usize, usize),
    pub passed: bool,
}

/// Applies calibrated thresholds to a fresh, independent H₀ batch.
pub fn validate_cfar(
    scenario: &DetectionScenario,
    thresholds: &[ThresholdReport],
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<CfarCheck>> {
    let env = Environment::new(scenario)?;
    let detectors: Vec<DetectorKind> = thresholds.iter().map(|t| t.detector).collect();
    let outcomes = map_trials(master_seed, experiment::CFAR_VALIDATION, n_trials, |_, rng| {
        run_trial(&env, &detectors, None, rng)
    })?;
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let exceedances = outcomes.iter().filter(|o| o.statistics[0][i] > t.threshold).count();
            let interval = binomial_interval(n_trials, t.target_pfa, 0.99);
            CfarCheck {
                detector: t.detector,
                threshold: t.threshold,
                n_trials,
                exceedances,
                empirical_pfa: exceedances as f64 / n_trials as f64,
                target_pfa: t.target_pfa,
                interval,
                passed: interval.0 <= exceedances && exceedances <= interval.1,
            }
        })
        .collect())
}

fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = crate::sum::pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = crate::sum::pairwise_sum(&squares) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Clutter model of the offset-error and influence studies: ρ = 0.9,
/// 20 dB clutter-to-noise ratio, clutter Doppler 0.2, N = 8.
pub fn robustness_clutter() -> ClutterCovarianceSpec {
    ClutterCovarianceSpec {
        n: 8,
        rho: 0.9,
        cnr_db: 20.0,
        doppler: 0.2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetErrorRow {
    pub kind: MeanKind,
    pub k: usize,
    pub repeats: usize,
    pub mean_error: f64,
    pub standard_error: f64,
}

/// Average relative offset `‖R̄ − Σ‖/‖Σ‖` of each mean over K Gaussian
/// snapshots. Geometric means summarize Toeplitz features; the SCM uses
/// the raw snapshots. All kinds share the snapshots of a repeat.
pub fn offset_error_experiment(
    clutter: ClutterCovarianceSpec,
    kinds: &[MeanKind],
    k_grid: &[usize],
    n_repeats: usize,
    master_seed: u64,
) -> Result<Vec<OffsetErrorRow>> {
    if n_repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if k_grid.contains(&0) {
        return Err(Error::InvalidParameter("sample counts must be at least 1".into()));
    }
    let sigma = clutter_covariance(clutter)?;
    let sampler = ClutterSampler::new(&sigma, None)?;
    let sigma_norm = sigma.norm();
    let total = k_grid.len() * n_repeats;
    // trial index = grid position · repeats + repeat
    let errors = map_trials(master_seed, experiment::OFFSET_ERROR, total, |trial, rng| {
        let k = k_grid[trial as usize / n_repeats];
        offset_errors(&sampler, &sigma, sigma_norm, kinds, k, rng)
    })?;
    let mut rows = Vec::new();
    for (g, &k) in k_grid.iter().enumerate() {
        for (j, &kind) in kinds.iter().enumerate() {
            let values: Vec<f64> = (0..n_repeats).map(|r| errors[g * n_repeats + r][j]).collect();
            let (mean_error, standard_error) = mean_and_standard_error(&values);
            rows.push(OffsetErrorRow {
                kind,
                k,
                repeats: n_repeats,
                mean_error,
                standard_error,
            });
        }
    }
    Ok(rows)
}

fn offset_errors<R: Rng + ?Sized>(
    sampler: &ClutterSampler,
    sigma: &Hpd,
    sigma_norm: f64,
    kinds: &[MeanKind],
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let snapshots = sampler.sample_many(rng, k);
    let features = if kinds.iter().any(|k| *k != MeanKind::ScmArithmetic) {
        snapshots.iter().map(toeplitz_feature).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    kinds
        .iter()
        .map(|kind| {
            let estimate: Hermitian = match kind {
                MeanKind::ScmArithmetic => scm(&snapshots)?,
                _ => mean(*kind, &features)?.mean.as_hermitian().clone(),
            };
            Ok((estimate.matrix() - sigma.matrix()).norm() / sigma_norm)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceStudy {
    pub clutter: ClutterCovarianceSpec,
    pub outlier_steering: SteeringSpec,
    pub scr_db: f64,
    pub base_count: usize,
    pub outlier_counts: Vec<usize>,
    pub repeats: usize,
}

impl InfluenceStudy {
    /// 50 inliers, outliers at 40 dB SCR with target Doppler 0.2, M = 1..=40.
    pub fn standard(repeats: usize) -> Self {
        Self {
            clutter: robustness_clutter(),
            outlier_steering: SteeringSpec { n: 8, doppler: 0.2 },
            scr_db: 40.0,
            base_count: 50,
            outlier_counts: (1..=40).collect(),
            repeats,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRow {
    pub kind: MeanKind,
    pub outliers: usize,
    pub repeats: usize,
    pub mean_influence: f64,
    pub standard_error: f64,
}

/// Average influence value of each mean when M outliers `αp + c` are added
/// to `base_count` Gaussian inliers. Inliers and outliers enter through
/// their Toeplitz features; the M-outlier set is the first M of a common
/// draw so that rows for different M share data.
pub fn influence_experiment(
    study: &InfluenceStudy,
    kinds: &[MeanKind],
    master_seed: u64,
) -> Result<Vec<InfluenceRow>> {
    if study.repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if study.base_count == 0 {
        return Err(Error::InvalidParameter("at least one inlier is required".into()));
    }
    let sigma = clutter_covariance(study.clutter)?;
    let sampler = ClutterSampler::new(&sigma, None)?;
    let p = steering_vector(study.outlier_steering)?;
    let amplitude = amplitude_for_ratio(&p, study.scr_db, &sigma)?;
    let max_outliers = study.outlier_counts.iter().copied().max().unwrap_or(0);
    let values = map_trials(master_seed, experiment::INFLUENCE, study.repeats, |_, rng| {
        let base: Vec<Hpd> = sampler
            .sample_many(rng, study.base_count)
            .iter()
            .map(toeplitz_feature)
            .collect::<Result<_>>()?;
        let outliers: Vec<Hpd> = (0..max_outliers)
            .map(|_| {
                let c = sampler.sample(rng);
                toeplitz_feature(&add_with_random_phase(&c, &p, amplitude, rng))
            })
            .collect::<Result<_>>()?;
        kinds
            .iter()
            .map(|kind| {
                let center = mean(*kind, &base)?.mean;
                study
                    .outlier_counts
                    .iter()
                    .map(|&m| {
                        if m == 0 {
                            return Ok(0.0);
                        }
                        let setup =
                            ContaminationSetup::new(base.clone(), outliers[..m].to_vec(), DEFAULT_EPSILON)?;
                        Ok(influence_matrix_at(*kind, &center, &setup)?.norm())
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()
    })?;
    let mut rows = Vec::new();
    for (j, &kind) in kinds.iter().enumerate() {
        for (g, &m) in study.outlier_counts.iter().enumerate() {
            let samples: Vec<f64> = values.iter().map(|v| v[j][g]).collect();
            let (mean_influence, standard_error) = mean_and_standard_error(&samples);
            rows.push(InfluenceRow {
                kind,
                outliers: m,
                repeats: study.repeats,
                mean_influence,
                standard_error,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_threshold() {
        let stats: Vec<f64> = (1..=1000).map(f64::from).collect();
        let r = threshold_from_statistics(DetectorKind::Amf, &stats, 0.01).unwrap();
        assert_eq!(r.threshold, 991.0);
        assert_eq!((r.empirical_pfa * 1000.0).round(), 9.0);
        let r = threshold_from_statistics(DetectorKind::Amf, &stats, 1.0).unwrap();
        assert_eq!(r.threshold, 1.0);
        assert!(matches!(
            threshold_from_statistics(DetectorKind::Amf, &stats, 1e-4),
            Err(Error::InsufficientTrials { .. })
        ));
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_95(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_995).abs() < 1e-5);
        let (lo, hi) = wilson_95(50, 100);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
    }

    #[test]
    fn binomial_interval_covers_the_mean() {
        let (lo, hi) = binomial_interval(1000, 0.01, 0.99);
        assert!(lo < 10 && 10 < hi);
        assert!(lo >= 1 && hi <= 20);
        assert_eq!(binomial_interval(10, 0.0, 0.99), (0, 0));
    }

    #[test]
    fn scenario_validation() {
        let mut s = DetectionScenario::standard(8, FeatureStructure::Toeplitz, DetectorKind::TldMig);
        assert!(s.validate().is_ok());
        s.k = 1;
        assert!(s.validate().is_err());
        s.k = 0;
        s.interference = None;
        assert!(s.validate().is_err());
    }
}
