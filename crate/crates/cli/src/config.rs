//! Experiment configuration: a TOML document with one optional section per
//! subcommand. Every field has a default, unknown keys are rejected, and the
//! resolved document (defaults filled in) is echoed into the run manifest.

use serde::{Deserialize, Serialize};

use migdet::detectors::{DetectorKind, FeatureStructure};
use migdet::divergence::DivergenceKind;
use migdet::harness::{DetectionScenario, InfluenceStudy};
use migdet::means::MeanKind;
use migdet::signal::{ClutterCovarianceSpec, InterferenceSpec, SteeringSpec, TextureSpec};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 picks the number of available cores.
    pub threads: usize,
    pub scenario: ScenarioConfig,
    pub detect: DetectConfig,
    pub robustness: RobustnessConfig,
    pub influence: InfluenceConfig,
    pub mean: MeanConfig,
    pub divergence_table: DivergenceTableConfig,
    pub isosurface: IsosurfaceConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub cnr_db: f64,
    pub clutter_doppler: f64,
    pub target_doppler: f64,
    pub feature: FeatureStructure,
    /// Gamma texture; absent for Gaussian clutter.
    pub texture: Option<TextureConfig>,
    /// Interferers in the secondary data; absent for none.
    pub interference: Option<InterferenceConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 8,
            k: 8,
            rho: 0.9,
            cnr_db: 20.0,
            clutter_doppler: 0.1,
            target_doppler: 0.2,
            feature: FeatureStructure::Toeplitz,
            texture: None,
            interference: Some(InterferenceConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureConfig {
    pub scale: f64,
    pub shape: f64,
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self { scale: 1.0, shape: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceConfig {
    pub count: usize,
    pub doppler: f64,
    pub icr_db: f64,
    /// 1-based secondary cells; defaults to the first `count`.
    pub placement: Option<Vec<usize>>,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self {
            count: 2,
            doppler: 0.22,
            icr_db: 20.0,
            placement: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub pfa: f64,
    /// H₀ trials for threshold calibration; defaults to 100/pfa.
    pub calibration_trials: Option<usize>,
    pub pd_trials: usize,
    pub scr_start_db: f64,
    pub scr_stop_db: f64,
    pub scr_step_db: f64,
    pub detectors: Vec<String>,
    /// Size of an independent H₀ batch checking the false-alarm rate; 0 skips it.
    pub validation_trials: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            pfa: 1e-2,
            calibration_trials: None,
            pd_trials: 1000,
            scr_start_db: 0.0,
            scr_stop_db: 40.0,
            scr_step_db: 2.0,
            detectors: DetectorKind::ALL.iter().map(|d| d.name().to_string()).collect(),
            validation_trials: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterConfig {
    pub n: usize,
    pub rho: f64,
    pub cnr_db: f64,
    pub doppler: f64,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            n: 8,
            rho: 0.9,
            cnr_db: 20.0,
            doppler: 0.2,
        }
    }
}

impl ClutterConfig {
    pub fn spec(&self) -> ClutterCovarianceSpec {
        ClutterCovarianceSpec {
            n: self.n,
            rho: self.rho,
            cnr_db: self.cnr_db,
            doppler: self.doppler,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    pub clutter: ClutterConfig,
    pub k_grid: Vec<usize>,
    pub repeats: usize,
    pub means: Vec<MeanKind>,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            clutter: ClutterConfig::default(),
            k_grid: vec![10, 20, 30, 40, 50, 60],
            repeats: 1000,
            means: MeanKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceConfig {
    pub clutter: ClutterConfig,
    pub inliers: usize,
    pub outlier_counts: Vec<usize>,
    pub scr_db: f64,
    pub outlier_doppler: f64,
    pub repeats: usize,
    pub means: Vec<MeanKind>,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        let study = InfluenceStudy::standard(1000);
        Self {
            clutter: ClutterConfig::default(),
            inliers: study.base_count,
            outlier_counts: study.outlier_counts,
            scr_db: study.scr_db,
            outlier_doppler: study.outlier_steering.doppler,
            repeats: study.repeats,
            means: MeanKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanConfig {
    pub n: usize,
    pub count: usize,
    pub condition: f64,
    pub sets: usize,
    pub means: Vec<MeanKind>,
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self {
            n: 4,
            count: 10,
            condition: 100.0,
            sets: 5,
            means: MeanKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceTableConfig {
    pub n: usize,
    pub pairs: usize,
    pub condition: f64,
}

impl Default for DivergenceTableConfig {
    fn default() -> Self {
        Self {
            n: 4,
            pairs: 10,
            condition: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsosurfaceConfig {
    pub kind: DivergenceKind,
    pub radius: f64,
    /// Diagonal of the 3×3 center.
    pub center: [f64; 3],
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for IsosurfaceConfig {
    fn default() -> Self {
        Self {
            kind: DivergenceKind::Tsl,
            radius: 1.0,
            center: [1.0, 1.0, 1.0],
            lambda_min: 0.1,
            lambda_max: 10.0,
            points: 21,
        }
    }
}

/// A schema violation: the offending field and what is wrong with it.
#[derive(Debug, PartialEq)]
pub struct SchemaError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), SchemaError> {
    if ok {
        Ok(())
    } else {
        Err(SchemaError {
            field: field.to_string(),
            message: message.to_string(),
        })
    }
}

fn check_clutter(c: &ClutterConfig, section: &str) -> Result<(), SchemaError> {
    check(c.n >= 2, &format!("{section}.clutter.n"), "must be at least 2")?;
    check((0.0..1.0).contains(&c.rho), &format!("{section}.clutter.rho"), "must be in [0, 1)")?;
    check(c.cnr_db.is_finite(), &format!("{section}.clutter.cnr_db"), "must be finite")?;
    check(
        (-0.5..=0.5).contains(&c.doppler),
        &format!("{section}.clutter.doppler"),
        "must be in [-0.5, 0.5]",
    )
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn detectors(&self) -> Result<Vec<DetectorKind>, SchemaError> {
        self.detect
            .detectors
            .iter()
            .map(|name| {
                name.parse().map_err(|_| SchemaError {
                    field: "detect.detectors".into(),
                    message: format!(
                        "unknown detector {name:?}; expected one of {}",
                        DetectorKind::ALL.map(|d| d.name()).join(", ")
                    ),
                })
            })
            .collect()
    }

    pub fn scenario(&self) -> DetectionScenario {
        let s = &self.scenario;
        DetectionScenario {
            n: s.n,
            k: s.k,
            clutter: ClutterCovarianceSpec {
                n: s.n,
                rho: s.rho,
                cnr_db: s.cnr_db,
                doppler: s.clutter_doppler,
            },
            texture: s.texture.as_ref().map(|t| TextureSpec {
                scale: t.scale,
                shape: t.shape,
            }),
            steering: SteeringSpec {
                n: s.n,
                doppler: s.target_doppler,
            },
            interference: s.interference.as_ref().map(|i| InterferenceSpec {
                count: i.count,
                doppler: i.doppler,
                icr_db: i.icr_db,
                placement: i.placement.clone(),
            }),
            feature: s.feature,
            detector: DetectorKind::TldMig,
        }
    }

    pub fn scr_grid(&self) -> Vec<f64> {
        let d = &self.detect;
        let steps = ((d.scr_stop_db - d.scr_start_db) / d.scr_step_db + 1e-9).floor() as usize;
        (0..=steps).map(|i| d.scr_start_db + i as f64 * d.scr_step_db).collect()
    }

    pub fn calibration_trials(&self) -> usize {
        self.detect
            .calibration_trials
            .unwrap_or_else(|| (100.0 / self.detect.pfa).ceil() as usize)
    }

    pub fn influence_study(&self) -> InfluenceStudy {
        let i = &self.influence;
        InfluenceStudy {
            clutter: i.clutter.spec(),
            outlier_steering: SteeringSpec {
                n: i.clutter.n,
                doppler: i.outlier_doppler,
            },
            scr_db: i.scr_db,
            base_count: i.inliers,
            outlier_counts: i.outlier_counts.clone(),
            repeats: i.repeats,
        }
    }

    /// Range checks that the type system does not express.
    pub fn validate(&self) -> Result<(), SchemaError> {
        // TOML integers are signed
        check(self.seed <= i64::MAX as u64, "seed", "must not exceed 9223372036854775807")?;
        let s = &self.scenario;
        check(s.n >= 2, "scenario.n", "must be at least 2")?;
        check(s.k >= 1, "scenario.k", "must be at least 1")?;
        check((0.0..1.0).contains(&s.rho), "scenario.rho", "must be in [0, 1)")?;
        check(s.cnr_db.is_finite(), "scenario.cnr_db", "must be finite")?;
        check(
            (-0.5..=0.5).contains(&s.clutter_doppler),
            "scenario.clutter_doppler",
            "must be in [-0.5, 0.5]",
        )?;
        check(
            (-0.5..=0.5).contains(&s.target_doppler),
            "scenario.target_doppler",
            "must be in [-0.5, 0.5]",
        )?;
        if let Some(t) = &s.texture {
            check(t.scale > 0.0, "scenario.texture.scale", "must be positive")?;
            check(t.shape > 0.0, "scenario.texture.shape", "must be positive")?;
        }
        if let Some(i) = &s.interference {
            check(i.count <= s.k, "scenario.interference.count", "must not exceed scenario.k")?;
            check(
                (-0.5..=0.5).contains(&i.doppler),
                "scenario.interference.doppler",
                "must be in [-0.5, 0.5]",
            )?;
            check(i.icr_db.is_finite(), "scenario.interference.icr_db", "must be finite")?;
            if let Some(p) = &i.placement {
                check(
                    p.len() == i.count,
                    "scenario.interference.placement",
                    "must list exactly `count` cells",
                )?;
                let mut sorted = p.clone();
                sorted.sort_unstable();
                sorted.dedup();
                check(
                    sorted.len() == p.len() && p.iter().all(|&c| (1..=s.k).contains(&c)),
                    "scenario.interference.placement",
                    "cells must be distinct and within 1..=scenario.k",
                )?;
            }
        }

        let d = &self.detect;
        check(d.pfa > 0.0 && d.pfa <= 1.0, "detect.pfa", "must be in (0, 1]")?;
        check(
            self.calibration_trials() as f64 * d.pfa >= 1.0,
            "detect.calibration_trials",
            "must be at least 1/pfa",
        )?;
        check(d.pd_trials >= 1, "detect.pd_trials", "must be at least 1")?;
        check(d.scr_step_db > 0.0, "detect.scr_step_db", "must be positive")?;
        check(
            d.scr_start_db.is_finite() && d.scr_stop_db.is_finite() && d.scr_stop_db >= d.scr_start_db,
            "detect.scr_stop_db",
            "must be finite and not below scr_start_db",
        )?;
        check(!d.detectors.is_empty(), "detect.detectors", "must name at least one detector")?;
        self.detectors()?;

        let r = &self.robustness;
        check_clutter(&r.clutter, "robustness")?;
        check(r.repeats >= 1, "robustness.repeats", "must be at least 1")?;
        check(
            !r.k_grid.is_empty() && r.k_grid.iter().all(|&k| k >= 1),
            "robustness.k_grid",
            "must be a nonempty list of positive sample counts",
        )?;
        check(!r.means.is_empty(), "robustness.means", "must name at least one mean")?;

        let i = &self.influence;
        check_clutter(&i.clutter, "influence")?;
        check(i.repeats >= 1, "influence.repeats", "must be at least 1")?;
        check(i.inliers >= 1, "influence.inliers", "must be at least 1")?;
        check(!i.outlier_counts.is_empty(), "influence.outlier_counts", "must be nonempty")?;
        check(i.scr_db.is_finite(), "influence.scr_db", "must be finite")?;
        check(
            (-0.5..=0.5).contains(&i.outlier_doppler),
            "influence.outlier_doppler",
            "must be in [-0.5, 0.5]",
        )?;
        check(!i.means.is_empty(), "influence.means", "must name at least one mean")?;

        let m = &self.mean;
        check(m.n >= 1, "mean.n", "must be at least 1")?;
        check(m.count >= 1, "mean.count", "must be at least 1")?;
        check(m.sets >= 1, "mean.sets", "must be at least 1")?;
        check(m.condition >= 1.0, "mean.condition", "must be at least 1")?;
        check(!m.means.is_empty(), "mean.means", "must name at least one mean")?;

        let t = &self.divergence_table;
        check(t.n >= 1, "divergence_table.n", "must be at least 1")?;
        check(t.pairs >= 1, "divergence_table.pairs", "must be at least 1")?;
        check(t.condition >= 1.0, "divergence_table.condition", "must be at least 1")?;

        let iso = &self.isosurface;
        check(iso.radius >= 0.0, "isosurface.radius", "must be nonnegative")?;
        check(iso.center.iter().all(|c| *c > 0.0), "isosurface.center", "must be positive")?;
        check(
            iso.lambda_min > 0.0 && iso.lambda_max >= iso.lambda_min,
            "isosurface.lambda_max",
            "need 0 < lambda_min <= lambda_max",
        )?;
        check(iso.points >= 1, "isosurface.points", "must be at least 1")
    }
}
