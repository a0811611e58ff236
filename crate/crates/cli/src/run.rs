//! Subcommand execution and output files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use migdet::divergence::{dissimilarity, isosurface_point, DivergenceKind};
use migdet::harness::{
    calibrate_thresholds, estimate_pd_all, experiment, influence_experiment, map_trials,
    offset_error_experiment, validate_cfar,
};
use migdet::means::{mean, mean_objective};
use migdet::random::random_hpd;
use migdet::report::{cfar_table, influence_table, offset_table, pd_table, thresholds_table, Table};
use migdet::{row, Error, Hpd};

use crate::config::Config;
use crate::Command;

#[derive(Debug)]
pub enum RunError {
    Io(String),
    Numeric(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numeric(e)
    }
}

struct Output {
    tables: Vec<(String, Table)>,
    regularization_events: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    outputs: Vec<String>,
    regularization_events: BTreeMap<String, usize>,
    config: &'a Config,
}

/// Runs one subcommand and writes its tables and manifest under `out`.
pub fn run(command: Command, config: &Config, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let output = match command {
        Command::DivergenceTable => divergence_table(config)?,
        Command::Mean => mean_table(config)?,
        Command::Robustness => robustness(config)?,
        Command::Influence => influence(config)?,
        Command::Detect => detect(config)?,
        Command::Isosurface => isosurface(config)?,
    };

    std::fs::create_dir_all(out).map_err(|e| RunError::Io(format!("cannot create {}: {e}", out.display())))?;
    let mut written = Vec::new();
    for (name, table) in &output.tables {
        let path = out.join(format!("{name}.csv"));
        write(&path, &table.to_csv()?)?;
        written.push(path);
    }
    let manifest = Manifest {
        subcommand: command.name(),
        version: migdet::VERSION,
        seed: config.seed,
        outputs: output.tables.iter().map(|(n, _)| format!("{n}.csv")).collect(),
        regularization_events: output.regularization_events,
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| RunError::Io(format!("cannot encode manifest: {e}")))?;
    let path = out.join(format!("{}.manifest.toml", command.name()));
    write(&path, &text)?;
    written.push(path);
    Ok(written)
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))
}

fn single(name: &str, table: Table) -> Output {
    Output {
        tables: vec![(name.to_string(), table)],
        regularization_events: BTreeMap::new(),
    }
}

fn divergence_table(config: &Config) -> Result<Output, RunError> {
    let c = &config.divergence_table;
    let pairs = map_trials(config.seed, experiment::DIVERGENCE_TABLE, c.pairs, |_, rng| {
        let x = random_hpd(rng, c.n, c.condition);
        let y = random_hpd(rng, c.n, c.condition);
        DivergenceKind::ALL
            .iter()
            .map(|&k| Ok((dissimilarity(k, &x, &y)?, dissimilarity(k, &y, &x)?)))
            .collect::<migdet::Result<Vec<_>>>()
    })?;
    let mut t = Table::new(["pair", "kind", "forward", "reverse"]);
    for (i, values) in pairs.iter().enumerate() {
        for (k, (fwd, rev)) in DivergenceKind::ALL.iter().zip(values) {
            t.push(row![i, k.name(), *fwd, *rev]);
        }
    }
    Ok(single("divergence-table", t))
}

fn mean_table(config: &Config) -> Result<Output, RunError> {
    let c = &config.mean;
    let sets = map_trials(config.seed, experiment::MEAN, c.sets, |_, rng| {
        let xs: Vec<Hpd> = (0..c.count).map(|_| random_hpd(rng, c.n, c.condition)).collect();
        c.means
            .iter()
            .map(|&kind| {
                let report = mean(kind, &xs)?;
                let objective = mean_objective(kind, &report.mean, &xs)?;
                Ok((report, objective))
            })
            .collect::<migdet::Result<Vec<_>>>()
    })?;
    let mut t = Table::new(["set", "mean", "iterations", "gradient_norm", "objective", "trace", "log_det"]);
    for (s, reports) in sets.iter().enumerate() {
        for (kind, (r, objective)) in c.means.iter().zip(reports) {
            t.push(row![
                s,
                kind.name(),
                r.iterations,
                r.gradient_norm,
                *objective,
                r.mean.trace(),
                r.mean.log_det()
            ]);
        }
    }
    Ok(single("mean", t))
}

fn robustness(config: &Config) -> Result<Output, RunError> {
    let c = &config.robustness;
    let rows = offset_error_experiment(c.clutter.spec(), &c.means, &c.k_grid, c.repeats, config.seed)?;
    Ok(single("robustness", offset_table(&rows)))
}

fn influence(config: &Config) -> Result<Output, RunError> {
    let rows = influence_experiment(&config.influence_study(), &config.influence.means, config.seed)?;
    Ok(single("influence", influence_table(&rows)))
}

fn detect(config: &Config) -> Result<Output, RunError> {
    let scenario = config.scenario();
    let detectors = config.detectors().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let d = &config.detect;
    let thresholds = calibrate_thresholds(&scenario, &detectors, d.pfa, config.calibration_trials(), config.seed)?;
    let pairs: Vec<_> = thresholds.iter().map(|t| (t.detector, t.threshold)).collect();
    let curves = estimate_pd_all(&scenario, &pairs, &config.scr_grid(), d.pd_trials, config.seed)?;

    let mut events = BTreeMap::new();
    for t in &thresholds {
        *events.entry(format!("calibration.{}", t.detector.name())).or_insert(0) += t.regularization_events;
    }
    for c in &curves {
        *events.entry(format!("detection.{}", c.detector.name())).or_insert(0) += c.regularization_events;
    }

    let mut tables = vec![
        ("detect".to_string(), pd_table(&curves)),
        ("detect-thresholds".to_string(), thresholds_table(&thresholds)),
    ];
    if d.validation_trials > 0 {
        let checks = validate_cfar(&scenario, &thresholds, d.validation_trials, config.seed)?;
        tables.push(("detect-cfar".to_string(), cfar_table(&checks)));
    }
    Ok(Output {
        tables,
        regularization_events: events,
    })
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn isosurface(config: &Config) -> Result<Output, RunError> {
    let c = &config.isosurface;
    let center = Hpd::from_real_diagonal(&c.center)?;
    let grid = log_grid(c.lambda_min, c.lambda_max, c.points);
    let mut t = Table::new(["lambda1", "lambda2", "branch", "lambda3", "status"]);
    for &l1 in &grid {
        for &l2 in &grid {
            match isosurface_point(c.kind, &center, c.radius, (l1, l2)) {
                Ok(found) => {
                    let n = found.roots.len();
                    for (i, root) in found.roots.iter().enumerate() {
                        let branch = match (n, i) {
                            (1, _) => "single".to_string(),
                            (2, 0) => "lower".to_string(),
                            (2, _) => "upper".to_string(),
                            _ => format!("root{i}"),
                        };
                        t.push(row![l1, l2, branch, *root, "ok"]);
                    }
                }
                Err(Error::NoSolution { .. }) => t.push(row![l1, l2, "", "", "inside"]),
                Err(Error::NonBracketable { .. }) => t.push(row![l1, l2, "", "", "outside"]),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(single("isosurface", t))
}
