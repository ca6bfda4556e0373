//! Monte Carlo experiment runner: trials, RMSE/bias aggregation and CSV/JSON output.

pub mod config;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cp::{check_identifiable, tals};
use crate::crb::{crb_matrix, FAMILIES};
use crate::emvs::{generate_snapshots, SceneConfig, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::estimator::{estimate_all, TargetEstimate};
use crate::geometry::{build_coprime_array, ArrayRole, SensorPositions};
use crate::linalg::{min_cost_assignment, C64};
use crate::pipeline::{exact_model_covariance, CoarrayPipeline};

pub use config::{RunConfig, TalsOverrides, ANGLE_KEYS};

/// Indices of `(theta_t, phi_t, theta_r, phi_r)`.
pub const ANGLE_GROUP: [usize; 4] = [0, 1, 4, 5];
/// Indices of `(gamma_t, eta_t, gamma_r, eta_r)`.
pub const POLARIZATION_GROUP: [usize; 4] = [2, 3, 6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Snr,
    Snapshots,
    Targets,
    Bias,
    Scatter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub snapshots: usize,
    pub k: usize,
}

/// One Monte Carlo trial; angles in radians.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// `category: message` of the error that failed the trial.
    pub failure: Option<String>,
    pub iterations: usize,
    pub fit: f64,
    pub truth: Vec<[f64; 8]>,
    /// Estimates reordered to match `truth`; empty for a failed trial.
    pub estimates: Vec<[f64; 8]>,
}

impl TrialOutcome {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// `estimate - truth` per target, degrees.
    pub fn errors_deg(&self) -> Vec<[f64; 8]> {
        self.estimates
            .iter()
            .zip(&self.truth)
            .map(|(e, t)| std::array::from_fn(|p| (e[p] - t[p]).to_degrees()))
            .collect()
    }
}

/// Seed of trial `trial` under base seed `base`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base ^ trial as u64
}

/// Transmit and receive arrays of a configuration.
pub fn arrays(cfg: &RunConfig) -> Result<(SensorPositions, SensorPositions)> {
    Ok((
        build_coprime_array(cfg.m1, cfg.m2, ArrayRole::Transmit)?,
        build_coprime_array(cfg.n1, cfg.n2, ArrayRole::Receive)?,
    ))
}

/// Scene of one trial at `point`.
pub fn trial_scene(cfg: &RunConfig, point: &SweepPoint, trial: usize) -> Result<SceneConfig> {
    let (transmit, receive) = arrays(cfg)?;
    let scene = SceneConfig {
        transmit,
        receive,
        targets: cfg.target_params(point.k),
        snapshots: point.snapshots,
        snr_db: point.snr_db,
        seed: trial_seed(cfg.seed, trial),
    };
    scene.validate()?;
    Ok(scene)
}

/// Assignment of estimates to truths minimising the squared elevation distances
/// `(theta_t, theta_r)`; `result[truth] = estimate`.
pub fn match_to_truth(estimates: &[[f64; 8]], truth: &[[f64; 8]]) -> Result<Vec<usize>> {
    if estimates.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} estimates for {} targets",
            estimates.len(),
            truth.len()
        )));
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| {
            estimates
                .iter()
                .map(|e| (e[0] - t[0]).powi(2) + (e[4] - t[4]).powi(2))
                .collect()
        })
        .collect();
    Ok(min_cost_assignment(&cost))
}

fn estimate_trial(
    pipeline: &CoarrayPipeline,
    cfg: &RunConfig,
    scene: &SceneConfig,
) -> Result<(Vec<[f64; 8]>, usize, f64)> {
    let out = if cfg.exact_covariance {
        pipeline.process_covariance(&exact_model_covariance(scene)?)?
    } else {
        pipeline.process_snapshots(&generate_snapshots(scene)?)?
    };
    let factors = tals(&out.r5, &cfg.tals.config(scene.num_targets(), scene.seed))?;
    if !factors.converged {
        return Err(Error::DegenerateIteration(format!(
            "TALS did not converge in {} iterations (fit {:.3e})",
            factors.iterations, factors.fit
        )));
    }
    let estimates = estimate_all(&factors, out.m_tilde, out.n_tilde)?.into_estimates()?;
    Ok((
        estimates.iter().map(|e| e.angles()).collect(),
        factors.iterations,
        factors.fit,
    ))
}

fn run_trial_with(
    pipeline: &CoarrayPipeline,
    cfg: &RunConfig,
    point: &SweepPoint,
    trial: usize,
) -> Result<TrialOutcome> {
    let scene = trial_scene(cfg, point, trial)?;
    let truth: Vec<[f64; 8]> = scene.targets.iter().map(|t| t.angles()).collect();
    let mut outcome = TrialOutcome {
        trial,
        seed: scene.seed,
        failure: None,
        iterations: 0,
        fit: f64::NAN,
        truth,
        estimates: Vec::new(),
    };
    match estimate_trial(pipeline, cfg, &scene) {
        Ok((estimates, iterations, fit)) => {
            let order = match_to_truth(&estimates, &outcome.truth)?;
            outcome.estimates = order.iter().map(|&e| estimates[e]).collect();
            outcome.iterations = iterations;
            outcome.fit = fit;
        }
        Err(e) => outcome.failure = Some(format!("{}: {e}", e.category())),
    }
    Ok(outcome)
}

fn checked_pipeline(cfg: &RunConfig, k: usize) -> Result<CoarrayPipeline> {
    let (transmit, receive) = arrays(cfg)?;
    let pipeline = CoarrayPipeline::new(&transmit, &receive)?;
    check_identifiable(k, pipeline.m_tilde(), pipeline.n_tilde())?;
    Ok(pipeline)
}

/// One trial: simulate, run pipeline -> TALS -> estimator, and match to truth.
///
/// Estimation failures (including TALS non-convergence) are recorded in the
/// outcome; configuration problems and unidentifiable `K` are returned as errors.
pub fn run_trial(cfg: &RunConfig, point: &SweepPoint, trial: usize) -> Result<TrialOutcome> {
    run_trial_with(&checked_pipeline(cfg, point.k)?, cfg, point, trial)
}

/// Group RMSE in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupRmse {
    pub angle: f64,
    pub polarization: f64,
}

fn group_rms(errors: &[[f64; 8]], group: &[usize]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = errors
        .iter()
        .map(|e| group.iter().map(|&p| e[p] * e[p]).sum::<f64>())
        .sum();
    (sum / (errors.len() * group.len()) as f64).sqrt()
}

/// `sqrt(1/(K I) sum ||alpha_hat - alpha||^2)` per parameter group, with
/// `||.||^2` averaged over the group's four parameters. One slice entry per
/// `(target, trial)` record; input in radians, output in degrees.
pub fn rmse(estimates: &[[f64; 8]], truths: &[[f64; 8]]) -> Result<GroupRmse> {
    if estimates.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} estimates for {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    let errors: Vec<[f64; 8]> = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| std::array::from_fn(|p| (e[p] - t[p]).to_degrees()))
        .collect();
    Ok(GroupRmse {
        angle: group_rms(&errors, &ANGLE_GROUP),
        polarization: group_rms(&errors, &POLARIZATION_GROUP),
    })
}

/// Aggregates of one sweep point; angles in degrees.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub sweep_value: f64,
    pub point: SweepPoint,
    pub rmse_angle: f64,
    pub rmse_polarization: f64,
    /// RMSE of each parameter family over all targets and successful trials.
    pub rmse_family: [f64; 8],
    /// Mean error per target and parameter.
    pub bias: Vec<[f64; 8]>,
    /// Root mean square over targets of `bias`, per family.
    pub bias_family: [f64; 8],
    pub bias_angle: f64,
    pub bias_polarization: f64,
    pub trials: usize,
    pub failures: usize,
    pub success: Vec<bool>,
    /// Failure count per error category.
    pub failure_categories: BTreeMap<String, usize>,
    pub wall_seconds_total: f64,
    pub wall_seconds_max: f64,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

impl PointReport {
    fn aggregate(sweep_value: f64, point: SweepPoint, outcomes: Vec<TrialOutcome>, times: &[f64]) -> Result<Self> {
        let k = point.k;
        let ok: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.succeeded()).collect();
        let est: Vec<[f64; 8]> = ok.iter().flat_map(|o| o.estimates.iter().copied()).collect();
        let truth: Vec<[f64; 8]> = ok.iter().flat_map(|o| o.truth.iter().copied()).collect();
        let group = rmse(&est, &truth)?;
        let errors: Vec<Vec<[f64; 8]>> = ok.iter().map(|o| o.errors_deg()).collect();
        let rmse_family = std::array::from_fn(|p| {
            let all: Vec<[f64; 8]> = errors.iter().flatten().copied().collect();
            group_rms(&all, &[p])
        });
        let bias: Vec<[f64; 8]> = (0..k)
            .map(|t| {
                std::array::from_fn(|p| {
                    if errors.is_empty() {
                        f64::NAN
                    } else {
                        errors.iter().map(|e| e[t][p]).sum::<f64>() / errors.len() as f64
                    }
                })
            })
            .collect();
        let bias_family = std::array::from_fn(|p| group_rms(&bias, &[p]));
        let mut failure_categories = BTreeMap::new();
        for o in &outcomes {
            if let Some(f) = &o.failure {
                let cat = f.split(':').next().unwrap_or("").to_string();
                *failure_categories.entry(cat).or_insert(0) += 1;
            }
        }
        Ok(PointReport {
            sweep_value,
            point,
            rmse_angle: group.angle,
            rmse_polarization: group.polarization,
            rmse_family,
            bias_angle: group_rms(&bias, &ANGLE_GROUP),
            bias_polarization: group_rms(&bias, &POLARIZATION_GROUP),
            bias,
            bias_family,
            trials: outcomes.len(),
            failures: outcomes.len() - ok.len(),
            success: outcomes.iter().map(TrialOutcome::succeeded).collect(),
            failure_categories,
            wall_seconds_total: times.iter().sum(),
            wall_seconds_max: times.iter().copied().fold(0.0, f64::max),
            outcomes,
        })
    }
}

/// Runs `cfg.trials` trials at one point (in parallel, collected in trial order).
pub fn run_point(cfg: &RunConfig, point: SweepPoint, sweep_value: f64) -> Result<PointReport> {
    let pipeline = checked_pipeline(cfg, point.k)?;
    let results: Vec<Result<(TrialOutcome, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let start = Instant::now();
            let outcome = run_trial_with(&pipeline, cfg, &point, trial)?;
            Ok((outcome, start.elapsed().as_secs_f64()))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut times = Vec::with_capacity(results.len());
    for r in results {
        let (o, t) = r?;
        outcomes.push(o);
        times.push(t);
    }
    PointReport::aggregate(sweep_value, point, outcomes, &times)
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseReport {
    pub kind: SweepKind,
    pub base_seed: u64,
    pub points: Vec<PointReport>,
}

/// Sweep points of `kind`; sweeps other than the K sweep use every configured target.
pub fn sweep_points(cfg: &RunConfig, kind: SweepKind) -> Vec<(f64, SweepPoint)> {
    let all = cfg.targets.len();
    let (snr, snapshots) = (cfg.snr_db[0], cfg.snapshots[0]);
    match kind {
        SweepKind::Snr | SweepKind::Bias => cfg
            .snr_db
            .iter()
            .map(|&s| {
                (
                    s,
                    SweepPoint {
                        snr_db: s,
                        snapshots,
                        k: all,
                    },
                )
            })
            .collect(),
        SweepKind::Snapshots => cfg
            .snapshots
            .iter()
            .map(|&l| {
                (
                    l as f64,
                    SweepPoint {
                        snr_db: snr,
                        snapshots: l,
                        k: all,
                    },
                )
            })
            .collect(),
        SweepKind::Targets => cfg
            .k_values
            .iter()
            .map(|&k| {
                (
                    k as f64,
                    SweepPoint {
                        snr_db: snr,
                        snapshots,
                        k,
                    },
                )
            })
            .collect(),
        SweepKind::Scatter => vec![(
            snr,
            SweepPoint {
                snr_db: snr,
                snapshots,
                k: all,
            },
        )],
    }
}

pub fn run_sweep(cfg: &RunConfig, kind: SweepKind) -> Result<RmseReport> {
    cfg.validate()?;
    let points = sweep_points(cfg, kind)
        .into_iter()
        .map(|(value, point)| run_point(cfg, point, value))
        .collect::<Result<Vec<_>>>()?;
    Ok(RmseReport {
        kind,
        base_seed: cfg.seed,
        points,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_write<W: std::io::Write>(w: &mut csv::Writer<W>, path: &Path, record: Vec<String>) -> Result<()> {
    w.write_record(&record).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn flush<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

/// Sweep table: one row per point. Contains no timings, so it is
/// byte-identical across runs with the same configuration and seed.
pub fn write_sweep_csv(report: &RmseReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = [
        "sweep_value",
        "snr_db",
        "snapshots",
        "k",
        "rmse_angle",
        "rmse_polarization",
        "bias_angle",
        "bias_polarization",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(ANGLE_KEYS.iter().map(|k| format!("rmse_{k}")));
    header.extend(ANGLE_KEYS.iter().map(|k| format!("bias_{k}")));
    header.extend(["failures".to_string(), "trials".to_string()]);
    csv_write(&mut w, path, header)?;
    for p in &report.points {
        let mut row = vec![
            num(p.sweep_value),
            num(p.point.snr_db),
            p.point.snapshots.to_string(),
            p.point.k.to_string(),
            num(p.rmse_angle),
            num(p.rmse_polarization),
            num(p.bias_angle),
            num(p.bias_polarization),
        ];
        row.extend(p.rmse_family.iter().map(|&v| num(v)));
        row.extend(p.bias_family.iter().map(|&v| num(v)));
        row.extend([p.failures.to_string(), p.trials.to_string()]);
        csv_write(&mut w, path, row)?;
    }
    flush(w, path)
}

/// Per-trial, per-target estimates and truths in degrees (scatter plots).
pub fn write_scatter_csv(report: &RmseReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["sweep_value", "trial", "seed", "target", "success"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ANGLE_KEYS.iter().map(|k| format!("est_{k}")));
    header.extend(ANGLE_KEYS.iter().map(|k| format!("true_{k}")));
    csv_write(&mut w, path, header)?;
    for p in &report.points {
        for o in &p.outcomes {
            for (t, truth) in o.truth.iter().enumerate() {
                let mut row = vec![
                    num(p.sweep_value),
                    o.trial.to_string(),
                    o.seed.to_string(),
                    t.to_string(),
                    o.succeeded().to_string(),
                ];
                match o.estimates.get(t) {
                    Some(e) => row.extend(e.iter().map(|v| num(v.to_degrees()))),
                    None => row.extend(std::iter::repeat_n(String::new(), FAMILIES)),
                }
                row.extend(truth.iter().map(|v| num(v.to_degrees())));
                csv_write(&mut w, path, row)?;
            }
        }
    }
    flush(w, path)
}

/// Full report (including per-target bias, success flags and wall-clock time) as JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// CRB at one `(snr, snapshots)` point, square roots in degrees.
#[derive(Debug, Clone, Serialize)]
pub struct CrbRow {
    pub snr_db: f64,
    pub snapshots: usize,
    pub k: usize,
    /// `sqrt(mean_k CRB)` per family.
    pub family: [f64; 8],
    pub angle: f64,
    pub polarization: f64,
}

/// CRB for every SNR of the configuration (first snapshot count, all targets).
pub fn crb_rows(cfg: &RunConfig) -> Result<Vec<CrbRow>> {
    cfg.validate()?;
    let (transmit, receive) = arrays(cfg)?;
    let k = cfg.targets.len();
    cfg.snr_db
        .iter()
        .map(|&snr_db| {
            let scene = SceneConfig {
                transmit: transmit.clone(),
                receive: receive.clone(),
                targets: cfg.target_params(k),
                snapshots: cfg.snapshots[0],
                snr_db,
                seed: cfg.seed,
            };
            let crb = crb_matrix(&scene)?;
            let mean_var = |fams: &[usize]| {
                let sum: f64 = fams
                    .iter()
                    .flat_map(|&f| (0..k).map(move |t| (f, t)))
                    .map(|(f, t)| crb.variance(f, t))
                    .sum();
                (sum / (fams.len() * k) as f64).sqrt().to_degrees()
            };
            Ok(CrbRow {
                snr_db,
                snapshots: scene.snapshots,
                k,
                family: std::array::from_fn(|f| mean_var(&[f])),
                angle: mean_var(&ANGLE_GROUP),
                polarization: mean_var(&POLARIZATION_GROUP),
            })
        })
        .collect()
}

pub fn write_crb_csv(rows: &[CrbRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["snr_db", "snapshots", "k", "crb_angle", "crb_polarization"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ANGLE_KEYS.iter().map(|k| format!("crb_{k}")));
    csv_write(&mut w, path, header)?;
    for r in rows {
        let mut row = vec![
            num(r.snr_db),
            r.snapshots.to_string(),
            r.k.to_string(),
            num(r.angle),
            num(r.polarization),
        ];
        row.extend(r.family.iter().map(|&v| num(v)));
        csv_write(&mut w, path, row)?;
    }
    flush(w, path)
}

/// Snapshot matrix as `row,snapshot,re,im` CSV, rows in `(M, 6, N, 6)` order.
pub fn write_snapshots_csv(y: &SnapshotMatrix, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    csv_write(&mut w, path, ["row", "snapshot", "re", "im"].map(String::from).to_vec())?;
    for row in 0..y.rows() {
        for l in 0..y.snapshots() {
            let z = y.get(row, l);
            csv_write(
                &mut w,
                path,
                vec![
                    row.to_string(),
                    l.to_string(),
                    format!("{:e}", z.re),
                    format!("{:e}", z.im),
                ],
            )?;
        }
    }
    flush(w, path)
}

/// Reads a file written by [`write_snapshots_csv`]; every `(row, snapshot)` cell must appear once.
pub fn read_snapshots_csv(path: &Path) -> Result<SnapshotMatrix> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let bad = |what: &str| {
            Error::Config(format!(
                "{}: bad {what} in line {:?}",
                path.display(),
                record.position().map(|p| p.line())
            ))
        };
        let row: usize = field(0).parse().map_err(|_| bad("row"))?;
        let l: usize = field(1).parse().map_err(|_| bad("snapshot"))?;
        let re: f64 = field(2).parse().map_err(|_| bad("real part"))?;
        let im: f64 = field(3).parse().map_err(|_| bad("imaginary part"))?;
        cells.push((row, l, C64::new(re, im)));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let snapshots = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let mut data = vec![None; rows * snapshots];
    for (row, l, z) in cells {
        if data[row * snapshots + l].replace(z).is_some() {
            return Err(Error::Config(format!(
                "{}: duplicate cell ({row}, {l})",
                path.display()
            )));
        }
    }
    let data: Option<Vec<C64>> = data.into_iter().collect();
    let data = data.ok_or_else(|| Error::Config(format!("{}: snapshot grid is incomplete", path.display())))?;
    SnapshotMatrix::new(rows, snapshots, data)
}

/// Result of estimating one snapshot batch.
#[derive(Debug, Clone, Serialize)]
pub struct SingleEstimate {
    /// One entry per CP column: the angles in degrees or the error message.
    pub records: Vec<std::result::Result<TargetEstimate, String>>,
    pub fit: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs pipeline -> TALS -> estimator on `y` for `k` targets with the configured arrays.
pub fn estimate_snapshots(cfg: &RunConfig, y: &SnapshotMatrix, k: usize, seed: u64) -> Result<SingleEstimate> {
    let pipeline = checked_pipeline(cfg, k)?;
    let expected = 36 * pipeline_sensors(cfg)?;
    if y.rows() != expected {
        return Err(Error::Shape(format!(
            "{} snapshot rows, the configured arrays need {expected}",
            y.rows()
        )));
    }
    let out = pipeline.process_snapshots(y)?;
    let factors = tals(&out.r5, &cfg.tals.config(k, seed))?;
    let set = estimate_all(&factors, out.m_tilde, out.n_tilde)?;
    Ok(SingleEstimate {
        records: set
            .records
            .into_iter()
            .map(|r| r.map_err(|e| format!("{}: {e}", e.category())))
            .collect(),
        fit: factors.fit,
        iterations: factors.iterations,
        converged: factors.converged,
    })
}

fn pipeline_sensors(cfg: &RunConfig) -> Result<usize> {
    let (t, r) = arrays(cfg)?;
    Ok(t.len() * r.len())
}

pub fn write_estimates_csv(est: &SingleEstimate, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = vec!["column".into()];
    header.extend(ANGLE_KEYS.iter().map(|k| format!("est_{k}")));
    header.extend(
        [
            "theta_poynting_t",
            "theta_poynting_r",
            "lambda_imag_t",
            "lambda_imag_r",
            "fit",
            "iterations",
            "converged",
            "error",
        ]
        .map(String::from),
    );
    csv_write(&mut w, path, header)?;
    for (col, rec) in est.records.iter().enumerate() {
        let mut row = vec![col.to_string()];
        match rec {
            Ok(e) => {
                row.extend(e.angles().iter().map(|v| num(v.to_degrees())));
                row.extend([
                    num(e.transmit.theta_poynting.to_degrees()),
                    num(e.receive.theta_poynting.to_degrees()),
                    num(e.lambda_imag_t),
                    num(e.lambda_imag_r),
                ]);
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), FAMILIES + 4)),
        }
        row.extend([num(est.fit), est.iterations.to_string(), est.converged.to_string()]);
        row.push(rec.as_ref().err().cloned().unwrap_or_default());
        csv_write(&mut w, path, row)?;
    }
    flush(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SCENE: &str = "
        theta_t = 40, 20
        phi_t = 15, 25
        gamma_t = 10, 22
        eta_t = 38, 48
        theta_r = 24, 38
        phi_r = 21, 32
        gamma_r = 42, 33
        eta_r = 17, 27
        trials = 3
        snapshots = 50
    ";

    fn deg(v: [f64; 8]) -> [f64; 8] {
        v.map(f64::to_radians)
    }

    #[test]
    fn perfect_estimates_have_zero_rmse() {
        let t = vec![deg([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]); 3];
        let r = rmse(&t, &t).unwrap();
        assert_eq!((r.angle, r.polarization), (0.0, 0.0));
    }

    #[test]
    fn one_degree_error_in_one_parameter() {
        let t = deg([10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
        let mut e = t;
        e[1] += 1f64.to_radians();
        let r = rmse(&[e], &[t]).unwrap();
        assert!((r.angle - 0.5).abs() < 1e-12);
        assert_eq!(r.polarization, 0.0);
    }

    proptest! {
        #[test]
        fn rmse_matches_direct_formula(
            errs in prop::collection::vec(prop::array::uniform8(-3.0f64..3.0), 1..30),
        ) {
            let truth: Vec<[f64; 8]> = errs.iter().map(|_| [0.5; 8]).collect();
            let est: Vec<[f64; 8]> = errs.iter().map(|e| std::array::from_fn(|p| 0.5 + e[p].to_radians())).collect();
            let r = rmse(&est, &truth).unwrap();
            let direct = |g: [usize; 4]| {
                let s: f64 = errs.iter().map(|e| g.iter().map(|&p| e[p].powi(2)).sum::<f64>() / 4.0).sum();
                (s / errs.len() as f64).sqrt()
            };
            prop_assert!((r.angle - direct(ANGLE_GROUP)).abs() < 1e-9);
            prop_assert!((r.polarization - direct(POLARIZATION_GROUP)).abs() < 1e-9);
        }
    }

    #[test]
    fn matching_undoes_a_permutation() {
        let truth = vec![deg([10.0; 8]), deg([20.0; 8]), deg([30.0; 8])];
        let est = vec![truth[2], truth[0], truth[1]];
        assert_eq!(match_to_truth(&est, &truth).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn trials_are_reproducible_and_accurate_without_noise() {
        let mut cfg = RunConfig::parse(SCENE).unwrap();
        let point = SweepPoint {
            snr_db: 15.0,
            snapshots: 50,
            k: 2,
        };
        let a = run_trial(&cfg, &point, 1).unwrap();
        let b = run_trial(&cfg, &point, 1).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.seed, trial_seed(cfg.seed, 1));

        cfg.exact_covariance = true;
        let exact = run_trial(
            &cfg,
            &SweepPoint {
                snr_db: f64::INFINITY,
                ..point
            },
            0,
        )
        .unwrap();
        assert!(exact.succeeded(), "{:?}", exact.failure);
        for e in exact.errors_deg() {
            assert!(e.iter().all(|v| v.abs() < 1e-6), "{e:?}");
        }
    }

    #[test]
    fn unidentifiable_target_count_is_an_error() {
        let cfg = RunConfig::parse(SCENE).unwrap();
        let point = SweepPoint {
            snr_db: 10.0,
            snapshots: 10,
            k: 169,
        };
        assert!(matches!(run_trial(&cfg, &point, 0), Err(Error::Identifiability(_))));
    }

    #[test]
    fn point_aggregates_recompute_from_trials() {
        let cfg = RunConfig::parse(SCENE).unwrap();
        let report = run_sweep(&cfg, SweepKind::Snr).unwrap();
        let p = &report.points[0];
        assert_eq!(p.trials, 3);
        let ok: Vec<&TrialOutcome> = p.outcomes.iter().filter(|o| o.succeeded()).collect();
        assert_eq!(p.failures, 3 - ok.len());
        let mut sum = 0.0;
        let mut count = 0;
        for o in &ok {
            for e in o.errors_deg() {
                sum += ANGLE_GROUP.iter().map(|&i| e[i] * e[i]).sum::<f64>() / 4.0;
                count += 1;
            }
        }
        assert!((p.rmse_angle - (sum / count as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv_is_deterministic() {
        let dir = std::env::temp_dir().join(format!("emvs-harness-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = RunConfig::parse(&format!(
            "{}\nsnr_db = 5, 15",
            SCENE.replace("trials = 3", "trials = 2")
        ))
        .unwrap();
        let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
        write_sweep_csv(&run_sweep(&cfg, SweepKind::Snr).unwrap(), &a).unwrap();
        write_sweep_csv(&run_sweep(&cfg, SweepKind::Snr).unwrap(), &b).unwrap();
        let text = std::fs::read(&a).unwrap();
        assert_eq!(text, std::fs::read(&b).unwrap());
        assert_eq!(String::from_utf8(text).unwrap().lines().count(), 3);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sweep_points_follow_the_kind() {
        let cfg = RunConfig::parse(&format!("{SCENE}\nk = 1, 2\nsnr_db = 0, 10")).unwrap();
        let ks: Vec<usize> = sweep_points(&cfg, SweepKind::Targets).iter().map(|p| p.1.k).collect();
        assert_eq!(ks, vec![1, 2]);
        let snr: Vec<f64> = sweep_points(&cfg, SweepKind::Snr).iter().map(|p| p.1.snr_db).collect();
        assert_eq!(snr, vec![0.0, 10.0]);
        assert_eq!(sweep_points(&cfg, SweepKind::Scatter).len(), 1);
    }

    #[test]
    fn crb_rows_shrink_with_snr() {
        let cfg = RunConfig::parse(&format!("{SCENE}\nsnr_db = 0, 10, 20")).unwrap();
        let rows = crb_rows(&cfg).unwrap();
        assert!(rows[0].angle > rows[1].angle && rows[1].angle > rows[2].angle);
    }

    #[test]
    fn snapshot_csv_round_trip_and_estimate() {
        let dir = std::env::temp_dir().join(format!("emvs-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = RunConfig::parse(SCENE).unwrap();
        let scene = trial_scene(
            &cfg,
            &SweepPoint {
                snr_db: 20.0,
                snapshots: 20,
                k: 2,
            },
            0,
        )
        .unwrap();
        let y = generate_snapshots(&scene).unwrap();
        let path = dir.join("y.csv");
        write_snapshots_csv(&y, &path).unwrap();
        let back = read_snapshots_csv(&path).unwrap();
        assert_eq!(back, y);
        let est = estimate_snapshots(&cfg, &back, 2, 0).unwrap();
        assert_eq!(est.records.len(), 2);
        write_estimates_csv(&est, &dir.join("e.csv")).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
