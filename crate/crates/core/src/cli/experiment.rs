//! Experiment runners behind the `track`, `free-run` and `compare` commands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::csv;
use crate::error::{Error, Result};
use crate::plant::PlantModel;
use crate::sim::{compute_metrics, simulate, ControllerKind, Metrics, MetricsOptions, Trajectory};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub kind: ControllerKind,
    pub trajectory: Trajectory,
    pub metrics: Metrics,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_kind(cfg, cfg.controller.kind)
}

pub fn run_kind(cfg: &ExperimentConfig, kind: ControllerKind) -> Result<RunOutput> {
    let (sim, setup) = cfg.build_with(kind)?;
    let trajectory = simulate(&sim, setup)?;
    let metrics = compute_metrics(&trajectory, &MetricsOptions::for_horizon(sim.t_end))?;
    Ok(RunOutput {
        config: cfg.clone(),
        kind,
        trajectory,
        metrics,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    controller: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_db: Option<f64>,
    samples: usize,
    max_abs_state: f64,
    max_theta_norms: [f64; 3],
    metrics: &'a Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_run: Option<&'a FreeRunReport>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `<stem>.csv` and `<stem>_summary.toml` into `dir`; returns the CSV path.
pub fn write_artifacts(
    dir: &Path,
    stem: &str,
    out: &RunOutput,
    free_run: Option<&FreeRunReport>,
    long: bool,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let w = create(&csv_path)?;
    if long {
        csv::write_long(w, &out.trajectory)?;
    } else {
        csv::write_wide(w, &out.trajectory)?;
    }
    let summary = Summary {
        controller: out.kind.name(),
        seed: out.config.noise.seed,
        snr_db: out.config.noise.snr_db,
        samples: out.trajectory.len(),
        max_abs_state: out.trajectory.max_abs_state(),
        max_theta_norms: out.trajectory.max_theta_norms(),
        metrics: &out.metrics,
        free_run,
    };
    let text = toml::to_string(&summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(format!("{stem}_summary.toml")), text)?;
    Ok(csv_path)
}

/// Boundedness and recurrence statistics of an uncontrolled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeRunReport {
    pub max_abs_state: f64,
    /// Smallest distance between two stroboscopic points sharing a forcing phase.
    pub min_return_distance: f64,
    pub phases: usize,
    pub points_per_phase: usize,
}

/// States at `t = phase + k * period`, interpolated between recorded steps with
/// cubic Hermite polynomials whose slopes come from the plant equations.
pub fn stroboscopic_points(
    traj: &Trajectory,
    plant: &PlantModel,
    period: f64,
    phase: f64,
) -> Result<Vec<Vec<f64>>> {
    if traj.decimate != 1 {
        return Err(Error::InvalidParameter(
            "stroboscopic sampling needs every step recorded (decimate = 1)".into(),
        ));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period {period} must be positive"
        )));
    }
    let Some(last) = traj.samples.last() else {
        return Ok(Vec::new());
    };
    let h = traj.h;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = phase + k as f64 * period;
        if t > last.t {
            break;
        }
        let i = ((t / h).floor() as usize).min(traj.samples.len().saturating_sub(2));
        let a = &traj.samples[i];
        let b = &traj.samples[(i + 1).min(traj.samples.len() - 1)];
        if a.t == b.t {
            out.push(a.x.clone());
        } else {
            let dt = b.t - a.t;
            let tau = (t - a.t) / dt;
            let da = plant.derivative(&a.x, a.t, a.u)?;
            let db = plant.derivative(&b.x, b.t, a.u)?;
            let (t2, t3) = (tau * tau, tau * tau * tau);
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + tau;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            out.push(
                (0..a.x.len())
                    .map(|j| h00 * a.x[j] + h10 * dt * da[j] + h01 * b.x[j] + h11 * dt * db[j])
                    .collect(),
            );
        }
        k += 1;
    }
    Ok(out)
}

fn min_pairwise(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        for q in &points[..i] {
            let d = p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Checks recurrence on `phases` evenly spaced stroboscopic sections of the
/// forcing period.
pub fn free_run_report(
    traj: &Trajectory,
    plant: &PlantModel,
    period: f64,
    phases: usize,
) -> Result<FreeRunReport> {
    let mut min_return_distance = f64::INFINITY;
    let mut points_per_phase = usize::MAX;
    for p in 0..phases {
        let pts = stroboscopic_points(traj, plant, period, p as f64 * period / phases as f64)?;
        points_per_phase = points_per_phase.min(pts.len());
        min_return_distance = min_return_distance.min(min_pairwise(&pts));
    }
    Ok(FreeRunReport {
        max_abs_state: traj.max_abs_state(),
        min_return_distance,
        phases,
        points_per_phase: if phases == 0 { 0 } else { points_per_phase },
    })
}

/// Period of the Duffing forcing term `cos(1.8 t)`.
pub const DUFFING_FORCING_PERIOD: f64 = 2.0 * std::f64::consts::PI / 1.8;
pub const FREE_RUN_PHASES: usize = 64;

pub fn run_free(cfg: &ExperimentConfig) -> Result<(RunOutput, FreeRunReport)> {
    let out = run_kind(cfg, ControllerKind::None)?;
    let plant = cfg.plant_model()?;
    let report = free_run_report(
        &out.trajectory,
        &plant,
        DUFFING_FORCING_PERIOD,
        FREE_RUN_PHASES,
    )?;
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub controller: ControllerKind,
    /// Switching gain, first-order controller only.
    pub k_switch: Option<f64>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    /// Whether the first-order gain reached the RMSE target band.
    pub matched: bool,
    pub runs: Vec<RunOutput>,
}

/// RMSE band the first-order baseline is tuned into, relative to the adaptive run.
pub const RMSE_MATCH: (f64, f64) = (0.8, 1.2);
const MAX_TUNING_RUNS: usize = 60;

/// Runs the adaptive and ideal super-twisting controllers side by side, then
/// tunes the first-order switching gain until its `rmse_e1` lies within
/// `RMSE_MATCH` of the adaptive one. Noise is removed unless `keep_noise`.
pub fn run_compare(cfg: &ExperimentConfig, keep_noise: bool) -> Result<Comparison> {
    let mut cfg = cfg.clone();
    if !keep_noise {
        cfg.noise.snr_db = None;
    }
    let (adaptive, ideal) = std::thread::scope(|scope| {
        let a = scope.spawn(|| run_kind(&cfg, ControllerKind::AdaptiveT2Stc));
        let b = scope.spawn(|| run_kind(&cfg, ControllerKind::IdealStc));
        (
            a.join().expect("adaptive run panicked"),
            b.join().expect("ideal run panicked"),
        )
    });
    let (adaptive, ideal) = (adaptive?, ideal?);
    let target = adaptive.metrics.rmse_e1;
    let (first, matched) = tune_first_order(&cfg, target)?;

    let rows = vec![
        CompareRow {
            controller: ControllerKind::AdaptiveT2Stc,
            k_switch: None,
            metrics: adaptive.metrics,
        },
        CompareRow {
            controller: ControllerKind::IdealStc,
            k_switch: None,
            metrics: ideal.metrics,
        },
        CompareRow {
            controller: ControllerKind::FirstOrderSmc,
            k_switch: Some(first.config.controller.k_switch),
            metrics: first.metrics,
        },
    ];
    Ok(Comparison {
        rows,
        matched,
        runs: vec![adaptive, ideal, first],
    })
}

fn first_order(cfg: &ExperimentConfig, k: f64) -> Result<RunOutput> {
    let mut c = cfg.clone();
    c.controller.k_switch = k;
    run_kind(&c, ControllerKind::FirstOrderSmc)
}

/// Bisection on the switching gain. Larger gains give smaller tracking error,
/// so the gain is raised while RMSE is above the band and lowered while below.
/// Falls back to the closest run if the band is never hit.
pub fn tune_first_order(cfg: &ExperimentConfig, target: f64) -> Result<(RunOutput, bool)> {
    let (lo_band, hi_band) = (RMSE_MATCH.0 * target, RMSE_MATCH.1 * target);
    let score = |r: &RunOutput| (r.metrics.rmse_e1 / target).ln().abs();
    let mut best: Option<RunOutput> = None;
    let consider = |r: RunOutput, best: &mut Option<RunOutput>| {
        let hit = r.metrics.rmse_e1 >= lo_band && r.metrics.rmse_e1 <= hi_band;
        if best.as_ref().is_none_or(|b| score(&r) < score(b)) {
            *best = Some(r);
        }
        hit
    };

    let mut lo = cfg.controller.k_switch.min(1.0) * 0.5;
    let mut hi = cfg.controller.k_switch.max(1.0);
    let mut runs = 0;
    // bracket: rmse(lo) above band, rmse(hi) below band
    loop {
        let r = first_order(cfg, lo)?;
        runs += 1;
        let above = r.metrics.rmse_e1 > hi_band;
        if consider(r, &mut best) {
            return Ok((best.unwrap(), true));
        }
        if above || runs > 20 {
            break;
        }
        hi = lo;
        lo *= 0.5;
    }
    loop {
        let r = first_order(cfg, hi)?;
        runs += 1;
        let below = r.metrics.rmse_e1 < lo_band;
        if consider(r, &mut best) {
            return Ok((best.unwrap(), true));
        }
        if below || runs > 40 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    while runs < MAX_TUNING_RUNS {
        let mid = (lo * hi).sqrt();
        let r = first_order(cfg, mid)?;
        runs += 1;
        let above = r.metrics.rmse_e1 > hi_band;
        if consider(r, &mut best) {
            return Ok((best.unwrap(), true));
        }
        if above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best.expect("at least one tuning run"), false))
}

pub const COMPARE_HEADER: &str = "controller,k_switch,rmse_e1,rmse_e2,tv_u,settle_time,s_band_time";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}"))
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from(COMPARE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.controller.name(),
            opt(r.k_switch),
            r.metrics.rmse_e1,
            r.metrics.rmse_e2,
            r.metrics.tv_u,
            opt(r.metrics.settle_time),
            opt(r.metrics.s_band_time),
        ));
    }
    s
}

/// Fixed-width table for the terminal.
pub fn compare_table(rows: &[CompareRow]) -> String {
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut s = format!(
        "{:<16} {:>10} {:>12} {:>12} {:>12} {:>8} {:>8}\n",
        "controller", "k_switch", "rmse_e1", "rmse_e2", "tv_u", "settle", "s_band"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<16} {:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>8} {:>8}\n",
            r.controller.name(),
            fmt_opt(r.k_switch),
            r.metrics.rmse_e1,
            r.metrics.rmse_e2,
            r.metrics.tv_u,
            fmt_opt(r.metrics.settle_time),
            fmt_opt(r.metrics.s_band_time),
        ));
    }
    s
}

/// Writes `compare.csv` and one trajectory CSV per controller.
pub fn write_compare(dir: &Path, cmp: &Comparison, long: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for run in &cmp.runs {
        write_artifacts(
            dir,
            &format!("compare_{}", run.kind.name()),
            run,
            None,
            long,
        )?;
    }
    let path = dir.join("compare.csv");
    fs::write(&path, compare_csv(&cmp.rows))?;
    Ok(path)
}
