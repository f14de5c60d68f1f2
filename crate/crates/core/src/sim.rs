//! Fixed-step closed-loop simulation and run metrics.

use serde::{Deserialize, Serialize};

use crate::controller::{
    first_order_smc_control, ideal_stc_control, AdaptiveController, SlidingSpec, SuperTwistingGains,
};
use crate::error::{Error, Result};
use crate::plant::{MeasurementNoise, NoiseSpec, PlantModel, ReferenceSignal};

/// One classical RK4 step of `x' = deriv(x, t)`.
pub fn rk4_step<F>(mut deriv: F, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} must be positive"
        )));
    }
    let mut eval = |x: &[f64], t: f64| -> Result<Vec<f64>> {
        let d = deriv(x, t)?;
        if d.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: d.len(),
            });
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state derivative"));
        }
        Ok(d)
    };
    let axpy =
        |a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };

    let k1 = eval(x, t)?;
    let k2 = eval(&axpy(0.5 * h, &k1), t + 0.5 * h)?;
    let k3 = eval(&axpy(0.5 * h, &k2), t + 0.5 * h)?;
    let k4 = eval(&axpy(h, &k3), t + h)?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    AdaptiveT2Stc,
    IdealStc,
    FirstOrderSmc,
    None,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::AdaptiveT2Stc => "adaptive_t2_stc",
            ControllerKind::IdealStc => "ideal_stc",
            ControllerKind::FirstOrderSmc => "first_order_smc",
            ControllerKind::None => "none",
        }
    }
}

/// Control law driving a closed-loop run.
///
/// The ideal super-twisting and first-order laws use the nominal plant
/// dynamics evaluated at the measured state; the adaptive law learns them.
#[derive(Debug, Clone)]
pub enum ClosedLoopController {
    Adaptive(AdaptiveController),
    IdealStc {
        gains: SuperTwistingGains,
        u1_state: f64,
    },
    FirstOrderSmc {
        k_switch: f64,
    },
    None,
}

impl ClosedLoopController {
    pub fn ideal_stc(gains: SuperTwistingGains) -> Self {
        ClosedLoopController::IdealStc {
            gains,
            u1_state: 0.0,
        }
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            ClosedLoopController::Adaptive(_) => ControllerKind::AdaptiveT2Stc,
            ClosedLoopController::IdealStc { .. } => ControllerKind::IdealStc,
            ClosedLoopController::FirstOrderSmc { .. } => ControllerKind::FirstOrderSmc,
            ClosedLoopController::None => ControllerKind::None,
        }
    }

    fn theta_norms(&self) -> [f64; 3] {
        match self {
            ClosedLoopController::Adaptive(c) => c.theta_norms(),
            _ => [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub h: f64,
    pub x0: Vec<f64>,
    pub noise: NoiseSpec,
    pub decimate: usize,
}

impl SimConfig {
    pub const DEFAULT_STEP: f64 = 1e-3;

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 0.01) {
            return Err(Error::InvalidParameter(format!(
                "step h = {} outside (0, 0.01]",
                self.h
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        if self.decimate == 0 {
            return Err(Error::InvalidParameter("decimate must be >= 1".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

/// One recorded sample. `u` is the control held over `[t, t + h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_meas: Vec<f64>,
    pub yd: f64,
    pub yd_dot: f64,
    /// True tracking error vector.
    pub e: Vec<f64>,
    /// Sliding variable of the true error.
    pub s: f64,
    pub u: f64,
    pub theta_norms: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub h: f64,
    pub decimate: usize,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs_state(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.x.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_theta_norms(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for s in &self.samples {
            for (o, v) in out.iter_mut().zip(s.theta_norms) {
                *o = o.max(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    pub window: (f64, f64),
    /// Settling band on `|e1|`.
    pub band: f64,
    /// Band on `|s|` used for `s_band_time`.
    pub s_band: f64,
}

impl MetricsOptions {
    pub const DEFAULT_BAND: f64 = 0.05;
    pub const DEFAULT_S_BAND: f64 = 0.1;

    /// Steady-state window is the second half of the run.
    pub fn for_horizon(t_end: f64) -> Self {
        Self {
            window: (0.5 * t_end, t_end),
            band: Self::DEFAULT_BAND,
            s_band: Self::DEFAULT_S_BAND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse_e1: f64,
    pub rmse_e2: f64,
    pub tv_u: f64,
    /// `None` when the run ends outside the band.
    pub settle_time: Option<f64>,
    pub s_band_time: Option<f64>,
}

fn entry_time(samples: &[Sample], inside: impl Fn(&Sample) -> bool) -> Option<f64> {
    let last_out = samples.iter().rposition(|s| !inside(s));
    match last_out {
        None => samples.first().map(|s| s.t),
        Some(i) => samples.get(i + 1).map(|s| s.t),
    }
}

pub fn compute_metrics(traj: &Trajectory, opts: &MetricsOptions) -> Result<Metrics> {
    let (ta, tb) = opts.window;
    if !(ta < tb) {
        return Err(Error::InvalidParameter(format!(
            "empty window [{ta}, {tb}]"
        )));
    }
    let win: Vec<&Sample> = traj
        .samples
        .iter()
        .filter(|s| s.t >= ta && s.t <= tb)
        .collect();
    if win.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no samples in window [{ta}, {tb}]"
        )));
    }
    let n = win.len() as f64;
    let rms = |k: usize| {
        (win.iter()
            .map(|s| s.e.get(k).map_or(0.0, |v| v * v))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let tv_u = win.windows(2).map(|w| (w[1].u - w[0].u).abs()).sum();
    Ok(Metrics {
        rmse_e1: rms(0),
        rmse_e2: rms(1),
        tv_u,
        settle_time: entry_time(&traj.samples, |s| s.e[0].abs() <= opts.band),
        s_band_time: entry_time(&traj.samples, |s| s.s.abs() <= opts.s_band),
    })
}

/// Everything a closed-loop run needs besides its configuration.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub plant: PlantModel,
    pub sliding: SlidingSpec,
    pub reference: ReferenceSignal,
    pub controller: ClosedLoopController,
}

/// Runs the loop: measure, form `e` and `s`, compute `u`, adapt, advance the
/// true plant by one RK4 step with `u` held.
pub fn run_closed_loop(cfg: &SimConfig, setup: ClosedLoop) -> Result<(Trajectory, Metrics)> {
    let traj = simulate(cfg, setup)?;
    let metrics = compute_metrics(&traj, &MetricsOptions::for_horizon(cfg.t_end))?;
    Ok((traj, metrics))
}

pub fn simulate(cfg: &SimConfig, setup: ClosedLoop) -> Result<Trajectory> {
    cfg.validate()?;
    let ClosedLoop {
        plant,
        sliding,
        reference,
        mut controller,
    } = setup;
    let n = plant.order();
    if cfg.x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cfg.x0.len(),
        });
    }
    if sliding.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sliding.order(),
        });
    }

    let steps = cfg.steps();
    let h = cfg.h;
    let rms = if cfg.noise.snr_db.is_some() {
        reference.rms(n, cfg.t_end, h)
    } else {
        vec![0.0; n]
    };
    let mut noise = MeasurementNoise::new(&cfg.noise, &rms)?;

    let mut traj = Trajectory {
        h,
        decimate: cfg.decimate,
        samples: Vec::with_capacity(steps / cfg.decimate + 1),
    };
    let mut x = cfg.x0.clone();
    for k in 0..=steps {
        let t = k as f64 * h;
        let x_meas = noise.apply(&x)?;
        let yd = reference.state(t, n);
        let yd_n = reference.derivative(t, n as u32);
        let e_meas: Vec<f64> = x_meas.iter().zip(&yd).map(|(a, b)| a - b).collect();
        let s_meas = sliding.sliding_value(&e_meas)?;

        let mut bases = None;
        let u = match &controller {
            ClosedLoopController::Adaptive(c) => {
                let b = c.bases(&x_meas, s_meas)?;
                let out = c.output_with_bases(&sliding, &b, &e_meas, s_meas, yd_n, t)?;
                bases = Some(b);
                out.u
            }
            ClosedLoopController::IdealStc { gains, u1_state } => {
                let f = plant.f_nominal(&x_meas, t);
                ideal_stc_control(&sliding, gains, f, yd_n, &e_meas, s_meas, *u1_state)?.0
            }
            ClosedLoopController::FirstOrderSmc { k_switch } => {
                let f = plant.f_nominal(&x_meas, t);
                first_order_smc_control(&sliding, f, yd_n, &e_meas, s_meas, *k_switch)?
            }
            ClosedLoopController::None => 0.0,
        };
        if !u.is_finite() {
            return Err(Error::Divergence { step: k, t });
        }

        if k % cfg.decimate == 0 {
            let e: Vec<f64> = x.iter().zip(&yd).map(|(a, b)| a - b).collect();
            traj.samples.push(Sample {
                t,
                s: sliding.sliding_value(&e)?,
                x: x.clone(),
                x_meas,
                yd: yd[0],
                yd_dot: yd[1],
                e,
                u,
                theta_norms: controller.theta_norms(),
            });
        }
        if k == steps {
            break;
        }

        match &mut controller {
            ClosedLoopController::Adaptive(c) => {
                let b = bases.take().expect("bases computed for adaptive law");
                c.adapt_with_bases(&b, s_meas, t, h)?;
            }
            ClosedLoopController::IdealStc { gains, u1_state } => {
                *u1_state += h * -gains.lambda1 * crate::controller::sign(s_meas);
            }
            _ => {}
        }

        x = match rk4_step(|x, t| plant.derivative(x, t, u), &x, t, h) {
            Ok(next) => next,
            Err(Error::NonFinite(_)) => {
                return Err(Error::Divergence {
                    step: k + 1,
                    t: t + h,
                })
            }
            Err(e) => return Err(e),
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k + 1,
                t: t + h,
            });
        }
    }
    Ok(traj)
}

/// Largest gap between the finite-difference slope of `s` and
/// `e^(n) + delta_s` rebuilt from the plant equations.
///
/// Each pair of consecutive samples is compared at its midpoint, where the
/// held control makes the forward difference second-order accurate. Needs an
/// undecimated, noise-free trajectory.
pub fn sliding_consistency_check(
    traj: &Trajectory,
    spec: &SlidingSpec,
    plant: &PlantModel,
    reference: &ReferenceSignal,
) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "trajectory too short for differencing".into(),
        ));
    }
    if traj.decimate != 1 {
        return Err(Error::InvalidParameter(
            "sliding consistency needs every step recorded (decimate = 1)".into(),
        ));
    }
    let n = plant.order();
    let mut worst = 0.0f64;
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let slope = (b.s - a.s) / dt;
        let tm = 0.5 * (a.t + b.t);
        let xm: Vec<f64> = a.x.iter().zip(&b.x).map(|(p, q)| 0.5 * (p + q)).collect();
        let yd = reference.state(tm, n);
        let em: Vec<f64> = xm.iter().zip(&yd).map(|(p, q)| p - q).collect();
        let e_n = plant.drift(&xm, tm) + a.u - reference.derivative(tm, n as u32);
        let rhs = e_n + spec.delta_s(&em)?;
        worst = worst.max((slope - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, e1: f64, u: f64) -> Sample {
        Sample {
            t,
            x: vec![e1, 0.0],
            x_meas: vec![e1, 0.0],
            yd: 0.0,
            yd_dot: 0.0,
            e: vec![e1, 0.0],
            s: 10.0 * e1,
            u,
            theta_norms: [0.0; 3],
        }
    }

    fn traj(samples: Vec<Sample>) -> Trajectory {
        Trajectory {
            h: 0.1,
            decimate: 1,
            samples,
        }
    }

    #[test]
    fn rk4_constant_state() {
        let x = rk4_step(|x, _| Ok(vec![0.0; x.len()]), &[1.5, -2.0], 0.0, 0.1).unwrap();
        assert_eq!(x, vec![1.5, -2.0]);
    }

    #[test]
    fn rk4_exponential_local_error() {
        let a = -1.3;
        for h in [0.1, 0.05, 0.025] {
            let x = rk4_step(|x, _| Ok(vec![a * x[0]]), &[2.0], 0.0, h).unwrap();
            let exact = 2.0 * (a * h).exp();
            // local error is (a h)^5 / 120 * x0 to leading order
            assert!((x[0] - exact).abs() <= 2.0 * (a * h).abs().powi(5) / 120.0 * 1.1);
        }
    }

    #[test]
    fn rk4_harmonic_energy() {
        let mut x = vec![1.0, 0.0];
        for k in 0..10_000 {
            x = rk4_step(|x, _| Ok(vec![x[1], -x[0]]), &x, k as f64 * 1e-3, 1e-3).unwrap();
        }
        let energy = 0.5 * (x[0] * x[0] + x[1] * x[1]);
        assert!(((energy - 0.5) / 0.5).abs() < 1e-8);
    }

    #[test]
    fn rk4_rejects_non_finite() {
        let r = rk4_step(|_, _| Ok(vec![f64::NAN]), &[0.0], 0.0, 0.1);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn metrics_zero_error() {
        let tr = traj((0..11).map(|k| sample(k as f64, 0.0, 1.0)).collect());
        let m = compute_metrics(
            &tr,
            &MetricsOptions {
                window: (0.0, 10.0),
                band: 0.05,
                s_band: 0.1,
            },
        )
        .unwrap();
        assert_eq!(m.rmse_e1, 0.0);
        assert_eq!(m.tv_u, 0.0);
        assert_eq!(m.settle_time, Some(0.0));
    }

    #[test]
    fn metrics_alternating_tv() {
        let k_amp = 1.5;
        let n = 9;
        let tr = traj(
            (0..n)
                .map(|k| sample(k as f64, 0.0, if k % 2 == 0 { k_amp } else { -k_amp }))
                .collect(),
        );
        let m = compute_metrics(
            &tr,
            &MetricsOptions {
                window: (0.0, 100.0),
                band: 0.05,
                s_band: 0.1,
            },
        )
        .unwrap();
        assert_eq!(m.tv_u, 2.0 * k_amp * (n - 1) as f64);
    }

    #[test]
    fn metrics_settle_time() {
        let e = [1.0, 0.5, 0.01, 0.2, 0.01, 0.0];
        let tr = traj(
            e.iter()
                .enumerate()
                .map(|(k, &v)| sample(k as f64, v, 0.0))
                .collect(),
        );
        let opts = MetricsOptions {
            window: (0.0, 5.0),
            band: 0.05,
            s_band: 0.1,
        };
        let m = compute_metrics(&tr, &opts).unwrap();
        assert_eq!(m.settle_time, Some(4.0));
        let rms = (e.iter().map(|v| v * v).sum::<f64>() / 6.0).sqrt();
        assert!((m.rmse_e1 - rms).abs() < 1e-15);

        let tr = traj(vec![sample(0.0, 0.0, 0.0), sample(1.0, 1.0, 0.0)]);
        assert_eq!(compute_metrics(&tr, &opts).unwrap().settle_time, None);
    }

    #[test]
    fn metrics_empty_window() {
        let tr = traj(vec![sample(0.0, 0.0, 0.0)]);
        let opts = MetricsOptions {
            window: (5.0, 6.0),
            band: 0.05,
            s_band: 0.1,
        };
        assert!(compute_metrics(&tr, &opts).is_err());
        let opts = MetricsOptions {
            window: (6.0, 5.0),
            ..opts
        };
        assert!(compute_metrics(&tr, &opts).is_err());
    }

    #[test]
    fn sim_config_validation() {
        let mut cfg = SimConfig {
            t_end: 1.0,
            h: 1e-3,
            x0: vec![0.0, 0.0],
            noise: NoiseSpec::none(),
            decimate: 1,
        };
        assert!(cfg.validate().is_ok());
        cfg.h = 0.02;
        assert!(cfg.validate().is_err());
        cfg.h = 1e-3;
        cfg.decimate = 0;
        assert!(cfg.validate().is_err());
        cfg.decimate = 1;
        cfg.t_end = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn consistency_constant_error() {
        // Zero plant: x' = (x2, u) with u = 0, zero reference, state at rest.
        let plant = PlantModel::new(2, vec![], None, None, 1.0).unwrap();
        let spec = SlidingSpec::new(2, 10.0).unwrap();
        let tr = traj(
            (0..5)
                .map(|k| {
                    let mut s = sample(k as f64 * 1e-3, 0.3, 0.0);
                    s.s = 3.0;
                    s
                })
                .collect(),
        );
        let dev = sliding_consistency_check(&tr, &spec, &plant, &ReferenceSignal::zero()).unwrap();
        assert_eq!(dev, 0.0);
        let short = traj(vec![sample(0.0, 0.0, 0.0)]);
        assert!(
            sliding_consistency_check(&short, &spec, &plant, &ReferenceSignal::zero()).is_err()
        );
    }
}
