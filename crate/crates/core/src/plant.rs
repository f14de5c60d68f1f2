//! Affine chain-form plants, reference trajectories and measurement noise.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time factor of a nominal-dynamics term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Trig {
    None,
    Sin { omega: f64 },
    Cos { omega: f64 },
}

impl Trig {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            Trig::None => 1.0,
            Trig::Sin { omega } => (omega * t).sin(),
            Trig::Cos { omega } => (omega * t).cos(),
        }
    }
}

/// `coef * prod_j x_j^powers[j] * trig(t)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
    #[serde(default = "no_trig")]
    pub trig: Trig,
}

fn no_trig() -> Trig {
    Trig::None
}

impl Term {
    pub fn new(coef: f64, powers: Vec<u32>, trig: Trig) -> Self {
        Self { coef, powers, trig }
    }

    fn eval(&self, x: &[f64], t: f64) -> f64 {
        let mono: f64 = self
            .powers
            .iter()
            .zip(x)
            .map(|(&p, &xi)| xi.powi(p as i32))
            .product();
        self.coef * mono * self.trig.eval(t)
    }
}

/// Parametric uncertainty `amplitude * prod_j sin(freqs[j] * x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uncertainty {
    pub amplitude: f64,
    pub freqs: Vec<f64>,
}

/// External disturbance `amplitude * sin(omega * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub amplitude: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantBounds {
    /// Bound on the nominal dynamics (sanity monitors only).
    pub f: f64,
    pub delta_f: f64,
    pub delta_d: f64,
}

impl PlantBounds {
    /// Lumped uncertainty bound `delta_f + delta_d`.
    pub fn lumped(&self) -> f64 {
        self.delta_f + self.delta_d
    }
}

pub const DEFAULT_F_BOUND: f64 = 50.0;

/// `x_i' = x_{i+1}`, `x_n' = f(x, t) + df(x, t) + d(t) + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    order: usize,
    nominal: Vec<Term>,
    uncertainty: Option<Uncertainty>,
    disturbance: Option<Disturbance>,
    f_bound: f64,
}

impl PlantModel {
    pub fn new(
        order: usize,
        nominal: Vec<Term>,
        uncertainty: Option<Uncertainty>,
        disturbance: Option<Disturbance>,
        f_bound: f64,
    ) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "plant order must be at least 2, got {order}"
            )));
        }
        for term in &nominal {
            if term.powers.len() > order {
                return Err(Error::DimensionMismatch {
                    expected: order,
                    got: term.powers.len(),
                });
            }
        }
        if let Some(unc) = &uncertainty {
            if unc.freqs.len() > order {
                return Err(Error::DimensionMismatch {
                    expected: order,
                    got: unc.freqs.len(),
                });
            }
        }
        if !(f_bound > 0.0) {
            return Err(Error::InvalidParameter("f bound must be positive".into()));
        }
        Ok(Self {
            order,
            nominal,
            uncertainty,
            disturbance,
            f_bound,
        })
    }

    /// Forced Duffing oscillator with its sinusoidal uncertainty and
    /// disturbance.
    pub fn duffing() -> Self {
        let nominal = vec![
            Term::new(-0.4, vec![0, 1], Trig::None),
            Term::new(-1.1, vec![1, 0], Trig::None),
            Term::new(-1.0, vec![3, 0], Trig::None),
            Term::new(-2.1, vec![0, 0], Trig::Cos { omega: 1.8 }),
        ];
        let uncertainty = Uncertainty {
            amplitude: PI / 6.0,
            freqs: vec![2.0 * PI, 3.0 * PI],
        };
        let disturbance = Disturbance {
            amplitude: 1.0,
            omega: 2.0,
        };
        Self::new(
            2,
            nominal,
            Some(uncertainty),
            Some(disturbance),
            DEFAULT_F_BOUND,
        )
        .expect("duffing preset is valid")
    }

    /// Same plant with uncertainty and disturbance removed.
    pub fn nominal_only(&self) -> Self {
        Self {
            uncertainty: None,
            disturbance: None,
            ..self.clone()
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nominal_terms(&self) -> &[Term] {
        &self.nominal
    }

    pub fn uncertainty(&self) -> Option<&Uncertainty> {
        self.uncertainty.as_ref()
    }

    pub fn disturbance(&self) -> Option<&Disturbance> {
        self.disturbance.as_ref()
    }

    pub fn bounds(&self) -> PlantBounds {
        PlantBounds {
            f: self.f_bound,
            delta_f: self.uncertainty.as_ref().map_or(0.0, |u| u.amplitude.abs()),
            delta_d: self.disturbance.as_ref().map_or(0.0, |d| d.amplitude.abs()),
        }
    }

    pub fn f_nominal(&self, x: &[f64], t: f64) -> f64 {
        self.nominal.iter().map(|term| term.eval(x, t)).sum()
    }

    pub fn delta_f(&self, x: &[f64], _t: f64) -> f64 {
        match &self.uncertainty {
            Some(u) => {
                u.amplitude
                    * u.freqs
                        .iter()
                        .zip(x)
                        .map(|(w, xi)| (w * xi).sin())
                        .product::<f64>()
            }
            None => 0.0,
        }
    }

    pub fn disturbance_at(&self, t: f64) -> f64 {
        match &self.disturbance {
            Some(d) => d.amplitude * (d.omega * t).sin(),
            None => 0.0,
        }
    }

    /// Highest state derivative without the control input.
    pub fn drift(&self, x: &[f64], t: f64) -> f64 {
        self.f_nominal(x, t) + self.delta_f(x, t) + self.disturbance_at(t)
    }

    pub fn derivative(&self, x: &[f64], t: f64, u: f64) -> Result<Vec<f64>> {
        let mut dx = vec![0.0; self.order];
        self.derivative_into(x, t, u, &mut dx)?;
        Ok(dx)
    }

    pub fn derivative_into(&self, x: &[f64], t: f64, u: f64, dx: &mut [f64]) -> Result<()> {
        if x.len() != self.order || dx.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                got: x.len(),
            });
        }
        dx[..self.order - 1].copy_from_slice(&x[1..]);
        dx[self.order - 1] = self.drift(x, t) + u;
        Ok(())
    }
}

/// `y_d(t) = scale * sum_k a_k sin(omega_k t)` with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSignal {
    pub scale: f64,
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl ReferenceSignal {
    pub fn new(scale: f64, amplitudes: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != frequencies.len() {
            return Err(Error::DimensionMismatch {
                expected: amplitudes.len(),
                got: frequencies.len(),
            });
        }
        Ok(Self {
            scale,
            amplitudes,
            frequencies,
        })
    }

    /// `(pi/3)(sin t + 0.3 sin 3t)`
    pub fn preset() -> Self {
        Self {
            scale: PI / 3.0,
            amplitudes: vec![1.0, 0.3],
            frequencies: vec![1.0, 3.0],
        }
    }

    pub fn zero() -> Self {
        Self {
            scale: 0.0,
            amplitudes: vec![],
            frequencies: vec![],
        }
    }

    /// `k`-th time derivative of `y_d` at `t`.
    pub fn derivative(&self, t: f64, k: u32) -> f64 {
        let phase = k as f64 * FRAC_PI_2;
        self.scale
            * self
                .amplitudes
                .iter()
                .zip(&self.frequencies)
                .map(|(a, w)| a * w.powi(k as i32) * (w * t + phase).sin())
                .sum::<f64>()
    }

    /// `(y_d, y_d', y_d'')`
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        (
            self.derivative(t, 0),
            self.derivative(t, 1),
            self.derivative(t, 2),
        )
    }

    /// Desired state vector `(y_d, y_d', ..., y_d^(n-1))`.
    pub fn state(&self, t: f64, n: usize) -> Vec<f64> {
        (0..n as u32).map(|k| self.derivative(t, k)).collect()
    }

    /// RMS of each of the first `n` derivatives over `[0, t_end]` on an `h` grid.
    pub fn rms(&self, n: usize, t_end: f64, h: f64) -> Vec<f64> {
        let steps = (t_end / h).round() as usize;
        (0..n as u32)
            .map(|k| {
                let sum: f64 = (0..=steps)
                    .map(|i| self.derivative(i as f64 * h, k).powi(2))
                    .sum();
                (sum / (steps + 1) as f64).sqrt()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            snr_db: None,
            seed: 0,
        }
    }
}

/// Seeded additive white Gaussian measurement noise.
#[derive(Debug, Clone)]
pub struct MeasurementNoise {
    std: Option<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl MeasurementNoise {
    /// Per-channel std is `signal_rms * 10^(-snr_db / 20)`.
    pub fn new(spec: &NoiseSpec, signal_rms: &[f64]) -> Result<Self> {
        let std = match spec.snr_db {
            None => None,
            Some(snr) => {
                if !snr.is_finite() {
                    return Err(Error::InvalidParameter(format!("snr_db = {snr}")));
                }
                if let Some(bad) = signal_rms.iter().find(|&&r| !(r > 0.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "signal rms must be positive, got {bad}"
                    )));
                }
                let factor = 10f64.powf(-snr / 20.0);
                Some(signal_rms.iter().map(|r| r * factor).collect())
            }
        };
        Ok(Self {
            std,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        })
    }

    pub fn std(&self) -> Option<&[f64]> {
        self.std.as_deref()
    }

    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let Some(std) = &self.std else {
            return Ok(x.to_vec());
        };
        if std.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: std.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(std)
            .map(|(xi, s)| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                xi + s * z
            })
            .collect())
    }
}

/// One-shot helper: a fresh generator from `spec` applied to `x`.
pub fn add_measurement_noise(x: &[f64], spec: &NoiseSpec, signal_rms: &[f64]) -> Result<Vec<f64>> {
    MeasurementNoise::new(spec, signal_rms)?.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duffing_nominal_values() {
        let p = PlantModel::duffing();
        assert!((p.f_nominal(&[1.0, 0.0], 0.0) + 4.2).abs() < 1e-12);
        for x1 in [-3.0, -0.2, 0.0, 0.7, 2.5] {
            assert_eq!(p.delta_f(&[x1, 0.0], 1.0), 0.0);
        }
        assert_eq!(p.disturbance_at(0.0), 0.0);
        let b = p.bounds();
        assert!((b.delta_f - PI / 6.0).abs() < 1e-15);
        assert_eq!(b.delta_d, 1.0);
        assert_eq!(b.f, 50.0);
    }

    #[test]
    fn derivative_chain() {
        let p = PlantModel::duffing();
        let dx = p.derivative(&[1.0, 0.0], 0.0, 0.0).unwrap();
        assert_eq!(dx[0], 0.0);
        assert!((dx[1] + 4.2).abs() < 1e-12);
        let dx = p.derivative(&[1.0, 0.0], 0.0, 4.2).unwrap();
        assert!(dx[1].abs() < 1e-12);

        let bare = p.nominal_only();
        for t in [0.0, 0.4, 3.3] {
            let dx = bare.derivative(&[0.0, 1.0], t, 0.0).unwrap();
            assert_eq!(dx[0], 1.0);
            assert_eq!(dx[1], bare.f_nominal(&[0.0, 1.0], t));
        }
        assert!(p.derivative(&[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn reference_values() {
        let r = ReferenceSignal::preset();
        let (y, yd, ydd) = r.eval(0.0);
        assert!(y.abs() < 1e-15);
        assert!((yd - PI / 3.0 * 1.9).abs() < 1e-14);
        assert!((yd - 1.98968).abs() < 1e-5);
        assert!(ydd.abs() < 1e-14);
        for t in [0.3, 1.0, 7.7] {
            assert!((r.derivative(-t, 0) + r.derivative(t, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn reference_closed_forms() {
        let r = ReferenceSignal::preset();
        let c = PI / 3.0;
        for t in [0.0, 0.5, 2.0, 9.1] {
            let (y, yd, ydd) = r.eval(t);
            assert!((y - c * (t.sin() + 0.3 * (3.0 * t).sin())).abs() < 1e-14);
            assert!((yd - c * (t.cos() + 0.9 * (3.0 * t).cos())).abs() < 1e-14);
            assert!((ydd - c * (-t.sin() - 2.7 * (3.0 * t).sin())).abs() < 1e-13);
        }
    }

    #[test]
    fn reference_central_difference() {
        let r = ReferenceSignal::preset();
        let t = 1.0;
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let fd = (r.derivative(t + h, 0) - r.derivative(t - h, 0)) / (2.0 * h);
            let err = (fd - r.derivative(t, 1)).abs();
            // third derivative bounded by (pi/3)(1 + 8.1)
            assert!(err <= PI / 3.0 * 9.1 * h * h / 6.0 + 1e-12);
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn noise_off_is_identity() {
        let x = [0.25, -1.5];
        assert_eq!(
            add_measurement_noise(&x, &NoiseSpec::none(), &[1.0, 1.0]).unwrap(),
            x
        );
    }

    #[test]
    fn noise_std_scaling() {
        let spec = NoiseSpec {
            snr_db: Some(20.0),
            seed: 3,
        };
        let n = MeasurementNoise::new(&spec, &[2.0, 0.5]).unwrap();
        let std = n.std().unwrap();
        assert!((std[0] - 0.2).abs() < 1e-15);
        assert!((std[1] - 0.05).abs() < 1e-15);
        assert!(MeasurementNoise::new(&spec, &[0.0, 1.0]).is_err());
        assert!(MeasurementNoise::new(&NoiseSpec::none(), &[0.0]).is_ok());
    }

    #[test]
    fn noise_deterministic() {
        let spec = NoiseSpec {
            snr_db: Some(10.0),
            seed: 42,
        };
        let mut a = MeasurementNoise::new(&spec, &[1.0]).unwrap();
        let mut b = MeasurementNoise::new(&spec, &[1.0]).unwrap();
        for _ in 0..100 {
            assert_eq!(a.apply(&[0.0]).unwrap(), b.apply(&[0.0]).unwrap());
        }
    }
}
