//! Sliding-surface algebra and the sliding-mode control laws.
//!
//! All laws are written against the error dynamics
//! `s' = delta_s + f + df + d + u - y_d^(n)`, so the nominal part of each law
//! is `-f + y_d^(n) - delta_s` and the closed loop reduces to
//! `s' = (reaching terms) + (approximation error) + D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::it2fls::FuzzyApproximator;

/// `sign` with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Linear sliding manifold `s = (d/dt + lambda)^(n-1) e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlidingSpec {
    n: usize,
    lambda: f64,
}

impl SlidingSpec {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "sliding order n = {n} < 2"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        Ok(Self { n, lambda })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn check(&self, e: &[f64]) -> Result<()> {
        if e.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: e.len(),
            });
        }
        Ok(())
    }

    /// `e` holds `(e, e', ..., e^(n-1))`.
    pub fn sliding_value(&self, e: &[f64]) -> Result<f64> {
        self.check(e)?;
        let m = self.n - 1;
        Ok((0..=m)
            .map(|k| binomial(m, k) * self.lambda.powi(k as i32) * e[m - k])
            .sum())
    }

    /// Part of `s'` that does not involve `e^(n)`, so `s' = e^(n) + delta_s`.
    pub fn delta_s(&self, e: &[f64]) -> Result<f64> {
        self.check(e)?;
        let m = self.n - 1;
        Ok((1..=m)
            .map(|k| binomial(m, k) * self.lambda.powi(k as i32) * e[self.n - k])
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperTwistingGains {
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    /// Lumped uncertainty bound.
    pub delta: f64,
}

impl SuperTwistingGains {
    pub fn new(lambda1: f64, lambda2: f64, eta: f64, delta: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0 && eta > 0.0 && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "super-twisting gains must be positive (lambda1={lambda1}, lambda2={lambda2}, eta={eta}, delta={delta})"
            )));
        }
        Ok(Self {
            lambda1,
            lambda2,
            eta,
            delta,
        })
    }

    /// `lambda1 t + lambda2 |s|^(1/2) >= eta + delta`
    pub fn feasible(&self, s: f64, t: f64) -> bool {
        self.lambda1 * t + self.lambda2 * s.abs().sqrt() >= self.eta + self.delta
    }
}

pub fn stc_gain_feasible(g: &SuperTwistingGains, s: f64, t: f64) -> bool {
    g.feasible(s, t)
}

/// Super-twisting law with known nominal dynamics.
///
/// Returns `(u, u1_dot)` where `u1_dot` drives the integral term `u1_state`.
pub fn ideal_stc_control(
    spec: &SlidingSpec,
    g: &SuperTwistingGains,
    f_true: f64,
    ydd: f64,
    e: &[f64],
    s: f64,
    u1_state: f64,
) -> Result<(f64, f64)> {
    let delta_s = spec.delta_s(e)?;
    let u1_dot = -g.lambda1 * sign(s);
    let u2 = -g.lambda2 * s.abs().sqrt() * sign(s);
    let u = -f_true + ydd - delta_s + u1_state + u2;
    Ok((u, u1_dot))
}

/// Classical discontinuous law `u = u_eq - k sign(s)`.
pub fn first_order_smc_control(
    spec: &SlidingSpec,
    f_known: f64,
    ydd: f64,
    e: &[f64],
    s: f64,
    k_switch: f64,
) -> Result<f64> {
    let delta_s = spec.delta_s(e)?;
    Ok(-f_known + ydd - delta_s - k_switch * sign(s))
}

/// Radial projection onto the ball of the given radius.
pub fn project_params(theta: &[f64], radius: f64) -> Vec<f64> {
    let mut out = theta.to_vec();
    project_in_place(&mut out, radius);
    out
}

pub fn project_in_place(theta: &mut [f64], radius: f64) {
    let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= radius {
        return;
    }
    if radius <= 0.0 {
        theta.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let scale = radius / norm;
    theta.iter_mut().for_each(|v| *v *= scale);
    // Rounding can leave the norm a few ulps above the radius.
    while theta.iter().map(|v| v * v).sum::<f64>().sqrt() > radius {
        theta.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationGains {
    pub gamma_f: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRadii {
    pub f: f64,
    pub u1: f64,
    pub u2: f64,
}

impl Default for ProjectionRadii {
    fn default() -> Self {
        Self {
            f: 100.0,
            u1: 100.0,
            u2: 100.0,
        }
    }
}

/// Basis vectors evaluated at one `(x, s)` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Bases {
    pub xi_f: Vec<f64>,
    pub xi_1: Vec<f64>,
    pub xi_2: Vec<f64>,
}

/// Terms of the adaptive law at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOutput {
    pub u: f64,
    pub f_hat: f64,
    pub u1_hat: f64,
    pub u2_hat: f64,
}

/// Adaptive type-2 fuzzy super-twisting controller.
///
/// `f_hat(x) = theta_f . xi_f(x)` replaces the unknown dynamics,
/// `u1_hat = theta_1 . xi_1(s) * t` and `u2_hat = |s|^(1/2) theta_2 . xi_2(s)`
/// replace the two super-twisting terms. `t` is the elapsed time since the
/// controller started and is never reset.
#[derive(Debug, Clone)]
pub struct AdaptiveController {
    f_hat: FuzzyApproximator,
    u1_hat: FuzzyApproximator,
    u2_hat: FuzzyApproximator,
    gains: AdaptationGains,
    projection: Option<ProjectionRadii>,
}

impl AdaptiveController {
    pub fn new(
        f_hat: FuzzyApproximator,
        u1_hat: FuzzyApproximator,
        u2_hat: FuzzyApproximator,
        gains: AdaptationGains,
        projection: Option<ProjectionRadii>,
    ) -> Result<Self> {
        if !(gains.gamma_f > 0.0 && gains.gamma_1 > 0.0 && gains.gamma_2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "adaptation gains must be positive: {gains:?}"
            )));
        }
        if u1_hat.rulebase().inputs() != 1 || u2_hat.rulebase().inputs() != 1 {
            return Err(Error::InvalidParameter(
                "super-twisting approximators take the scalar s as input".into(),
            ));
        }
        if let Some(p) = projection {
            if !(p.f >= 0.0 && p.u1 >= 0.0 && p.u2 >= 0.0) {
                return Err(Error::InvalidParameter(
                    "projection radii must be >= 0".into(),
                ));
            }
        }
        let mut ctrl = Self {
            f_hat,
            u1_hat,
            u2_hat,
            gains,
            projection,
        };
        ctrl.project();
        Ok(ctrl)
    }

    pub fn f_hat(&self) -> &FuzzyApproximator {
        &self.f_hat
    }

    pub fn u1_hat(&self) -> &FuzzyApproximator {
        &self.u1_hat
    }

    pub fn u2_hat(&self) -> &FuzzyApproximator {
        &self.u2_hat
    }

    pub fn gains(&self) -> AdaptationGains {
        self.gains
    }

    pub fn projection(&self) -> Option<ProjectionRadii> {
        self.projection
    }

    /// `(|theta_f|, |theta_1|, |theta_2|)`
    pub fn theta_norms(&self) -> [f64; 3] {
        [
            self.f_hat.theta_norm(),
            self.u1_hat.theta_norm(),
            self.u2_hat.theta_norm(),
        ]
    }

    pub fn bases(&self, x: &[f64], s: f64) -> Result<Bases> {
        Ok(Bases {
            xi_f: self.f_hat.basis(x)?,
            xi_1: self.u1_hat.basis(&[s])?,
            xi_2: self.u2_hat.basis(&[s])?,
        })
    }

    pub fn output_with_bases(
        &self,
        spec: &SlidingSpec,
        b: &Bases,
        e: &[f64],
        s: f64,
        ydd: f64,
        t: f64,
    ) -> Result<AdaptiveOutput> {
        let delta_s = spec.delta_s(e)?;
        let f_hat = self.f_hat.eval_with_basis(&b.xi_f);
        let u1_hat = self.u1_hat.eval_with_basis(&b.xi_1) * t;
        let u2_hat = s.abs().sqrt() * self.u2_hat.eval_with_basis(&b.xi_2);
        let u = -f_hat + ydd - delta_s + u1_hat + u2_hat;
        Ok(AdaptiveOutput {
            u,
            f_hat,
            u1_hat,
            u2_hat,
        })
    }

    pub fn control(
        &self,
        spec: &SlidingSpec,
        x: &[f64],
        e: &[f64],
        s: f64,
        ydd: f64,
        t: f64,
    ) -> Result<f64> {
        let b = self.bases(x, s)?;
        Ok(self.output_with_bases(spec, &b, e, s, ydd, t)?.u)
    }

    /// Explicit Euler step of the three adaptation laws, then projection.
    pub fn adapt_step(&mut self, s: f64, x: &[f64], t: f64, h: f64) -> Result<()> {
        let b = self.bases(x, s)?;
        self.adapt_with_bases(&b, s, t, h)
    }

    pub fn adapt_with_bases(&mut self, b: &Bases, s: f64, t: f64, h: f64) -> Result<()> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step h = {h} must be positive"
            )));
        }
        let g = self.gains;
        let kf = h * g.gamma_f * s;
        for (th, xi) in self.f_hat.theta_mut().iter_mut().zip(&b.xi_f) {
            *th += kf * xi;
        }
        let k1 = h * g.gamma_1 * s * t;
        for (th, xi) in self.u1_hat.theta_mut().iter_mut().zip(&b.xi_1) {
            *th -= k1 * xi;
        }
        let k2 = h * g.gamma_2 * s * s.abs().sqrt();
        for (th, xi) in self.u2_hat.theta_mut().iter_mut().zip(&b.xi_2) {
            *th -= k2 * xi;
        }
        self.project();
        Ok(())
    }

    fn project(&mut self) {
        if let Some(p) = self.projection {
            project_in_place(self.f_hat.theta_mut(), p.f);
            project_in_place(self.u1_hat.theta_mut(), p.u1);
            project_in_place(self.u2_hat.theta_mut(), p.u2);
        }
    }
}
