//! Experiment configuration.
//!
//! The document is TOML. Every key lives under one of the sections `plant`,
//! `reference`, `controller`, `mf`, `sim`, `noise` and `output`, so keys can be
//! written either as `[controller]` tables or as dotted keys such as
//! `controller.gamma_f = 15.0`. Unknown keys are rejected.
//!
//! Required keys: `plant.preset`, `controller.kind`, `sim.t_end`, `sim.x0`.
//! Everything else defaults to the `duffing-track` values, except `noise`
//! which defaults to noise-free.

use serde::{Deserialize, Serialize};

use super::presets;
use crate::controller::{
    AdaptationGains, AdaptiveController, ProjectionRadii, SlidingSpec, SuperTwistingGains,
};
use crate::error::{Error, Result};
use crate::it2fls::{FuzzyApproximator, IT2GaussianSet, Rulebase};
use crate::plant::{
    Disturbance, NoiseSpec, PlantModel, ReferenceSignal, Term, Uncertainty, DEFAULT_F_BOUND,
};
use crate::sim::{ClosedLoop, ClosedLoopController, ControllerKind, SimConfig};

pub const REQUIRED_KEYS: [&str; 4] = ["plant.preset", "controller.kind", "sim.t_end", "sim.x0"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    #[serde(default = "presets::reference")]
    pub reference: ReferenceSignal,
    pub controller: ControllerConfig,
    #[serde(default = "presets::mf")]
    pub mf: MfConfig,
    pub sim: SimSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantPreset {
    Duffing,
    Custom,
}

/// Custom plants give `order` and the nominal `terms`
/// (`coef * x1^a * x2^b * trig(omega t)`); uncertainty and disturbance are
/// optional. For the Duffing preset, `uncertainty` and `disturbance` override
/// the built-in ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub preset: PlantPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default = "default_f_bound")]
    pub f_bound: f64,
    /// Drop uncertainty and disturbance.
    #[serde(default)]
    pub nominal_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Uncertainty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<Disturbance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Term>>,
}

fn default_f_bound() -> f64 {
    DEFAULT_F_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    #[serde(default = "d::lambda")]
    pub lambda: f64,
    #[serde(default = "d::gamma_f")]
    pub gamma_f: f64,
    #[serde(default = "d::gamma_1")]
    pub gamma_1: f64,
    #[serde(default = "d::gamma_2")]
    pub gamma_2: f64,
    #[serde(default = "d::lambda1")]
    pub lambda1: f64,
    #[serde(default = "d::lambda2")]
    pub lambda2: f64,
    #[serde(default = "d::eta")]
    pub eta: f64,
    #[serde(default = "d::k_switch")]
    pub k_switch: f64,
    #[serde(default = "d::yes")]
    pub projection: bool,
    #[serde(default = "d::radius_f")]
    pub radius_f: f64,
    #[serde(default = "d::radius_1")]
    pub radius_1: f64,
    #[serde(default = "d::radius_2")]
    pub radius_2: f64,
}

mod d {
    use super::presets as p;
    pub fn lambda() -> f64 {
        p::SLIDING_LAMBDA
    }
    pub fn gamma_f() -> f64 {
        p::GAMMA_F
    }
    pub fn gamma_1() -> f64 {
        p::GAMMA_1
    }
    pub fn gamma_2() -> f64 {
        p::GAMMA_2
    }
    pub fn lambda1() -> f64 {
        p::STC_LAMBDA1
    }
    pub fn lambda2() -> f64 {
        p::STC_LAMBDA2
    }
    pub fn eta() -> f64 {
        p::STC_ETA
    }
    pub fn k_switch() -> f64 {
        p::FIRST_ORDER_K
    }
    pub fn yes() -> bool {
        true
    }
    pub fn radius_f() -> f64 {
        p::RADIUS_F
    }
    pub fn radius_1() -> f64 {
        p::RADIUS_1
    }
    pub fn radius_2() -> f64 {
        p::RADIUS_2
    }
    pub fn step() -> f64 {
        p::STEP
    }
    pub fn one() -> usize {
        1
    }
    pub fn seed() -> u64 {
        p::DEFAULT_SEED
    }
}

/// Antecedent tables: `(m1, m2)` pairs with one spread per input kind.
/// The x-sets are shared by every state input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfConfig {
    pub x_sigma: f64,
    pub x_means: Vec<[f64; 2]>,
    pub s_sigma: f64,
    pub s_means: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_end: f64,
    #[serde(default = "d::step")]
    pub step: f64,
    pub x0: Vec<f64>,
    #[serde(default = "d::one")]
    pub decimate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default = "d::seed")]
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            snr_db: None,
            seed: presets::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Command line overrides applied on top of a preset or file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub snr_db: Option<f64>,
    pub decimate: Option<usize>,
    pub out: Option<String>,
}

fn missing_keys(table: &toml::Table) -> Vec<&'static str> {
    REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|path| {
            let (section, key) = path.split_once('.').expect("dotted key");
            !table
                .get(section)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key(key))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let missing = missing_keys(&table);
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "missing required fields: {}",
                missing.join(", ")
            )));
        }
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        presets::by_name(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (available: {})",
                presets::PRESET_NAMES.join(", ")
            ))
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.noise.seed = seed;
        }
        if let Some(t) = o.t_end {
            self.sim.t_end = t;
        }
        if let Some(h) = o.step {
            self.sim.step = h;
        }
        if let Some(snr) = o.snr_db {
            self.noise.snr_db = Some(snr);
        }
        if let Some(k) = o.decimate {
            self.sim.decimate = k;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        self.validate()
    }

    pub fn order(&self) -> usize {
        match self.plant.preset {
            PlantPreset::Duffing => 2,
            PlantPreset::Custom => self.plant.order.unwrap_or(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |path: &str, msg: String| Err(Error::Config(format!("{path}: {msg}")));
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                err(path, format!("must be positive, got {v}"))
            }
        };

        let p = &self.plant;
        match p.preset {
            PlantPreset::Duffing => {
                if p.order.is_some_and(|n| n != 2) {
                    return err("plant.order", "duffing preset is second order".into());
                }
                if p.terms.is_some() {
                    return err(
                        "plant.terms",
                        "only allowed with preset = \"custom\"".into(),
                    );
                }
            }
            PlantPreset::Custom => {
                if p.terms.is_none() {
                    return err("plant.terms", "required with preset = \"custom\"".into());
                }
            }
        }
        if self.order() != 2 {
            return err(
                "plant.order",
                format!(
                    "only second-order plants are supported, got {}",
                    self.order()
                ),
            );
        }
        positive("plant.f_bound", p.f_bound)?;
        if let Some(terms) = &p.terms {
            for (i, t) in terms.iter().enumerate() {
                if t.powers.len() > 2 {
                    return err(
                        &format!("plant.terms[{i}].powers"),
                        "at most one power per state".into(),
                    );
                }
                if !t.coef.is_finite() {
                    return err(&format!("plant.terms[{i}].coef"), "must be finite".into());
                }
            }
        }
        if let Some(u) = &p.uncertainty {
            if u.freqs.len() > 2 {
                return err(
                    "plant.uncertainty.freqs",
                    "at most one frequency per state".into(),
                );
            }
        }

        let r = &self.reference;
        if r.amplitudes.len() != r.frequencies.len() {
            return err(
                "reference",
                format!(
                    "{} amplitudes but {} frequencies",
                    r.amplitudes.len(),
                    r.frequencies.len()
                ),
            );
        }

        let c = &self.controller;
        positive("controller.lambda", c.lambda)?;
        positive("controller.gamma_f", c.gamma_f)?;
        positive("controller.gamma_1", c.gamma_1)?;
        positive("controller.gamma_2", c.gamma_2)?;
        positive("controller.lambda1", c.lambda1)?;
        positive("controller.lambda2", c.lambda2)?;
        positive("controller.eta", c.eta)?;
        positive("controller.k_switch", c.k_switch)?;
        for (path, v) in [
            ("controller.radius_f", c.radius_f),
            ("controller.radius_1", c.radius_1),
            ("controller.radius_2", c.radius_2),
        ] {
            if !(v >= 0.0) {
                return err(path, format!("must be >= 0, got {v}"));
            }
        }

        self.x_sets()?;
        self.s_sets()?;

        let s = &self.sim;
        if !(s.step > 0.0 && s.step <= 0.01) {
            return err("sim.step", format!("must lie in (0, 0.01], got {}", s.step));
        }
        positive("sim.t_end", s.t_end)?;
        if s.decimate == 0 {
            return err("sim.decimate", "must be >= 1".into());
        }
        if s.x0.len() != self.order() {
            return err(
                "sim.x0",
                format!("expected {} entries, got {}", self.order(), s.x0.len()),
            );
        }
        if s.x0.iter().any(|v| !v.is_finite()) {
            return err("sim.x0", "entries must be finite".into());
        }
        if let Some(snr) = self.noise.snr_db {
            if !snr.is_finite() {
                return err("noise.snr_db", format!("must be finite, got {snr}"));
            }
        }
        Ok(())
    }

    fn sets(path: &str, sigma: f64, means: &[[f64; 2]]) -> Result<Vec<IT2GaussianSet>> {
        if means.is_empty() {
            return Err(Error::Config(format!("{path}: at least one set required")));
        }
        means
            .iter()
            .enumerate()
            .map(|(i, [m1, m2])| {
                IT2GaussianSet::new(*m1, *m2, sigma)
                    .map_err(|e| Error::Config(format!("{path}[{i}]: {e}")))
            })
            .collect()
    }

    pub fn x_sets(&self) -> Result<Vec<IT2GaussianSet>> {
        Self::sets("mf.x_means", self.mf.x_sigma, &self.mf.x_means)
    }

    pub fn s_sets(&self) -> Result<Vec<IT2GaussianSet>> {
        Self::sets("mf.s_means", self.mf.s_sigma, &self.mf.s_means)
    }

    pub fn plant_model(&self) -> Result<PlantModel> {
        let p = &self.plant;
        let model = match p.preset {
            PlantPreset::Duffing => {
                let base = PlantModel::duffing();
                PlantModel::new(
                    2,
                    base.nominal_terms().to_vec(),
                    p.uncertainty
                        .clone()
                        .or_else(|| base.uncertainty().cloned()),
                    p.disturbance.or_else(|| base.disturbance().copied()),
                    p.f_bound,
                )?
            }
            PlantPreset::Custom => PlantModel::new(
                self.order(),
                p.terms.clone().unwrap_or_default(),
                p.uncertainty.clone(),
                p.disturbance,
                p.f_bound,
            )?,
        };
        Ok(if p.nominal_only {
            model.nominal_only()
        } else {
            model
        })
    }

    pub fn sliding(&self) -> Result<SlidingSpec> {
        SlidingSpec::new(self.order(), self.controller.lambda)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            t_end: self.sim.t_end,
            h: self.sim.step,
            x0: self.sim.x0.clone(),
            noise: NoiseSpec {
                snr_db: self.noise.snr_db,
                seed: self.noise.seed,
            },
            decimate: self.sim.decimate,
        }
    }

    pub fn adaptive_controller(&self) -> Result<AdaptiveController> {
        let xs = self.x_sets()?;
        let x_rb = Rulebase::grid(&vec![xs; self.order()])?;
        let s_rb = Rulebase::grid(&[self.s_sets()?])?;
        let c = &self.controller;
        AdaptiveController::new(
            FuzzyApproximator::zeros(x_rb),
            FuzzyApproximator::zeros(s_rb.clone()),
            FuzzyApproximator::zeros(s_rb),
            AdaptationGains {
                gamma_f: c.gamma_f,
                gamma_1: c.gamma_1,
                gamma_2: c.gamma_2,
            },
            c.projection.then_some(ProjectionRadii {
                f: c.radius_f,
                u1: c.radius_1,
                u2: c.radius_2,
            }),
        )
    }

    pub fn stc_gains(&self, plant: &PlantModel) -> Result<SuperTwistingGains> {
        let c = &self.controller;
        SuperTwistingGains::new(c.lambda1, c.lambda2, c.eta, plant.bounds().lumped())
    }

    pub fn controller_of_kind(
        &self,
        kind: ControllerKind,
        plant: &PlantModel,
    ) -> Result<ClosedLoopController> {
        Ok(match kind {
            ControllerKind::AdaptiveT2Stc => {
                ClosedLoopController::Adaptive(self.adaptive_controller()?)
            }
            ControllerKind::IdealStc => ClosedLoopController::ideal_stc(self.stc_gains(plant)?),
            ControllerKind::FirstOrderSmc => ClosedLoopController::FirstOrderSmc {
                k_switch: self.controller.k_switch,
            },
            ControllerKind::None => ClosedLoopController::None,
        })
    }

    /// Everything needed for one run with the configured controller.
    pub fn build(&self) -> Result<(SimConfig, ClosedLoop)> {
        self.build_with(self.controller.kind)
    }

    pub fn build_with(&self, kind: ControllerKind) -> Result<(SimConfig, ClosedLoop)> {
        self.validate()?;
        let plant = self.plant_model()?;
        let controller = self.controller_of_kind(kind, &plant)?;
        Ok((
            self.sim_config(),
            ClosedLoop {
                sliding: self.sliding()?,
                reference: self.reference.clone(),
                controller,
                plant,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
plant.preset = "duffing"
controller.kind = "ideal_stc"
sim.t_end = 5.0
sim.x0 = [1.0, 0.0]
"#;

    #[test]
    fn minimal_document_fills_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.controller.kind, ControllerKind::IdealStc);
        assert_eq!(cfg.controller.gamma_f, 15.0);
        assert_eq!(cfg.sim.step, 1e-3);
        assert_eq!(cfg.noise.snr_db, None);
        assert_eq!(cfg.mf.x_means.len(), 7);
        assert_eq!(cfg.output.dir, "out");
    }

    #[test]
    fn empty_document_lists_required_fields() {
        let err = ExperimentConfig::parse("").unwrap_err().to_string();
        for key in REQUIRED_KEYS {
            assert!(err.contains(key), "{err}");
        }
    }

    #[test]
    fn unknown_key_has_location() {
        let text = format!("{MINIMAL}controller.gamma_z = 1.0\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("gamma_z"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn reversed_means_name_the_set() {
        let text = format!(
            "{MINIMAL}mf.x_sigma = 0.5\nmf.s_sigma = 0.3\nmf.s_means = [[-0.6, -0.4]]\nmf.x_means = [[-1.0, 0.0], [0.5, -0.5]]\n"
        );
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("mf.x_means[1]"), "{err}");
    }

    #[test]
    fn nonpositive_gain_rejected() {
        let text = format!("{MINIMAL}controller.gamma_2 = 0.0\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("controller.gamma_2"), "{err}");
    }

    #[test]
    fn syntax_error_reported() {
        assert!(matches!(
            ExperimentConfig::parse("plant = ["),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn custom_plant_terms() {
        let text = r#"
[plant]
preset = "custom"
order = 2
terms = [
  { coef = -1.0, powers = [1, 0] },
  { coef = 0.5, powers = [0, 0], trig = { kind = "sin", omega = 2.0 } },
]

[controller]
kind = "none"

[sim]
t_end = 1.0
x0 = [0.0, 0.0]
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let plant = cfg.plant_model().unwrap();
        let t = 0.3;
        assert!((plant.f_nominal(&[2.0, 7.0], t) - (-2.0 + 0.5 * (2.0 * t).sin())).abs() < 1e-15);
        assert_eq!(plant.bounds().lumped(), 0.0);

        let round = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn custom_without_terms_rejected() {
        let text = MINIMAL.replace("\"duffing\"", "\"custom\"");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("plant.terms"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::preset("duffing-track").unwrap();
        cfg.apply(&Overrides {
            seed: Some(11),
            t_end: Some(3.0),
            step: Some(5e-4),
            snr_db: Some(30.0),
            decimate: Some(4),
            out: Some("elsewhere".into()),
        })
        .unwrap();
        assert_eq!(cfg.noise.seed, 11);
        assert_eq!(cfg.sim.t_end, 3.0);
        assert_eq!(cfg.sim.step, 5e-4);
        assert_eq!(cfg.noise.snr_db, Some(30.0));
        assert_eq!(cfg.sim.decimate, 4);
        assert_eq!(cfg.output.dir, "elsewhere");
        assert!(cfg
            .apply(&Overrides {
                step: Some(0.5),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn unknown_preset() {
        let err = ExperimentConfig::preset("lorenz").unwrap_err().to_string();
        assert!(err.contains("duffing-track"));
    }

    #[test]
    fn free_preset_is_nominal() {
        let cfg = ExperimentConfig::preset("duffing-free").unwrap();
        let plant = cfg.plant_model().unwrap();
        assert_eq!(plant.bounds().lumped(), 0.0);
        assert_eq!(cfg.controller.kind, ControllerKind::None);
    }
}
