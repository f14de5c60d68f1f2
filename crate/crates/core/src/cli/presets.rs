//! Built-in experiment presets. Every experiment scalar lives here once.

use std::f64::consts::PI;

use super::config::{
    ControllerConfig, ExperimentConfig, MfConfig, NoiseSection, OutputSection, PlantConfig,
    PlantPreset, SimSection,
};
use crate::plant::{ReferenceSignal, DEFAULT_F_BOUND};
use crate::sim::ControllerKind;

pub const SLIDING_LAMBDA: f64 = 10.0;
pub const GAMMA_F: f64 = 15.0;
pub const GAMMA_1: f64 = 10.0;
pub const GAMMA_2: f64 = 6.0;
pub const X_SIGMA: f64 = 0.5;
pub const SNR_DB: f64 = 20.0;
pub const TRACK_X0: [f64; 2] = [1.0, 0.0];
pub const FREE_X0: [f64; 2] = [0.1, 0.0];

/// Uncertain-mean intervals of the seven antecedent sets on each state.
pub const X_MEANS: [[f64; 2]; 7] = [
    [-3.5, -2.5],
    [-2.5, -1.5],
    [-1.5, -0.5],
    [-0.5, 0.5],
    [0.5, 1.5],
    [1.5, 2.5],
    [2.5, 3.5],
];

/// Negative / zero / positive partition of the sliding variable.
pub const S_MEANS: [[f64; 2]; 3] = [[-0.6, -0.4], [-0.1, 0.1], [0.4, 0.6]];
pub const S_SIGMA: f64 = 0.3;

pub const RADIUS_F: f64 = 100.0;
pub const RADIUS_1: f64 = 0.3;
pub const RADIUS_2: f64 = 10.0;

pub const STC_LAMBDA1: f64 = 5.0;
pub const STC_LAMBDA2: f64 = 10.0;
pub const STC_ETA: f64 = 0.1;
pub const FIRST_ORDER_K: f64 = 2.0;

pub const TRACK_T_END: f64 = 20.0;
pub const FREE_T_END: f64 = 100.0;
pub const STEP: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 7;

pub const PRESET_NAMES: [&str; 2] = ["duffing-track", "duffing-free"];

pub fn reference() -> ReferenceSignal {
    ReferenceSignal::preset()
}

pub fn mf() -> MfConfig {
    MfConfig {
        x_sigma: X_SIGMA,
        x_means: X_MEANS.to_vec(),
        s_sigma: S_SIGMA,
        s_means: S_MEANS.to_vec(),
    }
}

pub fn controller(kind: ControllerKind) -> ControllerConfig {
    ControllerConfig {
        kind,
        lambda: SLIDING_LAMBDA,
        gamma_f: GAMMA_F,
        gamma_1: GAMMA_1,
        gamma_2: GAMMA_2,
        lambda1: STC_LAMBDA1,
        lambda2: STC_LAMBDA2,
        eta: STC_ETA,
        k_switch: FIRST_ORDER_K,
        projection: true,
        radius_f: RADIUS_F,
        radius_1: RADIUS_1,
        radius_2: RADIUS_2,
    }
}

fn duffing_plant() -> PlantConfig {
    PlantConfig {
        preset: PlantPreset::Duffing,
        order: None,
        terms: None,
        uncertainty: None,
        disturbance: None,
        nominal_only: false,
        f_bound: DEFAULT_F_BOUND,
    }
}

/// Tracking experiment: adaptive controller, uncertainty, disturbance and
/// 20 dB measurement noise, starting from `(1, 0)`.
pub fn duffing_track() -> ExperimentConfig {
    ExperimentConfig {
        plant: duffing_plant(),
        reference: reference(),
        controller: controller(ControllerKind::AdaptiveT2Stc),
        mf: mf(),
        sim: SimSection {
            t_end: TRACK_T_END,
            step: STEP,
            x0: TRACK_X0.to_vec(),
            decimate: 1,
        },
        noise: NoiseSection {
            snr_db: Some(SNR_DB),
            seed: DEFAULT_SEED,
        },
        output: OutputSection::default(),
    }
}

/// Uncontrolled nominal oscillator from `(0.1, 0)` over 100 s.
pub fn duffing_free() -> ExperimentConfig {
    let mut plant = duffing_plant();
    plant.nominal_only = true;
    ExperimentConfig {
        plant,
        reference: reference(),
        controller: controller(ControllerKind::None),
        mf: mf(),
        sim: SimSection {
            t_end: FREE_T_END,
            step: STEP,
            x0: FREE_X0.to_vec(),
            decimate: 1,
        },
        noise: NoiseSection {
            snr_db: None,
            seed: DEFAULT_SEED,
        },
        output: OutputSection::default(),
    }
}

pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    match name {
        "duffing-track" => Some(duffing_track()),
        "duffing-free" => Some(duffing_free()),
        _ => None,
    }
}

/// Lumped uncertainty bound of the Duffing preset.
pub fn duffing_delta() -> f64 {
    PI / 6.0 + 1.0
}
