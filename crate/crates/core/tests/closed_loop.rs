use it2stc::cli::experiment;
use it2stc::cli::{csv, presets};
use it2stc::sim::{simulate, sliding_consistency_check, ControllerKind, Trajectory};

fn final_e1(traj: &Trajectory) -> f64 {
    traj.samples.last().unwrap().e[0]
}

#[test]
fn seeded_runs_identical_and_seeds_differ() {
    let mut cfg = presets::duffing_track();
    cfg.sim.t_end = 3.0;
    let a = experiment::run(&cfg).unwrap().trajectory;
    let b = experiment::run(&cfg).unwrap().trajectory;
    assert_eq!(a, b);
    cfg.noise.seed += 1;
    let c = experiment::run(&cfg).unwrap().trajectory;
    assert_ne!(a, c);
}

#[test]
fn halving_step_leaves_final_error() {
    let mut cfg = presets::duffing_track();
    cfg.noise.snr_db = None;
    let coarse = experiment::run(&cfg).unwrap();
    cfg.sim.step = 5e-4;
    let fine = experiment::run(&cfg).unwrap();
    let d = (final_e1(&coarse.trajectory) - final_e1(&fine.trajectory)).abs();
    assert!(d < 1e-3, "final e1 moved by {d}");
}

#[test]
fn adaptive_sliding_envelope_contracts() {
    let mut cfg = presets::duffing_track();
    cfg.noise.snr_db = None;
    let out = experiment::run(&cfg).unwrap();
    let max_s = |a: f64, b: f64| {
        out.trajectory
            .samples
            .iter()
            .filter(|s| s.t >= a && s.t < b)
            .fold(0.0f64, |m, s| m.max(s.s.abs()))
    };
    // window maxima are not monotone while f_hat is still learning the forcing
    assert!(max_s(15.0, 20.0) < 0.25 * max_s(2.0, 3.0));
    assert!(max_s(8.0, 20.0) < 0.1);
}

#[test]
fn parameters_stay_inside_radii() {
    let cfg = presets::duffing_track();
    let out = experiment::run(&cfg).unwrap();
    let m = out.trajectory.max_theta_norms();
    assert!(m[0] <= cfg.controller.radius_f);
    assert!(m[1] <= cfg.controller.radius_1);
    assert!(m[2] <= cfg.controller.radius_2);
}

#[test]
fn free_run_consistency_and_bounds() {
    let mut cfg = presets::duffing_free();
    cfg.sim.t_end = 20.0;
    let (sim, setup) = cfg.build().unwrap();
    let (plant, sliding, reference) = (setup.plant.clone(), setup.sliding, setup.reference.clone());
    let traj = simulate(&sim, setup).unwrap();
    assert!(traj.max_abs_state() < 5.0);
    assert!(traj.samples.iter().all(|s| s.u == 0.0));
    let dev = sliding_consistency_check(&traj, &sliding, &plant, &reference).unwrap();
    assert!(dev < 1e-3, "{dev}");
}

#[test]
fn time_strictly_increasing_and_decimation() {
    let mut cfg = presets::duffing_track();
    cfg.sim.t_end = 1.0;
    cfg.sim.decimate = 10;
    let traj = experiment::run(&cfg).unwrap().trajectory;
    assert_eq!(traj.len(), 101);
    assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    let text = csv::to_string(&traj).unwrap();
    assert_eq!(text.lines().count(), traj.len() + 1);
    assert!(text.ends_with('\n'));
    let rows = csv::parse_wide(&text).unwrap();
    assert_eq!(rows[50][10], traj.samples[50].u);
}

#[test]
fn empty_trajectory_writes_header_only() {
    let text = csv::to_string(&Trajectory::default()).unwrap();
    assert_eq!(text, format!("{}\n", csv::COLUMNS.join(",")));
}

#[test]
fn first_order_tv_exceeds_adaptive_in_comparison() {
    let cmp = experiment::run_compare(&presets::duffing_track(), false).unwrap();
    assert!(cmp.matched);
    let tv = |k| {
        cmp.rows
            .iter()
            .find(|r| r.controller == k)
            .unwrap()
            .metrics
            .tv_u
    };
    assert!(tv(ControllerKind::FirstOrderSmc) > tv(ControllerKind::AdaptiveT2Stc));
}
