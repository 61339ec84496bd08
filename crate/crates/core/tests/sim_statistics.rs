//! Statistical behavior of the simulator against classical queueing facts
//! and the fluid predictions, at scales small enough for a test suite.

use psq_core::sim::{little_check, observed_success_fraction, run, run_replications, SimConfig};
use psq_core::steady::solve_fixed_point;
use psq_core::{JointLaw, ModelData, ScalarLaw};

fn exp(rate: f64) -> ScalarLaw {
    ScalarLaw::exponential(rate).unwrap()
}

fn mm_ps_config(lambda: f64, horizon: f64, seed: u64) -> SimConfig {
    // M/M-PS without reneging: D = inf for every job
    SimConfig {
        interarrival: exp(lambda),
        law: JointLaw::independent(exp(1.0), ScalarLaw::point_at_infinity()).unwrap(),
        initial_count: 0,
        initial_law: None,
        horizon,
        seed,
        snapshot_times: vec![],
        r: 1.0,
        record_events: false,
        first_arrival: None,
    }
}

#[test]
fn mm_ps_mean_queue_length() {
    // rho < 1: time-average queue length is rho/(1-rho), insensitive to the
    // service law under PS
    let rho = 0.7;
    let cfg = mm_ps_config(rho, 4000.0, 411);
    let runs = run_replications(&cfg, 20).unwrap();
    let means: Vec<f64> = runs
        .iter()
        .map(|(log, _)| log.area_under_z / log.horizon)
        .collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (means.len() - 1) as f64;
    let se = (var / means.len() as f64).sqrt();
    let expected = rho / (1.0 - rho);
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "mean queue {mean} vs {expected} (se {se})"
    );
}

#[test]
fn classical_little_law_holds_without_reneging() {
    let cfg = mm_ps_config(0.7, 5000.0, 99);
    let (log, _) = run(&cfg).unwrap();
    let model = ModelData::new(
        0.7,
        JointLaw::independent(exp(1.0), ScalarLaw::point_at_infinity()).unwrap(),
    )
    .unwrap();
    // z_inf is irrelevant for the classical identity; pass a placeholder
    let report = little_check(&log, &model, 1.0);
    assert!(
        report.classical_gap <= 0.05,
        "classical Little gap {}",
        report.classical_gap
    );
}

#[test]
fn little_check_on_a_fluid_consistent_run() {
    let model = ModelData::new(2.0, JointLaw::independent(exp(1.0), exp(1.0)).unwrap()).unwrap();
    let steady = solve_fixed_point(&model).unwrap();
    let r = 100.0;
    let cfg = SimConfig {
        interarrival: exp(2.0),
        law: model.law.clone(),
        initial_count: 0,
        initial_law: None,
        horizon: r * 30.0,
        seed: 2024,
        snapshot_times: vec![],
        r,
        record_events: false,
        first_arrival: None,
    };
    let (log, _) = run(&cfg).unwrap();
    let report = little_check(&log, &model, steady.z_inf);
    assert!(
        (report.fluid_prediction - r * steady.z_inf).abs() < 1e-6,
        "fluid prediction should be r z_inf"
    );
    assert!(
        report.fluid_gap <= 0.10,
        "fluid Little gap {}",
        report.fluid_gap
    );
}

#[test]
fn little_check_zero_arrival_run() {
    let cfg = SimConfig {
        interarrival: ScalarLaw::point_at_infinity(),
        law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
        initial_count: 0,
        initial_law: None,
        horizon: 10.0,
        seed: 1,
        snapshot_times: vec![],
        r: 1.0,
        record_events: false,
        first_arrival: None,
    };
    let (log, _) = run(&cfg).unwrap();
    let model = ModelData::new(0.0, JointLaw::independent(exp(1.0), exp(1.0)).unwrap()).unwrap();
    let report = little_check(&log, &model, 1.0);
    assert_eq!(report.time_avg_z, 0.0);
    assert_eq!(report.classical_gap, 0.0);
}

#[test]
fn observed_success_fraction_tracks_the_insensitivity_value_at_small_scale() {
    // r = 20 keeps this quick; the acceptance suite runs r = 100
    let r = 20.0;
    let cfg = SimConfig {
        interarrival: exp(2.0),
        law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
        initial_count: 0,
        initial_law: None,
        horizon: r * 120.0,
        seed: 31,
        snapshot_times: vec![],
        r,
        record_events: false,
        first_arrival: None,
    };
    let runs = run_replications(&cfg, 10).unwrap();
    let fracs: Vec<f64> = runs
        .iter()
        .map(|(log, _)| observed_success_fraction(log).unwrap())
        .collect();
    let mean = fracs.iter().sum::<f64>() / fracs.len() as f64;
    assert!((mean - 0.5).abs() < 0.02, "success fraction {mean}");
}

#[test]
fn scaled_lead_times_are_drawn_as_r_times_d() {
    // deterministic patience theta = 2 B with B deterministic: at scale r the
    // deadline is exactly r * 2 * b0
    let law = JointLaw::proportional(
        ScalarLaw::deterministic(1.0).unwrap(),
        ScalarLaw::deterministic(2.0).unwrap(),
    )
    .unwrap();
    let cfg = SimConfig {
        interarrival: ScalarLaw::point_at_infinity(),
        law: law.clone(),
        initial_count: 3,
        initial_law: Some(law),
        horizon: 100.0,
        seed: 8,
        snapshot_times: vec![1.0],
        r: 10.0,
        record_events: true,
        first_arrival: None,
    };
    let (log, snaps) = run(&cfg).unwrap();
    assert!(log.conserves_jobs());
    for &(rb, rd) in &snaps[0].points {
        assert!(
            (rb - (1.0 - 1.0 / 3.0)).abs() < 1e-9,
            "residual service {rb}"
        );
        assert!((rd - (20.0 - 1.0)).abs() < 1e-9, "residual lead {rd}");
    }
}

#[test]
fn cumulative_service_is_strictly_increasing_while_busy() {
    // overloaded system: busy from the first arrival on, so S must grow
    // strictly between snapshots; between them it accumulates sum(dt/Z)
    let cfg = SimConfig {
        interarrival: exp(2.0),
        law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
        initial_count: 0,
        initial_law: None,
        horizon: 200.0,
        seed: 17,
        snapshot_times: (1..=20).map(|k| k as f64 * 10.0).collect(),
        r: 10.0,
        record_events: false,
        first_arrival: None,
    };
    let (_, snaps) = run(&cfg).unwrap();
    assert_eq!(snaps.len(), 20);
    for w in snaps.windows(2) {
        assert!(
            !w[1].points.is_empty(),
            "overloaded system drained unexpectedly"
        );
        assert!(
            w[1].cum_service > w[0].cum_service,
            "S not strictly increasing on a busy interval: {} -> {}",
            w[0].cum_service,
            w[1].cum_service
        );
    }
}
