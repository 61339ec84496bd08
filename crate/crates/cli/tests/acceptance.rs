//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Statistical criteria run at desk scale with pinned per-experiment master
//! seeds so that the whole suite is reproducible.

use std::time::Instant;

use psq_core::fluid::{solve_trajectory, FluidProblem};
use psq_core::rng::RandStream;
use psq_core::sim::{
    empirical_tail, observed_success_fraction, run, run_replications, EventKind, SimConfig,
};
use psq_core::steady::{scaling_transform, solve_fixed_point, steady_measure};
use psq_core::validate::{convergence_experiment, ConvergenceSpec};
use psq_core::{JointLaw, ModelData, ScalarLaw};

fn criterion(n: u32, name: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("ACCEPTANCE {n} ({name}): PASS — {detail}"),
        Err(detail) => {
            println!("ACCEPTANCE {n} ({name}): FAIL — {detail}");
            panic!("acceptance criterion {n} ({name}) failed: {detail}");
        }
    }
}

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn exp(rate: f64) -> ScalarLaw {
    ScalarLaw::exponential(rate).unwrap()
}
fn det(v: f64) -> ScalarLaw {
    ScalarLaw::deterministic(v).unwrap()
}

fn exp_exp_model() -> ModelData {
    ModelData::new(2.0, JointLaw::independent(exp(1.0), exp(1.0)).unwrap()).unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn criterion_01_exponential_reneging_trajectory() {
    criterion(1, "exponential-reneging trajectory", || {
        let start = Instant::now();
        let problem =
            FluidProblem::new(exp_exp_model(), 0.0, None, 8.0, 1e-3).map_err(|e| e.to_string())?;
        let traj = solve_trajectory(problem).map_err(|e| e.to_string())?;
        let sup = traj
            .times()
            .iter()
            .zip(traj.z())
            .map(|(&t, &z)| (z - (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max);
        let elapsed = start.elapsed();
        check(sup <= 5e-3, format!("sup error {sup:.3e} > 5e-3"))?;
        check(
            elapsed.as_secs_f64() <= 30.0,
            format!("runtime {elapsed:?} > 30 s"),
        )?;
        Ok(format!(
            "sup error {sup:.3e} vs 1 - e^-t, runtime {elapsed:.2?}"
        ))
    });
}

#[test]
fn criterion_02_fixed_point_closed_forms() {
    criterion(2, "fixed-point closed forms", || {
        let start = Instant::now();
        let cases: Vec<(ModelData, f64, f64)> = vec![
            (
                ModelData::new(1.5, JointLaw::proportional(exp(1.0), det(2.0)).unwrap()).unwrap(),
                3.0,
                0.0,
            ),
            (
                ModelData::new(
                    1.5,
                    JointLaw::proportional(exp(1.0), ScalarLaw::two_point(1.0, 0.5, 4.0).unwrap())
                        .unwrap(),
                )
                .unwrap(),
                3.0,
                0.5,
            ),
            (
                ModelData::new(2.0, JointLaw::proportional(exp(1.0), exp(1.0)).unwrap()).unwrap(),
                1.59362426004004, // root of z = 2 (1 - e^{-z})
                0.20318786997997995,
            ),
            (
                ModelData::new(
                    2.0,
                    JointLaw::tcp_mixture(0.25, exp(1.0), det(1.0)).unwrap(),
                )
                .unwrap(),
                3.0,
                0.25,
            ),
        ];
        let mut worst_rel: f64 = 0.0;
        for (model, z_expected, p_expected) in &cases {
            let r = solve_fixed_point(model).map_err(|e| e.to_string())?;
            let rel = (r.z_inf - z_expected).abs() / z_expected;
            worst_rel = worst_rel.max(rel);
            check(
                rel <= 1e-6,
                format!(
                    "z_inf {} vs {z_expected} (rel {rel:.2e}) for {model:?}",
                    r.z_inf
                ),
            )?;
            check(
                (r.p_success - p_expected).abs() <= 1e-6,
                format!("P_s {} vs {p_expected} for {model:?}", r.p_success),
            )?;
        }
        let elapsed = start.elapsed();
        check(
            elapsed.as_secs_f64() <= 1.0,
            format!("runtime {elapsed:?} > 1 s"),
        )?;
        Ok(format!(
            "4 cases, worst relative error {worst_rel:.2e}, runtime {elapsed:.2?}"
        ))
    });
}

#[test]
fn criterion_03_insensitivity() {
    criterion(3, "insensitivity of P_s for exponential service", || {
        let lead_laws = [exp(1.0), det(1.0), ScalarLaw::uniform(0.0, 2.0).unwrap()];
        let mut worst: f64 = 0.0;
        for d in lead_laws {
            let model =
                ModelData::new(2.0, JointLaw::independent(exp(1.0), d.clone()).unwrap()).unwrap();
            let r = solve_fixed_point(&model).map_err(|e| e.to_string())?;
            let err = (r.p_success - 0.5).abs();
            worst = worst.max(err);
            check(
                err <= 1e-4,
                format!("P_s = {} for lead law {d:?}", r.p_success),
            )?;
        }
        Ok(format!(
            "P_s = 1/rho across 3 lead-time laws, worst error {worst:.2e}"
        ))
    });
}

#[test]
fn criterion_04_scaling_property() {
    criterion(4, "lead-time scaling property", || {
        let models = [
            exp_exp_model(),
            ModelData::new(
                1.5,
                JointLaw::proportional(exp(1.0), ScalarLaw::two_point(1.0, 0.5, 4.0).unwrap())
                    .unwrap(),
            )
            .unwrap(),
        ];
        for model in &models {
            let base = solve_fixed_point(model).map_err(|e| e.to_string())?;
            for a in [0.5, 2.0, 3.0] {
                let scaled = scaling_transform(model, a).map_err(|e| e.to_string())?;
                let r = solve_fixed_point(&scaled).map_err(|e| e.to_string())?;
                let rel = (r.z_inf - a * base.z_inf).abs() / (a * base.z_inf);
                check(
                    rel <= 1e-6,
                    format!("z_inf scaling off by {rel:.2e} at a = {a} for {model:?}"),
                )?;
                check(
                    (r.p_success - base.p_success).abs() <= 1e-8,
                    format!("P_s changed under scaling at a = {a} for {model:?}"),
                )?;
            }
        }
        Ok("z_inf scales linearly, P_s invariant (a in {0.5, 2, 3}, 2 models)".into())
    });
}

#[test]
fn criterion_05_limiting_measure_consistency() {
    criterion(5, "limiting measure consistency", || {
        let catalogue = [
            ModelData::new(1.5, JointLaw::proportional(exp(1.0), det(2.0)).unwrap()).unwrap(),
            ModelData::new(
                1.5,
                JointLaw::proportional(exp(1.0), ScalarLaw::two_point(1.0, 0.5, 4.0).unwrap())
                    .unwrap(),
            )
            .unwrap(),
            ModelData::new(2.0, JointLaw::proportional(exp(1.0), exp(1.0)).unwrap()).unwrap(),
            ModelData::new(
                2.0,
                JointLaw::tcp_mixture(0.25, exp(1.0), det(1.0)).unwrap(),
            )
            .unwrap(),
            exp_exp_model(),
        ];
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
        for model in &catalogue {
            let r = solve_fixed_point(model).map_err(|e| e.to_string())?;
            let origin = steady_measure(model, r.z_inf, 0.0, 0.0).map_err(|e| e.to_string())?;
            check(
                (origin - r.z_inf).abs() <= 1e-8 * r.z_inf.max(1.0),
                format!(
                    "zeta_inf(0,0) = {origin} vs z_inf = {} for {model:?}",
                    r.z_inf
                ),
            )?;
            let mut values = [[0.0; 5]; 5];
            for (i, &x) in grid.iter().enumerate() {
                for (j, &y) in grid.iter().enumerate() {
                    values[i][j] =
                        steady_measure(model, r.z_inf, x, y).map_err(|e| e.to_string())?;
                }
            }
            for i in 0..5 {
                for j in 0..5 {
                    if i > 0 {
                        check(
                            values[i][j] <= values[i - 1][j] + 1e-10,
                            format!("not nonincreasing in x at {model:?}"),
                        )?;
                    }
                    if j > 0 {
                        check(
                            values[i][j] <= values[i][j - 1] + 1e-10,
                            format!("not nonincreasing in y at {model:?}"),
                        )?;
                    }
                }
            }
        }
        Ok("zeta_inf(0,0) = z_inf (1e-8) and monotone on the 5x5 grid, 5 models".into())
    });
}

/// Draws one feasible model with fast closed-form tails.
fn random_feasible_model(stream: &mut RandStream) -> ModelData {
    let scalar = |stream: &mut RandStream| -> ScalarLaw {
        let u = stream.uniform_open();
        let a = 0.4 + 1.6 * stream.uniform_open();
        let b = 0.4 + 1.6 * stream.uniform_open();
        if u < 0.25 {
            ScalarLaw::deterministic(a).unwrap()
        } else if u < 0.5 {
            ScalarLaw::exponential(a).unwrap()
        } else if u < 0.75 {
            ScalarLaw::two_point(a, 0.2 + 0.6 * stream.uniform_open(), a + b).unwrap()
        } else {
            ScalarLaw::uniform(0.3 * a, 0.3 * a + b).unwrap()
        }
    };
    loop {
        let u = stream.uniform_open();
        let law = if u < 0.45 {
            JointLaw::independent(scalar(stream), scalar(stream)).unwrap()
        } else if u < 0.8 {
            let theta = if stream.uniform_open() < 0.5 {
                ScalarLaw::deterministic(0.5 + 2.0 * stream.uniform_open()).unwrap()
            } else {
                ScalarLaw::two_point(
                    0.4 + 0.8 * stream.uniform_open(),
                    0.2 + 0.6 * stream.uniform_open(),
                    1.5 + 2.0 * stream.uniform_open(),
                )
                .unwrap()
            };
            JointLaw::proportional(scalar(stream), theta).unwrap()
        } else {
            JointLaw::tcp_mixture(
                0.1 + 0.5 * stream.uniform_open(),
                scalar(stream),
                scalar(stream),
            )
            .unwrap()
        };
        let mean_b = law.mean_b();
        let lambda = if mean_b.is_finite() {
            (1.1 + 1.5 * stream.uniform_open()) / mean_b
        } else {
            0.4 + 1.2 * stream.uniform_open()
        };
        let model = ModelData::new(lambda, law).unwrap();
        if model.feasibility().all_pass() {
            return model;
        }
    }
}

#[test]
fn criterion_06_picard_monotonicity_and_residual() {
    criterion(
        6,
        "Picard monotonicity and residual on random models",
        || {
            let mut stream = RandStream::new(612);
            let mut worst_viol: f64 = 0.0;
            let mut worst_res: f64 = 0.0;
            for i in 0..50 {
                let model = random_feasible_model(&mut stream);
                let problem = FluidProblem::new(model.clone(), 0.0, None, 4.0, 0.02)
                    .map_err(|e| e.to_string())?;
                let traj =
                    solve_trajectory(problem).map_err(|e| format!("model {i} ({model:?}): {e}"))?;
                worst_viol = worst_viol.max(traj.max_monotonicity_violation);
                let res = traj.residual();
                worst_res = worst_res.max(res);
                check(
                    traj.max_monotonicity_violation <= 1e-12,
                    format!(
                        "monotonicity violated by {:.2e} on model {i} ({model:?})",
                        traj.max_monotonicity_violation
                    ),
                )?;
                check(
                    res <= 1e-4,
                    format!("residual {res:.2e} on model {i} ({model:?})"),
                )?;
            }
            Ok(format!(
            "50 models: worst monotonicity violation {worst_viol:.1e}, worst residual {worst_res:.1e}"
        ))
        },
    );
}

#[test]
fn criterion_07_simulator_micro_oracles() {
    criterion(7, "simulator micro-oracles and M/M-PS sanity", || {
        let micro = |pairs: Vec<(f64, f64)>| SimConfig {
            interarrival: ScalarLaw::point_at_infinity(),
            law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
            initial_count: pairs.len(),
            initial_law: Some(JointLaw::empirical(pairs).unwrap()),
            horizon: 10.0,
            seed: 1,
            snapshot_times: vec![],
            r: 1.0,
            record_events: true,
            first_arrival: None,
        };

        // one job (b=1, d=inf): completes at t=1 with S(1)=1
        let (log, _) = run(&micro(vec![(1.0, f64::INFINITY)])).map_err(|e| e.to_string())?;
        let rec = &log.departures.as_ref().unwrap()[0];
        check(
            rec.kind == EventKind::Completion,
            "single job should complete".into(),
        )?;
        check(
            (rec.departure - 1.0).abs() <= 1e-9,
            format!("departure {}", rec.departure),
        )?;
        check(
            (rec.received_service - 1.0).abs() <= 1e-9,
            format!("S(1) = {}", rec.received_service),
        )?;

        // two jobs (b=1 each): processor sharing finishes both at t=2
        let (log, _) = run(&micro(vec![(1.0, f64::INFINITY), (1.0, f64::INFINITY)]))
            .map_err(|e| e.to_string())?;
        for rec in log.departures.as_ref().unwrap() {
            check(
                rec.kind == EventKind::Completion,
                "both jobs should complete".into(),
            )?;
            check(
                (rec.departure - 2.0).abs() <= 1e-9,
                format!("departure {} != 2", rec.departure),
            )?;
        }

        // one job (b=2, d=1): reneges at t=1 with residual service 1
        let (log, _) = run(&micro(vec![(2.0, 1.0)])).map_err(|e| e.to_string())?;
        let rec = &log.departures.as_ref().unwrap()[0];
        check(rec.kind == EventKind::Reneging, "job should renege".into())?;
        check(
            (rec.departure - 1.0).abs() <= 1e-9,
            format!("departure {}", rec.departure),
        )?;
        check(
            ((rec.b0 - rec.received_service) - 1.0).abs() <= 1e-9,
            format!("residual at reneging {}", rec.b0 - rec.received_service),
        )?;

        // M/M-PS sanity: rho = 0.7, no reneging, mean queue rho/(1-rho)
        let rho = 0.7;
        let cfg = SimConfig {
            interarrival: exp(rho),
            law: JointLaw::independent(exp(1.0), ScalarLaw::point_at_infinity()).unwrap(),
            initial_count: 0,
            initial_law: None,
            horizon: 4000.0,
            seed: 411,
            snapshot_times: vec![],
            r: 1.0,
            record_events: false,
            first_arrival: None,
        };
        let runs = run_replications(&cfg, 20).map_err(|e| e.to_string())?;
        let means: Vec<f64> = runs
            .iter()
            .map(|(log, _)| log.area_under_z / log.horizon)
            .collect();
        let (mean, se) = mean_and_se(&means);
        let expected = rho / (1.0 - rho);
        check(
            (mean - expected).abs() <= 3.0 * se,
            format!("M/M-PS mean queue {mean:.4} vs {expected:.4} (se {se:.4})"),
        )?;
        Ok(format!(
            "3 exact micro-cases to 1e-9; M/M-PS mean queue {mean:.3} vs {expected:.3} (se {se:.3})"
        ))
    });
}

#[test]
fn criterion_08_fluid_limit_convergence() {
    criterion(8, "fluid-limit convergence at desk scale", || {
        let start = Instant::now();
        let spec = ConvergenceSpec {
            interarrival: exp(2.0),
            law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
            z0: 0.0,
            initial_law: None,
            master_seed: 5,
            fluid_dt: 1e-3,
        };
        let table = convergence_experiment(&spec, &[20.0, 100.0], 20, &[1.0, 2.0, 4.0])
            .map_err(|e| e.to_string())?;
        check(
            table.error_monotone_in_r(),
            format!("errors not strictly decreasing in r: {:?}", table.rows),
        )?;
        let mut worst_rel: f64 = 0.0;
        for row in table.rows.iter().filter(|row| row.r == 100.0) {
            let rel = row.abs_err / row.fluid_z;
            worst_rel = worst_rel.max(rel);
            check(
                rel <= 0.10,
                format!("relative error {rel:.3} at r=100, t={}", row.t),
            )?;
        }
        let elapsed = start.elapsed();
        check(
            elapsed.as_secs_f64() <= 600.0,
            format!("runtime {elapsed:?} > 10 min"),
        )?;
        Ok(format!(
            "errors decrease at every probe time, worst relative error at r=100: {worst_rel:.3}, runtime {elapsed:.2?}"
        ))
    });
}

#[test]
fn criterion_09_steady_measure_vs_simulation() {
    criterion(9, "steady measure vs long-run simulation", || {
        let model = exp_exp_model();
        let steady = solve_fixed_point(&model).map_err(|e| e.to_string())?;
        let r = 100.0;
        let cfg = SimConfig {
            interarrival: exp(2.0),
            law: model.law.clone(),
            initial_count: 0,
            initial_law: None,
            horizon: r * 12.0,
            seed: 9,
            snapshot_times: vec![r * 12.0],
            r,
            record_events: false,
            first_arrival: None,
        };
        let runs = run_replications(&cfg, 20).map_err(|e| e.to_string())?;
        let grid = [0.0, 0.5, 1.0];
        let mut worst: f64 = 0.0;
        for &x in &grid {
            for &y in &grid {
                let vals: Vec<f64> = runs
                    .iter()
                    .map(|(_, snaps)| empirical_tail(&snaps[0], r, x, y))
                    .collect();
                let (mean, se) = mean_and_se(&vals);
                let target =
                    steady_measure(&model, steady.z_inf, x, y).map_err(|e| e.to_string())?;
                let pulls = (mean - target).abs() / se;
                worst = worst.max(pulls);
                check(
                    pulls <= 3.0,
                    format!("empirical tail at ({x},{y}): {mean:.4} vs {target:.4}, {pulls:.2} se"),
                )?;
            }
        }
        Ok(format!(
            "3x3 corner grid within 3 se (worst {worst:.2} se, 20 reps, r=100)"
        ))
    });
}

#[test]
fn criterion_10_observed_reneging() {
    criterion(10, "observed success fractions", || {
        // Exp/Exp: P_s = 1/rho = 0.5
        let r = 100.0;
        let cfg = SimConfig {
            interarrival: exp(2.0),
            law: JointLaw::independent(exp(1.0), exp(1.0)).unwrap(),
            initial_count: 0,
            initial_law: None,
            horizon: r * 160.0,
            seed: 7,
            snapshot_times: vec![],
            r,
            record_events: false,
            first_arrival: None,
        };
        let runs = run_replications(&cfg, 20).map_err(|e| e.to_string())?;
        let fracs: Vec<f64> = runs
            .iter()
            .map(|(log, _)| observed_success_fraction(log).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&fracs);
        check(
            (mean - 0.5).abs() <= 3.0 * se,
            format!("Exp/Exp observed fraction {mean:.5} vs 0.5 (se {se:.5})"),
        )?;

        // deterministic patience factor: P_s = 0
        let theta_cfg = SimConfig {
            interarrival: exp(1.5),
            law: JointLaw::proportional(exp(1.0), det(2.0)).unwrap(),
            initial_count: 0,
            initial_law: None,
            horizon: r * 120.0,
            seed: 7,
            snapshot_times: vec![],
            r,
            record_events: false,
            first_arrival: None,
        };
        let runs = run_replications(&theta_cfg, 20).map_err(|e| e.to_string())?;
        let fracs: Vec<f64> = runs
            .iter()
            .map(|(log, _)| observed_success_fraction(log).unwrap())
            .collect();
        let (theta_mean, _) = mean_and_se(&fracs);
        check(
            theta_mean <= 0.05,
            format!("single-valued-theta observed fraction {theta_mean:.4} > 0.05"),
        )?;
        Ok(format!(
            "Exp/Exp fraction {mean:.4} (0.5 within {:.2} se); theta model fraction {theta_mean:.4} <= 0.05",
            (mean - 0.5).abs() / se
        ))
    });
}

#[test]
fn criterion_11_reproducibility() {
    criterion(11, "byte-identical reproducibility", || {
        let dir = std::env::temp_dir().join(format!("psq-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let config_path = dir.join("config.toml");
        std::fs::write(
            &config_path,
            r#"
seed = 404

[model]
lambda = 2.0

[model.law]
kind = "independent"
b = { dist = "exp", rate = 1.0 }
d = { dist = "exp", rate = 1.0 }

[fluid]
z0 = 0.0
horizon = 2.0
dt = 0.01

[sim]
interarrival = { dist = "exp", rate = 2.0 }
r = 20.0
reps = 8
horizon = 60.0
snapshot_times = [20.0, 60.0]
write_events = true
write_snapshots = true

[converge]
r_list = [5.0, 15.0]
reps = 6
times = [1.0, 2.0]
fluid_dt = 0.01
"#,
        )
        .map_err(|e| e.to_string())?;

        let run_all = |label: &str, threads: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
            let out = dir.join(label);
            for cmd in ["steady", "fluid", "simulate", "converge"] {
                let output = std::process::Command::new(env!("CARGO_BIN_EXE_psq"))
                    .args([
                        cmd,
                        "--config",
                        config_path.to_str().unwrap(),
                        "--out",
                        out.to_str().unwrap(),
                        "--quiet",
                        "--threads",
                        threads,
                    ])
                    .output()
                    .map_err(|e| e.to_string())?;
                if !output.status.success() {
                    return Err(format!("{cmd} exited with {}", output.status));
                }
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                .map_err(|e| e.to_string())?
                .map(|entry| {
                    let entry = entry.unwrap();
                    (
                        entry.file_name().to_string_lossy().into_owned(),
                        std::fs::read(entry.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            Ok(files)
        };

        let first = run_all("run1", "1")?;
        let second = run_all("run2", "1")?;
        let third = run_all("run3", "8")?;
        check(!first.is_empty(), "no output files produced".into())?;
        check(
            first == second,
            "outputs differ between two identical runs".into(),
        )?;
        check(
            first == third,
            "outputs differ between 1-thread and 8-thread runs".into(),
        )?;
        let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
        std::fs::remove_dir_all(&dir).ok();
        Ok(format!(
            "{} files byte-identical across reruns and across 1 vs 8 threads: {names:?}",
            first.len()
        ))
    });
}
