//! Closed-form oracles for the solvable model families and the
//! simulator-versus-fluid convergence experiment.
//!
//! The oracles are independent of the generic solvers: each one evaluates a
//! formula specific to its family (dependent lead times `D = Theta B`,
//! exponential reneging, elastic/streaming mixtures), so agreement with
//! `solve_fixed_point` and `solve_trajectory` is a genuine cross-check.

use crate::error::{Error, Result};
use crate::fluid::{solve_trajectory, FluidProblem};
use crate::laws::{JointLaw, ModelData, ScalarKind, ScalarLaw};
use crate::quad;
use crate::rng::replication_seed;
use crate::sim::{run_replications, scaled_total_mass, SimConfig};

/// Closed-form fluid trajectory for exponential reneging starting empty:
/// `z(t) = z_inf (1 - e^{-nu t})`.
#[derive(Debug, Clone, Copy)]
pub struct ExpTrajectoryOracle {
    pub z_inf: f64,
    pub nu: f64,
}

impl ExpTrajectoryOracle {
    pub fn z(&self, t: f64) -> f64 {
        self.z_inf * (1.0 - (-self.nu * t).exp())
    }
}

/// Equilibrium-distribution transform `beta*(s) = E[e^{-s B*}]` where `B*`
/// has density `P(B > x) / E[B]`.
///
/// Closed form for exponential `B`; numerical for the other variants via
/// `(Int_0^inf e^{-st} P(B > t) dt) / E[B]`.
pub fn equilibrium_lst(b: &ScalarLaw, s: f64) -> Result<f64> {
    assert!(s > 0.0);
    if !b.is_proper() {
        return Err(Error::Unsupported(
            "equilibrium distribution needs a proper service law".into(),
        ));
    }
    if let ScalarKind::Exponential(rate) = *b.kind() {
        return Ok(1.0 / (1.0 + s / rate));
    }
    let numer = quad::integrate_half_line(
        |t| (-s * t).exp() * b.tail(t),
        &b.breakpoints(),
        quad::DEFAULT_TOL,
    )?;
    Ok(numer / b.mean())
}

/// Steady state and full trajectory for independent exponential lead times
/// (rate `nu`) and empty initial condition.
///
/// `z_inf` solves `rho beta*(z_inf nu) = 1`.
pub fn oracle_exponential_trajectory(
    lambda: f64,
    nu: f64,
    b: &ScalarLaw,
) -> Result<ExpTrajectoryOracle> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "nu must be positive, got {nu}"
        )));
    }
    let rho = lambda * b.mean();
    if rho <= 1.0 || !rho.is_finite() {
        return Err(Error::Infeasible(vec![format!(
            "rho = {rho} must be finite and > 1"
        )]));
    }
    let h = |z: f64| -> Result<f64> { Ok(rho * equilibrium_lst(b, z * nu)? - 1.0) };
    // h is decreasing with h(0+) = rho - 1 > 0
    let mut lo = 1e-12;
    let mut hi = 1.0;
    let mut doublings = 0;
    while h(hi)? > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::Bracket(
                "no sign change for the reneging transform".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(ExpTrajectoryOracle {
        z_inf: 0.5 * (lo + hi),
        nu,
    })
}

/// Steady state for dependent lead times `D = Theta B`.
#[derive(Debug, Clone, Copy)]
pub struct ThetaOracle {
    pub z_inf: f64,
    pub p_success: f64,
    /// Set when the two-valued case lands exactly on `z_inf = theta2`, where
    /// the success fraction is not determined by the formulas (the strict
    /// tail gives 0, the case split suggests `1 - p`).
    pub knife_edge: bool,
}

/// Dispatches on the `Theta` variant to the closed forms of the dependent
/// lead-time family.
pub fn oracle_theta(lambda: f64, b: &ScalarLaw, theta: &ScalarLaw) -> Result<ThetaOracle> {
    let rho = lambda * b.mean();
    if !(rho.is_finite() && rho > 1.0) {
        return Err(Error::Infeasible(vec![format!(
            "rho = {rho} must be finite and > 1"
        )]));
    }
    if !theta.is_proper() {
        return Err(Error::Unsupported(
            "patience factor with mass at infinity has no closed form here".into(),
        ));
    }
    match *theta.kind() {
        ScalarKind::Deterministic(theta0) => Ok(ThetaOracle {
            z_inf: rho * theta0,
            p_success: 0.0,
            knife_edge: false,
        }),
        ScalarKind::TwoPoint { v1, p1, v2 } => {
            if rho * (1.0 - p1) < 1.0 {
                let interior = rho * p1 * v1 / (1.0 - rho * (1.0 - p1));
                let rel = (interior - v2).abs() / v2;
                if rel <= 1e-12 {
                    return Ok(ThetaOracle {
                        z_inf: v2,
                        p_success: 0.0,
                        knife_edge: true,
                    });
                }
                if interior < v2 {
                    return Ok(ThetaOracle {
                        z_inf: interior,
                        p_success: 1.0 - p1,
                        knife_edge: false,
                    });
                }
            }
            // the patient class saturates the server on its own
            Ok(ThetaOracle {
                z_inf: rho * p1 * v1 + rho * (1.0 - p1) * v2,
                p_success: 0.0,
                knife_edge: false,
            })
        }
        ScalarKind::Exponential(nu) => {
            // z = rho (1 - e^{-nu z}) / nu, positive root by bisection
            let g = |z: f64| rho * (1.0 - (-nu * z).exp()) / nu - z;
            let mut lo = 1e-12;
            let mut hi = rho / nu;
            debug_assert!(g(lo) > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-13 * hi.max(1.0) {
                    break;
                }
            }
            let z = 0.5 * (lo + hi);
            Ok(ThetaOracle {
                z_inf: z,
                p_success: (-nu * z).exp(),
                knife_edge: false,
            })
        }
        _ => Err(Error::Unsupported(format!(
            "no closed form for patience factor {:?}",
            theta.kind()
        ))),
    }
}

/// Steady state of the elastic/streaming mixture: with probability `p` a job
/// is `(B1, inf)`, otherwise `(inf, D1)`. Requires the stability condition
/// `lambda p E[B1] < 1`.
pub fn oracle_tcp(lambda: f64, p: f64, mean_b1: f64, mean_d1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || mean_b1 <= 0.0 || mean_d1 <= 0.0 {
        return Err(Error::InvalidParameter(
            "need p in [0,1] and positive component means".into(),
        ));
    }
    let elastic_load = lambda * p * mean_b1;
    if elastic_load >= 1.0 {
        return Err(Error::Infeasible(vec![format!(
            "lambda p E[B1] = {elastic_load} >= 1"
        )]));
    }
    Ok(lambda * (1.0 - p) * mean_d1 / (1.0 - elastic_load))
}

/// One row of a convergence experiment: fluid-scaled simulated mass at scale
/// `r` and probe time `t` against the fluid model value.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub r: f64,
    pub t: f64,
    pub reps: usize,
    pub mean_scaled_mass: f64,
    pub fluid_z: f64,
    /// `|mean_scaled_mass - fluid_z|`.
    pub abs_err: f64,
    /// Sample standard deviation of the scaled masses over replications,
    /// divided by `sqrt(reps)`.
    pub std_err: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// True when `abs_err` is strictly decreasing in `r` at every probe time.
    pub fn error_monotone_in_r(&self) -> bool {
        let mut times: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.iter().all(|&t| {
            let mut errs: Vec<(f64, f64)> = self
                .rows
                .iter()
                .filter(|row| row.t == t)
                .map(|row| (row.r, row.abs_err))
                .collect();
            errs.sort_by(|a, b| a.0.total_cmp(&b.0));
            errs.windows(2).all(|w| w[1].1 < w[0].1)
        })
    }
}

/// Template for a family of scaled simulations compared against one fluid
/// solve on the unscaled data.
#[derive(Debug, Clone)]
pub struct ConvergenceSpec {
    pub interarrival: ScalarLaw,
    pub law: JointLaw,
    /// Fluid initial mass; the `r`-system starts with `round(r z0)` jobs.
    pub z0: f64,
    pub initial_law: Option<JointLaw>,
    pub master_seed: u64,
    /// Grid step of the fluid reference solve.
    pub fluid_dt: f64,
}

/// Runs `reps` scaled simulations per scale in `r_list`, probing the scaled
/// mass at the given fluid times, and compares against the fluid solution of
/// the unscaled data. Rows are sorted by `(r, t)`.
pub fn convergence_experiment(
    spec: &ConvergenceSpec,
    r_list: &[f64],
    reps: usize,
    times: &[f64],
) -> Result<ConvergenceTable> {
    if reps == 0 || times.is_empty() || r_list.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one scale, one probe time, and one replication".into(),
        ));
    }
    if times.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "probe times must be finite and positive, got {times:?}"
        )));
    }
    if r_list.iter().any(|&r| !(r.is_finite() && r >= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "scales must be finite and >= 1, got {r_list:?}"
        )));
    }
    let mean_inter = spec.interarrival.mean();
    if !mean_inter.is_finite() || mean_inter <= 0.0 {
        return Err(Error::InvalidParameter(
            "interarrival law must have a positive finite mean".into(),
        ));
    }
    let lambda = 1.0 / mean_inter;
    let model = ModelData::new(lambda, spec.law.clone())?;

    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    let t_max = *times.last().unwrap();
    let problem = FluidProblem::new(
        model.clone(),
        spec.z0,
        spec.initial_law.clone(),
        t_max,
        spec.fluid_dt,
    )?;
    let fluid = solve_trajectory(problem)?;

    let mut r_list = r_list.to_vec();
    r_list.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(r_list.len() * times.len());
    for (r_idx, &r) in r_list.iter().enumerate() {
        let config = SimConfig {
            interarrival: spec.interarrival.clone(),
            law: spec.law.clone(),
            initial_count: (r * spec.z0).round() as usize,
            initial_law: spec.initial_law.clone(),
            horizon: r * t_max,
            seed: replication_seed(spec.master_seed, 1_000_000 + r_idx as u64),
            snapshot_times: times.iter().map(|&t| r * t).collect(),
            r,
            record_events: false,
            first_arrival: None,
        };
        let results = run_replications(&config, reps)?;
        for (ti, &t) in times.iter().enumerate() {
            let masses: Vec<f64> = results
                .iter()
                .map(|(_, snaps)| scaled_total_mass(&snaps[ti], r))
                .collect();
            let mean = masses.iter().sum::<f64>() / reps as f64;
            let var = if reps > 1 {
                masses.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (reps - 1) as f64
            } else {
                0.0
            };
            let fluid_z = fluid.z_at(t);
            rows.push(ConvergenceRow {
                r,
                t,
                reps,
                mean_scaled_mass: mean,
                fluid_z,
                abs_err: (mean - fluid_z).abs(),
                std_err: (var / reps as f64).sqrt(),
            });
        }
    }
    Ok(ConvergenceTable { rows })
}
