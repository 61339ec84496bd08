//! Grid solver for the fluid model of the processor-sharing queue with
//! reneging.
//!
//! The total-mass function solves
//!
//! ```text
//! z(t) = z0 P(B0 > S(0,t), D0 > t) + lambda Int_0^t P(B > S(s,t), D > t-s) ds
//! ```
//!
//! with `S(u,v) = Int_u^v 1/z(s) ds`. The solver runs the monotone Picard
//! iteration seeded at `z0 + lambda t`; the iterates decrease pointwise to the
//! maximal solution. Discretization: uniform grid, trapezoid rule both for the
//! prefix integrals `S` and for the time integral, which keeps each iterate a
//! monotone function of the previous one.
//!
//! When `z0 = 0` the prefix `S(0, t)` is infinite for every `t > 0` and the
//! initial term vanishes; the `s = 0` quadrature node then evaluates the tail
//! at an infinite service argument, which is only nonzero for laws charging
//! `B = inf`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laws::{JointLaw, ModelData, ScalarLaw};

/// Sup-norm stopping tolerance between Picard iterates.
pub const PICARD_TOL: f64 = 1e-8;
/// Iteration budget of the Picard loop.
pub const PICARD_MAX_ITER: usize = 500;
/// Iterates dipping below this level at an interior grid point abort the
/// solve: the fluid model definition excludes interior zeros.
const INTERIOR_FLOOR: f64 = 1e-12;
/// Grid size above which the per-point tail sums run on the rayon pool.
const PAR_THRESHOLD: usize = 512;

/// Data of one fluid solve: model, initial condition, grid.
#[derive(Debug, Clone)]
pub struct FluidProblem {
    pub model: ModelData,
    pub z0: f64,
    /// Joint law of `(B0, D0)` for the initial mass; required iff `z0 > 0`.
    pub initial_law: Option<JointLaw>,
    pub horizon: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl FluidProblem {
    pub fn new(
        model: ModelData,
        z0: f64,
        initial_law: Option<JointLaw>,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be finite and positive, got {horizon}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be finite and positive, got {dt}"
            )));
        }
        let steps = horizon / dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon/dt = {steps} is not an integer number of steps"
            )));
        }
        if !(z0.is_finite() && z0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial mass must be finite and nonnegative, got {z0}"
            )));
        }
        if z0 > 0.0 && initial_law.is_none() {
            return Err(Error::InvalidParameter(
                "z0 > 0 requires an initial law for (B0, D0)".into(),
            ));
        }
        if z0 == 0.0 && initial_law.is_some() {
            return Err(Error::InvalidParameter(
                "z0 = 0 admits no initial law (the initial term is identically zero)".into(),
            ));
        }
        Ok(FluidProblem {
            model,
            z0,
            initial_law,
            horizon,
            dt,
            tol: PICARD_TOL,
            max_iter: PICARD_MAX_ITER,
        })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Non-fatal diagnostics: currently a single check that `dt` resolves
    /// the fastest time scale of the data.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut scale = f64::INFINITY;
        if self.model.lambda > 0.0 {
            scale = scale.min(1.0 / self.model.lambda);
        }
        if let Ok(m) = self.model.law.e_min(1.0) {
            scale = scale.min(m);
        }
        if scale.is_finite() && self.dt > 0.01 * scale {
            out.push(format!(
                "dt = {} is coarse relative to the fastest model scale {:.3e}; \
                 consider dt <= {:.3e}",
                self.dt,
                scale,
                0.01 * scale
            ));
        }
        out
    }

    /// When the initial law has a Lipschitz lead-time tail, the fluid model
    /// solution is unique, so the maximal solution returned by the solver is
    /// the only one.
    pub fn uniqueness_advisory(&self) -> Option<String> {
        let law = self.initial_law.as_ref()?;
        let lip = law.d_tail_lipschitz()?;
        Some(format!(
            "initial lead-time tail is Lipschitz (constant {lip:.4});\
             the computed maximal solution is the unique fluid model solution"
        ))
    }
}

/// Discretized fluid model solution on the uniform grid.
#[derive(Debug, Clone)]
pub struct FluidTrajectory {
    problem: FluidProblem,
    times: Vec<f64>,
    z: Vec<f64>,
    /// `S(0, t_k)`; infinite for `k >= 1` when `z0 = 0`.
    s0: Vec<f64>,
    /// `S(t_base, t_k)`: finite prefix used for interior increments.
    prefix: Vec<f64>,
    base: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Largest pointwise increase observed between consecutive Picard
    /// iterates; the monotone scheme keeps this at rounding level.
    pub max_monotonicity_violation: f64,
}

/// Tail evaluator for the time integral, with the lag-dependent factor
/// precomputed on the grid where the law structure allows it.
enum Kernel<'a> {
    Product {
        b: &'a ScalarLaw,
        d_grid: Vec<f64>,
    },
    TcpSum {
        p: f64,
        b1: &'a ScalarLaw,
        d1_grid: Vec<f64>,
    },
    Generic {
        law: &'a JointLaw,
        times: &'a [f64],
    },
}

impl<'a> Kernel<'a> {
    fn new(law: &'a JointLaw, times: &'a [f64]) -> Self {
        match law {
            JointLaw::Independent { b, d } => Kernel::Product {
                b,
                d_grid: times.iter().map(|&t| d.tail(t)).collect(),
            },
            JointLaw::TcpMixture { p, b1, d1 } => Kernel::TcpSum {
                p: *p,
                b1,
                d1_grid: times.iter().map(|&t| d1.tail(t)).collect(),
            },
            _ => Kernel::Generic { law, times },
        }
    }

    #[inline]
    fn eval(&self, service: f64, lag: usize) -> f64 {
        match self {
            Kernel::Product { b, d_grid } => b.tail(service) * d_grid[lag],
            Kernel::TcpSum { p, b1, d1_grid } => p * b1.tail(service) + (1.0 - p) * d1_grid[lag],
            Kernel::Generic { law, times } => law.tail(service, times[lag]),
        }
    }
}

#[inline]
fn add_inf(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        a + b
    }
}

/// Trapezoid prefix of `1/z` starting at grid index `base`. Zeros of `z`
/// inside the range contribute nothing, matching the idle-server convention
/// of the cumulative service process.
fn prefix_from(z: &[f64], dt: f64, base: usize) -> Vec<f64> {
    let inv = |v: f64| if v > 0.0 { 1.0 / v } else { 0.0 };
    let mut p = vec![0.0; z.len()];
    for k in base..z.len() - 1 {
        p[k + 1] = p[k] + dt * 0.5 * (inv(z[k]) + inv(z[k + 1]));
    }
    p
}

/// One application of the discrete Picard map.
fn picard_apply(problem: &FluidProblem, kernel: &Kernel<'_>, z: &[f64]) -> Vec<f64> {
    let n = z.len() - 1;
    let dt = problem.dt;
    let z0 = problem.z0;
    let lam = problem.model.lambda;
    let base = if z0 == 0.0 { 1 } else { 0 };
    let prefix = prefix_from(z, dt, base);

    let eval_point = |k: usize| -> f64 {
        if k == 0 {
            return z0;
        }
        let t_k = k as f64 * dt;
        let init = match (&problem.initial_law, z0 > 0.0) {
            (Some(law0), true) => z0 * law0.tail(prefix[k], t_k),
            _ => 0.0,
        };
        let mut sum = 0.0;
        for j in 0..=k {
            let service = if j < base {
                f64::INFINITY
            } else {
                prefix[k] - prefix[j]
            };
            let w = if j == 0 || j == k { 0.5 } else { 1.0 };
            sum += w * kernel.eval(service, k - j);
        }
        init + lam * dt * sum
    };

    if n >= PAR_THRESHOLD {
        (0..=n).into_par_iter().map(eval_point).collect()
    } else {
        (0..=n).map(eval_point).collect()
    }
}

/// Runs the monotone Picard iteration and returns the discretized maximal
/// fluid model solution.
pub fn solve_trajectory(problem: FluidProblem) -> Result<FluidTrajectory> {
    if problem.z0 == 0.0 && problem.model.lambda == 0.0 {
        return Err(Error::Degenerate(
            "z0 = 0 and lambda = 0: the zero trajectory carries no information".into(),
        ));
    }
    let report = problem.model.feasibility();
    if !report.trajectory_ok() {
        let failures = report
            .failures()
            .into_iter()
            .filter(|f| !f.contains("rho"))
            .collect::<Vec<_>>();
        if !failures.is_empty() {
            return Err(Error::Infeasible(failures));
        }
    }

    let n = problem.steps();
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * problem.dt).collect();
    let kernel = Kernel::new(&problem.model.law, &times);

    let mut z: Vec<f64> = times
        .iter()
        .map(|&t| problem.z0 + problem.model.lambda * t)
        .collect();
    let mut max_viol: f64 = 0.0;
    let mut iterations = 0;
    let mut sup_diff = f64::INFINITY;

    while iterations < problem.max_iter {
        let next = picard_apply(&problem, &kernel, &z);
        iterations += 1;
        sup_diff = 0.0;
        for k in 0..=n {
            let d = next[k] - z[k];
            max_viol = max_viol.max(d);
            sup_diff = sup_diff.max(d.abs());
        }
        z = next;
        if z[1..].iter().any(|&v| v < INTERIOR_FLOOR) {
            return Err(Error::NoConvergence {
                iterations,
                sup_diff,
            });
        }
        if sup_diff < problem.tol {
            let mut traj = FluidTrajectory::assemble(problem, times, z);
            traj.iterations = iterations;
            traj.converged = true;
            traj.max_monotonicity_violation = max_viol;
            return Ok(traj);
        }
    }
    Err(Error::NoConvergence {
        iterations,
        sup_diff,
    })
}

impl FluidTrajectory {
    fn assemble(problem: FluidProblem, times: Vec<f64>, z: Vec<f64>) -> Self {
        let base = if problem.z0 == 0.0 { 1 } else { 0 };
        let prefix = prefix_from(&z, problem.dt, base);
        let s0 = if base == 0 {
            prefix.clone()
        } else {
            let mut v = vec![f64::INFINITY; z.len()];
            v[0] = 0.0;
            v
        };
        FluidTrajectory {
            problem,
            times,
            z,
            s0,
            prefix,
            base,
            iterations: 0,
            converged: false,
            max_monotonicity_violation: 0.0,
        }
    }

    /// Wraps externally supplied grid values (for example a closed-form
    /// trajectory) so that the residual certificate and the measure
    /// evaluation can be applied to them.
    pub fn with_values(problem: FluidProblem, z: Vec<f64>) -> Result<Self> {
        let n = problem.steps();
        if z.len() != n + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} grid values, got {}",
                n + 1,
                z.len()
            )));
        }
        if (z[0] - problem.z0).abs() > 1e-9 * problem.z0.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "z[0] = {} does not match z0 = {}",
                z[0], problem.z0
            )));
        }
        if z.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "trajectory values must be finite and nonnegative".into(),
            ));
        }
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * problem.dt).collect();
        Ok(FluidTrajectory::assemble(problem, times, z))
    }

    pub fn problem(&self) -> &FluidProblem {
        &self.problem
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// `S(0, t_k)` per grid point; infinite for `k >= 1` when `z0 = 0`.
    pub fn s0(&self) -> &[f64] {
        &self.s0
    }

    pub fn dt(&self) -> f64 {
        self.problem.dt
    }

    pub fn horizon(&self) -> f64 {
        self.problem.horizon
    }

    /// Linear interpolation of the mass function between grid points.
    pub fn z_at(&self, t: f64) -> f64 {
        assert!(
            (0.0..=self.problem.horizon + 1e-12).contains(&t),
            "t outside the grid"
        );
        let pos = t / self.problem.dt;
        let k = (pos.floor() as usize).min(self.z.len() - 1);
        if k + 1 >= self.z.len() {
            return self.z[k];
        }
        let frac = pos - k as f64;
        self.z[k] * (1.0 - frac) + self.z[k + 1] * frac
    }

    /// Interpolated finite prefix `S(t_base, s)`.
    fn prefix_at(&self, s: f64) -> f64 {
        let pos = s / self.problem.dt;
        let k = (pos.floor() as usize)
            .max(self.base)
            .min(self.prefix.len() - 1);
        if k + 1 >= self.prefix.len() {
            return self.prefix[k];
        }
        let frac = (pos - k as f64).max(0.0);
        self.prefix[k] * (1.0 - frac) + self.prefix[k + 1] * frac
    }

    /// Cumulative service per job `S(s, t)` for `0 <= s <= t <= horizon`.
    ///
    /// By convention the result is infinite when `z0 = 0` and `s = 0`. For
    /// `0 < s < dt` in that regime the first cell is integrated against the
    /// small-time profile `z(u) ~ lambda u`.
    pub fn cumulative_service(&self, s: f64, t: f64) -> f64 {
        assert!(
            0.0 <= s && s <= t && t <= self.problem.horizon + 1e-12,
            "cumulative_service requires 0 <= s <= t <= horizon"
        );
        if s == t {
            return 0.0;
        }
        if self.base == 1 {
            if s == 0.0 {
                return f64::INFINITY;
            }
            if s < self.problem.dt {
                let head = (self.problem.dt / s).ln() / self.problem.model.lambda;
                return head + self.prefix_at(t);
            }
        }
        self.prefix_at(t) - self.prefix_at(s)
    }

    /// Measure-valued state `zeta(t)(x, y)` at a grid time: the fluid mass
    /// of jobs with residual service `> x` and residual lead time `> y`.
    pub fn eval_measure(&self, t: f64, x: f64, y: f64) -> f64 {
        assert!(x >= 0.0 && y >= 0.0);
        let pos = t / self.problem.dt;
        let k = pos.round() as usize;
        assert!(
            (pos - k as f64).abs() < 1e-6 && k < self.times.len(),
            "eval_measure requires a grid time"
        );
        if k == 0 {
            if let Some(law0) = &self.problem.initial_law {
                return self.problem.z0 * law0.tail(x, y);
            }
            return 0.0;
        }
        let dt = self.problem.dt;
        let t_k = self.times[k];
        let law = &self.problem.model.law;
        let init = match &self.problem.initial_law {
            Some(law0) => self.problem.z0 * law0.tail(add_inf(x, self.s0[k]), y + t_k),
            None => 0.0,
        };
        let mut sum = 0.0;
        for j in 0..=k {
            let service = if j < self.base {
                f64::INFINITY
            } else {
                self.prefix[k] - self.prefix[j]
            };
            let w = if j == 0 || j == k { 0.5 } else { 1.0 };
            sum += w * law.tail(add_inf(x, service), y + self.times[k - j]);
        }
        init + self.problem.model.lambda * dt * sum
    }

    /// Sup-norm defect of the discrete fixed-point map on this trajectory:
    /// a certificate that the stored values solve the discretized equation.
    pub fn residual(&self) -> f64 {
        let kernel = Kernel::new(&self.problem.model.law, &self.times);
        let mapped = picard_apply(&self.problem, &kernel, &self.z);
        self.z
            .iter()
            .zip(mapped.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse of the cumulative service process: the first time `s` with
    /// `S(0, s) >= u`, linearly interpolated between grid points.
    pub fn time_change(&self, u: f64) -> Result<f64> {
        if self.problem.z0 == 0.0 {
            return Err(Error::Domain(
                "time change is undefined for z0 = 0 (S(0,t) is infinite)".into(),
            ));
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        let last = *self.prefix.last().unwrap();
        if u > last {
            return Err(Error::Domain(format!(
                "u = {u} exceeds S(0, horizon) = {last}"
            )));
        }
        let k = self.prefix.partition_point(|&p| p < u);
        // prefix[k-1] < u <= prefix[k]
        let (p0, p1) = (self.prefix[k - 1], self.prefix[k]);
        let frac = if p1 > p0 { (u - p0) / (p1 - p0) } else { 1.0 };
        Ok(self.times[k - 1] + frac * self.problem.dt)
    }
}
