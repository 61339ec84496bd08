//! Steady state of the fluid model: the equilibrium mass `z_inf`, the
//! success fraction `P_s`, and the limiting measure.
//!
//! The equilibrium mass is the unique positive root of
//! `z = lambda E[min{z B, D}]`; the right side minus `z` is concave with a
//! single sign change, so plain bisection is reliable even when the
//! expectation is evaluated by quadrature.

use crate::error::{Error, Result};
use crate::laws::ModelData;

/// Relative width at which the bisection bracket stops shrinking.
pub const BISECTION_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 60;
const BRACKET_FLOOR: f64 = 1e-9;

/// Solution record of the fixed-point equation.
#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub z_inf: f64,
    pub p_success: f64,
    /// Final bisection bracket around the root.
    pub bracket: (f64, f64),
    /// Number of evaluations of the fixed-point function.
    pub evals: usize,
    /// `|lambda * E[min{z_inf B, D}] - z_inf|`.
    pub residual: f64,
}

/// Solves `z = lambda E[min{z B, D}]` by bisection.
///
/// Requires all four feasibility conditions; the initial upper bracket is
/// `lambda E[min{B, D}]` doubled until the fixed-point function changes sign.
pub fn solve_fixed_point(model: &ModelData) -> Result<SteadyStateReport> {
    let report = model.feasibility();
    if !report.all_pass() {
        return Err(Error::Infeasible(report.failures()));
    }
    let lam = model.lambda;
    let mut evals = 0;
    let mut g = |z: f64| -> Result<f64> {
        evals += 1;
        Ok(lam * model.law.e_min(z)? - z)
    };

    let mut lo = BRACKET_FLOOR;
    if g(lo)? <= 0.0 {
        return Err(Error::Bracket(format!(
            "fixed-point function not positive at z = {lo}"
        )));
    }
    let mut hi = lam * model.law.e_min(1.0)?;
    let mut doublings = 0;
    while g(hi)? >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Bracket(format!(
                "no sign change found up to z = {hi}"
            )));
        }
    }

    while hi - lo > BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z_inf = 0.5 * (lo + hi);
    let residual = (lam * model.law.e_min(z_inf)? - z_inf).abs();
    Ok(SteadyStateReport {
        z_inf,
        p_success: success_fraction(model, z_inf),
        bracket: (lo, hi),
        evals,
        residual,
    })
}

/// Long-run fraction of jobs completing service, `P(D > z_inf B)`.
pub fn success_fraction(model: &ModelData, z_inf: f64) -> f64 {
    assert!(z_inf > 0.0, "success fraction requires z_inf > 0");
    model.law.success_probability(z_inf)
}

/// Limiting measure on the corner set `[x, inf] x [y, inf]`:
/// `zeta_inf(x, y) = lambda E[min{z_inf (B - x)^+, (D - y)^+}]`.
pub fn steady_measure(model: &ModelData, z_inf: f64, x: f64, y: f64) -> Result<f64> {
    assert!(z_inf > 0.0, "steady measure requires z_inf > 0");
    Ok(model.lambda * model.law.e_min_overshoot(z_inf, x, y)?)
}

/// The model with lead times scaled to `(B, a D)` at the same arrival rate.
pub fn scaling_transform(model: &ModelData, a: f64) -> Result<ModelData> {
    ModelData::new(model.lambda, model.law.scale_d(a)?)
}
