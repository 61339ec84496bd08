//! Model data: arrival rate plus the joint law of `(B, D)`.

use crate::error::{Error, Result};
use crate::laws::joint::JointLaw;

/// Arrival rate and job-size law of a processor-sharing queue with reneging.
///
/// The traffic intensity `rho = lambda * E[B]` is always recomputed from the
/// law, never cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub lambda: f64,
    pub law: JointLaw,
}

impl ModelData {
    pub fn new(lambda: f64, law: JointLaw) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arrival rate must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(ModelData { lambda, law })
    }

    /// Traffic intensity `lambda * E[B]`; may be infinite.
    pub fn rho(&self) -> f64 {
        if self.lambda == 0.0 {
            0.0
        } else {
            self.lambda * self.law.mean_b()
        }
    }

    /// Evaluates the four steady-state feasibility conditions.
    pub fn feasibility(&self) -> FeasibilityReport {
        let rho = self.rho();
        let offered_impatient_free = self.lambda * self.law.mean_b_given_d_infinite();
        let min_bd = self.law.e_min(1.0).unwrap_or(f64::INFINITY);
        FeasibilityReport {
            support_ok: true, // enforced by the law constructors
            offered_impatient_free,
            offered_ok: offered_impatient_free < 1.0,
            min_service_deadline_mean: min_bd,
            min_mean_finite: min_bd.is_finite(),
            rho,
            overloaded: rho > 1.0,
        }
    }
}

/// Pass/fail record of the conditions under which the fluid model has a
/// bounded trajectory and a unique positive steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Support constraints on the joint law (no mass on the axes or at
    /// `(inf, inf)`); guaranteed by construction.
    pub support_ok: bool,
    /// `lambda * E[B 1_{D = inf}]`.
    pub offered_impatient_free: f64,
    /// `lambda * E[B 1_{D = inf}] < 1`.
    pub offered_ok: bool,
    /// `E[min{B, D}]`.
    pub min_service_deadline_mean: f64,
    /// `E[min{B, D}] < inf`.
    pub min_mean_finite: bool,
    /// `lambda * E[B]`.
    pub rho: f64,
    /// `rho > 1`.
    pub overloaded: bool,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.support_ok && self.offered_ok && self.min_mean_finite && self.overloaded
    }

    /// Conditions required for a bounded trajectory (overload not needed).
    pub fn trajectory_ok(&self) -> bool {
        self.support_ok && self.offered_ok && self.min_mean_finite
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.support_ok {
            out.push("law support violates the standing assumption".to_string());
        }
        if !self.offered_ok {
            out.push(format!(
                "lambda*E[B 1{{D=inf}}] = {} >= 1",
                self.offered_impatient_free
            ));
        }
        if !self.min_mean_finite {
            out.push("E[min{B, D}] is infinite".to_string());
        }
        if !self.overloaded {
            out.push(format!("rho = {} <= 1 (server not overloaded)", self.rho));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::scalar::ScalarLaw;

    fn exp(rate: f64) -> ScalarLaw {
        ScalarLaw::exponential(rate).unwrap()
    }

    #[test]
    fn feasible_exponential_model_passes_all_conditions() {
        let law = JointLaw::independent(exp(1.0), exp(1.0)).unwrap();
        let model = ModelData::new(2.0, law).unwrap();
        let report = model.feasibility();
        assert!(report.all_pass());
        assert_eq!(report.rho, 2.0);
        assert_eq!(report.offered_impatient_free, 0.0);
    }

    #[test]
    fn overloaded_tcp_mixture_fails_offered_load() {
        let law = JointLaw::tcp_mixture(0.6, exp(1.0), exp(1.0)).unwrap();
        let model = ModelData::new(2.0, law).unwrap();
        let report = model.feasibility();
        assert!(!report.offered_ok);
        assert!((report.offered_impatient_free - 1.2).abs() < 1e-12);
        assert!(!report.all_pass());
        assert!(report.rho.is_infinite());
    }

    #[test]
    fn subcritical_model_fails_overload() {
        let law = JointLaw::independent(exp(1.0), exp(1.0)).unwrap();
        let model = ModelData::new(0.5, law).unwrap();
        let report = model.feasibility();
        assert!(!report.overloaded);
        assert!(report.offered_ok && report.min_mean_finite);
        assert_eq!(report.failures().len(), 1);
    }

    #[test]
    fn rho_is_recomputed_from_the_law() {
        let law = JointLaw::independent(exp(2.0), exp(1.0)).unwrap();
        let mut model = ModelData::new(3.0, law).unwrap();
        assert!((model.rho() - 1.5).abs() < 1e-12);
        model.lambda = 4.0;
        assert!((model.rho() - 2.0).abs() < 1e-12);
    }
}
