//! Config file schema and validation.
//!
//! The config is a TOML file with per-command sections sharing one `[model]`
//! block. Every field is optional at parse time; the validator for each
//! command collects all problems into one consolidated report before any
//! run starts, so a broken config fails with the full list of offending
//! fields rather than the first one.

use serde::Deserialize;

use psq_core::{JointLaw, ModelData, ScalarLaw};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub model: Option<RawModel>,
    pub fluid: Option<RawFluid>,
    pub sim: Option<RawSim>,
    pub converge: Option<RawConverge>,
    pub output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub lambda: Option<f64>,
    pub law: Option<RawJoint>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFluid {
    pub z0: Option<f64>,
    pub initial_law: Option<RawJoint>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub measure: Option<RawMeasure>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMeasure {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSim {
    pub interarrival: Option<RawScalar>,
    pub first_arrival: Option<RawScalar>,
    pub r: Option<f64>,
    pub reps: Option<usize>,
    pub horizon: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    pub initial_count: Option<usize>,
    pub initial_law: Option<RawJoint>,
    pub write_events: Option<bool>,
    pub write_snapshots: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConverge {
    pub r_list: Option<Vec<f64>>,
    pub reps: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub fluid_dt: Option<f64>,
    pub z0: Option<f64>,
    pub initial_law: Option<RawJoint>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<String>,
    pub prefix: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScalar {
    pub dist: Option<String>,
    pub value: Option<f64>,
    pub rate: Option<f64>,
    pub v1: Option<f64>,
    pub p1: Option<f64>,
    pub v2: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub q_inf: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawJoint {
    pub kind: Option<String>,
    pub b: Option<RawScalar>,
    pub d: Option<RawScalar>,
    pub theta: Option<RawScalar>,
    pub p: Option<f64>,
    pub b1: Option<RawScalar>,
    pub d1: Option<RawScalar>,
    pub pairs: Option<Vec<[f64; 2]>>,
}

/// Collects field-level validation errors for one consolidated report.
#[derive(Debug, Default)]
pub struct Validator {
    pub errors: Vec<String>,
}

impl Validator {
    pub fn fail(&mut self, field: &str, message: impl AsRef<str>) {
        self.errors.push(format!("{field}: {}", message.as_ref()));
    }

    pub fn require<T: Copy>(&mut self, value: Option<T>, field: &str) -> Option<T> {
        if value.is_none() {
            self.fail(field, "required");
        }
        value
    }

    pub fn into_result(self) -> Result<(), Vec<String>> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(self.errors)
        }
    }
}

pub fn build_scalar(raw: &RawScalar, path: &str, v: &mut Validator) -> Option<ScalarLaw> {
    let dist = match &raw.dist {
        Some(d) => d.as_str(),
        None => {
            v.fail(&format!("{path}.dist"), "required");
            return None;
        }
    };
    let base = match dist {
        "deterministic" => match raw.value {
            Some(x) => ScalarLaw::deterministic(x),
            None => {
                v.fail(
                    &format!("{path}.value"),
                    "required for dist = \"deterministic\"",
                );
                return None;
            }
        },
        "exp" => match raw.rate {
            Some(x) => ScalarLaw::exponential(x),
            None => {
                v.fail(&format!("{path}.rate"), "required for dist = \"exp\"");
                return None;
            }
        },
        "two-point" => match (raw.v1, raw.p1, raw.v2) {
            (Some(v1), Some(p1), Some(v2)) => ScalarLaw::two_point(v1, p1, v2),
            _ => {
                v.fail(path, "two-point needs v1, p1, v2");
                return None;
            }
        },
        "uniform" => match (raw.lo, raw.hi) {
            (Some(lo), Some(hi)) => ScalarLaw::uniform(lo, hi),
            _ => {
                v.fail(path, "uniform needs lo, hi");
                return None;
            }
        },
        "infinity" => Ok(ScalarLaw::point_at_infinity()),
        other => {
            v.fail(
                &format!("{path}.dist"),
                format!("unknown distribution {other:?} (expected deterministic, exp, two-point, uniform, infinity)"),
            );
            return None;
        }
    };
    let law = match base {
        Ok(law) => law,
        Err(e) => {
            v.fail(path, e.to_string());
            return None;
        }
    };
    match raw.q_inf {
        None => Some(law),
        Some(q) => match law.with_atom_at_infinity(q) {
            Ok(law) => Some(law),
            Err(e) => {
                v.fail(&format!("{path}.q_inf"), e.to_string());
                None
            }
        },
    }
}

pub fn build_joint(raw: &RawJoint, path: &str, v: &mut Validator) -> Option<JointLaw> {
    let kind = match &raw.kind {
        Some(k) => k.as_str(),
        None => {
            v.fail(&format!("{path}.kind"), "required");
            return None;
        }
    };
    let scalar = |field: &str, raw: &Option<RawScalar>, v: &mut Validator| -> Option<ScalarLaw> {
        match raw {
            Some(s) => build_scalar(s, &format!("{path}.{field}"), v),
            None => {
                v.fail(
                    &format!("{path}.{field}"),
                    format!("required for kind = {kind:?}"),
                );
                None
            }
        }
    };
    let built = match kind {
        "independent" => {
            let b = scalar("b", &raw.b, v);
            let d = scalar("d", &raw.d, v);
            JointLaw::independent(b?, d?)
        }
        "proportional" => {
            let b = scalar("b", &raw.b, v);
            let theta = scalar("theta", &raw.theta, v);
            JointLaw::proportional(b?, theta?)
        }
        "tcp" => {
            let p = v.require(raw.p, &format!("{path}.p"));
            let b1 = scalar("b1", &raw.b1, v);
            let d1 = scalar("d1", &raw.d1, v);
            JointLaw::tcp_mixture(p?, b1?, d1?)
        }
        "empirical" => match &raw.pairs {
            Some(pairs) => JointLaw::empirical(pairs.iter().map(|p| (p[0], p[1])).collect()),
            None => {
                v.fail(
                    &format!("{path}.pairs"),
                    "required for kind = \"empirical\"",
                );
                return None;
            }
        },
        other => {
            v.fail(
                &format!("{path}.kind"),
                format!("unknown law kind {other:?} (expected independent, proportional, tcp, empirical)"),
            );
            return None;
        }
    };
    match built {
        Ok(law) => Some(law),
        Err(e) => {
            v.fail(path, e.to_string());
            None
        }
    }
}

/// Builds `[model]` into `ModelData`, recording every missing or invalid
/// field.
pub fn build_model(raw: &Option<RawModel>, v: &mut Validator) -> Option<ModelData> {
    let Some(model) = raw else {
        v.fail("model", "section required");
        return None;
    };
    let lambda = v.require(model.lambda, "model.lambda");
    let law = match &model.law {
        Some(raw) => build_joint(raw, "model.law", v),
        None => {
            v.fail("model.law", "required");
            None
        }
    };
    match ModelData::new(lambda?, law?) {
        Ok(m) => Some(m),
        Err(e) => {
            v.fail("model.lambda", e.to_string());
            None
        }
    }
}
