//! Scalar laws for service times, lead times, and patience factors.
//!
//! Values live on the compactified half line `[0, inf]`: any base variant
//! may carry an extra atom at infinity with probability `q_inf`, and
//! `PointAtInfinity` is the degenerate case of all mass at infinity.
//! Tails are strict throughout: `tail(x) = P(X > x)`, with `tail(inf)`
//! returning the mass of the atom at infinity.

use crate::error::{Error, Result};
use crate::rng::RandStream;

/// Base distribution of a [`ScalarLaw`], before the optional atom at infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKind {
    Deterministic(f64),
    /// Exponential with the given rate (mean `1/rate`).
    Exponential(f64),
    /// Mass `p1` at `v1`, mass `1 - p1` at `v2`, with `v1 < v2`.
    TwoPoint {
        v1: f64,
        p1: f64,
        v2: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    PointAtInfinity,
}

/// A probability law on `[0, inf]` with strictly positive finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLaw {
    kind: ScalarKind,
    q_inf: f64,
}

impl ScalarLaw {
    pub fn deterministic(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "deterministic value must be finite and positive, got {value}"
            )));
        }
        Ok(Self {
            kind: ScalarKind::Deterministic(value),
            q_inf: 0.0,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be finite and positive, got {rate}"
            )));
        }
        Ok(Self {
            kind: ScalarKind::Exponential(rate),
            q_inf: 0.0,
        })
    }

    pub fn two_point(v1: f64, p1: f64, v2: f64) -> Result<Self> {
        if !(v1.is_finite() && v2.is_finite() && v1 > 0.0 && v1 < v2) {
            return Err(Error::InvalidParameter(format!(
                "two-point law requires 0 < v1 < v2, got v1={v1}, v2={v2}"
            )));
        }
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidParameter(format!(
                "two-point probability must lie in [0,1], got {p1}"
            )));
        }
        Ok(Self {
            kind: ScalarKind::TwoPoint { v1, p1, v2 },
            q_inf: 0.0,
        })
    }

    /// Uniform on `[lo, hi]`. `lo = 0` is allowed: the law still puts zero
    /// mass on the point `{0}`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "uniform law requires 0 <= lo < hi, got lo={lo}, hi={hi}"
            )));
        }
        Ok(Self {
            kind: ScalarKind::Uniform { lo, hi },
            q_inf: 0.0,
        })
    }

    pub fn point_at_infinity() -> Self {
        Self {
            kind: ScalarKind::PointAtInfinity,
            q_inf: 0.0,
        }
    }

    /// Mixes the law with an atom at infinity: the result equals infinity
    /// with probability `q` and otherwise draws from `self`.
    pub fn with_atom_at_infinity(self, q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "atom-at-infinity probability must lie in [0,1), got {q}"
            )));
        }
        if matches!(self.kind, ScalarKind::PointAtInfinity) {
            return Err(Error::InvalidParameter(
                "PointAtInfinity already places all mass at infinity".into(),
            ));
        }
        Ok(Self { q_inf: q, ..self })
    }

    pub fn kind(&self) -> &ScalarKind {
        &self.kind
    }

    pub fn atom_at_infinity(&self) -> f64 {
        match self.kind {
            ScalarKind::PointAtInfinity => 1.0,
            _ => self.q_inf,
        }
    }

    /// True when the law puts no mass at infinity.
    pub fn is_proper(&self) -> bool {
        self.atom_at_infinity() == 0.0
    }

    /// Strict tail `P(X > x)`; `x = inf` yields the mass of the atom at
    /// infinity (the event `{X = inf}`).
    pub fn tail(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x.is_infinite() {
            return self.atom_at_infinity();
        }
        let base = match self.kind {
            ScalarKind::Deterministic(v) => {
                if x < v {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarKind::Exponential(rate) => (-rate * x).exp(),
            ScalarKind::TwoPoint { v1, p1, v2 } => {
                if x < v1 {
                    1.0
                } else if x < v2 {
                    1.0 - p1
                } else {
                    0.0
                }
            }
            ScalarKind::Uniform { lo, hi } => {
                if x < lo {
                    1.0
                } else if x < hi {
                    (hi - x) / (hi - lo)
                } else {
                    0.0
                }
            }
            ScalarKind::PointAtInfinity => return 1.0,
        };
        self.q_inf + (1.0 - self.q_inf) * base
    }

    /// `E[X]`; infinite exactly when the law has an atom at infinity.
    pub fn mean(&self) -> f64 {
        if self.atom_at_infinity() > 0.0 {
            return f64::INFINITY;
        }
        match self.kind {
            ScalarKind::Deterministic(v) => v,
            ScalarKind::Exponential(rate) => 1.0 / rate,
            ScalarKind::TwoPoint { v1, p1, v2 } => p1 * v1 + (1.0 - p1) * v2,
            ScalarKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarKind::PointAtInfinity => f64::INFINITY,
        }
    }

    /// `E[min{X, c}]`, the integral of the tail over `[0, c]`.
    pub fn censored_mean(&self, c: f64) -> f64 {
        debug_assert!(c >= 0.0);
        if c.is_infinite() {
            return self.mean();
        }
        let q = self.atom_at_infinity();
        let base = match self.kind {
            ScalarKind::Deterministic(v) => v.min(c),
            ScalarKind::Exponential(rate) => (1.0 - (-rate * c).exp()) / rate,
            ScalarKind::TwoPoint { v1, p1, v2 } => p1 * v1.min(c) + (1.0 - p1) * v2.min(c),
            ScalarKind::Uniform { lo, hi } => {
                if c <= lo {
                    c
                } else if c >= hi {
                    0.5 * (lo + hi)
                } else {
                    let w = hi - lo;
                    lo + (w * w - (hi - c) * (hi - c)) / (2.0 * w)
                }
            }
            ScalarKind::PointAtInfinity => c,
        };
        q * c + (1.0 - q) * base
    }

    /// `E[min{(X - y)^+, c}]`, the integral of `tail(y + t)` over `[0, c]`.
    ///
    /// Both arguments may be infinite; the atom at infinity never drains,
    /// so `y = inf` leaves a residual slope equal to the atom mass.
    pub fn overshoot_capped(&self, y: f64, c: f64) -> f64 {
        debug_assert!(y >= 0.0 && c >= 0.0);
        if c == 0.0 {
            return 0.0;
        }
        if y.is_infinite() {
            let q = self.atom_at_infinity();
            return if q == 0.0 { 0.0 } else { q * c };
        }
        if c.is_infinite() {
            return self.mean() - self.censored_mean(y);
        }
        self.censored_mean(y + c) - self.censored_mean(y)
    }

    /// Laplace-Stieltjes transform `E[e^{-sX}]` for `s > 0`, with the
    /// convention `e^{-s * inf} = 0`.
    pub fn lst(&self, s: f64) -> f64 {
        debug_assert!(s > 0.0);
        let base = match self.kind {
            ScalarKind::Deterministic(v) => (-s * v).exp(),
            ScalarKind::Exponential(rate) => rate / (rate + s),
            ScalarKind::TwoPoint { v1, p1, v2 } => {
                p1 * (-s * v1).exp() + (1.0 - p1) * (-s * v2).exp()
            }
            ScalarKind::Uniform { lo, hi } => ((-s * lo).exp() - (-s * hi).exp()) / (s * (hi - lo)),
            ScalarKind::PointAtInfinity => 0.0,
        };
        (1.0 - self.q_inf) * base
    }

    /// One draw by inverse CDF; the atom at infinity is resolved first.
    pub fn sample(&self, stream: &mut RandStream) -> f64 {
        if self.q_inf > 0.0 && stream.uniform_open() < self.q_inf {
            return f64::INFINITY;
        }
        match self.kind {
            ScalarKind::Deterministic(v) => v,
            ScalarKind::Exponential(rate) => -stream.uniform_open().ln() / rate,
            ScalarKind::TwoPoint { v1, p1, v2 } => {
                if stream.uniform_open() < p1 {
                    v1
                } else {
                    v2
                }
            }
            ScalarKind::Uniform { lo, hi } => lo + (hi - lo) * stream.uniform_open(),
            ScalarKind::PointAtInfinity => f64::INFINITY,
        }
    }

    /// Law of `a * X` for `a > 0`.
    pub fn scale(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be finite and positive, got {a}"
            )));
        }
        let kind = match self.kind {
            ScalarKind::Deterministic(v) => ScalarKind::Deterministic(a * v),
            ScalarKind::Exponential(rate) => ScalarKind::Exponential(rate / a),
            ScalarKind::TwoPoint { v1, p1, v2 } => ScalarKind::TwoPoint {
                v1: a * v1,
                p1,
                v2: a * v2,
            },
            ScalarKind::Uniform { lo, hi } => ScalarKind::Uniform {
                lo: a * lo,
                hi: a * hi,
            },
            ScalarKind::PointAtInfinity => ScalarKind::PointAtInfinity,
        };
        Ok(Self {
            kind,
            q_inf: self.q_inf,
        })
    }

    /// Finite locations where the tail has a jump or kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            ScalarKind::Deterministic(v) => vec![v],
            ScalarKind::Exponential(_) => vec![],
            ScalarKind::TwoPoint { v1, v2, .. } => vec![v1, v2],
            ScalarKind::Uniform { lo, hi } => vec![lo, hi],
            ScalarKind::PointAtInfinity => vec![],
        }
    }

    /// Atom decomposition `[(weight, value)]` for purely discrete laws,
    /// including the atom at infinity. `None` for laws with a density part.
    pub fn as_discrete(&self) -> Option<Vec<(f64, f64)>> {
        let q = self.q_inf;
        let mut atoms = match self.kind {
            ScalarKind::Deterministic(v) => vec![((1.0 - q), v)],
            ScalarKind::TwoPoint { v1, p1, v2 } => {
                vec![((1.0 - q) * p1, v1), ((1.0 - q) * (1.0 - p1), v2)]
            }
            ScalarKind::PointAtInfinity => vec![],
            ScalarKind::Exponential(_) | ScalarKind::Uniform { .. } => return None,
        };
        let q = self.atom_at_infinity();
        if q > 0.0 {
            atoms.push((q, f64::INFINITY));
        }
        Some(atoms)
    }

    /// Lipschitz constant of the tail, when the tail is continuous.
    pub fn tail_lipschitz(&self) -> Option<f64> {
        let q = self.atom_at_infinity();
        match self.kind {
            ScalarKind::Exponential(rate) => Some((1.0 - q) * rate),
            ScalarKind::Uniform { lo, hi } => Some((1.0 - q) / (hi - lo)),
            ScalarKind::PointAtInfinity => Some(0.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(ScalarLaw::deterministic(0.0).is_err());
        assert!(ScalarLaw::deterministic(-1.0).is_err());
        assert!(ScalarLaw::exponential(0.0).is_err());
        assert!(ScalarLaw::two_point(2.0, 0.5, 1.0).is_err());
        assert!(ScalarLaw::two_point(1.0, 1.5, 2.0).is_err());
        assert!(ScalarLaw::uniform(2.0, 2.0).is_err());
        assert!(ScalarLaw::uniform(-1.0, 2.0).is_err());
        assert!(ScalarLaw::exponential(1.0)
            .unwrap()
            .with_atom_at_infinity(1.0)
            .is_err());
    }

    #[test]
    fn mean_is_infinite_exactly_with_mass_at_infinity() {
        assert_eq!(ScalarLaw::exponential(2.0).unwrap().mean(), 0.5);
        assert_eq!(ScalarLaw::point_at_infinity().mean(), f64::INFINITY);
        let mixed = ScalarLaw::exponential(2.0)
            .unwrap()
            .with_atom_at_infinity(0.1)
            .unwrap();
        assert_eq!(mixed.mean(), f64::INFINITY);
    }

    #[test]
    fn tails_are_strict() {
        let det = ScalarLaw::deterministic(1.0).unwrap();
        assert_eq!(det.tail(0.999), 1.0);
        assert_eq!(det.tail(1.0), 0.0);
        let tp = ScalarLaw::two_point(1.0, 0.25, 3.0).unwrap();
        assert_eq!(tp.tail(1.0), 0.75);
        assert_eq!(tp.tail(3.0), 0.0);
        assert_eq!(tp.tail(f64::INFINITY), 0.0);
        let mixed = ScalarLaw::exponential(1.0)
            .unwrap()
            .with_atom_at_infinity(0.2)
            .unwrap();
        assert_eq!(mixed.tail(f64::INFINITY), 0.2);
        assert!((mixed.tail(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn censored_mean_matches_hand_computations() {
        let u = ScalarLaw::uniform(0.0, 4.0).unwrap();
        assert!((u.censored_mean(2.0) - 1.5).abs() < 1e-12);
        assert!((u.censored_mean(4.0) - 2.0).abs() < 1e-12);
        let e = ScalarLaw::exponential(1.0).unwrap();
        assert!((e.censored_mean(f64::INFINITY) - 1.0).abs() < 1e-12);
        let tp = ScalarLaw::two_point(1.0, 0.5, 4.0).unwrap();
        assert!((tp.censored_mean(3.0) - (0.5 * 1.0 + 0.5 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn overshoot_capped_handles_infinite_arguments() {
        let e = ScalarLaw::exponential(1.0).unwrap();
        // memorylessness: E[(X-1)^+] = e^{-1} * E[X]
        assert!((e.overshoot_capped(1.0, f64::INFINITY) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(e.overshoot_capped(f64::INFINITY, 5.0), 0.0);
        let mixed = e.with_atom_at_infinity(0.25).unwrap();
        assert!((mixed.overshoot_capped(f64::INFINITY, 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_and_respects_support() {
        let law = ScalarLaw::uniform(0.0, 2.0).unwrap();
        let mut a = RandStream::new(3);
        let mut b = RandStream::new(3);
        for _ in 0..100 {
            let x = law.sample(&mut a);
            assert_eq!(x, law.sample(&mut b));
            assert!(x > 0.0 && x < 2.0);
        }
    }

    #[test]
    fn scaling_an_exponential_divides_the_rate() {
        let d = ScalarLaw::exponential(3.0).unwrap().scale(2.0).unwrap();
        assert_eq!(d.kind(), &ScalarKind::Exponential(1.5));
    }
}
