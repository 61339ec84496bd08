//! The joint law of a job's service time `B` and initial lead time `D`.
//!
//! The standing support assumption is enforced at construction: no mass on
//! `{0} x [0,inf]`, on `[0,inf] x {0}`, or on the single point `(inf, inf)`.
//! Corner-set probabilities use strict tails, `tail(x, y) = P(B > x, D > y)`,
//! with an argument equal to infinity selecting the event `{B = inf}` (resp.
//! `{D = inf}`).

use crate::error::{Error, Result};
use crate::laws::scalar::{ScalarKind, ScalarLaw};
use crate::quad;
use crate::rng::RandStream;

/// Joint law of `(B, D)` on `[0, inf]^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum JointLaw {
    /// `B` and `D` independent.
    Independent { b: ScalarLaw, d: ScalarLaw },
    /// `D = Theta * B` with `Theta` independent of `B`.
    Proportional { b: ScalarLaw, theta: ScalarLaw },
    /// `(B, D) = (B1, happens)` with probability `p`, `(happens, D1)` with
    /// probability `1 - p`, where "happens" stands for an infinite value:
    /// elastic jobs never renege, streaming jobs never finish.
    TcpMixture {
        p: f64,
        b1: ScalarLaw,
        d1: ScalarLaw,
    },
    /// The empirical law of a finite sample of `(b, d)` pairs.
    Empirical { pairs: Vec<(f64, f64)> },
}

/// Strict comparison on the compactified half line: `x = inf` selects the
/// event `{v = inf}` rather than the empty event.
fn exceeds(v: f64, x: f64) -> bool {
    if x.is_infinite() {
        v.is_infinite()
    } else {
        v > x
    }
}

impl JointLaw {
    pub fn independent(b: ScalarLaw, d: ScalarLaw) -> Result<Self> {
        if !b.is_proper() && !d.is_proper() {
            return Err(Error::InvalidParameter(
                "independent law would put mass on (inf, inf): at most one marginal may charge infinity"
                    .into(),
            ));
        }
        Ok(JointLaw::Independent { b, d })
    }

    pub fn proportional(b: ScalarLaw, theta: ScalarLaw) -> Result<Self> {
        if !b.is_proper() {
            return Err(Error::InvalidParameter(
                "proportional law requires a proper service time: B = inf forces D = Theta*B = inf"
                    .into(),
            ));
        }
        Ok(JointLaw::Proportional { b, theta })
    }

    pub fn tcp_mixture(p: f64, b1: ScalarLaw, d1: ScalarLaw) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "mixture probability must lie in [0,1], got {p}"
            )));
        }
        if !b1.is_proper() || !d1.is_proper() {
            return Err(Error::InvalidParameter(
                "tcp mixture components must be proper laws with finite values".into(),
            ));
        }
        Ok(JointLaw::TcpMixture { p, b1, d1 })
    }

    pub fn empirical(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter(
                "empirical law needs at least one pair".into(),
            ));
        }
        for &(b, d) in &pairs {
            if !(b > 0.0 && d > 0.0) || b.is_nan() || d.is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "empirical pair ({b}, {d}) must be strictly positive"
                )));
            }
            if b.is_infinite() && d.is_infinite() {
                return Err(Error::InvalidParameter(
                    "empirical pair (inf, inf) is not allowed".into(),
                ));
            }
        }
        Ok(JointLaw::Empirical { pairs })
    }

    /// Strict joint tail `P(B > x, D > y)`.
    pub fn tail(&self, x: f64, y: f64) -> f64 {
        debug_assert!(x >= 0.0 && y >= 0.0);
        match self {
            JointLaw::Independent { b, d } => b.tail(x) * d.tail(y),
            JointLaw::Proportional { b, theta } => proportional_tail(b, theta, x, y),
            JointLaw::TcpMixture { p, b1, d1 } => p * b1.tail(x) + (1.0 - p) * d1.tail(y),
            JointLaw::Empirical { pairs } => {
                let n = pairs
                    .iter()
                    .filter(|&&(b, d)| exceeds(b, x) && exceeds(d, y))
                    .count();
                n as f64 / pairs.len() as f64
            }
        }
    }

    /// One draw of `(b, d)`.
    pub fn sample(&self, stream: &mut RandStream) -> (f64, f64) {
        match self {
            JointLaw::Independent { b, d } => {
                let bv = b.sample(stream);
                let dv = d.sample(stream);
                (bv, dv)
            }
            JointLaw::Proportional { b, theta } => {
                let bv = b.sample(stream);
                let tv = theta.sample(stream);
                (bv, tv * bv)
            }
            JointLaw::TcpMixture { p, b1, d1 } => {
                if stream.uniform_open() < *p {
                    (b1.sample(stream), f64::INFINITY)
                } else {
                    (f64::INFINITY, d1.sample(stream))
                }
            }
            JointLaw::Empirical { pairs } => {
                let u = stream.uniform_open();
                let idx = ((u * pairs.len() as f64) as usize).min(pairs.len() - 1);
                pairs[idx]
            }
        }
    }

    /// `E[B]`; may be infinite.
    pub fn mean_b(&self) -> f64 {
        match self {
            JointLaw::Independent { b, .. } | JointLaw::Proportional { b, .. } => b.mean(),
            JointLaw::TcpMixture { p, b1, .. } => {
                if *p < 1.0 {
                    f64::INFINITY
                } else {
                    b1.mean()
                }
            }
            JointLaw::Empirical { pairs } => {
                pairs.iter().map(|&(b, _)| b).sum::<f64>() / pairs.len() as f64
            }
        }
    }

    /// `E[B 1_{D = inf}]`, the offered load of jobs that never renege.
    pub fn mean_b_given_d_infinite(&self) -> f64 {
        match self {
            JointLaw::Independent { b, d } => {
                let q = d.atom_at_infinity();
                if q == 0.0 {
                    0.0
                } else {
                    q * b.mean()
                }
            }
            JointLaw::Proportional { b, theta } => {
                let q = theta.atom_at_infinity();
                if q == 0.0 {
                    0.0
                } else {
                    q * b.mean()
                }
            }
            JointLaw::TcpMixture { p, b1, .. } => p * b1.mean(),
            JointLaw::Empirical { pairs } => {
                pairs
                    .iter()
                    .filter(|&&(_, d)| d.is_infinite())
                    .map(|&(b, _)| b)
                    .sum::<f64>()
                    / pairs.len() as f64
            }
        }
    }

    /// `E[min{z B, D}]`.
    pub fn e_min(&self, z: f64) -> Result<f64> {
        self.e_min_overshoot(z, 0.0, 0.0)
    }

    /// `E[min{z (B - x)^+, (D - y)^+}]`, equivalently the integral of
    /// `tail(x + t/z, y + t)` over `t` in `[0, inf)`.
    ///
    /// Dispatches to a closed form when one is available for the variant,
    /// otherwise falls back to adaptive quadrature.
    pub fn e_min_overshoot(&self, z: f64, x: f64, y: f64) -> Result<f64> {
        match self.e_min_overshoot_closed(z, x, y) {
            Some(v) => v,
            None => self.e_min_overshoot_quadrature(z, x, y),
        }
    }

    /// Closed-form route of [`JointLaw::e_min_overshoot`], when available.
    pub fn e_min_overshoot_closed(&self, z: f64, x: f64, y: f64) -> Option<Result<f64>> {
        assert!(z > 0.0, "e_min requires z > 0");
        assert!(x >= 0.0 && y >= 0.0);
        match self {
            JointLaw::Independent { b, d } => {
                if let Some(atoms) = b.as_discrete() {
                    let mut total = 0.0;
                    for (w, bv) in atoms {
                        if w == 0.0 {
                            continue;
                        }
                        let cap = service_cap(z, bv, x);
                        let term = d.overshoot_capped(y, cap);
                        if term.is_infinite() {
                            return Some(Err(Error::Nonintegrable(
                                "E[min{zB, D}] diverges: mass at B = inf meets E[D] = inf".into(),
                            )));
                        }
                        total += w * term;
                    }
                    Some(Ok(total))
                } else if let Some(atoms) = d.as_discrete() {
                    let mut total = 0.0;
                    for (w, dv) in atoms {
                        if w == 0.0 {
                            continue;
                        }
                        let cap = lead_cap(dv, y);
                        let term = z * b.overshoot_capped(x, cap / z);
                        if term.is_infinite() {
                            return Some(Err(Error::Nonintegrable(
                                "E[min{zB, D}] diverges: mass at D = inf meets E[B] = inf".into(),
                            )));
                        }
                        total += w * term;
                    }
                    Some(Ok(total))
                } else if let (&ScalarKind::Exponential(mu), &ScalarKind::Exponential(nu)) =
                    (b.kind(), d.kind())
                {
                    let qb = b.atom_at_infinity();
                    let qd = d.atom_at_infinity();
                    // constructor guarantees qb * qd = 0
                    let core = (-mu * x - nu * y).exp() * z / (mu + nu * z);
                    let b_inf = if qb > 0.0 {
                        qb * (-nu * y).exp() / nu * (1.0 - qd)
                    } else {
                        0.0
                    };
                    let d_inf = if qd > 0.0 {
                        qd * z * (-mu * x).exp() / mu * (1.0 - qb)
                    } else {
                        0.0
                    };
                    Some(Ok((1.0 - qb) * (1.0 - qd) * core + b_inf + d_inf))
                } else {
                    None
                }
            }
            JointLaw::Proportional { b, theta } => {
                if x == 0.0 && y == 0.0 {
                    return Some(Ok(b.mean() * theta.censored_mean(z)));
                }
                match (b.as_discrete(), theta.as_discrete()) {
                    (Some(ab), Some(at)) => {
                        let mut total = 0.0;
                        for &(wb, bv) in &ab {
                            for &(wt, tv) in &at {
                                let sv = service_cap(z, bv, x);
                                let lv = lead_cap(tv * bv, y);
                                total += wb * wt * sv.min(lv);
                            }
                        }
                        Some(Ok(total))
                    }
                    _ => None,
                }
            }
            JointLaw::TcpMixture { p, b1, d1 } => {
                let elastic = z * b1.overshoot_capped(x, f64::INFINITY);
                let streaming = d1.overshoot_capped(y, f64::INFINITY);
                Some(Ok(p * elastic + (1.0 - p) * streaming))
            }
            JointLaw::Empirical { pairs } => {
                let mut total = 0.0;
                for &(bv, dv) in pairs {
                    total += service_cap(z, bv, x).min(lead_cap(dv, y));
                }
                Some(Ok(total / pairs.len() as f64))
            }
        }
    }

    /// Quadrature route of [`JointLaw::e_min_overshoot`]: adaptive Simpson on
    /// `t -> tail(x + t/z, y + t)`, truncated where the integrand drops
    /// below 1e-12, absolute tolerance 1e-9 (tightened proportionally for
    /// small `z`, where the whole integral is of order `z`).
    pub fn e_min_overshoot_quadrature(&self, z: f64, x: f64, y: f64) -> Result<f64> {
        assert!(z > 0.0, "e_min requires z > 0");
        assert!(x >= 0.0 && y >= 0.0);
        let breakpoints = self.overshoot_breakpoints(z, x, y);
        let tol = (quad::DEFAULT_TOL * z.min(1.0)).max(1e-15);
        quad::integrate_half_line(
            |t| self.tail(add_inf(x, t / z), add_inf(y, t)),
            &breakpoints,
            tol,
        )
    }

    /// Kink locations of `t -> tail(x + t/z, y + t)`.
    fn overshoot_breakpoints(&self, z: f64, x: f64, y: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        let mut push_service = |law: &ScalarLaw| {
            if x.is_finite() {
                for v in law.breakpoints() {
                    if v > x {
                        pts.push(z * (v - x));
                    }
                }
            }
        };
        match self {
            JointLaw::Independent { b, d } => {
                push_service(b);
                if y.is_finite() {
                    for v in d.breakpoints() {
                        if v > y {
                            pts.push(v - y);
                        }
                    }
                }
            }
            JointLaw::Proportional { b, theta } => {
                push_service(b);
                if let Some(atoms) = theta.as_discrete() {
                    for (_, tv) in atoms {
                        if !tv.is_finite() {
                            continue;
                        }
                        // crossing of the two affine arguments and the image
                        // of B's kinks through the lead-time coordinate
                        if y.is_finite() {
                            for v in b.breakpoints() {
                                let t = tv * v - y;
                                if t > 0.0 {
                                    pts.push(t);
                                }
                            }
                            if x.is_finite() && (1.0 / z - 1.0 / tv).abs() > 1e-300 {
                                let t = (y / tv - x) / (1.0 / z - 1.0 / tv);
                                if t > 0.0 && t.is_finite() {
                                    pts.push(t);
                                }
                            }
                        }
                    }
                }
            }
            JointLaw::TcpMixture { b1, d1, .. } => {
                push_service(b1);
                if y.is_finite() {
                    for v in d1.breakpoints() {
                        if v > y {
                            pts.push(v - y);
                        }
                    }
                }
            }
            JointLaw::Empirical { .. } => {}
        }
        pts
    }

    /// `P(D > z B)`, the long-run fraction of jobs completing service when
    /// the fluid mass sits at `z`.
    pub fn success_probability(&self, z: f64) -> f64 {
        assert!(z > 0.0, "success probability requires z > 0");
        match self {
            JointLaw::Independent { b, d } => {
                if let Some(atoms) = b.as_discrete() {
                    atoms
                        .iter()
                        .map(|&(w, bv)| {
                            if bv.is_infinite() {
                                0.0
                            } else {
                                w * d.tail(z * bv)
                            }
                        })
                        .sum()
                } else {
                    let qb = b.atom_at_infinity();
                    let proper = match *b.kind() {
                        ScalarKind::Exponential(mu) => {
                            let qd = d.atom_at_infinity();
                            let s = mu / z;
                            let base = match d.kind() {
                                ScalarKind::PointAtInfinity => 0.0,
                                _ => d.lst(s) / (1.0 - qd).max(f64::MIN_POSITIVE),
                            };
                            qd + (1.0 - qd) * (1.0 - base)
                        }
                        ScalarKind::Uniform { lo, hi } => {
                            (d.censored_mean(z * hi) - d.censored_mean(z * lo)) / (z * (hi - lo))
                        }
                        _ => unreachable!("discrete kinds handled above"),
                    };
                    (1.0 - qb) * proper
                }
            }
            JointLaw::Proportional { theta, .. } => theta.tail(z),
            JointLaw::TcpMixture { p, .. } => *p,
            JointLaw::Empirical { pairs } => {
                let n = pairs.iter().filter(|&&(b, d)| exceeds(d, z * b)).count();
                n as f64 / pairs.len() as f64
            }
        }
    }

    /// Law of `(B, a D)`: the lead-time component scaled by `a > 0`.
    pub fn scale_d(&self, a: f64) -> Result<Self> {
        match self {
            JointLaw::Independent { b, d } => JointLaw::independent(b.clone(), d.scale(a)?),
            JointLaw::Proportional { b, theta } => {
                JointLaw::proportional(b.clone(), theta.scale(a)?)
            }
            JointLaw::TcpMixture { p, b1, d1 } => {
                JointLaw::tcp_mixture(*p, b1.clone(), d1.scale(a)?)
            }
            JointLaw::Empirical { pairs } => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "scale factor must be finite and positive, got {a}"
                    )));
                }
                JointLaw::empirical(pairs.iter().map(|&(b, d)| (b, a * d)).collect())
            }
        }
    }

    /// Lipschitz constant of `y -> P(B0 >= x, D0 >= y)` when one is known.
    /// A Lipschitz initial lead-time tail makes the fluid model solution
    /// unique; the solver surfaces this as an advisory.
    pub fn d_tail_lipschitz(&self) -> Option<f64> {
        match self {
            JointLaw::Independent { d, .. } => d.tail_lipschitz(),
            JointLaw::TcpMixture { p, d1, .. } => d1.tail_lipschitz().map(|l| (1.0 - p) * l),
            _ => None,
        }
    }
}

/// `inf`-preserving addition for corner-set arguments.
fn add_inf(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        a + b
    }
}

/// Residual service budget `z (bv - x)^+` at corner offset `x`, under the
/// corner-set conventions for infinite values.
fn service_cap(z: f64, bv: f64, x: f64) -> f64 {
    if bv.is_infinite() {
        f64::INFINITY
    } else if x.is_infinite() {
        0.0
    } else {
        z * (bv - x).max(0.0)
    }
}

/// Residual patience `(dv - y)^+` under the same conventions.
fn lead_cap(dv: f64, y: f64) -> f64 {
    if dv.is_infinite() {
        f64::INFINITY
    } else if y.is_infinite() {
        0.0
    } else {
        (dv - y).max(0.0)
    }
}

/// `P(B > x, Theta B > y)` for `Theta` independent of `B`.
fn proportional_tail(b: &ScalarLaw, theta: &ScalarLaw, x: f64, y: f64) -> f64 {
    if x.is_infinite() {
        return 0.0; // B is proper by construction
    }
    if y.is_infinite() {
        return b.tail(x) * theta.atom_at_infinity();
    }
    if y == 0.0 {
        return b.tail(x);
    }
    if let Some(atoms) = theta.as_discrete() {
        return atoms
            .iter()
            .map(|&(w, tv)| {
                if tv.is_infinite() {
                    w * b.tail(x)
                } else {
                    w * b.tail(x.max(y / tv))
                }
            })
            .sum();
    }
    // Continuous Theta: split at theta* = y/x, past which the service
    // coordinate binds and the tail factorizes.
    let q = theta.atom_at_infinity();
    let integrand = |tv: f64| {
        if tv <= 0.0 {
            return 0.0;
        }
        b.tail(y / tv) * theta_density(theta, tv)
    };
    let mut cuts: Vec<f64> = b
        .breakpoints()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| y / v)
        .collect();
    cuts.extend(theta.breakpoints());
    let inner_tol = 1e-12;
    let value = if x > 0.0 {
        let split = y / x;
        cuts.retain(|&c| c < split);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut lo = 0.0;
        let mut acc = 0.0;
        for c in cuts {
            acc += quad::adaptive_simpson(integrand, lo, c, inner_tol);
            lo = c;
        }
        acc += quad::adaptive_simpson(integrand, lo, split, inner_tol);
        acc + b.tail(x) * theta_base_tail(theta, split)
    } else {
        quad::integrate_half_line(integrand, &cuts, inner_tol).unwrap_or(0.0)
    };
    (q * b.tail(x) + value).clamp(0.0, 1.0)
}

fn theta_density(theta: &ScalarLaw, t: f64) -> f64 {
    let q = theta.atom_at_infinity();
    let base = match *theta.kind() {
        ScalarKind::Exponential(rate) => rate * (-rate * t).exp(),
        ScalarKind::Uniform { lo, hi } => {
            if t >= lo && t <= hi {
                1.0 / (hi - lo)
            } else {
                0.0
            }
        }
        _ => unreachable!("density requested for a discrete law"),
    };
    (1.0 - q) * base
}

/// `(1 - q) * P(Theta_base > t)`: the finite part of the tail.
fn theta_base_tail(theta: &ScalarLaw, t: f64) -> f64 {
    theta.tail(t) - theta.atom_at_infinity()
}
