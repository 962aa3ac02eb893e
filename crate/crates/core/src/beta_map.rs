//! Strictly increasing self-maps with a unique attracting fixed point.
//!
//! Every map satisfies `(t - s0)(beta(t) - t) < 0` for `t != s0`, so orbits
//! approach `s0` monotonically from either side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Default orbit cap used wherever orbits are consumed.
pub const DEFAULT_K_MAX: usize = 10_000;
/// Default distance to `s0` at which an orbit counts as converged.
pub const DEFAULT_GAP_TOL: f64 = 1e-12;
/// Default number of probe samples for validating custom maps.
pub const DEFAULT_SAMPLES: usize = 1000;

const FIXED_POINT_RESIDUAL: f64 = 1e-12;
const ORBIT_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::OrderViolation { a: lo, b: hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// `n >= 2` evenly spaced points including both ends.
    pub fn samples(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        let step = (self.hi - self.lo) / (n - 1) as f64;
        (0..n).map(move |i| if i == n - 1 { self.hi } else { self.lo + step * i as f64 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Hahn { q: f64, omega: f64 },
    Jackson { q: f64 },
    Custom { expr: Expr },
}

/// A validated map together with its fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMap {
    kind: MapKind,
    s0: f64,
    domain: Interval,
}

/// `beta^0(x), beta^1(x), ...` up to convergence or the iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub start: f64,
    pub points: Vec<f64>,
    pub converged: bool,
    pub terminal_gap: f64,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "q",
            value: q,
            expected: "0 < q < 1",
        })
    }
}

impl BetaMap {
    /// `beta(t) = q t + omega` with fixed point `omega / (1 - q)`.
    pub fn hahn(q: f64, omega: f64) -> Result<Self> {
        check_q(q)?;
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "omega",
                value: omega,
                expected: "omega >= 0",
            });
        }
        Ok(BetaMap {
            kind: MapKind::Hahn { q, omega },
            s0: omega / (1.0 - q),
            domain: Interval::REAL_LINE,
        })
    }

    /// `beta(t) = q t`, fixed point 0.
    pub fn jackson(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(BetaMap {
            kind: MapKind::Jackson { q },
            s0: 0.0,
            domain: Interval::REAL_LINE,
        })
    }

    /// Validate an arbitrary expression as a map on `probe`.
    ///
    /// The fixed point is located by iterating from both ends of the probe
    /// interval; when those orbits do not settle, a sign change of
    /// `beta(t) - t` on the sample grid is bisected instead so that the
    /// invariant checks can still report a witness. The resulting map is
    /// then checked on `samples` uniform points for the fixed-point
    /// residual, the sign condition and strict monotonicity.
    pub fn custom(expr: Expr, probe: Interval, samples: usize) -> Result<Self> {
        let beta = |t: f64| expr.eval(t);
        let s0 = locate_fixed_point(&beta, probe, samples)?;

        if !probe.contains(s0) {
            return Err(Error::ValidationFailed {
                invariant: format!(
                    "fixed point {s0} is not inside the probe interval [{}, {}]",
                    probe.lo, probe.hi
                ),
                witness: s0,
            });
        }
        let residual = (beta(s0) - s0).abs();
        if !(residual <= FIXED_POINT_RESIDUAL) {
            return Err(Error::ValidationFailed {
                invariant: format!("fixed-point residual |beta(s0) - s0| = {residual:e} exceeds 1e-12"),
                witness: s0,
            });
        }

        let near = 1e-9 * (1.0 + s0.abs());
        let mut prev: Option<(f64, f64)> = None;
        for t in probe.samples(samples) {
            let bt = beta(t);
            if (t - s0).abs() > near {
                let sign = (t - s0) * (bt - t);
                if !(sign < 0.0) {
                    return Err(Error::ValidationFailed {
                        invariant: format!("sign condition (t - s0)(beta(t) - t) < 0 fails: value {sign}"),
                        witness: t,
                    });
                }
            }
            if let Some((pt, pb)) = prev {
                if !(pb < bt) {
                    return Err(Error::ValidationFailed {
                        invariant: format!("beta is not strictly increasing between {pt} and {t}"),
                        witness: t,
                    });
                }
            }
            if !probe.contains(bt) {
                return Err(Error::ValidationFailed {
                    invariant: format!("beta({t}) = {bt} leaves the probe interval"),
                    witness: t,
                });
            }
            prev = Some((t, bt));
        }

        Ok(BetaMap {
            kind: MapKind::Custom { expr },
            s0,
            domain: probe,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        match &self.kind {
            MapKind::Hahn { q, omega } => q * t + omega,
            MapKind::Jackson { q } => q * t,
            MapKind::Custom { expr } => expr.eval(t),
        }
    }

    /// `beta^k(x)`, with `beta^0(x) = x`.
    pub fn iterate(&self, x: f64, k: usize) -> f64 {
        (0..k).fold(x, |t, _| self.apply(t))
    }

    /// Distance to `s0` below which an orbit is considered converged.
    ///
    /// Never smaller than a few ulps of `s0`, so orbits of maps whose fixed
    /// point is not exactly representable still terminate.
    pub fn effective_gap(&self, gap_tol: f64) -> f64 {
        gap_tol.max(8.0 * f64::EPSILON * self.s0.abs())
    }

    pub fn orbit(&self, x: f64, gap_tol: f64, k_max: usize) -> Orbit {
        let tol = self.effective_gap(gap_tol);
        let mut points = vec![x];
        let mut cur = x;
        let mut k = 0;
        while (cur - self.s0).abs() > tol && k < k_max {
            let next = self.apply(cur);
            k += 1;
            if next == cur || (cur - self.s0) * (next - self.s0) <= 0.0 {
                // stalled, or rounding would reach s0
                break;
            }
            points.push(next);
            cur = next;
        }
        let terminal_gap = (cur - self.s0).abs();
        Orbit {
            start: x,
            points,
            converged: terminal_gap <= tol,
            terminal_gap,
        }
    }
}

fn settle<F: Fn(f64) -> f64>(beta: &F, mut t: f64) -> Option<f64> {
    for _ in 0..DEFAULT_K_MAX {
        let next = beta(t);
        if !next.is_finite() {
            return None;
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
            return Some(next);
        }
        t = next;
    }
    None
}

fn bisect<F: Fn(f64) -> f64>(beta: &F, mut lo: f64, mut hi: f64) -> f64 {
    let g = |t: f64| beta(t) - t;
    let mut glo = g(lo);
    if glo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    if g(hi).abs() < glo.abs() {
        hi
    } else {
        lo
    }
}

fn locate_fixed_point<F: Fn(f64) -> f64>(beta: &F, probe: Interval, samples: usize) -> Result<f64> {
    if let (Some(from_lo), Some(from_hi)) = (settle(beta, probe.lo), settle(beta, probe.hi)) {
        if (from_lo - from_hi).abs() <= ORBIT_AGREEMENT * (1.0 + from_lo.abs()) {
            let (lo, hi) = if from_lo <= from_hi { (from_lo, from_hi) } else { (from_hi, from_lo) };
            return Ok(if lo == hi { lo } else { bisect(beta, lo, hi) });
        }
        return Err(Error::NoFixedPoint(format!(
            "orbits from {} and {} settle at different points {from_lo} and {from_hi}",
            probe.lo, probe.hi
        )));
    }

    let g = |t: f64| beta(t) - t;
    let mut prev: Option<(f64, f64)> = None;
    for t in probe.samples(samples) {
        let gt = g(t);
        if gt == 0.0 {
            return Ok(t);
        }
        if let Some((pt, pg)) = prev {
            if pg.is_finite() && gt.is_finite() && (pg > 0.0) != (gt > 0.0) {
                return Ok(bisect(beta, pt, t));
            }
        }
        prev = Some((t, gt));
    }
    Err(Error::NoFixedPoint(format!(
        "orbits from the probe endpoints did not converge within {DEFAULT_K_MAX} steps and beta(t) - t has no sign change on [{}, {}]",
        probe.lo, probe.hi
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    #[test]
    fn hahn_fixed_points() {
        assert_eq!(BetaMap::hahn(0.5, 0.0).unwrap().s0(), 0.0);
        assert_eq!(BetaMap::hahn(0.5, 1.0).unwrap().s0(), 2.0);
        assert!(matches!(
            BetaMap::hahn(1.2, 0.0),
            Err(Error::ParameterOutOfRange { name: "q", .. })
        ));
        assert!(matches!(
            BetaMap::hahn(0.5, -1.0),
            Err(Error::ParameterOutOfRange { name: "omega", .. })
        ));
        assert!(BetaMap::jackson(0.0).is_err());
        assert!(BetaMap::jackson(1.0).is_err());
    }

    #[test]
    fn iterate_examples() {
        let h = BetaMap::hahn(0.5, 1.0).unwrap();
        assert_eq!(h.iterate(0.0, 3), 1.75);
        assert_eq!(h.iterate(-3.25, 0), -3.25);
        let j = BetaMap::jackson(0.5).unwrap();
        assert_eq!(j.iterate(8.0, 3), 1.0);
    }

    #[test]
    fn orbit_examples() {
        let j = BetaMap::jackson(0.5).unwrap();
        let o = j.orbit(1.0, 1e-3, DEFAULT_K_MAX);
        assert_eq!(o.points.len(), 11);
        assert_eq!(*o.points.last().unwrap(), 2f64.powi(-10));
        assert!(o.converged);

        let fixed = j.orbit(0.0, 1e-12, DEFAULT_K_MAX);
        assert_eq!(fixed.points, vec![0.0]);
        assert!(fixed.converged);

        let slow = BetaMap::jackson(0.999999).unwrap();
        let o = slow.orbit(1.0, 1e-12, 10);
        assert!(!o.converged);
        assert_eq!(o.points.len(), 11);
    }

    #[test]
    fn custom_linear_contraction() {
        let m = BetaMap::custom(parse("0.5*x").unwrap(), Interval::new(-2.0, 2.0).unwrap(), 1000).unwrap();
        assert!(m.s0().abs() < 1e-12);
        assert!((m.apply(m.s0()) - m.s0()).abs() <= 1e-12);
    }

    #[test]
    fn custom_affine_matches_hahn() {
        let m = BetaMap::custom(parse("0.5*x + 1").unwrap(), Interval::new(-5.0, 10.0).unwrap(), 1000).unwrap();
        assert!((m.s0() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn custom_square_rejected() {
        let err = BetaMap::custom(parse("x^2").unwrap(), Interval::new(0.1, 0.9).unwrap(), 1000).unwrap_err();
        assert!(matches!(err, Error::ValidationFailed { .. }), "{err:?}");
    }

    #[test]
    fn custom_expanding_rejected_with_witness() {
        let err = BetaMap::custom(parse("2*x").unwrap(), Interval::new(-1.0, 1.0).unwrap(), 1000).unwrap_err();
        match err {
            Error::ValidationFailed { witness, .. } => {
                // witness violates (t - 0)(2t - t) < 0
                assert!(witness * (2.0 * witness - witness) > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        // t = 0.5 is one such witness: (0.5)(1.0 - 0.5) = 0.25 > 0
        assert_eq!(0.5 * (2.0 * 0.5 - 0.5), 0.25);
    }

    #[test]
    fn custom_decreasing_rejected() {
        let err = BetaMap::custom(parse("-0.5*x").unwrap(), Interval::new(-1.0, 1.0).unwrap(), 100).unwrap_err();
        assert!(matches!(err, Error::ValidationFailed { .. }));
    }

    #[test]
    fn custom_no_fixed_point() {
        let err = BetaMap::custom(parse("x + 1").unwrap(), Interval::new(-1.0, 1.0).unwrap(), 100).unwrap_err();
        assert!(matches!(err, Error::NoFixedPoint(_)));
    }

    #[test]
    fn sign_condition_on_samples() {
        for m in [
            BetaMap::jackson(0.3).unwrap(),
            BetaMap::hahn(0.7, 0.9).unwrap(),
            BetaMap::custom(parse("0.5*x + 0.1*sin(x)").unwrap(), Interval::new(-3.0, 3.0).unwrap(), 1000).unwrap(),
        ] {
            let s0 = m.s0();
            assert!((m.apply(s0) - s0).abs() <= 1e-12);
            let probe = Interval::new(s0 - 5.0, s0 + 5.0).unwrap();
            for t in probe.samples(1000).filter(|t| *t != s0) {
                if m.domain().contains(t) {
                    assert!((t - s0) * (m.apply(t) - t) < 0.0, "t = {t}");
                }
            }
        }
    }

    fn arb_map() -> impl Strategy<Value = BetaMap> {
        prop_oneof![
            (0.05f64..0.95).prop_map(|q| BetaMap::jackson(q).unwrap()),
            (0.05f64..0.95, 0.0f64..3.0).prop_map(|(q, w)| BetaMap::hahn(q, w).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn orbits_are_monotone(m in arb_map(), offset in -10.0f64..10.0) {
            let x = m.s0() + offset;
            let o = m.orbit(x, DEFAULT_GAP_TOL, DEFAULT_K_MAX);
            prop_assert!(o.converged);
            for w in o.points.windows(2) {
                if x < m.s0() {
                    prop_assert!(w[0] < w[1]);
                } else {
                    prop_assert!(w[0] > w[1]);
                }
            }
        }

        #[test]
        fn iterate_composes(m in arb_map(), x in -10.0f64..10.0, j in 0usize..32, k in 0usize..32) {
            prop_assert_eq!(m.iterate(x, j + k).to_bits(), m.iterate(m.iterate(x, j), k).to_bits());
        }
    }
}
