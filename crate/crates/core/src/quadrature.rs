//! Beta-integrals as truncated orbit series.
//!
//! `int_{s0}^{x} f = sum_k (beta^k(x) - beta^{k+1}(x)) f(beta^k(x))` and
//! `int_a^b f = int_{s0}^b f - int_{s0}^a f`.
//!
//! A branch stops once `consecutive_small` consecutive terms are below
//! `term_tol`, the orbit is within `gap_tol` of `s0`, and the geometric tail
//! estimate is at most `10 * term_tol`; otherwise it runs to `k_max` and is
//! reported as not converged.

use serde::{Deserialize, Serialize};

use crate::beta_map::{BetaMap, DEFAULT_GAP_TOL, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expr::RealFn;

const TAIL_RATIO_CAP: f64 = 0.999;
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub term_tol: f64,
    pub gap_tol: f64,
    pub consecutive_small: usize,
    pub k_max: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            term_tol: 1e-13,
            gap_tol: DEFAULT_GAP_TOL,
            consecutive_small: 5,
            k_max: DEFAULT_K_MAX,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::ParameterOutOfRange {
                    name,
                    value,
                    expected: "a positive finite number",
                })
            }
        };
        positive("term_tol", self.term_tol)?;
        positive("gap_tol", self.gap_tol)?;
        positive("consecutive_small", self.consecutive_small as f64)?;
        positive("k_max", self.k_max as f64)?;
        Ok(())
    }
}

/// Value of a truncated series together with how the truncation went.
///
/// One-sided integrals (`integral_from_s0`) report their terms in `terms_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    pub terms_a: usize,
    pub terms_b: usize,
    #[serde(with = "crate::serde_float")]
    pub tail_estimate: f64,
    pub converged: bool,
    pub nan_encountered: bool,
}

impl IntegralResult {
    /// Combine diagnostics keeping the worse of each field.
    pub fn merge_diagnostics(&self, other: &IntegralResult, value: f64) -> IntegralResult {
        IntegralResult {
            value,
            terms_a: self.terms_a.max(other.terms_a),
            terms_b: self.terms_b.max(other.terms_b),
            tail_estimate: self.tail_estimate.max(other.tail_estimate),
            converged: self.converged && other.converged,
            nan_encountered: self.nan_encountered || other.nan_encountered,
        }
    }
}

/// One summed orbit branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Branch {
    pub value: f64,
    pub terms: usize,
    pub tail: f64,
    pub converged: bool,
    pub nan: bool,
    /// Last orbit point reached (closest to `s0`).
    pub last_point: f64,
    /// The orbit point before it, if any.
    pub prev_point: Option<f64>,
}

struct Accumulator<'c> {
    cfg: &'c TruncationConfig,
    gap: f64,
    s0: f64,
    sum: f64,
    k: usize,
    small: usize,
    last: f64,
    prev: f64,
}

impl<'c> Accumulator<'c> {
    fn new(map: &BetaMap, cfg: &'c TruncationConfig) -> Self {
        Accumulator {
            cfg,
            gap: map.effective_gap(cfg.gap_tol),
            s0: map.s0(),
            sum: 0.0,
            k: 0,
            small: 0,
            last: 0.0,
            prev: 0.0,
        }
    }

    fn tail(&self) -> f64 {
        if self.prev > 0.0 {
            let r = (self.last / self.prev).clamp(0.0, TAIL_RATIO_CAP);
            self.last * r / (1.0 - r)
        } else {
            0.0
        }
    }

    /// `Some(converged)` when summation must stop before taking the term at `xk`.
    fn stop(&self, xk: f64) -> Option<bool> {
        if self.small >= self.cfg.consecutive_small
            && (xk - self.s0).abs() <= self.gap
            && self.tail() <= 10.0 * self.cfg.term_tol
        {
            return Some(true);
        }
        if self.k >= self.cfg.k_max {
            return Some(false);
        }
        None
    }

    fn push(&mut self, term: f64) {
        self.sum += term;
        self.k += 1;
        let mag = term.abs();
        if mag > 0.0 {
            self.prev = self.last;
            self.last = mag;
        }
        if mag < self.cfg.term_tol {
            self.small += 1;
        } else {
            self.small = 0;
        }
    }

    fn finish(self, converged: bool, nan: bool, last_point: f64, prev_point: Option<f64>) -> Branch {
        Branch {
            value: self.sum,
            terms: self.k,
            tail: if nan { f64::INFINITY } else { self.tail() },
            converged: converged && !nan,
            nan,
            last_point,
            prev_point,
        }
    }
}

/// Whether the step `t -> next` lands on or jumps over `s0`, which exact
/// orbits never do.
pub(crate) fn crosses(t: f64, next: f64, s0: f64) -> bool {
    t != s0 && (t - s0) * (next - s0) <= 0.0
}

/// Sum `term(beta^k(x), beta^{k+1}(x))` over the orbit of `x`.
///
/// `observe(k, beta^k(x), term, partial_sum)` sees every accepted term.
pub(crate) fn sum_branch<T, O>(map: &BetaMap, x: f64, cfg: &TruncationConfig, mut term: T, mut observe: O) -> Branch
where
    T: FnMut(f64, f64) -> f64,
    O: FnMut(usize, f64, f64, f64),
{
    let mut acc = Accumulator::new(map, cfg);
    let mut xk = x;
    let mut prev_point = None;
    let mut nan = false;
    let converged = loop {
        if let Some(c) = acc.stop(xk) {
            break c;
        }
        let next = map.apply(xk);
        if next == xk || crosses(xk, next, acc.s0) {
            // stalled, or rounding would reach s0
            break (xk - acc.s0).abs() <= acc.gap;
        }
        let t = term(xk, next);
        if t.is_nan() {
            nan = true;
            break false;
        }
        acc.push(t);
        observe(acc.k - 1, xk, t, acc.sum);
        prev_point = Some(xk);
        xk = next;
    };
    acc.finish(converged, nan, xk, prev_point)
}

/// Same series as [`sum_branch`] with `term = (x_k - x_{k+1}) * value(x_k)`,
/// evaluating `value` on chunks of orbit points through `exec`.
pub(crate) fn sum_branch_chunked<V>(map: &BetaMap, x: f64, cfg: &TruncationConfig, exec: Execution, value: V) -> Branch
where
    V: Fn(f64) -> f64 + Sync + Send,
{
    let mut acc = Accumulator::new(map, cfg);
    let mut xk = x;
    let mut prev_point = None;
    let mut nan = false;
    let mut buf: Vec<(f64, f64)> = Vec::with_capacity(CHUNK);
    let mut vals: Vec<f64> = Vec::new();
    let mut pos = 0;
    let converged = loop {
        if let Some(c) = acc.stop(xk) {
            break c;
        }
        if pos == buf.len() {
            buf.clear();
            let mut t = xk;
            for _ in 0..CHUNK {
                let mut n = map.apply(t);
                if crosses(t, n, acc.s0) {
                    n = t;
                }
                buf.push((t, n));
                if n == t {
                    break;
                }
                t = n;
            }
            vals = exec.map_slice(&buf, |&(p, n)| if n == p { 0.0 } else { value(p) });
            pos = 0;
        }
        let (p, next) = buf[pos];
        debug_assert_eq!(p, xk);
        if next == xk {
            break (xk - acc.s0).abs() <= acc.gap;
        }
        let t = (xk - next) * vals[pos];
        pos += 1;
        if t.is_nan() {
            nan = true;
            break false;
        }
        acc.push(t);
        prev_point = Some(xk);
        xk = next;
    };
    acc.finish(converged, nan, xk, prev_point)
}

fn check_domain(map: &BetaMap, name: &'static str, x: f64) -> Result<()> {
    if map.domain().contains(x) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value: x,
            expected: "a point inside the map domain",
        })
    }
}

pub(crate) fn check_order(a: f64, b: f64) -> Result<()> {
    if a < b {
        Ok(())
    } else {
        Err(Error::OrderViolation { a, b })
    }
}

/// `a <= s0 <= b` (with `a < b`).
pub(crate) fn check_contains_s0(map: &BetaMap, a: f64, b: f64) -> Result<()> {
    check_order(a, b)?;
    let s0 = map.s0();
    if a <= s0 && s0 <= b {
        Ok(())
    } else {
        Err(Error::FixedPointOutside { a, b, s0 })
    }
}

/// `a < s0 < b`.
pub(crate) fn check_straddles_s0(map: &BetaMap, a: f64, b: f64) -> Result<()> {
    check_order(a, b)?;
    let s0 = map.s0();
    if a < s0 && s0 < b {
        Ok(())
    } else {
        Err(Error::FixedPointOutside { a, b, s0 })
    }
}

fn integrand_term<F: RealFn + ?Sized>(f: &F) -> impl FnMut(f64, f64) -> f64 + '_ {
    move |xk, next| (xk - next) * f.value(xk)
}

pub(crate) fn branch_integral<F: RealFn + ?Sized>(map: &BetaMap, f: &F, x: f64, cfg: &TruncationConfig) -> Branch {
    sum_branch(map, x, cfg, integrand_term(f), |_, _, _, _| {})
}

pub(crate) fn combine(a: &Branch, b: &Branch) -> IntegralResult {
    IntegralResult {
        value: b.value - a.value,
        terms_a: a.terms,
        terms_b: b.terms,
        tail_estimate: a.tail.max(b.tail),
        converged: a.converged && b.converged,
        nan_encountered: a.nan || b.nan,
    }
}

/// `int_{s0}^{x} f d_beta`.
pub fn integral_from_s0<F: RealFn + ?Sized>(map: &BetaMap, f: &F, x: f64, cfg: &TruncationConfig) -> Result<IntegralResult> {
    cfg.validate()?;
    check_domain(map, "x", x)?;
    let br = branch_integral(map, f, x, cfg);
    Ok(IntegralResult {
        value: br.value,
        terms_a: 0,
        terms_b: br.terms,
        tail_estimate: br.tail,
        converged: br.converged,
        nan_encountered: br.nan,
    })
}

/// `int_a^b f d_beta` for `a < b`.
pub fn integral<F: RealFn + ?Sized>(map: &BetaMap, f: &F, a: f64, b: f64, cfg: &TruncationConfig) -> Result<IntegralResult> {
    cfg.validate()?;
    check_order(a, b)?;
    check_domain(map, "a", a)?;
    check_domain(map, "b", b)?;
    let ia = branch_integral(map, f, a, cfg);
    let ib = branch_integral(map, f, b, cfg);
    Ok(combine(&ia, &ib))
}

/// One row of a partial-sum trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub grid_point: f64,
    #[serde(with = "crate::serde_float")]
    pub term: f64,
    #[serde(with = "crate::serde_float")]
    pub partial_sum: f64,
}

/// [`integral`] plus every accepted term: the `b` branch first, then the
/// `a` branch with negated terms, so the final `partial_sum` is the value.
pub fn integral_trace<F: RealFn + ?Sized>(
    map: &BetaMap,
    f: &F,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
) -> Result<(IntegralResult, Vec<TraceRow>)> {
    cfg.validate()?;
    check_order(a, b)?;
    check_domain(map, "a", a)?;
    check_domain(map, "b", b)?;
    let mut rows = Vec::new();
    let ib = sum_branch(map, b, cfg, integrand_term(f), |k, x, t, s| {
        rows.push(TraceRow {
            k,
            grid_point: x,
            term: t,
            partial_sum: s,
        })
    });
    let offset = ib.value;
    let ia = sum_branch(map, a, cfg, integrand_term(f), |k, x, t, s| {
        rows.push(TraceRow {
            k,
            grid_point: x,
            term: -t,
            partial_sum: offset - s,
        })
    });
    Ok((combine(&ia, &ib), rows))
}

/// `int_a^b int_a^b F(x, y) d_beta x d_beta y`, inner integral in `x`.
///
/// Inner integrals for consecutive outer grid points are evaluated in
/// chunks through `exec`; the outer summation order is fixed.
pub fn double_integral<F>(map: &BetaMap, f: F, a: f64, b: f64, cfg: &TruncationConfig, exec: Execution) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    cfg.validate()?;
    check_order(a, b)?;
    check_domain(map, "a", a)?;
    check_domain(map, "b", b)?;

    // Worst inner diagnostics seen, gathered per evaluated outer point.
    let inner = |y: f64| -> (f64, IntegralResult) {
        let fy = |x: f64| f(x, y);
        let ia = branch_integral(map, &fy, a, cfg);
        let ib = branch_integral(map, &fy, b, cfg);
        let r = combine(&ia, &ib);
        (r.value, r)
    };
    let diag = std::sync::Mutex::new(None::<IntegralResult>);
    let value_at = |y: f64| {
        let (v, r) = inner(y);
        let mut d = diag.lock().unwrap_or_else(|e| e.into_inner());
        *d = Some(match *d {
            Some(prev) => prev.merge_diagnostics(&r, 0.0),
            None => r,
        });
        v
    };
    let oa = sum_branch_chunked(map, a, cfg, exec, value_at);
    let ob = sum_branch_chunked(map, b, cfg, exec, value_at);
    let outer = combine(&oa, &ob);
    let inner_diag = diag.into_inner().unwrap_or_else(|e| e.into_inner());
    Ok(match inner_diag {
        Some(d) => outer.merge_diagnostics(&d, outer.value),
        None => outer,
    })
}

/// Orbit points of `a` and `b` (to convergence or `k_max`) followed by `s0`.
pub fn grid_points(map: &BetaMap, a: f64, b: f64, cfg: &TruncationConfig) -> Vec<f64> {
    let oa = map.orbit(a, cfg.gap_tol, cfg.k_max);
    let ob = map.orbit(b, cfg.gap_tol, cfg.k_max);
    let mut pts = oa.points;
    pts.extend(ob.points);
    pts.push(map.s0());
    pts
}

/// `L^p_beta` norm on `[a, b]`; `p = f64::INFINITY` takes the sup over the grid.
pub fn lp_norm<F: RealFn + ?Sized>(map: &BetaMap, f: &F, a: f64, b: f64, p: f64, cfg: &TruncationConfig) -> Result<f64> {
    check_contains_s0(map, a, b)?;
    if !(p >= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            expected: "1 <= p <= infinity",
        });
    }
    if p == f64::INFINITY {
        return Ok(grid_points(map, a, b, cfg)
            .into_iter()
            .map(|t| f.value(t).abs())
            .fold(0.0, f64::max));
    }
    let g = |x: f64| f.value(x).abs().powf(p);
    let r = integral(map, &g, a, b, cfg)?;
    Ok(r.value.max(0.0).powf(1.0 / p))
}

/// `<f, g> = int_a^b f g d_beta` (real functions).
pub fn inner_product<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<f64>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    let fg = |x: f64| f.value(x) * g.value(x);
    Ok(integral(map, &fg, a, b, cfg)?.value)
}
