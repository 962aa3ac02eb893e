//! Numerical checks of the Gruss-type bounds: each check evaluates both
//! sides and returns an [`InequalityReport`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beta_map::BetaMap;
use crate::calculus::{beta_derivative, DerivativeOptions};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func, RealFn};
use crate::functionals::{centered_variance, chebyshev};
use crate::quadrature::{
    check_contains_s0, check_order, check_straddles_s0, combine, grid_points, integral, lp_norm, sum_branch,
    IntegralResult, TruncationConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSource {
    #[serde(rename = "user-supplied")]
    UserSupplied,
    #[serde(rename = "grid-estimated")]
    GridEstimated,
}

/// Bounds `m <= f <= M`, `n <= g <= N` on the grid, plus Lipschitz-type moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(with = "crate::serde_float")]
    pub m: f64,
    #[serde(rename = "M", with = "crate::serde_float")]
    pub big_m: f64,
    #[serde(with = "crate::serde_float::option")]
    pub n: Option<f64>,
    #[serde(rename = "N", with = "crate::serde_float::option")]
    pub big_n: Option<f64>,
    #[serde(rename = "L", with = "crate::serde_float::option")]
    pub lipschitz: Option<f64>,
    #[serde(with = "crate::serde_float::option")]
    pub sup_dbeta_u: Option<f64>,
    pub source: BoundSource,
}

impl BoundParams {
    pub fn new(m: f64, big_m: f64, source: BoundSource) -> Result<Self> {
        if !(m <= big_m) {
            return Err(Error::HypothesisViolated(format!("m = {m} must not exceed M = {big_m}")));
        }
        Ok(BoundParams {
            m,
            big_m,
            n: None,
            big_n: None,
            lipschitz: None,
            sup_dbeta_u: None,
            source,
        })
    }

    pub fn user(m: f64, big_m: f64) -> Result<Self> {
        Self::new(m, big_m, BoundSource::UserSupplied)
    }

    pub fn with_g(mut self, n: f64, big_n: f64) -> Result<Self> {
        if !(n <= big_n) {
            return Err(Error::HypothesisViolated(format!("n = {n} must not exceed N = {big_n}")));
        }
        self.n = Some(n);
        self.big_n = Some(big_n);
        Ok(self)
    }

    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l >= 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "L",
                value: l,
                expected: "L >= 0",
            });
        }
        self.lipschitz = Some(l);
        Ok(self)
    }

    pub fn with_sup_dbeta_u(mut self, s: f64) -> Self {
        self.sup_dbeta_u = Some(s);
        self
    }

    /// Grid estimates of `(m, M)` for `f` and `(n, N)` for `g`.
    pub fn estimate<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<Self>
    where
        F: RealFn + ?Sized,
        G: RealFn + ?Sized,
    {
        let pf = grid_bounds(map, f, a, b, cfg, false)?;
        let pg = grid_bounds(map, g, a, b, cfg, false)?;
        pf.with_g(pg.m, pg.big_m)
    }

    fn spread(&self) -> f64 {
        self.big_m - self.m
    }
}

/// Convergence information carried by a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub nan_encountered: bool,
    pub max_terms: usize,
    #[serde(with = "crate::serde_float")]
    pub tail_estimate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            converged: true,
            nan_encountered: false,
            max_terms: 0,
            tail_estimate: 0.0,
            notes: Vec::new(),
        }
    }
}

impl Diagnostics {
    pub fn from_integral(r: &IntegralResult) -> Self {
        Diagnostics::default().merge(r)
    }

    pub fn merge(mut self, r: &IntegralResult) -> Self {
        self.converged &= r.converged;
        self.nan_encountered |= r.nan_encountered;
        self.max_terms = self.max_terms.max(r.terms_a).max(r.terms_b);
        self.tail_estimate = self.tail_estimate.max(r.tail_estimate);
        self
    }

    pub fn combine(mut self, other: &Diagnostics) -> Self {
        self.converged &= other.converged;
        self.nan_encountered |= other.nan_encountered;
        self.max_terms = self.max_terms.max(other.max_terms);
        self.tail_estimate = self.tail_estimate.max(other.tail_estimate);
        for n in &other.notes {
            if !self.notes.contains(n) {
                self.notes.push(n.clone());
            }
        }
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    #[serde(with = "crate::serde_float")]
    pub lhs: f64,
    #[serde(with = "crate::serde_float")]
    pub rhs: f64,
    #[serde(with = "crate::serde_float")]
    pub slack: f64,
    pub holds: bool,
    pub params: BoundParams,
    pub witness: Option<String>,
    #[serde(with = "crate::serde_float")]
    pub tol_report: f64,
    pub diagnostics: Diagnostics,
}

impl InequalityReport {
    /// Report with the default tolerance `1e-8 (1 + |rhs|)`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, params: BoundParams, diagnostics: Diagnostics) -> Self {
        Self::with_tolerance(name, lhs, rhs, 1e-8 * (1.0 + rhs.abs()), params, diagnostics)
    }

    pub fn with_tolerance(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol_report: f64,
        params: BoundParams,
        diagnostics: Diagnostics,
    ) -> Self {
        let slack = rhs - lhs;
        InequalityReport {
            name: name.into(),
            lhs,
            rhs,
            slack,
            holds: slack >= -tol_report,
            params,
            witness: None,
            tol_report,
            diagnostics,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }
}

fn finite_values<F: RealFn + ?Sized>(f: &F, pts: &[f64]) -> Result<Vec<f64>> {
    pts.iter()
        .map(|&t| {
            let v = f.value(t);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::HypothesisViolated(format!("function is not finite at grid point {t}")))
            }
        })
        .collect()
}

/// `(m, M)` over the orbit points of `a`, `b` and `s0`; `s0` itself is left
/// out when the caller flags a discontinuity there.
pub fn grid_bounds<F: RealFn + ?Sized>(
    map: &BetaMap,
    f: &F,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
    discontinuous_at_s0: bool,
) -> Result<BoundParams> {
    check_order(a, b)?;
    let mut pts = grid_points(map, a, b, cfg);
    if discontinuous_at_s0 {
        pts.pop();
    }
    let vals = finite_values(f, &pts)?;
    let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    BoundParams::new(m, big_m, BoundSource::GridEstimated)
}

fn bound_note<F: RealFn + ?Sized>(map: &BetaMap, f: &F, a: f64, b: f64, cfg: &TruncationConfig, lo: f64, hi: f64, which: &str) -> Option<String> {
    let pts = grid_points(map, a, b, cfg);
    pts.iter()
        .find(|&&t| {
            let v = f.value(t);
            v < lo || v > hi
        })
        .map(|t| format!("{which} bounds violated on the grid at x = {t}"))
}

fn g_bounds<G: RealFn + ?Sized>(
    params: &BoundParams,
    map: &BetaMap,
    g: &G,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
) -> Result<BoundParams> {
    match (params.n, params.big_n) {
        (Some(_), Some(_)) => Ok(*params),
        _ => {
            let pg = grid_bounds(map, g, a, b, cfg, false)?;
            params.with_g(pg.m, pg.big_m)
        }
    }
}

/// `|T(f, g)| <= (M - m)(N - n) / 4`, for `a < s0 < b`.
pub fn gruss_check<F, G>(
    map: &BetaMap,
    f: &F,
    g: &G,
    a: f64,
    b: f64,
    params: &BoundParams,
    cfg: &TruncationConfig,
) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_straddles_s0(map, a, b)?;
    let p = g_bounds(params, map, g, a, b, cfg)?;
    let (n, big_n) = (p.n.unwrap_or(0.0), p.big_n.unwrap_or(0.0));
    let t = chebyshev(map, f, g, a, b, cfg)?;
    let mut diag = Diagnostics::from_integral(&t.diagnostics());
    for note in [
        bound_note(map, f, a, b, cfg, p.m, p.big_m, "f"),
        bound_note(map, g, a, b, cfg, n, big_n, "g"),
    ]
    .into_iter()
    .flatten()
    {
        diag = diag.note(note);
    }
    let rhs = 0.25 * p.spread() * (big_n - n);
    Ok(InequalityReport::new("gruss", t.t_fg.abs(), rhs, p, diag))
}

/// The two steps `|T(f,g)| <= (M-m)/2 * mean|g - mean g|` and
/// `(M-m)/2 * mean|g - mean g| <= (M-m)/2 * sqrt(T(g,g))`, for `a <= s0 <= b`.
pub fn pre_gruss_check<F, G>(
    map: &BetaMap,
    f: &F,
    g: &G,
    a: f64,
    b: f64,
    params: &BoundParams,
    cfg: &TruncationConfig,
) -> Result<(InequalityReport, InequalityReport)>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    let w = b - a;
    let t_fg = chebyshev(map, f, g, a, b, cfg)?;
    let t_gg = centered_variance(map, g, a, b, cfg)?;
    let mean_g = t_fg.mean_g;
    let dev = |x: f64| (g.value(x) - mean_g).abs();
    let i_dev = integral(map, &dev, a, b, cfg)?;
    let half = 0.5 * params.spread();
    let middle = half * i_dev.value / w;
    let last = half * t_gg.value.max(0.0).sqrt();
    let d1 = Diagnostics::from_integral(&t_fg.diagnostics()).merge(&i_dev);
    let d2 = d1.clone().merge(&t_gg);
    Ok((
        InequalityReport::new("pre-gruss-1", t_fg.t_fg.abs(), middle, *params, d1),
        InequalityReport::new("pre-gruss-2", middle, last, *params, d2),
    ))
}

/// `|T(f, g)| <= (M - m)/2 * sqrt(T(g, g))`, for `a < s0 < b`.
pub fn functional_bound_check<F, G>(
    map: &BetaMap,
    f: &F,
    g: &G,
    a: f64,
    b: f64,
    params: &BoundParams,
    cfg: &TruncationConfig,
) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_straddles_s0(map, a, b)?;
    let t_fg = chebyshev(map, f, g, a, b, cfg)?;
    let t_gg = centered_variance(map, g, a, b, cfg)?;
    let diag = Diagnostics::from_integral(&t_fg.diagnostics()).merge(&t_gg);
    let rhs = 0.5 * params.spread() * t_gg.value.max(0.0).sqrt();
    Ok(InequalityReport::new("functional-bound", t_fg.t_fg.abs(), rhs, *params, diag))
}

/// `int |fg| <= ||f||_p ||g||_p'`; `p = 1` pairs with the grid sup of `g`.
pub fn holder_check<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, p: f64, cfg: &TruncationConfig) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            expected: "1 <= p < infinity",
        });
    }
    let fg = |x: f64| (f.value(x) * g.value(x)).abs();
    let lhs = integral(map, &fg, a, b, cfg)?;
    let rhs = if p == 1.0 {
        lp_norm(map, g, a, b, f64::INFINITY, cfg)? * lp_norm(map, f, a, b, 1.0, cfg)?
    } else {
        let conj = p / (p - 1.0);
        lp_norm(map, f, a, b, p, cfg)? * lp_norm(map, g, a, b, conj, cfg)?
    };
    let params = BoundParams::estimate(map, f, g, a, b, cfg)?;
    Ok(InequalityReport::new("holder", lhs.value, rhs, params, Diagnostics::from_integral(&lhs))
        .with_witness(format!("p = {p}")))
}

/// Largest `|u(x) - u(beta x)| / |x - beta x|` over the orbit points of `a` and `b`;
/// `+inf` if any quotient is not finite.
pub fn beta_lipschitz_estimate<U: RealFn + ?Sized>(map: &BetaMap, u: &U, a: f64, b: f64, cfg: &TruncationConfig) -> f64 {
    let mut best: f64 = 0.0;
    for x in [a, b] {
        for t in map.orbit(x, cfg.gap_tol, cfg.k_max).points {
            let bt = map.apply(t);
            if bt == t {
                continue;
            }
            let qt = ((u.value(t) - u.value(bt)) / (t - bt)).abs();
            if !qt.is_finite() {
                return f64::INFINITY;
            }
            best = best.max(qt);
        }
    }
    best
}

/// Grid sup of `|D_beta u|`, including the value at `s0`.
pub fn dbeta_sup_norm<U: RealFn + ?Sized>(map: &BetaMap, u: &U, a: f64, b: f64, cfg: &TruncationConfig) -> f64 {
    let at_s0 = beta_derivative(map, u, map.s0(), &DerivativeOptions::default()).abs();
    let off = beta_lipschitz_estimate(map, u, a, b, cfg);
    if at_s0.is_nan() {
        return f64::INFINITY;
    }
    off.max(at_s0)
}

/// Largest slope between neighbouring points of the sorted grid (with `s0`).
pub fn lipschitz_grid_constant<U: RealFn + ?Sized>(map: &BetaMap, u: &U, a: f64, b: f64, cfg: &TruncationConfig) -> f64 {
    let mut pts = grid_points(map, a, b, cfg);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut best: f64 = 0.0;
    for w in pts.windows(2) {
        let s = ((u.value(w[1]) - u.value(w[0])) / (w[1] - w[0])).abs();
        if !s.is_finite() {
            return f64::INFINITY;
        }
        best = best.max(s);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsIntegralResult {
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    /// Estimated `u(s0+) - u(s0-)` from the orbit tails.
    #[serde(with = "crate::serde_float")]
    pub jump_s0: f64,
    /// Largest final increment of `u` along either orbit.
    #[serde(with = "crate::serde_float")]
    pub last_du: f64,
    pub diagnostics: IntegralResult,
}

/// Riemann-Stieltjes beta-integral `int_a^b f d_beta u`.
pub fn rs_integral<F, U>(map: &BetaMap, f: &F, u: &U, a: f64, b: f64, cfg: &TruncationConfig) -> Result<RsIntegralResult>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    cfg.validate()?;
    check_order(a, b)?;
    let term = |xk: f64, next: f64| f.value(xk) * (u.value(xk) - u.value(next));
    let ba = sum_branch(map, a, cfg, term, |_, _, _, _| {});
    let bb = sum_branch(map, b, cfg, term, |_, _, _, _| {});
    let last_du = |br: &crate::quadrature::Branch| match br.prev_point {
        Some(p) => (u.value(p) - u.value(br.last_point)).abs(),
        None => 0.0,
    };
    Ok(RsIntegralResult {
        value: bb.value - ba.value,
        jump_s0: u.value(bb.last_point) - u.value(ba.last_point),
        last_du: last_du(&ba).max(last_du(&bb)),
        diagnostics: combine(&ba, &bb),
    })
}

/// `|int f d_beta u - int f D_beta[u] d_beta|`.
pub fn rs_identity_residual<F, U>(map: &BetaMap, f: &F, u: &U, a: f64, b: f64, cfg: &TruncationConfig) -> Result<f64>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    let rs = rs_integral(map, f, u, a, b, cfg)?;
    let opts = DerivativeOptions::default();
    let fdu = |x: f64| f.value(x) * beta_derivative(map, u, x, &opts);
    let i = integral(map, &fdu, a, b, cfg)?;
    Ok((rs.value - i.value).abs())
}

/// `|int f d_beta u| <= L int |f|`, for `a <= s0 <= b`.
pub fn rs_abs_bound_check<F, U>(
    map: &BetaMap,
    f: &F,
    u: &U,
    a: f64,
    b: f64,
    lipschitz: Option<f64>,
    cfg: &TruncationConfig,
) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    let (l, source) = match lipschitz {
        Some(l) => (l, BoundSource::UserSupplied),
        None => (beta_lipschitz_estimate(map, u, a, b, cfg), BoundSource::GridEstimated),
    };
    let rs = rs_integral(map, f, u, a, b, cfg)?;
    let abs_f = |x: f64| f.value(x).abs();
    let i = integral(map, &abs_f, a, b, cfg)?;
    let mut params = grid_bounds(map, f, a, b, cfg, false)?.with_lipschitz(l)?;
    params.source = source;
    let diag = Diagnostics::from_integral(&rs.diagnostics).merge(&i);
    Ok(InequalityReport::new("rs-abs-bound", rs.value.abs(), l * i.value, params, diag))
}

fn check_tail(u_scale: f64, last_du: f64) -> Result<()> {
    if !(last_du <= 1e-8 * (1.0 + u_scale)) {
        Err(Error::TailDivergent(format!(
            "final increment of u along the orbit is {last_du:e}"
        )))
    } else {
        Ok(())
    }
}

struct RsParts {
    rs: RsIntegralResult,
    int_f: IntegralResult,
    du: f64,
}

fn rs_parts<F, U>(map: &BetaMap, f: &F, u: &U, a: f64, b: f64, cfg: &TruncationConfig, with_jump: bool) -> Result<RsParts>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    let rs = rs_integral(map, f, u, a, b, cfg)?;
    check_tail(u.value(a).abs().max(u.value(b).abs()), rs.last_du)?;
    let int_f = integral(map, f, a, b, cfg)?;
    let jump = if with_jump { rs.jump_s0 } else { 0.0 };
    let du = u.value(b) - u.value(a) - jump;
    Ok(RsParts { rs, int_f, du })
}

impl RsParts {
    fn lhs(&self, a: f64, b: f64) -> f64 {
        (self.rs.value - self.du / (b - a) * self.int_f.value).abs()
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::from_integral(&self.rs.diagnostics).merge(&self.int_f)
    }
}

/// `|int f d_beta u - (u(b) - u(a) - jump)/(b-a) int f| <= L (M - m)(b - a) / 2`.
///
/// Requires `a < s0 < b`; with `boundary` set, `a = s0` or `b = s0` is also
/// accepted and the missing one-sided limit is `u(s0)`.
pub fn rs_gruss_check<F, U>(
    map: &BetaMap,
    f: &F,
    u: &U,
    a: f64,
    b: f64,
    params: &BoundParams,
    cfg: &TruncationConfig,
    boundary: bool,
) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    if boundary {
        check_contains_s0(map, a, b)?;
    } else {
        check_straddles_s0(map, a, b)?;
    }
    let mut p = *params;
    let l = match p.lipschitz {
        Some(l) => l,
        None => {
            let l = beta_lipschitz_estimate(map, u, a, b, cfg);
            p.lipschitz = Some(l);
            l
        }
    };
    let parts = rs_parts(map, f, u, a, b, cfg, true)?;
    let rhs = 0.5 * l * p.spread() * (b - a);
    Ok(InequalityReport::new("rs-gruss", parts.lhs(a, b), rhs, p, parts.diagnostics()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RsVariant {
    ContinuousU,
    LipschitzGrid,
    DbetaSup,
    NonnegWeight,
    Trapezoid,
}

impl RsVariant {
    pub const ALL: [RsVariant; 5] = [
        RsVariant::ContinuousU,
        RsVariant::LipschitzGrid,
        RsVariant::DbetaSup,
        RsVariant::NonnegWeight,
        RsVariant::Trapezoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RsVariant::ContinuousU => "continuous-u",
            RsVariant::LipschitzGrid => "lipschitz-grid",
            RsVariant::DbetaSup => "dbeta-sup",
            RsVariant::NonnegWeight => "nonneg-weight",
            RsVariant::Trapezoid => "trapezoid",
        }
    }
}

impl fmt::Display for RsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RsVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RsVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// Corollary forms of [`rs_gruss_check`], all for `a <= s0 <= b`.
///
/// For `NonnegWeight`, `u` plays the weight `g >= 0`; `Trapezoid` uses `f` only.
/// Missing `m`, `M` (and `L` where used) come from the grid.
pub fn rs_gruss_variant_check<F, U>(
    map: &BetaMap,
    f: &F,
    u: &U,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
    variant: RsVariant,
    params: Option<&BoundParams>,
) -> Result<InequalityReport>
where
    F: RealFn + ?Sized,
    U: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    let mut p = match params {
        Some(p) => *p,
        None => grid_bounds(map, f, a, b, cfg, false)?,
    };
    let name = format!("rs-{variant}");
    let w = b - a;
    match variant {
        RsVariant::ContinuousU | RsVariant::LipschitzGrid | RsVariant::DbetaSup => {
            let continuous = variant == RsVariant::ContinuousU;
            let parts = rs_parts(map, f, u, a, b, cfg, !continuous)?;
            if continuous && parts.rs.jump_s0.abs() > 1e-8 {
                return Err(Error::HypothesisViolated(format!(
                    "u is not continuous at s0: u(s0+) - u(s0-) = {}",
                    parts.rs.jump_s0
                )));
            }
            let l = match variant {
                RsVariant::DbetaSup => {
                    let s = dbeta_sup_norm(map, u, a, b, cfg);
                    p.sup_dbeta_u = Some(s);
                    s
                }
                _ => match p.lipschitz {
                    Some(l) => l,
                    None => {
                        let l = if continuous {
                            beta_lipschitz_estimate(map, u, a, b, cfg)
                        } else {
                            lipschitz_grid_constant(map, u, a, b, cfg)
                        };
                        p.lipschitz = Some(l);
                        l
                    }
                },
            };
            let rhs = 0.5 * l * p.spread() * w;
            Ok(InequalityReport::new(name, parts.lhs(a, b), rhs, p, parts.diagnostics()))
        }
        RsVariant::NonnegWeight => {
            let pts = grid_points(map, a, b, cfg);
            let vals = finite_values(u, &pts)?;
            if let Some((i, v)) = vals.iter().enumerate().find(|(_, &v)| v < 0.0) {
                return Err(Error::HypothesisViolated(format!(
                    "weight is negative at x = {}: g = {v}",
                    pts[i]
                )));
            }
            let sup_g = vals.iter().copied().fold(0.0, f64::max);
            let fg = |x: f64| f.value(x) * u.value(x);
            let i_fg = integral(map, &fg, a, b, cfg)?;
            let i_g = integral(map, u, a, b, cfg)?;
            let i_f = integral(map, f, a, b, cfg)?;
            let lhs = (i_fg.value - i_g.value / w * i_f.value).abs();
            let rhs = 0.5 * sup_g * p.spread() * w;
            let diag = Diagnostics::from_integral(&i_fg).merge(&i_g).merge(&i_f);
            Ok(InequalityReport::new(name, lhs, rhs, p, diag).with_witness(format!("sup g = {sup_g}")))
        }
        RsVariant::Trapezoid => {
            let (fa, fb) = (f.value(a), f.value(b));
            if fa == fb {
                return Err(Error::HypothesisViolated(format!("trapezoid needs f(a) != f(b), both are {fa}")));
            }
            let sup_df = dbeta_sup_norm(map, f, a, b, cfg);
            p.sup_dbeta_u = Some(sup_df);
            let avg = |x: f64| 0.5 * (f.value(x) + f.value(map.apply(x)));
            let i = integral(map, &avg, a, b, cfg)?;
            let lhs = (0.5 * (fa + fb) - i.value / w).abs();
            let rhs = 0.5 * sup_df / (fb - fa).abs() * p.spread() * w;
            Ok(InequalityReport::new(name, lhs, rhs, p, Diagnostics::from_integral(&i)))
        }
    }
}

/// Equality witnesses with the kink at the midpoint `s0 = (a + b)/2`:
/// `u = |x - s0|`, `f = sgn(x - s0)` for the Riemann-Stieltjes bound and
/// `f = g = sgn(x - s0)` for the Gruss bound.
pub fn sharpness_demo(map: &BetaMap, a: f64, b: f64, cfg: &TruncationConfig) -> Result<(InequalityReport, InequalityReport)> {
    check_straddles_s0(map, a, b)?;
    let mid = 0.5 * (a + b);
    let s0 = map.s0();
    if (s0 - mid).abs() > 1e-12 * mid.abs().max(1.0) {
        return Err(Error::MidpointNotFixedPoint { midpoint: mid, s0 });
    }
    let shifted = if mid == 0.0 { Expr::x() } else { Expr::x() - Expr::constant(mid) };
    let u = Expr::call(Func::Abs, shifted.clone());
    let f = Expr::call(Func::Sgn, shifted);
    let witness = format!("u = {u}, f = {f}");

    let pf = grid_bounds(map, &f, a, b, cfg, false)?;
    let l = beta_lipschitz_estimate(map, &u, a, b, cfg);
    let rs = rs_gruss_check(map, &f, &u, a, b, &pf.with_lipschitz(l)?, cfg, false)?.with_witness(witness);
    let pg = pf.with_g(pf.m, pf.big_m)?;
    let gruss = gruss_check(map, &f, &f, a, b, &pg, cfg)?.with_witness(format!("f = g = {f}"));
    Ok((rs, gruss))
}
