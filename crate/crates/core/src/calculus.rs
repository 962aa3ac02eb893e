//! The beta-derivative and the product rule / fundamental theorem /
//! integration-by-parts identities.

use serde::{Deserialize, Serialize};

use crate::beta_map::BetaMap;
use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::quadrature::{check_order, integral, IntegralResult, TruncationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeOptions {
    /// Classical derivative at `s0`, when known.
    pub s0_derivative: Option<f64>,
    /// Central difference step used at `s0` otherwise.
    pub fd_step: f64,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions {
            s0_derivative: None,
            fd_step: 1e-6,
        }
    }
}

impl DerivativeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.fd_step > 0.0 && self.fd_step.is_finite() {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange {
                name: "fd_step",
                value: self.fd_step,
                expected: "a positive finite step",
            })
        }
    }
}

/// `(f(beta(t)) - f(t)) / (beta(t) - t)`, or the classical derivative where `beta(t) = t`.
pub fn beta_derivative<F: RealFn + ?Sized>(map: &BetaMap, f: &F, t: f64, opts: &DerivativeOptions) -> f64 {
    let bt = map.apply(t);
    if bt != t {
        return (f.value(bt) - f.value(t)) / (bt - t);
    }
    match opts.s0_derivative {
        Some(d) => d,
        None => {
            let h = opts.fd_step;
            (f.value(t + h) - f.value(t - h)) / (2.0 * h)
        }
    }
}

/// `D[fg](t) - D[f](t) g(t) - f(beta t) D[g](t)`, absolute value.
pub fn product_rule_residual<F, G>(map: &BetaMap, f: &F, g: &G, t: f64) -> f64
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    let opts = DerivativeOptions::default();
    let fg = |x: f64| f.value(x) * g.value(x);
    let lhs = beta_derivative(map, &fg, t, &opts);
    let rhs = beta_derivative(map, f, t, &opts) * g.value(t)
        + f.value(map.apply(t)) * beta_derivative(map, g, t, &opts);
    (lhs - rhs).abs()
}

/// Same as [`product_rule_residual`] with the roles of `f` and `g` swapped:
/// `D[fg](t) - D[f](t) g(beta t) - f(t) D[g](t)`.
pub fn product_rule_residual_symmetric<F, G>(map: &BetaMap, f: &F, g: &G, t: f64) -> f64
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    let opts = DerivativeOptions::default();
    let fg = |x: f64| f.value(x) * g.value(x);
    let lhs = beta_derivative(map, &fg, t, &opts);
    let rhs = beta_derivative(map, f, t, &opts) * g.value(map.apply(t))
        + f.value(t) * beta_derivative(map, g, t, &opts);
    (lhs - rhs).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedLimits {
    pub left: f64,
    pub right: f64,
}

impl OneSidedLimits {
    pub fn jump(&self) -> f64 {
        self.right - self.left
    }
}

/// Estimate `f(s0-)` and `f(s0+)` from the last orbit points of `a` and `b`.
pub fn one_sided_limits<F: RealFn + ?Sized>(map: &BetaMap, f: &F, a: f64, b: f64, cfg: &TruncationConfig) -> OneSidedLimits {
    let last = |x: f64| {
        let o = map.orbit(x, cfg.gap_tol, cfg.k_max);
        o.points.last().copied().unwrap_or(x)
    };
    OneSidedLimits {
        left: f.value(last(a)),
        right: f.value(last(b)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    /// Magnitude of the largest quantity entering the identity.
    pub scale: f64,
    pub diagnostics: IntegralResult,
}

fn dbeta<'a, F: RealFn + ?Sized>(map: &'a BetaMap, f: &'a F) -> impl Fn(f64) -> f64 + Sync + 'a {
    let opts = DerivativeOptions::default();
    move |t| beta_derivative(map, f, t, &opts)
}

/// `|int_a^b D[f] - (f(b) - f(a) - jump)|`.
pub fn ftc_residual<F: RealFn + ?Sized>(
    map: &BetaMap,
    f: &F,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
    jump: f64,
) -> Result<IdentityResidual> {
    check_order(a, b)?;
    let df = dbeta(map, f);
    let r = integral(map, &df, a, b, cfg)?;
    let (fa, fb) = (f.value(a), f.value(b));
    Ok(IdentityResidual {
        residual: (r.value - (fb - fa - jump)).abs(),
        scale: 1.0 + fa.abs() + fb.abs() + r.value.abs(),
        diagnostics: r,
    })
}

/// `|int f D[g] - ([fg]_a^b - int g(beta) D[f])|` for `f`, `g` continuous at `s0`.
pub fn ibp_residual<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<IdentityResidual>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_order(a, b)?;
    let (df, dg) = (dbeta(map, f), dbeta(map, g));
    let lhs_fn = |t: f64| f.value(t) * dg(t);
    let rhs_fn = |t: f64| g.value(map.apply(t)) * df(t);
    let l = integral(map, &lhs_fn, a, b, cfg)?;
    let r = integral(map, &rhs_fn, a, b, cfg)?;
    let bracket = f.value(b) * g.value(b) - f.value(a) * g.value(a);
    Ok(IdentityResidual {
        residual: (l.value - (bracket - r.value)).abs(),
        scale: 1.0 + l.value.abs() + r.value.abs() + bracket.abs(),
        diagnostics: l.merge_diagnostics(&r, l.value),
    })
}
