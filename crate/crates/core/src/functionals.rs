//! The Chebyshev functional `T(f, g)` on `[a, b]` and its Korkine form.

use serde::{Deserialize, Serialize};

use crate::beta_map::BetaMap;
use crate::error::Result;
use crate::exec::Execution;
use crate::expr::RealFn;
use crate::quadrature::{check_contains_s0, check_order, double_integral, integral, IntegralResult, TruncationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevResult {
    pub t_fg: f64,
    pub mean_f: f64,
    pub mean_g: f64,
    pub mean_fg: f64,
    pub int_f: IntegralResult,
    pub int_g: IntegralResult,
    pub int_fg: IntegralResult,
}

impl ChebyshevResult {
    /// Worst diagnostics over the three integrals.
    pub fn diagnostics(&self) -> IntegralResult {
        self.int_f
            .merge_diagnostics(&self.int_g, self.t_fg)
            .merge_diagnostics(&self.int_fg, self.t_fg)
    }
}

/// `T(f, g) = mean(fg) - mean(f) mean(g)` with beta-means over `[a, b]`.
pub fn chebyshev<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<ChebyshevResult>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_order(a, b)?;
    let w = b - a;
    let fg = |x: f64| f.value(x) * g.value(x);
    let int_f = integral(map, f, a, b, cfg)?;
    let int_g = integral(map, g, a, b, cfg)?;
    let int_fg = integral(map, &fg, a, b, cfg)?;
    let (mean_f, mean_g, mean_fg) = (int_f.value / w, int_g.value / w, int_fg.value / w);
    Ok(ChebyshevResult {
        t_fg: mean_fg - mean_f * mean_g,
        mean_f,
        mean_g,
        mean_fg,
        int_f,
        int_g,
        int_fg,
    })
}

/// `1/(2 (b-a)^2) int int (f(x) - f(y)) (g(x) - g(y))`; `value` holds the functional.
pub fn korkine<F, G>(
    map: &BetaMap,
    f: &F,
    g: &G,
    a: f64,
    b: f64,
    cfg: &TruncationConfig,
    exec: Execution,
) -> Result<IntegralResult>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_order(a, b)?;
    let kernel = |x: f64, y: f64| (f.value(x) - f.value(y)) * (g.value(x) - g.value(y));
    let mut r = double_integral(map, kernel, a, b, cfg, exec)?;
    r.value /= 2.0 * (b - a) * (b - a);
    Ok(r)
}

/// `T(g, g)` in the centred form `mean((g - mean g)^2)`, which keeps full
/// relative accuracy when `g` is nearly constant. `value` holds the functional.
pub fn centered_variance<G: RealFn + ?Sized>(map: &BetaMap, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<IntegralResult> {
    check_order(a, b)?;
    let w = b - a;
    let ig = integral(map, g, a, b, cfg)?;
    let mean = ig.value / w;
    let sq = |x: f64| {
        let d = g.value(x) - mean;
        d * d
    };
    let r = integral(map, &sq, a, b, cfg)?;
    Ok(r.merge_diagnostics(&ig, r.value / w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchySchwarzGap {
    pub t_fg: f64,
    pub t_ff: f64,
    pub t_gg: f64,
    /// `T(f, f) T(g, g) - T(f, g)^2`.
    pub gap: f64,
    pub diagnostics: IntegralResult,
}

pub fn cauchy_schwarz_gap<F, G>(map: &BetaMap, f: &F, g: &G, a: f64, b: f64, cfg: &TruncationConfig) -> Result<CauchySchwarzGap>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    check_contains_s0(map, a, b)?;
    let fg = chebyshev(map, f, g, a, b, cfg)?;
    let ff = chebyshev(map, f, f, a, b, cfg)?;
    let gg = chebyshev(map, g, g, a, b, cfg)?;
    let diagnostics = fg
        .diagnostics()
        .merge_diagnostics(&ff.diagnostics(), 0.0)
        .merge_diagnostics(&gg.diagnostics(), 0.0);
    Ok(CauchySchwarzGap {
        t_fg: fg.t_fg,
        t_ff: ff.t_fg,
        t_gg: gg.t_fg,
        gap: ff.t_fg * gg.t_fg - fg.t_fg * fg.t_fg,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn e(s: &str) -> crate::expr::Expr {
        parse(s).unwrap()
    }

    fn cfg() -> TruncationConfig {
        TruncationConfig::default()
    }

    #[test]
    fn chebyshev_examples() {
        let j = BetaMap::jackson(0.5).unwrap();
        let r = chebyshev(&j, &e("3.5"), &e("x^2 - sin(x)"), -1.0, 2.0, &cfg()).unwrap();
        assert!(r.t_fg.abs() < 1e-14);
        let r = chebyshev(&j, &e("x"), &e("x"), 0.0, 1.0, &cfg()).unwrap();
        assert!((r.t_fg - (1.0 / 1.75 - 4.0 / 9.0)).abs() < 1e-12);
        let r = chebyshev(&j, &e("sgn(x)"), &e("sgn(x)"), -1.0, 1.0, &cfg()).unwrap();
        assert!((r.t_fg - 1.0).abs() < 1e-12);
        assert!(r.diagnostics().converged);
        let v = centered_variance(&j, &e("x"), 0.0, 1.0, &cfg()).unwrap().value;
        assert!((v - (1.0 / 1.75 - 4.0 / 9.0)).abs() < 1e-12);
        assert!(centered_variance(&j, &e("3"), -1.0, 1.0, &cfg()).unwrap().value < 1e-28);
    }

    #[test]
    fn korkine_examples() {
        let j = BetaMap::jackson(0.5).unwrap();
        let x = e("x");
        let t = chebyshev(&j, &x, &x, -1.0, 1.0, &cfg()).unwrap().t_fg;
        for exec in [Execution::Sequential, Execution::Parallel] {
            let k = korkine(&j, &x, &x, -1.0, 1.0, &cfg(), exec).unwrap().value;
            assert!((k - t).abs() <= 1e-8 * t.abs());
            assert_eq!(korkine(&j, &e("2"), &x, -1.0, 1.0, &cfg(), exec).unwrap().value, 0.0);
        }
    }

    #[test]
    fn cs_examples() {
        let j = BetaMap::jackson(0.5).unwrap();
        let f = e("x^3 - x + 0.2");
        assert!(cauchy_schwarz_gap(&j, &f, &f, -1.0, 1.0, &cfg()).unwrap().gap.abs() < 1e-10);
        assert!(cauchy_schwarz_gap(&j, &e("4"), &f, -1.0, 1.0, &cfg()).unwrap().gap.abs() < 1e-14);
        assert!(cauchy_schwarz_gap(&j, &e("x^2"), &f, -1.0, 1.0, &cfg()).unwrap().gap >= -1e-9);
        assert!(cauchy_schwarz_gap(&j, &e("x^2"), &f, 0.5, 1.0, &cfg()).is_err());
    }

    fn arb_map() -> impl Strategy<Value = BetaMap> {
        prop_oneof![
            (0.1f64..0.9).prop_map(|q| BetaMap::jackson(q).unwrap()),
            (0.1f64..0.9, 0.0f64..2.0).prop_map(|(q, w)| BetaMap::hahn(q, w).unwrap()),
        ]
    }

    fn poly(c: Vec<f64>) -> impl Fn(f64) -> f64 + Sync {
        move |x| c.iter().rev().fold(0.0, |acc, k| acc * x + k)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn positivity_symmetry_shift(
            m in arb_map(),
            lo in 0.1f64..2.0,
            hi in 0.1f64..2.0,
            cf in prop::collection::vec(-1.0f64..1.0, 1..6),
            cg in prop::collection::vec(-1.0f64..1.0, 1..6),
            c in -5.0f64..5.0,
        ) {
            let (a, b) = (m.s0() - lo, m.s0() + hi);
            let (f, g) = (poly(cf), poly(cg));
            let tff = chebyshev(&m, &f, &f, a, b, &cfg()).unwrap().t_fg;
            prop_assert!(tff >= -1e-10);
            let tfg = chebyshev(&m, &f, &g, a, b, &cfg()).unwrap();
            let tgf = chebyshev(&m, &g, &f, a, b, &cfg()).unwrap();
            prop_assert!((tfg.t_fg - tgf.t_fg).abs() <= 1e-12);
            let scale = 1.0 + tfg.mean_fg.abs() + (tfg.mean_f * tfg.mean_g).abs() + c.abs() * tfg.mean_g.abs();
            let shifted = |x: f64| f(x) + c;
            let ts = chebyshev(&m, &shifted, &g, a, b, &cfg()).unwrap().t_fg;
            prop_assert!((ts - tfg.t_fg).abs() <= 1e-9 * scale);
        }

        #[test]
        fn bilinearity(
            m in arb_map(),
            cf in prop::collection::vec(-1.0f64..1.0, 1..5),
            ch in prop::collection::vec(-1.0f64..1.0, 1..5),
            cg in prop::collection::vec(-1.0f64..1.0, 1..5),
            alpha in -3.0f64..3.0,
        ) {
            let (a, b) = (m.s0() - 1.0, m.s0() + 1.5);
            let (f, h, g) = (poly(cf), poly(ch), poly(cg));
            let comb = |x: f64| alpha * f(x) + h(x);
            let lhs = chebyshev(&m, &comb, &g, a, b, &cfg()).unwrap().t_fg;
            let tf = chebyshev(&m, &f, &g, a, b, &cfg()).unwrap();
            let th = chebyshev(&m, &h, &g, a, b, &cfg()).unwrap();
            let scale = 1.0 + alpha.abs() * (tf.mean_fg.abs() + (tf.mean_f * tf.mean_g).abs())
                + th.mean_fg.abs() + (th.mean_f * th.mean_g).abs();
            prop_assert!((lhs - alpha * tf.t_fg - th.t_fg).abs() <= 1e-9 * scale);
        }
    }
}
