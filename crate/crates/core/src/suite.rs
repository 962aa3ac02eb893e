//! Seeded randomized suites for the inequality and identity checks.
//!
//! Case `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so each case is reproducible on its own and cases can run in
//! any order. Results are merged by case index.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::applications::{build_model, expected_value, gruss_window, hermite_hadamard_product_bounds};
use crate::beta_map::{BetaMap, MapKind};
use crate::calculus::{ftc_residual, ibp_residual, one_sided_limits};
use crate::error::Result;
use crate::exec::Execution;
use crate::expr::{Expr, Func};
use crate::functionals::{cauchy_schwarz_gap, chebyshev, korkine};
use crate::inequalities::{
    functional_bound_check, grid_bounds, gruss_check, holder_check, pre_gruss_check, rs_abs_bound_check, rs_gruss_check,
    rs_gruss_variant_check, rs_identity_residual, rs_integral, sharpness_demo, BoundParams, BoundSource, Diagnostics, InequalityReport,
    RsVariant,
};
use crate::quadrature::{integral, TruncationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Gruss,
    PreGruss,
    Cs,
    Holder,
    Korkine,
    RsGruss,
    RsVariants,
    Ftc,
    Ibp,
    Sharpness,
    Prob,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Gruss,
        Check::PreGruss,
        Check::Cs,
        Check::Holder,
        Check::Korkine,
        Check::RsGruss,
        Check::RsVariants,
        Check::Ftc,
        Check::Ibp,
        Check::Sharpness,
        Check::Prob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Gruss => "gruss",
            Check::PreGruss => "pre-gruss",
            Check::Cs => "cs",
            Check::Holder => "holder",
            Check::Korkine => "korkine",
            Check::RsGruss => "rs-gruss",
            Check::RsVariants => "rs-variants",
            Check::Ftc => "ftc",
            Check::Ibp => "ibp",
            Check::Sharpness => "sharpness",
            Check::Prob => "prob",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check {s:?}"))
    }
}

/// Inputs of one check run.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub map: BetaMap,
    pub a: f64,
    pub b: f64,
    pub f: Expr,
    pub g: Expr,
    pub u: Expr,
    /// Holder exponent.
    pub p: f64,
}

/// The random stream of case `index`.
pub fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Jackson with `q` in `[0.1, 0.9]` or Hahn with `s0` in `[0, 3]`.
pub fn random_map<R: Rng>(rng: &mut R) -> BetaMap {
    let q = rng.random_range(0.1..=0.9);
    if rng.random_bool(0.5) {
        BetaMap::jackson(q).expect("q in (0, 1)")
    } else {
        let s0: f64 = rng.random_range(0.0..=3.0);
        BetaMap::hahn(q, s0 * (1.0 - q)).expect("q in (0, 1)")
    }
}

/// `a = s0 - h1`, `b = s0 + h2` with half-widths in `[0.2, 2]`.
pub fn random_interval<R: Rng>(rng: &mut R, map: &BetaMap) -> (f64, f64) {
    let s0 = map.s0();
    (s0 - rng.random_range(0.2..=2.0), s0 + rng.random_range(0.2..=2.0))
}

/// Polynomial of degree at most `max_degree` in `x - s0`, coefficients in `[-1, 1]`, Horner form.
pub fn random_poly<R: Rng>(rng: &mut R, s0: f64, max_degree: usize) -> Expr {
    random_poly_between(rng, s0, 0, max_degree)
}

/// [`random_poly`] with degree in `min_degree..=max_degree` (leading coefficient may still vanish).
pub fn random_poly_between<R: Rng>(rng: &mut R, s0: f64, min_degree: usize, max_degree: usize) -> Expr {
    let deg = rng.random_range(min_degree..=max_degree);
    let t = centered(s0);
    let mut acc = Expr::constant(rng.random_range(-1.0..=1.0));
    for _ in 0..deg {
        acc = acc * t.clone() + Expr::constant(rng.random_range(-1.0..=1.0));
    }
    acc
}

fn centered(s0: f64) -> Expr {
    if s0 == 0.0 {
        Expr::x()
    } else {
        Expr::x() - Expr::constant(s0)
    }
}

fn sgn_at(s0: f64) -> Expr {
    Expr::call(Func::Sgn, centered(s0))
}

/// A polynomial, or a polynomial plus a jump `c sgn(x - s0)`.
pub fn random_mixed<R: Rng>(rng: &mut R, s0: f64, max_degree: usize) -> Expr {
    let p = random_poly(rng, s0, max_degree);
    if rng.random_bool(0.5) {
        p
    } else {
        p + Expr::constant(rng.random_range(-1.0..=1.0)) * sgn_at(s0)
    }
}

/// A continuous beta-Lipschitz function: a polynomial, optionally plus `c |x - s0|`.
pub fn random_lipschitz<R: Rng>(rng: &mut R, s0: f64, max_degree: usize) -> Expr {
    let p = random_poly(rng, s0, max_degree);
    if rng.random_bool(0.5) {
        p
    } else {
        let kink = Expr::call(Func::Abs, centered(s0));
        p + Expr::constant(rng.random_range(-1.0..=1.0)) * kink
    }
}

/// A nonnegative convex quadratic `c2 (x - r)^2 + c0`.
pub fn random_convex_nonneg<R: Rng>(rng: &mut R, a: f64, b: f64) -> Expr {
    let r = rng.random_range(a..=b);
    let c2 = rng.random_range(0.0..=1.0);
    let c0 = rng.random_range(0.0..=1.0);
    Expr::constant(c2) * (Expr::x() - Expr::constant(r)).powi(2) + Expr::constant(c0)
}

const HOLDER_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];

/// Draw the inputs of case `index` for `check`.
pub fn random_case(check: Check, seed: u64, index: usize) -> Case {
    let mut rng = case_rng(seed, index);
    let map = random_map(&mut rng);
    let s0 = map.s0();
    let (mut a, mut b) = random_interval(&mut rng, &map);
    let (f, g, u) = match check {
        Check::Korkine | Check::Ftc | Check::Ibp => (
            random_poly(&mut rng, s0, 6),
            random_poly(&mut rng, s0, 6),
            random_poly(&mut rng, s0, 6),
        ),
        Check::RsGruss => (
            random_mixed(&mut rng, s0, 4),
            random_poly(&mut rng, s0, 4),
            random_mixed(&mut rng, s0, 4),
        ),
        Check::RsVariants => (
            random_poly_between(&mut rng, s0, 1, 4),
            random_poly(&mut rng, s0, 3),
            random_lipschitz(&mut rng, s0, 4),
        ),
        Check::Sharpness => {
            let c = rng.random_range(0.2..=3.0);
            a = s0 - c;
            b = s0 + c;
            let t = centered(s0);
            (Expr::call(Func::Sgn, t.clone()), Expr::call(Func::Sgn, t.clone()), Expr::call(Func::Abs, t))
        }
        Check::Prob => {
            if rng.random_bool(0.25) {
                a = s0;
            }
            (
                random_convex_nonneg(&mut rng, a, b),
                random_convex_nonneg(&mut rng, a, b),
                random_mixed(&mut rng, s0, 4),
            )
        }
        _ => (
            random_mixed(&mut rng, s0, 4),
            random_mixed(&mut rng, s0, 4),
            random_lipschitz(&mut rng, s0, 4),
        ),
    };
    let p = HOLDER_EXPONENTS[rng.random_range(0..HOLDER_EXPONENTS.len())];
    Case { map, a, b, f, g, u, p }
}

/// A residual report: holds iff `residual <= allowed`.
pub fn identity_report(name: &str, residual: f64, allowed: f64, params: BoundParams, diag: Diagnostics) -> InequalityReport {
    InequalityReport::with_tolerance(name, residual, allowed, 0.0, params, diag)
}

fn describe(case: &Case) -> String {
    let map = match case.map.kind() {
        MapKind::Jackson { q } => format!("jackson(q = {q})"),
        MapKind::Hahn { q, omega } => format!("hahn(q = {q}, omega = {omega})"),
        MapKind::Custom { expr } => format!("custom({expr})"),
    };
    format!("{map}, [{}, {}], f = {}, g = {}, u = {}", case.a, case.b, case.f, case.g, case.u)
}

/// Run `check` on one case. `fixed` marks user-supplied bounds for `f`, `g`.
pub fn run_check(check: Check, case: &Case, fixed: Option<&BoundParams>, cfg: &TruncationConfig, exec: Execution) -> Result<Vec<InequalityReport>> {
    let Case { map, a, b, f, g, u, p } = case;
    let (a, b) = (*a, *b);
    let params = || -> Result<BoundParams> {
        match fixed {
            Some(p) => Ok(*p),
            None => BoundParams::estimate(map, f, g, a, b, cfg),
        }
    };
    let reports = match check {
        Check::Gruss => vec![
            gruss_check(map, f, g, a, b, &params()?, cfg)?,
            functional_bound_check(map, f, g, a, b, &params()?, cfg)?,
        ],
        Check::PreGruss => {
            let (r1, r2) = pre_gruss_check(map, f, g, a, b, &params()?, cfg)?;
            vec![r1, r2]
        }
        Check::Cs => {
            let c = cauchy_schwarz_gap(map, f, g, a, b, cfg)?;
            let rhs = c.t_ff * c.t_gg;
            let scale = 1.0 + rhs.abs() + c.t_fg * c.t_fg;
            let diag = Diagnostics::from_integral(&c.diagnostics);
            let self_gap = cauchy_schwarz_gap(map, f, f, a, b, cfg)?;
            vec![
                InequalityReport::with_tolerance("cs", c.t_fg * c.t_fg, rhs, 1e-9 * scale, params()?, diag.clone()),
                identity_report("cs-equality", self_gap.gap.abs(), 1e-10, params()?, diag),
            ]
        }
        Check::Holder => vec![holder_check(map, f, g, a, b, *p, cfg)?],
        Check::Korkine => {
            let t = chebyshev(map, f, g, a, b, cfg)?;
            let k = korkine(map, f, g, a, b, cfg, exec)?;
            let diag = Diagnostics::from_integral(&t.diagnostics()).merge(&k);
            vec![identity_report(
                "korkine",
                (k.value - t.t_fg).abs(),
                1e-10f64.max(1e-7 * t.t_fg.abs()),
                params()?,
                diag,
            )]
        }
        Check::RsGruss => {
            let pf = match fixed {
                Some(p) => *p,
                None => grid_bounds(map, f, a, b, cfg, false)?,
            };
            let res = rs_identity_residual(map, f, u, a, b, cfg)?;
            let rs = rs_integral(map, f, u, a, b, cfg)?;
            let scale = 1.0 + rs.value.abs();
            vec![
                rs_gruss_check(map, f, u, a, b, &pf, cfg, false)?,
                rs_abs_bound_check(map, f, u, a, b, pf.lipschitz, cfg)?,
                identity_report("rs-identity", res, 1e-8 * scale, pf, Diagnostics::from_integral(&rs.diagnostics)),
            ]
        }
        Check::RsVariants => {
            let weight = g.clone() * g.clone();
            RsVariant::ALL
                .into_iter()
                .map(|v| {
                    let w = if v == RsVariant::NonnegWeight { &weight } else { u };
                    rs_gruss_variant_check(map, f, w, a, b, cfg, v, fixed)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Check::Ftc => {
            let r = ftc_residual(map, f, a, b, cfg, 0.0)?;
            let jf = f.clone() + Expr::constant(1.0) * sgn_at(map.s0());
            let lim = one_sided_limits(map, &jf, a, b, cfg);
            let rj = ftc_residual(map, &jf, a, b, cfg, lim.jump())?;
            vec![
                identity_report("ftc", r.residual, 1e-8 * r.scale, params()?, Diagnostics::from_integral(&r.diagnostics)),
                identity_report(
                    "ftc-jump",
                    rj.residual,
                    1e-8 * rj.scale,
                    params()?,
                    Diagnostics::from_integral(&rj.diagnostics).note(format!("jump = {}", lim.jump())),
                ),
            ]
        }
        Check::Ibp => {
            let r = ibp_residual(map, f, g, a, b, cfg)?;
            vec![identity_report("ibp", r.residual, 1e-8 * r.scale, params()?, Diagnostics::from_integral(&r.diagnostics))]
        }
        Check::Sharpness => {
            let (rs, gr) = sharpness_demo(map, a, b, cfg)?;
            vec![rs, gr]
        }
        Check::Prob => prob_reports(map, f, g, a, b, fixed, cfg)?,
    };
    Ok(reports)
}

/// Mass balance, `E[X]` cross-check, Gruss window and product sandwich.
pub fn prob_reports(
    map: &BetaMap,
    f: &Expr,
    g: &Expr,
    a: f64,
    b: f64,
    fixed: Option<&BoundParams>,
    cfg: &TruncationConfig,
) -> Result<Vec<InequalityReport>> {
    let model = build_model(map, a, b, cfg)?;
    let params = match fixed {
        Some(p) => *p,
        None => model.bounds(f, g)?,
    };
    let mass = model.total_mass() + model.mass_deficit();
    let p_ab = expected_value(&model, &Expr::x());
    let (reference, what) = match map.kind() {
        MapKind::Jackson { q } => ((a + b) / (1.0 + q), "(a + b)/(1 + q)".to_string()),
        _ => {
            let i = integral(map, &Expr::x(), a, b, cfg)?;
            (i.value / (b - a), "mean of x by quadrature".to_string())
        }
    };
    let window = gruss_window(&model, f, g, &params)?;
    let sandwich = hermite_hadamard_product_bounds(&model, f, g, &params)?;
    let (lo, hi) = sandwich.reports();
    Ok(vec![
        identity_report("prob-mass", (mass - 1.0).abs(), 1e-12, params, Diagnostics::default())
            .with_witness(format!("mass = {}, deficit = {}", model.total_mass(), model.mass_deficit())),
        identity_report("prob-p-ab", (p_ab - reference).abs(), 1e-10 * (1.0 + reference.abs()), params, Diagnostics::default())
            .with_witness(format!("p_ab = {p_ab}, {what} = {reference}")),
        window.report(),
        lo,
        hi,
    ])
}

/// Worst report of one name across a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub report: InequalityReport,
    pub cases: usize,
    pub failures: usize,
    /// Largest left-hand side seen (the residual, for identity checks).
    #[serde(with = "crate::serde_float")]
    pub max_lhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub check: Check,
    pub seed: u64,
    pub cases: usize,
    pub aggregates: Vec<Aggregate>,
    /// Cases whose evaluation failed, with the error.
    pub errors: Vec<(usize, String)>,
}

impl SuiteSummary {
    pub fn all_hold(&self) -> bool {
        self.errors.is_empty() && self.aggregates.iter().all(|a| a.failures == 0)
    }
}

/// How far inside the bound a report is, in units of its tolerance.
fn margin(r: &InequalityReport) -> f64 {
    if r.slack.is_nan() {
        return f64::NEG_INFINITY;
    }
    (r.slack + r.tol_report) / (1.0 + r.rhs.abs())
}

/// Run `cases` random cases of `check` and keep the worst report per name.
pub fn run_suite(check: Check, seed: u64, cases: usize, cfg: &TruncationConfig, exec: Execution) -> SuiteSummary {
    let results = exec.map_indexed(cases, |i| {
        let case = random_case(check, seed, i);
        run_check(check, &case, None, cfg, Execution::Sequential).map_err(|e| format!("{e} ({})", describe(&case)))
    });
    let mut aggregates: Vec<(Aggregate, usize)> = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let reports = match r {
            Ok(r) => r,
            Err(e) => {
                errors.push((i, e));
                continue;
            }
        };
        for rep in reports {
            let fail = !rep.holds as usize;
            match aggregates.iter_mut().find(|(a, _)| a.report.name == rep.name) {
                Some((agg, worst)) => {
                    agg.cases += 1;
                    agg.failures += fail;
                    agg.max_lhs = agg.max_lhs.max(rep.lhs);
                    if margin(&rep) < margin(&agg.report) {
                        agg.report = rep;
                        *worst = i;
                    }
                }
                None => aggregates.push((
                    Aggregate {
                        max_lhs: rep.lhs,
                        report: rep,
                        cases: 1,
                        failures: fail,
                    },
                    i,
                )),
            }
        }
    }
    let aggregates = aggregates
        .into_iter()
        .map(|(mut agg, i)| {
            let case = random_case(check, seed, i);
            agg.report.witness = Some(format!("worst of {} cases: case {i}: {}", agg.cases, describe(&case)));
            agg
        })
        .collect();
    SuiteSummary {
        check,
        seed,
        cases,
        aggregates,
        errors,
    }
}

/// Report a hand-built value as user-supplied bounds.
pub fn user_params(m: f64, big_m: f64, nn: Option<(f64, f64)>, l: Option<f64>) -> Result<BoundParams> {
    let mut p = BoundParams::new(m, big_m, BoundSource::UserSupplied)?;
    if let Some((n, big_n)) = nn {
        p = p.with_g(n, big_n)?;
    }
    if let Some(l) = l {
        p = p.with_lipschitz(l)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_reproducible_and_independent() {
        for check in Check::ALL {
            assert_eq!(random_case(check, 7, 3), random_case(check, 7, 3));
        }
        assert_ne!(random_case(Check::Gruss, 7, 3), random_case(Check::Gruss, 7, 4));
        assert_ne!(random_case(Check::Gruss, 7, 3), random_case(Check::Gruss, 8, 3));
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
    }

    #[test]
    fn every_suite_holds_on_a_small_run() {
        let cfg = TruncationConfig::default();
        for check in Check::ALL {
            let s = run_suite(check, 11, 12, &cfg, Execution::Parallel);
            assert!(s.all_hold(), "{check}: {s:#?}");
        }
    }

    #[test]
    fn suite_is_deterministic_across_modes() {
        let cfg = TruncationConfig::default();
        let a = run_suite(Check::Korkine, 5, 8, &cfg, Execution::Sequential);
        let b = run_suite(Check::Korkine, 5, 8, &cfg, Execution::Parallel);
        assert_eq!(a, b);
    }
}
