use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use beta_calc::applications::{build_model, expected_value};
use beta_calc::calculus::{beta_derivative, ftc_residual, one_sided_limits, DerivativeOptions};
use beta_calc::inequalities::{
    grid_bounds, rs_abs_bound_check, rs_gruss_check, rs_gruss_variant_check, rs_identity_residual, rs_integral, BoundParams,
    Diagnostics, InequalityReport, RsVariant,
};
use beta_calc::quadrature::{integral, integral_trace};
use beta_calc::suite::{identity_report, prob_reports, run_check, run_suite, user_params, Case, Check};
use beta_calc::{BetaMap, Error, Expr};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{render, report_line, report_table, text_reports, Document, Skipped, Table};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TailDivergent(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, CliError>;

fn parse_expr(flag: &str, text: &str) -> Result<Expr, CliError> {
    beta_calc::parse(text).map_err(|e| CliError::input(format!("cannot parse --{flag} {text:?}: {e}")))
}

fn setup(cfg: &RunConfig) -> Result<BetaMap, CliError> {
    cfg.truncation.validate()?;
    Ok(cfg.build_map()?)
}

fn doc<'a>(command: &'a str, cfg: &'a RunConfig) -> Document<'a> {
    Document {
        tool_version: crate::output::TOOL_VERSION,
        command,
        config_echo: cfg,
        reports: Vec::new(),
        result: None,
        summary: None,
        skipped: Vec::new(),
    }
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("results serialize")
}

/// 1 on any violated bound, else 3 on any unconverged series, else 0.
fn exit_code(reports: &[InequalityReport]) -> u8 {
    let violated: Vec<_> = reports.iter().filter(|r| !r.holds).collect();
    if !violated.is_empty() {
        for r in violated {
            eprintln!("violated: {}", report_line(r));
        }
        return 1;
    }
    if reports.iter().any(|r| !r.diagnostics.converged || r.diagnostics.nan_encountered) {
        eprintln!("warning: some series did not converge");
        return 3;
    }
    0
}

pub fn integrate(cfg: &RunConfig, trace: Option<&Path>) -> CmdResult {
    let map = setup(cfg)?;
    let f = parse_expr("f", &cfg.f)?;
    let r = match trace {
        Some(path) => {
            let (r, rows) = integral_trace(&map, &f, cfg.a, cfg.b, &cfg.truncation)?;
            let mut w = csv::Writer::from_path(path).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            for row in &rows {
                w.serialize(row)
                    .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            }
            w.flush()
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            r
        }
        None => integral(&map, &f, cfg.a, cfg.b, &cfg.truncation)?,
    };
    let mut d = doc("integrate", cfg);
    d.result = Some(value(&r));
    let text = format!(
        "value = {}\nterms = {} (from a) + {} (from b)\ntail estimate = {:e}\nconverged = {}\n",
        r.value, r.terms_a, r.terms_b, r.tail_estimate, r.converged
    );
    let mut table = Table::new(&["value", "terms_a", "terms_b", "tail_estimate", "converged", "nan_encountered"]);
    table.push(vec![
        r.value.to_string(),
        r.terms_a.to_string(),
        r.terms_b.to_string(),
        r.tail_estimate.to_string(),
        r.converged.to_string(),
        r.nan_encountered.to_string(),
    ]);
    print!("{}", render(cfg.format, &d, &text, &table));
    if r.converged && !r.nan_encountered {
        Ok(0)
    } else {
        eprintln!("warning: the series did not converge within k_max = {}", cfg.truncation.k_max);
        Ok(3)
    }
}

pub fn derivative(cfg: &RunConfig, t: f64, s0_derivative: Option<f64>, fd_step: Option<f64>) -> CmdResult {
    let map = setup(cfg)?;
    let f = parse_expr("f", &cfg.f)?;
    let opts = DerivativeOptions {
        s0_derivative,
        fd_step: fd_step.unwrap_or(DerivativeOptions::default().fd_step),
    };
    opts.validate()?;
    if !map.domain().contains(t) {
        return Err(CliError::input(format!("t = {t} is outside the map domain")));
    }
    let v = beta_derivative(&map, &f, t, &opts);
    if !v.is_finite() {
        return Err(CliError::input(format!("the derivative of {f} at t = {t} is not finite")));
    }
    let beta_t = map.apply(t);
    let mut d = doc("derivative", cfg);
    d.result = Some(json!({ "t": t, "beta_t": beta_t, "value": v, "options": value(&opts) }));
    let text = format!("beta(t) = {beta_t}\nderivative = {v}\n");
    let mut table = Table::new(&["t", "beta_t", "value"]);
    table.push(vec![t.to_string(), beta_t.to_string(), v.to_string()]);
    print!("{}", render(cfg.format, &d, &text, &table));
    Ok(0)
}

/// User bounds: `m`, `M` make the whole set user-supplied; `n`, `N`, `L`
/// alone override grid estimates.
fn fixed_params(cfg: &RunConfig, map: &BetaMap, f: &Expr, g: &Expr) -> Result<Option<BoundParams>, CliError> {
    let u = &cfg.bounds;
    let nn = match (u.n, u.big_n) {
        (Some(n), Some(big_n)) => Some((n, big_n)),
        (None, None) => None,
        _ => return Err(CliError::input("give both --n and --N")),
    };
    match (u.m, u.big_m) {
        (Some(m), Some(big_m)) => Ok(Some(user_params(m, big_m, nn, u.lipschitz)?)),
        (None, None) => {
            if nn.is_none() && u.lipschitz.is_none() {
                return Ok(None);
            }
            let mut p = BoundParams::estimate(map, f, g, cfg.a, cfg.b, &cfg.truncation)?;
            if let Some((n, big_n)) = nn {
                p = p.with_g(n, big_n)?;
            }
            if let Some(l) = u.lipschitz {
                p = p.with_lipschitz(l)?;
            }
            Ok(Some(p))
        }
        _ => Err(CliError::input("give both --m and --M")),
    }
}

pub fn check(cfg: &RunConfig, suite: &str, variant: Option<&str>) -> CmdResult {
    let check = Check::from_str(suite).map_err(CliError::input)?;
    let variant = match variant {
        Some(_) if check != Check::RsVariants => return Err(CliError::input("--variant applies to rs-variants only")),
        Some(v) => Some(RsVariant::from_str(v).map_err(CliError::input)?),
        None => None,
    };
    let map = setup(cfg)?;
    match cfg.cases {
        Some(n) => check_suite(cfg, check, variant, n),
        None => check_single(cfg, &map, check, variant),
    }
}

fn check_suite(cfg: &RunConfig, check: Check, variant: Option<RsVariant>, cases: usize) -> CmdResult {
    let mut s = run_suite(check, cfg.seed, cases, &cfg.truncation, cfg.execution);
    if let Some(v) = variant {
        let name = format!("rs-{v}");
        s.aggregates.retain(|a| a.report.name == name);
    }
    let mut d = doc("check", cfg);
    d.reports = s.aggregates.iter().map(|a| a.report.clone()).collect();
    let per_name: Vec<_> = s
        .aggregates
        .iter()
        .map(|a| json!({ "name": a.report.name, "cases": a.cases, "failures": a.failures, "max_lhs": a.max_lhs }))
        .collect();
    let errors: Vec<_> = s.errors.iter().map(|(i, e)| json!({ "case": i, "error": e })).collect();
    d.summary = Some(json!({
        "check": check.name(),
        "seed": s.seed,
        "cases": s.cases,
        "checks": per_name,
        "errors": errors,
    }));
    let mut text = format!("{} randomized suite: seed {}, {} cases\n", check, s.seed, s.cases);
    for a in &s.aggregates {
        let _ = writeln!(text, "{:<20} failures {}/{}  max lhs = {:e}", a.report.name, a.failures, a.cases, a.max_lhs);
    }
    text.push_str("worst cases:\n");
    text.push_str(&text_reports(&d.reports));
    for (i, e) in &s.errors {
        let _ = writeln!(text, "case {i} failed: {e}");
    }
    let table = report_table(&d.reports);
    print!("{}", render(cfg.format, &d, &text, &table));
    for (i, e) in &s.errors {
        eprintln!("error: case {i}: {e}");
    }
    let code = exit_code(&d.reports);
    if code == 0 && !s.errors.is_empty() {
        return Ok(1);
    }
    Ok(code)
}

fn check_single(cfg: &RunConfig, map: &BetaMap, check: Check, variant: Option<RsVariant>) -> CmdResult {
    let f = parse_expr("f", &cfg.f)?;
    let g = parse_expr("g", &cfg.g)?;
    let u = parse_expr("u", &cfg.u)?;
    let (a, b, tc) = (cfg.a, cfg.b, &cfg.truncation);
    let fixed = fixed_params(cfg, map, &f, &g)?;
    let mut skipped = Vec::new();
    let reports = match check {
        Check::RsGruss => {
            let pf = match fixed {
                Some(p) => p,
                None => grid_bounds(map, &f, a, b, tc, false)?,
            };
            let boundary = a == map.s0() || b == map.s0();
            let rs = rs_integral(map, &f, &u, a, b, tc)?;
            let res = rs_identity_residual(map, &f, &u, a, b, tc)?;
            vec![
                rs_gruss_check(map, &f, &u, a, b, &pf, tc, boundary)?,
                rs_abs_bound_check(map, &f, &u, a, b, pf.lipschitz, tc)?,
                identity_report(
                    "rs-identity",
                    res,
                    1e-8 * (1.0 + rs.value.abs()),
                    pf,
                    Diagnostics::from_integral(&rs.diagnostics),
                ),
            ]
        }
        Check::RsVariants => {
            let variants = match variant {
                Some(v) => vec![v],
                None => RsVariant::ALL.to_vec(),
            };
            let mut out = Vec::new();
            for v in variants {
                let w = if v == RsVariant::NonnegWeight { &g } else { &u };
                match rs_gruss_variant_check(map, &f, w, a, b, tc, v, fixed.as_ref()) {
                    Ok(r) => out.push(r),
                    Err(Error::HypothesisViolated(reason)) if variant.is_none() => {
                        eprintln!("skipped rs-{v}: {reason}");
                        skipped.push(Skipped {
                            name: format!("rs-{v}"),
                            reason,
                        });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            out
        }
        Check::Ftc => {
            let lim = one_sided_limits(map, &f, a, b, tc);
            let r = ftc_residual(map, &f, a, b, tc, lim.jump())?;
            let params = match fixed {
                Some(p) => p,
                None => grid_bounds(map, &f, a, b, tc, lim.jump() != 0.0)?,
            };
            vec![identity_report(
                "ftc",
                r.residual,
                1e-8 * r.scale,
                params,
                Diagnostics::from_integral(&r.diagnostics).note(format!("jump = {}", lim.jump())),
            )]
        }
        Check::Prob => prob_reports(map, &f, &g, a, b, fixed.as_ref(), tc)?,
        _ => {
            let case = Case {
                map: map.clone(),
                a,
                b,
                f,
                g,
                u,
                p: cfg.p,
            };
            run_check(check, &case, fixed.as_ref(), tc, cfg.execution)?
        }
    };
    let mut d = doc("check", cfg);
    d.reports = reports;
    d.skipped = skipped;
    let mut text = text_reports(&d.reports);
    for s in &d.skipped {
        let _ = writeln!(text, "{:<20} skipped: {}", s.name, s.reason);
    }
    let table = report_table(&d.reports);
    print!("{}", render(cfg.format, &d, &text, &table));
    Ok(exit_code(&d.reports))
}

#[derive(Serialize)]
struct Atom {
    point: f64,
    weight: f64,
}

pub fn prob(cfg: &RunConfig) -> CmdResult {
    let map = setup(cfg)?;
    let f = parse_expr("f", &cfg.f)?;
    let g = parse_expr("g", &cfg.g)?;
    let h = cfg.h.as_deref().map(|h| parse_expr("h", h)).transpose()?;
    let (a, b, tc) = (cfg.a, cfg.b, &cfg.truncation);
    let model = build_model(&map, a, b, tc)?;
    let fixed = fixed_params(cfg, &map, &f, &g)?;
    let reports = prob_reports(&map, &f, &g, a, b, fixed.as_ref(), tc)?;
    let p_ab = expected_value(&model, &Expr::x());
    let expected_h = h.as_ref().map(|h| expected_value(&model, h));
    let atoms = |it: &mut dyn Iterator<Item = (f64, f64)>| it.map(|(point, weight)| Atom { point, weight }).collect::<Vec<_>>();
    let atoms_a = atoms(&mut model.atoms_a());
    let atoms_b = atoms(&mut model.atoms_b());

    let mut d = doc("prob", cfg);
    d.result = Some(json!({
        "s0": map.s0(),
        "total_mass": model.total_mass(),
        "mass_deficit": model.mass_deficit(),
        "p_ab": p_ab,
        "expected_h": expected_h,
        "atoms_a": atoms_a,
        "atoms_b": atoms_b,
    }));
    d.reports = reports;

    let mut text = format!(
        "s0 = {}\ntotal mass = {}\nmass deficit = {:e}\np_ab = E[X] = {}\n",
        map.s0(),
        model.total_mass(),
        model.mass_deficit(),
        p_ab
    );
    if let (Some(h), Some(e)) = (&h, expected_h) {
        let _ = writeln!(text, "E[{h}] = {e}");
    }
    for (label, list) in [("a", &atoms_a), ("b", &atoms_b)] {
        let _ = writeln!(text, "atoms from {label} ({} total):", list.len());
        for (k, atom) in list.iter().take(10).enumerate() {
            let _ = writeln!(text, "  p_{k}({label}) = {}  at x = {}", atom.weight, atom.point);
        }
        if list.len() > 10 {
            text.push_str("  ...\n");
        }
    }
    text.push_str(&text_reports(&d.reports));
    let mut table = report_table(&d.reports);
    table.header.insert(0, "kind".into());
    for row in &mut table.rows {
        row.insert(0, "report".into());
    }
    let width = table.header.len();
    for (label, list) in [("atom_a", &atoms_a), ("atom_b", &atoms_b)] {
        for (k, atom) in list.iter().enumerate() {
            let mut row = vec![label.to_string(), k.to_string(), atom.point.to_string(), atom.weight.to_string()];
            row.resize(width, String::new());
            table.push(row);
        }
    }
    print!("{}", render(cfg.format, &d, &text, &table));
    if reports_note_caveat(&d.reports) {
        eprintln!("warning: f or g failed the midpoint convexity spot check; the product bounds assume convexity");
    }
    Ok(exit_code(&d.reports))
}

fn reports_note_caveat(reports: &[InequalityReport]) -> bool {
    reports
        .iter()
        .any(|r| r.diagnostics.notes.iter().any(|n| n.contains("convexity")))
}
