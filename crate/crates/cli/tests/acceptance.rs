//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::Command;

use beta_calc::applications::{build_model, expected_value, hermite_hadamard_product_bounds};
use beta_calc::calculus::{ftc_residual, one_sided_limits};
use beta_calc::inequalities::{gruss_check, rs_identity_residual, rs_integral, sharpness_demo, BoundParams};
use beta_calc::quadrature::integral;
use beta_calc::suite::{case_rng, random_interval, random_map, random_poly, run_suite, Check, SuiteSummary};
use beta_calc::{parse, BetaMap, Execution, Expr, TruncationConfig};
use rand::Rng;

const SEED: u64 = 20240917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg() -> TruncationConfig {
    TruncationConfig::default()
}

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

/// `sum_k (1 - q) q^k (q^k)^n`, summed until the terms vanish.
fn geometric_moment(q: f64, n: i32) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    loop {
        let x = q.powi(k);
        let term = (1.0 - q) * x * x.powi(n);
        if term < 1e-300 || k > 100_000 {
            return sum;
        }
        sum += term;
        k += 1;
    }
}

fn suite(check: Check, cases: usize) -> SuiteSummary {
    run_suite(check, SEED, cases, &cfg(), Execution::Parallel)
}

/// Failures, cases and worst lhs of the named report in a suite.
fn tally(s: &SuiteSummary, name: &str) -> (usize, usize, f64) {
    s.aggregates
        .iter()
        .find(|a| a.report.name == name)
        .map(|a| (a.failures, a.cases, a.max_lhs))
        .unwrap_or((usize::MAX, 0, f64::NAN))
}

fn suite_ok(s: &SuiteSummary, name: &str, cases: usize) -> (bool, String) {
    let (fail, n, max_lhs) = tally(s, name);
    (
        fail == 0 && n == cases && s.errors.is_empty(),
        format!("{name}: {fail} failures / {n} cases, {} errors, max lhs {max_lhs:.3e}", s.errors.len()),
    )
}

fn telescoping() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let mut rng = case_rng(SEED, i);
        let map = random_map(&mut rng);
        let (a, b) = random_interval(&mut rng, &map);
        assert!(a < map.s0() && map.s0() < b);
        let r = integral(&map, &e("1"), a, b, &cfg()).unwrap();
        worst = worst.max((r.value - (b - a)).abs());
    }
    outcome(worst <= 1e-10, format!("50 maps, max |int 1 - (b - a)| = {worst:.3e} (tol 1e-10)"))
}

fn jackson_closed_forms() -> Outcome {
    let mut worst_oracle = 0.0f64;
    let mut worst = 0.0f64;
    for q in [0.1, 0.5, 0.9] {
        let map = BetaMap::jackson(q).unwrap();
        for (n, closed) in [(1, 1.0 / (1.0 + q)), (2, 1.0 / (1.0 + q + q * q))] {
            let oracle = geometric_moment(q, n);
            worst_oracle = worst_oracle.max((oracle - closed).abs());
            let f = if n == 1 { e("x") } else { e("x^2") };
            let v = integral(&map, &f, 0.0, 1.0, &cfg()).unwrap().value;
            worst = worst.max((v - oracle).abs()).max((v - closed).abs());
        }
    }
    outcome(
        worst_oracle <= 1e-12 && worst <= 1e-10,
        format!("oracle vs closed form {worst_oracle:.3e}, integral vs both {worst:.3e} (tol 1e-10)"),
    )
}

fn korkine_identity() -> Outcome {
    let s = suite(Check::Korkine, 200);
    let (ok, detail) = suite_ok(&s, "korkine", 200);
    outcome(ok, format!("{detail}, allowed max(1e-10, 1e-7 |T|)"))
}

fn gruss_quarter() -> Outcome {
    let s = suite(Check::Gruss, 500);
    let (ok, detail) = suite_ok(&s, "gruss", 500);
    let sgn = e("sgn(x)");
    let mut worst = 0.0f64;
    for q in [0.3, 0.5, 0.9] {
        let map = BetaMap::jackson(q).unwrap();
        for c in [0.5, 1.0, 3.0] {
            let params = BoundParams::user(-1.0, 1.0).unwrap().with_g(-1.0, 1.0).unwrap();
            let r = gruss_check(&map, &sgn, &sgn, -c, c, &params, &cfg()).unwrap();
            worst = worst.max(r.slack.abs());
        }
    }
    outcome(
        ok && worst <= 1e-9,
        format!("{detail} (tol 1e-8 (1 + rhs)); sgn extremal max |slack| {worst:.3e} (tol 1e-9)"),
    )
}

fn cauchy_schwarz() -> Outcome {
    let s = suite(Check::Cs, 500);
    let (ok1, d1) = suite_ok(&s, "cs", 500);
    let (ok2, d2) = suite_ok(&s, "cs-equality", 500);
    outcome(ok1 && ok2, format!("{d1} (tol 1e-9 scale); {d2} (tol 1e-10)"))
}

fn ftc_ibp() -> Outcome {
    let ftc = suite(Check::Ftc, 200);
    let ibp = suite(Check::Ibp, 200);
    let (ok1, d1) = suite_ok(&ftc, "ftc", 200);
    let (ok2, d2) = suite_ok(&ftc, "ftc-jump", 200);
    let (ok3, d3) = suite_ok(&ibp, "ibp", 200);
    let f = e("x^2 - 3*x + sgn(x)");
    let mut worst_jump = 0.0f64;
    let mut worst_res = 0.0f64;
    for map in [BetaMap::jackson(0.5).unwrap(), BetaMap::jackson(0.9).unwrap()] {
        let lim = one_sided_limits(&map, &f, -1.0, 2.0, &cfg());
        worst_jump = worst_jump.max((lim.jump() - 2.0).abs());
        let r = ftc_residual(&map, &f, -1.0, 2.0, &cfg(), 2.0).unwrap();
        worst_res = worst_res.max(r.residual);
    }
    outcome(
        ok1 && ok2 && ok3 && worst_jump <= 1e-9 && worst_res <= 1e-9,
        format!("{d1}; {d2}; {d3} (tol 1e-8 scale); sgn jump error {worst_jump:.3e}, residual {worst_res:.3e} (tol 1e-9)"),
    )
}

fn rs_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut fails = 0;
    for i in 0..200 {
        let mut rng = case_rng(SEED ^ 0x5151, i);
        let map = random_map(&mut rng);
        let s0 = map.s0();
        let (a, b) = random_interval(&mut rng, &map);
        let f = random_poly(&mut rng, s0, 5);
        let u = random_poly(&mut rng, s0, 5);
        let rs = rs_integral(&map, &f, &u, a, b, &cfg()).unwrap();
        let res = rs_identity_residual(&map, &f, &u, a, b, &cfg()).unwrap();
        let rel = res / (1.0 + rs.value.abs());
        worst = worst.max(rel);
        fails += (rel > 1e-8) as usize;
    }
    outcome(fails == 0, format!("200 pairs, {fails} failures, max residual / scale {worst:.3e} (tol 1e-8)"))
}

fn rs_sharpness() -> Outcome {
    let mut worst = 0.0f64;
    for q in [0.3, 0.5, 0.9] {
        let map = BetaMap::jackson(q).unwrap();
        for c in [1.0, 3.0] {
            let (rs, _) = sharpness_demo(&map, -c, c, &cfg()).unwrap();
            worst = worst.max((rs.lhs - 2.0 * c).abs()).max((rs.rhs - 2.0 * c).abs());
        }
    }
    let s = suite(Check::RsGruss, 500);
    let (ok, detail) = suite_ok(&s, "rs-gruss", 500);
    let v = suite(Check::RsVariants, 200);
    let ok_v = v.all_hold();
    outcome(
        worst <= 1e-8 && ok && ok_v,
        format!(
            "extremal max |lhs - 2c|, |rhs - 2c| = {worst:.3e} (tol 1e-8); {detail} (tol 1e-8 (1 + rhs)); variants hold: {ok_v}"
        ),
    )
}

fn probability() -> Outcome {
    let s = suite(Check::Prob, 500);
    let (ok_mass, d_mass) = suite_ok(&s, "prob-mass", 500);
    let (ok_win, d_win) = suite_ok(&s, "prob-gruss-window", 500);

    let mut rng = case_rng(SEED ^ 0xabcd, 0);
    let mut worst_p = 0.0f64;
    for _ in 0..100 {
        let q = rng.random_range(0.1..0.9);
        let a = rng.random_range(-2.0..=0.0);
        let b = rng.random_range(0.1..2.0);
        let map = BetaMap::jackson(q).unwrap();
        let model = build_model(&map, a, b, &cfg()).unwrap();
        let p = expected_value(&model, &Expr::x());
        worst_p = worst_p.max((p - (a + b) / (1.0 + q)).abs());
    }

    let q = 0.5;
    let map = BetaMap::jackson(q).unwrap();
    let model = build_model(&map, 0.0, 1.0, &cfg()).unwrap();
    let f = e("x^2");
    let params = model.bounds(&f, &f).unwrap();
    let hh = hermite_hadamard_product_bounds(&model, &f, &f, &params).unwrap();
    let p = geometric_moment(q, 1);
    let e4 = geometric_moment(q, 4);
    let lambda = p;
    let lower = p.powi(4) - 0.25;
    let upper = lambda * lambda + 0.25;
    let hh_err = (hh.lower - lower).abs().max((hh.upper - upper).abs()).max((hh.expected_fg - e4).abs());
    let hh_ok = hh.holds() && hh_err <= 1e-10 && lower <= e4 && e4 <= upper;

    outcome(
        ok_mass && ok_win && worst_p <= 1e-10 && hh_ok,
        format!(
            "{d_mass} (tol 1e-12); {d_win}; max |p_ab - (a+b)/(1+q)| {worst_p:.3e} (tol 1e-10); \
             sandwich {lower:.4} <= {e4:.4} <= {upper:.4}, max error vs oracle {hh_err:.3e}"
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_beta-calc");
    let runs = [
        vec!["check", "gruss", "--seed", "11", "--cases", "60", "--format", "json"],
        vec!["check", "rs-variants", "--seed", "5", "--cases", "40", "--format", "json"],
        vec!["prob", "--map", "hahn", "--q", "0.5", "--omega", "1", "--a", "0", "--b", "4", "--f", "x^2", "--g", "x", "--format", "json"],
    ];
    let mut same = true;
    let mut bytes = 0;
    for args in &runs {
        let out: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                Command::new(bin)
                    .args(args)
                    .env_remove("BETA_CALC_CONFIG")
                    .output()
                    .expect("run beta-calc")
                    .stdout
            })
            .collect();
        same &= !out[0].is_empty() && out[0] == out[1];
        bytes += out[0].len();
    }
    outcome(same, format!("{} command pairs, {bytes} bytes compared", runs.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("telescoping", telescoping),
        ("jackson closed forms", jackson_closed_forms),
        ("korkine identity", korkine_identity),
        ("gruss 1/4 bound", gruss_quarter),
        ("cauchy-schwarz", cauchy_schwarz),
        ("ftc and ibp", ftc_ibp),
        ("rs identity", rs_identity),
        ("rs gruss 1/2 bound and sharpness", rs_sharpness),
        ("probability model", probability),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
