//! The discrete probability model carried by the beta-grid of `[a, b]`.
//!
//! A point `beta^k(b)` has mass `(beta^k(b) - beta^{k+1}(b)) / (b - a)` and a
//! point `beta^k(a)` has mass `(beta^{k+1}(a) - beta^k(a)) / (b - a)`. The
//! mass of the orbit tails cut off by truncation is reported separately as
//! `mass_deficit` and not assigned to any atom.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beta_map::BetaMap;
use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::inequalities::{BoundParams, BoundSource, Diagnostics, InequalityReport};
use crate::quadrature::{check_contains_s0, TruncationConfig};

const CONVEXITY_SAMPLES: usize = 100;
const CONVEXITY_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct BetaProbModel {
    map: BetaMap,
    a: f64,
    b: f64,
    k_max: usize,
    points_a: Vec<f64>,
    weights_a: Vec<f64>,
    points_b: Vec<f64>,
    weights_b: Vec<f64>,
    mass_deficit: f64,
}

fn branch(map: &BetaMap, x: f64, w: f64, cfg: &TruncationConfig) -> (Vec<f64>, Vec<f64>, f64) {
    let orbit = map.orbit(x, cfg.gap_tol, cfg.k_max);
    let pts = orbit.points;
    let weights: Vec<f64> = pts.windows(2).map(|p| (p[0] - p[1]).abs() / w).collect();
    let last = *pts.last().unwrap_or(&x);
    let mut atoms = pts;
    atoms.truncate(weights.len());
    (atoms, weights, (last - map.s0()).abs() / w)
}

/// Build the model for `a <= s0 <= b`, `a < b`.
pub fn build_model(map: &BetaMap, a: f64, b: f64, cfg: &TruncationConfig) -> Result<BetaProbModel> {
    cfg.validate()?;
    check_contains_s0(map, a, b)?;
    let w = b - a;
    let (points_a, weights_a, da) = branch(map, a, w, cfg);
    let (points_b, weights_b, db) = branch(map, b, w, cfg);
    Ok(BetaProbModel {
        map: map.clone(),
        a,
        b,
        k_max: cfg.k_max,
        points_a,
        weights_a,
        points_b,
        weights_b,
        mass_deficit: da + db,
    })
}

impl BetaProbModel {
    pub fn map(&self) -> &BetaMap {
        &self.map
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Atoms `beta^k(a)` paired with their masses `p_k(a)`.
    pub fn atoms_a(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points_a.iter().copied().zip(self.weights_a.iter().copied())
    }

    /// Atoms `beta^k(b)` paired with their masses `p_k(b)`.
    pub fn atoms_b(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points_b.iter().copied().zip(self.weights_b.iter().copied())
    }

    pub fn weights_a(&self) -> &[f64] {
        &self.weights_a
    }

    pub fn weights_b(&self) -> &[f64] {
        &self.weights_b
    }

    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    /// Sum of all atom masses.
    pub fn total_mass(&self) -> f64 {
        self.weights_a.iter().sum::<f64>() + self.weights_b.iter().sum::<f64>()
    }

    fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms_a().chain(self.atoms_b())
    }

    /// `(min h, max h)` over the atoms and `s0`.
    pub fn range<H: RealFn + ?Sized>(&self, h: &H) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in self.atoms().map(|(t, _)| t).chain(std::iter::once(self.map.s0())) {
            let v = h.value(t);
            if !v.is_finite() {
                return Err(Error::HypothesisViolated(format!("function is not finite at grid point {t}")));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    /// Grid estimates of `m, M, n, N` for the pair `(f, g)`.
    pub fn bounds<F, G>(&self, f: &F, g: &G) -> Result<BoundParams>
    where
        F: RealFn + ?Sized,
        G: RealFn + ?Sized,
    {
        let (m, big_m) = self.range(f)?;
        let (n, big_n) = self.range(g)?;
        BoundParams::new(m, big_m, BoundSource::GridEstimated)?.with_g(n, big_n)
    }
}

/// `E[h(X)]` under the model.
pub fn expected_value<H: RealFn + ?Sized>(model: &BetaProbModel, h: &H) -> f64 {
    model.atoms().map(|(t, p)| h.value(t) * p).sum()
}

fn product_spread(params: &BoundParams) -> Result<f64> {
    match (params.n, params.big_n) {
        (Some(n), Some(big_n)) => Ok(0.25 * (params.big_m - params.m) * (big_n - n)),
        _ => Err(Error::HypothesisViolated("bounds n and N for g are required".into())),
    }
}

fn containment_tol(lower: f64, upper: f64) -> f64 {
    1e-8 * (1.0 + lower.abs().max(upper.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrussWindow {
    pub lower: f64,
    pub upper: f64,
    pub expected_fg: f64,
    pub expected_f: f64,
    pub expected_g: f64,
    pub params: BoundParams,
}

impl GrussWindow {
    pub fn contains_expected(&self) -> bool {
        let tol = containment_tol(self.lower, self.upper);
        self.lower - tol <= self.expected_fg && self.expected_fg <= self.upper + tol
    }

    /// As a bound `|E[fg] - E[f] E[g]| <= (M - m)(N - n) / 4`.
    pub fn report(&self) -> InequalityReport {
        let center = self.expected_f * self.expected_g;
        InequalityReport::new(
            "prob-gruss-window",
            (self.expected_fg - center).abs(),
            0.5 * (self.upper - self.lower),
            self.params,
            Diagnostics::default(),
        )
        .with_witness(format!("window [{}, {}], E[fg] = {}", self.lower, self.upper, self.expected_fg))
    }
}

/// `E[f] E[g] -/+ (M - m)(N - n) / 4`, which must contain `E[fg]`.
pub fn gruss_window<F, G>(model: &BetaProbModel, f: &F, g: &G, params: &BoundParams) -> Result<GrussWindow>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    let spread = product_spread(params)?;
    let ef = expected_value(model, f);
    let eg = expected_value(model, g);
    let fg = |x: f64| f.value(x) * g.value(x);
    let center = ef * eg;
    Ok(GrussWindow {
        lower: center - spread,
        upper: center + spread,
        expected_fg: expected_value(model, &fg),
        expected_f: ef,
        expected_g: eg,
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductSandwich {
    pub lower: f64,
    pub upper: f64,
    pub expected_fg: f64,
    /// `E[X]`.
    pub p_ab: f64,
    pub lambda: f64,
    /// Set when the midpoint-convexity spot check failed for `f` or `g`.
    pub convexity_caveat: bool,
    pub params: BoundParams,
}

impl ProductSandwich {
    pub fn holds(&self) -> bool {
        let tol = containment_tol(self.lower, self.upper);
        self.lower - tol <= self.expected_fg && self.expected_fg <= self.upper + tol
    }

    /// The two sides as bound reports: `lower <= E[fg]` and `E[fg] <= upper`.
    pub fn reports(&self) -> (InequalityReport, InequalityReport) {
        let mut diag = Diagnostics::default();
        if self.convexity_caveat {
            diag = diag.note("midpoint convexity spot check failed");
        }
        let witness = format!("p_ab = {}, lambda = {}", self.p_ab, self.lambda);
        (
            InequalityReport::new("prob-hh-lower", self.lower, self.expected_fg, self.params, diag.clone())
                .with_witness(witness.clone()),
            InequalityReport::new("prob-hh-upper", self.expected_fg, self.upper, self.params, diag).with_witness(witness),
        )
    }
}

fn midpoint_convex<F: RealFn + ?Sized>(f: &F, pts: &[f64], rng: &mut ChaCha8Rng) -> bool {
    if pts.len() < 2 {
        return true;
    }
    (0..CONVEXITY_SAMPLES).all(|_| {
        let x = pts[rng.random_range(0..pts.len())];
        let y = pts[rng.random_range(0..pts.len())];
        let (fx, fy) = (f.value(x), f.value(y));
        let mid = f.value(0.5 * (x + y));
        mid <= 0.5 * (fx + fy) + 1e-12 * (1.0 + fx.abs() + fy.abs())
    })
}

/// Lower and upper bounds for `E[fg]` for convex `f`, `g`:
/// `f(p) g(p) - s <= E[fg] <= [(1-l) f(a) + l f(b)] [(1-l) g(a) + l g(b)] + s`
/// with `p = E[X]`, `l = (p - a)/(b - a)` and `s = (M - m)(N - n)/4`.
pub fn hermite_hadamard_product_bounds<F, G>(model: &BetaProbModel, f: &F, g: &G, params: &BoundParams) -> Result<ProductSandwich>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    let spread = product_spread(params)?;
    let (a, b) = (model.a, model.b);
    let p = expected_value(model, &|x: f64| x);
    let lambda = (p - a) / (b - a);
    let chord = |h: &dyn Fn(f64) -> f64| (1.0 - lambda) * h(a) + lambda * h(b);
    let fv = |x: f64| f.value(x);
    let gv = |x: f64| g.value(x);
    let fg = |x: f64| f.value(x) * g.value(x);

    let pts: Vec<f64> = model.atoms().map(|(t, _)| t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(CONVEXITY_SEED);
    let convex = midpoint_convex(f, &pts, &mut rng) && midpoint_convex(g, &pts, &mut rng);

    Ok(ProductSandwich {
        lower: f.value(p) * g.value(p) - spread,
        upper: chord(&fv) * chord(&gv) + spread,
        expected_fg: expected_value(model, &fg),
        p_ab: p,
        lambda,
        convexity_caveat: !convex,
        params: *params,
    })
}
