//! Run configuration: command-line flags over an optional `key=value` file
//! (path in `BETA_CALC_CONFIG`) over built-in defaults.

use std::path::Path;
use std::str::FromStr;

use beta_calc::{BetaMap, Execution, Interval, TruncationConfig};
use clap::{Args, ValueEnum};
use serde::Serialize;

pub const CONFIG_ENV: &str = "BETA_CALC_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapName {
    Jackson,
    Hahn,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Every overridable setting; `None` means "not given at this level".
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Beta-map family.
    #[arg(long, global = true, value_enum)]
    pub map: Option<MapName>,
    /// Dilation q in (0, 1).
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Hahn shift omega >= 0.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Expression for a custom map, e.g. "0.5*x + 1".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta_expr: Option<String>,
    /// Lower end of the probe interval for custom maps.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub probe_lo: Option<f64>,
    /// Upper end of the probe interval for custom maps.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub probe_hi: Option<f64>,
    /// Number of validation samples for custom maps.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Function whose expectation `prob` reports.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Holder exponent.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Lower bound of f (grid estimate if absent).
    #[arg(long = "m", global = true, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Upper bound of f.
    #[arg(long = "M", global = true, allow_negative_numbers = true)]
    pub big_m: Option<f64>,
    /// Lower bound of g.
    #[arg(long = "n", global = true, allow_negative_numbers = true)]
    pub n: Option<f64>,
    /// Upper bound of g.
    #[arg(long = "N", global = true, allow_negative_numbers = true)]
    pub big_n: Option<f64>,
    /// Lipschitz constant of u.
    #[arg(long = "L", global = true)]
    pub lipschitz: Option<f64>,
    #[arg(long, global = true)]
    pub term_tol: Option<f64>,
    #[arg(long, global = true)]
    pub gap_tol: Option<f64>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    #[arg(long, global = true)]
    pub consecutive_small: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run a randomized suite with this many cases.
    #[arg(long, global = true)]
    pub cases: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run everything on the calling thread.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub sequential: Option<bool>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, String> {
    T::from_str(value, false).map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl Settings {
    /// Parse `key=value` lines; `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Settings, String> {
        let mut s = Settings::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", no + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let v = value.to_string();
            match key {
                "map" => s.map = Some(parse_enum(key, value)?),
                "q" => s.q = Some(parse_value(key, value)?),
                "omega" => s.omega = Some(parse_value(key, value)?),
                "beta-expr" => s.beta_expr = Some(v),
                "probe-lo" => s.probe_lo = Some(parse_value(key, value)?),
                "probe-hi" => s.probe_hi = Some(parse_value(key, value)?),
                "samples" => s.samples = Some(parse_value(key, value)?),
                "a" => s.a = Some(parse_value(key, value)?),
                "b" => s.b = Some(parse_value(key, value)?),
                "f" => s.f = Some(v),
                "g" => s.g = Some(v),
                "u" => s.u = Some(v),
                "h" => s.h = Some(v),
                "p" => s.p = Some(parse_value(key, value)?),
                "m" => s.m = Some(parse_value(key, value)?),
                "M" => s.big_m = Some(parse_value(key, value)?),
                "n" => s.n = Some(parse_value(key, value)?),
                "N" => s.big_n = Some(parse_value(key, value)?),
                "L" => s.lipschitz = Some(parse_value(key, value)?),
                "term-tol" => s.term_tol = Some(parse_value(key, value)?),
                "gap-tol" => s.gap_tol = Some(parse_value(key, value)?),
                "k-max" => s.k_max = Some(parse_value(key, value)?),
                "consecutive-small" => s.consecutive_small = Some(parse_value(key, value)?),
                "seed" => s.seed = Some(parse_value(key, value)?),
                "cases" => s.cases = Some(parse_value(key, value)?),
                "format" => s.format = Some(parse_enum(key, value)?),
                "sequential" => s.sequential = Some(parse_value(key, value)?),
                other => return Err(format!("line {}: unknown key {other:?}", no + 1)),
            }
        }
        Ok(s)
    }

    pub fn load_file(path: &Path) -> Result<Settings, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse_file(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Fill every unset field from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            map: self.map.or(lower.map),
            q: self.q.or(lower.q),
            omega: self.omega.or(lower.omega),
            beta_expr: self.beta_expr.or(lower.beta_expr),
            probe_lo: self.probe_lo.or(lower.probe_lo),
            probe_hi: self.probe_hi.or(lower.probe_hi),
            samples: self.samples.or(lower.samples),
            a: self.a.or(lower.a),
            b: self.b.or(lower.b),
            f: self.f.or(lower.f),
            g: self.g.or(lower.g),
            u: self.u.or(lower.u),
            h: self.h.or(lower.h),
            p: self.p.or(lower.p),
            m: self.m.or(lower.m),
            big_m: self.big_m.or(lower.big_m),
            n: self.n.or(lower.n),
            big_n: self.big_n.or(lower.big_n),
            lipschitz: self.lipschitz.or(lower.lipschitz),
            term_tol: self.term_tol.or(lower.term_tol),
            gap_tol: self.gap_tol.or(lower.gap_tol),
            k_max: self.k_max.or(lower.k_max),
            consecutive_small: self.consecutive_small.or(lower.consecutive_small),
            seed: self.seed.or(lower.seed),
            cases: self.cases.or(lower.cases),
            format: self.format.or(lower.format),
            sequential: self.sequential.or(lower.sequential),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapConfig {
    pub kind: MapName,
    pub q: Option<f64>,
    pub omega: Option<f64>,
    pub beta_expr: Option<String>,
    pub probe: Option<(f64, f64)>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserBounds {
    pub m: Option<f64>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    pub n: Option<f64>,
    #[serde(rename = "N")]
    pub big_n: Option<f64>,
    #[serde(rename = "L")]
    pub lipschitz: Option<f64>,
}

/// Fully resolved configuration, echoed into every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub map: MapConfig,
    pub a: f64,
    pub b: f64,
    pub f: String,
    pub g: String,
    pub u: String,
    pub h: Option<String>,
    pub p: f64,
    pub bounds: UserBounds,
    pub truncation: TruncationConfig,
    pub seed: u64,
    pub cases: Option<usize>,
    pub format: Format,
    pub execution: Execution,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> RunConfig {
        let defaults = TruncationConfig::default();
        let kind = s.map.unwrap_or(MapName::Jackson);
        let map = MapConfig {
            kind,
            q: match kind {
                MapName::Custom => None,
                _ => Some(s.q.unwrap_or(0.5)),
            },
            omega: match kind {
                MapName::Hahn => Some(s.omega.unwrap_or(0.0)),
                _ => None,
            },
            beta_expr: match kind {
                MapName::Custom => s.beta_expr,
                _ => None,
            },
            probe: match kind {
                MapName::Custom => Some((s.probe_lo.unwrap_or(-10.0), s.probe_hi.unwrap_or(10.0))),
                _ => None,
            },
            samples: match kind {
                MapName::Custom => Some(s.samples.unwrap_or(beta_calc::beta_map::DEFAULT_SAMPLES)),
                _ => None,
            },
        };
        RunConfig {
            map,
            a: s.a.unwrap_or(-1.0),
            b: s.b.unwrap_or(1.0),
            f: s.f.unwrap_or_else(|| "x".into()),
            g: s.g.unwrap_or_else(|| "x".into()),
            u: s.u.unwrap_or_else(|| "x".into()),
            h: s.h,
            p: s.p.unwrap_or(2.0),
            bounds: UserBounds {
                m: s.m,
                big_m: s.big_m,
                n: s.n,
                big_n: s.big_n,
                lipschitz: s.lipschitz,
            },
            truncation: TruncationConfig {
                term_tol: s.term_tol.unwrap_or(defaults.term_tol),
                gap_tol: s.gap_tol.unwrap_or(defaults.gap_tol),
                consecutive_small: s.consecutive_small.unwrap_or(defaults.consecutive_small),
                k_max: s.k_max.unwrap_or(defaults.k_max),
            },
            seed: s.seed.unwrap_or(0),
            cases: s.cases,
            format: s.format.unwrap_or(Format::Text),
            execution: if s.sequential.unwrap_or(false) {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        }
    }

    pub fn build_map(&self) -> beta_calc::Result<BetaMap> {
        let m = &self.map;
        match m.kind {
            MapName::Jackson => BetaMap::jackson(m.q.unwrap_or(0.5)),
            MapName::Hahn => BetaMap::hahn(m.q.unwrap_or(0.5), m.omega.unwrap_or(0.0)),
            MapName::Custom => {
                let text = m.beta_expr.as_deref().ok_or(beta_calc::Error::HypothesisViolated(
                    "a custom map needs --beta-expr".into(),
                ))?;
                let (lo, hi) = m.probe.unwrap_or((-10.0, 10.0));
                BetaMap::custom(beta_calc::parse(text)?, Interval::new(lo, hi)?, m.samples.unwrap_or(1000))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let s = Settings::parse_file("# comment\nmap = hahn\nq=0.3\n\nomega = 1 # trailing\nf = x^2 + 1\nM = 4\nsequential = true\n")
            .unwrap();
        assert_eq!(s.map, Some(MapName::Hahn));
        assert_eq!(s.q, Some(0.3));
        assert_eq!(s.omega, Some(1.0));
        assert_eq!(s.f.as_deref(), Some("x^2 + 1"));
        assert_eq!(s.big_m, Some(4.0));
        assert_eq!(s.sequential, Some(true));
        assert!(Settings::parse_file("bogus = 1").is_err());
        assert!(Settings::parse_file("q = abc").is_err());
        assert!(Settings::parse_file("just text").is_err());
    }

    #[test]
    fn precedence() {
        let flags = Settings {
            q: Some(0.9),
            ..Default::default()
        };
        let file = Settings::parse_file("q = 0.3\na = -2").unwrap();
        let c = RunConfig::resolve(flags.or(file));
        assert_eq!(c.map.q, Some(0.9));
        assert_eq!(c.a, -2.0);
        assert_eq!(c.b, 1.0);
        assert_eq!(c.truncation, TruncationConfig::default());
    }
}
