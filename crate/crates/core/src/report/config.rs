//! Run configuration: flat `key = value` lines with `[section]` headers.
//!
//! ```text
//! metric = poincare_disc
//! suites = curvature, identities
//! points = 25
//! seed = 42
//!
//! [metric]
//! r = 1
//!
//! [tolerances]
//! curvature = 1e-6
//!
//! [quad]
//! mode = monte_carlo
//! samples = 100000
//! seed = 7
//!
//! [condition12]
//! expect = nonzero
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::catalog::MetricRecipe;
use crate::error::{FinslerError, Result};
use crate::exec::Execution;
use crate::fiber::{FiberQuadrature, QuadMode};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "FINSLERLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Identities,
    Curvature,
    Condition12,
    Decomposition,
    Schwarz,
    Kobayashi,
    Lemma9,
    Induced,
    Prop2,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Identities,
        Suite::Curvature,
        Suite::Condition12,
        Suite::Decomposition,
        Suite::Schwarz,
        Suite::Kobayashi,
        Suite::Lemma9,
        Suite::Induced,
        Suite::Prop2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Curvature => "curvature",
            Suite::Condition12 => "condition12",
            Suite::Decomposition => "decomposition",
            Suite::Schwarz => "schwarz",
            Suite::Kobayashi => "kobayashi",
            Suite::Lemma9 => "lemma9",
            Suite::Induced => "induced",
            Suite::Prop2 => "prop2",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::Identities => 1e-10,
            Suite::Curvature => 1e-6,
            Suite::Condition12 => 1e-8,
            Suite::Decomposition => 1e-8,
            Suite::Schwarz => 1e-6,
            Suite::Kobayashi => 1e-6,
            Suite::Lemma9 => 1e-8,
            // measured in standard errors
            Suite::Induced => 3.0,
            Suite::Prop2 => 1e-6,
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Suite::Identities => "homogeneity identities of G and its v-derivatives",
            Suite::Curvature => "holomorphic sectional curvature against known values and the full tensor",
            Suite::Condition12 => "horizontal antiholomorphic derivative of the vertical tensor",
            Suite::Decomposition => "curvature decomposition through the complex Hessian of log G",
            Suite::Schwarz => "Schwarz ratio for seeded self-maps of the disc",
            Suite::Kobayashi => "two-sided Kobayashi metric estimates",
            Suite::Lemma9 => "chart determinant identity and line-bundle weight",
            Suite::Induced => "induced L2 metric on the cotangent bundle",
            Suite::Prop2 => "scalar curvatures of the rescaled induced metric against the fiber average of K",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = FinslerError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| FinslerError::Config(format!("unknown suite '{}'", s.trim())))
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub metric: MetricRecipe,
    pub suites: Vec<Suite>,
    pub points: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub quad: FiberQuadrature,
    /// Per-suite parameter sections, verbatim.
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Data-parallel evaluation inside suites.
    pub exec: Execution,
    /// Run suites concurrently.
    pub parallel_suites: bool,
}

fn parse_num<T: FromStr>(what: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| FinslerError::Config(format!("{what}: cannot parse '{}'", s.trim())))
}

impl RunConfig {
    pub fn new(metric: MetricRecipe, suites: Vec<Suite>) -> Self {
        RunConfig {
            metric,
            suites,
            points: 10,
            seed: 42,
            tolerances: BTreeMap::new(),
            quad: FiberQuadrature::monte_carlo(100_000, 7),
            sections: BTreeMap::new(),
            exec: Execution::default(),
            parallel_suites: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| FinslerError::Config(e.to_string()))?;
        let mut metric_name = None;
        let mut suites = Vec::new();
        let mut cfg = RunConfig::new(MetricRecipe::new("euclidean", &[]), Vec::new());
        let mut metric_params = BTreeMap::new();
        let mut quad = BTreeMap::new();
        for (section, props) in ini.iter() {
            let entries: Vec<(String, String)> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            match section {
                None => {
                    for (k, v) in entries {
                        match k.as_str() {
                            "metric" => metric_name = Some(v.trim().to_string()),
                            "suites" => {
                                suites = v
                                    .split(',')
                                    .filter(|s| !s.trim().is_empty())
                                    .map(Suite::from_str)
                                    .collect::<Result<_>>()?
                            }
                            "points" => cfg.points = parse_num("points", &v)?,
                            "seed" => cfg.seed = parse_num("seed", &v)?,
                            "exec" => {
                                cfg.exec = match v.trim() {
                                    "parallel" => Execution::Parallel,
                                    "sequential" => Execution::Sequential,
                                    other => return Err(FinslerError::Config(format!("unknown exec mode '{other}'"))),
                                }
                            }
                            "parallel_suites" => cfg.parallel_suites = parse_num("parallel_suites", &v)?,
                            other => return Err(FinslerError::Config(format!("unknown key '{other}'"))),
                        }
                    }
                }
                Some("metric") => metric_params.extend(entries),
                Some("quad") => quad.extend(entries),
                Some("tolerances") => {
                    for (k, v) in entries {
                        Suite::from_str(&k)?;
                        let t: f64 = parse_num(&format!("tolerance {k}"), &v)?;
                        if !(t > 0.0) {
                            return Err(FinslerError::Config(format!("tolerance {k} must be positive")));
                        }
                        cfg.tolerances.insert(k, t);
                    }
                }
                Some(s) => {
                    Suite::from_str(s)?;
                    cfg.sections.entry(s.to_string()).or_default().extend(entries);
                }
            }
        }
        let name = metric_name.ok_or_else(|| FinslerError::Config("missing 'metric'".into()))?;
        cfg.metric = MetricRecipe {
            name,
            params: metric_params,
        };
        cfg.metric.build()?;
        if suites.is_empty() {
            return Err(FinslerError::Config("no suites requested".into()));
        }
        cfg.suites = suites;
        if cfg.points == 0 {
            return Err(FinslerError::Config("points must be at least 1".into()));
        }
        for (k, v) in quad {
            match k.as_str() {
                "mode" => {
                    cfg.quad.mode = match v.trim() {
                        "monte_carlo" => QuadMode::MonteCarlo,
                        "chart_grid" => QuadMode::ChartGrid,
                        other => return Err(FinslerError::Config(format!("unknown quadrature mode '{other}'"))),
                    }
                }
                "samples" => cfg.quad.samples = parse_num("quad.samples", &v)?,
                "seed" => cfg.quad.seed = parse_num("quad.seed", &v)?,
                "chart" => cfg.quad.chart = Some(parse_num("quad.chart", &v)?),
                other => return Err(FinslerError::Config(format!("unknown quad key '{other}'"))),
            }
        }
        if cfg.quad.samples == 0 {
            return Err(FinslerError::Config("quad.samples must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FinslerError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Applies `FINSLERLAB_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = parse_num(SEED_ENV, &s)?;
        }
        Ok(())
    }

    pub fn tolerance(&self, suite: Suite) -> f64 {
        self.tolerances
            .get(suite.name())
            .copied()
            .unwrap_or_else(|| suite.default_tolerance())
    }

    pub fn param(&self, suite: Suite, key: &str) -> Option<&str> {
        self.sections.get(suite.name()).and_then(|s| s.get(key)).map(String::as_str)
    }

    pub fn param_num<T: FromStr>(&self, suite: Suite, key: &str, default: T) -> Result<T> {
        match self.param(suite, key) {
            None => Ok(default),
            Some(s) => parse_num(&format!("{suite}.{key}"), s),
        }
    }

    /// Inputs that determine the run, for the report header.
    pub fn echo(&self) -> serde_json::Value {
        let mut sections = serde_json::Map::new();
        for (s, kv) in &self.sections {
            sections.insert(s.clone(), serde_json::to_value(kv).unwrap_or_default());
        }
        serde_json::json!({
            "metric": self.metric.name,
            "metric_params": self.metric.params,
            "suites": self.suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "points": self.points,
            "seed": self.seed,
            "tolerances": self.suites.iter().map(|&s| (s.name().to_string(), format!("{:e}", self.tolerance(s)))).collect::<BTreeMap<_, _>>(),
            "quad": {
                "mode": match self.quad.mode { QuadMode::MonteCarlo => "monte_carlo", QuadMode::ChartGrid => "chart_grid" },
                "samples": self.quad.samples,
                "seed": self.quad.seed,
                "chart": self.quad.chart,
            },
            "sections": sections,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = RunConfig::parse(
            "metric = poincare_disc\nsuites = curvature, identities\npoints = 5\n[metric]\nr = 2\n[tolerances]\ncurvature = 1e-7\n[quad]\nsamples = 1000\n[condition12]\nexpect = nonzero\n",
        )
        .unwrap();
        assert_eq!(cfg.suites, vec![Suite::Curvature, Suite::Identities]);
        assert_eq!(cfg.points, 5);
        assert_eq!(cfg.metric.params["r"], "2");
        assert_eq!(cfg.tolerance(Suite::Curvature), 1e-7);
        assert_eq!(cfg.tolerance(Suite::Identities), 1e-10);
        assert_eq!(cfg.quad.samples, 1000);
        assert_eq!(cfg.param(Suite::Condition12, "expect"), Some("nonzero"));
    }

    #[test]
    fn rejects_unknown_names() {
        for text in [
            "metric = nope\nsuites = curvature\n",
            "metric = euclidean\nsuites = bogus\n",
            "metric = euclidean\nsuites = curvature\n[metric]\nq = 1\n",
            "metric = euclidean\nsuites = curvature\n[tolerances]\ncurvature = -1\n",
            "suites = curvature\n",
            "metric = euclidean\nsuites = curvature\n[nonsense]\na = 1\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(FinslerError::Config(_))), "{text}");
        }
    }
}
