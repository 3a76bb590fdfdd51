//! Suite runners. Each suite produces per-check records; the worst one
//! decides the status.

use std::time::Instant;

use num_complex::Complex64;

use super::config::{RunConfig, Suite};
use super::parse_complex_csv;
use crate::catalog::{Domain, HermitianField, MetricSpec};
use crate::error::{FinslerError, Result};
use crate::exec::Execution;
use crate::fiber::{self, FiberQuadrature};
use crate::finsler;
use crate::linalg;
use crate::rng;
use crate::schwarz::{self, Grid, KobayashiOptions};

pub type Point = (Vec<Complex64>, Vec<Complex64>);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// Whether the worst residual must stay below the tolerance or reach it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Small,
    Nonzero,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub point: Option<Point>,
    pub values: Vec<(String, f64)>,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, point: Option<Point>) -> Self {
        Check {
            name: name.into(),
            residual,
            point,
            values: Vec::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.values.push((key.to_string(), value));
        self
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    pub expect: Expect,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub worst_point: Option<Point>,
    pub details: Vec<Check>,
    pub wall_time: f64,
    pub reason: Option<String>,
}

impl SuiteReport {
    fn skipped(suite: Suite, tolerance: f64, reason: String) -> Self {
        SuiteReport {
            suite,
            status: Status::Skipped,
            expect: Expect::Small,
            worst_residual: f64::NAN,
            tolerance,
            worst_point: None,
            details: Vec::new(),
            wall_time: 0.0,
            reason: Some(reason),
        }
    }

    fn failed(suite: Suite, tolerance: f64, expect: Expect, err: &FinslerError) -> Self {
        SuiteReport {
            suite,
            status: Status::Fail,
            expect,
            worst_residual: f64::NAN,
            tolerance,
            worst_point: None,
            details: Vec::new(),
            wall_time: 0.0,
            reason: Some(err.to_string()),
        }
    }

    fn from_checks(suite: Suite, tolerance: f64, expect: Expect, details: Vec<Check>) -> Self {
        let worst = details.iter().reduce(|a, b| {
            let worse = b.residual.is_nan() || (!a.residual.is_nan() && b.residual > a.residual);
            if worse {
                b
            } else {
                a
            }
        });
        let worst_residual = worst.map_or(f64::NAN, |c| c.residual);
        let worst_point = worst.and_then(|c| c.point.clone());
        let ok = match expect {
            Expect::Small => worst_residual <= tolerance,
            Expect::Nonzero => worst_residual >= tolerance,
        };
        SuiteReport {
            suite,
            status: if ok { Status::Pass } else { Status::Fail },
            expect,
            worst_residual,
            tolerance,
            worst_point,
            details,
            wall_time: 0.0,
            reason: None,
        }
    }
}

enum Outcome {
    Checks(Vec<Check>),
    Skip(String),
}

fn points(cfg: &RunConfig, metric: &MetricSpec) -> Vec<Point> {
    (0..cfg.points)
        .map(|i| rng::sample_point(metric, cfg.seed, i as u64))
        .collect()
}

fn per_point<F>(cfg: &RunConfig, metric: &MetricSpec, f: F) -> Result<Vec<Check>>
where
    F: Fn(usize, &Point) -> Result<Check> + Sync + Send,
{
    let pts = points(cfg, metric);
    cfg.exec.map(pts.len(), |i| f(i, &pts[i])).into_iter().collect()
}

fn identities(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let lambda = Complex64::new(0.8, -1.3);
    per_point(cfg, metric, |i, (z, v)| {
        let res = finsler::homogeneity_residuals(metric, z, v, lambda)?;
        let worst = res.iter().fold(0.0f64, |a, r| a.max(r.1));
        let mut c = Check::new(format!("point {i}"), worst, Some((z.clone(), v.clone())));
        for (name, r) in res {
            c = c.with(name, r);
        }
        Ok(c)
    })
    .map(Outcome::Checks)
}

fn curvature(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let tensor: bool = cfg.param_num(Suite::Curvature, "tensor", metric.dim == 1)?;
    per_point(cfg, metric, |i, (z, v)| {
        let k = finsler::hsc(metric, z, v)?;
        let mut residual = 0.0f64;
        let mut c = Check::new(format!("point {i}"), 0.0, Some((z.clone(), v.clone()))).with("K", k);
        if let Some(known) = metric.known_hsc {
            residual = residual.max((k - known).abs());
            c = c.with("expected", known);
        } else if let Some((lo, hi)) = metric.hsc_range {
            residual = residual.max(lo - k).max(k - hi);
        }
        if tensor {
            let n = metric.dim;
            let r = finsler::curvature_tensor(metric, z, v)?;
            let g = metric.value(z, v);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    for p in 0..n {
                        for q in 0..n {
                            acc += r[((a * n + b) * n + p) * n + q] * v[a] * v[b].conj() * v[p] * v[q].conj();
                        }
                    }
                }
            }
            let kt = 2.0 * acc.re / (g * g);
            residual = residual.max((kt - k).abs() / (1.0 + k.abs()));
            c = c.with("K_tensor", kt);
        }
        c.residual = residual;
        Ok(c)
    })
    .map(Outcome::Checks)
}

fn condition12(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    per_point(cfg, metric, |i, (z, v)| {
        let cd = finsler::curvature(metric, z, v)?;
        let r = linalg::max_abs(&cd.cond12);
        let forms = linalg::max_abs(&(&cd.cond12 - &cd.cond12_expanded));
        Ok(Check::new(format!("point {i}"), r, Some((z.clone(), v.clone())))
            .with("connection_form", r)
            .with("expanded_form", linalg::max_abs(&cd.cond12_expanded))
            .with("form_difference", forms))
    })
    .map(Outcome::Checks)
}

fn decomposition(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    per_point(cfg, metric, |i, (z, v)| {
        let (lhs, rhs) = finsler::decomposition_sides(metric, z, v)?;
        let r = finsler::decomposition_residual(metric, z, v)?;
        Ok(Check::new(format!("point {i}"), r, Some((z.clone(), v.clone())))
            .with("hessian_side", lhs)
            .with("curvature_side", rhs))
    })
    .map(Outcome::Checks)
}

fn schwarz_suite(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let unit_disc = metric.dim == 1 && metric.domain == (Domain::Polydisc { radius: 1.0 });
    let k = match metric.known_hsc {
        Some(k) if k < 0.0 && unit_disc => k,
        _ => {
            return Ok(Outcome::Skip(format!(
                "{} is not a negatively curved metric on the unit disc",
                metric.name
            )))
        }
    };
    let maps: usize = cfg.param_num(Suite::Schwarz, "maps", cfg.points)?;
    let autos: usize = cfg.param_num(Suite::Schwarz, "automorphisms", 5)?;
    let grid = Grid {
        radial: cfg.param_num(Suite::Schwarz, "radial", Grid::default().radial)?,
        angular: cfg.param_num(Suite::Schwarz, "angular", Grid::default().angular)?,
    };
    let tol = cfg.tolerance(Suite::Schwarz);
    let mut checks = Vec::new();
    for i in 0..maps {
        let f = schwarz::random_self_map(cfg.seed, i as u64);
        let r = schwarz::schwarz_check(&f, metric, metric, k, k, grid, tol, cfg.exec)?;
        let point = (vec![r.argmax], vec![Complex64::new(1.0, 0.0)]);
        checks.push(
            Check::new(format!("map {i}"), (r.sup_ratio - r.bound).max(0.0), Some(point))
                .with("sup_ratio", r.sup_ratio)
                .with("bound", r.bound),
        );
    }
    for i in 0..autos {
        let f = schwarz::random_automorphism(cfg.seed ^ 0xa5a5, i as u64);
        let r = schwarz::schwarz_check(&f, metric, metric, k, k, grid, tol, cfg.exec)?;
        let point = (vec![r.argmax], vec![Complex64::new(1.0, 0.0)]);
        checks.push(
            Check::new(format!("automorphism {i}"), (r.sup_ratio - 1.0).abs(), Some(point))
                .with("sup_ratio", r.sup_ratio),
        );
    }
    Ok(Outcome::Checks(checks))
}

fn kobayashi(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    if metric.domain == Domain::Whole {
        return Ok(Outcome::Skip(format!("{} lives on all of C^n", metric.name)));
    }
    let k2 = match (metric.known_hsc, metric.hsc_range) {
        (Some(k), _) if k < 0.0 => Some(k),
        (_, Some((_, hi))) if hi < 0.0 => Some(hi),
        _ => None,
    };
    let opts = KobayashiOptions {
        seed: cfg.seed,
        budget: cfg.param_num(Suite::Kobayashi, "budget", KobayashiOptions::default().budget)?,
        ..KobayashiOptions::default()
    };
    per_point(cfg, metric, |i, (z, v)| {
        let e = schwarz::kobayashi_estimate(metric.domain, z, v, metric, k2, opts)?;
        let lower = e.lower.unwrap_or(f64::NEG_INFINITY);
        let mut c = Check::new(format!("point {i}"), (lower - e.upper).max(0.0), Some((z.clone(), v.clone())))
            .with("upper", e.upper)
            .with("family_size", e.family_size as f64);
        if let Some(l) = e.lower {
            c = c.with("lower", l);
        }
        if let Some(m) = schwarz::model_kobayashi(metric.domain, z, v) {
            c = c.with("model", m);
        }
        Ok(c)
    })
    .map(Outcome::Checks)
}

fn lemma9(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let g = HermitianField::identity(metric.dim);
    per_point(cfg, metric, |i, (z, v)| {
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut worst = 0.0f64;
        let mut c = Check::new(format!("point {i}"), 0.0, Some((z.clone(), v.clone())));
        for k in 0..metric.dim {
            if v[k].norm() < 1e-12 * norm {
                continue;
            }
            let r = fiber::lemma9_residual(metric, z, v, k)?;
            let w = fiber::phi_weight(metric, &g, z, v, k)?.residual();
            worst = worst.max(r).max(w);
            c = c.with(&format!("chart {k}"), r).with(&format!("weight {k}"), w);
        }
        c.residual = worst;
        Ok(c)
    })
    .map(Outcome::Checks)
}

fn base_point(cfg: &RunConfig, suite: Suite, metric: &MetricSpec) -> Result<Vec<Complex64>> {
    match cfg.param(suite, "z") {
        Some(s) => parse_complex_csv(s, metric.dim),
        None => Ok(rng::sample_point(metric, cfg.seed, 0).0),
    }
}

fn quadrature(cfg: &RunConfig) -> FiberQuadrature {
    cfg.quad.with_exec(cfg.exec)
}

fn induced(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let n = metric.dim;
    let z = base_point(cfg, Suite::Induced, metric)?;
    let g = metric.hermitian.clone().unwrap_or_else(|| HermitianField::identity(n));
    let quad = quadrature(cfg);
    let h = fiber::induced_metric(metric, &g, &z, &quad)?;
    let gz = g.at(&z);
    let point = Some((z.clone(), Vec::new()));
    let mut checks = Vec::new();

    let gt = fiber::rescale_g(&gz, &h)?;
    let ht = h.reinduce(&gz, &gt)?;
    let ident = linalg::det(&ht.h_dual).re * linalg::det(&gt).re - 1.0;
    checks.push(
        Check::new("determinant identity", if ident.abs() <= 1e-9 { 0.0 } else { f64::INFINITY }, point.clone())
            .with("det_h_dual_times_det_g", ident + 1.0)
            .with("scale", fiber::rescale_factor(&gz, &h)?)
            .with("rejected", h.rejected as f64),
    );

    if metric.hermitian.is_some() {
        let kappa = fiber::c_n(n) / n as f64;
        let oracle = linalg::inverse(&gz)?.scale(kappa);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = (h.h_dual[(i, j)] - oracle[(i, j)]).norm();
                let se = h.stderr[(i, j)] + 1e-12 * oracle[(i, j)].norm().max(1e-300);
                worst = worst.max(d / se);
            }
        }
        checks.push(
            Check::new("oracle (standard errors)", worst, point.clone())
                .with("h11", h.h_dual[(0, 0)].re)
                .with("oracle11", oracle[(0, 0)].re)
                .with("stderr11", h.stderr[(0, 0)]),
        );
    }

    if n == 2 && quad.mode == fiber::QuadMode::MonteCarlo {
        let nodes: usize = cfg.param_num(Suite::Induced, "grid_nodes", 64)?;
        let grid = fiber::induced_metric(metric, &g, &z, &FiberQuadrature::chart_grid(nodes, 0).with_exec(cfg.exec))?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = (h.h_dual[(i, j)] - grid.h_dual[(i, j)]).norm();
                worst = worst.max(d / (h.stderr[(i, j)] + grid.stderr[(i, j)] + 1e-300));
            }
        }
        checks.push(
            Check::new("chart grid (standard errors)", worst, point)
                .with("grid_h11", grid.h_dual[(0, 0)].re)
                .with("grid_error11", grid.stderr[(0, 0)]),
        );
    }
    Ok(Outcome::Checks(checks))
}

fn prop2(cfg: &RunConfig, metric: &MetricSpec) -> Result<Outcome> {
    let z = base_point(cfg, Suite::Prop2, metric)?;
    let g0 = match cfg.param(Suite::Prop2, "g0").unwrap_or("identity") {
        "identity" => HermitianField::identity(metric.dim),
        "metric" => metric
            .hermitian
            .clone()
            .ok_or_else(|| FinslerError::Config(format!("{} has no Hermitian field", metric.name)))?,
        other => return Err(FinslerError::Config(format!("unknown g0 '{other}'"))),
    };
    let r = fiber::prop2_check(metric, &g0, &z, &quadrature(cfg))?;
    let equality = r.cond12_sup <= 1e-8;
    let excess = if equality {
        r.gap.abs() - 3.0 * r.mc_sigma
    } else {
        -r.gap - 3.0 * r.mc_sigma
    };
    Ok(Outcome::Checks(vec![Check::new(
        if equality { "equality" } else { "inequality" },
        excess,
        Some((z, Vec::new())),
    )
    .with("lhs", r.lhs)
    .with("rhs", r.rhs)
    .with("gap", r.gap)
    .with("mc_sigma", r.mc_sigma)
    .with("cond12_sup", r.cond12_sup)
    .with("scale", r.scale)
    .with("det_identity", r.det_identity)
    .with("rescale_drift", r.rescale_drift)
    .with("rejected", r.rejected as f64)]))
}

fn expectation(cfg: &RunConfig, suite: Suite) -> Result<(Expect, f64)> {
    let expect = match cfg.param(suite, "expect").unwrap_or("zero") {
        "zero" | "small" => Expect::Small,
        "nonzero" => Expect::Nonzero,
        other => return Err(FinslerError::Config(format!("{suite}: unknown expectation '{other}'"))),
    };
    let tol = match (expect, cfg.tolerances.get(suite.name())) {
        (_, Some(&t)) => t,
        (Expect::Nonzero, None) => 1e-3,
        (Expect::Small, None) => suite.default_tolerance(),
    };
    Ok((expect, tol))
}

/// Runs one suite against a built metric. Numerical failures become a
/// failed report carrying the reason; configuration errors propagate.
pub fn run_suite(cfg: &RunConfig, metric: &MetricSpec, suite: Suite) -> Result<SuiteReport> {
    let (expect, tol) = expectation(cfg, suite)?;
    let start = Instant::now();
    let outcome = match suite {
        Suite::Identities => identities(cfg, metric),
        Suite::Curvature => curvature(cfg, metric),
        Suite::Condition12 => condition12(cfg, metric),
        Suite::Decomposition => decomposition(cfg, metric),
        Suite::Schwarz => schwarz_suite(cfg, metric),
        Suite::Kobayashi => kobayashi(cfg, metric),
        Suite::Lemma9 => lemma9(cfg, metric),
        Suite::Induced => induced(cfg, metric),
        Suite::Prop2 => prop2(cfg, metric),
    };
    let mut report = match outcome {
        Ok(Outcome::Checks(checks)) => SuiteReport::from_checks(suite, tol, expect, checks),
        Ok(Outcome::Skip(reason)) => SuiteReport::skipped(suite, tol, reason),
        Err(e @ FinslerError::Config(_)) => return Err(e),
        Err(e) => SuiteReport::failed(suite, tol, expect, &e),
    };
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs every configured suite; reports come back in config order.
pub fn run(cfg: &RunConfig) -> Result<Vec<SuiteReport>> {
    let metric = cfg.metric.build()?;
    let exec = if cfg.parallel_suites {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    exec.map(cfg.suites.len(), |i| run_suite(cfg, &metric, cfg.suites[i]))
        .into_iter()
        .collect()
}

/// Process exit code for a finished run: 0 iff every non-skipped suite passed.
pub fn exit_code(reports: &[SuiteReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Fail) {
        1
    } else {
        0
    }
}
