//! Integration over the projectivized fiber `P(T_z M)`: the induced `L²`
//! metric on `T*M`, its rescaling, Chern scalar curvatures and the
//! scalar-curvature inequality.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::catalog::{HermitianField, MetricSpec};
use crate::error::{FinslerError, Result};
use crate::exec::{Execution, CHUNK};
use crate::finsler;
use crate::jet::{complex_partial, CJet, Jet, Layout, PointJet, Vars};
use crate::linalg::{self, CMat};
use crate::rng;

/// Batches used for batch-means error bars.
pub const BATCHES: usize = 64;
/// Largest fraction of rejected samples a run tolerates.
pub const MAX_REJECT_FRACTION: f64 = 1e-3;
/// Samples with `G` at or below this are rejected.
pub const G_FLOOR: f64 = 1e-14;
/// Step of the common-random-number stencil in `z`.
pub const FD_STEP: f64 = 1e-3;

fn cz() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Total mass `(2π)^{n-1}/(n-1)!` of the fiber measure.
pub fn c_n(n: usize) -> f64 {
    (1..n).fold(1.0, |acc, k| acc * 2.0 * PI / k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadMode {
    MonteCarlo,
    /// Gauss–Legendre in `α` (with `|w| = tan α`) times trapezoid in `arg w`
    /// on one affine chart. Only `n = 2`.
    ChartGrid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberQuadrature {
    pub mode: QuadMode,
    /// Monte-Carlo sample count, or radial node count of the chart grid
    /// (the angular count is twice that).
    pub samples: usize,
    pub seed: u64,
    pub chart: Option<usize>,
    pub exec: Execution,
}

impl FiberQuadrature {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        FiberQuadrature {
            mode: QuadMode::MonteCarlo,
            samples,
            seed,
            chart: None,
            exec: Execution::default(),
        }
    }

    pub fn chart_grid(nodes: usize, chart: usize) -> Self {
        FiberQuadrature {
            mode: QuadMode::ChartGrid,
            samples: nodes,
            seed: 0,
            chart: Some(chart),
            exec: Execution::default(),
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(FinslerError::Invalid("quadrature needs at least one sample".into()));
        }
        Ok(())
    }
}

/// Induced Hermitian metric on `T*M` at `z`.
#[derive(Clone, Debug)]
pub struct InducedHermitian {
    pub z: Vec<Complex64>,
    /// `h_dual[(j, i)] = h^{j̄i}`
    pub h_dual: CMat,
    /// `h[(i, j)] = h_{ij̄}`, the inverse of `h_dual`
    pub h: CMat,
    /// `(det h^{j̄i})^{-1}`
    pub det_h: f64,
    pub stderr: DMatrix<f64>,
    pub samples: usize,
    pub rejected: usize,
}

impl InducedHermitian {
    fn from_dual(z: &[Complex64], h_dual: CMat, stderr: DMatrix<f64>, samples: usize, rejected: usize) -> Result<Self> {
        let h_dual = linalg::hermitian_part(&h_dual);
        let h = linalg::inverse_pd(&h_dual)?;
        let det_h = 1.0 / linalg::det(&h_dual).re;
        Ok(InducedHermitian {
            z: z.to_vec(),
            h_dual,
            h,
            det_h,
            stderr,
            samples,
            rejected,
        })
    }

    /// Largest `stderr` entry.
    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().fold(0.0f64, |a, &x| a.max(x))
    }

    /// The metric induced by `g_new` from the same samples: `h` scales with
    /// `det g`.
    pub fn reinduce(&self, g_old: &CMat, g_new: &CMat) -> Result<InducedHermitian> {
        let ratio = linalg::det(g_new).re / linalg::det(g_old).re;
        InducedHermitian::from_dual(
            &self.z,
            self.h_dual.scale(ratio),
            self.stderr.scale(ratio.abs()),
            self.samples,
            self.rejected,
        )
    }
}

/// Both expressions of `e^{-φ_L}` at `(z, [v])` in chart `k`.
#[derive(Clone, Debug)]
pub struct LineBundleWeight {
    pub z: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub chart: usize,
    /// `|v^k|^{2(n+1)} G^{-(n+1)} det g`
    pub phi_l_direct: f64,
    /// `(|v^k|²/G) det(∂_α∂_β̄ log G) det g / det G_{ij̄}`
    pub phi_l_lemma9: f64,
}

impl LineBundleWeight {
    pub fn residual(&self) -> f64 {
        (self.phi_l_direct - self.phi_l_lemma9).abs() / self.phi_l_direct.abs()
    }
}

#[derive(Clone, Debug)]
pub struct Prop2Report {
    pub z: Vec<Complex64>,
    /// `s_h + ŝ_h` for the rescaled metric
    pub lhs: f64,
    /// `(n+1)/2 ∫ K_G (det g̃/det G) dμ`
    pub rhs: f64,
    pub gap: f64,
    pub mc_sigma: f64,
    pub cond12_sup: f64,
    /// `g̃ = scale · g0` at `z`
    pub scale: f64,
    /// `det(h̃^{j̄i}) det g̃ − 1`
    pub det_identity: f64,
    /// `|c − 1|` for a second rescaling step
    pub rescale_drift: f64,
    pub samples: usize,
    pub rejected: usize,
}

fn check_chart(v: &[Complex64], k: usize) -> Result<()> {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if k >= v.len() || !(v[k].norm() >= 1e-12 * norm) {
        return Err(FinslerError::ChartDegenerate { chart: k });
    }
    Ok(())
}

/// `det(∂²log G/∂w^α∂w̄^β)` in the affine chart `w = v/v^k`.
pub fn chart_hessian_det(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], k: usize) -> Result<f64> {
    metric.check_point(z, v)?;
    check_chart(v, k)?;
    let n = metric.dim;
    if n == 1 {
        return Ok(1.0);
    }
    let m = n - 1;
    let layout = Layout::get(2 * m, 2);
    let others: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let zz: Vec<CJet> = z.iter().map(|&x| CJet::constant(&layout, x)).collect();
    let mut vv: Vec<CJet> = Vec::with_capacity(n);
    for i in 0..n {
        if i == k {
            vv.push(CJet::constant(&layout, Complex64::new(1.0, 0.0)));
        } else {
            let a = others.iter().position(|&o| o == i).unwrap_or(0);
            let w = v[i] / v[k];
            vv.push(CJet::new(
                Jet::variable(&layout, a, w.re),
                Jet::variable(&layout, m + a, w.im),
            ));
        }
    }
    let log_g = metric.log_potential(&zz, &vv);
    if !log_g.is_finite() {
        return Err(FinslerError::NonFinite(format!("log G in chart {k}")));
    }
    let mut hess = DMatrix::from_element(m, m, cz());
    for a in 0..m {
        for b in 0..m {
            hess[(a, b)] = if a == b {
                complex_partial(&log_g, &[(a, m + a, 1, 1)])?
            } else {
                complex_partial(&log_g, &[(a, m + a, 1, 0), (b, m + b, 0, 1)])?
            };
        }
    }
    Ok(linalg::det(&hess).re)
}

/// `|v^k|^{2n} G^{-n} det G_{ij̄}`.
fn chart_identity_rhs(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], k: usize) -> Result<(f64, f64, f64)> {
    let n = metric.dim as i32;
    let levi = finsler::levi_form(metric, z, v)?;
    let det_levi = linalg::det(&levi).re;
    let g = metric.value(z, v);
    Ok((v[k].norm_sqr().powi(n) * g.powi(-n) * det_levi, g, det_levi))
}

/// Relative difference of the two sides of the chart determinant identity.
pub fn lemma9_residual(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], k: usize) -> Result<f64> {
    let lhs = chart_hessian_det(metric, z, v, k)?;
    let (rhs, _, _) = chart_identity_rhs(metric, z, v, k)?;
    Ok((lhs - rhs).abs() / rhs.abs())
}

pub fn phi_weight(
    metric: &MetricSpec,
    g: &HermitianField,
    z: &[Complex64],
    v: &[Complex64],
    k: usize,
) -> Result<LineBundleWeight> {
    let n = metric.dim as i32;
    let hess = chart_hessian_det(metric, z, v, k)?;
    let (_, gv, det_levi) = chart_identity_rhs(metric, z, v, k)?;
    let det_g = linalg::det(&g.at(z)).re;
    let vk2 = v[k].norm_sqr();
    Ok(LineBundleWeight {
        z: z.to_vec(),
        v: v.to_vec(),
        chart: k,
        phi_l_direct: vk2.powi(n + 1) * gv.powi(-(n + 1)) * det_g,
        phi_l_lemma9: vk2 / gv * hess * det_g / det_levi,
    })
}

#[derive(Clone)]
struct Batch {
    count: usize,
    /// per node, `Σ v^i v̄^j / G^{n+1}` at flat index `j·n + i`
    x: Vec<Vec<Complex64>>,
    x2: Vec<Vec<f64>>,
    k: f64,
    k2: f64,
}

struct Accum {
    batches: Vec<Batch>,
    rejected: usize,
    cond12_sup: f64,
}

impl Accum {
    fn new(nodes: usize, n: usize) -> Self {
        let b = Batch {
            count: 0,
            x: vec![vec![cz(); n * n]; nodes],
            x2: vec![vec![0.0; n * n]; nodes],
            k: 0.0,
            k2: 0.0,
        };
        Accum {
            batches: vec![b; BATCHES],
            rejected: 0,
            cond12_sup: 0.0,
        }
    }

    fn merge(&mut self, o: &Accum) {
        for (a, b) in self.batches.iter_mut().zip(&o.batches) {
            a.count += b.count;
            a.k += b.k;
            a.k2 += b.k2;
            for (xa, xb) in a.x.iter_mut().zip(&b.x) {
                xa.iter_mut().zip(xb).for_each(|(p, q)| *p += q);
            }
            for (xa, xb) in a.x2.iter_mut().zip(&b.x2) {
                xa.iter_mut().zip(xb).for_each(|(p, q)| *p += q);
            }
        }
        self.rejected += o.rejected;
        self.cond12_sup = self.cond12_sup.max(o.cond12_sup);
    }

    fn pooled(&self) -> Batch {
        let mut p = self.batches[0].clone();
        for b in &self.batches[1..] {
            p.count += b.count;
            p.k += b.k;
            p.k2 += b.k2;
            for (xa, xb) in p.x.iter_mut().zip(&b.x) {
                xa.iter_mut().zip(xb).for_each(|(a, c)| *a += c);
            }
            for (xa, xb) in p.x2.iter_mut().zip(&b.x2) {
                xa.iter_mut().zip(xb).for_each(|(a, c)| *a += c);
            }
        }
        p
    }
}

impl Batch {
    /// `C_n · mean(v^i v̄^j / G^{n+1})` at node `t`, as `X[(j, i)]`.
    fn x_matrix(&self, t: usize, n: usize) -> CMat {
        let s = c_n(n) / self.count.max(1) as f64;
        DMatrix::from_fn(n, n, |j, i| self.x[t][j * n + i] * s)
    }

    fn x_stderr(&self, t: usize, n: usize) -> DMatrix<f64> {
        let c = self.count.max(2) as f64;
        DMatrix::from_fn(n, n, |j, i| {
            let mean = self.x[t][j * n + i] / c;
            let var = (self.x2[t][j * n + i] / c - mean.norm_sqr()).max(0.0) * c / (c - 1.0);
            c_n(n) * (var / c).sqrt()
        })
    }

    fn k_mean(&self) -> (f64, f64) {
        let c = self.count.max(2) as f64;
        let mean = self.k / c;
        let var = (self.k2 / c - mean * mean).max(0.0) * c / (c - 1.0);
        (mean, (var / c).sqrt())
    }
}

struct FiberJob<'a> {
    metric: &'a MetricSpec,
    nodes: &'a [Vec<Complex64>],
    curvature: bool,
    cond12_samples: usize,
}

enum Draw {
    Accepted { g: Vec<f64>, k: f64, cond12: f64 },
    Rejected,
}

fn with_v(e: FinslerError, v: &[Complex64]) -> FinslerError {
    match e {
        FinslerError::NotStronglyPseudoconvex { min_eigenvalue, .. } => FinslerError::NotStronglyPseudoconvex {
            min_eigenvalue,
            v: v.to_vec(),
        },
        e => e,
    }
}

impl FiberJob<'_> {
    fn draw(&self, v: &[Complex64], index: usize) -> Result<Draw> {
        let center = &self.nodes[0];
        let mut k = 0.0;
        if self.curvature {
            match finsler::hsc(self.metric, center, v) {
                Ok(x) => k = x,
                Err(FinslerError::Degenerate { .. }) | Err(FinslerError::SingularLeviForm) => return Ok(Draw::Rejected),
                Err(e) => return Err(with_v(e, v)),
            }
        } else {
            let levi = finsler::levi_form(self.metric, center, v)?;
            match linalg::inverse_pd(&levi) {
                Ok(_) => {}
                Err(FinslerError::Degenerate { .. }) | Err(FinslerError::SingularLeviForm) => return Ok(Draw::Rejected),
                Err(e) => return Err(with_v(e, v)),
            }
        }
        let mut g = Vec::with_capacity(self.nodes.len());
        for z in self.nodes {
            let x = self.metric.value(z, v);
            if !(x > G_FLOOR) || !x.is_finite() {
                return Ok(Draw::Rejected);
            }
            g.push(x);
        }
        let cond12 = if index < self.cond12_samples {
            linalg::max_abs(&finsler::condition12_residual(self.metric, center, v)?)
        } else {
            0.0
        };
        Ok(Draw::Accepted { g, k, cond12 })
    }

    fn run(&self, quad: &FiberQuadrature) -> Result<Accum> {
        let n = self.metric.dim;
        for z in self.nodes {
            self.metric.check_point(z, &vec![Complex64::new(1.0, 0.0); n])?;
        }
        let total = quad.samples;
        let parts = quad.exec.map_chunks(total, CHUNK, |range| -> Result<Accum> {
            let mut acc = Accum::new(self.nodes.len(), n);
            for s in range {
                let v = rng::sphere(&mut rng::stream(quad.seed, s as u64), n);
                match self.draw(&v, s)? {
                    Draw::Rejected => acc.rejected += 1,
                    Draw::Accepted { g, k, cond12 } => {
                        let b = &mut acc.batches[s % BATCHES];
                        b.count += 1;
                        for (t, &gt) in g.iter().enumerate() {
                            let w = gt.powi(-(n as i32 + 1));
                            for j in 0..n {
                                for i in 0..n {
                                    let x = v[i] * v[j].conj() * w;
                                    b.x[t][j * n + i] += x;
                                    b.x2[t][j * n + i] += x.norm_sqr();
                                }
                            }
                        }
                        let kw = k * g[0].powi(-(n as i32));
                        b.k += kw;
                        b.k2 += kw * kw;
                        acc.cond12_sup = acc.cond12_sup.max(cond12);
                    }
                }
            }
            Ok(acc)
        });
        let mut acc = Accum::new(self.nodes.len(), n);
        for p in parts {
            acc.merge(&p?);
        }
        if acc.rejected as f64 > MAX_REJECT_FRACTION * total as f64 || acc.rejected == total {
            return Err(FinslerError::TooManyRejects {
                rejected: acc.rejected,
                total,
            });
        }
        Ok(acc)
    }
}

/// Induced metric `h^{j̄i} = ∫ (v^i v̄^j/G)(det g/det G) dμ` on `T*_z M`.
pub fn induced_metric(
    metric: &MetricSpec,
    g: &HermitianField,
    z: &[Complex64],
    quad: &FiberQuadrature,
) -> Result<InducedHermitian> {
    quad.validate()?;
    if g.dim != metric.dim {
        return Err(FinslerError::Invalid(format!(
            "field {} has dimension {}, metric {} has {}",
            g.name, g.dim, metric.name, metric.dim
        )));
    }
    let gz = g.at(z);
    linalg::inverse_pd(&gz)?;
    let det_g = linalg::det(&gz).re;
    match quad.mode {
        QuadMode::MonteCarlo => {
            let nodes = [z.to_vec()];
            let job = FiberJob {
                metric,
                nodes: &nodes,
                curvature: false,
                cond12_samples: 0,
            };
            let acc = job.run(quad)?;
            let p = acc.pooled();
            let n = metric.dim;
            InducedHermitian::from_dual(
                z,
                p.x_matrix(0, n).scale(det_g),
                p.x_stderr(0, n).scale(det_g),
                p.count,
                acc.rejected,
            )
        }
        QuadMode::ChartGrid => {
            let k = quad.chart.unwrap_or(0);
            let fine = chart_grid(metric, z, k, quad.samples, 2 * quad.samples, quad.exec)?;
            let coarse = chart_grid(metric, z, k, quad.samples.div_ceil(2), quad.samples.div_ceil(2) * 2, quad.exec)?;
            let err = DMatrix::from_fn(fine.nrows(), fine.ncols(), |i, j| (fine[(i, j)] - coarse[(i, j)]).norm() * det_g);
            let nodes = quad.samples * quad.samples * 2;
            InducedHermitian::from_dual(z, fine.scale(det_g), err, nodes, 0)
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                if m == 1 {
                    p0 = 1.0;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫ (v^i v̄^j/G)/det G · √−1∂∂̄ log G` over chart `k` of `P^1`, without
/// the `det g` factor.
fn chart_grid(
    metric: &MetricSpec,
    z: &[Complex64],
    k: usize,
    radial: usize,
    angular: usize,
    exec: Execution,
) -> Result<CMat> {
    let n = metric.dim;
    if n != 2 {
        return Err(FinslerError::Invalid(format!("chart-grid quadrature needs n = 2, got {n}")));
    }
    if k > 1 {
        return Err(FinslerError::ChartDegenerate { chart: k });
    }
    let o = 1 - k;
    let gl = gauss_legendre(radial.max(1));
    let angular = angular.max(1);
    let half = PI / 4.0;
    let rows = exec.map(gl.len(), |a| -> Result<CMat> {
        let (t, wt) = gl[a];
        let alpha = half * (t + 1.0);
        let rho = alpha.tan();
        let radial_w = wt * half * rho / (alpha.cos() * alpha.cos());
        let mut acc = DMatrix::from_element(2, 2, cz());
        for b in 0..angular {
            let theta = 2.0 * PI * b as f64 / angular as f64;
            let w = Complex64::from_polar(rho, theta);
            let mut v = vec![cz(); 2];
            v[k] = Complex64::new(1.0, 0.0);
            v[o] = w;
            let density = chart_hessian_det(metric, z, &v, k)?;
            let levi = finsler::levi_form(metric, z, &v)?;
            linalg::inverse_pd(&levi).map_err(|e| with_v(e, &v))?;
            let det_levi = linalg::det(&levi).re;
            let g = metric.value(z, &v);
            let weight = radial_w * (2.0 * PI / angular as f64) * 2.0 * density / (g * det_levi);
            for j in 0..2 {
                for i in 0..2 {
                    acc[(j, i)] += v[i] * v[j].conj() * weight;
                }
            }
        }
        Ok(acc)
    });
    let mut total = DMatrix::from_element(2, 2, cz());
    for r in rows {
        total += r?;
    }
    Ok(total)
}

/// Rescaling factor `c = (det h_{ij̄}/det g)^{1/(n(n+1))}`.
pub fn rescale_factor(g: &CMat, h: &InducedHermitian) -> Result<f64> {
    let n = g.nrows() as f64;
    let det_g = linalg::det(g).re;
    if !(det_g > 0.0 && h.det_h > 0.0) {
        return Err(FinslerError::Invalid("rescaling needs positive determinants".into()));
    }
    Ok((h.det_h / det_g).powf(1.0 / (n * (n + 1.0))))
}

/// `g̃ = (det h/det g)^{1/(n(n+1))} g` at the point of `h`.
pub fn rescale_g(g: &CMat, h: &InducedHermitian) -> Result<CMat> {
    Ok(g.scale(rescale_factor(g, h)?))
}

/// Real stencil around `z` in the order: centre, `±e_a`, then
/// `(±e_a, ±e_b)` for `a < b`, over the `2n` real coordinates.
fn stencil_nodes(z: &[Complex64], h: f64) -> Vec<Vec<Complex64>> {
    let n = z.len();
    let shift = |x: &mut Vec<Complex64>, a: usize, s: f64| {
        if a < n {
            x[a].re += s;
        } else {
            x[a - n].im += s;
        }
    };
    let mut out = vec![z.to_vec()];
    for a in 0..2 * n {
        for s in [h, -h] {
            let mut x = z.to_vec();
            shift(&mut x, a, s);
            out.push(x);
        }
    }
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            for (sa, sb) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                let mut x = z.to_vec();
                shift(&mut x, a, sa);
                shift(&mut x, b, sb);
                out.push(x);
            }
        }
    }
    out
}

/// `∂_k f` and `∂_k∂_l̄ f` from values on `stencil_nodes`.
fn stencil_level(vals: &[CMat], n: usize, h: f64) -> (Vec<CMat>, Vec<Vec<CMat>>) {
    let m = 2 * n;
    let f0 = &vals[0];
    let plus = |a: usize| &vals[1 + 2 * a];
    let minus = |a: usize| &vals[2 + 2 * a];
    let first: Vec<CMat> = (0..m).map(|a| (plus(a) - minus(a)).scale(0.5 / h)).collect();
    let mut second = vec![vec![f0.scale(0.0); m]; m];
    for a in 0..m {
        second[a][a] = (plus(a) - f0.scale(2.0) + minus(a)).scale(1.0 / (h * h));
    }
    let mut idx = 1 + 2 * m;
    for a in 0..m {
        for b in a + 1..m {
            let d = (&vals[idx] - &vals[idx + 1] - &vals[idx + 2] + &vals[idx + 3]).scale(0.25 / (h * h));
            second[a][b] = d.clone();
            second[b][a] = d;
            idx += 4;
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let d: Vec<CMat> = (0..n).map(|k| (&first[k] - first[n + k].map(|x| x * i)).scale(0.5)).collect();
    let dd: Vec<Vec<CMat>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    let re = &second[k][l] + &second[n + k][n + l];
                    let im = &second[k][n + l] - &second[n + k][l];
                    (re.map(|x| x + cz()) + im.map(|x| x * i)).scale(0.25)
                })
                .collect()
        })
        .collect();
    (d, dd)
}

/// Nodes of `stencil_nodes` at steps `h` and `h/2`, concatenated.
fn richardson_nodes(z: &[Complex64], h: f64) -> Vec<Vec<Complex64>> {
    let mut nodes = stencil_nodes(z, h);
    nodes.extend(stencil_nodes(z, h / 2.0));
    nodes
}

/// Derivatives from `richardson_nodes` values with one Richardson level.
fn stencil_derivatives(vals: &[CMat], n: usize, h: f64) -> (Vec<CMat>, Vec<Vec<CMat>>) {
    let half = vals.len() / 2;
    let (d1, dd1) = stencil_level(&vals[..half], n, h);
    let (d2, dd2) = stencil_level(&vals[half..], n, h / 2.0);
    let mix = |a: &CMat, b: &CMat| (b.scale(4.0) - a).scale(1.0 / 3.0);
    let d = d1.iter().zip(&d2).map(|(a, b)| mix(a, b)).collect();
    let dd = dd1
        .iter()
        .zip(&dd2)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| mix(a, b)).collect())
        .collect();
    (d, dd)
}

/// Chern scalar curvatures from `h_{ij̄}`, `∂_k h_{ij̄}` and `∂_k∂_l̄ h_{ij̄}`.
fn chern_scalars(h: &CMat, d: &[CMat], dd: &[Vec<CMat>]) -> Result<(f64, f64)> {
    let n = h.nrows();
    // hinv[(j, i)] = h^{j̄i}
    let hinv = linalg::inverse_pd(h)?;
    let mut s = cz();
    let mut s_hat = cz();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut theta = -dd[k][l][(i, j)];
                    for p in 0..n {
                        for q in 0..n {
                            theta += hinv[(q, p)] * d[k][(i, q)] * d[l][(j, p)].conj();
                        }
                    }
                    s += hinv[(j, i)] * hinv[(l, k)] * theta;
                    s_hat += hinv[(l, i)] * hinv[(j, k)] * theta;
                }
            }
        }
    }
    Ok((s.re, s_hat.re))
}

/// `(s_h, ŝ_h)` of a closed-form field, differentiated exactly.
pub fn scalar_curvatures(h: &HermitianField, z: &[Complex64]) -> Result<(f64, f64)> {
    let n = h.dim;
    if z.len() != n {
        return Err(FinslerError::Invalid(format!("{} expects dimension {n}", h.name)));
    }
    let (zz, _) = PointJet::inputs(z, z, 2, Vars::Base);
    let m = (h.eval)(&zz);
    let entry = |e: &CJet, coords: &[(usize, usize, u8, u8)]| -> Result<Complex64> {
        let re = complex_partial(&e.re, coords)?;
        let im = complex_partial(&e.im, coords)?;
        Ok(re + Complex64::new(0.0, 1.0) * im)
    };
    let value = DMatrix::from_fn(n, n, |i, j| m[i][j].value());
    let mut d = vec![DMatrix::from_element(n, n, cz()); n];
    let mut dd = vec![vec![DMatrix::from_element(n, n, cz()); n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                d[k][(i, j)] = entry(&m[i][j], &[(k, n + k, 1, 0)])?;
                for l in 0..n {
                    dd[k][l][(i, j)] = if k == l {
                        entry(&m[i][j], &[(k, n + k, 1, 1)])?
                    } else {
                        entry(&m[i][j], &[(k, n + k, 1, 0), (l, n + l, 0, 1)])?
                    };
                }
            }
        }
    }
    chern_scalars(&value, &d, &dd)
}

/// `(s_h, ŝ_h)` of a field known only pointwise, by central differences.
/// Quadrature-defined fields must reuse one seed at every node.
pub fn scalar_curvatures_fd(
    h: &dyn Fn(&[Complex64]) -> Result<CMat>,
    z: &[Complex64],
    step: f64,
) -> Result<(f64, f64)> {
    let nodes = richardson_nodes(z, step);
    let vals = nodes.iter().map(|x| h(x)).collect::<Result<Vec<_>>>()?;
    let (d, dd) = stencil_derivatives(&vals, z.len(), step);
    chern_scalars(&vals[0], &d, &dd)
}

/// `(n+1)/2 ∫ K_G (det g/det G) dμ` and its Monte-Carlo error.
pub fn kg_fiber_average(
    metric: &MetricSpec,
    g: &HermitianField,
    z: &[Complex64],
    quad: &FiberQuadrature,
) -> Result<(f64, f64)> {
    quad.validate()?;
    let n = metric.dim;
    let det_g = linalg::det(&g.at(z)).re;
    let nodes = [z.to_vec()];
    let job = FiberJob {
        metric,
        nodes: &nodes,
        curvature: true,
        cond12_samples: 0,
    };
    let p = job.run(quad)?.pooled();
    let (mean, se) = p.k_mean();
    let f = (n as f64 + 1.0) / 2.0 * c_n(n) * det_g;
    Ok((f * mean, f * se))
}

struct Sides {
    lhs: f64,
    rhs: f64,
    scale: f64,
    det_identity: f64,
    drift: f64,
}

fn comparison_sides(b: &Batch, g0: &[CMat], n: usize, h: f64) -> Result<Sides> {
    let mut lows = Vec::with_capacity(g0.len());
    let mut centre = None;
    for (t, g) in g0.iter().enumerate() {
        let x = b.x_matrix(t, n);
        let det_g = linalg::det(g).re;
        let induced = InducedHermitian::from_dual(&[], x.scale(det_g), DMatrix::zeros(n, n), b.count, 0)?;
        let c = rescale_factor(g, &induced)?;
        let g_t = g.scale(c);
        let h_t = induced.reinduce(g, &g_t)?;
        if t == 0 {
            let det_gt = linalg::det(&g_t).re;
            let c2 = rescale_factor(&g_t, &h_t)?;
            centre = Some((c, det_gt, linalg::det(&h_t.h_dual).re * det_gt - 1.0, (c2 - 1.0).abs()));
        }
        lows.push(h_t.h);
    }
    let (scale, det_gt, det_identity, drift) = centre.ok_or_else(|| FinslerError::Invalid("empty stencil".into()))?;
    let (d, dd) = stencil_derivatives(&lows, n, h);
    let (s, s_hat) = chern_scalars(&lows[0], &d, &dd)?;
    let (k_mean, _) = b.k_mean();
    let rhs = (n as f64 + 1.0) / 2.0 * c_n(n) * det_gt * k_mean;
    Ok(Sides {
        lhs: s + s_hat,
        rhs,
        scale,
        det_identity,
        drift,
    })
}

/// Induces `h` from `(G, g0)`, rescales to `g̃`, re-induces, and compares
/// `s_h + ŝ_h` with the fiber average of `K_G`. Derivatives in `z` use one
/// sample set at every stencil node. `cond12_sup` is taken over the first
/// 256 samples.
pub fn prop2_check(
    metric: &MetricSpec,
    g0: &HermitianField,
    z: &[Complex64],
    quad: &FiberQuadrature,
) -> Result<Prop2Report> {
    quad.validate()?;
    if quad.mode != QuadMode::MonteCarlo {
        return Err(FinslerError::Invalid("the scalar-curvature comparison uses Monte Carlo".into()));
    }
    let n = metric.dim;
    let nodes = richardson_nodes(z, FD_STEP);
    let g_nodes: Vec<CMat> = nodes.iter().map(|x| g0.at(x)).collect();
    for g in &g_nodes {
        linalg::inverse_pd(g)?;
    }
    let job = FiberJob {
        metric,
        nodes: &nodes,
        curvature: true,
        cond12_samples: 256,
    };
    let acc = job.run(quad)?;
    let pooled = acc.pooled();
    let full = comparison_sides(&pooled, &g_nodes, n, FD_STEP)?;
    let mut gaps = Vec::with_capacity(BATCHES);
    for b in &acc.batches {
        if b.count > 1 {
            let s = comparison_sides(b, &g_nodes, n, FD_STEP)?;
            gaps.push(s.rhs - s.lhs);
        }
    }
    let m = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / m;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Prop2Report {
        z: z.to_vec(),
        lhs: full.lhs,
        rhs: full.rhs,
        gap: full.rhs - full.lhs,
        mc_sigma: (var / m).sqrt(),
        cond12_sup: acc.cond12_sup,
        scale: full.scale,
        det_identity: full.det_identity,
        rescale_drift: full.drift,
        samples: pooled.count,
        rejected: acc.rejected,
    })
}
