//! Holomorphic discs: pullback curvature, Schwarz-type ratio bounds and
//! two-sided estimates of the infinitesimal Kobayashi metric.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::catalog::{horner, Domain, MetricSpec};
use crate::error::{FinslerError, Result};
use crate::exec::Execution;
use crate::finsler;
use crate::jet::{CJet, Jet, Layout};
use crate::rng;

type DiscFn = Arc<dyn Fn(&CJet) -> Vec<CJet> + Send + Sync>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Holomorphic map from the disc `|w| < radius` into `C^dim`.
#[derive(Clone)]
pub struct DiscMap {
    pub label: String,
    pub radius: f64,
    pub dim: usize,
    /// Per-output polynomial coefficients when the map is a plain polynomial.
    pub coeffs: Option<Vec<Vec<Complex64>>>,
    map: DiscFn,
}

impl fmt::Debug for DiscMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscMap({}, r={})", self.label, self.radius)
    }
}

/// `(w + a) / (1 + ā w)`
fn mobius(a: Complex64, w: &CJet) -> CJet {
    w.add_c(a).div(&w.mul_c(a.conj()).add_c(c(1.0, 0.0)))
}

impl DiscMap {
    pub fn from_fn(
        label: impl Into<String>,
        radius: f64,
        dim: usize,
        map: impl Fn(&CJet) -> Vec<CJet> + Send + Sync + 'static,
    ) -> Self {
        DiscMap {
            label: label.into(),
            radius,
            dim,
            coeffs: None,
            map: Arc::new(map),
        }
    }

    /// `f^a(w) = Σ_k coeffs[a][k] w^k`
    pub fn polynomial(radius: f64, coeffs: Vec<Vec<Complex64>>) -> Self {
        let dim = coeffs.len();
        let cs = coeffs.clone();
        let mut m = DiscMap::from_fn("polynomial", radius, dim, move |w: &CJet| {
            cs.iter().map(|p| horner(p, w)).collect()
        });
        m.coeffs = Some(coeffs);
        m
    }

    pub fn identity(radius: f64) -> Self {
        DiscMap::polynomial(radius, vec![vec![c(0.0, 0.0), c(1.0, 0.0)]])
    }

    /// Unit-disc automorphism `e^{iθ} (w + a)/(1 + ā w)`.
    pub fn automorphism(a: Complex64, theta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        DiscMap::from_fn(format!("aut(a={a},θ={theta})"), 1.0, 1, move |w: &CJet| {
            vec![mobius(a, w).mul_c(rot)]
        })
    }

    /// `M_b ∘ P ∘ M_a` on the unit disc for a one-variable polynomial `P`.
    pub fn composed(a: Complex64, poly: Vec<Complex64>, b: Complex64) -> Self {
        let label = format!("M_{b}∘P∘M_{a}");
        DiscMap::from_fn(label, 1.0, 1, move |w: &CJet| {
            let inner = mobius(a, w);
            vec![mobius(b, &horner(&poly, &inner))]
        })
    }

    /// `f(w)` and `f'(w)` as jets of one order less than the layout allows.
    fn jets(&self, w: Complex64, order: usize) -> (Vec<CJet>, Vec<CJet>) {
        let lay = Layout::get(2, order + 1);
        let ww = CJet::new(Jet::variable(&lay, 0, w.re), Jet::variable(&lay, 1, w.im));
        let f = (self.map)(&ww);
        // holomorphic: f' = ∂f/∂x
        let df = f.iter().map(|x| x.derivative(0)).collect();
        let f = f.iter().map(|x| x.truncate(order)).collect();
        (f, df)
    }

    pub fn value(&self, w: Complex64) -> Vec<Complex64> {
        let ww = CJet::scalar(w);
        (self.map)(&ww).iter().map(CJet::value).collect()
    }

    pub fn derivative(&self, w: Complex64) -> Vec<Complex64> {
        let (_, df) = self.jets(w, 0);
        df.iter().map(CJet::value).collect()
    }

    /// Reparametrise onto the disc of radius `radius / s`: `w ↦ f(s w)`.
    pub fn rescaled(&self, s: f64) -> DiscMap {
        let g = self.map.clone();
        DiscMap::from_fn(format!("{}(·{s})", self.label), self.radius / s, self.dim, move |w: &CJet| {
            g(&w.scale(s))
        })
    }

    /// `(f*G)(w, 1) = G(f(w), f'(w))` as a jet in `(Re w, Im w)`.
    pub fn pullback_jet(&self, metric: &MetricSpec, w: Complex64, order: usize) -> Jet {
        let (f, df) = self.jets(w, order);
        metric.eval(&f, &df)
    }
}

/// Gaussian curvature `−(2/u) ∂_w∂_w̄ log u` of `u = f*G` at `w`.
pub fn pullback_gauss_curvature(f: &DiscMap, metric: &MetricSpec, w: Complex64) -> Result<f64> {
    let z = f.value(w);
    if !metric.domain.contains(&z) {
        return Err(FinslerError::Domain {
            metric: metric.name.clone(),
            detail: format!("disc point f({w}) = {z:?} outside {}", metric.domain),
        });
    }
    let u = f.pullback_jet(metric, w, 2);
    if !(u.value() > 1e-300) {
        return Err(FinslerError::DegeneratePullback { w });
    }
    let l = u.ln();
    let lap = l.partial(&[2, 0]) + l.partial(&[0, 2]);
    let k = -2.0 * (lap / 4.0) / u.value();
    if !k.is_finite() {
        return Err(FinslerError::NonFinite("pullback curvature".into()));
    }
    Ok(k)
}

/// Budget for the second-order jet search in [`hsc_via_discs`].
#[derive(Clone, Copy, Debug)]
pub struct DiscSearch {
    pub evaluations: usize,
    pub initial_step: f64,
}

impl Default for DiscSearch {
    fn default() -> Self {
        DiscSearch {
            evaluations: 400,
            initial_step: 0.5,
        }
    }
}

fn quadratic_disc(z: &[Complex64], v: &[Complex64], a: &[Complex64]) -> DiscMap {
    let coeffs = (0..z.len()).map(|i| vec![z[i], v[i], a[i] * 0.5]).collect();
    DiscMap::polynomial(f64::INFINITY, coeffs)
}

/// Largest Gaussian curvature at `w = 0` over discs `φ(w) = z + v w + ½ a w²`.
/// The candidate `a = −N v` is always included.
pub fn hsc_via_discs(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], search: DiscSearch) -> Result<f64> {
    let n = metric.dim;
    let fd = finsler::fundamental(metric, z, v, true)?;
    let vv = nalgebra::DVector::from_column_slice(v);
    let nv = &fd.conn * &vv;
    let optimal: Vec<Complex64> = (0..n).map(|k| -nv[k]).collect();
    let objective = |a: &[Complex64]| pullback_gauss_curvature(&quadratic_disc(z, v, a), metric, c(0.0, 0.0));

    let mut best_a = vec![c(0.0, 0.0); n];
    let mut best = objective(&best_a)?;
    let k_opt = objective(&optimal)?;
    if k_opt > best {
        best = k_opt;
        best_a = optimal;
    }
    let mut evals = 2;
    let mut step = search.initial_step * (1.0 + best_a.iter().map(|x| x.norm()).fold(0.0, f64::max));
    while evals < search.evaluations && step > 1e-9 {
        let mut improved = false;
        for comp in 0..2 * n {
            for sign in [1.0, -1.0] {
                if evals >= search.evaluations {
                    break;
                }
                let mut trial = best_a.clone();
                let d = if comp < n { c(sign * step, 0.0) } else { c(0.0, sign * step) };
                trial[comp % n] += d;
                evals += 1;
                if let Ok(k) = objective(&trial) {
                    if k > best {
                        best = k;
                        best_a = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// Polar sample grid on the disc of radius `r`, staying `1e-3·r` away from
/// the boundary.
#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            radial: 40,
            angular: 64,
        }
    }
}

impl Grid {
    pub fn points(&self, r: f64) -> Vec<Complex64> {
        let rmax = r * (1.0 - 1e-3);
        let mut out = vec![c(0.0, 0.0)];
        for i in 1..=self.radial {
            let rho = rmax * i as f64 / self.radial as f64;
            for j in 0..self.angular {
                let t = std::f64::consts::TAU * j as f64 / self.angular as f64;
                out.push(Complex64::from_polar(rho, t));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SchwarzReport {
    pub sup_ratio: f64,
    pub bound: f64,
    pub argmax: Complex64,
    /// `(w, ratio)` where the ratio exceeds the bound by more than the tolerance.
    pub violations: Vec<(Complex64, f64)>,
    pub samples: usize,
    /// Points skipped because `G₁ G₂` vanishes there.
    pub skipped: usize,
    /// Observed `inf K_{G₁}` and `sup K_{G₂}` on the grid.
    pub k1_observed: f64,
    pub k2_observed: f64,
}

/// Certifies `inf K ≥ k_lower` (`lower = true`) or `sup K ≤ k_upper` on the
/// given points of a one-dimensional metric. Returns the observed extreme.
fn certify_1d(metric: &MetricSpec, points: &[Complex64], bound: f64, lower: bool, exec: Execution) -> Result<f64> {
    let ks = exec.map(points.len(), |i| finsler::hsc(metric, &points[i..i + 1], &[c(1.0, 0.0)]));
    let mut ext = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
    for k in ks {
        let k = k?;
        ext = if lower { ext.min(k) } else { ext.max(k) };
    }
    let tol = 1e-8 * (1.0 + bound.abs());
    let ok = if lower { ext >= bound - tol } else { ext <= bound + tol };
    if !ok {
        let which = if lower { "lower" } else { "upper" };
        return Err(FinslerError::BoundsNotCertified(format!(
            "{}: sampled curvature {ext} contradicts {which} bound {bound}",
            metric.name
        )));
    }
    Ok(ext)
}

/// Checks `f*G_target ≤ (K1/K2) G_source` on a grid, for a source with
/// curvature `≥ K1` and a target with curvature `≤ K2 < 0`.
#[allow(clippy::too_many_arguments)]
pub fn schwarz_check(
    f: &DiscMap,
    source: &MetricSpec,
    target: &MetricSpec,
    k1: f64,
    k2: f64,
    grid: Grid,
    tol: f64,
    exec: Execution,
) -> Result<SchwarzReport> {
    if !(k2 < 0.0) {
        return Err(FinslerError::Invalid(format!("K2 must be negative, got {k2}")));
    }
    if source.dim != 1 || target.dim != f.dim {
        return Err(FinslerError::Invalid("schwarz_check expects a disc source and a matching target".into()));
    }
    let pts = grid.points(f.radius.min(source_radius(source)));
    let k1_observed = certify_1d(source, &pts, k1, true, exec)?;
    let images: Vec<Complex64> = pts
        .iter()
        .map(|&w| f.value(w)[0])
        .filter(|z| target.domain.contains(std::slice::from_ref(z)))
        .collect();
    let mut tgt_pts = grid.points(source_radius(target));
    tgt_pts.extend(images);
    let k2_observed = if target.dim == 1 {
        certify_1d(target, &tgt_pts, k2, false, exec)?
    } else {
        k2
    };

    let bound = k1 / k2;
    let ratios = exec.map(pts.len(), |i| {
        let w = pts[i];
        let g1 = source.value(&[w], &[c(1.0, 0.0)]);
        let z = f.value(w);
        if !target.domain.contains(&z) {
            return Err(FinslerError::Domain {
                metric: target.name.clone(),
                detail: format!("f({w}) leaves the target domain"),
            });
        }
        let g2 = target.value(&z, &f.derivative(w));
        if g1 * g2 <= 0.0 {
            return Ok(None);
        }
        Ok(Some(g2 / g1))
    });
    let mut sup_ratio = f64::NEG_INFINITY;
    let mut argmax = c(0.0, 0.0);
    let mut violations = Vec::new();
    let mut skipped = 0;
    for (i, r) in ratios.into_iter().enumerate() {
        match r? {
            None => skipped += 1,
            Some(u) => {
                if u > sup_ratio {
                    sup_ratio = u;
                    argmax = pts[i];
                }
                if u > bound + tol {
                    violations.push((pts[i], u));
                }
            }
        }
    }
    Ok(SchwarzReport {
        sup_ratio,
        bound,
        argmax,
        violations,
        samples: pts.len(),
        skipped,
        k1_observed,
        k2_observed,
    })
}

fn source_radius(m: &MetricSpec) -> f64 {
    match m.domain {
        Domain::Polydisc { radius } | Domain::Ball { radius } => radius,
        Domain::Whole => 1.0,
    }
}

/// Seeded self-map of the unit disc: a polynomial with `Σ|c_k| ≤ 0.95` of
/// degree at most 4, pre- and post-composed with disc automorphisms.
pub fn random_self_map(seed: u64, index: u64) -> DiscMap {
    let mut r = rng::stream(seed, index);
    let degree = r.random_range(1..=4usize);
    let mut poly: Vec<Complex64> = (0..=degree)
        .map(|_| c(r.random::<f64>() * 2.0 - 1.0, r.random::<f64>() * 2.0 - 1.0))
        .collect();
    let total: f64 = poly.iter().map(|x| x.norm()).sum();
    let budget = 0.95 * r.random::<f64>().max(0.2);
    for x in poly.iter_mut() {
        *x *= budget / total;
    }
    let disc_point = |r: &mut rand_chacha::ChaCha8Rng| {
        let rho = 0.7 * r.random::<f64>().sqrt();
        Complex64::from_polar(rho, std::f64::consts::TAU * r.random::<f64>())
    };
    let a = disc_point(&mut r);
    let b = disc_point(&mut r);
    DiscMap::composed(a, poly, b)
}

/// Seeded automorphism of the unit disc.
pub fn random_automorphism(seed: u64, index: u64) -> DiscMap {
    let mut r = rng::stream(seed, index);
    let rho = 0.7 * r.random::<f64>().sqrt();
    let a = Complex64::from_polar(rho, std::f64::consts::TAU * r.random::<f64>());
    DiscMap::automorphism(a, std::f64::consts::TAU * r.random::<f64>())
}

/// Disc families used for the Kobayashi upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Families {
    pub affine: bool,
    pub automorphism: bool,
    pub polynomial: bool,
}

impl Families {
    pub const ALL: Families = Families {
        affine: true,
        automorphism: true,
        polynomial: true,
    };
}

#[derive(Clone, Copy, Debug)]
pub struct KobayashiOptions {
    pub families: Families,
    /// Coordinate-search evaluations for the polynomial family.
    pub budget: usize,
    /// Points used to certify the curvature bound.
    pub certify_samples: usize,
    pub seed: u64,
}

impl Default for KobayashiOptions {
    fn default() -> Self {
        KobayashiOptions {
            families: Families::ALL,
            budget: 200,
            certify_samples: 64,
            seed: 0x6b6f6261,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KobayashiEstimate {
    pub z: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub upper: f64,
    pub lower: Option<f64>,
    pub family_size: usize,
    pub best_family: String,
}

/// `sup_w |φ(w)|`-style margin of a point to the boundary of `domain`.
fn boundary_margin(domain: Domain, z: &[Complex64]) -> f64 {
    match domain {
        Domain::Whole => f64::INFINITY,
        Domain::Polydisc { radius } => z.iter().map(|x| radius - x.norm()).fold(f64::INFINITY, f64::min),
        Domain::Ball { radius } => radius - z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(),
    }
}

/// Conservative check that the polynomial disc maps `|w| ≤ r` into the
/// domain: boundary samples must clear the boundary by the distance the map
/// can travel between neighbouring samples.
fn polynomial_disc_fits(domain: Domain, coeffs: &[Vec<Complex64>], r: f64) -> bool {
    const M: usize = 256;
    // Lipschitz bound for w ↦ φ(w) on |w| = r
    let lip: f64 = coeffs
        .iter()
        .map(|p| p.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a.norm() * r.powi(k as i32 - 1)).sum::<f64>())
        .sum();
    let slack = lip * std::f64::consts::PI * r / M as f64;
    let mut z = vec![c(0.0, 0.0); coeffs.len()];
    for j in 0..M {
        let w = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / M as f64);
        for (zi, p) in z.iter_mut().zip(coeffs) {
            let mut acc = c(0.0, 0.0);
            for a in p.iter().rev() {
                acc = acc * w + a;
            }
            *zi = acc;
        }
        if boundary_margin(domain, &z) <= slack {
            return false;
        }
    }
    true
}

/// Largest radius (multiplicative growth, then bisection) on which the
/// polynomial disc is certified to stay inside the domain.
fn polynomial_disc_radius(domain: Domain, coeffs: &[Vec<Complex64>], start: f64) -> f64 {
    if matches!(domain, Domain::Whole) {
        return f64::INFINITY;
    }
    let mut lo: f64;
    let mut hi = start.max(1e-12);
    if polynomial_disc_fits(domain, coeffs, hi) {
        lo = hi;
        hi *= 2.0;
        while polynomial_disc_fits(domain, coeffs, hi) {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
    } else {
        while !polynomial_disc_fits(domain, coeffs, hi / 2.0) {
            hi /= 2.0;
            if hi < 1e-300 {
                return 0.0;
            }
        }
        lo = hi / 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if polynomial_disc_fits(domain, coeffs, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Radius of the affine disc `z + v w` inside the domain.
fn affine_radius(domain: Domain, z: &[Complex64], v: &[Complex64]) -> f64 {
    match domain {
        Domain::Whole => f64::INFINITY,
        Domain::Polydisc { radius } => z
            .iter()
            .zip(v)
            .filter(|(_, vi)| vi.norm() > 0.0)
            .map(|(zi, vi)| (radius - zi.norm()) / vi.norm())
            .fold(f64::INFINITY, f64::min),
        Domain::Ball { radius } => {
            // max over |w| = r of |z + v w| is sqrt(|z|² + r²|v|² + 2r|⟨z,v⟩|)
            let zz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
            let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            let zv = z.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<Complex64>().norm();
            // vv r² + 2 zv r + zz − R² = 0
            let disc = zv * zv - vv * (zz - radius * radius);
            (-zv + disc.sqrt()) / vv
        }
    }
}

/// Exact Kobayashi metric of the model domains, realised by the extremal
/// disc `ζ ↦ Φ_z(ζ e)` for an automorphism `Φ_z` with `Φ_z(0) = z`.
pub fn model_kobayashi(domain: Domain, z: &[Complex64], v: &[Complex64]) -> Option<f64> {
    match domain {
        Domain::Whole => None,
        Domain::Polydisc { radius } => Some(
            z.iter()
                .zip(v)
                .map(|(zi, vi)| radius * vi.norm() / (radius * radius - zi.norm_sqr()))
                .fold(0.0, f64::max),
        ),
        Domain::Ball { radius } => {
            let d = 1.0 - z.iter().map(|x| x.norm_sqr()).sum::<f64>() / (radius * radius);
            let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>() / (radius * radius);
            let zv = z.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<Complex64>().norm() / (radius * radius);
            Some((vv / d + zv * zv / (d * d)).sqrt())
        }
    }
}

/// The extremal disc of [`model_kobayashi`] on the radius `1/k`, with
/// `φ(0) = z` and `φ'(0) = v`.
pub fn model_extremal_disc(domain: Domain, z: &[Complex64], v: &[Complex64]) -> Option<DiscMap> {
    let k = model_kobayashi(domain, z, v)?;
    if k <= 0.0 {
        return None;
    }
    let n = z.len();
    let (zc, vc) = (z.to_vec(), v.to_vec());
    match domain {
        Domain::Polydisc { radius } => Some(DiscMap::from_fn("polydisc automorphism", 1.0 / k, n, move |w: &CJet| {
            (0..n)
                .map(|i| {
                    let a = zc[i] / radius;
                    // R·M_a(ζ c_i) with c_i chosen so the derivative at 0 is v_i
                    let ci = vc[i] / (radius * (1.0 - a.norm_sqr()));
                    mobius(a, &w.mul_c(ci)).scale(radius)
                })
                .collect()
        })),
        Domain::Ball { radius } => {
            let a: Vec<Complex64> = zc.iter().map(|x| x / radius).collect();
            let aa: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            let s = (1.0 - aa).sqrt();
            // e = dΦ_a(0)⁻¹ (v/R) = −P_a v/(1−|a|²) − Q_a v/s
            let vr: Vec<Complex64> = vc.iter().map(|x| x / radius).collect();
            let proj = |x: &[Complex64]| -> Vec<Complex64> {
                if aa == 0.0 {
                    return vec![c(0.0, 0.0); n];
                }
                let ip: Complex64 = x.iter().zip(&a).map(|(p, q)| p * q.conj()).sum();
                a.iter().map(|q| q * ip / aa).collect()
            };
            let pv = proj(&vr);
            let e: Vec<Complex64> = (0..n).map(|i| -pv[i] / (1.0 - aa) - (vr[i] - pv[i]) / s).collect();
            Some(DiscMap::from_fn("ball automorphism", 1.0 / k, n, move |w: &CJet| {
                // x = w e, Φ_a(x) = (a − P_a x − s Q_a x)/(1 − ⟨x, a⟩)
                let x: Vec<CJet> = e.iter().map(|ei| w.mul_c(*ei)).collect();
                let mut ip = w.zero_like();
                for (xi, ai) in x.iter().zip(&a) {
                    ip = &ip + &xi.mul_c(ai.conj());
                }
                let denom = (-&ip).add_c(c(1.0, 0.0));
                (0..n)
                    .map(|i| {
                        let px = if aa == 0.0 { w.zero_like() } else { ip.mul_c(a[i] / aa) };
                        let qx = &x[i] - &px;
                        let num = (&(-&px) - &qx.scale(s)).add_c(a[i]);
                        num.div(&denom).scale(radius)
                    })
                    .collect()
            }))
        }
        Domain::Whole => None,
    }
}

/// Certifies `sup K_G ≤ k2` at seeded sample points of the metric's domain.
pub fn certify_upper_curvature(metric: &MetricSpec, k2: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for i in 0..samples {
        let (z, v) = rng::sample_point(metric, seed, i as u64);
        sup = sup.max(finsler::hsc(metric, &z, &v)?);
    }
    if sup > k2 + 1e-8 * (1.0 + k2.abs()) {
        return Err(FinslerError::BoundsNotCertified(format!(
            "{}: sampled curvature {sup} exceeds the upper bound {k2}",
            metric.name
        )));
    }
    Ok(sup)
}

/// Two-sided estimate of the Kobayashi metric of `domain` at `(z, v)`.
pub fn kobayashi_estimate(
    domain: Domain,
    z: &[Complex64],
    v: &[Complex64],
    g1: &MetricSpec,
    k2: Option<f64>,
    opts: KobayashiOptions,
) -> Result<KobayashiEstimate> {
    if !domain.contains(z) {
        return Err(FinslerError::Domain {
            metric: g1.name.clone(),
            detail: format!("z = {z:?} not in {domain}"),
        });
    }
    if v.iter().all(|x| x.norm_sqr() == 0.0) {
        return Err(FinslerError::Invalid("v = 0".into()));
    }
    let lower = match k2 {
        Some(k2) => {
            if !(k2 < 0.0) {
                return Err(FinslerError::Invalid(format!("K2 must be negative, got {k2}")));
            }
            certify_upper_curvature(g1, k2, opts.certify_samples, opts.seed)?;
            Some((-k2 * g1.value(z, v) / 4.0).sqrt())
        }
        None => None,
    };

    let mut upper = f64::INFINITY;
    let mut best_family = String::from("none");
    let mut family_size = 0;
    let mut consider = |u: f64, label: &str, upper: &mut f64| {
        family_size += 1;
        if u < *upper {
            *upper = u;
            best_family = label.to_string();
        }
    };
    if opts.families.affine {
        let r = affine_radius(domain, z, v);
        consider(1.0 / r, "affine", &mut upper);
    }
    if opts.families.automorphism {
        if let Some(k) = model_kobayashi(domain, z, v) {
            consider(k, "automorphism", &mut upper);
        }
    }
    if opts.families.polynomial && !matches!(domain, Domain::Whole) {
        let n = z.len();
        let start = affine_radius(domain, z, v);
        let coeffs_of = |b: &[Complex64]| -> Vec<Vec<Complex64>> {
            (0..n).map(|i| vec![z[i], v[i], b[i], b[n + i], b[2 * n + i]]).collect()
        };
        let mut b = vec![c(0.0, 0.0); 3 * n];
        let mut best_r = polynomial_disc_radius(domain, &coeffs_of(&b), start);
        let vnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut step = 0.25 * vnorm / start.max(1e-12);
        let mut evals = 1;
        while evals < opts.budget && step > 1e-10 * vnorm {
            let mut improved = false;
            for comp in 0..6 * n {
                for sign in [1.0, -1.0] {
                    if evals >= opts.budget {
                        break;
                    }
                    let mut trial = b.clone();
                    let d = if comp % 2 == 0 { c(sign * step, 0.0) } else { c(0.0, sign * step) };
                    trial[comp / 2] += d;
                    evals += 1;
                    let r = polynomial_disc_radius(domain, &coeffs_of(&trial), best_r);
                    if r > best_r {
                        best_r = r;
                        b = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        consider(1.0 / best_r, "polynomial", &mut upper);
    }
    Ok(KobayashiEstimate {
        z: z.to_vec(),
        v: v.to_vec(),
        upper,
        lower,
        family_size,
        best_family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn identity_disc_has_poincare_curvature() {
        let p = catalog::poincare_disc(1.0);
        let k = pullback_gauss_curvature(&DiscMap::identity(1.0), &p, c(0.2, 0.0)).unwrap();
        assert!((k + 4.0).abs() < 1e-12);
    }

    #[test]
    fn half_disc_curvature_is_above_minus_four() {
        let p = catalog::poincare_disc(1.0);
        let half = DiscMap::polynomial(1.0, vec![vec![c(0.0, 0.0), c(0.5, 0.0)]]);
        let k = pullback_gauss_curvature(&half, &p, c(0.0, 0.0)).unwrap();
        // pullback is the Poincaré metric of the radius-2 disc scaled: K = −4 at every point
        assert!(k >= -4.0 - 1e-12, "{k}");
        let sq = DiscMap::polynomial(1.0, vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(
            pullback_gauss_curvature(&sq, &p, c(0.0, 0.0)),
            Err(FinslerError::DegeneratePullback { .. })
        ));
    }

    #[test]
    fn flat_target_gives_zero() {
        let e = catalog::euclidean(2);
        let f = DiscMap::polynomial(1.0, vec![vec![c(0.1, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 2.0)]]);
        assert!(pullback_gauss_curvature(&f, &e, c(0.3, 0.1)).unwrap().abs() < 1e-13);
    }

    #[test]
    fn disc_search_matches_hsc() {
        let p = catalog::poincare_disc(1.0);
        let k = hsc_via_discs(&p, &[c(0.3, 0.0)], &[c(1.0, 0.0)], DiscSearch::default()).unwrap();
        assert!((k + 4.0).abs() < 1e-4);
        let f = catalog::fubini_study(1);
        let k = hsc_via_discs(&f, &[c(0.0, 0.0)], &[c(1.0, 0.0)], DiscSearch::default()).unwrap();
        assert!((k - 4.0).abs() < 1e-4);
    }

    #[test]
    fn schwarz_identity_and_square() {
        let p = catalog::poincare_disc(1.0);
        let rep = schwarz_check(&DiscMap::identity(1.0), &p, &p, -4.0, -4.0, Grid::default(), 1e-9, Execution::Sequential)
            .unwrap();
        assert!((rep.sup_ratio - 1.0).abs() < 1e-12);
        let sq = DiscMap::polynomial(1.0, vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]]);
        let rep = schwarz_check(&sq, &p, &p, -4.0, -4.0, Grid::default(), 1e-9, Execution::Sequential).unwrap();
        assert!(rep.sup_ratio <= 1.0);
        assert!(rep.violations.is_empty());
        assert_eq!(rep.skipped, 1);
    }

    #[test]
    fn automorphism_is_an_isometry() {
        let p = catalog::poincare_disc(1.0);
        let f = DiscMap::automorphism(c(0.4, 0.0), 0.0);
        let rep = schwarz_check(&f, &p, &p, -4.0, -4.0, Grid::default(), 1e-9, Execution::Sequential).unwrap();
        assert!((rep.sup_ratio - 1.0).abs() < 1e-8, "{}", rep.sup_ratio);
    }

    #[test]
    fn wrong_bounds_are_not_certified() {
        let p = catalog::poincare_disc(1.0);
        let err = schwarz_check(&DiscMap::identity(1.0), &p, &p, -3.0, -4.0, Grid::default(), 1e-9, Execution::Sequential)
            .unwrap_err();
        assert!(matches!(err, FinslerError::BoundsNotCertified(_)));
    }

    #[test]
    fn kobayashi_on_the_disc() {
        let p = catalog::poincare_disc(1.0);
        let d = Domain::Polydisc { radius: 1.0 };
        for v in [c(1.0, 0.0), c(2.0, 0.0), c(0.3, -0.4)] {
            let e = kobayashi_estimate(d, &[c(0.0, 0.0)], &[v], &p, Some(-4.0), KobayashiOptions::default()).unwrap();
            assert!((e.upper - v.norm()).abs() < 1e-9);
            assert!((e.lower.unwrap() - v.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn polydisc_coordinate_disc() {
        let p = catalog::poincare_polydisc(2, 1.0);
        let d = Domain::Polydisc { radius: 1.0 };
        let e = kobayashi_estimate(d, &[c(0.0, 0.0); 2], &[c(1.0, 0.0), c(0.0, 0.0)], &p, None, KobayashiOptions::default())
            .unwrap();
        assert!((e.upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn extremal_discs_realise_the_model_metric() {
        let z = [c(0.3, -0.2), c(0.1, 0.4)];
        let v = [c(0.5, 0.1), c(-0.2, 0.7)];
        for d in [Domain::Polydisc { radius: 1.0 }, Domain::Ball { radius: 1.0 }, Domain::Polydisc { radius: 2.0 }] {
            let disc = model_extremal_disc(d, &z, &v).unwrap();
            let f0 = disc.value(c(0.0, 0.0));
            let d0 = disc.derivative(c(0.0, 0.0));
            for i in 0..2 {
                assert!((f0[i] - z[i]).norm() < 1e-12);
                assert!((d0[i] - v[i]).norm() < 1e-12);
            }
            for j in 0..64 {
                let w = Complex64::from_polar(disc.radius * (1.0 - 1e-6), j as f64 * 0.1);
                assert!(d.contains(&disc.value(w)), "{d}");
            }
        }
    }

    #[test]
    fn ball_kobayashi_equals_metric_norm() {
        let b = catalog::ball_hyperbolic(2);
        let z = [c(0.3, -0.2), c(0.1, 0.4)];
        let v = [c(0.5, 0.1), c(-0.2, 0.7)];
        let k = model_kobayashi(Domain::Ball { radius: 1.0 }, &z, &v).unwrap();
        assert!((k * k - b.value(&z, &v)).abs() < 1e-12);
    }
}
