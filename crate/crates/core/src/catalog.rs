//! Finsler metrics as jet-computable evaluators plus metadata.
//!
//! Every metric is a closure `G(z, v)` over complex jets, so the same code
//! path yields plain values (order-0 jets) and exact Taylor expansions. The
//! catalog covers Hermitian metrics given by a matrix field, Minkowski-type
//! `ℓ^p` norms, conformal rescalings, holomorphic pullbacks and a quartic
//! perturbation that is not Hermitian.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{FinslerError, Result};
use crate::jet::{self, CJet, Jet, WirtingerIndex};

pub type MetricFn = Arc<dyn Fn(&[CJet], &[CJet]) -> Jet + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[CJet]) -> Jet + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[CJet]) -> Vec<Vec<CJet>> + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&[CJet]) -> Vec<CJet> + Send + Sync>;
pub type ClosedFormFn = Arc<dyn Fn(&[Complex64], &[Complex64]) -> Complex64 + Send + Sync>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-chart domain in `C^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Whole,
    Polydisc { radius: f64 },
    Ball { radius: f64 },
}

impl Domain {
    pub fn contains(&self, z: &[Complex64]) -> bool {
        match *self {
            Domain::Whole => z.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
            Domain::Polydisc { radius } => z.iter().all(|x| x.norm() < radius),
            Domain::Ball { radius } => z.iter().map(|x| x.norm_sqr()).sum::<f64>() < radius * radius,
        }
    }

    /// Uniform sample in the concentric sub-domain scaled by `frac` (for
    /// `Whole`, `frac` is the radius of the per-coordinate disc).
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, frac: f64, rng: &mut R) -> Vec<Complex64> {
        let disc = |rng: &mut R, r: f64| {
            let rho = r * rng.random::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.random::<f64>();
            Complex64::from_polar(rho, t)
        };
        match *self {
            Domain::Whole => (0..dim).map(|_| disc(rng, frac)).collect(),
            Domain::Polydisc { radius } => (0..dim).map(|_| disc(rng, frac * radius)).collect(),
            Domain::Ball { radius } => {
                // rejection from the polydisc keeps the draw order simple
                loop {
                    let z: Vec<Complex64> = (0..dim).map(|_| disc(rng, frac * radius)).collect();
                    let r2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
                    if r2 < (frac * radius).powi(2) {
                        return z;
                    }
                }
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Whole => write!(f, "C^n"),
            Domain::Polydisc { radius } => write!(f, "polydisc(r={radius})"),
            Domain::Ball { radius } => write!(f, "ball(r={radius})"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricFlags {
    pub is_hermitian: bool,
    pub z_independent: bool,
    /// F2 may fail (e.g. pullbacks by maps whose derivative drops rank).
    pub may_degenerate: bool,
}

/// A closed-form expression for one Wirtinger derivative of `G`.
#[derive(Clone)]
pub struct ClosedForm {
    pub label: String,
    pub index: WirtingerIndex,
    pub eval: ClosedFormFn,
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedForm({})", self.label)
    }
}

/// Real-valued function of `(z, z̄)`.
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    pub eval: ScalarFn,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[CJet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn zero() -> Self {
        ScalarField::new("zero", |z: &[CJet]| z[0].re.lift(0.0))
    }

    pub fn constant(value: f64) -> Self {
        ScalarField::new(format!("const:{value}"), move |z: &[CJet]| z[0].re.lift(value))
    }

    /// `Re z¹`
    pub fn re_z1() -> Self {
        ScalarField::new("re_z1", |z: &[CJet]| z[0].re.clone())
    }

    /// `Im z¹`
    pub fn im_z1() -> Self {
        ScalarField::new("im_z1", |z: &[CJet]| z[0].im.clone())
    }

    /// `|z|²`
    pub fn abs2() -> Self {
        ScalarField::new("abs2", |z: &[CJet]| jet::norm_sqr(z))
    }

    /// Parses `zero`, `re_z1`, `im_z1`, `abs2`, `const:<c>`, `<c>*<field>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some((k, rest)) = t.split_once('*') {
            let k: f64 = k
                .trim()
                .parse()
                .map_err(|_| FinslerError::Config(format!("bad scalar field factor in '{t}'")))?;
            let inner = ScalarField::parse(rest)?;
            let f = inner.eval.clone();
            return Ok(ScalarField::new(t.to_string(), move |z: &[CJet]| f(z).scale(k)));
        }
        match t {
            "zero" | "0" => Ok(ScalarField::zero()),
            "re_z1" => Ok(ScalarField::re_z1()),
            "im_z1" => Ok(ScalarField::im_z1()),
            "abs2" => Ok(ScalarField::abs2()),
            _ => {
                if let Some(v) = t.strip_prefix("const:") {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| FinslerError::Config(format!("bad constant in '{t}'")))?;
                    Ok(ScalarField::constant(v))
                } else {
                    Err(FinslerError::Config(format!("unknown scalar field '{t}'")))
                }
            }
        }
    }
}

/// Hermitian matrix field `z ↦ (h_{ij̄}(z))`.
#[derive(Clone)]
pub struct HermitianField {
    pub name: String,
    pub dim: usize,
    pub domain: Domain,
    pub eval: MatrixFn,
}

impl fmt::Debug for HermitianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianField({}, n={})", self.name, self.dim)
    }
}

impl HermitianField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        domain: Domain,
        eval: impl Fn(&[CJet]) -> Vec<Vec<CJet>> + Send + Sync + 'static,
    ) -> Self {
        HermitianField {
            name: name.into(),
            dim,
            domain,
            eval: Arc::new(eval),
        }
    }

    /// Plain matrix at `z`.
    pub fn at(&self, z: &[Complex64]) -> nalgebra::DMatrix<Complex64> {
        let zz: Vec<CJet> = z.iter().map(|&x| CJet::scalar(x)).collect();
        let m = (self.eval)(&zz);
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| m[i][j].value())
    }

    pub fn identity(n: usize) -> Self {
        HermitianField::new("identity", n, Domain::Whole, move |z: &[CJet]| {
            diag(z, (0..n).map(|_| z[0].re.lift(1.0)).collect())
        })
    }

    /// `∂∂̄ log(1+|z|²)`, the Fubini–Study metric in the affine chart.
    pub fn fubini_study(n: usize) -> Self {
        HermitianField::new("fubini_study", n, Domain::Whole, move |z: &[CJet]| {
            let s = jet::norm_sqr(z) + 1.0;
            let inv = s.recip();
            let inv2 = &inv * &inv;
            let mut m = Vec::with_capacity(n);
            for i in 0..n {
                let mut row = Vec::with_capacity(n);
                for j in 0..n {
                    // δ_ij/s − z̄_i z_j / s²
                    let mut e = (&z[i].conj() * &z[j]).mul_real(&inv2).scale(-1.0);
                    if i == j {
                        e.re += &inv;
                    }
                    row.push(e);
                }
                m.push(row);
            }
            m
        })
    }

    /// Product of one-dimensional Fubini–Study factors `(1+|z_i|²)^{-2}`.
    pub fn fs_product(n: usize) -> Self {
        HermitianField::new("fs_product", n, Domain::Whole, move |z: &[CJet]| {
            diag(z, z.iter().map(|zi| (zi.norm_sqr() + 1.0).powi(2).recip()).collect())
        })
    }

    /// Product of Poincaré factors `r²/(r²−|z_i|²)²` on the polydisc.
    pub fn poincare_polydisc(n: usize, r: f64) -> Self {
        HermitianField::new(
            "poincare_polydisc",
            n,
            Domain::Polydisc { radius: r },
            move |z: &[CJet]| {
                let r2 = r * r;
                diag(
                    z,
                    z.iter()
                        .map(|zi| (r2 - zi.norm_sqr()).powi(2).recip() * r2)
                        .collect(),
                )
            },
        )
    }

    /// `∂∂̄(−log(1−|z|²))` on the unit ball.
    pub fn ball_hyperbolic(n: usize) -> Self {
        HermitianField::new("ball_hyperbolic", n, Domain::Ball { radius: 1.0 }, move |z: &[CJet]| {
            let d = 1.0 - jet::norm_sqr(z);
            let inv = d.recip();
            let inv2 = &inv * &inv;
            let mut m = Vec::with_capacity(n);
            for i in 0..n {
                let mut row = Vec::with_capacity(n);
                for j in 0..n {
                    let mut e = (&z[i].conj() * &z[j]).mul_real(&inv2);
                    if i == j {
                        e.re += &inv;
                    }
                    row.push(e);
                }
                m.push(row);
            }
            m
        })
    }

    /// `e^{φ(z)}` times the identity.
    pub fn conformal_identity(n: usize, phi: ScalarField) -> Self {
        let f = phi.eval.clone();
        HermitianField::new(format!("conformal_identity({})", phi.name), n, Domain::Whole, move |z: &[CJet]| {
            let w = f(z).exp();
            diag(z, (0..n).map(|_| w.clone()).collect())
        })
    }
}

fn diag(z: &[CJet], entries: Vec<Jet>) -> Vec<Vec<CJet>> {
    let n = entries.len();
    let zero = z[0].zero_like();
    let mut m = vec![vec![zero; n]; n];
    for (i, e) in entries.into_iter().enumerate() {
        m[i][i] = CJet::new(e.clone(), e.lift(0.0));
    }
    m
}

/// Holomorphic map `C^m ⊃ domain → C^k` with its exact Jacobian.
#[derive(Clone)]
pub struct HolomorphicMap {
    pub name: String,
    pub dim_in: usize,
    pub dim_out: usize,
    pub domain: Domain,
    pub map: MapFn,
    /// `jacobian(z)[a][b] = ∂f^a/∂z^b`
    pub jacobian: MatrixFn,
}

impl fmt::Debug for HolomorphicMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HolomorphicMap({}: C^{} -> C^{})", self.name, self.dim_in, self.dim_out)
    }
}

impl HolomorphicMap {
    pub fn new(
        name: impl Into<String>,
        dim_in: usize,
        dim_out: usize,
        domain: Domain,
        map: impl Fn(&[CJet]) -> Vec<CJet> + Send + Sync + 'static,
        jacobian: impl Fn(&[CJet]) -> Vec<Vec<CJet>> + Send + Sync + 'static,
    ) -> Self {
        HolomorphicMap {
            name: name.into(),
            dim_in,
            dim_out,
            domain,
            map: Arc::new(map),
            jacobian: Arc::new(jacobian),
        }
    }

    pub fn identity(n: usize, domain: Domain) -> Self {
        HolomorphicMap::new(
            "identity",
            n,
            n,
            domain,
            |z: &[CJet]| z.to_vec(),
            move |z: &[CJet]| {
                let one = z[0].lift(c(1.0, 0.0));
                let zero = z[0].zero_like();
                (0..n)
                    .map(|a| (0..n).map(|b| if a == b { one.clone() } else { zero.clone() }).collect())
                    .collect()
            },
        )
    }

    /// One-variable polynomial `Σ c_k w^k`.
    pub fn polynomial(coeffs: Vec<Complex64>, domain: Domain) -> Self {
        let dc: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| a * k as f64)
            .collect();
        let name = format!("poly{:?}", coeffs.iter().map(|x| (x.re, x.im)).collect::<Vec<_>>());
        HolomorphicMap::new(
            name,
            1,
            1,
            domain,
            move |z: &[CJet]| vec![horner(&coeffs, &z[0])],
            move |z: &[CJet]| vec![vec![horner(&dc, &z[0])]],
        )
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &HolomorphicMap) -> HolomorphicMap {
        assert_eq!(inner.dim_out, self.dim_in);
        let (fo, jo) = (self.map.clone(), self.jacobian.clone());
        let (fi, ji) = (inner.map.clone(), inner.jacobian.clone());
        let fo2 = fo.clone();
        let fi2 = fi.clone();
        HolomorphicMap {
            name: format!("{}∘{}", self.name, inner.name),
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            domain: inner.domain,
            map: Arc::new(move |z: &[CJet]| fo2(&fi2(z))),
            jacobian: Arc::new(move |z: &[CJet]| {
                let y = fi(z);
                let a = jo(&y);
                let b = ji(z);
                let rows = a.len();
                let cols = b[0].len();
                (0..rows)
                    .map(|r| {
                        (0..cols)
                            .map(|col| {
                                let mut acc = z[0].zero_like();
                                for (k, bk) in b.iter().enumerate() {
                                    acc = &acc + &(&a[r][k] * &bk[col]);
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            }),
        }
    }

    pub fn value(&self, z: &[Complex64]) -> Vec<Complex64> {
        let zz: Vec<CJet> = z.iter().map(|&x| CJet::scalar(x)).collect();
        (self.map)(&zz).iter().map(|x| x.value()).collect()
    }

    pub fn jacobian_at(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        let zz: Vec<CJet> = z.iter().map(|&x| CJet::scalar(x)).collect();
        (self.jacobian)(&zz)
            .iter()
            .map(|row| row.iter().map(|x| x.value()).collect())
            .collect()
    }

    /// Compares the Jacobian against central differences at `z`; returns the
    /// worst relative error.
    pub fn jacobian_fd_error(&self, z: &[Complex64], step: f64) -> f64 {
        let j = self.jacobian_at(z);
        let mut worst: f64 = 0.0;
        for b in 0..self.dim_in {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[b] += step;
            zm[b] -= step;
            let fp = self.value(&zp);
            let fm = self.value(&zm);
            for a in 0..self.dim_out {
                // holomorphic: ∂f/∂z = ∂f/∂x
                let fd = (fp[a] - fm[a]) / (2.0 * step);
                let err = (fd - j[a][b]).norm() / (1.0 + j[a][b].norm());
                worst = worst.max(err);
            }
        }
        worst
    }
}

pub(crate) fn horner(coeffs: &[Complex64], w: &CJet) -> CJet {
    let mut acc = w.lift(*coeffs.last().unwrap_or(&c(0.0, 0.0)));
    for a in coeffs.iter().rev().skip(1) {
        acc = (&acc * w).add_c(*a);
    }
    acc
}

/// A complex Finsler metric with metadata.
#[derive(Clone)]
pub struct MetricSpec {
    pub name: String,
    pub dim: usize,
    pub domain: Domain,
    pub flags: MetricFlags,
    evaluate: MetricFn,
    log_potential: Option<MetricFn>,
    pub overrides: Vec<ClosedForm>,
    /// The defining matrix field when the metric is Hermitian.
    pub hermitian: Option<HermitianField>,
    /// Radius (absolute for `Whole`, relative otherwise) used to draw test points.
    pub sample_frac: f64,
    /// Constant holomorphic sectional curvature, when known.
    pub known_hsc: Option<f64>,
    /// A certified `[lower, upper]` range for the holomorphic sectional curvature.
    pub hsc_range: Option<(f64, f64)>,
}

impl fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("flags", &self.flags)
            .finish()
    }
}

impl MetricSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        domain: Domain,
        flags: MetricFlags,
        evaluate: impl Fn(&[CJet], &[CJet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        MetricSpec {
            name: name.into(),
            dim,
            domain,
            flags,
            evaluate: Arc::new(evaluate),
            log_potential: None,
            overrides: Vec::new(),
            hermitian: None,
            sample_frac: if matches!(domain, Domain::Whole) { 1.0 } else { 0.7 },
            known_hsc: None,
            hsc_range: None,
        }
    }

    /// Evaluates `G` on jet arguments of any layout.
    pub fn eval(&self, z: &[CJet], v: &[CJet]) -> Jet {
        (self.evaluate)(z, v)
    }

    pub fn evaluator(&self) -> MetricFn {
        self.evaluate.clone()
    }

    /// `log G` up to a pluriharmonic summand, so with the same complex
    /// Hessian in `(z, v)` and in any fiber chart.
    pub fn log_potential(&self, z: &[CJet], v: &[CJet]) -> Jet {
        match &self.log_potential {
            Some(f) => f(z, v),
            None => self.eval(z, v).ln(),
        }
    }

    /// Supplies a better-conditioned potential than `ln(G)`.
    pub fn with_log_potential(mut self, f: impl Fn(&[CJet], &[CJet]) -> Jet + Send + Sync + 'static) -> Self {
        self.log_potential = Some(Arc::new(f));
        self
    }

    /// Plain value `G(z, v)`.
    pub fn value(&self, z: &[Complex64], v: &[Complex64]) -> f64 {
        let zz: Vec<CJet> = z.iter().map(|&x| CJet::scalar(x)).collect();
        let vv: Vec<CJet> = v.iter().map(|&x| CJet::scalar(x)).collect();
        self.eval(&zz, &vv).value()
    }

    pub fn check_point(&self, z: &[Complex64], v: &[Complex64]) -> Result<()> {
        if z.len() != self.dim || v.len() != self.dim {
            return Err(FinslerError::Invalid(format!(
                "{} expects dimension {}, got z:{} v:{}",
                self.name,
                self.dim,
                z.len(),
                v.len()
            )));
        }
        if !self.domain.contains(z) {
            return Err(FinslerError::Domain {
                metric: self.name.clone(),
                detail: format!("z = {z:?} not in {}", self.domain),
            });
        }
        if v.iter().all(|x| x.norm_sqr() == 0.0) {
            return Err(FinslerError::Domain {
                metric: self.name.clone(),
                detail: "v = 0 (zero section)".into(),
            });
        }
        Ok(())
    }

    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        self.domain.sample(self.dim, self.sample_frac, rng)
    }

    pub fn with_overrides(mut self, overrides: Vec<ClosedForm>) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn with_known_hsc(mut self, k: f64) -> Self {
        self.known_hsc = Some(k);
        self.hsc_range = Some((k, k));
        self
    }

    pub fn with_hsc_range(mut self, lo: f64, hi: f64) -> Self {
        self.hsc_range = Some((lo, hi));
        self
    }

    pub fn with_sample_frac(mut self, frac: f64) -> Self {
        self.sample_frac = frac;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// `G = h_{ij̄}(z) v^i v̄^j`.
pub fn hermitian_metric(h: HermitianField) -> MetricSpec {
    let f = h.eval.clone();
    let n = h.dim;
    let mut spec = MetricSpec::new(
        format!("hermitian({})", h.name),
        n,
        h.domain,
        MetricFlags {
            is_hermitian: true,
            ..Default::default()
        },
        move |z: &[CJet], v: &[CJet]| {
            let m = f(z);
            let mut acc = v[0].re.lift(0.0);
            for i in 0..n {
                for j in 0..n {
                    let t = &(&m[i][j] * &v[i]) * &v[j].conj();
                    acc += &t.re;
                }
            }
            acc
        },
    );
    spec.hermitian = Some(h);
    spec
}

fn idx(n: usize) -> WirtingerIndex {
    WirtingerIndex::zero(n)
}

pub fn euclidean(n: usize) -> MetricSpec {
    let mut m = hermitian_metric(HermitianField::identity(n))
        .renamed(format!("euclidean(n={n})"))
        .with_known_hsc(0.0);
    m.flags.z_independent = true;
    let mut ov = Vec::new();
    for i in 0..n {
        ov.push(ClosedForm {
            label: format!("G_v{i}"),
            index: idx(n).dv(i),
            eval: Arc::new(move |_z: &[Complex64], v: &[Complex64]| v[i].conj()),
        });
        for j in 0..n {
            ov.push(ClosedForm {
                label: format!("G_v{i}vbar{j}"),
                index: idx(n).dv(i).dvbar(j),
                eval: Arc::new(move |_z: &[Complex64], _v: &[Complex64]| {
                    if i == j {
                        c(1.0, 0.0)
                    } else {
                        c(0.0, 0.0)
                    }
                }),
            });
        }
    }
    m.with_overrides(ov)
}

/// Complete Poincaré metric `r²|v|²/(r²−|z|²)²` on the disc of radius `r`
/// (Gaussian curvature −4).
pub fn poincare_disc(r: f64) -> MetricSpec {
    let field = HermitianField::poincare_polydisc(1, r);
    let r2 = r * r;
    let d = move |z: &[Complex64]| r2 - z[0].norm_sqr();
    let ov = vec![
        ClosedForm {
            label: "G_v".into(),
            index: idx(1).dv(0),
            eval: Arc::new(move |z: &[Complex64], v: &[Complex64]| v[0].conj() * (r2 / d(z).powi(2))),
        },
        ClosedForm {
            label: "G_vvbar".into(),
            index: idx(1).dv(0).dvbar(0),
            eval: Arc::new(move |z: &[Complex64], _v: &[Complex64]| c(r2 / d(z).powi(2), 0.0)),
        },
        ClosedForm {
            label: "G_z".into(),
            index: idx(1).dz(0),
            eval: Arc::new(move |z: &[Complex64], v: &[Complex64]| {
                z[0].conj() * (2.0 * r2 * v[0].norm_sqr() / d(z).powi(3))
            }),
        },
        ClosedForm {
            label: "G_zzbar".into(),
            index: idx(1).dz(0).dzbar(0),
            eval: Arc::new(move |z: &[Complex64], v: &[Complex64]| {
                let dd = d(z);
                c(
                    2.0 * r2 * v[0].norm_sqr() * (1.0 / dd.powi(3) + 3.0 * z[0].norm_sqr() / dd.powi(4)),
                    0.0,
                )
            }),
        },
        ClosedForm {
            label: "G_zzbarvvbar".into(),
            index: idx(1).dz(0).dzbar(0).dv(0).dvbar(0),
            eval: Arc::new(move |z: &[Complex64], _v: &[Complex64]| {
                let dd = d(z);
                c(2.0 * r2 * (1.0 / dd.powi(3) + 3.0 * z[0].norm_sqr() / dd.powi(4)), 0.0)
            }),
        },
    ];
    hermitian_metric(field)
        .renamed(format!("poincare_disc(r={r})"))
        .with_known_hsc(-4.0)
        .with_overrides(ov)
}

pub fn poincare_polydisc(n: usize, r: f64) -> MetricSpec {
    hermitian_metric(HermitianField::poincare_polydisc(n, r))
        .renamed(format!("poincare_polydisc(n={n},r={r})"))
        .with_hsc_range(-4.0, -4.0 / n as f64)
}

pub fn ball_hyperbolic(n: usize) -> MetricSpec {
    hermitian_metric(HermitianField::ball_hyperbolic(n))
        .renamed(format!("ball_hyperbolic(n={n})"))
        .with_known_hsc(-4.0)
}

pub fn fubini_study(n: usize) -> MetricSpec {
    let mut m = hermitian_metric(HermitianField::fubini_study(n))
        .renamed(format!("fubini_study(n={n})"))
        .with_known_hsc(4.0);
    if n == 1 {
        let e = |z: &[Complex64]| 1.0 + z[0].norm_sqr();
        m.overrides = vec![
            ClosedForm {
                label: "G_vvbar".into(),
                index: idx(1).dv(0).dvbar(0),
                eval: Arc::new(move |z: &[Complex64], _v: &[Complex64]| c(e(z).powi(-2), 0.0)),
            },
            ClosedForm {
                label: "G_z".into(),
                index: idx(1).dz(0),
                eval: Arc::new(move |z: &[Complex64], v: &[Complex64]| {
                    z[0].conj() * (-2.0 * v[0].norm_sqr() * e(z).powi(-3))
                }),
            },
            ClosedForm {
                label: "G_zzbar".into(),
                index: idx(1).dz(0).dzbar(0),
                eval: Arc::new(move |z: &[Complex64], v: &[Complex64]| {
                    let ee = e(z);
                    c(
                        -2.0 * v[0].norm_sqr() * (ee.powi(-3) - 3.0 * z[0].norm_sqr() * ee.powi(-4)),
                        0.0,
                    )
                }),
            },
        ];
    }
    m
}

pub fn fs_product(n: usize) -> MetricSpec {
    hermitian_metric(HermitianField::fs_product(n))
        .renamed(format!("fs_product(n={n})"))
        .with_hsc_range(4.0 / n as f64, 4.0)
}

/// `G = (Σ_i |v^i|^{2p})^{1/p}` for an integer `p >= 1`.
pub fn minkowski_p(n: usize, p: f64) -> Result<MetricSpec> {
    if n == 0 {
        return Err(FinslerError::Invalid("dimension must be >= 1".into()));
    }
    if p < 1.0 || p.fract() != 0.0 || !p.is_finite() {
        return Err(FinslerError::Invalid(format!(
            "minkowski exponent must be an integer >= 1, got {p}"
        )));
    }
    let pi = p as u32;
    let mut m = MetricSpec::new(
        format!("minkowski(n={n},p={pi})"),
        n,
        Domain::Whole,
        MetricFlags {
            is_hermitian: pi == 1,
            z_independent: true,
            may_degenerate: false,
        },
        move |_z: &[CJet], v: &[CJet]| {
            let mut s = v[0].re.lift(0.0);
            for vi in v {
                s += vi.norm_sqr().powi(pi);
            }
            if pi == 1 {
                s
            } else {
                s.powf(1.0 / pi as f64)
            }
        },
    );
    if pi == 1 {
        m.hermitian = Some(HermitianField::identity(n));
        m.known_hsc = Some(0.0);
        m.hsc_range = Some((0.0, 0.0));
    }
    // zero curvature: z-independent
    m.hsc_range = Some((0.0, 0.0));
    m.known_hsc = Some(0.0);
    if pi > 1 {
        // log G − log|v_m|² = (1/p) log Σ (|v_i|²/|v_m|²)^p with |v_m| largest
        m = m.with_log_potential(move |_z: &[CJet], v: &[CJet]| {
            let big = (0..v.len())
                .max_by(|&a, &b| v[a].value().norm_sqr().total_cmp(&v[b].value().norm_sqr()))
                .unwrap_or(0);
            let inv = v[big].norm_sqr().recip();
            let mut s = v[0].re.lift(1.0);
            for (i, vi) in v.iter().enumerate() {
                if i != big {
                    s += (&vi.norm_sqr() * &inv).powi(pi);
                }
            }
            s.ln().scale(1.0 / pi as f64)
        });
    }
    let pf = pi as f64;
    let mut ov = Vec::new();
    for i in 0..n {
        for j in 0..n {
            ov.push(ClosedForm {
                label: format!("G_v{i}vbar{j}"),
                index: idx(n).dv(i).dvbar(j),
                eval: Arc::new(move |_z: &[Complex64], v: &[Complex64]| {
                    let s: f64 = v.iter().map(|x| x.norm_sqr().powf(pf)).sum();
                    let ai = v[i].norm_sqr().powf(pf - 1.0);
                    let aj = v[j].norm_sqr().powf(pf - 1.0);
                    let mut out = v[i].conj() * v[j] * ((1.0 - pf) * s.powf(1.0 / pf - 2.0) * ai * aj);
                    if i == j {
                        out += pf * s.powf(1.0 / pf - 1.0) * ai;
                    }
                    out
                }),
            });
        }
    }
    Ok(m.with_overrides(ov))
}

/// `G'(z, v) = e^{φ(z)} G(z, v)`.
pub fn conformal(base: &MetricSpec, phi: ScalarField) -> MetricSpec {
    let g = base.evaluator();
    let f = phi.eval.clone();
    let mut m = MetricSpec::new(
        format!("conformal({}, {})", base.name, phi.name),
        base.dim,
        base.domain,
        MetricFlags {
            is_hermitian: base.flags.is_hermitian,
            z_independent: base.flags.z_independent && phi.name == "zero",
            may_degenerate: base.flags.may_degenerate,
        },
        move |z: &[CJet], v: &[CJet]| &f(z).exp() * &g(z, v),
    );
    if base.log_potential.is_some() {
        let lg = base.clone();
        let f = phi.eval.clone();
        m = m.with_log_potential(move |z: &[CJet], v: &[CJet]| &f(z) + &lg.log_potential(z, v));
    }
    if let Some(h) = &base.hermitian {
        let hf = h.eval.clone();
        let ff = phi.eval.clone();
        m.hermitian = Some(HermitianField::new(
            format!("e^({})·{}", phi.name, h.name),
            h.dim,
            h.domain,
            move |z: &[CJet]| {
                let w = ff(z).exp();
                hf(z)
                    .into_iter()
                    .map(|row| row.into_iter().map(|e| e.mul_real(&w)).collect())
                    .collect()
            },
        ));
    }
    m.sample_frac = base.sample_frac;
    m
}

/// `(f^*G)(z, v) = G(f(z), f'(z) v)`. The Jacobian is checked against
/// finite differences at a few points of the source domain.
pub fn pullback(target: &MetricSpec, f: &HolomorphicMap) -> Result<MetricSpec> {
    if f.dim_out != target.dim {
        return Err(FinslerError::Invalid(format!(
            "map lands in C^{} but {} lives on C^{}",
            f.dim_out, target.name, target.dim
        )));
    }
    let mut rng = crate::rng::stream(0x005e_ed0f_u64, 0);
    let frac = if matches!(f.domain, Domain::Whole) { 1.0 } else { 0.6 };
    for _ in 0..4 {
        let z = f.domain.sample(f.dim_in, frac, &mut rng);
        let err = f.jacobian_fd_error(&z, 1e-5);
        if err > 1e-6 {
            return Err(FinslerError::JacobianMismatch { error: err });
        }
    }
    let g = target.evaluator();
    let map = f.map.clone();
    let jac = f.jacobian.clone();
    let k = f.dim_out;
    let mut m = MetricSpec::new(
        format!("pullback({}, {})", target.name, f.name),
        f.dim_in,
        f.domain,
        MetricFlags {
            is_hermitian: target.flags.is_hermitian,
            z_independent: false,
            may_degenerate: true,
        },
        move |z: &[CJet], v: &[CJet]| {
            let y = map(z);
            let j = jac(z);
            let w: Vec<CJet> = (0..k)
                .map(|a| {
                    let mut acc = v[0].zero_like();
                    for (b, vb) in v.iter().enumerate() {
                        acc = &acc + &(&j[a][b] * vb);
                    }
                    acc
                })
                .collect();
            g(&y, &w)
        },
    );
    if let Some(h) = &target.hermitian {
        let hf = h.eval.clone();
        let map = f.map.clone();
        let jac = f.jacobian.clone();
        let n = f.dim_in;
        m.hermitian = Some(HermitianField::new(
            format!("pullback({})", h.name),
            n,
            f.domain,
            move |z: &[CJet]| {
                // J^T h(f(z)) J̄
                let hm = hf(&map(z));
                let j = jac(z);
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| {
                                let mut acc = z[0].zero_like();
                                for (p, hp) in hm.iter().enumerate() {
                                    for (q, hpq) in hp.iter().enumerate() {
                                        acc = &acc + &(&(&j[p][a] * hpq) * &j[q][b].conj());
                                    }
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            },
        ));
    }
    m.sample_frac = frac;
    Ok(m)
}

/// `G = |v|² + ε f(z) |v¹|⁴ / |v|²`, not Hermitian for `ε ≠ 0`.
pub fn perturbed_quartic(n: usize, eps: f64, f: ScalarField) -> Result<MetricSpec> {
    if n < 2 {
        return Err(FinslerError::Invalid("perturbed_quartic needs n >= 2".into()));
    }
    let ff = f.eval.clone();
    let is_zero = eps == 0.0;
    let mut m = MetricSpec::new(
        format!("perturbed_quartic(n={n},eps={eps},f={})", f.name),
        n,
        Domain::Whole,
        MetricFlags {
            is_hermitian: is_zero,
            z_independent: is_zero,
            may_degenerate: false,
        },
        move |z: &[CJet], v: &[CJet]| {
            let s = jet::norm_sqr(v);
            let a = v[0].norm_sqr();
            let q = &(&a * &a) / &s;
            &s + &(&ff(z) * &q).scale(eps)
        },
    );
    if is_zero {
        m.hermitian = Some(HermitianField::identity(n));
    }
    m.sample_frac = 1.0;
    Ok(m)
}

/// `(x, y) ↦ (x/2, (x² + y)/3)`: maps the unit bidisc into the unit ball.
pub fn bidisc_to_ball_map() -> HolomorphicMap {
    HolomorphicMap::new(
        "bidisc_to_ball",
        2,
        2,
        Domain::Polydisc { radius: 1.0 },
        |z: &[CJet]| {
            vec![
                z[0].scale(0.5),
                (&(&z[0] * &z[0]) + &z[1]).scale(1.0 / 3.0),
            ]
        },
        |z: &[CJet]| {
            let zero = z[0].zero_like();
            vec![
                vec![z[0].lift(c(0.5, 0.0)), zero],
                vec![z[0].scale(2.0 / 3.0), z[0].lift(c(1.0 / 3.0, 0.0))],
            ]
        },
    )
}

/// Named constructor plus parameters, as written in a run config.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecipe {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl MetricRecipe {
    pub fn new(name: &str, params: &[(&str, &str)]) -> Self {
        MetricRecipe {
            name: name.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| FinslerError::Config(format!("{}: parameter {key} = '{s}' is not a number", self.name))),
        }
    }

    fn int(&self, key: &str, default: usize) -> Result<usize> {
        let x = self.num(key, default as f64)?;
        if x < 1.0 || x.fract() != 0.0 {
            return Err(FinslerError::Config(format!(
                "{}: parameter {key} must be a positive integer",
                self.name
            )));
        }
        Ok(x as usize)
    }

    fn field(&self, key: &str, default: &str) -> Result<ScalarField> {
        ScalarField::parse(self.params.get(key).map(String::as_str).unwrap_or(default))
    }

    pub fn build(&self) -> Result<MetricSpec> {
        let known: &[&str] = match self.name.as_str() {
            "euclidean" | "fubini_study" | "fs_product" | "ball_hyperbolic" => &["n"],
            "poincare_disc" => &["r"],
            "poincare_polydisc" => &["n", "r"],
            "minkowski" => &["n", "p"],
            "conformal_minkowski" => &["n", "p", "phi"],
            "conformal_euclidean" => &["n", "phi"],
            "perturbed_quartic" => &["n", "eps", "f"],
            "pullback_ball" => &[],
            other => return Err(FinslerError::Config(format!("unknown metric '{other}'"))),
        };
        if let Some(bad) = self.params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(FinslerError::Config(format!(
                "metric {} has no parameter '{bad}'",
                self.name
            )));
        }
        let m = match self.name.as_str() {
            "euclidean" => euclidean(self.int("n", 2)?),
            "poincare_disc" => poincare_disc(self.num("r", 1.0)?),
            "poincare_polydisc" => poincare_polydisc(self.int("n", 2)?, self.num("r", 1.0)?),
            "ball_hyperbolic" => ball_hyperbolic(self.int("n", 2)?),
            "fubini_study" => fubini_study(self.int("n", 1)?),
            "fs_product" => fs_product(self.int("n", 2)?),
            "minkowski" => minkowski_p(self.int("n", 2)?, self.num("p", 2.0)?)?,
            "conformal_minkowski" => conformal(
                &minkowski_p(self.int("n", 2)?, self.num("p", 2.0)?)?,
                self.field("phi", "re_z1")?,
            ),
            "conformal_euclidean" => conformal(&euclidean(self.int("n", 2)?), self.field("phi", "abs2")?),
            "perturbed_quartic" => perturbed_quartic(
                self.int("n", 2)?,
                self.num("eps", 0.1)?,
                self.field("f", "re_z1")?,
            )?,
            "pullback_ball" => pullback(&ball_hyperbolic(2), &bidisc_to_ball_map())?,
            _ => unreachable!(),
        };
        Ok(m)
    }
}

impl fmt::Display for MetricRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Constructors known to the CLI: `(name, parameters with defaults, summary)`.
pub const CONSTRUCTORS: &[(&str, &str, &str)] = &[
    ("euclidean", "n=2", "flat |v|^2"),
    ("poincare_disc", "r=1", "complete Poincare metric r^2|v|^2/(r^2-|z|^2)^2, K=-4"),
    ("poincare_polydisc", "n=2 r=1", "product of Poincare discs, K in [-4,-4/n]"),
    ("ball_hyperbolic", "n=2", "ddbar(-log(1-|z|^2)) on the unit ball, K=-4"),
    ("fubini_study", "n=1", "Fubini-Study metric in the affine chart, K=4"),
    ("fs_product", "n=2", "product of one-dimensional Fubini-Study factors"),
    ("minkowski", "n=2 p=2", "(sum |v_i|^(2p))^(1/p), integer p"),
    ("conformal_minkowski", "n=2 p=2 phi=re_z1", "exp(phi(z)) * minkowski"),
    ("conformal_euclidean", "n=2 phi=abs2", "exp(phi(z)) * |v|^2"),
    ("perturbed_quartic", "n=2 eps=0.1 f=re_z1", "|v|^2 + eps f(z) |v1|^4/|v|^2"),
    ("pullback_ball", "", "ball_hyperbolic(2) pulled back to the bidisc by (x/2,(x^2+y)/3)"),
];

/// The metrics every property suite sweeps.
pub fn default_catalog() -> Vec<MetricRecipe> {
    vec![
        MetricRecipe::new("euclidean", &[("n", "2")]),
        MetricRecipe::new("poincare_disc", &[("r", "1")]),
        MetricRecipe::new("poincare_disc", &[("r", "2")]),
        MetricRecipe::new("poincare_polydisc", &[("n", "2")]),
        MetricRecipe::new("ball_hyperbolic", &[("n", "2")]),
        MetricRecipe::new("fubini_study", &[("n", "1")]),
        MetricRecipe::new("fubini_study", &[("n", "2")]),
        MetricRecipe::new("fs_product", &[("n", "2")]),
        MetricRecipe::new("minkowski", &[("n", "2"), ("p", "2")]),
        MetricRecipe::new("minkowski", &[("n", "3"), ("p", "2")]),
        MetricRecipe::new("minkowski", &[("n", "2"), ("p", "3")]),
        MetricRecipe::new("conformal_minkowski", &[("n", "2"), ("p", "2"), ("phi", "re_z1")]),
        MetricRecipe::new("conformal_euclidean", &[("n", "2"), ("phi", "abs2")]),
        MetricRecipe::new("perturbed_quartic", &[("n", "2"), ("eps", "0.1"), ("f", "re_z1")]),
        MetricRecipe::new("pullback_ball", &[]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[(f64, f64)]) -> Vec<Complex64> {
        xs.iter().map(|&(a, b)| c(a, b)).collect()
    }

    #[test]
    fn hermitian_identity_value() {
        let m = hermitian_metric(HermitianField::identity(2));
        assert_eq!(m.value(&v(&[(0.3, 0.1), (0.0, 0.0)]), &v(&[(1.0, 0.0), (0.0, 0.0)])), 1.0);
    }

    #[test]
    fn poincare_and_fs_at_origin() {
        assert_eq!(poincare_disc(1.0).value(&v(&[(0.0, 0.0)]), &v(&[(1.0, 0.0)])), 1.0);
        assert_eq!(fubini_study(1).value(&v(&[(0.0, 0.0)]), &v(&[(1.0, 0.0)])), 1.0);
    }

    #[test]
    fn minkowski_values() {
        let z = v(&[(0.5, -1.0), (2.0, 0.0)]);
        let e = euclidean(2);
        let m1 = minkowski_p(2, 1.0).unwrap();
        let w = v(&[(1.0, 0.5), (-0.3, 2.0)]);
        assert!((m1.value(&z, &w) - e.value(&z, &w)).abs() < 1e-15);
        let m2 = minkowski_p(2, 2.0).unwrap();
        let g = m2.value(&z, &v(&[(1.0, 0.0), (1.0, 0.0)]));
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn minkowski_rejects_fractional_exponent() {
        assert!(matches!(minkowski_p(2, 1.5), Err(FinslerError::Invalid(_))));
        assert!(matches!(minkowski_p(2, 0.0), Err(FinslerError::Invalid(_))));
    }

    #[test]
    fn conformal_zero_is_identity() {
        let base = minkowski_p(2, 2.0).unwrap();
        let m = conformal(&base, ScalarField::zero());
        let z = v(&[(0.2, 0.1), (-0.4, 0.3)]);
        let w = v(&[(1.0, -0.5), (0.25, 0.75)]);
        assert_eq!(m.value(&z, &w), base.value(&z, &w));
    }

    #[test]
    fn perturbed_quartic_values() {
        let eu = perturbed_quartic(2, 0.0, ScalarField::re_z1()).unwrap();
        assert!(eu.flags.is_hermitian);
        let m = perturbed_quartic(2, 0.1, ScalarField::constant(1.0)).unwrap();
        let z = v(&[(3.0, 1.0), (-2.0, 0.0)]);
        assert!((m.value(&z, &v(&[(1.0, 0.0), (0.0, 0.0)])) - 1.1).abs() < 1e-15);
        assert!(perturbed_quartic(1, 0.1, ScalarField::zero()).is_err());
    }

    #[test]
    fn pullback_examples() {
        let target = poincare_disc(1.0);
        let disc = Domain::Polydisc { radius: 1.0 };
        let sq = HolomorphicMap::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], disc);
        let p = pullback(&target, &sq).unwrap();
        assert!(p.flags.may_degenerate);
        assert_eq!(p.value(&v(&[(0.0, 0.0)]), &v(&[(1.0, 0.0)])), 0.0);
        let half = HolomorphicMap::polynomial(vec![c(0.0, 0.0), c(0.5, 0.0)], disc);
        let p = pullback(&target, &half).unwrap();
        assert!((p.value(&v(&[(0.0, 0.0)]), &v(&[(1.0, 0.0)])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pullback_rejects_wrong_jacobian() {
        let disc = Domain::Polydisc { radius: 1.0 };
        let bad = HolomorphicMap::new(
            "bad",
            1,
            1,
            disc,
            |z: &[CJet]| vec![&z[0] * &z[0]],
            |z: &[CJet]| vec![vec![z[0].clone()]],
        );
        assert!(matches!(
            pullback(&poincare_disc(1.0), &bad),
            Err(FinslerError::JacobianMismatch { .. })
        ));
    }

    #[test]
    fn recipes_build_and_reject_unknowns() {
        for r in default_catalog() {
            let m = r.build().unwrap();
            assert!(m.dim >= 1, "{r}");
        }
        assert!(MetricRecipe::new("nope", &[]).build().is_err());
        assert!(MetricRecipe::new("euclidean", &[("q", "1")]).build().is_err());
        assert!(MetricRecipe::new("minkowski", &[("p", "2.5")]).build().is_err());
    }

    #[test]
    fn scalar_field_parse() {
        assert_eq!(ScalarField::parse("re_z1").unwrap().name, "re_z1");
        assert_eq!(ScalarField::parse("const:2").unwrap().name, "const:2");
        assert!(ScalarField::parse("0.5*abs2").is_ok());
        assert!(ScalarField::parse("sin").is_err());
    }
}
