use std::fmt;

use num_complex::Complex64;

use super::complex::CJet;
use super::taylor::{Jet, Layout};
use crate::catalog::MetricSpec;
use crate::error::{FinslerError, Result};

/// Orders of `∂/∂z^i`, `∂/∂z̄^i`, `∂/∂v^i`, `∂/∂v̄^i` in a mixed derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WirtingerIndex {
    pub dz: Vec<u8>,
    pub dzbar: Vec<u8>,
    pub dv: Vec<u8>,
    pub dvbar: Vec<u8>,
}

impl WirtingerIndex {
    pub fn zero(n: usize) -> Self {
        WirtingerIndex {
            dz: vec![0; n],
            dzbar: vec![0; n],
            dv: vec![0; n],
            dvbar: vec![0; n],
        }
    }

    pub fn dz(mut self, i: usize) -> Self {
        self.dz[i] += 1;
        self
    }

    pub fn dzbar(mut self, i: usize) -> Self {
        self.dzbar[i] += 1;
        self
    }

    pub fn dv(mut self, i: usize) -> Self {
        self.dv[i] += 1;
        self
    }

    pub fn dvbar(mut self, i: usize) -> Self {
        self.dvbar[i] += 1;
        self
    }

    pub fn n(&self) -> usize {
        self.dz.len()
    }

    pub fn order(&self) -> usize {
        [&self.dz, &self.dzbar, &self.dv, &self.dvbar]
            .iter()
            .flat_map(|x| x.iter())
            .map(|&e| e as usize)
            .sum()
    }

    /// Index of the conjugate derivative (holomorphic and antiholomorphic
    /// orders swapped).
    pub fn conj(&self) -> Self {
        WirtingerIndex {
            dz: self.dzbar.clone(),
            dzbar: self.dz.clone(),
            dv: self.dvbar.clone(),
            dvbar: self.dv.clone(),
        }
    }

    /// Every index of total order `<= max_order` in dimension `n`.
    pub fn all(n: usize, max_order: usize) -> Vec<WirtingerIndex> {
        let mut out = Vec::new();
        let mut e = vec![0u8; 4 * n];
        fn rec(e: &mut Vec<u8>, pos: usize, left: usize, n: usize, out: &mut Vec<WirtingerIndex>) {
            if pos == e.len() {
                out.push(WirtingerIndex {
                    dz: e[..n].to_vec(),
                    dzbar: e[n..2 * n].to_vec(),
                    dv: e[2 * n..3 * n].to_vec(),
                    dvbar: e[3 * n..].to_vec(),
                });
                return;
            }
            for k in 0..=left {
                e[pos] = k as u8;
                rec(e, pos + 1, left - k, n, out);
            }
            e[pos] = 0;
        }
        rec(&mut e, 0, max_order, n, &mut out);
        out
    }

    /// `(holomorphic order, antiholomorphic order)` per complex coordinate,
    /// z coordinates first.
    pub(crate) fn per_coordinate(&self) -> Vec<(u8, u8)> {
        let n = self.n();
        (0..n)
            .map(|i| (self.dz[i], self.dzbar[i]))
            .chain((0..n).map(|i| (self.dv[i], self.dvbar[i])))
            .collect()
    }
}

impl fmt::Display for WirtingerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, e) in [("z", &self.dz), ("zb", &self.dzbar), ("v", &self.dv), ("vb", &self.dvbar)] {
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    parts.push(format!("{name}{}", i + 1));
                }
            }
        }
        if parts.is_empty() {
            write!(f, "G")
        } else {
            write!(f, "G_{}", parts.join(","))
        }
    }
}

/// Which real coordinates carry jet variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vars {
    /// `Re z, Im z, Re v, Im v`: `4n` variables.
    Full,
    /// `Re v, Im v` only.
    Fiber,
    /// `Re z, Im z` only.
    Base,
}

impl Vars {
    pub fn count(self, n: usize) -> usize {
        match self {
            Vars::Full => 4 * n,
            Vars::Fiber | Vars::Base => 2 * n,
        }
    }

    /// Real variable indices `(re, im)` for complex coordinate `c`
    /// (`0..n` for z, `n..2n` for v), if active.
    pub fn coordinate(self, n: usize, c: usize) -> Option<(usize, usize)> {
        let is_z = c < n;
        let i = if is_z { c } else { c - n };
        match (self, is_z) {
            (Vars::Full, true) => Some((i, n + i)),
            (Vars::Full, false) => Some((2 * n + i, 3 * n + i)),
            (Vars::Base, true) | (Vars::Fiber, false) => Some((i, n + i)),
            _ => None,
        }
    }
}

/// Taylor expansion of a function of `(z, v)` around a point.
#[derive(Clone, Debug)]
pub struct PointJet {
    pub z: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub vars: Vars,
    pub jet: Jet,
}

impl PointJet {
    /// Seeded jet inputs for `(z, v)`.
    pub fn inputs(z: &[Complex64], v: &[Complex64], order: usize, vars: Vars) -> (Vec<CJet>, Vec<CJet>) {
        let n = z.len();
        let layout = Layout::get(vars.count(n), order);
        let make = |x: Complex64, c: usize| match vars.coordinate(n, c) {
            Some((re, im)) => CJet::new(Jet::variable(&layout, re, x.re), Jet::variable(&layout, im, x.im)),
            None => CJet::constant(&layout, x),
        };
        let zz = z.iter().enumerate().map(|(i, &x)| make(x, i)).collect();
        let vv = v.iter().enumerate().map(|(i, &x)| make(x, n + i)).collect();
        (zz, vv)
    }

    /// Expands `f` around `(z, v)`.
    pub fn from_fn<F>(z: &[Complex64], v: &[Complex64], order: usize, vars: Vars, f: F) -> Result<PointJet>
    where
        F: Fn(&[CJet], &[CJet]) -> Jet,
    {
        if order > 4 {
            return Err(FinslerError::Order {
                requested: order,
                available: 4,
            });
        }
        let (zz, vv) = PointJet::inputs(z, v, order, vars);
        let jet = f(&zz, &vv);
        if !jet.is_finite() {
            return Err(FinslerError::NonFinite(format!("jet at z={z:?}, v={v:?}")));
        }
        Ok(PointJet {
            z: z.to_vec(),
            v: v.to_vec(),
            vars,
            jet,
        })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn order(&self) -> usize {
        self.jet.layout().order()
    }

    pub fn value(&self) -> f64 {
        self.jet.value()
    }

    /// Applies `f` to the expansion, keeping the base point.
    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> PointJet {
        PointJet {
            z: self.z.clone(),
            v: self.v.clone(),
            vars: self.vars,
            jet: f(&self.jet),
        }
    }

    /// Coefficient keyed by the real multi-index over the active variables.
    pub fn coeff(&self, exponents: &[u8]) -> f64 {
        self.jet.coeff(exponents)
    }

    pub fn wirtinger(&self, idx: &WirtingerIndex) -> Result<Complex64> {
        wirtinger(self, idx)
    }
}

/// Jet of `G` over all `4n` real coordinates.
pub fn evaluate_jet(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], order: usize) -> Result<PointJet> {
    evaluate_jet_vars(metric, z, v, order, Vars::Full)
}

pub fn evaluate_jet_vars(
    metric: &MetricSpec,
    z: &[Complex64],
    v: &[Complex64],
    order: usize,
    vars: Vars,
) -> Result<PointJet> {
    metric.check_point(z, v)?;
    PointJet::from_fn(z, v, order, vars, |zz, vv| metric.eval(zz, vv))
}

/// Wirtinger partial of a point jet.
pub fn wirtinger(pj: &PointJet, idx: &WirtingerIndex) -> Result<Complex64> {
    let n = pj.n();
    if idx.n() != n {
        return Err(FinslerError::Invalid(format!(
            "index for dimension {} applied to a jet of dimension {n}",
            idx.n()
        )));
    }
    let mut coords = Vec::new();
    for (c, (a, b)) in idx.per_coordinate().into_iter().enumerate() {
        if a + b == 0 {
            continue;
        }
        let (re, im) = pj.vars.coordinate(n, c).ok_or_else(|| {
            FinslerError::Invalid(format!("derivative {idx} needs a variable this jet does not carry"))
        })?;
        coords.push((re, im, a, b));
    }
    complex_partial(&pj.jet, &coords)
}

/// Expansion of `∂_c^a ∂_c̄^b` in real partials: entries `(k, coeff)` meaning
/// `coeff · ∂_x^{a+b-k} ∂_y^k`.
pub(crate) fn wirtinger_expansion(a: u8, b: u8) -> Vec<Complex64> {
    let (a, b) = (a as usize, b as usize);
    let mut out = vec![Complex64::new(0.0, 0.0); a + b + 1];
    let i = Complex64::new(0.0, 1.0);
    let scale = 0.5f64.powi((a + b) as i32);
    for s in 0..=a {
        for t in 0..=b {
            let w = binom(a, s) * binom(b, t) * scale;
            out[s + t] += (-i).powu(s as u32) * i.powu(t as u32) * w;
        }
    }
    out
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Mixed Wirtinger derivative of a real jet. Each entry of `coords` is
/// `(re_var, im_var, holomorphic order, antiholomorphic order)` for one
/// complex coordinate.
pub fn complex_partial(jet: &Jet, coords: &[(usize, usize, u8, u8)]) -> Result<Complex64> {
    let total: usize = coords.iter().map(|c| (c.2 + c.3) as usize).sum();
    let available = jet.layout().order();
    if total > available {
        return Err(FinslerError::Order {
            requested: total,
            available,
        });
    }
    let nvars = jet.layout().nvars();
    let expansions: Vec<Vec<Complex64>> = coords.iter().map(|&(_, _, a, b)| wirtinger_expansion(a, b)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut exps = vec![0u8; nvars];
    let mut pick = vec![0usize; coords.len()];
    loop {
        let mut w = Complex64::new(1.0, 0.0);
        exps.iter_mut().for_each(|e| *e = 0);
        for (j, &(re, im, a, b)) in coords.iter().enumerate() {
            let k = pick[j];
            w *= expansions[j][k];
            exps[re] += a + b - k as u8;
            exps[im] += k as u8;
        }
        if w.norm_sqr() != 0.0 {
            acc += w * jet.partial(&exps);
        }
        // odometer over the per-coordinate expansions
        let mut j = 0;
        loop {
            if j == coords.len() {
                return Ok(acc);
            }
            pick[j] += 1;
            if pick[j] < expansions[j].len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
    }
}
