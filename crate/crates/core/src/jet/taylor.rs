//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a real function of `nvars`
//! real variables around a base point, up to a fixed total degree. All
//! coefficients of degree `<= order` are kept in a dense table whose
//! monomials are listed by increasing degree, so a lower-order layout is a
//! prefix of a higher-order one with the same variable count.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

/// Highest total degree a layout may carry.
pub const MAX_ORDER: usize = 6;

/// Monomial table and multiplication schedule for `(nvars, order)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    degree: Vec<u8>,
    index: HashMap<Vec<u8>, usize>,
    // (i, j, k) with monomial_i * monomial_j = monomial_k and deg_k <= order
    products: Vec<(u32, u32, u32)>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.monomials.len())
            .finish()
    }
}

type LayoutCache = HashMap<(usize, usize), Arc<Layout>>;

impl Layout {
    /// Shared layout for `nvars` variables truncated at total degree `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        thread_local! {
            static LOCAL: std::cell::RefCell<HashMap<(usize, usize), Arc<Layout>>> =
                std::cell::RefCell::new(HashMap::new());
        }
        if let Some(hit) = LOCAL.with(|m| m.borrow().get(&(nvars, order)).cloned()) {
            return hit;
        }
        static CACHE: OnceLock<Mutex<LayoutCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let shared = {
            let mut guard = cache.lock().expect("layout cache poisoned");
            guard
                .entry((nvars, order))
                .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
                .clone()
        };
        LOCAL.with(|m| m.borrow_mut().insert((nvars, order), shared.clone()));
        shared
    }

    fn build(nvars: usize, order: usize) -> Layout {
        let mut monomials = Vec::new();
        for d in 0..=order {
            let mut exps = vec![0u8; nvars];
            push_degree(&mut monomials, &mut exps, 0, d);
        }
        let degree: Vec<u8> = monomials
            .iter()
            .map(|m| m.iter().copied().sum())
            .collect();
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        let mut scratch = vec![0u8; nvars];
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                // graded ordering: every later j has at least this degree
                if degree[i] as usize + degree[j] as usize > order {
                    break;
                }
                for v in 0..nvars {
                    scratch[v] = mi[v] + mj[v];
                }
                let k = index[&scratch];
                products.push((i as u32, j as u32, k as u32));
            }
        }
        Layout {
            nvars,
            order,
            monomials,
            degree,
            index,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.degree[i] as usize
    }

    fn same(a: &Arc<Layout>, b: &Arc<Layout>) -> bool {
        Arc::ptr_eq(a, b) || (a.nvars == b.nvars && a.order == b.order)
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, exps: &mut Vec<u8>, var: usize, remaining: usize) {
    if var + 1 == exps.len() {
        exps[var] = remaining as u8;
        out.push(exps.clone());
        exps[var] = 0;
        return;
    }
    if exps.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=remaining).rev() {
        exps[var] = e as u8;
        push_degree(out, exps, var + 1, remaining - e);
    }
    exps[var] = 0;
}

/// Truncated Taylor polynomial with real coefficients.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("value", &self.coeffs[0])
            .finish()
    }
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet {
            layout: layout.clone(),
            coeffs,
        }
    }

    /// Plain number: a jet with no variables.
    pub fn scalar(value: f64) -> Jet {
        Jet::constant(&Layout::get(0, 0), value)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(layout: &Arc<Layout>, var: usize, value: f64) -> Jet {
        assert!(var < layout.nvars, "variable {var} out of range");
        let mut jet = Jet::constant(layout, value);
        if layout.order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            let k = layout.index[&e];
            jet.coeffs[k] = 1.0;
        }
        jet
    }

    pub fn from_coeffs(layout: &Arc<Layout>, coeffs: Vec<f64>) -> Jet {
        assert_eq!(coeffs.len(), layout.len());
        Jet {
            layout: layout.clone(),
            coeffs,
        }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of the monomial with the given exponents (zero if
    /// the monomial is beyond the stored order).
    pub fn coeff(&self, exponents: &[u8]) -> f64 {
        self.layout
            .index_of(exponents)
            .map_or(0.0, |k| self.coeffs[k])
    }

    /// Partial derivative `∂^α f` at the base point (`α! · c_α`).
    pub fn partial(&self, exponents: &[u8]) -> f64 {
        let fact: f64 = exponents.iter().map(|&e| factorial(e as usize)).product();
        fact * self.coeff(exponents)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Same layout, given value, zero higher coefficients.
    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(&self.layout, value)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Derivative with respect to `var`; the result has one order less.
    pub fn derivative(&self, var: usize) -> Jet {
        let lay = &self.layout;
        assert!(lay.order >= 1, "cannot differentiate an order-0 jet");
        let lower = Layout::get(lay.nvars, lay.order - 1);
        let mut coeffs = vec![0.0; lower.len()];
        let mut e = vec![0u8; lay.nvars];
        for (k, c) in coeffs.iter_mut().enumerate() {
            e.copy_from_slice(lower.monomial(k));
            let m = e[var] as f64 + 1.0;
            e[var] += 1;
            *c = m * self.coeffs[lay.index[&e]];
        }
        Jet {
            layout: lower,
            coeffs,
        }
    }

    /// Drop all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.layout.order);
        let lower = Layout::get(self.layout.nvars, order);
        Jet {
            coeffs: self.coeffs[..lower.len()].to_vec(),
            layout: lower,
        }
    }

    /// Applies a univariate function given its Taylor coefficients at the
    /// base value: `f(a0 + δ) = Σ_k taylor[k] δ^k`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let order = self.layout.order;
        debug_assert!(taylor.len() > order);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.lift(taylor[order]);
        for k in (0..order).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let order = self.layout.order;
        let mut t = Vec::with_capacity(order + 1);
        let inv = 1.0 / a;
        let mut p = inv;
        for _ in 0..=order {
            t.push(p);
            p *= -inv;
        }
        self.compose(&t)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let t: Vec<f64> = (0..=self.layout.order)
            .map(|k| e / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut t = vec![a.ln()];
        let mut p = 1.0;
        for k in 1..=self.layout.order {
            p /= a;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign * p / k as f64);
        }
        self.compose(&t)
    }

    /// Real power `a^p`; the base value must be positive unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut t = Vec::with_capacity(self.layout.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.layout.order {
            t.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, p: u32) -> Jet {
        let mut acc = self.lift(1.0);
        for _ in 0..p {
            acc = &acc * self;
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let t: Vec<f64> = (0..=self.layout.order)
            .map(|k| {
                let d = match k % 4 {
                    0 => s,
                    1 => c,
                    2 => -s,
                    _ => -c,
                };
                d / factorial(k)
            })
            .collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let t: Vec<f64> = (0..=self.layout.order)
            .map(|k| {
                let d = match k % 4 {
                    0 => c,
                    1 => -s,
                    2 => -c,
                    _ => s,
                };
                d / factorial(k)
            })
            .collect();
        self.compose(&t)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn check(a: &Jet, b: &Jet) {
    debug_assert!(
        Layout::same(&a.layout, &b.layout),
        "jet layouts differ: {:?} vs {:?}",
        a.layout,
        b.layout
    );
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        check(self, rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        check(self, rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        check(self, rhs);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let a = &self.coeffs;
        let b = &rhs.coeffs;
        for &(i, j, k) in &self.layout.products {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        -rhs + self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl Div<&Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        check(self, rhs);
        self.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, b)| *a += b);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        check(self, rhs);
        self.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, b)| *a -= b);
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}
