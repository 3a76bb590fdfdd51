use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::taylor::{Jet, Layout};

/// Complex number whose real and imaginary parts are jets.
#[derive(Clone, Debug)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn new(re: Jet, im: Jet) -> CJet {
        CJet { re, im }
    }

    pub fn constant(layout: &Arc<Layout>, value: Complex64) -> CJet {
        CJet {
            re: Jet::constant(layout, value.re),
            im: Jet::constant(layout, value.im),
        }
    }

    pub fn scalar(value: Complex64) -> CJet {
        CJet::constant(&Layout::get(0, 0), value)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        self.re.layout()
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    /// A constant on the same layout.
    pub fn lift(&self, value: Complex64) -> CJet {
        CJet::constant(self.layout(), value)
    }

    pub fn zero_like(&self) -> CJet {
        self.lift(Complex64::new(0.0, 0.0))
    }

    pub fn conj(&self) -> CJet {
        CJet {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `|c|²` as a real jet.
    pub fn norm_sqr(&self) -> Jet {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn scale(&self, s: f64) -> CJet {
        CJet {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    pub fn mul_real(&self, r: &Jet) -> CJet {
        CJet {
            re: &self.re * r,
            im: &self.im * r,
        }
    }

    pub fn mul_c(&self, c: Complex64) -> CJet {
        CJet {
            re: &self.re.scale(c.re) - &self.im.scale(c.im),
            im: &self.re.scale(c.im) + &self.im.scale(c.re),
        }
    }

    pub fn add_c(&self, c: Complex64) -> CJet {
        CJet {
            re: &self.re + c.re,
            im: &self.im + c.im,
        }
    }

    pub fn recip(&self) -> CJet {
        let d = self.norm_sqr().recip();
        CJet {
            re: &self.re * &d,
            im: -(&self.im * &d),
        }
    }

    pub fn div(&self, rhs: &CJet) -> CJet {
        self * &rhs.recip()
    }

    /// Derivative with respect to one real variable (order drops by one).
    pub fn derivative(&self, var: usize) -> CJet {
        CJet {
            re: self.re.derivative(var),
            im: self.im.derivative(var),
        }
    }

    pub fn truncate(&self, order: usize) -> CJet {
        CJet {
            re: self.re.truncate(order),
            im: self.im.truncate(order),
        }
    }

    pub fn powi(&self, p: u32) -> CJet {
        let mut acc = self.lift(Complex64::new(1.0, 0.0));
        for _ in 0..p {
            acc = &acc * self;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<'a> Add<&'a CJet> for &'a CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl<'a> Sub<&'a CJet> for &'a CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl<'a> Mul<&'a CJet> for &'a CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Add for CJet {
    type Output = CJet;
    fn add(self, rhs: CJet) -> CJet {
        &self + &rhs
    }
}

impl Sub for CJet {
    type Output = CJet;
    fn sub(self, rhs: CJet) -> CJet {
        &self - &rhs
    }
}

impl Mul for CJet {
    type Output = CJet;
    fn mul(self, rhs: CJet) -> CJet {
        &self * &rhs
    }
}

impl Neg for &CJet {
    type Output = CJet;
    fn neg(self) -> CJet {
        CJet {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

/// Hermitian inner product `⟨a, b⟩ = Σ a_i b̄_i`.
pub fn inner(a: &[CJet], b: &[CJet]) -> CJet {
    let mut acc = a[0].zero_like();
    for (x, y) in a.iter().zip(b) {
        acc = &acc + &(x * &y.conj());
    }
    acc
}

/// `Σ |a_i|²`.
pub fn norm_sqr(a: &[CJet]) -> Jet {
    let mut acc = a[0].re.lift(0.0);
    for x in a {
        acc += x.norm_sqr();
    }
    acc
}
