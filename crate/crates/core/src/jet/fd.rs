//! Central finite differences, used only to cross-check jets.

use std::cell::Cell;

use num_complex::Complex64;

use super::point::{wirtinger_expansion, WirtingerIndex};
use crate::catalog::MetricSpec;
use crate::error::{FinslerError, Result};

/// Second-order central stencil for the `m`-th derivative: `(offset, weight)`
/// with the `h^-m` factor left out.
fn stencil(m: u8) -> &'static [(i32, f64)] {
    match m {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("finite differences implemented up to order 4"),
    }
}

/// Step that balances truncation against cancellation for a derivative of
/// total order `order`.
pub fn default_step(order: usize) -> f64 {
    match order {
        0..=2 => 1e-3,
        3 => 3e-3,
        _ => 1e-2,
    }
}

fn tensor_stencil(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], exps: &[u8], h: f64) -> f64 {
    let active: Vec<(usize, &'static [(i32, f64)])> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(k, &e)| (k, stencil(e)))
        .collect();
    let total: i32 = exps.iter().map(|&e| e as i32).sum();
    let mut pick = vec![0usize; active.len()];
    let mut x = x0.to_vec();
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        x.copy_from_slice(x0);
        for (j, &(k, st)) in active.iter().enumerate() {
            let (off, wt) = st[pick[j]];
            x[k] += off as f64 * h;
            w *= wt;
        }
        acc += w * f(&x);
        let mut j = 0;
        loop {
            if j == active.len() {
                return acc / h.powi(total);
            }
            pick[j] += 1;
            if pick[j] < active[j].1.len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
    }
}

/// Real partial `∂^α f(x0)` by central differences with one Richardson level.
pub fn fd_real_partial(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], exps: &[u8], h: f64) -> f64 {
    let coarse = tensor_stencil(f, x0, exps, h);
    let fine = tensor_stencil(f, x0, exps, h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Wirtinger derivative of a real function of `(z, v)` by finite differences.
pub fn fd_wirtinger(
    f: &dyn Fn(&[Complex64], &[Complex64]) -> f64,
    z: &[Complex64],
    v: &[Complex64],
    idx: &WirtingerIndex,
    step: f64,
) -> Complex64 {
    let n = z.len();
    // real coordinates [Re z, Im z, Re v, Im v]
    let mut x0 = Vec::with_capacity(4 * n);
    x0.extend(z.iter().map(|c| c.re));
    x0.extend(z.iter().map(|c| c.im));
    x0.extend(v.iter().map(|c| c.re));
    x0.extend(v.iter().map(|c| c.im));
    let g = |x: &[f64]| {
        let zz: Vec<Complex64> = (0..n).map(|i| Complex64::new(x[i], x[n + i])).collect();
        let vv: Vec<Complex64> = (0..n).map(|i| Complex64::new(x[2 * n + i], x[3 * n + i])).collect();
        f(&zz, &vv)
    };
    let coords: Vec<(usize, usize, u8, u8)> = idx
        .per_coordinate()
        .into_iter()
        .enumerate()
        .filter(|(_, (a, b))| a + b > 0)
        .map(|(c, (a, b))| {
            if c < n {
                (c, n + c, a, b)
            } else {
                (2 * n + c - n, 3 * n + c - n, a, b)
            }
        })
        .collect();
    let expansions: Vec<Vec<Complex64>> = coords.iter().map(|&(_, _, a, b)| wirtinger_expansion(a, b)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pick = vec![0usize; coords.len()];
    let mut exps = vec![0u8; 4 * n];
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
            acc += w * fd_real_partial(&g, &x0, &exps, step);
        }
        let mut j = 0;
        loop {
            if j == coords.len() {
                return acc;
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

/// Finite-difference estimate of a Wirtinger derivative of `G`.
pub fn fd_oracle(
    metric: &MetricSpec,
    z: &[Complex64],
    v: &[Complex64],
    idx: &WirtingerIndex,
    step: f64,
) -> Result<Complex64> {
    if step <= 0.0 || !step.is_finite() {
        return Err(FinslerError::Invalid(format!("finite-difference step must be positive, got {step}")));
    }
    if idx.order() > 4 {
        return Err(FinslerError::Order {
            requested: idx.order(),
            available: 4,
        });
    }
    metric.check_point(z, v)?;
    let outside = Cell::new(false);
    let f = |zz: &[Complex64], vv: &[Complex64]| {
        if !metric.domain.contains(zz) {
            outside.set(true);
            return f64::NAN;
        }
        metric.value(zz, vv)
    };
    let out = fd_wirtinger(&f, z, v, idx, step);
    if outside.get() {
        return Err(FinslerError::Domain {
            metric: metric.name.clone(),
            detail: format!("finite-difference stencil with step {step} leaves {}", metric.domain),
        });
    }
    if !(out.re.is_finite() && out.im.is_finite()) {
        return Err(FinslerError::NonFinite("finite-difference estimate".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euclidean_levi_form() {
        let m = catalog::euclidean(1);
        let idx = WirtingerIndex::zero(1).dv(0).dvbar(0);
        let d = fd_oracle(&m, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &idx, 1e-3).unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn fubini_study_log_laplacian() {
        // ∂∂̄ log(|v|²(1+|z|²)^{-2}) at z = 0 is −2
        let m = catalog::fubini_study(1);
        let f = |z: &[Complex64], v: &[Complex64]| m.value(z, v).ln();
        let idx = WirtingerIndex::zero(1).dz(0).dzbar(0);
        let d = fd_wirtinger(&f, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &idx, 1e-3);
        assert!((d - c(-2.0, 0.0)).norm() < 1e-5, "{d}");
    }

    #[test]
    fn stencil_leaving_domain_is_an_error() {
        let m = catalog::poincare_disc(1.0);
        let idx = WirtingerIndex::zero(1).dz(0);
        assert!(matches!(
            fd_oracle(&m, &[c(0.9995, 0.0)], &[c(1.0, 0.0)], &idx, 1e-3),
            Err(FinslerError::Domain { .. })
        ));
        assert!(fd_oracle(&m, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &idx, 0.0).is_err());
    }

    #[test]
    fn fourth_order_polynomial_exact() {
        let f = |x: &[f64]| x[0].powi(2) * x[1].powi(2) + x[0].powi(4);
        let d = fd_real_partial(&f, &[0.3, -0.2], &[2, 2], 1e-2);
        assert!((d - 4.0).abs() < 1e-6, "{d}");
        let d = fd_real_partial(&f, &[0.3, -0.2], &[4, 0], 1e-2);
        assert!((d - 24.0).abs() < 1e-5, "{d}");
    }
}
