//! Pointwise Finsler tensors: fundamental form, nonlinear connection,
//! curvature, the vertical tensor `G_{ij}` and its horizontal derivative.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::catalog::MetricSpec;
use crate::error::{FinslerError, Result};
use crate::jet::{evaluate_jet, evaluate_jet_vars, CJet, Jet, PointJet, Vars, WirtingerIndex};
use crate::linalg::{self, CMat, CONDITION_LIMIT};

fn w0(n: usize) -> WirtingerIndex {
    WirtingerIndex::zero(n)
}

fn cz() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Fundamental data at `(z, v)`.
#[derive(Clone, Debug)]
pub struct FundamentalData {
    pub z: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub g: f64,
    /// `G_i = ∂G/∂v^i`
    pub gi: Vec<Complex64>,
    /// `G_{j̄} = ∂G/∂v̄^j`
    pub gjbar: Vec<Complex64>,
    /// `levi[(i, j)] = G_{ij̄}`
    pub levi: CMat,
    /// `levi_inv = levi⁻¹`, so `G^{j̄k} = levi_inv[(j, k)]`
    pub levi_inv: CMat,
    /// `mixed[(j, i)] = G_{j̄;i} = ∂²G/∂v̄^j∂z^i`
    pub mixed: CMat,
    /// `conn[(k, i)] = N^k_i = G^{j̄k} G_{j̄;i}`
    pub conn: CMat,
    pub condition: f64,
}

impl FundamentalData {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Components of `P̂ = v^i δ/δz^i` on `(∂/∂z, ∂/∂v)`.
    pub fn horizontal_lift(&self) -> Vec<Complex64> {
        let n = self.n();
        let v = nalgebra::DVector::from_column_slice(&self.v);
        let nv = &self.conn * &v;
        (0..n).map(|i| self.v[i]).chain((0..n).map(|k| -nv[k])).collect()
    }
}

/// Fundamental data read off a jet of `G` (order >= 2, full variables).
pub fn fundamental_from_jet(pj: &PointJet, check_f4: bool) -> Result<FundamentalData> {
    let n = pj.n();
    let g = pj.value();
    if !(g > 0.0) {
        return Err(FinslerError::Domain {
            metric: "G".into(),
            detail: format!("G = {g} is not positive"),
        });
    }
    let mut gi = vec![cz(); n];
    let mut gjbar = vec![cz(); n];
    let mut levi = DMatrix::from_element(n, n, cz());
    let mut mixed = DMatrix::from_element(n, n, cz());
    for i in 0..n {
        gi[i] = pj.wirtinger(&w0(n).dv(i))?;
        gjbar[i] = pj.wirtinger(&w0(n).dvbar(i))?;
        for j in 0..n {
            levi[(i, j)] = pj.wirtinger(&w0(n).dv(i).dvbar(j))?;
            mixed[(j, i)] = pj.wirtinger(&w0(n).dvbar(j).dz(i))?;
        }
    }
    let levi_inv = if check_f4 {
        linalg::inverse_pd(&levi).map_err(|e| match e {
            FinslerError::NotStronglyPseudoconvex { min_eigenvalue, .. } => FinslerError::NotStronglyPseudoconvex {
                min_eigenvalue,
                v: pj.v.clone(),
            },
            other => other,
        })?
    } else {
        let cond = linalg::condition_number(&levi);
        if cond > CONDITION_LIMIT {
            return Err(FinslerError::Degenerate {
                condition: cond,
                limit: CONDITION_LIMIT,
            });
        }
        linalg::inverse(&levi)?
    };
    let condition = linalg::condition_number(&levi);
    let conn = levi_inv.transpose() * &mixed;
    Ok(FundamentalData {
        z: pj.z.clone(),
        v: pj.v.clone(),
        g,
        gi,
        gjbar,
        levi,
        levi_inv,
        mixed,
        conn,
        condition,
    })
}

pub fn fundamental(metric: &MetricSpec, z: &[Complex64], v: &[Complex64], check_f4: bool) -> Result<FundamentalData> {
    let pj = evaluate_jet(metric, z, v, 2)?;
    fundamental_from_jet(&pj, check_f4)
}

/// Levi form `G_{ij̄}` at `(z, v)` from a fiber-only jet.
pub fn levi_form(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<CMat> {
    let n = metric.dim;
    let pj = evaluate_jet_vars(metric, z, v, 2, Vars::Fiber)?;
    let mut m = DMatrix::from_element(n, n, cz());
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = pj.wirtinger(&w0(n).dv(i).dvbar(j))?;
        }
    }
    Ok(m)
}

/// Residuals of the homogeneity identities, each `|lhs − rhs| / (1 + |rhs|)`
/// maximised over components.
pub fn homogeneity_residuals(
    metric: &MetricSpec,
    z: &[Complex64],
    v: &[Complex64],
    lambda: Complex64,
) -> Result<Vec<(&'static str, f64)>> {
    let n = metric.dim;
    let lv: Vec<Complex64> = v.iter().map(|x| x * lambda).collect();
    let a = evaluate_jet_vars(metric, z, v, 3, Vars::Fiber)?;
    let b = evaluate_jet_vars(metric, z, &lv, 2, Vars::Fiber)?;
    let g = a.value();
    let res = |lhs: Complex64, rhs: Complex64| (lhs - rhs).norm() / (1.0 + rhs.norm());
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for i in 0..n {
        let lhs = b.wirtinger(&w0(n).dv(i))?;
        let rhs = lambda.conj() * a.wirtinger(&w0(n).dv(i))?;
        worst = worst.max(res(lhs, rhs));
    }
    out.push(("G_i(z,λv) = λ̄G_i(z,v)", worst));

    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let idx = w0(n).dv(i).dvbar(j);
            worst = worst.max(res(b.wirtinger(&idx)?, a.wirtinger(&idx)?));
        }
    }
    out.push(("G_ij̄(z,λv) = G_ij̄(z,v)", worst));

    let gc = Complex64::new(g, 0.0);
    let mut s1 = cz();
    let mut s2 = cz();
    let mut s3 = cz();
    for i in 0..n {
        s1 += a.wirtinger(&w0(n).dv(i))? * v[i];
        s2 += a.wirtinger(&w0(n).dvbar(i))? * v[i].conj();
        for j in 0..n {
            s3 += a.wirtinger(&w0(n).dv(i).dvbar(j))? * v[i] * v[j].conj();
        }
    }
    out.push(("G_i v^i = G", res(s1, gc)));
    out.push(("G_j̄ v̄^j = G", res(s2, gc)));
    out.push(("G_ij̄ v^i v̄^j = G", res(s3, gc)));

    let mut worst_ij = 0.0f64;
    let mut worst_ijk = 0.0f64;
    for j in 0..n {
        let mut acc = cz();
        for i in 0..n {
            acc += a.wirtinger(&w0(n).dv(i).dv(j))? * v[i];
        }
        worst_ij = worst_ij.max(acc.norm());
        for k in 0..n {
            let mut acc = cz();
            for i in 0..n {
                acc += a.wirtinger(&w0(n).dv(i).dvbar(j).dv(k))? * v[i];
            }
            worst_ijk = worst_ijk.max(acc.norm());
        }
    }
    out.push(("G_ij v^i = 0", worst_ij));
    out.push(("G_ij̄k v^i = 0", worst_ijk));
    Ok(out)
}

/// Curvature quantities at `(z, v)`.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub z: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub g: f64,
    /// `R_{ij̄kl̄} v^i v̄^j v^k v̄^l`
    pub r_vvvv: f64,
    /// `r_vv[(k, l)] = R_{ij̄kl̄} v^i v̄^j`
    pub r_vv: CMat,
    /// Holomorphic sectional curvature `2 R_vvvv / G²`.
    pub k: f64,
    /// `G_{ij} = ∂²G/∂v^i∂v^j`
    pub ghat: CMat,
    /// `v̄^l (δ/δz̄^l) G_{ij}` from the nonlinear connection.
    pub cond12: CMat,
    /// The same quantity from the expansion `G_{ij;l̄} − G_{k;l̄} G^{kt̄} G_{ijt̄}`.
    pub cond12_expanded: CMat,
}

/// `R_{ij̄kl̄} v^i v̄^j` from an order-2 jet and its fundamental data.
pub fn r_vv_from_jet(pj: &PointJet, fd: &FundamentalData) -> Result<CMat> {
    let n = pj.n();
    let b = &fd.levi_inv;
    let m = &fd.mixed;
    let mut r = DMatrix::from_element(n, n, cz());
    for k in 0..n {
        for l in 0..n {
            let mut acc = -pj.wirtinger(&w0(n).dz(k).dzbar(l))?;
            for p in 0..n {
                for q in 0..n {
                    // G^{q̄p} G_{q̄;k} G_{p;l̄}
                    acc += b[(q, p)] * m[(q, k)] * m[(p, l)].conj();
                }
            }
            r[(k, l)] = acc;
        }
    }
    Ok(r)
}

fn contract_vv(r: &CMat, v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut acc = cz();
    for k in 0..n {
        for l in 0..n {
            acc += v[k] * v[l].conj() * r[(k, l)];
        }
    }
    acc.re
}

pub fn curvature(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<CurvatureData> {
    let n = metric.dim;
    let pj = evaluate_jet(metric, z, v, 3)?;
    let fd = fundamental_from_jet(&pj, true)?;
    let r_vv = r_vv_from_jet(&pj, &fd)?;
    let r_vvvv = contract_vv(&r_vv, v);
    let k = 2.0 * r_vvvv / (fd.g * fd.g);

    let mut ghat = DMatrix::from_element(n, n, cz());
    for i in 0..n {
        for j in 0..n {
            ghat[(i, j)] = pj.wirtinger(&w0(n).dv(i).dv(j))?;
        }
    }

    // conj(N^m_l) = G^{m̄k} G_{k;l̄}
    let conj_conn = fd.conn.map(|x| x.conj());
    let b = &fd.levi_inv;
    let mut cond12 = DMatrix::from_element(n, n, cz());
    let mut cond12_expanded = DMatrix::from_element(n, n, cz());
    for i in 0..n {
        for j in 0..n {
            let mut a = cz();
            let mut e = cz();
            for l in 0..n {
                let dzb = pj.wirtinger(&w0(n).dv(i).dv(j).dzbar(l))?;
                let mut t = dzb;
                let mut te = dzb;
                for mm in 0..n {
                    let dvb = pj.wirtinger(&w0(n).dv(i).dv(j).dvbar(mm))?;
                    t -= conj_conn[(mm, l)] * dvb;
                    for kk in 0..n {
                        // G_{k;l̄} G^{kt̄} G_{ijt̄} with t = mm
                        let gkl = fd.mixed[(kk, l)].conj();
                        te -= gkl * b[(mm, kk)] * dvb;
                    }
                }
                a += v[l].conj() * t;
                e += v[l].conj() * te;
            }
            cond12[(i, j)] = a;
            cond12_expanded[(i, j)] = e;
        }
    }

    Ok(CurvatureData {
        z: z.to_vec(),
        v: v.to_vec(),
        g: fd.g,
        r_vvvv,
        r_vv,
        k,
        ghat,
        cond12,
        cond12_expanded,
    })
}

/// Holomorphic sectional curvature `K_G(z, [v])`.
pub fn hsc(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<f64> {
    let pj = evaluate_jet(metric, z, v, 2)?;
    let fd = fundamental_from_jet(&pj, true)?;
    let r = r_vv_from_jet(&pj, &fd)?;
    Ok(2.0 * contract_vv(&r, v) / (fd.g * fd.g))
}

pub fn ghat(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<CMat> {
    let n = metric.dim;
    let pj = evaluate_jet_vars(metric, z, v, 2, Vars::Fiber)?;
    let mut m = DMatrix::from_element(n, n, cz());
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = pj.wirtinger(&w0(n).dv(i).dv(j))?;
        }
    }
    Ok(m)
}

pub fn condition12_residual(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<CMat> {
    Ok(curvature(metric, z, v)?.cond12)
}

/// Full tensor `R_{ij̄kl̄}` (order-4 jet), flattened as `[((i*n + j)*n + k)*n + l]`.
pub fn curvature_tensor(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = metric.dim;
    let pj = evaluate_jet(metric, z, v, 4)?;
    let fd = fundamental_from_jet(&pj, true)?;
    let b = &fd.levi_inv;
    // d1[k][i][q] = ∂_k G_{iq̄}
    let mut d1 = vec![cz(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for q in 0..n {
                d1[(k * n + i) * n + q] = pj.wirtinger(&w0(n).dz(k).dv(i).dvbar(q))?;
            }
        }
    }
    let mut out = vec![cz(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = -pj.wirtinger(&w0(n).dz(k).dzbar(l).dv(i).dvbar(j))?;
                    for p in 0..n {
                        for q in 0..n {
                            // ∂_l̄ G_{pj̄} = conj(∂_l G_{jp̄})
                            acc += b[(q, p)] * d1[(k * n + i) * n + q] * d1[(l * n + j) * n + p].conj();
                        }
                    }
                    out[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// `H[(a, b)] = ∂_a ∂_b̄ f` over the `2n` complex coordinates `(z, v)`.
fn complex_hessian(pj: &PointJet) -> Result<CMat> {
    let n = pj.n();
    let idx = |c: usize, bar: bool| {
        let w = w0(n);
        match (c < n, bar) {
            (true, false) => w.dz(c),
            (true, true) => w.dzbar(c),
            (false, false) => w.dv(c - n),
            (false, true) => w.dvbar(c - n),
        }
    };
    let mut h = DMatrix::from_element(2 * n, 2 * n, cz());
    for a in 0..2 * n {
        for b in 0..2 * n {
            let mut i = idx(a, false);
            let j = idx(b, true);
            for t in 0..n {
                i.dz[t] += j.dz[t];
                i.dzbar[t] += j.dzbar[t];
                i.dv[t] += j.dv[t];
                i.dvbar[t] += j.dvbar[t];
            }
            h[(a, b)] = pj.wirtinger(&i)?;
        }
    }
    Ok(h)
}

fn hermitian_form(h: &CMat, x: &[Complex64]) -> Complex64 {
    let mut acc = cz();
    for a in 0..x.len() {
        for b in 0..x.len() {
            acc += x[a] * x[b].conj() * h[(a, b)];
        }
    }
    acc
}

/// Both sides of the curvature decomposition along `P̂`:
/// `(∂∂̄ log G)(P̂, conj P̂)` and `−R_vvvv / G`.
pub fn decomposition_sides(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<(f64, f64)> {
    let pj = evaluate_jet(metric, z, v, 2)?;
    let fd = fundamental_from_jet(&pj, true)?;
    let r = contract_vv(&r_vv_from_jet(&pj, &fd)?, v);
    let logg = pj.map(Jet::ln);
    let h = complex_hessian(&logg)?;
    let lhs = hermitian_form(&h, &fd.horizontal_lift());
    Ok((lhs.re, -r / fd.g))
}

pub fn decomposition_residual(metric: &MetricSpec, z: &[Complex64], v: &[Complex64]) -> Result<f64> {
    let (lhs, rhs) = decomposition_sides(metric, z, v)?;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

/// `Δ^H u = (1/G) (∂∂̄u)(P̂, conj P̂)` for `u` given on jets.
pub fn horizontal_laplacian<F>(metric: &MetricSpec, u: F, z: &[Complex64], v: &[Complex64]) -> Result<f64>
where
    F: Fn(&[CJet], &[CJet]) -> Jet,
{
    let fd = fundamental(metric, z, v, true)?;
    let uj = PointJet::from_fn(z, v, 2, Vars::Full, u)?;
    let h = complex_hessian(&uj)?;
    Ok(hermitian_form(&h, &fd.horizontal_lift()).re / fd.g)
}

/// Both sides of `2Δ^H_{G₂} log(G₁/G₂) ≥ K_{G₂} − (G₁/G₂) K_{G₁}`.
pub fn laplacian_bound_sides(
    g1: &MetricSpec,
    g2: &MetricSpec,
    z: &[Complex64],
    v: &[Complex64],
) -> Result<(f64, f64)> {
    let e1 = g1.evaluator();
    let e2 = g2.evaluator();
    let lhs = 2.0 * horizontal_laplacian(g2, |zz, vv| (&e1(zz, vv) / &e2(zz, vv)).ln(), z, v)?;
    let ratio = g1.value(z, v) / g2.value(z, v);
    let rhs = hsc(g2, z, v)? - ratio * hsc(g1, z, v)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, ScalarField};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euclidean_fundamental() {
        let m = catalog::euclidean(2);
        let fd = fundamental(&m, &[c(0.1, 0.2), c(0.3, -0.4)], &[c(1.0, 0.0), c(0.0, 0.0)], true).unwrap();
        assert_eq!(fd.g, 1.0);
        assert!((&fd.levi - CMat::identity(2, 2)).norm() < 1e-15);
        assert!(fd.conn.norm() < 1e-15);
    }

    #[test]
    fn poincare_connection_vanishes_at_origin() {
        let m = catalog::poincare_disc(1.0);
        let fd = fundamental(&m, &[c(0.0, 0.0)], &[c(1.0, 0.0)], true).unwrap();
        assert!((fd.g - 1.0).abs() < 1e-15);
        assert!(fd.conn[(0, 0)].norm() < 1e-14);
        // away from the origin N = v ∂_z log h = 2 z̄ v / (1 − |z|²)
        let z = c(0.3, 0.2);
        let fd = fundamental(&m, &[z], &[c(1.0, 0.0)], true).unwrap();
        let expect = z.conj() * 2.0 / (1.0 - z.norm_sqr());
        assert!((fd.conn[(0, 0)] - expect).norm() < 1e-13);
    }

    #[test]
    fn minkowski_euler_identity() {
        let m = catalog::minkowski_p(2, 2.0).unwrap();
        let v = [c(1.0, 0.0), c(1.0, 0.0)];
        let fd = fundamental(&m, &[c(0.0, 0.0), c(0.0, 0.0)], &v, true).unwrap();
        let s: Complex64 = fd.gi.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((s.re - 2f64.sqrt()).abs() < 1e-14 && s.im.abs() < 1e-14);
    }

    #[test]
    fn known_curvatures() {
        let k = hsc(&catalog::poincare_disc(1.0), &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        assert!((k + 4.0).abs() < 1e-12, "{k}");
        let k = hsc(&catalog::poincare_disc(2.0), &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        assert!((k + 4.0).abs() < 1e-12, "{k}");
        let k = hsc(&catalog::fubini_study(1), &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        assert!((k - 4.0).abs() < 1e-12, "{k}");
        let k = hsc(&catalog::euclidean(3), &[c(0.0, 0.0); 3], &[c(1.0, 0.0), c(0.0, 2.0), c(1.0, 1.0)]).unwrap();
        assert!(k.abs() < 1e-14);
    }

    #[test]
    fn ball_and_fs_are_constant() {
        let z = [c(0.2, -0.1), c(0.1, 0.3)];
        let v = [c(0.3, 1.0), c(-0.7, 0.2)];
        let k = hsc(&catalog::ball_hyperbolic(2), &z, &v).unwrap();
        assert!((k + 4.0).abs() < 1e-11, "{k}");
        let k = hsc(&catalog::fubini_study(2), &z, &v).unwrap();
        assert!((k - 4.0).abs() < 1e-11, "{k}");
    }

    #[test]
    fn scaling_law() {
        let base = catalog::fubini_study(1);
        let scaled = catalog::conformal(&base, ScalarField::constant(2f64.ln()));
        let z = [c(0.4, 0.1)];
        let v = [c(1.0, -2.0)];
        let a = hsc(&base, &z, &v).unwrap();
        let b = hsc(&scaled, &z, &v).unwrap();
        assert!((b - a / 2.0).abs() < 1e-12);
    }

    #[test]
    fn full_tensor_contracts_to_r_vv() {
        let m = catalog::conformal(&catalog::minkowski_p(2, 2.0).unwrap(), ScalarField::re_z1());
        let z = [c(0.2, 0.1), c(-0.3, 0.2)];
        let v = [c(1.0, 0.3), c(0.4, -0.8)];
        let cd = curvature(&m, &z, &v).unwrap();
        let r = curvature_tensor(&m, &z, &v).unwrap();
        let n = 2;
        for k in 0..n {
            for l in 0..n {
                let mut acc = cz();
                for i in 0..n {
                    for j in 0..n {
                        acc += v[i] * v[j].conj() * r[((i * n + j) * n + k) * n + l];
                    }
                }
                assert!((acc - cd.r_vv[(k, l)]).norm() < 1e-10 * (1.0 + acc.norm()));
            }
        }
    }

    #[test]
    fn vertical_derivative_trichotomy_points() {
        let herm = catalog::fubini_study(2);
        let z = [c(0.2, 0.1), c(-0.3, 0.2)];
        let v = [c(1.0, 0.3), c(0.4, -0.8)];
        let cd = curvature(&herm, &z, &v).unwrap();
        assert!(linalg::max_abs(&cd.ghat) < 1e-12);
        assert!(linalg::max_abs(&cd.cond12) < 1e-12);

        let conf = catalog::conformal(&catalog::minkowski_p(2, 2.0).unwrap(), ScalarField::re_z1());
        let cd = curvature(&conf, &z, &v).unwrap();
        assert!(linalg::max_abs(&cd.ghat) > 1e-3);
        assert!(linalg::max_abs(&cd.cond12) < 1e-10, "{}", linalg::max_abs(&cd.cond12));

        let pq = catalog::perturbed_quartic(2, 0.1, ScalarField::re_z1()).unwrap();
        let one = [c(1.0, 0.0), c(1.0, 0.0)];
        let cd = curvature(&pq, &[c(1.0, 0.0), c(0.0, 0.0)], &one).unwrap();
        assert!(linalg::max_abs(&cd.cond12) > 1e-3);
        assert!((&cd.cond12 - &cd.cond12_expanded).norm() < 1e-12);
    }

    #[test]
    fn decomposition_and_laplacian_on_poincare() {
        let m = catalog::poincare_disc(1.0);
        assert!(decomposition_residual(&m, &[c(0.3, 0.0)], &[c(1.0, 0.0)]).unwrap() < 1e-12);
        let e = m.evaluator();
        let l = horizontal_laplacian(&m, |z, v| e(z, v).ln(), &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        assert!((l - 2.0).abs() < 1e-12, "{l}");
        let l = horizontal_laplacian(&m, |z, v| e(z, v).scale(2.0).ln() - e(z, v).ln(), &[c(0.1, 0.0)], &[c(1.0, 0.0)])
            .unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn indefinite_levi_form_reported() {
        let m = catalog::perturbed_quartic(2, 2.0, ScalarField::constant(1.0)).unwrap();
        let err = fundamental(&m, &[c(0.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0), c(0.1, 0.0)], true).unwrap_err();
        assert!(matches!(err, FinslerError::NotStronglyPseudoconvex { .. }), "{err:?}");
    }
}
