//! Schouten and Weyl tensors, the conformally flat curvature reconstruction,
//! and the eigenvalue formulas for sectional curvature on conformally flat points.

use serde::Serialize;

use crate::chart::PointGeometry;
use crate::codazzi::FD_TOL;
use crate::error::{GeomError, Result};
use crate::tensor::{inner_with, raise_all, DenseTensor, SymMatrix};
use crate::weitzenbock::frame_eigen;

/// A point counts as conformally flat when the reconstruction residual is below this.
pub const LCF_GATE: f64 = 10.0 * FD_TOL;
/// A chart that is not conformally flat must show at least this residual.
pub const NON_LCF_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalData {
    pub weyl: DenseTensor,
    pub weyl_norm: f64,
    pub schouten: SymMatrix,
    pub schouten_eigs: Vec<f64>,
    pub ricci_eigs: Vec<f64>,
}

fn require_dim(geom: &PointGeometry) -> Result<usize> {
    let n = geom.dim();
    if n < 3 {
        return Err(GeomError::Dimension {
            required: ">= 3".into(),
            found: n,
        });
    }
    Ok(n)
}

/// `(n−2)⁻¹(Ric − s(2n−2)⁻¹ g)`.
pub fn schouten(geom: &PointGeometry) -> Result<SymMatrix> {
    let n = require_dim(geom)? as f64;
    let c = geom.scalar / (2.0 * n - 2.0);
    let nn = geom.dim();
    Ok(SymMatrix::from_fn(nn, |i, j| {
        (geom.ricci.get(i, j) - c * geom.g.get(i, j)) / (n - 2.0)
    }))
}

/// The curvature tensor a conformally flat metric with this Ricci tensor would have.
pub fn reconstruction(geom: &PointGeometry) -> Result<DenseTensor> {
    let n = require_dim(geom)?;
    let nf = n as f64;
    let g = |a: usize, b: usize| geom.g.get(a, b);
    let r = |a: usize, b: usize| geom.ricci.get(a, b);
    let s = geom.scalar;
    Ok(DenseTensor::from_fn(4, n, |idx| {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        (r(j, l) * g(i, k) - r(j, k) * g(i, l) + r(i, k) * g(j, l) - r(i, l) * g(j, k)) / (nf - 2.0)
            - s / ((nf - 1.0) * (nf - 2.0)) * (g(j, l) * g(i, k) - g(j, k) * g(i, l))
    }))
}

/// Max-norm of `R − reconstruction`.
pub fn lcf_reconstruction_residual(geom: &PointGeometry) -> Result<f64> {
    reconstruction(geom)?.max_diff(&geom.riemann_low)
}

/// `g`-eigenvalues of a symmetric form, ascending.
fn g_eigenvalues(m: &SymMatrix, geom: &PointGeometry) -> Result<Vec<f64>> {
    Ok(frame_eigen(m, geom)?.0)
}

pub fn conformal_data(geom: &PointGeometry) -> Result<ConformalData> {
    let weyl = geom.riemann_low.sub(&reconstruction(geom)?)?;
    let weyl_norm = inner_with(&weyl, &weyl, &geom.g_inv)?.max(0.0).sqrt();
    let schouten = schouten(geom)?;
    let schouten_eigs = g_eigenvalues(&schouten, geom)?;
    let ricci_eigs = g_eigenvalues(&geom.ricci, geom)?;
    Ok(ConformalData {
        weyl,
        weyl_norm,
        schouten,
        schouten_eigs,
        ricci_eigs,
    })
}

fn require_lcf(geom: &PointGeometry) -> Result<()> {
    let residual = lcf_reconstruction_residual(geom)?;
    if residual > LCF_GATE {
        return Err(GeomError::NotConformallyFlat { residual });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueFormulaResiduals {
    /// `max |sec(e_i∧e_j) − (n−2)⁻¹(r_i + r_j − s/(n−1))|`.
    pub ricci_formula_residual: f64,
    /// `max |sec(e_i∧e_j) − (λ_i + λ_j)|` with Schouten eigenvalues `λ`.
    pub schouten_formula_residual: f64,
    /// The same with the extra factor `(n−2)⁻¹` on the right; nonzero for `n ≠ 3` in general.
    pub scaled_schouten_residual: f64,
}

/// Sectional-curvature formulas in the Ricci eigenframe at a conformally flat point.
pub fn eigenvalue_formula_residuals(geom: &PointGeometry) -> Result<EigenvalueFormulaResiduals> {
    let n = require_dim(geom)?;
    require_lcf(geom)?;
    let nf = n as f64;
    let (r, e) = frame_eigen(&geom.ricci, geom)?;
    // Schouten is an increasing affine function of Ric, so sorted eigenvalues pair up.
    let lam = g_eigenvalues(&schouten(geom)?, geom)?;
    let trace: f64 = r.iter().sum();
    let mut out = EigenvalueFormulaResiduals {
        ricci_formula_residual: 0.0,
        schouten_formula_residual: 0.0,
        scaled_schouten_residual: 0.0,
    };
    for i in 0..n {
        for j in i + 1..n {
            let sec = geom.riemann_form(&e[i], &e[j], &e[i], &e[j]);
            let ric = (r[i] + r[j] - trace / (nf - 1.0)) / (nf - 2.0);
            out.ricci_formula_residual = out.ricci_formula_residual.max((sec - ric).abs());
            out.schouten_formula_residual = out.schouten_formula_residual.max((sec - lam[i] - lam[j]).abs());
            out.scaled_schouten_residual = out
                .scaled_schouten_residual
                .max((sec - (lam[i] + lam[j]) / (nf - 2.0)).abs());
        }
    }
    Ok(out)
}

/// `|R_ijkl θ^{jk} θ^{il} − 2 S_ij θ^{ik} θ^j_k|` for traceless `θ`.
pub fn schouten_operator_identity_residual(geom: &PointGeometry, theta: &SymMatrix) -> Result<f64> {
    let n = require_dim(geom)?;
    require_lcf(geom)?;
    let th = theta.to_tensor();
    let tr = crate::tensor::trace_with(&th, &geom.g_inv)?.get(&[]);
    let scale = inner_with(&th, &th, &geom.g_inv)?.sqrt().max(1.0);
    if tr.abs() > 1e-10 * scale {
        return Err(GeomError::NotTraceless { trace: tr.abs() });
    }
    let up = raise_all(&th, &geom.g_inv)?;
    let u = |a: usize, b: usize| up.get(&[a, b]);
    let r = geom.riemann_low.data();
    let mut lhs = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    lhs += r[((i * n + j) * n + k) * n + l] * u(j, k) * u(i, l);
                }
            }
        }
    }
    // θ^{ik} θ^j_k = θ^{ik} θ^{jm} g_mk
    let sch = schouten(geom)?;
    let mut rhs = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for k in 0..n {
                for m in 0..n {
                    c += u(i, k) * u(j, m) * geom.g.get(m, k);
                }
            }
            rhs += sch.get(i, j) * c;
        }
    }
    Ok((lhs - 2.0 * rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::chart::point_geometry;
    use crate::fd::FdSpec;

    fn geo(chart: &crate::chart::ChartManifold, x: &[f64]) -> PointGeometry {
        point_geometry(chart, x, &FdSpec::default()).unwrap()
    }

    #[test]
    fn unit_four_sphere_schouten_is_half_metric() {
        let g = geo(&catalog::sphere_chart(4, 1.0), &[1.0, 1.2, 1.4, 0.1]);
        let c = conformal_data(&g).unwrap();
        for (a, b) in c.schouten.data().iter().zip(g.g.scale(0.5).data()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(c.weyl_norm < 1e-6);
        assert!(c.schouten_eigs.iter().all(|l| (l - 0.5).abs() < 1e-7));
        assert!(c.ricci_eigs.iter().all(|r| (r - 3.0).abs() < 1e-7));
    }

    #[test]
    fn three_manifolds_have_no_weyl() {
        let generic = crate::chart::ChartManifold::new("generic3", crate::chart::Domain::cube(3, -0.5, 0.5), |x| {
            SymMatrix::from_fn(3, |i, j| match (i, j) {
                (0, 0) => 1.0 + 0.3 * x[1] * x[1],
                (0, 1) => 0.2 * x[2],
                (1, 1) => 2.0 + x[0].sin(),
                (1, 2) => 0.1 * x[0] * x[1],
                (2, 2) => (0.4 * x[0] + 0.3 * x[2]).exp(),
                _ => 0.0,
            })
        });
        for chart in [catalog::hyperbolic_chart(3), generic] {
            let mut x = chart.domain().center();
            x[0] += 0.1;
            let c = conformal_data(&geo(&chart, &x)).unwrap();
            assert!(c.weyl_norm < 1e-6, "{} {}", chart.name(), c.weyl_norm);
        }
    }

    #[test]
    fn surfaces_rejected() {
        let g = geo(&catalog::sphere_chart(2, 1.0), &[1.0, 0.0]);
        assert!(matches!(conformal_data(&g), Err(GeomError::Dimension { .. })));
    }

    #[test]
    fn product_of_spheres_is_not_conformally_flat() {
        let chart = catalog::sphere_product_chart();
        let g = geo(&chart, &chart.domain().center());
        // Ric = g, s = 4: the reconstruction gives R_1313 = 1/3 where R_1313 = 0
        let r = lcf_reconstruction_residual(&g).unwrap();
        assert!(r > 0.3, "{r}");
        assert!(matches!(
            eigenvalue_formula_residuals(&g),
            Err(GeomError::NotConformallyFlat { .. })
        ));
    }

    #[test]
    fn eigenvalue_formulas_on_sphere_and_cylinder() {
        let g = geo(&catalog::sphere_chart(4, 1.0), &[1.0, 1.2, 1.4, 0.1]);
        let r = eigenvalue_formula_residuals(&g).unwrap();
        assert!(r.ricci_formula_residual < 1e-6);
        assert!(r.schouten_formula_residual < 1e-6);
        // the scaled form gives 1/2 instead of 1
        assert!((r.scaled_schouten_residual - 0.5).abs() < 1e-6);

        let g = geo(&catalog::cylinder_chart(), &[0.0, 1.2, 1.4, 0.1]);
        let r = eigenvalue_formula_residuals(&g).unwrap();
        assert!(r.ricci_formula_residual < 1e-6, "{r:?}");
        assert!(r.schouten_formula_residual < 1e-6, "{r:?}");
    }

    #[test]
    fn schouten_identity() {
        let g = geo(&catalog::sphere_chart(3, 1.0), &[1.0, 1.2, 0.3]);
        let f = g.orthonormal_frame();
        let lo: Vec<Vec<f64>> = f.iter().map(|e| g.g.mul_vec(e)).collect();
        let theta = SymMatrix::from_fn(3, |i, j| lo[0][i] * lo[0][j] - lo[1][i] * lo[1][j]);
        assert!(schouten_operator_identity_residual(&g, &theta).unwrap() < 1e-7);
        assert_eq!(
            schouten_operator_identity_residual(&g, &SymMatrix::zeros(3)).unwrap(),
            0.0
        );
        assert!(schouten_operator_identity_residual(&g, &g.g).is_err());
    }
}
