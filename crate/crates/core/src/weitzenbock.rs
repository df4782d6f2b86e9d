//! Weitzenböck quadratic forms, the Bochner residual and the pointwise
//! inequalities used alongside it (Kato, Okumura, Ricci pinching).

use serde::Serialize;

use crate::chart::{
    covariant_derivative, laplace_beltrami, norm_sq_field, point_geometry, ChartManifold, PointGeometry, SymTensorField,
};
use crate::codazzi::{codazzi_residual, trace_gradient, traceless_part, FD_TOL};
use crate::eigen::symmetric_eigen;
use crate::error::{GeomError, Result};
use crate::fd::FdSpec;
use crate::tensor::{inner_with, mat_mul, raise_all, trace_with, DenseTensor, SymMatrix};

/// Codazzi and trace gates for the Bochner identity.
pub const PRECONDITION_TOL: f64 = 10.0 * FD_TOL;
/// Relative trace tolerance for the traceless gate of `q_p`.
pub const TRACE_TOL: f64 = 1e-6;
/// Norm floor below which `d||T||` is not evaluated.
pub const KATO_NORM_FLOOR: f64 = 1e-6;
/// Relative commutator tolerance for the spectral form of `Q₂`.
pub const COMMUTATOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BochnerBreakdown {
    pub lhs: f64,
    pub q_term: f64,
    pub grad_term: f64,
    pub residual: f64,
}

impl BochnerBreakdown {
    pub fn new(lhs: f64, q_term: f64, grad_term: f64) -> Self {
        BochnerBreakdown {
            lhs,
            q_term,
            grad_term,
            residual: lhs - q_term - grad_term,
        }
    }
}

/// `R_ij T^{i K} T^j_K − (p−1) R_ijkl T^{ik L} T^{jl}_L` with no gating.
pub fn q_form(t: &DenseTensor, geom: &PointGeometry) -> Result<f64> {
    let n = geom.dim();
    let p = t.rank();
    if p < 2 || t.dim() != n {
        return Err(GeomError::Shape(format!(
            "Q_p needs rank >= 2 in dim {n}, got rank {p} dim {}",
            t.dim()
        )));
    }
    let up = raise_all(t, &geom.g_inv)?;
    let lo = t.data();
    let hi = up.data();
    let tail1 = n.pow(p as u32 - 1);
    let tail2 = n.pow(p as u32 - 2);

    // T^{i K} T^j_K needs one index up, the rest down: contract T^{iK} with T_{mK} then raise m.
    let mut ricci_term = 0.0;
    for i in 0..n {
        for m in 0..n {
            let mut c = 0.0;
            for k in 0..tail1 {
                c += hi[i * tail1 + k] * lo[m * tail1 + k];
            }
            // c = T^{iK} T_{mK};  R_ij g^{jm} c
            let mut rj = 0.0;
            for j in 0..n {
                rj += geom.ricci.get(i, j) * geom.g_inv.get(j, m);
            }
            ricci_term += rj * c;
        }
    }

    // R_ijkl T^{ik L} T^{jl}_L = R_ijkl A^{ik jl} with A^{ikjl} = T^{ikL} T^{jl}_L
    let mut a_low = vec![0.0; n * n * n * n];
    for ik in 0..n * n {
        for jl in 0..n * n {
            let mut s = 0.0;
            for l in 0..tail2 {
                s += hi[ik * tail2 + l] * lo[jl * tail2 + l];
            }
            a_low[ik * n * n + jl] = s;
        }
    }
    // a_low holds T^{ikL} T_{jlL}; raise j and l
    let r = geom.riemann_low.data();
    let gi = |a: usize, b: usize| geom.g_inv.get(a, b);
    let mut curv_term = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let rv = r[((i * n + j) * n + k) * n + l];
                    if rv == 0.0 {
                        continue;
                    }
                    let mut aval = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            aval += gi(j, a) * gi(l, b) * a_low[(i * n + k) * n * n + a * n + b];
                        }
                    }
                    curv_term += rv * aval;
                }
            }
        }
    }
    Ok(ricci_term - (p as f64 - 1.0) * curv_term)
}

fn trace_magnitude(t: &DenseTensor, g_inv: &SymMatrix) -> Result<f64> {
    Ok(trace_with(t, g_inv)?.max_abs())
}

fn require_traceless(t: &DenseTensor, geom: &PointGeometry) -> Result<()> {
    let tr = trace_magnitude(t, &geom.g_inv)?;
    let scale = inner_with(t, t, &geom.g_inv)?.sqrt().max(1.0);
    if tr > TRACE_TOL * scale {
        return Err(GeomError::NotTraceless { trace: tr });
    }
    Ok(())
}

/// `Q_p(T, T)` for a traceless field at `x`.
pub fn q_p(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    let geom = point_geometry(chart, x, fd)?;
    q_p_at(&field.eval(x)?, &geom)
}

/// `Q_p(T, T)` for a traceless tensor at a computed point.
pub fn q_p_at(t: &DenseTensor, geom: &PointGeometry) -> Result<f64> {
    require_traceless(t, geom)?;
    q_form(t, geom)
}

/// `X ↦ g^{-1} X` as a row-major matrix.
fn mixed(m: &SymMatrix, g_inv: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    mat_mul(n, g_inv.data(), m.data())
}

/// Frobenius norm of `[T♯, Ric♯]`.
pub fn ricci_commutator(t: &SymMatrix, geom: &PointGeometry) -> f64 {
    let n = t.dim();
    let a = mixed(t, &geom.g_inv);
    let b = mixed(&geom.ricci, &geom.g_inv);
    let ab = mat_mul(n, &a, &b);
    let ba = mat_mul(n, &b, &a);
    ab.iter().zip(&ba).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Eigenvalues of `T` and its `g`-orthonormal eigenvectors in coordinates.
pub fn frame_eigen(t: &SymMatrix, geom: &PointGeometry) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.dim();
    let frame = geom.orthonormal_frame();
    // T in the orthonormal frame: T(e_a, e_b)
    let tf = SymMatrix::from_fn(n, |a, b| t.form(&frame[a], &frame[b]));
    let eig = symmetric_eigen(&tf)?;
    let vectors = eig
        .vectors
        .iter()
        .map(|v| (0..n).map(|i| (0..n).map(|a| v[a] * frame[a][i]).sum()).collect())
        .collect();
    Ok((eig.values, vectors))
}

/// `Σ_{i<j} sec(e_i∧e_j)(λ_i − λ_j)²` over the eigenframe of `T`.
pub fn q2_spectral_at(t: &SymMatrix, geom: &PointGeometry) -> Result<f64> {
    let commutator = ricci_commutator(t, geom);
    let tol = COMMUTATOR_TOL * frob_g(t, geom) * frob_g(&geom.ricci, geom);
    if commutator > tol {
        return Err(GeomError::NonCommuting {
            commutator,
            tolerance: tol,
        });
    }
    let (lam, e) = frame_eigen(t, geom)?;
    let n = lam.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let sec = geom.riemann_form(&e[i], &e[j], &e[i], &e[j]);
            q += sec * (lam[i] - lam[j]).powi(2);
        }
    }
    Ok(q)
}

fn frob_g(m: &SymMatrix, geom: &PointGeometry) -> f64 {
    inner_with(&m.to_tensor(), &m.to_tensor(), &geom.g_inv)
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}

pub fn q2_spectral(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    if field.rank() != 2 {
        return Err(GeomError::Shape(format!(
            "spectral Q₂ needs rank 2, got {}",
            field.rank()
        )));
    }
    let geom = point_geometry(chart, x, fd)?;
    q2_spectral_at(&field.eval(x)?.to_sym_matrix()?, &geom)
}

/// `½Δ||T||² = Q_p(T,T) + ||∇T||²` at `x`.
///
/// Rank 2 fields need the Codazzi property and a locally constant trace, and
/// `Q₂` is taken on the full tensor. Higher ranks need a traceless Codazzi field.
pub fn bochner_residual(
    field: &SymTensorField,
    chart: &ChartManifold,
    x: &[f64],
    fd: &FdSpec,
) -> Result<BochnerBreakdown> {
    let residual = codazzi_residual(field, chart, x, fd)?;
    if residual > PRECONDITION_TOL {
        return Err(GeomError::NotCodazzi { residual });
    }
    let geom = point_geometry(chart, x, fd)?;
    let t = field.eval(x)?;
    let q_term = if field.rank() == 2 {
        let dtr = trace_gradient(field, chart, x, fd)?;
        let gradient = geom.g_inv.form(&dtr, &dtr).max(0.0).sqrt();
        if gradient > PRECONDITION_TOL {
            return Err(GeomError::NonConstantTrace { gradient });
        }
        q_form(&t, &geom)?
    } else {
        q_p_at(&t, &geom)?
    };
    let nabla = covariant_derivative(field, chart, x, fd)?;
    let grad_term = inner_with(&nabla, &nabla, &geom.g_inv)?;
    let lhs = 0.5 * laplace_beltrami(&norm_sq_field(field, chart), chart, x, fd)?;
    Ok(BochnerBreakdown::new(lhs, q_term, grad_term))
}

/// `||∇T||² − ||d||T||||²`.
///
/// `d||T||` comes from `d||T||² = 2 g(∇T, T)`, valid away from zeros of `T`.
pub fn kato_gap(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    let g_inv = chart.metric_at(x).inverse()?;
    let t = field.eval(x)?;
    let norm = inner_with(&t, &t, &g_inv)?.max(0.0).sqrt();
    if norm < KATO_NORM_FLOOR {
        return Err(GeomError::VanishingNorm { norm });
    }
    let nabla = covariant_derivative(field, chart, x, fd)?;
    kato_gap_from(&nabla, &t, &g_inv, norm)
}

fn kato_gap_from(nabla: &DenseTensor, t: &DenseTensor, g_inv: &SymMatrix, norm: f64) -> Result<f64> {
    let n = t.dim();
    let stride = nabla.data().len() / n;
    let up = raise_all(t, g_inv)?;
    let d: Vec<f64> = (0..n)
        .map(|i| {
            nabla.data()[i * stride..(i + 1) * stride]
                .iter()
                .zip(up.data())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / norm
        })
        .collect();
    Ok(inner_with(nabla, nabla, g_inv)? - g_inv.form(&d, &d))
}

/// `tr(T♯³) + (n−2)/√(n(n−1)) ||T||³` for a traceless symmetric `T`.
pub fn okumura_gap_with(t: &SymMatrix, g_inv: &SymMatrix) -> Result<f64> {
    let n = t.dim();
    let a = mixed(t, g_inv);
    let a2 = mat_mul(n, &a, &a);
    let a3 = mat_mul(n, &a2, &a);
    let tr1: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let norm2: f64 = (0..n).map(|i| a2[i * n + i]).sum();
    let norm = norm2.max(0.0).sqrt();
    if tr1.abs() > 1e-10 * norm.max(1.0) {
        return Err(GeomError::NotTraceless { trace: tr1.abs() });
    }
    let cubic: f64 = (0..n).map(|i| a3[i * n + i]).sum();
    let nf = n as f64;
    let bound = -(nf - 2.0) / (nf * (nf - 1.0)).sqrt() * norm.powi(3);
    Ok(cubic - bound)
}

/// Okumura gap for a traceless matrix in an orthonormal frame.
pub fn okumura_gap(t: &SymMatrix) -> Result<f64> {
    okumura_gap_with(t, &SymMatrix::identity(t.dim()))
}

/// `(1/(n−1)) ||R̄ic||² (s − √(n(n−1)) ||R̄ic||)`.
pub fn pinching_rhs(geom: &PointGeometry) -> Result<f64> {
    let n = geom.dim() as f64;
    let rbar = traceless_part(&geom.ricci.to_tensor(), &geom.g)?;
    let norm = inner_with(&rbar, &rbar, &geom.g_inv)?.max(0.0).sqrt();
    Ok(norm * norm / (n - 1.0) * (geom.scalar - (n * (n - 1.0)).sqrt() * norm))
}

/// `Q₂(R̄ic, R̄ic)` minus the pinching lower bound.
pub fn ricci_pinching_gap(geom: &PointGeometry) -> Result<f64> {
    let rbar = traceless_part(&geom.ricci.to_tensor(), &geom.g)?;
    Ok(q_form(&rbar, geom)? - pinching_rhs(geom)?)
}

/// `½Δ||Ric||²` minus the pinching lower bound, for charts whose Ricci field is Codazzi.
pub fn laplacian_pinching_gap(ricci: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    let residual = codazzi_residual(ricci, chart, x, fd)?;
    if residual > PRECONDITION_TOL {
        return Err(GeomError::NotCodazzi { residual });
    }
    let geom = point_geometry(chart, x, fd)?;
    let lhs = 0.5 * laplace_beltrami(&norm_sq_field(ricci, chart), chart, x, fd)?;
    Ok(lhs - pinching_rhs(&geom)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityGaps {
    pub kato: Option<f64>,
    pub okumura: Option<f64>,
    pub pinching: Option<f64>,
}

/// All gaps that apply to a rank-2 field at `x`. Gaps whose precondition fails are `None`.
pub fn inequality_gaps(
    field: &SymTensorField,
    chart: &ChartManifold,
    x: &[f64],
    fd: &FdSpec,
) -> Result<InequalityGaps> {
    let geom = point_geometry(chart, x, fd)?;
    let kato = match kato_gap(field, chart, x, fd) {
        Ok(v) => Some(v),
        Err(e) if e.is_precondition() => None,
        Err(e) => return Err(e),
    };
    let t = field.eval(x)?.to_sym_matrix()?;
    let tbar = traceless_part(&t.to_tensor(), &geom.g)?.to_sym_matrix()?;
    let okumura = Some(okumura_gap_with(&tbar, &geom.g_inv)?);
    let pinching = if geom.dim() >= 3 {
        Some(ricci_pinching_gap(&geom)?)
    } else {
        None
    };
    Ok(InequalityGaps {
        kato,
        okumura,
        pinching,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::codazzi::{make_field, AnalyticFunction, FieldKind};

    fn fd() -> FdSpec {
        FdSpec::default()
    }

    #[test]
    fn q2_on_unit_two_sphere() {
        let chart = catalog::sphere_chart(2, 1.0);
        let geom = point_geometry(&chart, &[1.0, 0.2], &fd()).unwrap();
        let f = geom.orthonormal_frame();
        // T = e¹⊗e¹ − e²⊗e² in the frame
        let lo: Vec<Vec<f64>> = f.iter().map(|e| geom.g.mul_vec(e)).collect();
        let t = SymMatrix::from_fn(2, |i, j| lo[0][i] * lo[0][j] - lo[1][i] * lo[1][j]);
        let q1 = q_p_at(&t.to_tensor(), &geom).unwrap();
        let q2 = q2_spectral_at(&t, &geom).unwrap();
        assert!((q1 - 4.0).abs() < 1e-6, "{q1}");
        assert!((q1 - q2).abs() < 1e-8);
    }

    #[test]
    fn q_vanishes_for_metric() {
        let chart = catalog::sphere_chart(3, 1.0);
        let geom = point_geometry(&chart, &[1.0, 1.2, 0.1], &fd()).unwrap();
        assert!(q2_spectral_at(&geom.g, &geom).unwrap().abs() < 1e-12);
        assert!(q_form(&geom.g.to_tensor(), &geom).unwrap().abs() < 1e-7);
    }

    #[test]
    fn q_p_rejects_trace() {
        let chart = catalog::euclidean_chart(2);
        let geom = point_geometry(&chart, &[0.0, 0.0], &fd()).unwrap();
        let err = q_p_at(&SymMatrix::identity(2).to_tensor(), &geom).unwrap_err();
        assert!(matches!(err, GeomError::NotTraceless { .. }));
    }

    #[test]
    fn non_commuting_rejected() {
        let chart = catalog::cylinder_chart();
        let geom = point_geometry(&chart, &[0.0, 1.2, 1.1, 0.0], &fd()).unwrap();
        let t = SymMatrix::from_fn(4, |i, j| if i + j == 1 { 1.0 } else { 0.0 });
        assert!(matches!(q2_spectral_at(&t, &geom), Err(GeomError::NonCommuting { .. })));
    }

    #[test]
    fn bochner_for_flat_hessian() {
        let chart = catalog::euclidean_chart(3);
        let field = make_field(FieldKind::Hessian {
            chart: chart.clone(),
            function: AnalyticFunction::triple_product(3),
        })
        .unwrap();
        let b = bochner_residual(&field, &chart, &[0.3, -0.2, 0.5], &fd()).unwrap();
        // ||Hess||² = 2(x²+y²+z²), ½Δ = 6; ∇T has six unit entries
        assert!((b.lhs - 6.0).abs() < 1e-6, "{b:?}");
        assert!((b.grad_term - 6.0).abs() < 1e-9);
        assert_eq!(b.q_term, 0.0);
        assert!(b.residual.abs() < 1e-6);
    }

    #[test]
    fn bochner_rejects_non_constant_trace() {
        let chart = catalog::euclidean_chart(2);
        let field = make_field(FieldKind::Hessian {
            chart: chart.clone(),
            function: AnalyticFunction::cube(2),
        })
        .unwrap();
        let err = bochner_residual(&field, &chart, &[0.3, 0.0], &fd()).unwrap_err();
        assert!(matches!(err, GeomError::NonConstantTrace { .. }));
    }

    #[test]
    fn bochner_for_third_derivative() {
        let chart = catalog::euclidean_chart(2);
        let field = make_field(FieldKind::ThirdDerivative {
            chart: chart.clone(),
            function: AnalyticFunction::exp_cos(2),
        })
        .unwrap();
        let b = bochner_residual(&field, &chart, &[0.2, 0.4], &fd()).unwrap();
        assert!(b.grad_term > 1.0);
        assert!(b.residual.abs() < 1e-5, "{b:?}");
    }

    #[test]
    fn okumura_examples() {
        let s6 = 6f64.sqrt();
        let a = SymMatrix::diag(&[2.0 / s6, -1.0 / s6, -1.0 / s6]);
        assert!((okumura_gap(&a).unwrap() - 2.0 / s6).abs() < 1e-12);
        let b = SymMatrix::diag(&[1.0 / s6, 1.0 / s6, -2.0 / s6]);
        assert!(okumura_gap(&b).unwrap().abs() < 1e-12);
        let c = SymMatrix::diag(&[0.7, -0.7]);
        assert!(okumura_gap(&c).unwrap().abs() < 1e-15);
        assert!(okumura_gap(&SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn kato_for_metric_multiple_is_equality() {
        let chart = catalog::sphere_chart(2, 1.0);
        let field = make_field(FieldKind::MetricMultiple {
            chart: chart.clone(),
            factor: 2.0,
        })
        .unwrap();
        let gap = kato_gap(&field, &chart, &[1.0, 0.0], &fd()).unwrap();
        assert!(gap.abs() < 1e-10, "{gap}");
    }

    #[test]
    fn kato_rejects_zero_field() {
        let chart = catalog::euclidean_chart(2);
        let field = make_field(FieldKind::Constant {
            dim: 2,
            value: SymMatrix::zeros(2),
        })
        .unwrap();
        assert!(matches!(
            kato_gap(&field, &chart, &[0.0, 0.0], &fd()),
            Err(GeomError::VanishingNorm { .. })
        ));
    }

    #[test]
    fn pinching_degenerate_on_sphere() {
        let chart = catalog::sphere_chart(3, 1.0);
        let geom = point_geometry(&chart, &[1.0, 1.5, 0.3], &fd()).unwrap();
        assert!(pinching_rhs(&geom).unwrap().abs() < 1e-12);
        assert!(ricci_pinching_gap(&geom).unwrap().abs() < 1e-8);
    }

    #[test]
    fn pinching_on_cylinder() {
        // S¹×S³: Ric = diag(0,2,2,2)g, s = 6, ||R̄ic||² = 3·(1/2)² + (3/2)² = 3
        let chart = catalog::cylinder_chart();
        let geom = point_geometry(&chart, &[0.1, 1.2, 1.4, 0.2], &fd()).unwrap();
        let rhs = pinching_rhs(&geom).unwrap();
        let expect = 3.0 / 3.0 * (6.0 - 12f64.sqrt() * 3f64.sqrt());
        assert!((rhs - expect).abs() < 1e-7, "{rhs} vs {expect}");
        // equality case of the Okumura bound
        assert!(ricci_pinching_gap(&geom).unwrap().abs() < 1e-7);
    }
}
