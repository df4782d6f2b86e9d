//! Codazzi diagnostics and field constructors.

use std::sync::Arc;

use crate::chart::{self, covariant_derivative, divergence, point_geometry, ChartManifold, SymTensorField};
use crate::error::{GeomError, Result};
use crate::fd::{self, FdSpec};
use crate::tensor::{norm_with, trace_with, DenseTensor, SymMatrix};

/// Baseline finite-difference tolerance for first-derivative quantities.
pub const FD_TOL: f64 = 1e-5;
/// Tolerance used for the boolean `harmonic` verdict.
pub const HARMONIC_TOL: f64 = 10.0 * FD_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct CodazziDiagnostics {
    pub codazzi_residual: f64,
    /// `|trace_g T|` (p = 2).
    pub trace_norm: f64,
    /// `||d(trace_g T)||_g`.
    pub trace_gradient_norm: f64,
    pub divergence_norm: f64,
    pub d_nabla_norm: f64,
    pub harmonic: bool,
    /// `||δT + d(trace_g T)||_g`, only when the Codazzi residual is within tolerance.
    pub divergence_identity_residual: Option<f64>,
}

/// `max |(∇T)_{i0 i1 K} − (∇T)_{i1 i0 K}|` over all index tuples.
pub fn codazzi_residual(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    if field.rank() < 2 {
        return Err(GeomError::Shape(format!(
            "Codazzi residual needs rank >= 2, got {}",
            field.rank()
        )));
    }
    let nabla = covariant_derivative(field, chart, x, fd)?;
    Ok(first_pair_antisymmetric(&nabla).max_abs())
}

fn first_pair_antisymmetric(nabla: &DenseTensor) -> DenseTensor {
    let mut swapped = vec![0usize; nabla.rank()];
    DenseTensor::from_fn(nabla.rank(), nabla.dim(), |idx| {
        swapped.copy_from_slice(idx);
        swapped.swap(0, 1);
        nabla.get(idx) - nabla.get(&swapped)
    })
}

/// `(d^∇T)(X, Y, Z) = (∇_X T)(Y, Z) − (∇_Y T)(X, Z)` for a rank-2 field.
pub fn d_nabla(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<DenseTensor> {
    if field.rank() != 2 {
        return Err(GeomError::Shape(format!("d^∇ needs rank 2, got {}", field.rank())));
    }
    let nabla = covariant_derivative(field, chart, x, fd)?;
    Ok(first_pair_antisymmetric(&nabla))
}

/// Trace of a rank-2 field as a scalar field.
fn trace_scalar(field: &SymTensorField, chart: &ChartManifold) -> chart::ScalarField {
    let field = field.clone();
    let chart = chart.clone();
    chart::ScalarField::new(field.reach(), move |y| {
        let g_inv = chart.metric_at(y).inverse()?;
        Ok(trace_with(&field.eval(y)?, &g_inv)?.get(&[]))
    })
}

/// Coordinate gradient `∂_i(trace_g T)`.
pub fn trace_gradient(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<Vec<f64>> {
    let tr = trace_scalar(field, chart);
    let eval = |y: &[f64]| tr.eval(y);
    fd::gradient(&eval, x, fd.field_stencil())
}

/// All harmonicity diagnostics for a rank-2 field.
pub fn harmonicity_diagnostics(
    field: &SymTensorField,
    chart: &ChartManifold,
    x: &[f64],
    fd: &FdSpec,
) -> Result<CodazziDiagnostics> {
    harmonicity_diagnostics_with_tol(field, chart, x, fd, HARMONIC_TOL)
}

pub fn harmonicity_diagnostics_with_tol(
    field: &SymTensorField,
    chart: &ChartManifold,
    x: &[f64],
    fd: &FdSpec,
    tol: f64,
) -> Result<CodazziDiagnostics> {
    if field.rank() != 2 {
        return Err(GeomError::Shape(format!(
            "harmonicity is defined for rank 2, got {}",
            field.rank()
        )));
    }
    let dn = d_nabla(field, chart, x, fd)?;
    let codazzi_residual = dn.max_abs();
    let g_inv = chart.metric_at(x).inverse()?;
    let d_nabla_norm = norm_with(&dn, &g_inv)?;
    let t = field.eval(x)?;
    let trace_norm = trace_with(&t, &g_inv)?.get(&[]).abs();
    let div = divergence(field, chart, x, fd)?;
    let divergence_norm = norm_with(&div, &g_inv)?;
    let dtr = trace_gradient(field, chart, x, fd)?;
    let trace_gradient_norm = g_inv.form(&dtr, &dtr).max(0.0).sqrt();
    let divergence_identity_residual = if codazzi_residual <= tol {
        let sum: Vec<f64> = div.data().iter().zip(&dtr).map(|(a, b)| a + b).collect();
        Some(g_inv.form(&sum, &sum).max(0.0).sqrt())
    } else {
        None
    };
    Ok(CodazziDiagnostics {
        codazzi_residual,
        trace_norm,
        trace_gradient_norm,
        divergence_norm,
        d_nabla_norm,
        harmonic: d_nabla_norm <= tol && divergence_norm <= tol,
        divergence_identity_residual,
    })
}

/// A smooth function with closed-form derivatives up to third order.
///
/// Closed forms keep the Hessian fields free of nested differencing noise, so
/// that only the operators under test are differenced.
#[derive(Clone)]
pub struct AnalyticFunction {
    pub name: String,
    pub value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub hessian: Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>,
    pub third: Arc<dyn Fn(&[f64]) -> DenseTensor + Send + Sync>,
}

impl std::fmt::Debug for AnalyticFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticFunction")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl AnalyticFunction {
    /// `x¹x²x³` (harmonic, n ≥ 3).
    pub fn triple_product(dim: usize) -> Self {
        assert!(dim >= 3);
        AnalyticFunction {
            name: "x1*x2*x3".into(),
            value: Arc::new(|x| x[0] * x[1] * x[2]),
            hessian: Arc::new(move |x| {
                SymMatrix::from_fn(dim, |i, j| match (i, j) {
                    (0, 1) => x[2],
                    (0, 2) => x[1],
                    (1, 2) => x[0],
                    _ => 0.0,
                })
            }),
            third: Arc::new(move |_| {
                DenseTensor::from_fn(3, dim, |idx| {
                    let mut s = [idx[0], idx[1], idx[2]];
                    s.sort_unstable();
                    if s == [0, 1, 2] {
                        1.0
                    } else {
                        0.0
                    }
                })
            }),
        }
    }

    /// `(x¹)³ − 3x¹(x²)²`, the real part of `z³` (harmonic).
    pub fn cubic_harmonic(dim: usize) -> Self {
        assert!(dim >= 2);
        AnalyticFunction {
            name: "x1^3-3*x1*x2^2".into(),
            value: Arc::new(|x| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1]),
            hessian: Arc::new(move |x| {
                SymMatrix::from_fn(dim, |i, j| match (i, j) {
                    (0, 0) => 6.0 * x[0],
                    (0, 1) => -6.0 * x[1],
                    (1, 1) => -6.0 * x[0],
                    _ => 0.0,
                })
            }),
            third: Arc::new(move |_| {
                DenseTensor::from_fn(3, dim, |idx| {
                    let ones = idx.iter().filter(|&&i| i == 1).count();
                    if idx.iter().any(|&i| i > 1) {
                        0.0
                    } else {
                        match ones {
                            0 => 6.0,
                            2 => -6.0,
                            _ => 0.0,
                        }
                    }
                })
            }),
        }
    }

    /// `(x¹)³` (not harmonic; its Hessian has non-constant trace `6x¹`).
    pub fn cube(dim: usize) -> Self {
        AnalyticFunction {
            name: "x1^3".into(),
            value: Arc::new(|x| x[0].powi(3)),
            hessian: Arc::new(move |x| SymMatrix::from_fn(dim, |i, j| if i == 0 && j == 0 { 6.0 * x[0] } else { 0.0 })),
            third: Arc::new(move |_| {
                DenseTensor::from_fn(3, dim, |idx| if idx.iter().all(|&i| i == 0) { 6.0 } else { 0.0 })
            }),
        }
    }

    /// `e^{x¹} cos x²` (harmonic).
    pub fn exp_cos(dim: usize) -> Self {
        assert!(dim >= 2);
        AnalyticFunction {
            name: "exp(x1)*cos(x2)".into(),
            value: Arc::new(|x| x[0].exp() * x[1].cos()),
            hessian: Arc::new(move |x| {
                let (e, c, s) = (x[0].exp(), x[1].cos(), x[1].sin());
                SymMatrix::from_fn(dim, |i, j| match (i, j) {
                    (0, 0) => e * c,
                    (0, 1) => -e * s,
                    (1, 1) => -e * c,
                    _ => 0.0,
                })
            }),
            third: Arc::new(move |x| {
                let (e, c, s) = (x[0].exp(), x[1].cos(), x[1].sin());
                DenseTensor::from_fn(3, dim, |idx| {
                    if idx.iter().any(|&i| i > 1) {
                        return 0.0;
                    }
                    // ∂_1^a ∂_2^b of e^{x1} cos x2
                    match idx.iter().filter(|&&i| i == 1).count() {
                        0 => e * c,
                        1 => -e * s,
                        2 => -e * c,
                        _ => e * s,
                    }
                })
            }),
        }
    }
}

/// Constructor requests for [`make_field`].
#[derive(Clone, Debug)]
pub enum FieldKind {
    MetricMultiple {
        chart: ChartManifold,
        factor: f64,
    },
    /// `Hess f` on a flat chart.
    Hessian {
        chart: ChartManifold,
        function: AnalyticFunction,
    },
    /// `∇³f` on a flat chart (a totally symmetric rank-3 field).
    ThirdDerivative {
        chart: ChartManifold,
        function: AnalyticFunction,
    },
    /// Ricci tensor of the chart, computed by differencing at `fd`.
    RicciOf {
        chart: ChartManifold,
        fd: FdSpec,
    },
    /// `T − (trace_g T / n) g`.
    TracelessPartOf {
        chart: ChartManifold,
        field: SymTensorField,
    },
    /// A closed-form constant field.
    Constant {
        dim: usize,
        value: SymMatrix,
    },
}

const FLATNESS_TOL: f64 = 1e-6;

fn require_flat(chart: &ChartManifold) -> Result<()> {
    let fd = FdSpec::default();
    let geo = point_geometry(chart, &chart.domain().center(), &fd)?;
    let r = geo.riemann_low.max_abs();
    if r > FLATNESS_TOL {
        return Err(GeomError::UnsupportedConstruction(format!(
            "Hessian fields are only Codazzi on flat charts; {} has |R| = {r:.3e}",
            chart.name()
        )));
    }
    Ok(())
}

pub fn make_field(kind: FieldKind) -> Result<SymTensorField> {
    match kind {
        FieldKind::MetricMultiple { chart, factor } => {
            let n = chart.dim();
            Ok(SymTensorField::new(
                format!("metric_multiple({factor})"),
                2,
                n,
                0.0,
                move |y| Ok(chart.metric_at(y).to_tensor().scale(factor)),
            ))
        }
        FieldKind::Hessian { chart, function } => {
            require_flat(&chart)?;
            let n = chart.dim();
            let h = function.hessian.clone();
            Ok(SymTensorField::new(
                format!("hessian({})", function.name),
                2,
                n,
                0.0,
                move |y| Ok(h(y).to_tensor()),
            ))
        }
        FieldKind::ThirdDerivative { chart, function } => {
            require_flat(&chart)?;
            let n = chart.dim();
            let t = function.third.clone();
            Ok(SymTensorField::new(
                format!("third_derivative({})", function.name),
                3,
                n,
                0.0,
                move |y| Ok(t(y)),
            ))
        }
        FieldKind::RicciOf { chart, fd } => {
            fd.validate()?;
            let n = chart.dim();
            // reach covers the inner 3h margin guard of point_geometry
            Ok(SymTensorField::new(
                crate::catalog::RICCI_FIELD,
                2,
                n,
                3.0 * fd.step,
                move |y| Ok(point_geometry(&chart, y, &fd)?.ricci.to_tensor()),
            ))
        }
        FieldKind::TracelessPartOf { chart, field } => {
            if field.rank() != 2 {
                return Err(GeomError::UnsupportedConstruction(format!(
                    "traceless part implemented for rank 2, got {}",
                    field.rank()
                )));
            }
            let n = chart.dim();
            let name = format!("traceless({})", field.name());
            let reach = field.reach();
            Ok(SymTensorField::new(name, 2, n, reach, move |y| {
                let g = chart.metric_at(y);
                traceless_part(&field.eval(y)?, &g)
            }))
        }
        FieldKind::Constant { dim, value } => {
            if value.dim() != dim {
                return Err(GeomError::Shape("constant field dimension mismatch".into()));
            }
            Ok(SymTensorField::new("constant", 2, dim, 0.0, move |_| {
                Ok(value.to_tensor())
            }))
        }
    }
}

/// `T − (trace_g T / n) g` for a rank-2 tensor.
pub fn traceless_part(t: &DenseTensor, g: &SymMatrix) -> Result<DenseTensor> {
    let n = g.dim() as f64;
    let tr = trace_with(t, &g.inverse()?)?.get(&[]);
    t.sub(&g.to_tensor().scale(tr / n))
}

/// Symmetry check for a field at a point.
pub fn field_symmetry_defect(field: &SymTensorField, x: &[f64]) -> Result<f64> {
    Ok(field.eval(x)?.symmetry_defect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn fd() -> FdSpec {
        FdSpec::default()
    }

    #[test]
    fn function_times_metric_is_not_codazzi() {
        let chart = catalog::euclidean_chart(3);
        let t = SymTensorField::new("x1 g", 2, 3, 0.0, |y| {
            Ok(SymMatrix::identity(3).to_tensor().scale(y[0]))
        });
        let r = codazzi_residual(&t, &chart, &[0.1, 0.2, -0.3], &fd()).unwrap();
        assert!((r - 1.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn flat_hessians_are_codazzi() {
        let chart = catalog::euclidean_chart(3);
        for function in [AnalyticFunction::triple_product(3), AnalyticFunction::exp_cos(3)] {
            let t = make_field(FieldKind::Hessian {
                chart: chart.clone(),
                function,
            })
            .unwrap();
            assert!(codazzi_residual(&t, &chart, &[0.3, -0.2, 0.1], &fd()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn d_nabla_is_antisymmetric_in_first_pair() {
        let chart = catalog::euclidean_chart(3);
        let t = SymTensorField::new("mixed", 2, 3, 0.0, |y| {
            Ok(SymMatrix::from_fn(3, |i, j| y[i] * y[j] + (i + j) as f64 * y[0].sin()).to_tensor())
        });
        let d = d_nabla(&t, &chart, &[0.2, -0.1, 0.4], &fd()).unwrap();
        assert!(d.max_abs() > 0.1);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((d.get(&[i, j, k]) + d.get(&[j, i, k])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hessian_of_cube_is_codazzi_but_not_harmonic() {
        let chart = catalog::euclidean_chart(3);
        let t = make_field(FieldKind::Hessian {
            chart: chart.clone(),
            function: AnalyticFunction::cube(3),
        })
        .unwrap();
        let x = [0.3, 0.1, -0.2];
        let d = harmonicity_diagnostics(&t, &chart, &x, &fd()).unwrap();
        assert!(d.codazzi_residual < 1e-8);
        assert!((d.trace_gradient_norm - 6.0).abs() < 1e-6);
        assert!(!d.harmonic);
        assert!(d.divergence_identity_residual.unwrap() < 1e-6);
    }

    #[test]
    fn ricci_of_three_sphere_is_harmonic() {
        let chart = catalog::sphere_chart(3, 1.0);
        let t = make_field(FieldKind::RicciOf {
            chart: chart.clone(),
            fd: catalog::ricci_field_fd(&fd()),
        })
        .unwrap();
        let d = harmonicity_diagnostics(&t, &chart, &[1.2, 1.4, 0.2], &fd()).unwrap();
        assert!((d.trace_norm - 6.0).abs() < 1e-6, "{d:?}");
        assert!(d.harmonic, "{d:?}");
    }

    #[test]
    fn traceless_part_of_diagonal() {
        let t = SymMatrix::diag(&[3.0, 1.0]).to_tensor();
        let r = traceless_part(&t, &SymMatrix::identity(2)).unwrap();
        assert_eq!(r.data(), &[1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn hessian_needs_flat_chart() {
        let r = make_field(FieldKind::Hessian {
            chart: catalog::sphere_chart(2, 1.0),
            function: AnalyticFunction::exp_cos(2),
        });
        assert!(matches!(r, Err(GeomError::UnsupportedConstruction(_))));
    }
}
