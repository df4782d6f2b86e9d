//! Chart-based metric geometry.
//!
//! A [`ChartManifold`] is a single coordinate box with a metric evaluator.
//! Everything else (Christoffel symbols, curvature, covariant derivatives of
//! tensor fields, divergence, Laplace–Beltrami) is computed from it by central
//! finite differences.
//!
//! Index conventions:
//! * `gamma[k][i][j] = Γ^k_ij`, symmetric in `i, j`.
//! * `riemann_up[m][b][c][d] = R^m_{bcd}`, the components of `R(∂_c, ∂_d)∂_b`.
//! * `riemann_low[a][b][c][d] = g_am R^m_{bcd}`, so that for orthonormal `X, Y`
//!   the sectional curvature is `R_abcd X^a Y^b X^c Y^d` and the unit sphere
//!   gives `+1`.
//! * `ricci[b][d] = R^m_{bmd}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::fd::{self, FdSpec, Stencil};
use crate::tensor::{inner_with, DenseTensor, SymMatrix};

pub type MetricFn = Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(&[f64]) -> Result<DenseTensor> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// Human-readable statement of the curvature index convention, carried in reports.
pub const CONVENTION: &str = "R_abcd = g_am R^m_bcd with R^m_bcd the components of R(d_c,d_d)d_b; \
sec(X^Y) = R_abcd X^a Y^b X^c Y^d for orthonormal X,Y (unit sphere +1); Ric_bd = R^m_bmd";

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty domain");
        Domain { lo, hi }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Distance to the nearest face; negative outside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .map(|((lo, hi), v)| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn require_margin(&self, x: &[f64], margin: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeomError::Shape(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.dim()
            )));
        }
        let distance = self.distance_to_boundary(x);
        if distance < margin {
            return Err(GeomError::BoundaryMargin { distance, margin });
        }
        Ok(())
    }

    /// The box with every face pulled in by `margin`, or `None` if that empties it.
    pub fn shrink(&self, margin: f64) -> Option<Domain> {
        let lo: Vec<f64> = self.lo.iter().map(|v| v + margin).collect();
        let hi: Vec<f64> = self.hi.iter().map(|v| v - margin).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            Some(Domain { lo, hi })
        } else {
            None
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

#[derive(Clone)]
pub struct ChartManifold {
    name: String,
    domain: Domain,
    metric: MetricFn,
}

impl fmt::Debug for ChartManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartManifold")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ChartManifold {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        metric: impl Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    ) -> Self {
        ChartManifold {
            name: name.into(),
            domain,
            metric: Arc::new(metric),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn metric_at(&self, x: &[f64]) -> SymMatrix {
        (self.metric)(x)
    }

    fn metric_data(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.metric_at(x).data().to_vec())
    }
}

/// A scalar function on a chart together with the stencil reach its evaluator needs.
#[derive(Clone)]
pub struct ScalarField {
    eval: ScalarFn,
    reach: f64,
}

impl ScalarField {
    pub fn new(reach: f64, f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(f),
            reach,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        (self.eval)(x)
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }
}

/// A symmetric covariant `p`-tensor field given pointwise.
///
/// `reach` is how far from the evaluation point the evaluator itself samples
/// (zero for closed-form fields, positive for fields built by differencing).
#[derive(Clone)]
pub struct SymTensorField {
    name: String,
    rank: usize,
    dim: usize,
    reach: f64,
    eval: TensorFn,
}

impl fmt::Debug for SymTensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymTensorField")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .field("dim", &self.dim)
            .field("reach", &self.reach)
            .finish_non_exhaustive()
    }
}

impl SymTensorField {
    pub fn new(
        name: impl Into<String>,
        rank: usize,
        dim: usize,
        reach: f64,
        eval: impl Fn(&[f64]) -> Result<DenseTensor> + Send + Sync + 'static,
    ) -> Self {
        SymTensorField {
            name: name.into(),
            rank,
            dim,
            reach,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn eval(&self, x: &[f64]) -> Result<DenseTensor> {
        let t = (self.eval)(x)?;
        if t.rank() != self.rank || t.dim() != self.dim {
            return Err(GeomError::Shape(format!(
                "field {} produced rank {} dim {}, declared rank {} dim {}",
                self.name,
                t.rank(),
                t.dim(),
                self.rank,
                self.dim
            )));
        }
        Ok(t)
    }
}

/// All curvature data at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    pub g: SymMatrix,
    pub g_inv: SymMatrix,
    pub gamma: DenseTensor,
    pub riemann_up: DenseTensor,
    pub riemann_low: DenseTensor,
    /// Symmetric part of `R^m_{bmd}`.
    pub ricci: SymMatrix,
    /// Max |R_ij − R_ji| before symmetrizing.
    pub ricci_asymmetry: f64,
    pub scalar: f64,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `R(u, v, w, z)` for coordinate vectors.
    pub fn riemann_form(&self, u: &[f64], v: &[f64], w: &[f64], z: &[f64]) -> f64 {
        let n = self.dim();
        let r = self.riemann_low.data();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                let ab = u[a] * v[b];
                if ab == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let abc = ab * w[c];
                    if abc == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        s += abc * z[d] * r[((a * n + b) * n + c) * n + d];
                    }
                }
            }
        }
        s
    }

    /// Largest violation of the algebraic Riemann symmetries and the first Bianchi identity.
    pub fn riemann_symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let r = |a: usize, b: usize, c: usize, d: usize| self.riemann_low.get(&[a, b, c, d]);
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = r(a, b, c, d);
                        worst = worst
                            .max((v + r(b, a, c, d)).abs())
                            .max((v + r(a, b, d, c)).abs())
                            .max((v - r(c, d, a, b)).abs())
                            .max((v + r(a, c, d, b) + r(a, d, b, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Scalar curvature recomputed from the stored Ricci tensor.
    pub fn scalar_from_ricci(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g_inv.get(i, j) * self.ricci.get(i, j);
            }
        }
        s
    }

    /// A `g`-orthonormal frame by Gram–Schmidt on the coordinate vectors.
    pub fn orthonormal_frame(&self) -> Vec<Vec<f64>> {
        orthonormal_frame(&self.g)
    }

    /// `g(u, v)` for coordinate vectors.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.g.form(u, v)
    }
}

/// Gram–Schmidt of the coordinate basis with respect to `g`.
pub fn orthonormal_frame(g: &SymMatrix) -> Vec<Vec<f64>> {
    let n = g.dim();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        // two passes of modified Gram–Schmidt for a clean frame
        for _ in 0..2 {
            for e in &frame {
                let p = g.form(&v, e);
                v.iter_mut().zip(e).for_each(|(vi, ei)| *vi -= p * ei);
            }
        }
        let norm = g.form(&v, &v).sqrt();
        v.iter_mut().for_each(|c| *c /= norm);
        frame.push(v);
    }
    frame
}

fn geometry_margin(fd: &FdSpec) -> f64 {
    3.0 * fd.step
}

fn field_margin(fd: &FdSpec, reach: f64) -> f64 {
    3.0 * fd.step.max(fd.field_step) + reach
}

/// Christoffel symbols of the second kind at `x`, from first differences of the metric.
pub fn christoffel(chart: &ChartManifold, x: &[f64], st: Stencil) -> Result<DenseTensor> {
    let n = chart.dim();
    let g_inv = chart.metric_at(x).inverse()?;
    let metric = |y: &[f64]| chart.metric_data(y);
    let dg: Vec<Vec<f64>> = (0..n).map(|m| fd::partial(&metric, x, m, st)).collect::<Result<_>>()?;
    let d = |m: usize, i: usize, j: usize| dg[m][i * n + j];
    let mut gamma = DenseTensor::zeros(3, n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += g_inv.get(k, l) * (d(i, l, j) + d(j, l, i) - d(l, i, j));
                }
                gamma.set(&[k, i, j], 0.5 * s);
                gamma.set(&[k, j, i], 0.5 * s);
            }
        }
    }
    Ok(gamma)
}

/// Full curvature data at `x`.
pub fn point_geometry(chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<PointGeometry> {
    chart.domain.require_margin(x, geometry_margin(fd))?;
    let n = chart.dim();
    let st = fd.metric_stencil();
    let g = chart.metric_at(x);
    let g_inv = g.inverse()?;
    let gamma = christoffel(chart, x, st)?;
    let gamma_fn = |y: &[f64]| christoffel(chart, y, st).map(DenseTensor::into_data);
    // dgamma[c] holds ∂_c Γ^k_ij
    let dgamma: Vec<Vec<f64>> = (0..n)
        .map(|c| fd::partial(&gamma_fn, x, c, st))
        .collect::<Result<_>>()?;
    let dg = |c: usize, k: usize, i: usize, j: usize| dgamma[c][(k * n + i) * n + j];
    let gm = |k: usize, i: usize, j: usize| gamma.get(&[k, i, j]);

    // R^m_{bcd} = ∂_c Γ^m_{db} − ∂_d Γ^m_{cb} + Γ^m_{ce} Γ^e_{db} − Γ^m_{de} Γ^e_{cb}
    let half = |m: usize, b: usize, c: usize, d: usize| {
        let mut s = dg(c, m, d, b);
        for e in 0..n {
            s += gm(m, c, e) * gm(e, d, b);
        }
        s
    };
    let mut riemann_up = DenseTensor::zeros(4, n);
    for m in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in c + 1..n {
                    let v = half(m, b, c, d) - half(m, b, d, c);
                    riemann_up.set(&[m, b, c, d], v);
                    riemann_up.set(&[m, b, d, c], -v);
                }
            }
        }
    }
    let riemann_low = crate::tensor::contract_slot(&riemann_up, 0, &g)?;

    let mut ric = vec![0.0; n * n];
    for b in 0..n {
        for d in 0..n {
            ric[b * n + d] = (0..n).map(|m| riemann_up.get(&[m, b, m, d])).sum();
        }
    }
    let mut ricci_asymmetry = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            ricci_asymmetry = ricci_asymmetry.max((ric[i * n + j] - ric[j * n + i]).abs());
        }
    }
    let ricci = SymMatrix::symmetric_part(n, &ric);
    let mut scalar = 0.0;
    for i in 0..n {
        for j in 0..n {
            scalar += g_inv.get(i, j) * ricci.get(i, j);
        }
    }
    Ok(PointGeometry {
        x: x.to_vec(),
        g,
        g_inv,
        gamma,
        riemann_up,
        riemann_low,
        ricci,
        ricci_asymmetry,
        scalar,
    })
}

/// `(∇T)_{i k1..kp} = ∂_i T_{k1..kp} − Σ_a Γ^m_{i k_a} T_{..m..}`; the derivative slot comes first.
pub fn covariant_derivative(
    field: &SymTensorField,
    chart: &ChartManifold,
    x: &[f64],
    fd: &FdSpec,
) -> Result<DenseTensor> {
    chart.domain.require_margin(x, field_margin(fd, field.reach()))?;
    let gamma = christoffel(chart, x, fd.metric_stencil())?;
    covariant_derivative_with(field, &gamma, x, fd.field_stencil())
}

pub(crate) fn covariant_derivative_with(
    field: &SymTensorField,
    gamma: &DenseTensor,
    x: &[f64],
    st: Stencil,
) -> Result<DenseTensor> {
    let n = field.dim();
    let p = field.rank();
    let t = field.eval(x)?;
    let eval = |y: &[f64]| field.eval(y).map(DenseTensor::into_data);
    let partials: Vec<Vec<f64>> = (0..n).map(|i| fd::partial(&eval, x, i, st)).collect::<Result<_>>()?;
    let stride = n.pow(p as u32);
    let mut src = vec![0usize; p];
    Ok(DenseTensor::from_fn(p + 1, n, |idx| {
        let i = idx[0];
        let ks = &idx[1..];
        let flat = ks.iter().fold(0, |acc, &k| acc * n + k);
        debug_assert!(flat < stride);
        let mut v = partials[i][flat];
        for a in 0..p {
            src.copy_from_slice(ks);
            for m in 0..n {
                src[a] = m;
                v -= gamma.get(&[m, i, ks[a]]) * t.get(&src);
            }
        }
        v
    }))
}

/// `(δT)_{k2..kp} = −g^{im} (∇T)_{i m k2..kp}`.
pub fn divergence(field: &SymTensorField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<DenseTensor> {
    if field.rank() == 0 {
        return Err(GeomError::Shape("divergence needs rank >= 1".into()));
    }
    let nabla = covariant_derivative(field, chart, x, fd)?;
    let g_inv = chart.metric_at(x).inverse()?;
    Ok(crate::tensor::trace_with(&nabla, &g_inv)?.scale(-1.0))
}

/// `Δ_B f = g^{ij} (∂_i ∂_j f − Γ^k_ij ∂_k f)`.
pub fn laplace_beltrami(f: &ScalarField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    chart.domain.require_margin(x, field_margin(fd, f.reach()))?;
    let n = chart.dim();
    let g_inv = chart.metric_at(x).inverse()?;
    let gamma = christoffel(chart, x, fd.metric_stencil())?;
    let eval = |y: &[f64]| f.eval(y);
    let st = fd.field_stencil();
    let hess = fd::hessian(&eval, x, st)?;
    let grad = fd::gradient(&eval, x, st)?;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut v = hess[i * n + j];
            for k in 0..n {
                v -= gamma.get(&[k, i, j]) * grad[k];
            }
            s += g_inv.get(i, j) * v;
        }
    }
    Ok(s)
}

/// `g^{ij} ∂_i f ∂_j f`.
pub fn gradient_norm_sq(f: &ScalarField, chart: &ChartManifold, x: &[f64], fd: &FdSpec) -> Result<f64> {
    chart.domain.require_margin(x, field_margin(fd, f.reach()))?;
    let g_inv = chart.metric_at(x).inverse()?;
    let eval = |y: &[f64]| f.eval(y);
    let grad = fd::gradient(&eval, x, fd.field_stencil())?;
    Ok(g_inv.form(&grad, &grad))
}

/// The scalar `x ↦ ||T(x)||²_g`.
pub fn norm_sq_field(field: &SymTensorField, chart: &ChartManifold) -> ScalarField {
    let field = field.clone();
    let chart = chart.clone();
    ScalarField::new(field.reach(), move |y| {
        let t = field.eval(y)?;
        let g_inv = chart.metric_at(y).inverse()?;
        inner_with(&t, &t, &g_inv)
    })
}

/// The metric itself as a rank-2 field.
pub fn metric_field(chart: &ChartManifold) -> SymTensorField {
    let c = chart.clone();
    SymTensorField::new("metric", 2, chart.dim(), 0.0, move |y| Ok(c.metric_at(y).to_tensor()))
}
