//! Hypersurfaces of the unit sphere `S^{n+1} ⊂ ℝ^{n+2}` given by an immersion.

use std::fmt;
use std::sync::Arc;

use crate::chart::{covariant_derivative, laplace_beltrami, norm_sq_field, ChartManifold, Domain, SymTensorField};
use crate::error::{GeomError, Result};
use crate::fd::{self, FdSpec, Stencil};
use crate::tensor::{inner_with, trace_with, SymMatrix};
use crate::weitzenbock::BochnerBreakdown;

/// `|H|` above this makes the Simons identity inapplicable.
pub const MINIMALITY_TOL: f64 = 1e-6;

/// Recorded in reports.
pub const ORIENTATION_RULE: &str =
    "nu_k = orientation * det[F, dF/du^1, ..., dF/du^n, e_k], normalized; orientation = +1 unless flipped";

pub type ImmersionFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Hypersurface {
    name: String,
    domain: Domain,
    immersion: ImmersionFn,
    orientation: f64,
}

impl fmt::Debug for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypersurface")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .finish_non_exhaustive()
    }
}

impl Hypersurface {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        immersion: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let h = Hypersurface {
            name: name.into(),
            domain,
            immersion: Arc::new(immersion),
            orientation: 1.0,
        };
        h.eval(&h.domain.center())?;
        Ok(h)
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

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// The same immersion with the opposite normal.
    pub fn flipped(&self) -> Self {
        Hypersurface {
            orientation: -self.orientation,
            ..self.clone()
        }
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let f = (self.immersion)(u);
        if f.len() != self.dim() + 2 {
            return Err(GeomError::Shape(format!(
                "immersion {} returned {} coordinates, expected {}",
                self.name,
                f.len(),
                self.dim() + 2
            )));
        }
        Ok(f)
    }
}

/// `| |F(u)| − 1 |`.
pub fn sphere_constraint_residual(h: &Hypersurface, u: &[f64]) -> Result<f64> {
    let f = h.eval(u)?;
    Ok((f.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
}

fn jet_margin(fd: &FdSpec) -> f64 {
    3.0 * fd.field_step
}

fn jacobian_at(h: &Hypersurface, u: &[f64], st: Stencil) -> Result<Vec<Vec<f64>>> {
    let f = |y: &[f64]| h.eval(y);
    (0..h.dim()).map(|a| fd::partial(&f, u, a, st)).collect()
}

fn metric_from_jacobian(j: &[Vec<f64>]) -> SymMatrix {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    SymMatrix::from_fn(j.len(), |a, b| dot(&j[a], &j[b]))
}

fn determinant(mut m: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a * n + c].abs().total_cmp(&m[b * n + c].abs()))
            .unwrap_or(c);
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            det = -det;
        }
        let piv = m[c * n + c];
        det *= piv;
        for r in c + 1..n {
            let factor = m[r * n + c] / piv;
            for k in c..n {
                m[r * n + k] -= factor * m[c * n + k];
            }
        }
    }
    det
}

/// `ν_k = det[F, J_1, …, J_n, e_k]`, normalized and oriented.
fn unit_normal(f: &[f64], j: &[Vec<f64>], orientation: f64) -> Result<Vec<f64>> {
    let m = f.len();
    let mut nu: Vec<f64> = (0..m)
        .map(|k| {
            let mut a = vec![0.0; m * m];
            for r in 0..m {
                a[r * m] = f[r];
                for (c, col) in j.iter().enumerate() {
                    a[r * m + c + 1] = col[r];
                }
                a[r * m + m - 1] = if r == k { 1.0 } else { 0.0 };
            }
            determinant(a, m)
        })
        .collect();
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = j
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product::<f64>();
    if !(norm > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(GeomError::DegenerateImmersion);
    }
    nu.iter_mut().for_each(|v| *v *= orientation / norm);
    Ok(nu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedGeometry {
    pub induced_g: SymMatrix,
    pub normal: Vec<f64>,
    /// `jacobian[a] = ∂F/∂u^a`.
    pub jacobian: Vec<Vec<f64>>,
}

pub fn induced_geometry(h: &Hypersurface, u: &[f64], fd: &FdSpec) -> Result<InducedGeometry> {
    h.domain.require_margin(u, jet_margin(fd))?;
    let jacobian = jacobian_at(h, u, fd.field_stencil())?;
    let induced_g = metric_from_jacobian(&jacobian);
    if induced_g.cholesky().is_err() {
        return Err(GeomError::DegenerateImmersion);
    }
    let normal = unit_normal(&h.eval(u)?, &jacobian, h.orientation)?;
    Ok(InducedGeometry {
        induced_g,
        normal,
        jacobian,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalData {
    pub induced_g: SymMatrix,
    pub sff: SymMatrix,
    pub mean_curvature: f64,
    pub sff_norm_sq: f64,
}

pub fn second_fundamental_form(h: &Hypersurface, u: &[f64], fd: &FdSpec) -> Result<SecondFundamentalData> {
    let geo = induced_geometry(h, u, fd)?;
    let n = h.dim();
    let st = fd.field_stencil();
    let jac = |y: &[f64]| jacobian_at(h, y, st).map(|j| j.concat());
    let m = n + 2;
    let second: Vec<Vec<f64>> = (0..n).map(|a| fd::partial(&jac, u, a, st)).collect::<Result<_>>()?;
    // second[a][b * m + k] = ∂_a ∂_b F^k
    let s_ab = |a: usize, b: usize| -> f64 { (0..m).map(|k| second[a][b * m + k] * geo.normal[k]).sum() };
    let sff = SymMatrix::from_fn(n, |a, b| 0.5 * (s_ab(a, b) + s_ab(b, a)));
    let g_inv = geo.induced_g.inverse()?;
    let t = sff.to_tensor();
    let mean_curvature = trace_with(&t, &g_inv)?.get(&[]) / n as f64;
    let sff_norm_sq = inner_with(&t, &t, &g_inv)?;
    Ok(SecondFundamentalData {
        induced_g: geo.induced_g,
        sff,
        mean_curvature,
        sff_norm_sq,
    })
}

/// The parameter domain with the induced metric, as a chart.
///
/// The domain is pulled in by the Jacobian stencil so every metric evaluation
/// stays inside the parameter box.
pub fn induced_chart(h: &Hypersurface, fd: &FdSpec) -> Result<ChartManifold> {
    let domain = h
        .domain
        .shrink(fd.field_step)
        .ok_or_else(|| GeomError::UnsupportedConstruction(format!("parameter domain of {} too small", h.name)))?;
    let h = h.clone();
    let st = fd.field_stencil();
    let name = format!("induced({})", h.name);
    Ok(ChartManifold::new(name, domain, move |y| {
        let j = jacobian_at(&h, y, st).expect("immersion output length checked at construction");
        metric_from_jacobian(&j)
    }))
}

/// The second fundamental form as a rank-2 field on the parameter domain.
pub fn sff_field(h: &Hypersurface, fd: &FdSpec) -> SymTensorField {
    let h = h.clone();
    let fd = *fd;
    let n = h.dim();
    let name = format!("sff({})", h.name);
    SymTensorField::new(name, 2, n, jet_margin(&fd), move |y| {
        Ok(second_fundamental_form(&h, y, &fd)?.sff.to_tensor())
    })
}

/// `½Δ||S||² = ||S||²(n − ||S||²) + ||∇S||²` at `u` for a minimal hypersurface.
pub fn simons_identity_residual(h: &Hypersurface, u: &[f64], fd: &FdSpec) -> Result<BochnerBreakdown> {
    let data = second_fundamental_form(h, u, fd)?;
    if data.mean_curvature.abs() > MINIMALITY_TOL {
        return Err(GeomError::NotMinimal {
            mean_curvature: data.mean_curvature,
        });
    }
    let chart = induced_chart(h, fd)?;
    let field = sff_field(h, fd);
    let g_inv = chart.metric_at(u).inverse()?;
    let nabla = covariant_derivative(&field, &chart, u, fd)?;
    let grad_term = inner_with(&nabla, &nabla, &g_inv)?;
    let lhs = 0.5 * laplace_beltrami(&norm_sq_field(&field, &chart), &chart, u, fd)?;
    let n = h.dim() as f64;
    let q_term = data.sff_norm_sq * (n - data.sff_norm_sq);
    Ok(BochnerBreakdown::new(lhs, q_term, grad_term))
}
