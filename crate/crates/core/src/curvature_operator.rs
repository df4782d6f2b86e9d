//! The curvature operator of the second kind on traceless symmetric 2-tensors.
//!
//! `R̊(T)_il = R_ijkl T^{jk}`. Its matrix is taken in an explicit
//! `g`-orthonormal basis of `S₀²` built from a Gram–Schmidt frame, so the
//! eigenvectors in a report can be read back as tensors.

use serde::Serialize;

use crate::chart::PointGeometry;
use crate::eigen::symmetric_eigen;
use crate::error::{GeomError, Result};
use crate::tensor::{inner_with, raise_all, trace_with, DenseTensor, SymMatrix};

/// Eigenvalues within this of zero count as zero.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct S02Basis {
    pub point: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    /// Covariant components of each basis element.
    pub elements: Vec<DenseTensor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    NegativeSemidefinite,
    NegativeDefinite,
}

impl Definiteness {
    pub fn classify(eigenvalues: &[f64], tol: f64) -> Self {
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min > tol {
            Definiteness::PositiveDefinite
        } else if min >= -tol && max > tol {
            Definiteness::PositiveSemidefinite
        } else if min >= -tol && max <= tol {
            // the zero operator is both; report it as semidefinite from above
            Definiteness::PositiveSemidefinite
        } else if max < -tol {
            Definiteness::NegativeDefinite
        } else if max <= tol {
            Definiteness::NegativeSemidefinite
        } else {
            Definiteness::Indefinite
        }
    }

    pub fn is_nonnegative(self) -> bool {
        matches!(
            self,
            Definiteness::PositiveDefinite | Definiteness::PositiveSemidefinite
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum {
    /// Symmetric part of the raw matrix.
    pub matrix: SymMatrix,
    /// Max |M_ab − M_ba| of the raw matrix.
    pub asymmetry: f64,
    pub eigenvalues: Vec<f64>,
    pub classification: Definiteness,
}

fn lower_vector(g: &SymMatrix, v: &[f64]) -> Vec<f64> {
    g.mul_vec(v)
}

/// Covariant components of `Σ c_ab e_a ⊗ e_b` for frame vectors `e`.
fn frame_tensor(g: &SymMatrix, frame: &[Vec<f64>], coeff: impl Fn(usize, usize) -> f64) -> DenseTensor {
    let n = g.dim();
    let low: Vec<Vec<f64>> = frame.iter().map(|e| lower_vector(g, e)).collect();
    DenseTensor::from_fn(2, n, |idx| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                let c = coeff(a, b);
                if c != 0.0 {
                    s += c * low[a][idx[0]] * low[b][idx[1]];
                }
            }
        }
        s
    })
}

/// Orthonormal basis of traceless symmetric 2-tensors at the point.
pub fn s02_basis(geom: &PointGeometry) -> Result<S02Basis> {
    let n = geom.dim();
    geom.g.cholesky()?;
    let frame = geom.orthonormal_frame();
    let mut raw: Vec<DenseTensor> = Vec::with_capacity(n * (n + 1) / 2 - 1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            raw.push(frame_tensor(&geom.g, &frame, |a, b| {
                if (a, b) == (i, j) || (a, b) == (j, i) {
                    r
                } else {
                    0.0
                }
            }));
        }
    }
    // diag(1,..,1,−k,0,..)/sqrt(k(k+1)) for k = 1..n−1
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        raw.push(frame_tensor(&geom.g, &frame, |a, b| {
            if a != b {
                0.0
            } else if a < k {
                1.0 / norm
            } else if a == k {
                -(k as f64) / norm
            } else {
                0.0
            }
        }));
    }
    // re-orthonormalize under g(·,·)
    let mut elements: Vec<DenseTensor> = Vec::with_capacity(raw.len());
    for t in raw {
        let mut v = t;
        for e in &elements {
            let p = inner_with(&v, e, &geom.g_inv)?;
            v = v.sub(&e.scale(p))?;
        }
        let norm = inner_with(&v, &v, &geom.g_inv)?.sqrt();
        elements.push(v.scale(1.0 / norm));
    }
    Ok(S02Basis {
        point: geom.x.clone(),
        frame,
        elements,
    })
}

/// `R̊(T)_il = R_ijkl T^{jk}`.
pub fn apply_operator(geom: &PointGeometry, t: &DenseTensor) -> Result<DenseTensor> {
    let n = geom.dim();
    let up = raise_all(t, &geom.g_inv)?;
    let r = geom.riemann_low.data();
    let u = up.data();
    Ok(DenseTensor::from_fn(2, n, |idx| {
        let (i, l) = (idx[0], idx[1]);
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += r[((i * n + j) * n + k) * n + l] * u[j * n + k];
            }
        }
        s
    }))
}

/// `g(R̊θ, θ)`.
pub fn operator_form(geom: &PointGeometry, theta: &DenseTensor) -> Result<f64> {
    inner_with(&apply_operator(geom, theta)?, theta, &geom.g_inv)
}

pub fn operator_matrix(geom: &PointGeometry, basis: &S02Basis) -> Result<OperatorSpectrum> {
    if basis.point != geom.x {
        return Err(GeomError::PointMismatch);
    }
    let m = basis.elements.len();
    let images: Vec<DenseTensor> = basis
        .elements
        .iter()
        .map(|t| apply_operator(geom, t))
        .collect::<Result<_>>()?;
    let mut raw = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            raw[a * m + b] = inner_with(&images[b], &basis.elements[a], &geom.g_inv)?;
        }
    }
    let mut asymmetry = 0.0_f64;
    for a in 0..m {
        for b in a + 1..m {
            asymmetry = asymmetry.max((raw[a * m + b] - raw[b * m + a]).abs());
        }
    }
    let matrix = SymMatrix::symmetric_part(m, &raw);
    let eigenvalues = symmetric_eigen(&matrix)?.values;
    let classification = Definiteness::classify(&eigenvalues, POSITIVITY_TOL);
    Ok(OperatorSpectrum {
        matrix,
        asymmetry,
        eigenvalues,
        classification,
    })
}

/// Spectrum of `R̊` at the point.
pub fn operator_spectrum(geom: &PointGeometry) -> Result<OperatorSpectrum> {
    operator_matrix(geom, &s02_basis(geom)?)
}

/// `g`-orthonormalizes the pair `(X, Y)`, or fails if they are dependent.
pub fn orthonormal_pair(geom: &PointGeometry, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nx = geom.dot(x, x).sqrt();
    if !(nx > 0.0) {
        return Err(GeomError::DegeneratePlane);
    }
    let e1: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let p = geom.dot(y, &e1);
    let mut e2: Vec<f64> = y.iter().zip(&e1).map(|(a, b)| a - p * b).collect();
    let p2 = geom.dot(&e2, &e1);
    e2.iter_mut().zip(&e1).for_each(|(a, b)| *a -= p2 * b);
    let ny = geom.dot(&e2, &e2).max(0.0).sqrt();
    let ny_in = geom.dot(y, y).sqrt();
    if !(ny > 1e-10 * ny_in) {
        return Err(GeomError::DegeneratePlane);
    }
    e2.iter_mut().for_each(|v| *v /= ny);
    Ok((e1, e2))
}

/// Sectional curvature of the plane spanned by `X, Y`.
pub fn sectional_curvature(geom: &PointGeometry, x: &[f64], y: &[f64]) -> Result<f64> {
    let (e1, e2) = orthonormal_pair(geom, x, y)?;
    Ok(geom.riemann_form(&e1, &e2, &e1, &e2))
}

/// Smallest sectional curvature over the coordinate-frame planes and the given extra planes.
pub fn min_sectional_curvature(geom: &PointGeometry, extra: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let frame = geom.orthonormal_frame();
    let n = frame.len();
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            m = m.min(sectional_curvature(geom, &frame[i], &frame[j])?);
        }
    }
    for (x, y) in extra {
        m = m.min(sectional_curvature(geom, x, y)?);
    }
    Ok(m)
}

/// `X ⊗ Y + Y ⊗ X` in covariant components.
pub fn symmetric_product(geom: &PointGeometry, x: &[f64], y: &[f64]) -> DenseTensor {
    let xl = lower_vector(&geom.g, x);
    let yl = lower_vector(&geom.g, y);
    DenseTensor::from_fn(2, geom.dim(), |i| xl[i[0]] * yl[i[1]] + yl[i[0]] * xl[i[1]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgingResiduals {
    /// max |g(R̊θ, θ) − 2 sec(X∧Y)| with θ = X⊗Y + Y⊗X.
    pub op_sec_residual: f64,
    /// max |Ric(X, X) − Σ_a sec(X∧e_a)| over completed orthonormal bases.
    pub ricci_sum_residual: f64,
}

/// Extends the unit vector `x` to a `g`-orthonormal basis `x, e_2, …, e_n`.
pub fn complete_basis(geom: &PointGeometry, x: &[f64]) -> Vec<Vec<f64>> {
    let n = geom.dim();
    let mut basis = vec![x.to_vec()];
    let coord = geom.orthonormal_frame();
    for c in coord {
        if basis.len() == n {
            break;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for e in &basis {
                let p = geom.dot(&v, e);
                v.iter_mut().zip(e).for_each(|(a, b)| *a -= p * b);
            }
        }
        let nv = geom.dot(&v, &v).max(0.0).sqrt();
        if nv > 1e-6 {
            v.iter_mut().for_each(|a| *a /= nv);
            basis.push(v);
        }
    }
    basis
}

/// The operator–sectional identity and the Ricci-sum identity at a point.
///
/// `pairs` are arbitrary spanning pairs; each is orthonormalized first. The
/// coordinate Gram–Schmidt frame is always included.
pub fn bridging_identities(geom: &PointGeometry, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<BridgingResiduals> {
    let frame = geom.orthonormal_frame();
    let n = frame.len();
    let mut planes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            planes.push((frame[i].clone(), frame[j].clone()));
        }
    }
    for (x, y) in pairs {
        planes.push(orthonormal_pair(geom, x, y)?);
    }

    let mut op_sec = 0.0_f64;
    for (x, y) in &planes {
        let theta = symmetric_product(geom, x, y);
        let lhs = operator_form(geom, &theta)?;
        let sec = geom.riemann_form(x, y, x, y);
        op_sec = op_sec.max((lhs - 2.0 * sec).abs());
    }

    let mut starts: Vec<Vec<f64>> = frame.clone();
    starts.extend(planes.iter().skip(n * (n - 1) / 2).map(|(x, _)| x.clone()));
    let mut ric_sum = 0.0_f64;
    for x in &starts {
        let basis = complete_basis(geom, x);
        let ric = geom.ricci.form(x, x);
        let sum: f64 = basis[1..].iter().map(|e| geom.riemann_form(x, e, x, e)).sum();
        ric_sum = ric_sum.max((ric - sum).abs());
    }
    Ok(BridgingResiduals {
        op_sec_residual: op_sec,
        ricci_sum_residual: ric_sum,
    })
}

/// `trace_g` of a rank-2 tensor at the point.
pub fn trace_at(geom: &PointGeometry, t: &DenseTensor) -> Result<f64> {
    Ok(trace_with(t, &geom.g_inv)?.get(&[]))
}
