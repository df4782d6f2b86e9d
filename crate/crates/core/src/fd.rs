//! Central finite differences with an optional Richardson level.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Step sizes used by the geometry pipeline.
///
/// `step` differentiates the metric (and immersions); `field_step`
/// differentiates tensor fields and scalar functions built on top of the
/// metric. Both are absolute, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdSpec {
    pub step: f64,
    pub field_step: f64,
    pub richardson: bool,
}

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_FIELD_STEP: f64 = 2e-3;
/// Step floors for results that are differentiated twice more.
pub const NESTED_STEP: f64 = 7e-3;
pub const NESTED_FIELD_STEP: f64 = 2e-2;

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec {
            step: DEFAULT_STEP,
            field_step: DEFAULT_FIELD_STEP,
            richardson: true,
        }
    }
}

impl FdSpec {
    pub fn metric_stencil(&self) -> Stencil {
        Stencil {
            h: self.step,
            richardson: self.richardson,
        }
    }

    pub fn field_stencil(&self) -> Stencil {
        Stencil {
            h: self.field_step,
            richardson: self.richardson,
        }
    }

    /// Raises `step` to [`NESTED_STEP`]: for curvature fields that are
    /// differentiated twice more, where round-off of the inner result dominates.
    pub fn coarse_metric(&self) -> FdSpec {
        FdSpec {
            step: self.step.max(NESTED_STEP),
            ..*self
        }
    }

    /// Raises `field_step` to [`NESTED_FIELD_STEP`]: for second derivatives of such fields.
    pub fn coarse_fields(&self) -> FdSpec {
        FdSpec {
            field_step: self.field_step.max(NESTED_FIELD_STEP),
            ..*self
        }
    }

    /// Both steps coarse.
    pub fn nested(&self) -> FdSpec {
        self.coarse_metric().coarse_fields()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite() && self.field_step > 0.0 && self.field_step.is_finite()) {
            return Err(GeomError::UnsupportedConstruction(format!(
                "finite-difference steps must be positive (step {}, field_step {})",
                self.step, self.field_step
            )));
        }
        Ok(())
    }
}

/// A single central-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub h: f64,
    pub richardson: bool,
}

impl Stencil {
    pub fn plain(h: f64) -> Self {
        Stencil { h, richardson: false }
    }

    /// Farthest offset from the evaluation point.
    pub fn reach(&self) -> f64 {
        self.h
    }
}

fn shifted(x: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += delta;
    y
}

fn central<F>(f: &F, x: &[f64], axis: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let plus = f(&shifted(x, axis, h))?;
    let minus = f(&shifted(x, axis, -h))?;
    Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}

/// Partial derivative of a vector-valued function along one coordinate axis.
pub fn partial<F>(f: &F, x: &[f64], axis: usize, st: Stencil) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let coarse = central(f, x, axis, st.h)?;
    if !st.richardson {
        return Ok(coarse);
    }
    let fine = central(f, x, axis, 0.5 * st.h)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// Partial derivative of a scalar function.
pub fn partial_scalar<F>(f: &F, x: &[f64], axis: usize, st: Stencil) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let wrapped = |y: &[f64]| f(y).map(|v| vec![v]);
    Ok(partial(&wrapped, x, axis, st)?[0])
}

/// Gradient of a scalar function.
pub fn gradient<F>(f: &F, x: &[f64], st: Stencil) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    (0..x.len()).map(|a| partial_scalar(f, x, a, st)).collect()
}

/// Coordinate Hessian by nested first differences.
pub fn hessian<F>(f: &F, x: &[f64], st: Stencil) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let n = x.len();
    let grad = |y: &[f64]| gradient(f, y, st);
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        let col = partial(&grad, x, i, st)?;
        for j in 0..n {
            h[i * n + j] = col[j];
        }
    }
    // symmetric part; the nested stencil is only symmetric up to round-off
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = s;
            h[j * n + i] = s;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_exact_on_quadratics() {
        let f = |y: &[f64]| Ok(vec![y[0] * y[0] + 3.0 * y[1]]);
        let d = partial(&f, &[1.5, 0.0], 0, Stencil::plain(1e-3)).unwrap();
        assert!((d[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn richardson_reaches_fourth_order() {
        let f = |y: &[f64]| Ok(vec![y[0].sin()]);
        let x = [0.7];
        let exact = 0.7_f64.cos();
        let e1 = (partial(
            &f,
            &x,
            0,
            Stencil {
                h: 0.1,
                richardson: true,
            },
        )
        .unwrap()[0]
            - exact)
            .abs();
        let e2 = (partial(
            &f,
            &x,
            0,
            Stencil {
                h: 0.05,
                richardson: true,
            },
        )
        .unwrap()[0]
            - exact)
            .abs();
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn hessian_of_cubic() {
        let f = |y: &[f64]| Ok(y[0] * y[1] * y[1]);
        let h = hessian(
            &f,
            &[1.0, 2.0],
            Stencil {
                h: 1e-3,
                richardson: true,
            },
        )
        .unwrap();
        let expect = [0.0, 4.0, 4.0, 2.0];
        for (a, b) in h.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
