//! Cyclic Jacobi eigensolver for small symmetric matrices.

use crate::error::Result;
use crate::tensor::SymMatrix;

/// Off-diagonal Frobenius norm (relative to the matrix norm) at which sweeps stop.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues ascending; `vectors[k]` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymmetricEigen {
    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.values[k] * self.vectors[k][i] * self.vectors[k][j])
                .sum()
        })
    }
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Ties are ordered by the eigenvector sign rule: every eigenvector is flipped
/// so its first component above 1e-12 in magnitude is positive.
pub fn symmetric_eigen(m: &SymMatrix) -> Result<SymmetricEigen> {
    let n = m.dim();
    let mut a: Vec<f64> = m.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius().max(f64::MIN_POSITIVE);

    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← Jᵀ A J, rotating rows/cols p and q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            orient(&mut col);
            (a[k * n + k], col)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| lex_cmp(&y.1, &x.1)));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(SymmetricEigen { values, vectors })
}

fn orient(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_spectrum() {
        let e = symmetric_eigen(&SymMatrix::identity(4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
    }

    #[test]
    fn diagonal_input() {
        let e = symmetric_eigen(&SymMatrix::diag(&[3.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0]);
        assert_eq!(e.vectors[1], vec![1.0, 0.0]);
    }

    #[test]
    fn swap_matrix() {
        let m = SymMatrix::from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let r = 0.5_f64.sqrt();
        assert!((e.vectors[0][0] - r).abs() < 1e-14 && (e.vectors[0][1] + r).abs() < 1e-14);
    }

    #[test]
    fn residuals_small_on_dense_matrix() {
        let m = SymMatrix::from_fn(5, |i, j| {
            ((i * 7 + j * 3) as f64).cos() + if i == j { 2.0 } else { 0.0 }
        });
        let e = symmetric_eigen(&m).unwrap();
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            let mv = m.mul_vec(v);
            for (a, b) in mv.iter().zip(v) {
                assert!((a - lam * b).abs() < 1e-9 * m.frobenius());
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
