//! Dense multi-index tensors at a single point.
//!
//! Components are stored row-major by index tuple, so a rank-`p` tensor in
//! dimension `n` holds exactly `n^p` entries. Variance is not tracked in the
//! type; callers move indices explicitly with [`adjust_index`].

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    rank: usize,
    dim: usize,
    data: Vec<f64>,
}

/// Direction for [`adjust_index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMove {
    Raise,
    Lower,
}

impl DenseTensor {
    pub fn zeros(rank: usize, dim: usize) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        DenseTensor {
            rank,
            dim,
            data: vec![0.0; dim.pow(rank as u32)],
        }
    }

    pub fn scalar(value: f64, dim: usize) -> Self {
        DenseTensor {
            rank: 0,
            dim,
            data: vec![value],
        }
    }

    pub fn from_vec(rank: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = dim.pow(rank as u32);
        if dim == 0 || data.len() != expected {
            return Err(GeomError::Shape(format!(
                "rank {rank} dim {dim} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { rank, dim, data })
    }

    pub fn from_fn(rank: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = DenseTensor::zeros(rank, dim);
        for (flat, idx) in MultiIndex::new(rank, dim).enumerate() {
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        DenseTensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(DenseTensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(DenseTensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Max-norm of the difference.
    pub fn max_diff(&self, other: &DenseTensor) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.rank != other.rank || self.dim != other.dim {
            return Err(GeomError::Shape(format!(
                "rank/dim ({}, {}) vs ({}, {})",
                self.rank, self.dim, other.rank, other.dim
            )));
        }
        Ok(())
    }

    /// Permutes slots: output slot `s` takes input slot `perm[s]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let mut src = vec![0usize; self.rank];
        DenseTensor::from_fn(self.rank, self.dim, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[p] = idx[s];
            }
            self.get(&src)
        })
    }

    /// Largest change of any entry under any slot permutation.
    ///
    /// Exhaustive for rank ≤ 4; above that only adjacent transpositions are
    /// checked, which generate the symmetric group.
    pub fn symmetry_defect(&self) -> f64 {
        if self.rank < 2 {
            return 0.0;
        }
        let perms: Vec<Vec<usize>> = if self.rank <= 4 {
            permutations(self.rank)
        } else {
            (0..self.rank - 1)
                .map(|k| {
                    let mut p: Vec<usize> = (0..self.rank).collect();
                    p.swap(k, k + 1);
                    p
                })
                .collect()
        };
        perms
            .iter()
            .map(|p| self.permute(p).max_diff(self).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Matrix view of a rank-2 tensor.
    pub fn to_sym_matrix(&self) -> Result<SymMatrix> {
        if self.rank != 2 {
            return Err(GeomError::Shape(format!("expected rank 2, got {}", self.rank)));
        }
        SymMatrix::from_rows(self.dim, self.data.clone())
    }
}

/// Iterator over all index tuples of a given rank, in row-major order.
pub struct MultiIndex {
    dim: usize,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub fn new(rank: usize, dim: usize) -> Self {
        MultiIndex {
            dim,
            current: vec![0; rank],
            done: dim == 0,
        }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // odometer increment, last slot fastest
        let mut k = self.current.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.current[k] += 1;
            if self.current[k] < self.dim {
                break;
            }
            self.current[k] = 0;
        }
        Some(out)
    }
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Full symmetrization: the average over all slot permutations.
pub fn symmetrize(t: &DenseTensor) -> DenseTensor {
    if t.rank < 2 {
        return t.clone();
    }
    let perms = permutations(t.rank);
    let mut acc = DenseTensor::zeros(t.rank, t.dim);
    for p in &perms {
        let tp = t.permute(p);
        for (a, b) in acc.data.iter_mut().zip(tp.data) {
            *a += b;
        }
    }
    acc.scale(1.0 / perms.len() as f64)
}

/// Contracts slot `slot` of `t` with the matrix `m`:
/// `out[.., i, ..] = Σ_j m[i][j] t[.., j, ..]`.
pub fn contract_slot(t: &DenseTensor, slot: usize, m: &SymMatrix) -> Result<DenseTensor> {
    if slot >= t.rank {
        return Err(GeomError::Shape(format!(
            "slot {slot} out of range for rank {}",
            t.rank
        )));
    }
    if m.dim() != t.dim {
        return Err(GeomError::Shape(format!(
            "metric dim {} vs tensor dim {}",
            m.dim(),
            t.dim
        )));
    }
    let n = t.dim;
    let mut src = vec![0usize; t.rank];
    Ok(DenseTensor::from_fn(t.rank, n, |idx| {
        src.copy_from_slice(idx);
        let i = idx[slot];
        let mut s = 0.0;
        for j in 0..n {
            src[slot] = j;
            s += m.get(i, j) * t.get(&src);
        }
        s
    }))
}

/// Raises or lowers one slot using `metric` (covariant components `g_ij`).
pub fn adjust_index(t: &DenseTensor, slot: usize, metric: &SymMatrix, direction: IndexMove) -> Result<DenseTensor> {
    match direction {
        IndexMove::Lower => contract_slot(t, slot, metric),
        IndexMove::Raise => contract_slot(t, slot, &metric.inverse()?),
    }
}

/// Raises every slot using the inverse metric `g_inv`.
pub fn raise_all(t: &DenseTensor, g_inv: &SymMatrix) -> Result<DenseTensor> {
    let mut out = t.clone();
    for slot in 0..t.rank {
        out = contract_slot(&out, slot, g_inv)?;
    }
    Ok(out)
}

/// Metric trace over the first two slots, `g^{ij} T_{ij...}`.
pub fn trace_with(t: &DenseTensor, g_inv: &SymMatrix) -> Result<DenseTensor> {
    if t.rank < 2 {
        return Err(GeomError::Shape(format!("trace needs rank >= 2, got {}", t.rank)));
    }
    if g_inv.dim() != t.dim {
        return Err(GeomError::Shape("metric/tensor dimension mismatch".into()));
    }
    let n = t.dim;
    let mut src = vec![0usize; t.rank];
    Ok(DenseTensor::from_fn(t.rank - 2, n, |rest| {
        src[2..].copy_from_slice(rest);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                src[0] = i;
                src[1] = j;
                s += g_inv.get(i, j) * t.get(&src);
            }
        }
        s
    }))
}

/// Pointwise inner product `g(T, S)`: the first argument fully raised, then
/// contracted against the second over all slots.
pub fn inner_with(t: &DenseTensor, s: &DenseTensor, g_inv: &SymMatrix) -> Result<f64> {
    t.check_same_shape(s)?;
    let up = raise_all(t, g_inv)?;
    Ok(up.data.iter().zip(&s.data).map(|(a, b)| a * b).sum())
}

/// `g`-norm, clamped at zero against round-off.
pub fn norm_with(t: &DenseTensor, g_inv: &SymMatrix) -> Result<f64> {
    Ok(inner_with(t, t, g_inv)?.max(0.0).sqrt())
}

/// Trace of `T` over its first two slots and the inner product `g(T, S)`.
pub fn trace_and_norm(t: &DenseTensor, s: &DenseTensor, metric: &SymMatrix) -> Result<(DenseTensor, f64)> {
    t.check_same_shape(s)?;
    let g_inv = metric.inverse()?;
    Ok((trace_with(t, &g_inv)?, inner_with(t, s, &g_inv)?))
}

/// Symmetric real matrix, stored full row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Relative asymmetry accepted by [`SymMatrix::from_rows`].
pub const SYMMETRY_TOL: f64 = 1e-10;

impl SymMatrix {
    pub fn identity(dim: usize) -> Self {
        SymMatrix::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        SymMatrix::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix::from_fn(dim, |_, _| 0.0)
    }

    /// Builds from the upper triangle of `f`; symmetric by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMatrix { dim, data }
    }

    /// Validates symmetry to [`SYMMETRY_TOL`] (relative to the largest entry)
    /// and stores the exact symmetric part.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(GeomError::Shape(format!(
                "{dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        let asym = asymmetry(dim, &data);
        let scale = data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if asym > SYMMETRY_TOL * scale {
            return Err(GeomError::NotSymmetric { asymmetry: asym });
        }
        Ok(SymMatrix::symmetric_part(dim, &data))
    }

    /// `(A + Aᵀ)/2` of an arbitrary square matrix.
    pub fn symmetric_part(dim: usize, data: &[f64]) -> Self {
        SymMatrix::from_fn(dim, |i, j| 0.5 * (data[i * dim + j] + data[j * dim + i]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor {
            rank: 2,
            dim: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, f: f64) -> Self {
        SymMatrix::from_fn(self.dim, |i, j| f * self.get(i, j))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Bilinear form `uᵀ M v`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(self.mul_vec(v)).map(|(a, b)| a * b).sum()
    }

    /// Lower Cholesky factor, or a singular-metric error if not positive definite.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 1e-14 * scale.max(1e-300)) {
                return Err(GeomError::SingularMetric(format!(
                    "non-positive pivot {d:.3e} at column {j}"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(l)
    }

    /// Inverse of a positive-definite matrix via Cholesky.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let n = self.dim;
        let l = self.cholesky()?;
        // columns of L⁻¹ by forward substitution
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= l[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / l[i * n + i];
            }
        }
        // A⁻¹ = L⁻ᵀ L⁻¹
        Ok(SymMatrix::from_fn(n, |i, j| {
            (i.max(j)..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
        }))
    }
}

fn asymmetry(dim: usize, data: &[f64]) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..dim {
        for j in i + 1..dim {
            m = m.max((data[i * dim + j] - data[j * dim + i]).abs());
        }
    }
    m
}

/// Product of two square row-major matrices.
pub fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_rank2() {
        let t = DenseTensor::from_vec(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let s = symmetrize(&t);
        assert_eq!(s.data(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn symmetrize_is_identity_on_symmetric_input() {
        let t = SymMatrix::from_fn(3, |i, j| (i + 2 * j) as f64 + (i * j) as f64).to_tensor();
        let t = symmetrize(&t);
        assert_eq!(symmetrize(&t), t);
    }

    #[test]
    fn symmetrize_rank3_single_entry() {
        // T_{121} = 6 in 1-based indexing, i.e. T[0][1][0] = 6.
        let mut t = DenseTensor::zeros(3, 2);
        t.set(&[0, 1, 0], 6.0);
        let s = symmetrize(&t);
        for idx in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            assert!((s.get(&idx) - 2.0).abs() < 1e-15);
        }
        assert_eq!(s.get(&[0, 0, 0]), 0.0);
        assert_eq!(s.get(&[1, 1, 0]), 0.0);
        assert!(s.symmetry_defect() < 1e-15);
    }

    #[test]
    fn raise_with_identity_is_noop() {
        let t = DenseTensor::from_fn(3, 3, |i| (i[0] * 9 + i[1] * 3 + i[2]) as f64);
        let g = SymMatrix::identity(3);
        for slot in 0..3 {
            assert_eq!(adjust_index(&t, slot, &g, IndexMove::Raise).unwrap(), t);
        }
    }

    #[test]
    fn raise_vector_with_diagonal_metric() {
        let v = DenseTensor::from_vec(1, 2, vec![8.0, 3.0]).unwrap();
        let g = SymMatrix::diag(&[4.0, 1.0]);
        let up = adjust_index(&v, 0, &g, IndexMove::Raise).unwrap();
        assert!((up.get(&[0]) - 2.0).abs() < 1e-15);
        assert!((up.get(&[1]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn raise_then_lower_round_trips() {
        let g = SymMatrix::from_rows(3, vec![2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]).unwrap();
        let t = DenseTensor::from_fn(2, 3, |i| (i[0] as f64 - 0.5 * i[1] as f64).sin());
        let up = adjust_index(&t, 1, &g, IndexMove::Raise).unwrap();
        let back = adjust_index(&up, 1, &g, IndexMove::Lower).unwrap();
        assert!(back.max_diff(&t).unwrap() < 1e-12);
    }

    #[test]
    fn trace_and_norm_examples() {
        let g = SymMatrix::identity(3);
        let (tr, nn) = trace_and_norm(&g.to_tensor(), &g.to_tensor(), &g).unwrap();
        assert!((tr.get(&[]) - 3.0).abs() < 1e-15);
        assert!((nn - 3.0).abs() < 1e-15);

        let e2 = SymMatrix::identity(2);
        let t = SymMatrix::diag(&[1.0, -1.0]).to_tensor();
        let (tr, nn) = trace_and_norm(&t, &t, &e2).unwrap();
        assert_eq!(tr.get(&[]), 0.0);
        assert!((nn - 2.0).abs() < 1e-15);

        let g = SymMatrix::diag(&[2.0, 2.0]);
        let t = SymMatrix::identity(2).to_tensor();
        let (tr, _) = trace_and_norm(&t, &t, &g).unwrap();
        assert!((tr.get(&[]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = SymMatrix::identity(2);
        let a = DenseTensor::zeros(2, 2);
        let b = DenseTensor::zeros(3, 2);
        assert!(matches!(trace_and_norm(&a, &b, &g), Err(GeomError::Shape(_))));
        assert!(DenseTensor::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = SymMatrix::diag(&[1.0, 0.0]);
        let v = DenseTensor::zeros(1, 2);
        assert!(matches!(
            adjust_index(&v, 0, &g, IndexMove::Raise),
            Err(GeomError::SingularMetric(_))
        ));
    }

    #[test]
    fn asymmetric_rows_rejected() {
        assert!(matches!(
            SymMatrix::from_rows(2, vec![1.0, 2.0, 0.0, 1.0]),
            Err(GeomError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn inverse_matches_hand_value() {
        let g = SymMatrix::from_rows(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let inv = g.inverse().unwrap();
        let expect = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for (a, b) in inv.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
