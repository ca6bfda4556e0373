//! Dense N-way complex tensors.
//!
//! Storage is row-major: the last mode varies fastest. Grouping contiguous
//! modes is therefore a pure reshape, and the grouped factor of a rank-1 term
//! is the Kronecker product of the group's vectors with the first-listed
//! vector varying slowest. `khatri_rao`, `kronecker`, `unfold` and the
//! coarray selection matrices all follow this one convention.

use crate::error::{Error, Result};
use crate::linalg::{frobenius, split_gemm, CMatrix, SplitView, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for n in (0..shape.len().saturating_sub(1)).rev() {
        s[n] = s[n + 1] * shape[n + 1];
    }
    s
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Shape("a tensor needs at least one mode".into()));
        }
        if shape.contains(&0) {
            return Err(Error::Shape(format!("mode sizes must be positive, got {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![ZERO; len])
    }

    /// Builds a tensor from a function of the multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for n in (0..shape.len()).rev() {
                idx[n] += 1;
                if idx[n] < shape[n] {
                    break;
                }
                idx[n] = 0;
            }
        }
        Self::new(shape, data)
    }

    /// Rank-1 tensor `v_1 o v_2 o ... o v_N`.
    pub fn rank_one(vectors: &[&[C64]]) -> Result<Self> {
        let mut out = DenseTensor::new(vec![1], vec![C64::new(1.0, 0.0)])?;
        let mut first = true;
        for v in vectors {
            let t = DenseTensor::new(vec![v.len()], v.to_vec())?;
            out = if first { t } else { out.outer(&t) };
            first = false;
        }
        Ok(out)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index arity");
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| {
            assert!(i < d, "index {index:?} out of bounds for {:?}", self.shape);
            acc * d + i
        })
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.data)
    }

    pub fn conj(&self) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Same entries, new shape.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<DenseTensor> {
        DenseTensor::new(shape, self.data.clone())
    }

    /// Mode-`n` product `X x_n A` (`n` is zero-based); `A` is `J x I_n`.
    ///
    /// Sparse selection-like matrices take a skip-zero path; dense ones go
    /// through the blocked real kernel.
    pub fn mode_n_product(&self, a: &CMatrix, n: usize) -> Result<DenseTensor> {
        if n >= self.order() {
            return Err(Error::Shape(format!("mode {n} of an order-{} tensor", self.order())));
        }
        let i_n = self.shape[n];
        if a.ncols() != i_n {
            return Err(Error::Shape(format!(
                "mode-{n} product: matrix has {} columns, mode has size {i_n}",
                a.ncols()
            )));
        }
        let j_n = a.nrows();
        let pre: usize = self.shape[..n].iter().product();
        let post: usize = self.shape[n + 1..].iter().product();
        let mut shape = self.shape.clone();
        shape[n] = j_n;
        let nnz = a.iter().filter(|z| **z != ZERO).count();
        let mut out = vec![ZERO; pre * j_n * post];
        if 4 * nnz <= a.len() || post * i_n < 64 {
            for p in 0..pre {
                let src = &self.data[p * i_n * post..(p + 1) * i_n * post];
                let dst = &mut out[p * j_n * post..(p + 1) * j_n * post];
                for j in 0..j_n {
                    let row = &mut dst[j * post..(j + 1) * post];
                    for i in 0..i_n {
                        let coef = a[(j, i)];
                        if coef == ZERO {
                            continue;
                        }
                        for (d, s) in row.iter_mut().zip(&src[i * post..(i + 1) * post]) {
                            *d += coef * s;
                        }
                    }
                }
            }
        } else {
            let (ar, ai): (Vec<f64>, Vec<f64>) = a.iter().map(|z| (z.re, z.im)).unzip();
            let (xr, xi): (Vec<f64>, Vec<f64>) = self.data.iter().map(|z| (z.re, z.im)).unzip();
            let mut or = vec![0.0; out.len()];
            let mut oi = vec![0.0; out.len()];
            for p in 0..pre {
                let s = p * i_n * post;
                let d = p * j_n * post;
                split_gemm(
                    SplitView {
                        re: &ar,
                        im: &ai,
                        rows: j_n,
                        cols: i_n,
                        rs: 1,
                        cs: j_n as isize,
                    },
                    SplitView {
                        re: &xr[s..s + i_n * post],
                        im: &xi[s..s + i_n * post],
                        rows: i_n,
                        cols: post,
                        rs: post as isize,
                        cs: 1,
                    },
                    0.0,
                    &mut or[d..d + j_n * post],
                    &mut oi[d..d + j_n * post],
                    post as isize,
                    1,
                );
            }
            for ((z, r), i) in out.iter_mut().zip(or).zip(oi) {
                *z = C64::new(r, i);
            }
        }
        DenseTensor::new(shape, out)
    }

    /// Outer product; the result's modes are `self`'s followed by `other`'s.
    pub fn outer(&self, other: &DenseTensor) -> DenseTensor {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut data = Vec::with_capacity(self.len() * other.len());
        for &a in &self.data {
            data.extend(other.data.iter().map(|&b| a * b));
        }
        DenseTensor { shape, data }
    }

    /// Mode permutation with transpose semantics: output mode `k` is input mode `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.shape);
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let len = self.len();
        let mut data = Vec::with_capacity(len);
        // Walk the output in row-major order; the innermost mode is copied as a strided run.
        let inner = shape[n - 1];
        let inner_stride = src_strides[n - 1];
        let mut idx = vec![0usize; n - 1];
        let outer_count = len / inner;
        for _ in 0..outer_count {
            let base: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            data.extend((0..inner).map(|t| self.data[base + t * inner_stride]));
            for m in (0..n - 1).rev() {
                idx[m] += 1;
                if idx[m] < shape[m] {
                    break;
                }
                idx[m] = 0;
            }
        }
        DenseTensor::new(shape, data)
    }

    /// Generalised tensorisation: merges each group of modes into one mode.
    ///
    /// `groups` must partition `0..N`. Modes are first permuted into group
    /// order, then each group collapses with its first-listed mode slowest.
    pub fn group_modes(&self, groups: &[Vec<usize>]) -> Result<DenseTensor> {
        let order: Vec<usize> = groups.iter().flatten().copied().collect();
        let n = self.order();
        let mut seen = vec![false; n];
        if groups.iter().any(Vec::is_empty)
            || order.len() != n
            || order.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Shape(format!("{groups:?} is not a partition of 0..{n}")));
        }
        let permuted = self.permute(&order)?;
        let shape = groups
            .iter()
            .map(|g| g.iter().map(|&m| self.shape[m]).product())
            .collect();
        DenseTensor::new(shape, permuted.data)
    }

    /// Mode-`n` unfolding as a `(prod of other sizes) x I_n` matrix.
    ///
    /// Rows run over the remaining modes in increasing mode order (row-major),
    /// so for a CP tensor `[[A_1, ..., A_N]]` the unfolding equals
    /// `(A_1 . ... . A_{n-1} . A_{n+1} . ... . A_N) A_n^T`.
    pub fn unfold(&self, n: usize) -> Result<CMatrix> {
        if n >= self.order() {
            return Err(Error::Shape(format!("mode {n} of an order-{} tensor", self.order())));
        }
        let i_n = self.shape[n];
        let pre: usize = self.shape[..n].iter().product();
        let post: usize = self.shape[n + 1..].iter().product();
        let rows = pre * post;
        let mut m = CMatrix::zeros(rows, i_n);
        for p in 0..pre {
            for i in 0..i_n {
                let src = &self.data[(p * i_n + i) * post..(p * i_n + i + 1) * post];
                for (q, &z) in src.iter().enumerate() {
                    m[(p * post + q, i)] = z;
                }
            }
        }
        Ok(m)
    }
}

/// Column-wise Kronecker product; row `i * rows(B) + j` of column `r` is `A[i,r] B[j,r]`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ia, ib) = (a.nrows(), b.nrows());
    Ok(CMatrix::from_fn(ia * ib, a.ncols(), |row, r| {
        a[(row / ib, r)] * b[(row % ib, r)]
    }))
}

pub fn kronecker(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Sum of rank-1 terms `sum_r a_r o b_r o c_r` from three factor matrices.
pub fn cp_tensor(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<DenseTensor> {
    let r = a.ncols();
    if b.ncols() != r || c.ncols() != r {
        return Err(Error::Shape("factor matrices need equal column counts".into()));
    }
    let shape = vec![a.nrows(), b.nrows(), c.nrows()];
    let bc = khatri_rao(b, c)?;
    let mut data = vec![ZERO; a.nrows() * bc.nrows()];
    for i in 0..a.nrows() {
        let row = &mut data[i * bc.nrows()..(i + 1) * bc.nrows()];
        for k in 0..r {
            let coef = a[(i, k)];
            for (d, s) in row.iter_mut().zip(bc.column(k).iter()) {
                *d += coef * s;
            }
        }
    }
    DenseTensor::new(shape, data)
}
