//! Dense complex linear-algebra helpers.
//!
//! Large products go through `matrixmultiply::dgemm` on split real/imaginary
//! planes (four real products per complex product); small ones fall back to
//! nalgebra. Decompositions (SVD, Schur) come from nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Strided view of a complex matrix stored as two real planes.
#[derive(Clone, Copy)]
pub(crate) struct SplitView<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: isize,
    pub cs: isize,
}

/// `c <- beta * c + a * b` on split planes.
pub(crate) fn split_gemm(
    a: SplitView<'_>,
    b: SplitView<'_>,
    beta: f64,
    c_re: &mut [f64],
    c_im: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    check_extent(c_re.len(), m, n, rsc, csc);
    check_extent(c_im.len(), m, n, rsc, csc);
    check_extent(a.re.len(), m, k, a.rs, a.cs);
    check_extent(b.re.len(), k, n, b.rs, b.cs);
    // SAFETY: extents of all operands were checked against their strides.
    unsafe {
        let (cr, ci) = (c_re.as_mut_ptr(), c_im.as_mut_ptr());
        let (ar, ai) = (a.re.as_ptr(), a.im.as_ptr());
        let (br, bi) = (b.re.as_ptr(), b.im.as_ptr());
        let (ars, acs, brs, bcs) = (a.rs, a.cs, b.rs, b.cs);
        raw_dgemm(m, k, n, 1.0, ar, ars, acs, br, brs, bcs, beta, cr, rsc, csc);
        raw_dgemm(m, k, n, -1.0, ai, ars, acs, bi, brs, bcs, 1.0, cr, rsc, csc);
        raw_dgemm(m, k, n, 1.0, ar, ars, acs, bi, brs, bcs, beta, ci, rsc, csc);
        raw_dgemm(m, k, n, 1.0, ai, ars, acs, br, brs, bcs, 1.0, ci, rsc, csc);
    }
}

/// Strided view of a real matrix.
#[derive(Clone, Copy)]
pub(crate) struct RealView<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: isize,
    pub cs: isize,
}

/// `c <- beta * c + a * b` for real strided operands.
pub(crate) fn real_gemm(a: RealView<'_>, b: RealView<'_>, beta: f64, c: &mut [f64], rsc: isize, csc: isize) {
    assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    check_extent(c.len(), m, n, rsc, csc);
    check_extent(a.data.len(), m, k, a.rs, a.cs);
    check_extent(b.data.len(), k, n, b.rs, b.cs);
    // SAFETY: extents of all operands were checked against their strides.
    unsafe {
        raw_dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// `c <- beta * c + alpha * a * b`; `c` is not read when `beta == 0`.
///
/// # Safety
/// Every operand must be valid for the given shape and strides.
#[allow(clippy::too_many_arguments)]
unsafe fn raw_dgemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    rsa: isize,
    csa: isize,
    b: *const f64,
    rsb: isize,
    csb: isize,
    beta: f64,
    c: *mut f64,
    rsc: isize,
    csc: isize,
) {
    matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
}

/// Interleaved `re, im` copy of complex data, i.e. a row-major complex
/// `r x c` matrix becomes a row-major real `r x 2c` matrix.
pub(crate) fn interleave(data: &[C64]) -> Vec<f64> {
    data.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn check_extent(len: usize, rows: usize, cols: usize, rs: isize, cs: isize) {
    if rows == 0 || cols == 0 {
        return;
    }
    assert!(rs >= 0 && cs >= 0, "negative strides are not used");
    let last = (rows - 1) * rs as usize + (cols - 1) * cs as usize;
    assert!(last < len, "operand extent exceeds buffer");
}

pub(crate) fn split(data: &[C64]) -> (Vec<f64>, Vec<f64>) {
    data.iter().map(|z| (z.re, z.im)).unzip()
}

pub(crate) fn join(re: &[f64], im: &[f64]) -> Vec<C64> {
    re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect()
}

/// Matrix product, dispatching large products to the blocked real kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m * k * n < 32 * 32 * 32 {
        return a * b;
    }
    let (ar, ai) = split(a.as_slice());
    let (br, bi) = split(b.as_slice());
    let mut cr = vec![0.0; m * n];
    let mut ci = vec![0.0; m * n];
    split_gemm(
        SplitView {
            re: &ar,
            im: &ai,
            rows: m,
            cols: k,
            rs: 1,
            cs: m as isize,
        },
        SplitView {
            re: &br,
            im: &bi,
            rows: k,
            cols: n,
            rs: 1,
            cs: k as isize,
        },
        0.0,
        &mut cr,
        &mut ci,
        1,
        m as isize,
    );
    CMatrix::from_vec(m, n, join(&cr, &ci))
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Moore-Penrose pseudo-inverse; singular values below `rtol * s_max` are dropped.
pub fn pinv(a: &CMatrix, rtol: f64) -> CMatrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMatrix::zeros(n, m);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rtol * s_max;
    let mut out = CMatrix::zeros(n, m);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let v_col = v_t.row(idx).adjoint();
        let u_row = u.column(idx).adjoint();
        out += (v_col * u_row).unscale(s);
    }
    out
}

/// Ratio of the smallest to the largest singular value (0 for rank-deficient input).
pub fn reciprocal_condition(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Eigen-decomposition of a general complex square matrix via the complex Schur form.
///
/// Returns eigenvalues and unit-norm eigenvectors (as columns).
pub fn eig(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("eig: {}x{} is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::IllConditioned("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut vectors = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for j in (0..k).rev() {
            let mut acc = ZERO;
            for l in j + 1..=k {
                acc += t[(j, l)] * x[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < f64::EPSILON * scale {
                denom = C64::new(f64::EPSILON * scale, 0.0);
            }
            x[j] = -acc / denom;
        }
        let x = nalgebra::DVector::from_vec(x);
        let v = &q * x;
        let norm = v.norm();
        vectors.set_column(k, &v.unscale(norm));
    }
    Ok((values, vectors))
}

/// Frobenius norm of a complex slice.
pub fn frobenius(data: &[C64]) -> f64 {
    data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Minimum-cost assignment (Hungarian / Kuhn-Munkres, O(n^3)) on a square cost matrix.
///
/// `cost[r][c]`; returns `assignment[r] = c`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|row| row.len() == n), "cost matrix must be square");
    // Potentials-based formulation with 1-based sentinels.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
