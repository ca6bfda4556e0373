//! Trilinear alternating least squares for the three-way CP model.
//!
//! With `X[i,j,k] = sum_r A[i,r] B[j,r] C[k,r]` each factor update solves a
//! linear least-squares problem in closed form: e.g.
//! `A = [X_(1)^T conj(B . C)] conj(G)^-1` with `G = (B^H B) * (C^H C)`.
//! The contraction `T = X x_3 conj(C)` is shared by the A and B updates,
//! so an iteration costs two passes over the data.
//!
//! The first restart can start from a direct trilinear decomposition (exact
//! for noise-free data of low enough rank); the rest start at random. An
//! optional extrapolation step is kept only when it lowers the fit, so the
//! fit history stays non-increasing either way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig, interleave, matmul, min_cost_assignment, pinv, real_gemm, reciprocal_condition, CMatrix, RealView, C64, ZERO,
};
use crate::tensor::{cp_tensor, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalsConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Threshold on the relative change of the fit between iterations.
    pub tol: f64,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Start of the first restart; later restarts always start at random.
    pub init: TalsInit,
    /// Try an extrapolated step after each sweep and keep it only if it lowers the fit.
    pub line_search: bool,
}

/// How the first TALS restart is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TalsInit {
    /// Complex Gaussian factors.
    Random,
    /// Direct trilinear decomposition from two projected slices.
    Algebraic,
}

impl TalsConfig {
    pub fn new(k: usize) -> Self {
        TalsConfig {
            k,
            max_iter: 500,
            tol: 1e-8,
            restarts: 5,
            rng_seed: 0,
            init: TalsInit::Algebraic,
            line_search: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Parameter("TALS rank must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!(
                "TALS tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.restarts < 1 || self.max_iter < 1 {
            return Err(Error::Parameter(
                "TALS needs at least one restart and one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Estimated factors; column `r` of every factor belongs to the same rank-1 term.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub c_t: CMatrix,
    pub c_r: CMatrix,
    pub q_kron: CMatrix,
    /// Final relative residual `||X - model|| / ||X||`.
    pub fit: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual after every iteration of the returned run.
    pub fit_history: Vec<f64>,
}

impl FactorSet {
    pub fn rank(&self) -> usize {
        self.c_t.ncols()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FactorSet {
        let pick = |m: &CMatrix| CMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])]);
        FactorSet {
            c_t: pick(&self.c_t),
            c_r: pick(&self.c_r),
            q_kron: pick(&self.q_kron),
            ..self.clone()
        }
    }
}

/// Upper limits on the number of targets for a given coarray size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiabilityLimits {
    /// Kruskal bound with maximal k-ranks `(6 M~, 6 N~, 36)`.
    pub kruskal: usize,
    /// Rotation-invariance limit on the transmit side, `6 (M~ - 1)`.
    pub rotation_transmit: usize,
    /// Rotation-invariance limit on the receive side, `6 (N~ - 1)`.
    pub rotation_receive: usize,
    /// `min(6 (M~ - 1), 6 (N~ - 1))`.
    pub max: usize,
}

pub fn kruskal_max_targets(m_tilde: usize, n_tilde: usize) -> Result<IdentifiabilityLimits> {
    if m_tilde < 2 || n_tilde < 2 {
        return Err(Error::Parameter(format!(
            "coarray sizes must be at least 2, got ({m_tilde}, {n_tilde})"
        )));
    }
    let rotation_transmit = 6 * (m_tilde - 1);
    let rotation_receive = 6 * (n_tilde - 1);
    Ok(IdentifiabilityLimits {
        kruskal: (6 * m_tilde + 6 * n_tilde + 34) / 2,
        rotation_transmit,
        rotation_receive,
        max: rotation_transmit.min(rotation_receive),
    })
}

/// Rejects target counts beyond `min(6 (M~ - 1), 6 (N~ - 1))`.
pub fn check_identifiable(k: usize, m_tilde: usize, n_tilde: usize) -> Result<()> {
    let limits = kruskal_max_targets(m_tilde, n_tilde)?;
    if k > limits.max {
        return Err(Error::Identifiability(format!(
            "{k} targets exceed the limit of {} for coarray sizes ({m_tilde}, {n_tilde})",
            limits.max
        )));
    }
    Ok(())
}

const CHUNK_ROWS: usize = 1024;

/// Data shared by all restarts; `x` holds the tensor as a real row-major
/// `(I J) x 2K` matrix with interleaved real and imaginary parts.
struct Problem {
    dims: [usize; 3],
    x: Vec<f64>,
    norm_sq: f64,
    tensor: DenseTensor,
}

fn gram(m: &CMatrix) -> CMatrix {
    m.adjoint() * m
}

/// `target = mttkrp * conj(G)^-1`, failing on a singular Gram matrix.
fn solve_update(mttkrp: CMatrix, g: &CMatrix) -> Result<CMatrix> {
    let g_conj = g.map(|z| z.conj());
    let rcond = reciprocal_condition(&g_conj);
    if !(rcond > 1e-14) {
        return Err(Error::DegenerateIteration(format!(
            "Khatri-Rao Gram matrix is singular (reciprocal condition {rcond:.2e})"
        )));
    }
    Ok(mttkrp * pinv(&g_conj, 1e-15))
}

/// Indices of the `count` largest values, largest first.
fn top_indices(values: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx.truncate(count);
    idx
}

/// Leading `r` left singular vectors.
fn leading_subspace(m: &CMatrix, r: usize) -> CMatrix {
    // Left singular vectors of M are the eigenvectors of M M^H.
    let eig = matmul(m, &m.adjoint()).symmetric_eigen();
    let order = top_indices(eig.eigenvalues.as_slice(), r);
    CMatrix::from_fn(m.nrows(), r, |row, c| eig.eigenvectors[(row, order[c])])
}

impl Problem {
    fn new(x: &DenseTensor) -> Result<Self> {
        if x.order() != 3 {
            return Err(Error::Shape(format!(
                "TALS needs a three-way tensor, got order {}",
                x.order()
            )));
        }
        let s = x.shape();
        let norm_sq = x.frobenius_norm().powi(2);
        if !(norm_sq > 0.0) {
            return Err(Error::DegenerateIteration("input tensor is zero".into()));
        }
        Ok(Problem {
            dims: [s[0], s[1], s[2]],
            x: interleave(x.data()),
            norm_sq,
            tensor: x.clone(),
        })
    }

    /// `T[(i,j), r] = sum_k X[i,j,k] conj(C[k,r])`, interleaved row-major `(I J) x R`.
    fn contract_third(&self, c: &CMatrix) -> Vec<f64> {
        let [i, j, kd] = self.dims;
        let r = c.ncols();
        // Real 2K x 2R form of conj(C) acting on interleaved rows.
        let mut b = vec![0.0; 2 * kd * 2 * r];
        for k in 0..kd {
            for col in 0..r {
                let z = c[(k, col)];
                b[(2 * k) * 2 * r + 2 * col] = z.re;
                b[(2 * k + 1) * 2 * r + 2 * col] = z.im;
                b[(2 * k) * 2 * r + 2 * col + 1] = -z.im;
                b[(2 * k + 1) * 2 * r + 2 * col + 1] = z.re;
            }
        }
        let mut t = vec![0.0; i * j * 2 * r];
        // Row chunks keep each slab of X in cache while it is packed and multiplied.
        for (x, out) in self.x.chunks(CHUNK_ROWS * 2 * kd).zip(t.chunks_mut(CHUNK_ROWS * 2 * r)) {
            let rows = x.len() / (2 * kd);
            real_gemm(
                RealView {
                    data: x,
                    rows,
                    cols: 2 * kd,
                    rs: (2 * kd) as isize,
                    cs: 1,
                },
                RealView {
                    data: &b,
                    rows: 2 * kd,
                    cols: 2 * r,
                    rs: (2 * r) as isize,
                    cs: 1,
                },
                0.0,
                out,
                (2 * r) as isize,
                1,
            );
        }
        t
    }

    /// `M[k, r] = sum_{i,j} X[i,j,k] conj(A[i,r] B[j,r])`.
    fn mttkrp_third(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        let [di, dj, kd] = self.dims;
        let r = a.ncols();
        let bt: Vec<C64> = (0..dj)
            .flat_map(|j| (0..r).map(move |col| (j, col)))
            .map(|(j, col)| b[(j, col)])
            .collect();
        let mut ab = vec![0.0; di * dj * 2 * r];
        for i in 0..di {
            let ai: Vec<C64> = (0..r).map(|col| a[(i, col)]).collect();
            for j in 0..dj {
                let row = &mut ab[(i * dj + j) * 2 * r..(i * dj + j + 1) * 2 * r];
                let bj = &bt[j * r..(j + 1) * r];
                for col in 0..r {
                    let z = ai[col] * bj[col];
                    row[col] = z.re;
                    row[r + col] = z.im;
                }
            }
        }
        let mut p = vec![0.0; 2 * kd * 2 * r];
        for (x, abc) in self.x.chunks(CHUNK_ROWS * 2 * kd).zip(ab.chunks(CHUNK_ROWS * 2 * r)) {
            let rows = x.len() / (2 * kd);
            real_gemm(
                RealView {
                    data: x,
                    rows: 2 * kd,
                    cols: rows,
                    rs: 1,
                    cs: (2 * kd) as isize,
                },
                RealView {
                    data: abc,
                    rows,
                    cols: 2 * r,
                    rs: (2 * r) as isize,
                    cs: 1,
                },
                1.0,
                &mut p,
                (2 * r) as isize,
                1,
            );
        }
        let at = |row: usize, col: usize| p[row * 2 * r + col];
        CMatrix::from_fn(kd, r, |k, col| {
            C64::new(
                at(2 * k, col) + at(2 * k + 1, r + col),
                at(2 * k + 1, col) - at(2 * k, r + col),
            )
        })
    }

    /// `X_(3)^H X_(3)`-style Gram of the third mode, `G[k, l] = sum_{i,j} conj(X[i,j,k]) X[i,j,l]`.
    fn third_mode_gram(&self) -> CMatrix {
        let kd = self.dims[2];
        let mut p = vec![0.0; 4 * kd * kd];
        for x in self.x.chunks(CHUNK_ROWS * 2 * kd) {
            let rows = x.len() / (2 * kd);
            real_gemm(
                RealView {
                    data: x,
                    rows: 2 * kd,
                    cols: rows,
                    rs: 1,
                    cs: (2 * kd) as isize,
                },
                RealView {
                    data: x,
                    rows,
                    cols: 2 * kd,
                    rs: (2 * kd) as isize,
                    cs: 1,
                },
                1.0,
                &mut p,
                (2 * kd) as isize,
                1,
            );
        }
        let at = |row: usize, col: usize| p[row * 2 * kd + col];
        CMatrix::from_fn(kd, kd, |k, l| {
            C64::new(
                at(2 * k, 2 * l) + at(2 * k + 1, 2 * l + 1),
                at(2 * k, 2 * l + 1) - at(2 * k + 1, 2 * l),
            )
        })
    }

    /// Direct trilinear decomposition: project the third mode onto its two
    /// dominant directions and diagonalise the resulting slice pencil.
    /// Exact for a noise-free tensor whose rank fits in the first two modes.
    fn algebraic_start(&self, r: usize) -> Result<(CMatrix, CMatrix, CMatrix)> {
        let [di, dj, _] = self.dims;
        if r > di.min(dj) {
            return Err(Error::DegenerateIteration(
                "rank exceeds the first two dimensions".into(),
            ));
        }
        let eig3 = self.third_mode_gram().symmetric_eigen();
        let top = top_indices(eig3.eigenvalues.as_slice(), 2);
        let v = CMatrix::from_fn(self.dims[2], 2, |k, c| eig3.eigenvectors[(k, top[c])]);
        let t = self.contract_third(&v);
        let slice = |s: usize| {
            CMatrix::from_fn(di, dj, |i, j| {
                let base = (i * dj + j) * 4 + 2 * s;
                C64::new(t[base], t[base + 1])
            })
        };
        let (s1, s2) = (slice(0), slice(1));
        let mut wide = CMatrix::zeros(di, 2 * dj);
        wide.columns_mut(0, dj).copy_from(&s1);
        wide.columns_mut(dj, dj).copy_from(&s2);
        let mut tall = CMatrix::zeros(dj, 2 * di);
        tall.columns_mut(0, di).copy_from(&s1.transpose());
        tall.columns_mut(di, di).copy_from(&s2.transpose());
        let ua = leading_subspace(&wide, r);
        let ub = leading_subspace(&tall, r);
        let ub_conj = ub.map(|z| z.conj());
        let g1 = ua.adjoint() * &s1 * &ub_conj;
        let g2 = ua.adjoint() * &s2 * &ub_conj;
        if !(reciprocal_condition(&g2) > 1e-12) {
            return Err(Error::DegenerateIteration("projected slice is singular".into()));
        }
        let (_, a_small) = eig(&(&g1 * pinv(&g2, 1e-14)))?;
        if !(reciprocal_condition(&a_small) > 1e-12) {
            return Err(Error::DegenerateIteration(
                "slice pencil has repeated eigenvalues".into(),
            ));
        }
        let a = &ua * &a_small;
        let b = &ub * (pinv(&a_small, 1e-14) * &g2).transpose();
        let c = solve_update(self.mttkrp_third(&a, &b), &gram(&a).component_mul(&gram(&b)))?;
        Ok((a, b, c))
    }

    fn random_start(&self, r: usize, rng: &mut ChaCha8Rng) -> (CMatrix, CMatrix, CMatrix) {
        let mut draw = |rows: usize| {
            CMatrix::from_fn(rows, r, |_, _| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
        };
        let [di, dj, dk] = self.dims;
        (draw(di), draw(dj), draw(dk))
    }

    /// Exact relative residual of a model.
    fn exact_fit(&self, a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<f64> {
        let model = cp_tensor(a, b, c)?;
        let res: f64 = model
            .data()
            .iter()
            .zip(self.tensor.data())
            .map(|(m, x)| (m - x).norm_sqr())
            .sum();
        Ok((res / self.norm_sq).sqrt())
    }

    /// Relative fit from the third-mode MTTKRP of `(a, b)` through
    /// `||X - M||^2 = ||X||^2 - 2 Re<X, M> + ||M||^2`.
    fn sweep_fit(&self, mc: &CMatrix, ga: &CMatrix, gb: &CMatrix, c: &CMatrix) -> f64 {
        let inner: C64 = mc.iter().zip(c.iter()).map(|(m, z)| m * z.conj()).sum();
        self.fit_from_inner(inner, ga, gb, &gram(c))
    }

    /// Same as [`Self::sweep_fit`] with `<X, M>` taken from a third-mode contraction.
    fn contracted_fit(&self, t: &[f64], a: &CMatrix, b: &CMatrix, gc: &CMatrix) -> f64 {
        let [di, dj, _] = self.dims;
        let r = a.ncols();
        let mut inner = ZERO;
        for i in 0..di {
            for j in 0..dj {
                let row = &t[(i * dj + j) * 2 * r..(i * dj + j + 1) * 2 * r];
                for col in 0..r {
                    inner += C64::new(row[2 * col], row[2 * col + 1]) * (a[(i, col)] * b[(j, col)]).conj();
                }
            }
        }
        self.fit_from_inner(inner, &gram(a), &gram(b), gc)
    }

    fn fit_from_inner(&self, inner: C64, ga: &CMatrix, gb: &CMatrix, gc: &CMatrix) -> f64 {
        let model_sq: f64 = ga.component_mul(gb).component_mul(gc).iter().map(|z| z.re).sum();
        let res_sq = (self.norm_sq - 2.0 * inner.re + model_sq).max(0.0);
        (res_sq / self.norm_sq).sqrt()
    }

    fn run(&self, cfg: &TalsConfig, start: (CMatrix, CMatrix, CMatrix)) -> Result<FactorSet> {
        let [di, dj, _] = self.dims;
        let r = cfg.k;
        let (mut a, mut b, mut c) = start;
        let mut history = Vec::new();
        let mut converged = false;
        // Contraction of an accepted extrapolated `c`, reused by the next sweep.
        let mut pending: Option<Vec<f64>> = None;
        for iter in 1..=cfg.max_iter {
            let (a0, b0, c0) = (a.clone(), b.clone(), c.clone());
            let t = pending.take().unwrap_or_else(|| self.contract_third(&c));
            let gc = gram(&c);

            // Row-major conj(B) so the sweeps below walk T contiguously.
            let bc: Vec<C64> = (0..dj)
                .flat_map(|j| (0..r).map(move |col| (j, col)))
                .map(|(j, col)| b[(j, col)].conj())
                .collect();
            let mut ma = vec![ZERO; di * r];
            for i in 0..di {
                let acc = &mut ma[i * r..(i + 1) * r];
                for j in 0..dj {
                    let row = &t[(i * dj + j) * 2 * r..(i * dj + j + 1) * 2 * r];
                    let bj = &bc[j * r..(j + 1) * r];
                    for col in 0..r {
                        acc[col] += C64::new(row[2 * col], row[2 * col + 1]) * bj[col];
                    }
                }
            }
            a = solve_update(CMatrix::from_row_slice(di, r, &ma), &gram(&b).component_mul(&gc))?;

            let mut mb = vec![ZERO; dj * r];
            for i in 0..di {
                let ai: Vec<C64> = (0..r).map(|col| a[(i, col)].conj()).collect();
                for j in 0..dj {
                    let row = &t[(i * dj + j) * 2 * r..(i * dj + j + 1) * 2 * r];
                    let acc = &mut mb[j * r..(j + 1) * r];
                    for col in 0..r {
                        acc[col] += C64::new(row[2 * col], row[2 * col + 1]) * ai[col];
                    }
                }
            }
            let mb = CMatrix::from_row_slice(dj, r, &mb);
            let ga = gram(&a);
            b = solve_update(mb, &ga.component_mul(&gc))?;

            let gb = gram(&b);
            let mc = self.mttkrp_third(&a, &b);
            c = solve_update(mc.clone(), &ga.component_mul(&gb))?;

            let mut fit = self.sweep_fit(&mc, &ga, &gb, &c);
            if cfg.line_search && iter > 2 && fit > 1e-6 {
                let step = (iter as f64).cbrt();
                let extrapolate = |new: &CMatrix, old: &CMatrix| old + (new - old) * C64::new(step, 0.0);
                let (ea, eb, ec) = (extrapolate(&a, &a0), extrapolate(&b, &b0), extrapolate(&c, &c0));
                let et = self.contract_third(&ec);
                let efit = self.contracted_fit(&et, &ea, &eb, &gram(&ec));
                if efit < fit {
                    (a, b, c, fit) = (ea, eb, ec, efit);
                    pending = Some(et);
                }
            }
            if fit < 1e-6 {
                // The expanded form loses all digits near an exact fit.
                fit = self.exact_fit(&a, &b, &c)?;
            }
            let prev = history.last().copied();
            history.push(fit);
            if fit < 1e-13 {
                converged = true;
                break;
            }
            if let Some(p) = prev {
                if (p - fit).abs() <= cfg.tol * p {
                    converged = true;
                    break;
                }
            }
        }
        balance_columns(&mut a, &mut b, &mut c);
        let fit = self.exact_fit(&a, &b, &c)?;
        Ok(FactorSet {
            iterations: history.len(),
            c_t: a,
            c_r: b,
            q_kron: c,
            fit,
            converged,
            fit_history: history,
        })
    }
}

/// Equalises column norms across the factors and makes the largest entry of
/// each `A` and `B` column real and positive; the removed phases go into `C`.
fn balance_columns(a: &mut CMatrix, b: &mut CMatrix, c: &mut CMatrix) {
    for r in 0..a.ncols() {
        let (na, nb, nc) = (a.column(r).norm(), b.column(r).norm(), c.column(r).norm());
        if na == 0.0 || nb == 0.0 || nc == 0.0 {
            continue;
        }
        let target = (na * nb * nc).cbrt();
        let mut phase = C64::new(1.0, 0.0);
        for (m, n) in [(&mut *a, na), (&mut *b, nb)] {
            let peak = m
                .column(r)
                .iter()
                .copied()
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap_or(ZERO);
            let rot = peak.conj() / peak.norm();
            let scale = rot * (target / n);
            m.column_mut(r).iter_mut().for_each(|z| *z *= scale);
            phase *= rot;
        }
        let scale = (target / nc) / phase;
        c.column_mut(r).iter_mut().for_each(|z| *z *= scale);
    }
}

/// Generic Kruskal bound `(I + J + K - 2) / 2` on the rank from the tensor dimensions.
pub fn kruskal_rank_bound(dims: [usize; 3]) -> usize {
    (dims[0] + dims[1] + dims[2]).saturating_sub(2) / 2
}

/// Best-of-restarts TALS fit of a rank-`cfg.k` CP model.
pub fn tals(x: &DenseTensor, cfg: &TalsConfig) -> Result<FactorSet> {
    cfg.validate()?;
    let problem = Problem::new(x)?;
    let bound = kruskal_rank_bound(problem.dims);
    if cfg.k > bound {
        return Err(Error::Identifiability(format!(
            "rank {} exceeds the Kruskal bound {bound} for dimensions {:?}",
            cfg.k, problem.dims
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<FactorSet> = None;
    let mut last_err = None;
    for restart in 0..cfg.restarts {
        let start = match (restart, cfg.init) {
            (0, TalsInit::Algebraic) => match problem.algebraic_start(cfg.k) {
                Ok(s) => s,
                Err(Error::DegenerateIteration(_) | Error::IllConditioned(_)) => problem.random_start(cfg.k, &mut rng),
                Err(e) => return Err(e),
            },
            _ => problem.random_start(cfg.k, &mut rng),
        };
        match problem.run(cfg, start) {
            Ok(fs) => {
                if best.as_ref().is_none_or(|b| fs.fit < b.fit) {
                    best = Some(fs);
                }
            }
            Err(e @ Error::DegenerateIteration(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::DegenerateIteration("no restart succeeded".into())))
}

/// Result of aligning estimated factors with reference factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatch {
    /// `permutation[r]` is the estimated column matched to reference column `r`.
    pub permutation: Vec<usize>,
    /// Per reference column: normalised `|<est, ref>|` for `(c_t, c_r, q_kron)`.
    pub congruences: Vec<[f64; 3]>,
}

fn congruence(a: &CMatrix, ca: usize, b: &CMatrix, cb: usize) -> f64 {
    let x = a.column(ca);
    let y = b.column(cb);
    let den = x.norm() * y.norm();
    if den == 0.0 {
        0.0
    } else {
        (x.dotc(&y).norm() / den).min(1.0)
    }
}

/// Resolves the CP permutation ambiguity by optimal matching on summed congruences.
pub fn match_factors(est: &FactorSet, truth: &FactorSet) -> Result<FactorMatch> {
    let k = truth.rank();
    if est.rank() != k {
        return Err(Error::Shape(format!("cannot match {} columns to {k}", est.rank())));
    }
    let triple = |t: usize, e: usize| {
        [
            congruence(&est.c_t, e, &truth.c_t, t),
            congruence(&est.c_r, e, &truth.c_r, t),
            congruence(&est.q_kron, e, &truth.q_kron, t),
        ]
    };
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|t| (0..k).map(|e| -triple(t, e).iter().sum::<f64>()).collect())
        .collect();
    let permutation = min_cost_assignment(&cost);
    let congruences = permutation.iter().enumerate().map(|(t, &e)| triple(t, e)).collect();
    Ok(FactorMatch {
        permutation,
        congruences,
    })
}
