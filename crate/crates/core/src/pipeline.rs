//! Coarray tensor pipeline: snapshots to the three-way beamspace tensor.
//!
//! The staged functions follow the processing chain one tensor at a time and
//! are what the oracles test. `CoarrayPipeline::process_snapshots` computes
//! the same coarray tensor directly from the snapshots, block by block, without
//! materialising the full covariance.

use std::f64::consts::PI;

use crate::emvs::{joint_response, SceneConfig, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::geometry::{build_selection_matrix, difference_coarray, SelectionMatrix, SensorPositions};
use crate::linalg::{split, split_gemm, CMatrix, SplitView, C64, ZERO};
use crate::tensor::DenseTensor;

/// Rows `w_m^H` of a DFT beamspace transform over a centro-symmetric virtual ULA.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceMatrix {
    w: CMatrix,
}

impl BeamspaceMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn size(&self) -> usize {
        self.w.nrows()
    }
}

/// The three-way tensor handed to the CP stage, shape `(6 M~, 6 N~, 36)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub r5: DenseTensor,
    pub m_tilde: usize,
    pub n_tilde: usize,
}

/// `(M, 6, N, 6, L)` view of the snapshot matrix.
pub fn snapshot_tensor(y: &SnapshotMatrix, m: usize, n: usize) -> Result<DenseTensor> {
    if y.rows() != 36 * m * n {
        return Err(Error::Shape(format!(
            "snapshot matrix has {} rows, expected 36*{m}*{n} = {}",
            y.rows(),
            36 * m * n
        )));
    }
    DenseTensor::new(vec![m, 6, n, 6, y.snapshots()], y.data().to_vec())
}

/// Sample covariance `(1/L) sum_l y_l o conj(y_l)` as an 8-way tensor.
pub fn covariance_tensor(y5: &DenseTensor) -> Result<DenseTensor> {
    if y5.order() != 5 {
        return Err(Error::Shape(format!(
            "expected a 5-way snapshot tensor, got order {}",
            y5.order()
        )));
    }
    let s = y5.shape();
    let rows = s[0] * s[1] * s[2] * s[3];
    let l = s[4];
    let (re, im) = split(y5.data());
    let im_neg: Vec<f64> = im.iter().map(|x| -x).collect();
    let mut cr = vec![0.0; rows * rows];
    let mut ci = vec![0.0; rows * rows];
    split_gemm(
        SplitView {
            re: &re,
            im: &im,
            rows,
            cols: l,
            rs: l as isize,
            cs: 1,
        },
        SplitView {
            re: &re,
            im: &im_neg,
            rows: l,
            cols: rows,
            rs: 1,
            cs: l as isize,
        },
        0.0,
        &mut cr,
        &mut ci,
        rows as isize,
        1,
    );
    let inv_l = 1.0 / l as f64;
    let data = cr
        .iter()
        .zip(&ci)
        .map(|(&r, &i)| C64::new(r * inv_l, i * inv_l))
        .collect();
    let mut shape = s[..4].to_vec();
    shape.extend_from_slice(&s[..4]);
    DenseTensor::new(shape, data)
}

/// Permutes `(M,6,N,6,M,6,N,6)` to `(M,M,6,N,N,6,6,6)` and merges pairs,
/// giving `(M^2, 6, N^2, 6, 36)`.
pub fn rearrange_and_group(r: &DenseTensor) -> Result<DenseTensor> {
    if r.order() != 8 {
        return Err(Error::Shape(format!(
            "expected an 8-way covariance tensor, got order {}",
            r.order()
        )));
    }
    let s = r.shape();
    if s[1] != 6 || s[3] != 6 || s[..4] != s[4..] {
        return Err(Error::Shape(format!("covariance tensor has shape {s:?}")));
    }
    // Permutation [0,4,1,2,6,3,5,7] followed by grouping [0,1][2][3,4][5][6,7].
    r.group_modes(&[vec![0, 4], vec![1], vec![2, 6], vec![3], vec![5, 7]])
}

fn selection_as_matrix(j: &SelectionMatrix) -> CMatrix {
    j.to_dense().map(|v| C64::new(v, 0.0))
}

/// `R3 = R2 x_1 J1 x_3 J2`.
pub fn apply_coarray_selection(r2: &DenseTensor, j1: &SelectionMatrix, j2: &SelectionMatrix) -> Result<DenseTensor> {
    if r2.order() != 5 {
        return Err(Error::Shape(format!(
            "expected a 5-way tensor, got order {}",
            r2.order()
        )));
    }
    r2.mode_n_product(&selection_as_matrix(j1), 0)?
        .mode_n_product(&selection_as_matrix(j2), 2)
}

/// `W[m, p + h] = exp(-j 2 pi p m / M~)` for `p = -h..=h`, `M~ = 2h + 1`.
pub fn dft_beamspace(m_tilde: usize) -> Result<BeamspaceMatrix> {
    if m_tilde.is_multiple_of(2) {
        return Err(Error::Parameter(format!("beamspace size must be odd, got {m_tilde}")));
    }
    let h = (m_tilde / 2) as f64;
    let w = CMatrix::from_fn(m_tilde, m_tilde, |m, idx| {
        let p = idx as f64 - h;
        C64::from_polar(1.0, -2.0 * PI * p * m as f64 / m_tilde as f64)
    });
    Ok(BeamspaceMatrix { w })
}

/// `R4 = R3 x_1 W_t x_3 W_r`.
pub fn to_real_beamspace(r3: &DenseTensor, w_t: &BeamspaceMatrix, w_r: &BeamspaceMatrix) -> Result<DenseTensor> {
    r3.mode_n_product(&w_t.w, 0)?.mode_n_product(&w_r.w, 2)
}

/// Merges `(M~, 6, N~, 6, 36)` into `(6 M~, 6 N~, 36)`.
pub fn final_three_way(r4: &DenseTensor) -> Result<PipelineOutput> {
    let s = r4.shape();
    if s.len() != 5 || s[1] != 6 || s[3] != 6 || s[4] != 36 {
        return Err(Error::Shape(format!("expected (M~, 6, N~, 6, 36), got {s:?}")));
    }
    let (m_tilde, n_tilde) = (s[0], s[2]);
    Ok(PipelineOutput {
        r5: r4.reshape(vec![6 * m_tilde, 6 * n_tilde, 36])?,
        m_tilde,
        n_tilde,
    })
}

/// `sum_k power_k c_k c_k^H + sigma^2 I` as an 8-way tensor (infinite-snapshot covariance).
pub fn exact_model_covariance(scene: &SceneConfig) -> Result<DenseTensor> {
    scene.validate()?;
    let (m, n) = (scene.transmit.len(), scene.receive.len());
    let rows = scene.channels();
    let mut data = vec![ZERO; rows * rows];
    for t in &scene.targets {
        let c = joint_response(&scene.transmit, &scene.receive, t);
        for r in 0..rows {
            let coef = c[r] * t.power;
            let row = &mut data[r * rows..(r + 1) * rows];
            for (d, s) in row.iter_mut().zip(c.iter()) {
                *d += coef * s.conj();
            }
        }
    }
    let sigma2 = scene.noise_variance();
    for r in 0..rows {
        data[r * rows + r] += C64::new(sigma2, 0.0);
    }
    DenseTensor::new(vec![m, 6, n, 6, m, 6, n, 6], data)
}

/// Precomputed selection and beamspace operators for one transmit/receive array pair.
#[derive(Debug, Clone)]
pub struct CoarrayPipeline {
    transmit: SensorPositions,
    receive: SensorPositions,
    j_t: SelectionMatrix,
    j_r: SelectionMatrix,
    w_t: BeamspaceMatrix,
    w_r: BeamspaceMatrix,
}

impl CoarrayPipeline {
    pub fn new(transmit: &SensorPositions, receive: &SensorPositions) -> Result<Self> {
        let j_t = build_selection_matrix(transmit);
        let j_r = build_selection_matrix(receive);
        Ok(CoarrayPipeline {
            w_t: dft_beamspace(j_t.nrows())?,
            w_r: dft_beamspace(j_r.nrows())?,
            transmit: transmit.clone(),
            receive: receive.clone(),
            j_t,
            j_r,
        })
    }

    pub fn m_tilde(&self) -> usize {
        self.j_t.nrows()
    }

    pub fn n_tilde(&self) -> usize {
        self.j_r.nrows()
    }

    pub fn beamspace_transmit(&self) -> &BeamspaceMatrix {
        &self.w_t
    }

    pub fn beamspace_receive(&self) -> &BeamspaceMatrix {
        &self.w_r
    }

    /// Runs the staged chain on an 8-way covariance tensor.
    pub fn process_covariance(&self, r: &DenseTensor) -> Result<PipelineOutput> {
        let r2 = rearrange_and_group(r)?;
        let r3 = apply_coarray_selection(&r2, &self.j_t, &self.j_r)?;
        self.finish(&r3)
    }

    /// Snapshots to `R5` through the fused covariance/selection kernel.
    pub fn process_snapshots(&self, y: &SnapshotMatrix) -> Result<PipelineOutput> {
        let r3 = self.coarray_tensor(y)?;
        self.finish(&r3)
    }

    fn finish(&self, r3: &DenseTensor) -> Result<PipelineOutput> {
        final_three_way(&to_real_beamspace(r3, &self.w_t, &self.w_r)?)
    }

    /// `R3` of shape `(M~, 6, N~, 6, 36)` straight from the snapshots.
    ///
    /// The covariance is formed one `360 x 360` transmit block pair at a time
    /// (upper triangle only; the lower blocks are conjugate transposes) and each
    /// entry is added, with its duplicate-averaging weight, to the lag cell it
    /// belongs to.
    pub fn coarray_tensor(&self, y: &SnapshotMatrix) -> Result<DenseTensor> {
        let (m, n) = (self.transmit.len(), self.receive.len());
        if y.rows() != 36 * m * n {
            return Err(Error::Shape(format!(
                "snapshot matrix has {} rows, expected {}",
                y.rows(),
                36 * m * n
            )));
        }
        let l = y.snapshots();
        let co_t = difference_coarray(&self.transmit);
        let co_r = difference_coarray(&self.receive);
        let (ht, hr) = (co_t.half_width() as i64, co_r.half_width() as i64);
        let (mt, nt) = (self.m_tilde(), self.n_tilde());
        let pt = self.transmit.positions();
        let pr = self.receive.positions();

        // Receive lag index and weight of every (n, n') pair, or None outside the segment.
        let recv_cell: Vec<Option<(usize, f64)>> = (0..n * n)
            .map(|idx| {
                let v = pr[idx % n] as i64 - pr[idx / n] as i64;
                (v.abs() <= hr).then(|| ((v + hr) as usize, co_r.weight(v) as f64))
            })
            .collect();

        let (re, im) = split(y.data());
        let im_neg: Vec<f64> = im.iter().map(|x| -x).collect();
        let blk = 36 * n;
        let mut br = vec![0.0; blk * blk];
        let mut bi = vec![0.0; blk * blk];
        let mut out = vec![ZERO; mt * 6 * nt * 6 * 36];
        let cell = |u: usize, i: usize, v: usize, j: usize, ij: usize| (((u * 6 + i) * nt + v) * 6 + j) * 36 + ij;

        for p in 0..m {
            for q in p..m {
                let u = pt[q] as i64 - pt[p] as i64;
                if u.abs() > ht {
                    continue;
                }
                let wu = co_t.weight(u) as f64;
                let a = p * blk * l;
                let b = q * blk * l;
                split_gemm(
                    SplitView {
                        re: &re[a..a + blk * l],
                        im: &im[a..a + blk * l],
                        rows: blk,
                        cols: l,
                        rs: l as isize,
                        cs: 1,
                    },
                    SplitView {
                        re: &re[b..b + blk * l],
                        im: &im_neg[b..b + blk * l],
                        rows: l,
                        cols: blk,
                        rs: 1,
                        cs: l as isize,
                    },
                    0.0,
                    &mut br,
                    &mut bi,
                    blk as isize,
                    1,
                );
                let u_fwd = (u + ht) as usize;
                let u_bwd = (ht - u) as usize;
                for row in 0..blk {
                    let (i, nn, j) = (row / (6 * n), (row / 6) % n, row % 6);
                    for col in 0..blk {
                        let (i2, nn2, j2) = (col / (6 * n), (col / 6) % n, col % 6);
                        let z = C64::new(br[row * blk + col], bi[row * blk + col]);
                        if let Some((v, wv)) = recv_cell[nn * n + nn2] {
                            let scale = 1.0 / (l as f64 * wu * wv);
                            out[cell(u_fwd, i, v, j, i2 * 6 + j2)] += z * scale;
                            if q != p {
                                // Block (q, p) is the conjugate transpose of block (p, q).
                                let v_bwd = 2 * hr as usize - v;
                                out[cell(u_bwd, i2, v_bwd, j2, i * 6 + j)] += z.conj() * scale;
                            }
                        }
                    }
                }
            }
        }
        DenseTensor::new(vec![mt, 6, nt, 6, 36], out)
    }
}
