//! Closed-form parameter extraction from the CP factors.
//!
//! Elevations come from the rotation invariance of the real beamspace
//! steering vectors, the spatial responses from the block mean of each
//! factor column, and azimuth and polarization from the spatial response.
//! Everything reported for target `k` comes from column `k` of the factors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector6};
use serde::{Deserialize, Serialize};

use crate::cp::FactorSet;
use crate::emvs::{field_matrix, poynting_angles};
use crate::error::{Error, Result};
use crate::linalg::{eig, min_cost_assignment, pinv, reciprocal_condition, CMatrix, C64, ZERO};

/// Bidiagonal selection matrices of the beamspace rotation invariance.
///
/// Row `m` (zero-based) holds `cos(m pi / M~), cos((m + 1) pi / M~)` in `g1`
/// and the matching sines in `g2`, at columns `m` and `m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaPair {
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

pub fn build_gamma(m_tilde: usize) -> Result<GammaPair> {
    if m_tilde < 2 {
        return Err(Error::Parameter(format!(
            "beamspace size must be at least 2, got {m_tilde}"
        )));
    }
    let mut g1 = DMatrix::zeros(m_tilde - 1, m_tilde);
    let mut g2 = DMatrix::zeros(m_tilde - 1, m_tilde);
    for r in 0..m_tilde - 1 {
        for c in [r, r + 1] {
            let angle = c as f64 * PI / m_tilde as f64;
            g1[(r, c)] = angle.cos();
            g2[(r, c)] = angle.sin();
        }
    }
    Ok(GammaPair { g1, g2 })
}

/// `(G (x) I_6) C` without forming the Kronecker product.
fn apply_gamma_blocks(g: &DMatrix<f64>, c: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(6 * g.nrows(), c.ncols());
    for r in 0..g.nrows() {
        for m in [r, r + 1] {
            let w = g[(r, m)];
            for i in 0..6 {
                for k in 0..c.ncols() {
                    out[(6 * r + i, k)] += c[(6 * m + i, k)] * w;
                }
            }
        }
    }
    out
}

/// Elevation of one factor column with the eigenvalue it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elevation {
    pub theta: f64,
    pub lambda: C64,
}

/// Rotation-invariance elevations, one per column of a `6 M~ x K` factor.
pub fn estimate_elevations(c: &CMatrix, m_tilde: usize) -> Result<Vec<Elevation>> {
    let k = c.ncols();
    if c.nrows() != 6 * m_tilde {
        return Err(Error::Shape(format!(
            "factor has {} rows, expected 6*{m_tilde}",
            c.nrows()
        )));
    }
    if k > 6 * (m_tilde - 1) {
        return Err(Error::Identifiability(format!(
            "{k} columns exceed the rotation-invariance limit {}",
            6 * (m_tilde - 1)
        )));
    }
    let gamma = build_gamma(m_tilde)?;
    let lhs = apply_gamma_blocks(&gamma.g1, c);
    let rhs = apply_gamma_blocks(&gamma.g2, c);
    let rcond = reciprocal_condition(&lhs);
    if !(rcond > 1e-12) {
        return Err(Error::IllConditioned(format!(
            "rotation-invariance system is rank deficient (reciprocal condition {rcond:.2e})"
        )));
    }
    let phi = pinv(&lhs, 1e-14) * rhs;
    let (values, vectors) = eig(&phi)?;
    // Phi is diagonal up to column scaling, so eigenvector k peaks at the column it belongs to.
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|col| (0..k).map(|e| -vectors[(col, e)].norm()).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    assignment
        .into_iter()
        .map(|e| {
            let lambda = values[e];
            if !lambda.re.is_finite() {
                return Err(Error::IllConditioned("non-finite rotation eigenvalue".into()));
            }
            let x = 2.0 * lambda.re.atan() / PI;
            if x.abs() > 1.0 {
                return Err(Error::OutOfRange(format!("arcsin argument {x}")));
            }
            Ok(Elevation {
                theta: x.asin(),
                lambda,
            })
        })
        .collect()
}

/// Block mean `(1/M~) sum_m C[6m..6m+6, :]`, giving one spatial response per column.
pub fn reconstruct_spatial_response(c: &CMatrix, m_tilde: usize) -> Result<CMatrix> {
    if m_tilde == 0 || c.nrows() != 6 * m_tilde {
        return Err(Error::Shape(format!(
            "factor has {} rows, expected 6*{m_tilde}",
            c.nrows()
        )));
    }
    let mut q = CMatrix::zeros(6, c.ncols());
    for m in 0..m_tilde {
        q += c.rows(6 * m, 6);
    }
    Ok(q.unscale(m_tilde as f64))
}

/// Angles and polarization recovered from one spatial response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideEstimate {
    /// Elevation used for the polarization fit.
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Elevation implied by the Poynting vector alone.
    pub theta_poynting: f64,
}

/// Azimuth from the Poynting vector, then `g = F(theta, phi)^+ q`.
///
/// `elevation` overrides the Poynting elevation when given. The result is
/// invariant to any complex scaling of `q`.
pub fn extract_angles_and_polarization(q: &Vector6<C64>, elevation: Option<f64>) -> Result<SideEstimate> {
    let (theta_poynting, phi) = poynting_angles(q)?;
    let theta = elevation.unwrap_or(theta_poynting);
    let f = field_matrix(theta, phi);
    let f_dyn = CMatrix::from_iterator(6, 2, f.iter().copied());
    let g = pinv(&f_dyn, 1e-12) * CMatrix::from_iterator(6, 1, q.iter().copied());
    let (g1, g2) = (g[(0, 0)], g[(1, 0)]);
    let scale = g1.norm().max(g2.norm());
    if scale == 0.0 {
        return Err(Error::DegenerateResponse("polarization vector vanishes".into()));
    }
    let gamma = g1.norm().atan2(g2.norm());
    let eta = if g1.norm() < 1e-12 * scale || g2.norm() < 1e-12 * scale {
        0.0
    } else {
        (g1 / g2).arg()
    };
    Ok(SideEstimate {
        theta,
        phi,
        gamma,
        eta,
        theta_poynting,
    })
}

/// Transmit and receive parameters of one factor column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub transmit: SideEstimate,
    pub receive: SideEstimate,
    /// Imaginary parts of the rotation eigenvalues (zero in the noiseless model).
    pub lambda_imag_t: f64,
    pub lambda_imag_r: f64,
}

impl TargetEstimate {
    /// `(theta_t, phi_t, gamma_t, eta_t, theta_r, phi_r, gamma_r, eta_r)`.
    pub fn angles(&self) -> [f64; 8] {
        let (t, r) = (&self.transmit, &self.receive);
        [t.theta, t.phi, t.gamma, t.eta, r.theta, r.phi, r.gamma, r.eta]
    }
}

/// One record per factor column; failures are kept per record.
#[derive(Debug)]
pub struct EstimateSet {
    pub records: Vec<Result<TargetEstimate>>,
}

impl EstimateSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All records, or the first per-record error.
    pub fn into_estimates(self) -> Result<Vec<TargetEstimate>> {
        self.records.into_iter().collect()
    }
}

fn column6(m: &CMatrix, k: usize) -> Vector6<C64> {
    Vector6::from_iterator(m.column(k).iter().copied())
}

/// Full extraction for both sides; the column pairing of the factors is kept.
pub fn estimate_all(factors: &FactorSet, m_tilde: usize, n_tilde: usize) -> Result<EstimateSet> {
    let k = factors.rank();
    if factors.c_r.ncols() != k || factors.q_kron.ncols() != k {
        return Err(Error::Shape("factor column counts differ".into()));
    }
    let elev_t = estimate_elevations(&factors.c_t, m_tilde)?;
    let elev_r = estimate_elevations(&factors.c_r, n_tilde)?;
    let q_t = reconstruct_spatial_response(&factors.c_t, m_tilde)?;
    let q_r = reconstruct_spatial_response(&factors.c_r, n_tilde)?;
    let records = (0..k)
        .map(|col| {
            let transmit = extract_angles_and_polarization(&column6(&q_t, col), Some(elev_t[col].theta))?;
            let receive = extract_angles_and_polarization(&column6(&q_r, col), Some(elev_r[col].theta))?;
            Ok(TargetEstimate {
                transmit,
                receive,
                lambda_imag_t: elev_t[col].lambda.im,
                lambda_imag_r: elev_r[col].lambda.im,
            })
        })
        .collect();
    Ok(EstimateSet { records })
}

/// Noise-free factor column `a_hat (x) q` for a side, with `a_hat` the
/// beamspace steering vector in closed (Dirichlet) form.
pub fn model_factor_column(theta: f64, q: &Vector6<C64>, m_tilde: usize) -> Vec<C64> {
    let mut out = vec![ZERO; 6 * m_tilde];
    for m in 0..m_tilde {
        let a = dirichlet(theta.sin() - 2.0 * m as f64 / m_tilde as f64, m_tilde);
        for i in 0..6 {
            out[6 * m + i] = q[i] * a;
        }
    }
    out
}

/// `sin(pi M x / 2) / sin(pi x / 2)`, with the limit `+-M` at the poles.
pub fn dirichlet(x: f64, m: usize) -> f64 {
    let den = (PI * x / 2.0).sin();
    let num = (PI * m as f64 * x / 2.0).sin();
    if den.abs() < 1e-13 {
        // x = 2l: the ratio tends to M cos(pi M l) / cos(pi l).
        let l = (x / 2.0).round();
        let sign = if ((m as f64 - 1.0) * l).rem_euclid(2.0) < 0.5 {
            1.0
        } else {
            -1.0
        };
        return sign * m as f64;
    }
    num / den
}
