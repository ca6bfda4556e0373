//! Deterministic Cramer-Rao bound for the eight angles of every target under
//! the physical bistatic EMVS-MIMO model `y = C_tr s + n`.
//!
//! Parameters are ordered by family: all `theta_t`, then all `phi_t`, ...,
//! then all `eta_r`, each block of length `K`. The bound ignores the coarray
//! processing, so the coarray estimator need not attain it.

use nalgebra::{DMatrix, Matrix6x2, Vector2};

use crate::emvs::{field_matrix, joint_steering_matrix, polarization_vector, SceneConfig, TargetParams};
use crate::error::{Error, Result};
use crate::linalg::{matmul, pinv, CMatrix, C64};

/// Angle families per target.
pub const FAMILIES: usize = 8;

/// Family names in CRB ordering.
pub const FAMILY_NAMES: [&str; FAMILIES] = [
    "theta_t", "phi_t", "gamma_t", "eta_t", "theta_r", "phi_r", "gamma_r", "eta_r",
];

/// Central-difference step (radians) used for the manifold derivatives.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CrbResult {
    /// `8K x 8K` bound in rad^2, family-major ordering.
    pub matrix: DMatrix<f64>,
    pub sigma2: f64,
    pub snapshots: usize,
}

impl CrbResult {
    pub fn num_targets(&self) -> usize {
        self.matrix.nrows() / FAMILIES
    }

    /// Diagonal entry for `family` of `target`, rad^2.
    pub fn variance(&self, family: usize, target: usize) -> f64 {
        let idx = family * self.num_targets() + target;
        self.matrix[(idx, idx)]
    }
}

fn perturbed(target: &TargetParams, family: usize, delta: f64) -> TargetParams {
    let mut angles = target.angles();
    angles[family] += delta;
    TargetParams::from_angles(angles, target.power)
}

/// `dC_tr/d alpha` by central differences with step `step`; column `f * K + k`
/// holds the derivative of column `k` with respect to family `f` of target `k`.
pub fn manifold_derivatives_with_step(scene: &SceneConfig, step: f64) -> Result<CMatrix> {
    scene.validate()?;
    if !(step > 0.0) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let k = scene.num_targets();
    let mut d = CMatrix::zeros(scene.channels(), FAMILIES * k);
    for (col, target) in scene.targets.iter().enumerate() {
        for family in 0..FAMILIES {
            let column = |delta: f64| {
                let t = perturbed(target, family, delta);
                crate::emvs::joint_response(&scene.transmit, &scene.receive, &t)
            };
            let diff = (column(step) - column(-step)) / C64::new(2.0 * step, 0.0);
            d.set_column(family * k + col, &diff);
        }
    }
    Ok(d)
}

/// [`manifold_derivatives_with_step`] at [`FD_STEP`].
pub fn manifold_derivatives(scene: &SceneConfig) -> Result<CMatrix> {
    manifold_derivatives_with_step(scene, FD_STEP)
}

fn field_derivatives(theta: f64, phi: f64) -> (Matrix6x2<C64>, Matrix6x2<C64>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    #[rustfmt::skip]
    let d_theta = Matrix6x2::new(
        -cp * st, 0.0,
        -sp * st, 0.0,
        -ct,      0.0,
        0.0,      cp * st,
        0.0,      sp * st,
        0.0,      ct,
    );
    #[rustfmt::skip]
    let d_phi = Matrix6x2::new(
        -sp * ct, -cp,
        cp * ct,  -sp,
        0.0,      0.0,
        -cp,      sp * ct,
        -sp,      -cp * ct,
        0.0,      0.0,
    );
    (d_theta.map(|x| C64::new(x, 0.0)), d_phi.map(|x| C64::new(x, 0.0)))
}

/// Derivatives of one side's `a(theta) (x) q` with respect to `(theta, phi, gamma, eta)`.
fn side_derivatives(positions: &[usize], theta: f64, phi: f64, gamma: f64, eta: f64) -> [Vec<C64>; 5] {
    let f = field_matrix(theta, phi);
    let g = polarization_vector(gamma, eta);
    let (df_theta, df_phi) = field_derivatives(theta, phi);
    let dg_gamma = Vector2::new(C64::from_polar(gamma.cos(), eta), C64::new(-gamma.sin(), 0.0));
    let dg_eta = Vector2::new(
        C64::new(0.0, gamma.sin()) * C64::from_polar(1.0, eta),
        C64::new(0.0, 0.0),
    );
    let q = f * g;
    let dq = [df_theta * g, df_phi * g, f * dg_gamma, f * dg_eta];
    let s = theta.sin();
    let dsteer = -std::f64::consts::PI * theta.cos();

    let mut value = Vec::with_capacity(6 * positions.len());
    let mut out: [Vec<C64>; 4] = Default::default();
    for &p in positions {
        let a = C64::from_polar(1.0, -std::f64::consts::PI * p as f64 * s);
        let da = a * C64::new(0.0, dsteer * p as f64);
        for i in 0..6 {
            value.push(a * q[i]);
            out[0].push(da * q[i] + a * dq[0][i]);
            for fam in 1..4 {
                out[fam].push(a * dq[fam][i]);
            }
        }
    }
    let [d0, d1, d2, d3] = out;
    [value, d0, d1, d2, d3]
}

fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Closed-form `dC_tr/d alpha`, same layout as [`manifold_derivatives`].
pub fn analytic_derivatives(scene: &SceneConfig) -> Result<CMatrix> {
    scene.validate()?;
    let k = scene.num_targets();
    let mut d = CMatrix::zeros(scene.channels(), FAMILIES * k);
    for (col, t) in scene.targets.iter().enumerate() {
        let tx = side_derivatives(scene.transmit.positions(), t.theta_t, t.phi_t, t.gamma_t, t.eta_t);
        let rx = side_derivatives(scene.receive.positions(), t.theta_r, t.phi_r, t.gamma_r, t.eta_r);
        for family in 0..4 {
            let dt = kron(&tx[family + 1], &rx[0]);
            let dr = kron(&tx[0], &rx[family + 1]);
            for (row, (x, y)) in dt.into_iter().zip(dr).enumerate() {
                d[(row, family * k + col)] = x;
                d[(row, (family + 4) * k + col)] = y;
            }
        }
    }
    Ok(d)
}

fn check_preconditions(scene: &SceneConfig) -> Result<()> {
    scene.validate()?;
    let k = scene.num_targets();
    if FAMILIES * k + k > scene.channels() {
        return Err(Error::Parameter(format!(
            "{} parameters for {k} targets exceed the {} observed channels",
            FAMILIES * k,
            scene.channels()
        )));
    }
    for (idx, t) in scene.targets.iter().enumerate() {
        for (name, v) in FAMILY_NAMES.iter().zip(t.angles()) {
            if !(v > 0.0 && v < std::f64::consts::FRAC_PI_2) {
                return Err(Error::Parameter(format!(
                    "target {idx}: {name} = {v} rad must lie strictly inside (0, pi/2) for the CRB"
                )));
            }
        }
    }
    Ok(())
}

/// `CRB = sigma^2 / (2L) * [Re(D^H P D) .* (1_{8x8} (x) R_ss^T)]^-1` with
/// `P = I - C_tr C_tr^+` and `R_ss = diag(power_k)`.
pub fn crb_matrix(scene: &SceneConfig) -> Result<CrbResult> {
    check_preconditions(scene)?;
    let k = scene.num_targets();
    let c = joint_steering_matrix(scene);
    let d = manifold_derivatives(scene)?;
    let projected = &d - matmul(&c, &matmul(&pinv(&c, 1e-12), &d));
    let gram = matmul(&projected.adjoint(), &projected);
    let n = FAMILIES * k;
    let fisher = DMatrix::from_fn(n, n, |row, col| {
        let (ka, kb) = (row % k, col % k);
        // R_ss is diagonal, so only same-target pairs survive the Hadamard product.
        if ka == kb {
            gram[(row, col)].re * scene.targets[ka].power
        } else {
            0.0
        }
    });
    let inverse = symmetric_inverse(&fisher)?;
    let sigma2 = scene.noise_variance();
    let scale = sigma2 / (2.0 * scene.snapshots as f64);
    let mut matrix = inverse * scale;
    matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(CrbResult {
        matrix,
        sigma2,
        snapshots: scene.snapshots,
    })
}

/// Inverse through the eigen-decomposition; eigenvalues below `1e-10 * max`
/// count as null directions and are reported by parameter index.
fn symmetric_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-10 * max;
    let mut null = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !(lambda > cutoff) {
            let v = eig.eigenvectors.column(idx);
            null.extend((0..v.len()).filter(|&p| v[p].abs() > 0.1));
        }
    }
    if max <= 0.0 || !null.is_empty() {
        null.sort_unstable();
        null.dedup();
        return Err(Error::RankDeficient {
            detail: format!("Fisher information of size {} is singular", m.nrows()),
            null_directions: null,
        });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}
