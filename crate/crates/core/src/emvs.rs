//! Electromagnetic vector sensor responses and the post-matched-filter
//! snapshot simulator.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Matrix6x2, Vector2, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorPositions;
use crate::linalg::{matmul, CMatrix, C64};

/// Angles (radians) and power of one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub theta_t: f64,
    pub phi_t: f64,
    pub gamma_t: f64,
    pub eta_t: f64,
    pub theta_r: f64,
    pub phi_r: f64,
    pub gamma_r: f64,
    pub eta_r: f64,
    pub power: f64,
}

impl TargetParams {
    /// The eight angles in the order
    /// `(theta_t, phi_t, gamma_t, eta_t, theta_r, phi_r, gamma_r, eta_r)`.
    pub fn angles(&self) -> [f64; 8] {
        [
            self.theta_t,
            self.phi_t,
            self.gamma_t,
            self.eta_t,
            self.theta_r,
            self.phi_r,
            self.gamma_r,
            self.eta_r,
        ]
    }

    pub fn from_angles(angles: [f64; 8], power: f64) -> Self {
        let [theta_t, phi_t, gamma_t, eta_t, theta_r, phi_r, gamma_r, eta_r] = angles;
        TargetParams {
            theta_t,
            phi_t,
            gamma_t,
            eta_t,
            theta_r,
            phi_r,
            gamma_r,
            eta_r,
            power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in PARAMETER_NAMES.iter().zip(self.angles()) {
            if !(0.0..FRAC_PI_2).contains(&value) {
                return Err(Error::Parameter(format!("{name} = {value} rad lies outside [0, pi/2)")));
            }
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::Parameter(format!(
                "target power {} must be positive",
                self.power
            )));
        }
        Ok(())
    }

    pub fn transmit_response(&self) -> SpatialResponse {
        spatial_response(self.theta_t, self.phi_t, self.gamma_t, self.eta_t)
    }

    pub fn receive_response(&self) -> SpatialResponse {
        spatial_response(self.theta_r, self.phi_r, self.gamma_r, self.eta_r)
    }
}

/// Names of the eight per-target angles, in [`TargetParams::angles`] order.
pub const PARAMETER_NAMES: [&str; 8] = [
    "theta_t", "phi_t", "gamma_t", "eta_t", "theta_r", "phi_r", "gamma_r", "eta_r",
];

/// `q = F(theta, phi) g(gamma, eta)` for one EMVS.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialResponse {
    pub q: Vector6<C64>,
    pub f: Matrix6x2<C64>,
    pub g: Vector2<C64>,
}

/// Angular location matrix `F(theta, phi)`.
pub fn field_matrix(theta: f64, phi: f64) -> Matrix6x2<C64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    #[rustfmt::skip]
    let f = Matrix6x2::new(
        cp * ct, -sp,
        sp * ct,  cp,
        -st,      0.0,
        -sp,     -cp * ct,
        cp,      -sp * ct,
        0.0,      st,
    );
    f.map(|x| C64::new(x, 0.0))
}

/// Polarization state `g(gamma, eta) = [sin(gamma) e^{j eta}, cos(gamma)]`.
pub fn polarization_vector(gamma: f64, eta: f64) -> Vector2<C64> {
    Vector2::new(C64::from_polar(gamma.sin(), eta), C64::new(gamma.cos(), 0.0))
}

pub fn spatial_response(theta: f64, phi: f64, gamma: f64, eta: f64) -> SpatialResponse {
    let f = field_matrix(theta, phi);
    let g = polarization_vector(gamma, eta);
    SpatialResponse { q: f * g, f, g }
}

/// Elevation and azimuth from the normalised Poynting vector of `q`.
///
/// Azimuth is `atan(v / u)` with no quadrant folding; under the supported
/// parameter range `u > 0` and the result lies in `[0, pi/2)`.
pub fn poynting_angles(q: &Vector6<C64>) -> Result<(f64, f64)> {
    let e = Vector3::new(q[0], q[1], q[2]);
    let h = Vector3::new(q[3], q[4], q[5]);
    let (ne, nh) = (e.norm(), h.norm());
    if ne == 0.0 || nh == 0.0 || !ne.is_finite() || !nh.is_finite() {
        return Err(Error::DegenerateResponse(format!(
            "electric norm {ne}, magnetic norm {nh}"
        )));
    }
    let e = e.unscale(ne);
    let h = h.map(|z| z.conj()).unscale(nh);
    let p = e.cross(&h);
    let (u, v, w) = (p[0].re, p[1].re, p[2].re);
    let theta = w.clamp(-1.0, 1.0).acos();
    if u.hypot(v) < 1e-12 {
        return Err(Error::AzimuthUndefined(format!(
            "Poynting vector [{u}, {v}, {w}] points along boresight"
        )));
    }
    let phi = if u == 0.0 {
        FRAC_PI_2.copysign(v)
    } else {
        (v / u).atan()
    };
    Ok((theta, phi))
}

/// Phase-only steering vector, entry `exp(-j*pi*p*sin(theta))` for position `p`.
pub fn steering_vector(arr: &SensorPositions, theta: f64) -> DVector<C64> {
    let s = theta.sin();
    DVector::from_iterator(
        arr.len(),
        arr.positions()
            .iter()
            .map(|&p| C64::from_polar(1.0, -PI * p as f64 * s)),
    )
}

/// `a(theta) (x) q` with the array index slow and the six EMVS components fast.
pub fn sensor_response(arr: &SensorPositions, theta: f64, q: &Vector6<C64>) -> DVector<C64> {
    let a = steering_vector(arr, theta);
    DVector::from_iterator(a.len() * 6, a.iter().flat_map(|&ap| q.iter().map(move |&qi| ap * qi)))
}

/// A synthetic bistatic scene.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub transmit: SensorPositions,
    pub receive: SensorPositions,
    pub targets: Vec<TargetParams>,
    pub snapshots: usize,
    /// Ratio of mean per-channel signal power to noise variance; `+inf` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Parameter("scene needs at least one target".into()));
        }
        if self.snapshots == 0 {
            return Err(Error::Parameter("scene needs at least one snapshot".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Parameter(format!("SNR {} dB is not usable", self.snr_db)));
        }
        self.targets.iter().try_for_each(TargetParams::validate)
    }

    /// Length `36 * M * N` of one snapshot.
    pub fn channels(&self) -> usize {
        36 * self.transmit.len() * self.receive.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Mean signal power per channel, `sum_k power_k * |c_k|^2 / (36 M N)`.
    pub fn signal_power_per_channel(&self) -> f64 {
        let total: f64 = self
            .targets
            .iter()
            .map(|t| {
                let qt = t.transmit_response().q.norm_squared();
                let qr = t.receive_response().q.norm_squared();
                t.power * qt * qr * (self.transmit.len() * self.receive.len()) as f64
            })
            .sum();
        total / self.channels() as f64
    }

    /// Per-channel noise variance implied by `snr_db` (zero when noiseless).
    pub fn noise_variance(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            self.signal_power_per_channel() / 10f64.powf(self.snr_db / 10.0)
        }
    }
}

/// Joint transmit-receive column `c_t (x) c_r` of one target.
pub fn joint_response(transmit: &SensorPositions, receive: &SensorPositions, target: &TargetParams) -> DVector<C64> {
    let ct = sensor_response(transmit, target.theta_t, &target.transmit_response().q);
    let cr = sensor_response(receive, target.theta_r, &target.receive_response().q);
    ct.kronecker(&cr)
}

/// `(A_t . Q_t) . (A_r . Q_r)`, shape `36MN x K`.
pub fn joint_steering_matrix(scene: &SceneConfig) -> CMatrix {
    let rows = scene.channels();
    let mut out = CMatrix::zeros(rows, scene.num_targets());
    for (k, t) in scene.targets.iter().enumerate() {
        out.set_column(k, &joint_response(&scene.transmit, &scene.receive, t));
    }
    out
}

/// Array output, `36MN x L`, stored row-major so that it is also the
/// `(M, 6, N, 6, L)` snapshot tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    rows: usize,
    snapshots: usize,
    data: Vec<C64>,
}

impl SnapshotMatrix {
    pub fn new(rows: usize, snapshots: usize, data: Vec<C64>) -> Result<Self> {
        if rows * snapshots != data.len() {
            return Err(Error::Shape(format!(
                "{} entries cannot fill {rows} x {snapshots}",
                data.len()
            )));
        }
        Ok(SnapshotMatrix { rows, snapshots, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn snapshots(&self) -> usize {
        self.snapshots
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, row: usize, snapshot: usize) -> C64 {
        self.data[row * self.snapshots + snapshot]
    }
}

/// Draws `Y = C_tr S + N` with unit-modulus random-phase sources and circular
/// Gaussian noise. Deterministic in `scene.seed`.
pub fn generate_snapshots(scene: &SceneConfig) -> Result<SnapshotMatrix> {
    scene.validate()?;
    let (k, l) = (scene.num_targets(), scene.snapshots);
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let mut sources = CMatrix::zeros(k, l);
    for col in 0..l {
        for (row, t) in scene.targets.iter().enumerate() {
            let phase: f64 = rng.random::<f64>() * 2.0 * PI;
            sources[(row, col)] = C64::from_polar(t.power.sqrt(), phase);
        }
    }
    let signal = matmul(&joint_steering_matrix(scene), &sources);
    let rows = scene.channels();
    let noise_std = (scene.noise_variance() / 2.0).sqrt();
    let mut data = Vec::with_capacity(rows * l);
    for r in 0..rows {
        for c in 0..l {
            data.push(signal[(r, c)]);
        }
    }
    if noise_std > 0.0 {
        for z in data.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += C64::new(re * noise_std, im * noise_std);
        }
    }
    SnapshotMatrix::new(rows, l, data)
}
