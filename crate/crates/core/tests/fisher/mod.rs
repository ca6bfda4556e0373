//! Brute-force single-target Fisher information with every snapshot
//! amplitude treated as a nuisance parameter. Written against the raw
//! measurement model, without any library helpers.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

/// Six-component EMVS response for elevation, azimuth and polarization angles.
pub fn q_vector(th: f64, ph: f64, ga: f64, et: f64) -> [C; 6] {
    let g = [C::from_polar(ga.sin(), et), C::new(ga.cos(), 0.0)];
    let f = [
        [ph.cos() * th.cos(), -ph.sin()],
        [ph.sin() * th.cos(), ph.cos()],
        [-th.sin(), 0.0],
        [-ph.sin(), -ph.cos() * th.cos()],
        [ph.cos(), -ph.sin() * th.cos()],
        [0.0, th.sin()],
    ];
    f.map(|row| g[0] * row[0] + g[1] * row[1])
}

fn response(tx: &[usize], rx: &[usize], alpha: &[f64; 8]) -> Vec<C> {
    let side = |pos: &[usize], th: f64, ph: f64, ga: f64, et: f64| -> Vec<C> {
        let q = q_vector(th, ph, ga, et);
        let mut out = Vec::new();
        for &p in pos {
            let a = C::from_polar(1.0, -std::f64::consts::PI * p as f64 * th.sin());
            out.extend(q.iter().map(|&qi| a * qi));
        }
        out
    };
    let t = side(tx, alpha[0], alpha[1], alpha[2], alpha[3]);
    let r = side(rx, alpha[4], alpha[5], alpha[6], alpha[7]);
    t.iter().flat_map(|&x| r.iter().map(move |&y| x * y)).collect()
}

/// The 8x8 angle block of the inverse Fisher information for amplitudes `s`
/// (one per snapshot) and noise variance `sigma2`.
pub fn nuisance_crb(tx: &[usize], rx: &[usize], alpha: [f64; 8], s: &[C], sigma2: f64) -> DMatrix<f64> {
    let snapshots = s.len();
    let c0 = response(tx, rx, &alpha);
    let rows = c0.len();
    let params = 8 + 2 * snapshots;
    let mut jac = DMatrix::<C>::zeros(rows * snapshots, params);
    let h = 1e-4;
    for fam in 0..8 {
        let at = |delta: f64| {
            let mut a = alpha;
            a[fam] += delta;
            response(tx, rx, &a)
        };
        let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
        for r in 0..rows {
            let d = (-p2[r] + p1[r] * 8.0 - m1[r] * 8.0 + m2[r]) / (12.0 * h);
            for l in 0..snapshots {
                jac[(l * rows + r, fam)] = d * s[l];
            }
        }
    }
    for l in 0..snapshots {
        for r in 0..rows {
            jac[(l * rows + r, 8 + 2 * l)] = c0[r];
            jac[(l * rows + r, 9 + 2 * l)] = c0[r] * C::new(0.0, 1.0);
        }
    }
    let fisher = (jac.adjoint() * &jac).map(|z| z.re * 2.0 / sigma2);
    let full_inverse = fisher.try_inverse().expect("nonsingular Fisher information");
    full_inverse.view((0, 0), (8, 8)).into_owned()
}
