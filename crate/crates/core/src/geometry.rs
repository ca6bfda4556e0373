//! Coprime sensor placement, difference coarrays and coarray selection.
//!
//! Positions are integers on a half-wavelength grid. Throughout the crate a
//! grouped pair `(slow, fast)` of sensors is vectorised as `slow * |S| + fast`,
//! and the coarray lag of that pair is `pos[fast] - pos[slow]`. With the phase
//! convention `exp(-j*pi*p*sin(theta))` this maps `a (x) conj(a)` onto the
//! contiguous virtual steering vector `exp(j*pi*u*sin(theta))`, `u = -h..=h`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which side of the bistatic radar an array sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ArrayRole {
    Transmit,
    Receive,
}

/// Element positions of a coprime linear array, in half-wavelength units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorPositions {
    positions: Vec<usize>,
    m1: usize,
    m2: usize,
    role: ArrayRole,
}

impl SensorPositions {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn role(&self) -> ArrayRole {
        self.role
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Union of `{m1*k : k < m2}` and `{m2*k : k < 2*m1}`, sorted and deduplicated.
pub fn build_coprime_array(m1: usize, m2: usize, role: ArrayRole) -> Result<SensorPositions> {
    if m1 < 1 || m2 < 2 {
        return Err(Error::Parameter(format!(
            "coprime pair needs m1 >= 1 and m2 >= 2, got ({m1}, {m2})"
        )));
    }
    if m1 >= m2 {
        return Err(Error::Parameter(format!(
            "coprime pair needs m1 < m2, got ({m1}, {m2})"
        )));
    }
    if gcd(m1, m2) != 1 {
        return Err(Error::Parameter(format!("({m1}, {m2}) is not a coprime pair")));
    }
    let mut positions: Vec<usize> = (0..m2).map(|k| m1 * k).chain((0..2 * m1).map(|k| m2 * k)).collect();
    positions.sort_unstable();
    positions.dedup();
    Ok(SensorPositions {
        positions,
        m1,
        m2,
        role,
    })
}

/// Duplicate-averaging selection matrix, stored by rows.
///
/// Row `i` belongs to lag `-h + i` and holds `w(lag)` entries of `1/w(lag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl SelectionMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Nonzero `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows.len(), self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Difference set, weight function and central contiguous segment of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarraySpec {
    diff_set: Vec<i64>,
    weights: BTreeMap<i64, usize>,
    half_width: usize,
    sensors: usize,
}

impl CoarraySpec {
    /// Sorted difference set.
    pub fn diff_set(&self) -> &[i64] {
        &self.diff_set
    }

    pub fn weights(&self) -> &BTreeMap<i64, usize> {
        &self.weights
    }

    /// `w(lag)`, zero for lags outside the difference set.
    pub fn weight(&self, lag: i64) -> usize {
        self.weights.get(&lag).copied().unwrap_or(0)
    }

    /// `h` such that the central contiguous segment is `[-h, h]`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of virtual elements `2h + 1` in the central segment.
    pub fn contiguous_len(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Lags of the central segment in ascending order.
    pub fn central_lags(&self) -> impl Iterator<Item = i64> + '_ {
        let h = self.half_width as i64;
        -h..=h
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }
}

pub fn difference_coarray(arr: &SensorPositions) -> CoarraySpec {
    let mut weights = BTreeMap::new();
    for &slow in arr.positions() {
        for &fast in arr.positions() {
            *weights.entry(fast as i64 - slow as i64).or_insert(0usize) += 1;
        }
    }
    let diff_set: Vec<i64> = weights.keys().copied().collect();
    let mut half_width = 0usize;
    while weights.contains_key(&(half_width as i64 + 1)) {
        half_width += 1;
    }
    CoarraySpec {
        diff_set,
        weights,
        half_width,
        sensors: arr.len(),
    }
}

/// Selection matrix `J` of shape `|U| x |S|^2` restricted to the central segment.
pub fn build_selection_matrix(arr: &SensorPositions) -> SelectionMatrix {
    let coarray = difference_coarray(arr);
    let n = arr.len();
    let h = coarray.half_width() as i64;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); coarray.contiguous_len()];
    for (slow, &ps) in arr.positions().iter().enumerate() {
        for (fast, &pf) in arr.positions().iter().enumerate() {
            let lag = pf as i64 - ps as i64;
            if lag.abs() <= h {
                let w = coarray.weight(lag) as f64;
                rows[(lag + h) as usize].push((slow * n + fast, 1.0 / w));
            }
        }
    }
    SelectionMatrix { rows, cols: n * n }
}
