//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Angle lists are in degrees,
//! either comma separated (`10, 20, 30`) or as an inclusive range
//! `start:step:stop` (`10:5:70`). See `docs/config.md` for every key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cp::{TalsConfig, TalsInit};
use crate::emvs::TargetParams;
use crate::error::{Error, Result};

/// Order of the per-target angle keys, matching [`TargetParams::angles`].
pub const ANGLE_KEYS: [&str; 8] = [
    "theta_t", "phi_t", "gamma_t", "eta_t", "theta_r", "phi_r", "gamma_r", "eta_r",
];

/// TALS settings used by the harness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TalsOverrides {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub init: TalsInit,
    pub line_search: bool,
}

impl Default for TalsOverrides {
    fn default() -> Self {
        let base = TalsConfig::new(1);
        TalsOverrides {
            max_iter: base.max_iter,
            tol: base.tol,
            restarts: 1,
            init: base.init,
            line_search: true,
        }
    }
}

impl TalsOverrides {
    pub fn config(&self, k: usize, seed: u64) -> TalsConfig {
        TalsConfig {
            k,
            max_iter: self.max_iter,
            tol: self.tol,
            restarts: self.restarts,
            rng_seed: seed,
            init: self.init,
            line_search: self.line_search,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub m1: usize,
    pub m2: usize,
    pub n1: usize,
    pub n2: usize,
    /// Per-target angles in degrees, ordered as [`ANGLE_KEYS`].
    pub targets: Vec<[f64; 8]>,
    pub powers: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub snapshots: Vec<usize>,
    /// Target counts for the K sweep; each uses the first `k` targets.
    pub k_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Feed the exact model covariance to the pipeline instead of sample statistics.
    pub exact_covariance: bool,
    pub tals: TalsOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m1: 3,
            m2: 4,
            n1: 3,
            n2: 5,
            targets: Vec::new(),
            powers: Vec::new(),
            snr_db: vec![10.0],
            snapshots: vec![200],
            k_values: Vec::new(),
            trials: 200,
            seed: 0,
            output: None,
            exact_covariance: false,
            tals: TalsOverrides::default(),
        }
    }
}

/// Parses a degree list: comma-separated values or `start:step:stop`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Config("empty list".into()));
    }
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("'{}' is not a number", s.trim())))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("range '{text}' must be start:step:stop")));
        }
        let (start, step, stop) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step != 0.0 && step.is_finite()) || (stop - start) * step < 0.0 {
            return Err(Error::Config(format!("range '{text}' does not reach its end")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    text.split(',').map(number).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{key}: '{other}' is not a boolean"))),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{}' is not a non-negative integer", value.trim())))
}

fn parse_int_list(key: &str, value: &str) -> Result<Vec<usize>> {
    parse_list(value)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{key}: {v} is not a non-negative integer")))
            }
        })
        .collect()
}

fn monotone<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] < w[1]) || values.windows(2).all(|w| w[0] > w[1])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", idx + 1)));
            }
        }

        let mut cfg = RunConfig::default();
        let mut angles: [Option<Vec<f64>>; 8] = Default::default();
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "m1" => cfg.m1 = parse_int(key, v)?,
                "m2" => cfg.m2 = parse_int(key, v)?,
                "n1" => cfg.n1 = parse_int(key, v)?,
                "n2" => cfg.n2 = parse_int(key, v)?,
                "power" => cfg.powers = parse_list(v)?,
                "snr_db" => cfg.snr_db = parse_list(v)?,
                "snapshots" => cfg.snapshots = parse_int_list(key, v)?,
                "k" => cfg.k_values = parse_int_list(key, v)?,
                "trials" => cfg.trials = parse_int(key, v)?,
                "seed" => cfg.seed = parse_int(key, v)?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                "exact_covariance" => cfg.exact_covariance = parse_bool(key, v)?,
                "tals_max_iter" => cfg.tals.max_iter = parse_int(key, v)?,
                "tals_tol" => {
                    cfg.tals.tol = v
                        .parse()
                        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))?
                }
                "tals_restarts" => cfg.tals.restarts = parse_int(key, v)?,
                "tals_line_search" => cfg.tals.line_search = parse_bool(key, v)?,
                "tals_init" => {
                    cfg.tals.init = match v {
                        "random" => TalsInit::Random,
                        "algebraic" => TalsInit::Algebraic,
                        other => return Err(Error::Config(format!("{key}: unknown init '{other}'"))),
                    }
                }
                other => match ANGLE_KEYS.iter().position(|&name| name == other) {
                    Some(pos) => angles[pos] = Some(parse_list(v)?),
                    None => return Err(Error::Config(format!("unknown key '{other}'"))),
                },
            }
        }

        let missing: Vec<&str> = ANGLE_KEYS
            .iter()
            .zip(&angles)
            .filter(|(_, a)| a.is_none())
            .map(|(name, _)| *name)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing angle lists: {}", missing.join(", "))));
        }
        let lists: Vec<Vec<f64>> = angles.into_iter().flatten().collect();
        let k = lists[0].len();
        for (name, list) in ANGLE_KEYS.iter().zip(&lists) {
            if list.len() != k {
                return Err(Error::Config(format!(
                    "{name} has {} values, theta_t has {k}",
                    list.len()
                )));
            }
        }
        cfg.targets = (0..k).map(|i| std::array::from_fn(|f| lists[f][i])).collect();
        cfg.powers = match cfg.powers.len() {
            0 => vec![1.0; k],
            1 => vec![cfg.powers[0]; k],
            n if n == k => cfg.powers,
            n => return Err(Error::Config(format!("power has {n} values for {k} targets"))),
        };
        if cfg.k_values.is_empty() {
            cfg.k_values = vec![k];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target is required".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.powers.len() != self.targets.len() || self.powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Config("one positive finite power per target is required".into()));
        }
        if self.snr_db.is_empty() || self.snapshots.is_empty() || self.k_values.is_empty() {
            return Err(Error::Config("sweep lists must be nonempty".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("snr_db values must be numbers".into()));
        }
        if !monotone(&self.snr_db) || !monotone(&self.snapshots) || !monotone(&self.k_values) {
            return Err(Error::Config("sweep lists must be strictly monotone".into()));
        }
        if self.snapshots.contains(&0) {
            return Err(Error::Config("snapshots must be positive".into()));
        }
        if let Some(&bad) = self.k_values.iter().find(|&&k| k < 1 || k > self.targets.len()) {
            return Err(Error::Config(format!(
                "k = {bad} needs between 1 and {} configured targets",
                self.targets.len()
            )));
        }
        self.tals.config(1, 0).validate()
    }

    /// The first `k` targets in radians.
    pub fn target_params(&self, k: usize) -> Vec<TargetParams> {
        self.targets
            .iter()
            .zip(&self.powers)
            .take(k)
            .map(|(deg, &p)| TargetParams::from_angles(deg.map(f64::to_radians), p))
            .collect()
    }
}
