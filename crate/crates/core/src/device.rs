//! Behavioral model of a single memtransistor.
//!
//! A device holds one of `num_states` discrete memductance levels (the
//! *ladder*). A negative gate pulse potentiates the device by exactly one
//! level, a positive pulse depresses it by one level, and pulses at either
//! end of the ladder saturate. Every pulse is counted in a [`PulseLog`] so
//! programming energy can be reported afterwards.
//!
//! Memductance is dimensionless: the ladder spans `[g_min, g_max]`, which
//! defaults to `[0, 1]`. `siemens_scale` only matters for reporting.

use std::ops::{Add, AddAssign};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the memductance ladder between `g_min` and `g_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderShape {
    /// `g_k = g_min + k (g_max - g_min) / (n - 1)`.
    Linear,
    /// `g_k = g_min + (g_max - g_min) (exp(r t) - 1) / (exp(r) - 1)` with
    /// `t = k / (n - 1)` and `r = ladder_rate`; steps widen toward `g_max`.
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    pub num_states: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub ladder_shape: LadderShape,
    /// Curvature of the exponential ladder; ignored for linear ladders.
    pub ladder_rate: f64,
    /// Joules per potentiating (negative) pulse.
    pub e_potentiation: f64,
    /// Joules per depressing (positive) pulse.
    pub e_depression: f64,
    /// Programming variability, as a fraction of `g_max - g_min`.
    pub sigma_program: f64,
    /// Per-read memductance noise, as a fraction of `g_max - g_min`.
    pub sigma_read: f64,
    /// Siemens per unit of dimensionless memductance, for reports only.
    pub siemens_scale: Option<f64>,
    /// Measured ladder that replaces the parametric shape when present.
    pub custom_ladder: Option<Vec<f64>>,
}

pub const DEFAULT_NUM_STATES: usize = 86;
pub const DEFAULT_E_POTENTIATION: f64 = 0.7e-9;
pub const DEFAULT_E_DEPRESSION: f64 = 0.5e-12;

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            num_states: DEFAULT_NUM_STATES,
            g_min: 0.0,
            g_max: 1.0,
            ladder_shape: LadderShape::Linear,
            ladder_rate: 3.0,
            e_potentiation: DEFAULT_E_POTENTIATION,
            e_depression: DEFAULT_E_DEPRESSION,
            sigma_program: 0.0,
            sigma_read: 0.0,
            siemens_scale: None,
            custom_ladder: None,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Param(msg));
        if self.num_states < 2 {
            return fail(format!("num_states must be >= 2, got {}", self.num_states));
        }
        if !(self.g_min.is_finite() && self.g_max.is_finite() && self.g_min < self.g_max) {
            return fail(format!(
                "need finite g_min < g_max, got [{}, {}]",
                self.g_min, self.g_max
            ));
        }
        for (name, v) in [
            ("sigma_program", self.sigma_program),
            ("sigma_read", self.sigma_read),
            ("e_potentiation", self.e_potentiation),
            ("e_depression", self.e_depression),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.ladder_shape == LadderShape::Exponential
            && !(self.ladder_rate.is_finite() && self.ladder_rate > 0.0)
        {
            return fail(format!("ladder_rate must be > 0, got {}", self.ladder_rate));
        }
        if let Some(s) = self.siemens_scale {
            if !(s.is_finite() && s > 0.0) {
                return fail(format!("siemens_scale must be > 0, got {s}"));
            }
        }
        if let Some(ladder) = &self.custom_ladder {
            if ladder.len() != self.num_states {
                return fail(format!(
                    "custom ladder has {} levels but num_states = {}",
                    ladder.len(),
                    self.num_states
                ));
            }
            if ladder.iter().any(|g| !g.is_finite()) {
                return fail("custom ladder contains a non-finite level".into());
            }
            if ladder.windows(2).any(|w| w[0] >= w[1]) {
                return fail("custom ladder is not strictly increasing".into());
            }
            if ladder[0] != self.g_min || ladder[ladder.len() - 1] != self.g_max {
                return fail("custom ladder endpoints must equal g_min and g_max".into());
            }
        }
        Ok(())
    }

    /// Replaces the parametric ladder with measured levels. `num_states`,
    /// `g_min` and `g_max` are taken from the levels.
    pub fn with_custom_ladder(mut self, levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Param(format!(
                "custom ladder needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        self.num_states = levels.len();
        self.g_min = levels[0];
        self.g_max = levels[levels.len() - 1];
        self.custom_ladder = Some(levels);
        self.validate()?;
        Ok(self)
    }

    pub fn range(&self) -> f64 {
        self.g_max - self.g_min
    }

    /// Parses a flat key-value (TOML) document whose keys are the field
    /// names of [`DeviceParams`], plus an optional `ladder_file` naming a
    /// single-column ladder file. Relative ladder paths resolve against
    /// `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let ladder_file = table.remove("ladder_file");
        for key in table.keys() {
            if !DEVICE_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown device key `{key}`")));
            }
        }
        let mut params: DeviceParams = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(file) = ladder_file {
            let file = file
                .as_str()
                .ok_or_else(|| Error::Config("ladder_file must be a string".into()))?;
            let mut path = std::path::PathBuf::from(file);
            if path.is_relative() {
                if let Some(base) = base_dir {
                    path = base.join(path);
                }
            }
            params = params.with_custom_ladder(load_ladder_file(&path)?)?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }
}

/// Keys accepted in a device config file.
pub const DEVICE_KEYS: &[&str] = &[
    "num_states",
    "g_min",
    "g_max",
    "ladder_shape",
    "ladder_rate",
    "e_potentiation",
    "e_depression",
    "sigma_program",
    "sigma_read",
    "siemens_scale",
    "custom_ladder",
];

/// Reads a single-column file of strictly increasing memductance levels.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_ladder_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut levels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            row: lineno + 1,
            col: 1,
            msg: format!("`{line}` is not a number"),
        })?;
        levels.push(v);
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Param(format!(
            "{}: ladder levels are not strictly increasing",
            path.display()
        )));
    }
    Ok(levels)
}

/// The ordered memductance levels of a device.
pub fn state_ladder(params: &DeviceParams) -> Result<Vec<f64>> {
    params.validate()?;
    if let Some(ladder) = &params.custom_ladder {
        return Ok(ladder.clone());
    }
    let n = params.num_states;
    let last = (n - 1) as f64;
    let range = params.range();
    let mut ladder: Vec<f64> = match params.ladder_shape {
        LadderShape::Linear => (0..n)
            .map(|k| params.g_min + range * k as f64 / last)
            .collect(),
        LadderShape::Exponential => {
            let r = params.ladder_rate;
            let denom = r.exp_m1();
            (0..n)
                .map(|k| params.g_min + range * (r * k as f64 / last).exp_m1() / denom)
                .collect()
        }
    };
    // Pin the endpoints so floating-point drift never leaves [g_min, g_max].
    ladder[0] = params.g_min;
    ladder[n - 1] = params.g_max;
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Param(format!(
            "{n} states are not distinguishable in [{}, {}] at f64 precision",
            params.g_min, params.g_max
        )));
    }
    Ok(ladder)
}

/// Largest gap between adjacent ladder levels.
pub fn max_ladder_gap(ladder: &[f64]) -> f64 {
    ladder
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

/// Gate pulse polarity. Negative pulses potentiate, positive pulses depress.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Negative,
    Positive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseLog {
    pub n_potentiation: u64,
    pub n_depression: u64,
}

impl PulseLog {
    pub fn new(n_potentiation: u64, n_depression: u64) -> Self {
        PulseLog {
            n_potentiation,
            n_depression,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_potentiation + self.n_depression
    }
}

impl Add for PulseLog {
    type Output = PulseLog;

    fn add(self, rhs: PulseLog) -> PulseLog {
        PulseLog {
            n_potentiation: self.n_potentiation + rhs.n_potentiation,
            n_depression: self.n_depression + rhs.n_depression,
        }
    }
}

impl AddAssign for PulseLog {
    fn add_assign(&mut self, rhs: PulseLog) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for PulseLog {
    fn sum<I: Iterator<Item = PulseLog>>(iter: I) -> PulseLog {
        iter.fold(PulseLog::default(), Add::add)
    }
}

/// Programming energy in joules.
pub fn energy_of(log: &PulseLog, params: &DeviceParams) -> f64 {
    log.n_potentiation as f64 * params.e_potentiation
        + log.n_depression as f64 * params.e_depression
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemtransistorCell {
    pub state_index: usize,
    /// Memductance perturbation frozen at programming time.
    pub programmed_offset: f64,
}

impl MemtransistorCell {
    pub fn at_state(state_index: usize) -> Self {
        MemtransistorCell {
            state_index,
            programmed_offset: 0.0,
        }
    }

    /// Moves one level along the ladder. Saturated pulses still cost energy.
    pub fn apply_pulse(&mut self, polarity: Polarity, params: &DeviceParams, log: &mut PulseLog) {
        match polarity {
            Polarity::Negative => {
                log.n_potentiation += 1;
                if self.state_index + 1 < params.num_states {
                    self.state_index += 1;
                }
            }
            Polarity::Positive => {
                log.n_depression += 1;
                self.state_index = self.state_index.saturating_sub(1);
            }
        }
    }

    /// Effective memductance: ladder level plus offset, clamped to the
    /// device range.
    pub fn memductance(&self, ladder: &[f64], params: &DeviceParams) -> f64 {
        (ladder[self.state_index] + self.programmed_offset).clamp(params.g_min, params.g_max)
    }
}

/// Draws a programming offset, or exactly zero when `sigma_program` is 0.
pub fn draw_program_offset<R: Rng + ?Sized>(params: &DeviceParams, rng: &mut R) -> f64 {
    gaussian(params.sigma_program * params.range(), rng)
}

/// Draws a per-read memductance fluctuation, or zero when `sigma_read` is 0.
pub fn draw_read_noise<R: Rng + ?Sized>(params: &DeviceParams, rng: &mut R) -> f64 {
    gaussian(params.sigma_read * params.range(), rng)
}

fn gaussian<R: Rng + ?Sized>(std_dev: f64, rng: &mut R) -> f64 {
    if std_dev == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std_dev)
        .expect("std_dev validated finite and non-negative")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(n: usize) -> DeviceParams {
        DeviceParams {
            num_states: n,
            ..DeviceParams::default()
        }
    }

    #[test]
    fn two_state_ladder_is_endpoints() {
        assert_eq!(state_ladder(&linear(2)).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn default_ladder_has_uniform_spacing() {
        let ladder = state_ladder(&DeviceParams::default()).unwrap();
        assert_eq!(ladder.len(), 86);
        for w in ladder.windows(2) {
            assert!((w[1] - w[0] - 1.0 / 85.0).abs() < 1e-15);
        }
        assert_eq!(ladder[85], 1.0);
    }

    #[test]
    fn exponential_ladder_matches_closed_form() {
        let params = DeviceParams {
            num_states: 5,
            ladder_shape: LadderShape::Exponential,
            ..DeviceParams::default()
        };
        let ladder = state_ladder(&params).unwrap();
        let r: f64 = 3.0;
        for (k, g) in ladder.iter().enumerate() {
            let t = k as f64 / 4.0;
            let expect = ((r * t).exp() - 1.0) / (r.exp() - 1.0);
            assert!((g - expect).abs() < 1e-12, "level {k}: {g} vs {expect}");
        }
        assert_eq!(ladder[0], 0.0);
        assert_eq!(ladder[4], 1.0);
        for i in 0..4 {
            assert!(ladder[i] < ladder[i + 1]);
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        for bad in [
            linear(1),
            DeviceParams {
                g_min: 1.0,
                g_max: 1.0,
                ..DeviceParams::default()
            },
            DeviceParams {
                sigma_read: -0.1,
                ..DeviceParams::default()
            },
            DeviceParams {
                sigma_program: f64::NAN,
                ..DeviceParams::default()
            },
        ] {
            assert!(matches!(state_ladder(&bad), Err(Error::Param(_))));
        }
    }

    #[test]
    fn pulses_step_and_saturate() {
        let params = DeviceParams::default();
        let ladder = state_ladder(&params).unwrap();
        let mut log = PulseLog::default();

        let mut cell = MemtransistorCell::at_state(0);
        let before = cell.memductance(&ladder, &params);
        cell.apply_pulse(Polarity::Negative, &params, &mut log);
        assert_eq!(cell.state_index, 1);
        assert!(cell.memductance(&ladder, &params) > before);

        let mut top = MemtransistorCell::at_state(85);
        top.apply_pulse(Polarity::Negative, &params, &mut log);
        assert_eq!(top.state_index, 85);

        let mut mid = MemtransistorCell::at_state(5);
        mid.apply_pulse(Polarity::Positive, &params, &mut log);
        assert_eq!(mid.state_index, 4);

        let mut bottom = MemtransistorCell::at_state(0);
        bottom.apply_pulse(Polarity::Positive, &params, &mut log);
        assert_eq!(bottom.state_index, 0);

        assert_eq!(log, PulseLog::new(2, 2));
    }

    #[test]
    fn energy_arithmetic() {
        let params = DeviceParams::default();
        assert_eq!(energy_of(&PulseLog::new(0, 0), &params), 0.0);
        assert!((energy_of(&PulseLog::new(1, 0), &params) - 0.7e-9).abs() < 1e-24);
        assert!((energy_of(&PulseLog::new(3, 2), &params) - 2.101e-9).abs() < 1e-21);
    }

    #[test]
    fn offsets_are_zero_without_sigma_and_reproducible_with_it() {
        let quiet = DeviceParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(draw_program_offset(&quiet, &mut rng), 0.0);

        let noisy = DeviceParams {
            sigma_program: 0.02,
            ..DeviceParams::default()
        };
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..8).map(|_| draw_program_offset(&noisy, &mut rng)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..8).map(|_| draw_program_offset(&noisy, &mut rng)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn effective_memductance_is_clamped() {
        let params = DeviceParams::default();
        let ladder = state_ladder(&params).unwrap();
        let cell = MemtransistorCell {
            state_index: 85,
            programmed_offset: 0.3,
        };
        assert_eq!(cell.memductance(&ladder, &params), 1.0);
        let cell = MemtransistorCell {
            state_index: 0,
            programmed_offset: -0.3,
        };
        assert_eq!(cell.memductance(&ladder, &params), 0.0);
    }

    #[test]
    fn toml_config_uses_field_names() {
        let text = r#"
            num_states = 16
            ladder_shape = "exponential"
            sigma_program = 0.01
            e_potentiation = 1e-9
        "#;
        let params = DeviceParams::from_toml_str(text, None).unwrap();
        assert_eq!(params.num_states, 16);
        assert_eq!(params.ladder_shape, LadderShape::Exponential);
        assert_eq!(params.sigma_program, 0.01);
        assert_eq!(params.e_depression, DEFAULT_E_DEPRESSION);

        let err = DeviceParams::from_toml_str("num_state = 3", None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn ladder_file_overrides_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ladder.txt");
        std::fs::write(&path, "# measured\n0.1\n0.2\n\n0.45\n0.9\n").unwrap();
        let params =
            DeviceParams::from_toml_str("ladder_file = \"ladder.txt\"", Some(dir.path())).unwrap();
        assert_eq!(params.num_states, 4);
        assert_eq!(state_ladder(&params).unwrap(), vec![0.1, 0.2, 0.45, 0.9]);

        std::fs::write(&path, "0.1\n0.05\n").unwrap();
        assert!(load_ladder_file(&path).is_err());
    }
}
