//! Run configuration: TOML sections, defaults and precondition checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fnls_core::dynamics::MAX_DT;
use fnls_core::snapshot::read_snapshot;
use fnls_core::{Criticality, Field, Grid, PhysicsParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the randomized probe fields of `verify`.
    pub seed: u64,
    pub physics: Physics,
    pub grid: GridSection,
    pub time: TimeSection,
    pub initial: Initial,
    pub monitors: MonitorSection,
    pub outputs: Outputs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub d: usize,
    pub s: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Points per axis.
    pub n: usize,
    /// Half length of the box `[-L, L)^d`.
    #[serde(rename = "L")]
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    /// `amplitude · exp(-|x - center|² / width²) · exp(i carrier x₁)`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        carrier: f64,
    },
    /// `c · Q` for the configured power, solved on the configured grid.
    GroundStateMultiple { c: f64 },
    Snapshot { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSection {
    /// Exterior-mass radii; the first one also carries the virial monitor.
    pub radii: Vec<f64>,
    pub q_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub directory: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepCommand {
    GroundState,
    Evolve,
    Verify,
    Classify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub command: SweepCommand,
    /// Dotted key (`physics.alpha`, `initial.c`, ...) to the values it takes; points are the
    /// Cartesian product in key order.
    pub axes: BTreeMap<String, Vec<toml::Value>>,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { d: 1, s: 0.7, alpha: 2.8 }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        // h = 1/64 keeps the cutoff derivatives at R = 4 spectrally resolved
        GridSection { n: 2048, half_length: 16.0 }
    }
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { dt: 1e-3, t_end: 1.0, sample_every: 100 }
    }
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Gaussian { amplitude: 1.0, width: 2.0, center: Vec::new(), carrier: 1.0 }
    }
}

impl Default for MonitorSection {
    fn default() -> Self {
        MonitorSection { radii: vec![4.0], q_exponent: 10.0 }
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { directory: PathBuf::from("fnls-out") }
    }
}

/// What a command needs from the configuration beyond the common checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    GroundState,
    Evolve,
    Verify,
    Classify,
    Sweep,
}

impl From<SweepCommand> for Purpose {
    fn from(c: SweepCommand) -> Self {
        match c {
            SweepCommand::GroundState => Purpose::GroundState,
            SweepCommand::Evolve => Purpose::Evolve,
            SweepCommand::Verify => Purpose::Verify,
            SweepCommand::Classify => Purpose::Classify,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn params(&self) -> Result<PhysicsParams, CliError> {
        PhysicsParams::new(self.physics.d, self.physics.s, self.physics.alpha).map_err(CliError::from)
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        Grid::new(self.physics.d, self.grid.n, self.grid.half_length).map_err(CliError::from)
    }

    /// Every violated precondition, in section order; empty when the config is usable.
    pub fn violations(&self, purpose: Purpose) -> Vec<String> {
        let mut bad = Vec::new();
        let Physics { d, s, alpha } = self.physics;
        if !(1..=3).contains(&d) {
            bad.push(format!("physics.d must be 1, 2 or 3, got {d}"));
        }
        if !(s > 0.5 && s < 1.0) {
            bad.push(format!("physics.s must lie in (1/2, 1), got {s}"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            bad.push(format!("physics.alpha must be positive, got {alpha}"));
        }
        let class = self.params().ok().map(|p| p.class());

        let GridSection { n, half_length } = self.grid;
        if n < 16 || !n.is_power_of_two() {
            bad.push(format!("grid.n must be a power of two >= 16, got {n}"));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            bad.push(format!("grid.L must be positive, got {half_length}"));
        }

        let TimeSection { dt, t_end, sample_every } = self.time;
        if !(dt > 0.0 && dt <= MAX_DT) {
            bad.push(format!("time.dt must lie in (0, {MAX_DT}], got {dt}"));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            bad.push(format!("time.t_end must be positive, got {t_end}"));
        }
        if sample_every == 0 {
            bad.push("time.sample_every must be >= 1".into());
        }

        match &self.initial {
            Initial::Gaussian { amplitude, width, center, carrier } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    bad.push(format!("initial.amplitude must be positive, got {amplitude}"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    bad.push(format!("initial.width must be positive, got {width}"));
                }
                if !center.is_empty() && center.len() != d {
                    bad.push(format!("initial.center needs {d} entries, got {}", center.len()));
                }
                if center.iter().any(|c| !(c.is_finite() && c.abs() < half_length)) {
                    bad.push(format!("initial.center must lie inside the box (|c| < {half_length})"));
                }
                if !carrier.is_finite() {
                    bad.push("initial.carrier must be finite".into());
                }
            }
            Initial::GroundStateMultiple { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    bad.push(format!("initial.c must be positive, got {c}"));
                }
                if let Some(class) = class {
                    if !class.energy_subcritical() {
                        bad.push(format!("initial.ground_state_multiple needs an energy-subcritical power, got {class:?}"));
                    }
                }
            }
            Initial::Snapshot { path } => {
                if !path.is_file() {
                    bad.push(format!("initial.path {} is not a readable file", path.display()));
                }
            }
        }

        let MonitorSection { radii, q_exponent } = &self.monitors;
        if radii.is_empty() {
            bad.push("monitors.radii must list at least one radius".into());
        }
        for r in radii {
            if !(*r > 1.0 && 2.0 * r < half_length) {
                bad.push(format!("monitors.radii entry {r} must satisfy 1 < R < L/2 = {}", half_length / 2.0));
            }
        }
        if !(q_exponent.is_finite() && *q_exponent > alpha + 2.0) {
            bad.push(format!("monitors.q_exponent must exceed alpha + 2 = {}, got {q_exponent}", alpha + 2.0));
        }

        if self.outputs.directory.as_os_str().is_empty() {
            bad.push("outputs.directory must not be empty".into());
        }

        if purpose == Purpose::GroundState {
            if let Some(class) = class {
                if !(class.energy_subcritical() || class == Criticality::EnergyCritical) {
                    bad.push(format!("ground-state needs an energy-subcritical or energy-critical power, got {class:?}"));
                }
            }
        }
        if purpose == Purpose::Sweep {
            match &self.sweep {
                None => bad.push("sweep needs a [sweep] section".into()),
                Some(sw) => {
                    if sw.axes.is_empty() {
                        bad.push("sweep.axes must name at least one key".into());
                    }
                    for (key, values) in &sw.axes {
                        if !SWEEP_KEYS.contains(&key.as_str()) {
                            bad.push(format!("sweep.axes key {key:?} is not one of {SWEEP_KEYS:?}"));
                        }
                        if values.is_empty() {
                            bad.push(format!("sweep.axes.{key} has no values"));
                        }
                        if values.iter().any(|v| v.as_float().or(v.as_integer().map(|i| i as f64)).is_none()) {
                            bad.push(format!("sweep.axes.{key} must hold numbers"));
                        }
                    }
                }
            }
        }
        bad
    }

    pub fn validate(&self, purpose: Purpose) -> Result<(), CliError> {
        let bad = self.violations(purpose);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::validation(bad))
        }
    }

    /// The initial state; `ground_state` supplies `Q` for `ground_state_multiple`.
    pub fn initial_field(
        &self,
        grid: &Arc<Grid>,
        ground_state: impl FnOnce() -> Result<Field, CliError>,
    ) -> Result<Field, CliError> {
        match &self.initial {
            Initial::Gaussian { amplitude, width, center, carrier } => {
                let (a, w, k) = (*amplitude, *width, *carrier);
                Ok(Field::from_fn(Arc::clone(grid), |x| {
                    let r2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(i, xi)| (xi - center.get(i).copied().unwrap_or(0.0)).powi(2))
                        .sum();
                    Complex64::from_polar(a * (-r2 / (w * w)).exp(), k * x[0])
                }))
            }
            Initial::GroundStateMultiple { c } => Ok(ground_state()?.scaled(*c)),
            Initial::Snapshot { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
                let (field, s, alpha) = read_snapshot(std::io::BufReader::new(file))?;
                let mut bad = Vec::new();
                if !field.grid().same_shape(grid) {
                    let g = field.grid();
                    bad.push(format!(
                        "snapshot grid (d = {}, n = {}, L = {}) differs from the configured grid",
                        g.dim(),
                        g.points_per_dim(),
                        g.half_length()
                    ));
                }
                if s != self.physics.s || alpha != self.physics.alpha {
                    bad.push(format!("snapshot was written for s = {s}, alpha = {alpha}"));
                }
                if bad.is_empty() {
                    Ok(field)
                } else {
                    Err(CliError::validation(bad))
                }
            }
        }
    }

    /// Copy with `key` (dotted) set to `value`, going through the TOML tree so that any
    /// numeric field can be swept.
    pub fn with_value(&self, key: &str, value: &toml::Value) -> Result<Self, CliError> {
        let mut tree = toml::Value::try_from(self).map_err(|e| CliError::config(e.to_string()))?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .get_mut(*part)
                .ok_or_else(|| CliError::config(format!("unknown sweep key {key}")))?;
        }
        let slot = node
            .get_mut(parts[parts.len() - 1])
            .ok_or_else(|| CliError::config(format!("sweep key {key} is not set in the base config")))?;
        *slot = match (&*slot, value) {
            (toml::Value::Integer(_), toml::Value::Float(f)) if f.fract() == 0.0 => toml::Value::Integer(*f as i64),
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
            _ => value.clone(),
        };
        tree.try_into().map_err(|e: toml::de::Error| CliError::config(e.to_string()))
    }
}

pub const SWEEP_KEYS: &[&str] = &[
    "physics.d",
    "physics.s",
    "physics.alpha",
    "grid.n",
    "grid.L",
    "time.dt",
    "time.t_end",
    "time.sample_every",
    "initial.amplitude",
    "initial.width",
    "initial.carrier",
    "initial.c",
    "monitors.q_exponent",
    "seed",
];
