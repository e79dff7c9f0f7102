//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys set the run; `[system]`
//! overrides any of the scenario constants (the rest keep their reference
//! values); `[sweep]` names the swept variable; `[[schemes]]` lists the
//! schemes evaluated at every sweep point.
//!
//! ```toml
//! n_slots = 20000
//! master_seed = 7
//!
//! [system]
//! max_avg_power_dbm = 20.0
//!
//! [sweep]
//! variable = "Q"
//! start = 50
//! stop = 500
//! step = 50
//!
//! [[schemes]]
//! kind = "hybrid-layered"
//! eab = true
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::optimizer::DEFAULT_GRID_STEP;
use crate::simulator::{Placement, SchemeKind};

pub const DEFAULT_SLOTS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "results";
/// Default cap on simulated device-slots (slots × backlogged devices) per run.
pub const DEFAULT_MAX_DEVICE_SLOTS: u64 = 20_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    Q,
    L,
    M,
    #[serde(rename = "p_E")]
    PE,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Q => "Q",
            SweepVariable::L => "L",
            SweepVariable::M => "M",
            SweepVariable::PE => "p_E",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q" => Ok(SweepVariable::Q),
            "L" => Ok(SweepVariable::L),
            "M" => Ok(SweepVariable::M),
            "p_E" => Ok(SweepVariable::PE),
            _ => Err(Error::Config(format!("unknown sweep variable {s:?}"))),
        }
    }
}

/// One scheme evaluated at every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    /// Apply access barring.
    #[serde(default)]
    pub eab: bool,
    /// Fixed barring parameter. Left out with `eab = true`, it is searched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_e: Option<f64>,
    /// Fixed level count. Left out, the power-budget cap is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_levels: Option<u32>,
    /// Name in the output; defaults to the kind, with `-eab` when barred.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, eab: bool) -> Self {
        SchemeSpec {
            kind,
            eab,
            p_e: None,
            num_levels: None,
            label: None,
        }
    }

    pub fn labeled(self, label: &str) -> Self {
        SchemeSpec {
            label: Some(label.to_string()),
            ..self
        }
    }

    pub fn name(&self) -> String {
        match (&self.label, self.eab) {
            (Some(l), _) => l.clone(),
            (None, true) => format!("{}-eab", self.kind),
            (None, false) => self.kind.to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.p_e {
            if !self.eab {
                return Err(Error::Config(format!("{}: p_e given without eab = true", self.name())));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("{}: p_e = {p} outside (0, 1]", self.name())));
            }
        }
        if self.num_levels == Some(0) {
            return Err(Error::Config(format!("{}: num_levels must be at least 1", self.name())));
        }
        Ok(())
    }
}

/// Sweep as written in the file: explicit values or an inclusive range.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: SweepVariable,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn range(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config(format!("sweep range {start}..{stop} step {step} is not usable")));
        }
        let n = ((stop - start) / step + 1e-9).floor();
        let values = if n < 0.0 {
            Vec::new()
        } else {
            (0..=n as u64).map(|i| start + i as f64 * step).collect()
        };
        Ok(Sweep { variable, values })
    }

    fn from_raw(raw: RawSweep) -> Result<Self> {
        let sweep = match (raw.values, raw.start, raw.stop, raw.step) {
            (Some(values), None, None, None) => Sweep {
                variable: raw.variable,
                values,
            },
            (None, Some(start), Some(stop), step) => Sweep::range(raw.variable, start, stop, step.unwrap_or(1.0))?,
            _ => {
                return Err(Error::Config(
                    "sweep needs either `values` or `start` and `stop` (with optional `step`)".into(),
                ))
            }
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config(format!("sweep over {} is empty", self.variable)));
        }
        for &v in &self.values {
            let ok = match self.variable {
                SweepVariable::Q => v >= 0.0 && v.fract() == 0.0,
                SweepVariable::L | SweepVariable::M => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
                SweepVariable::PE => v > 0.0 && v <= 1.0,
            };
            if !ok {
                return Err(Error::Config(format!("sweep value {v} is not a valid {}", self.variable)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_slots: Option<u64>,
    master_seed: Option<u64>,
    grid_step: Option<f64>,
    output_dir: Option<PathBuf>,
    max_device_slots: Option<u64>,
    placement: Option<Placement>,
    system: Option<toml::Table>,
    sweep: Option<RawSweep>,
    schemes: Option<Vec<SchemeSpec>>,
}

/// Fully resolved experiment: every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemParams<f64>,
    pub schemes: Vec<SchemeSpec>,
    pub sweep: Sweep,
    pub n_slots: u64,
    pub master_seed: u64,
    pub grid_step: f64,
    pub output_dir: PathBuf,
    /// Devices placed uniformly in the disk, or in equal numbers per layer.
    pub placement: Placement,
    /// Budget on simulated device-slots; a larger run is refused.
    pub max_device_slots: u64,
}

/// The five schemes compared against each other under load.
pub fn comparison_schemes() -> Vec<SchemeSpec> {
    vec![
        SchemeSpec::new(SchemeKind::HybridLayered, true).labeled("hybrid"),
        SchemeSpec::new(SchemeKind::RandomNoma, true).labeled("random-noma-eab"),
        SchemeSpec::new(SchemeKind::RandomNoma, false).labeled("random-noma"),
        SchemeSpec::new(SchemeKind::GrantFreeOma, false).labeled("grant-free-oma"),
        SchemeSpec::new(SchemeKind::CoordinatedOma, false).labeled("coordinated-oma"),
    ]
}

impl Default for ExperimentConfig {
    /// Reference scenario, the five-scheme comparison, `Q = 50, 100, ..., 500`.
    fn default() -> Self {
        ExperimentConfig {
            system: SystemParams::reference(),
            schemes: comparison_schemes(),
            sweep: Sweep::range(SweepVariable::Q, 50.0, 500.0, 50.0).expect("static range"),
            n_slots: DEFAULT_SLOTS,
            master_seed: DEFAULT_SEED,
            grid_step: DEFAULT_GRID_STEP,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            placement: Placement::default(),
            max_device_slots: DEFAULT_MAX_DEVICE_SLOTS,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = ExperimentConfig::default();
        let system = match raw.system {
            None => base.system,
            Some(overrides) => {
                let mut table = toml::Table::try_from(&base.system).map_err(|e| Error::Config(e.to_string()))?;
                table.extend(overrides);
                table
                    .try_into::<SystemParams<f64>>()
                    .map_err(|e| Error::Config(format!("[system]: {e}")))?
            }
        };
        let cfg = ExperimentConfig {
            system,
            schemes: raw.schemes.unwrap_or(base.schemes),
            sweep: match raw.sweep {
                Some(s) => Sweep::from_raw(s)?,
                None => base.sweep,
            },
            n_slots: raw.n_slots.unwrap_or(base.n_slots),
            master_seed: raw.master_seed.unwrap_or(base.master_seed),
            grid_step: raw.grid_step.unwrap_or(base.grid_step),
            output_dir: raw.output_dir.unwrap_or(base.output_dir),
            placement: raw.placement.unwrap_or(base.placement),
            max_device_slots: raw.max_device_slots.unwrap_or(base.max_device_slots),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.sweep.validate()?;
        if self.n_slots < 1 {
            return Err(Error::Config("n_slots must be at least 1".into()));
        }
        if !(self.grid_step > 0.0 && self.grid_step < 1.0) {
            return Err(Error::Config(format!("grid_step {} outside (0, 1)", self.grid_step)));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes listed".into()));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        Ok(())
    }
}
