use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uplink access scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Level fixed by the device's ring, strongest subchannel, SIC receiver.
    HybridLayered,
    /// Level drawn uniformly from `1..=L`, random subchannel.
    RandomNoma,
    /// Single level: plain multichannel slotted ALOHA.
    GrantFreeOma,
    /// Base station schedules `min(M, contenders)` devices without collisions.
    CoordinatedOma,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::HybridLayered,
        SchemeKind::RandomNoma,
        SchemeKind::GrantFreeOma,
        SchemeKind::CoordinatedOma,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::HybridLayered => "hybrid-layered",
            SchemeKind::RandomNoma => "random-noma",
            SchemeKind::GrantFreeOma => "grant-free-oma",
            SchemeKind::CoordinatedOma => "coordinated-oma",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scheme kind {s:?}")))
    }
}

/// Scheme plus its access-control and layering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub eab_enabled: bool,
    /// Barring parameter, only read when `eab_enabled`.
    pub p_e: f64,
    /// Number of power levels. Always 1 for the OMA schemes.
    pub num_levels: u32,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, num_levels: u32, p_e: Option<f64>) -> Result<Self> {
        let num_levels = match kind {
            SchemeKind::GrantFreeOma | SchemeKind::CoordinatedOma => 1,
            _ => num_levels,
        };
        let cfg = SchemeConfig {
            kind,
            eab_enabled: p_e.is_some(),
            p_e: p_e.unwrap_or(1.0),
            num_levels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hybrid(num_levels: u32, p_e: Option<f64>) -> Result<Self> {
        Self::new(SchemeKind::HybridLayered, num_levels, p_e)
    }

    pub fn random_noma(num_levels: u32, p_e: Option<f64>) -> Result<Self> {
        Self::new(SchemeKind::RandomNoma, num_levels, p_e)
    }

    pub fn grant_free_oma(p_e: Option<f64>) -> Result<Self> {
        Self::new(SchemeKind::GrantFreeOma, 1, p_e)
    }

    pub fn coordinated_oma(p_e: Option<f64>) -> Result<Self> {
        Self::new(SchemeKind::CoordinatedOma, 1, p_e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_levels < 1 {
            return Err(Error::invalid("a scheme needs at least one power level"));
        }
        if matches!(self.kind, SchemeKind::GrantFreeOma | SchemeKind::CoordinatedOma) && self.num_levels != 1 {
            return Err(Error::invalid(format!("{} uses a single power level", self.kind)));
        }
        if self.eab_enabled && !(self.p_e > 0.0 && self.p_e <= 1.0) {
            return Err(Error::invalid(format!("p_E = {} outside (0, 1]", self.p_e)));
        }
        Ok(())
    }

    /// Probability that a backlogged device transmits in a slot.
    pub fn gate_prob(&self) -> f64 {
        if self.eab_enabled {
            self.p_e
        } else {
            1.0
        }
    }
}
