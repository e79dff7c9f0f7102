use serde::{Deserialize, Serialize};

use super::units::from_db;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn default_broadcast_bytes() -> u64 {
    2
}

fn default_setup_bytes() -> u64 {
    220
}

/// Scenario constants for a single cell.
///
/// Key names carry their unit so that configuration files are unambiguous.
/// Distances and powers are normalized (cell radius `1`, antenna constant `1`);
/// the power unit is read as 1 mW when comparing against `max_avg_power_dbm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams<T> {
    pub total_bandwidth_khz: T,
    pub subchannel_bandwidth_khz: T,
    pub target_sinr_db: T,
    pub pathloss_exponent: T,
    pub cell_radius: T,
    pub antenna_constant: T,
    pub slot_period_ms: T,
    pub delay_requirement_ms: T,
    pub max_avg_power_dbm: T,
    pub receiver_max_levels: u32,
    pub num_devices: u64,
    #[serde(default = "default_broadcast_bytes")]
    pub broadcast_overhead_bytes: u64,
    #[serde(default = "default_setup_bytes")]
    pub connection_setup_bytes: u64,
}

impl<T: Scalar> SystemParams<T> {
    /// Narrowband reference scenario: 180 kHz split into 3.75 kHz subchannels
    /// (48 of them), 6 dB target SINR, pathloss exponent 3.8, 0.2 ms slots,
    /// 1 ms delay budget, 18 dBm average power budget, at most 5 levels.
    pub fn reference() -> Self {
        SystemParams {
            total_bandwidth_khz: T::lit(180.0),
            subchannel_bandwidth_khz: T::lit(3.75),
            target_sinr_db: T::lit(6.0),
            pathloss_exponent: T::lit(3.8),
            cell_radius: T::one(),
            antenna_constant: T::one(),
            slot_period_ms: T::lit(0.2),
            delay_requirement_ms: T::one(),
            max_avg_power_dbm: T::lit(18.0),
            receiver_max_levels: 5,
            num_devices: 300,
            broadcast_overhead_bytes: default_broadcast_bytes(),
            connection_setup_bytes: default_setup_bytes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_subchannels()?;
        if m < 2 {
            return Err(Error::Config(format!(
                "need at least 2 subchannels, bandwidth split gives {m}"
            )));
        }
        let checks = [
            (self.pathloss_exponent > T::lit(2.0), "pathloss_exponent must exceed 2"),
            (self.cell_radius > T::zero(), "cell_radius must be positive"),
            (self.antenna_constant > T::zero(), "antenna_constant must be positive"),
            (self.slot_period_ms > T::zero(), "slot_period_ms must be positive"),
            (
                self.slot_period_ms <= self.delay_requirement_ms,
                "slot_period_ms must not exceed delay_requirement_ms",
            ),
            (self.target_sinr_db.is_finite(), "target_sinr_db must be finite"),
            (!self.max_avg_power_dbm.is_nan(), "max_avg_power_dbm must be a number"),
            (self.receiver_max_levels >= 1, "receiver_max_levels must be at least 1"),
            (self.num_devices >= 1, "num_devices must be at least 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).to_string())),
            None => Ok(()),
        }
    }

    /// `M = B_T / B`; the split has to be exact.
    pub fn num_subchannels(&self) -> Result<u32> {
        let ratio = self.total_bandwidth_khz / self.subchannel_bandwidth_khz;
        if !(self.subchannel_bandwidth_khz > T::zero()) || !ratio.is_finite() || ratio < T::one() {
            return Err(Error::Config(format!(
                "bandwidths {} kHz / {} kHz do not give a subchannel count",
                self.total_bandwidth_khz, self.subchannel_bandwidth_khz
            )));
        }
        let rounded = ratio.round();
        if (ratio - rounded).abs() > T::epsilon() * T::lit(8.0) * rounded {
            return Err(Error::Config(format!(
                "total bandwidth {} kHz is not a whole number of {} kHz subchannels",
                self.total_bandwidth_khz, self.subchannel_bandwidth_khz
            )));
        }
        rounded
            .to_u32()
            .ok_or_else(|| Error::Config(format!("subchannel count {rounded} out of range")))
    }

    /// Same scenario with the total bandwidth rescaled to give `m` subchannels.
    pub fn with_num_subchannels(&self, m: u32) -> Self {
        SystemParams {
            total_bandwidth_khz: self.subchannel_bandwidth_khz * T::from_count(m as u64),
            ..self.clone()
        }
    }

    /// Linear target SINR.
    pub fn target_sinr(&self) -> T {
        from_db(self.target_sinr_db)
    }

    /// Linear average power budget (normalized units).
    pub fn max_avg_power(&self) -> T {
        from_db(self.max_avg_power_dbm)
    }

    /// `T_P / D_req`: the smallest access probability that meets the delay budget.
    pub fn min_access_prob(&self) -> T {
        self.slot_period_ms / self.delay_requirement_ms
    }

    pub fn cast<U: Scalar>(&self) -> SystemParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        SystemParams {
            total_bandwidth_khz: c(self.total_bandwidth_khz),
            subchannel_bandwidth_khz: c(self.subchannel_bandwidth_khz),
            target_sinr_db: c(self.target_sinr_db),
            pathloss_exponent: c(self.pathloss_exponent),
            cell_radius: c(self.cell_radius),
            antenna_constant: c(self.antenna_constant),
            slot_period_ms: c(self.slot_period_ms),
            delay_requirement_ms: c(self.delay_requirement_ms),
            max_avg_power_dbm: c(self.max_avg_power_dbm),
            receiver_max_levels: self.receiver_max_levels,
            num_devices: self.num_devices,
            broadcast_overhead_bytes: self.broadcast_overhead_bytes,
            connection_setup_bytes: self.connection_setup_bytes,
        }
    }
}

impl<T: Scalar> Default for SystemParams<T> {
    fn default() -> Self {
        Self::reference()
    }
}
