use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scalar::Scalar;

/// Signaling cost of one slot in which `q_success` devices get through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadReport {
    pub q_success: u64,
    /// One broadcast of the access parameters, whatever the load.
    pub hybrid_bytes: u64,
    /// A full connection setup per served device.
    pub coordinated_bytes: u64,
    pub ratio: f64,
}

pub fn overhead_report<T: Scalar>(q_success: u64, params: &SystemParams<T>) -> Result<OverheadReport> {
    if q_success < 1 {
        return Err(Error::invalid("overhead needs at least one served device"));
    }
    if params.connection_setup_bytes < 1 {
        return Err(Error::invalid("connection setup cost must be positive"));
    }
    let coordinated_bytes = q_success * params.connection_setup_bytes;
    Ok(OverheadReport {
        q_success,
        hybrid_bytes: params.broadcast_overhead_bytes,
        coordinated_bytes,
        ratio: params.broadcast_overhead_bytes as f64 / coordinated_bytes as f64,
    })
}
