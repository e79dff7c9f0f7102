//! Slot-level Monte Carlo engine, the exhaustive small-instance oracle, the
//! access-delay simulator and the transmit-power sampler.

mod delay;
mod oracle;
mod power;
mod rng;
mod scheme;
mod sic;
mod slot;
mod throughput;

pub use delay::{simulate_delay, DelayEstimate, DelayRun};
pub use oracle::{
    enumeration_size, exhaustive_connection_prob, exhaustive_connection_prob_exact, ENUMERATION_BUDGET,
};
pub use power::{simulate_avg_power, Fading, PowerEstimate};
pub use rng::{RngSpec, SimRng};
pub use scheme::{SchemeConfig, SchemeKind};
pub use sic::{decode_row, sic_decode, Occupancy, SubchannelDecode};
pub use slot::{run_slot, Device, SlotEngine, SlotOutcome};
pub use throughput::{
    simulate_throughput, simulate_throughput_traced, Placement, RatioEstimate, ThroughputEstimate,
    ThroughputRun, SLOTS_PER_CHUNK, Z99,
};
