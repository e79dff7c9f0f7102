//! Scenario parameters, the layered power ladder and average-power formulas.

mod layers;
mod params;
mod power;
mod units;

pub use layers::{build_layer_plan, tx_power, LayerPlan, TxPower};
pub use params::SystemParams;
pub use power::{
    avg_power_random_noma, avg_power_ub_hybrid, default_inv_gain_expectation, max_levels,
    LevelCap, MAX_LEVEL_SEARCH,
};
pub use units::{from_db, to_dbm};
