//! Distributed layered grant-free NOMA uplink access for massive MTC.
//!
//! Devices in concentric rings of the cell aim at a ladder of received power
//! levels, pick a subchannel on their own and transmit without a grant. The
//! base station resolves each subchannel by successive interference
//! cancellation. This crate provides
//!
//! * [`model`]: scenario parameters, the power ladder, average-power formulas;
//! * [`analytic`]: the closed-form connection probability and throughput;
//! * [`simulator`]: slot-level Monte Carlo, an exhaustive small-instance
//!   oracle, delay and power simulators;
//! * [`optimizer`]: joint barring-parameter and level-count selection;
//! * [`report`]: experiment configuration, figure data and CSV/JSON output.
//!
//! The closed-form modules are generic over [`Scalar`] (`f32`, `f64`); the
//! aliases below fix the usual double-precision instantiation.

// `!(x > 0)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod report;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SystemParams = model::SystemParams<f64>;
pub type SystemParamsF32 = model::SystemParams<f32>;
pub type LayerPlan = model::LayerPlan<f64>;
pub type LayerPlanF32 = model::LayerPlan<f32>;
pub type AccessModel = analytic::AccessModel<f64>;
pub type AccessModelF32 = analytic::AccessModel<f32>;
pub type OptResult = optimizer::OptResult<f64>;
pub type OptResultF32 = optimizer::OptResult<f32>;
