use rand::Rng;
use serde::Serialize;

use super::rng::{RngSpec, SimRng};
use super::scheme::{SchemeConfig, SchemeKind};
use super::slot::{Device, SlotEngine};
use super::throughput::Placement;
use crate::error::{Error, Result};
use crate::model::{LayerPlan, SystemParams};

/// Access-delay experiment with fast retrial.
///
/// A saturated population of `population` backlogged devices contends every
/// slot. A device that gets through is replaced at once by a fresh one in
/// the same layer, so contention stays stationary. The first `n_tracked`
/// devices created are followed until their first success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayRun {
    pub kind: SchemeKind,
    pub num_levels: u32,
    pub num_subchannels: u32,
    pub population: u64,
    /// Per-slot barring pass probability, in `[0, 1]`.
    pub p_e: f64,
    pub n_tracked: u64,
    pub max_slots: u64,
    pub slot_period_ms: f64,
    /// `UniformDisk` draws one fixed position per device.
    pub placement: Placement,
    pub cell_radius: f64,
}

impl DelayRun {
    pub fn from_params(
        params: &SystemParams<f64>,
        kind: SchemeKind,
        num_levels: u32,
        p_e: f64,
        n_tracked: u64,
        max_slots: u64,
    ) -> Result<Self> {
        Ok(DelayRun {
            kind,
            num_levels,
            num_subchannels: params.num_subchannels()?,
            population: params.num_devices,
            p_e,
            n_tracked,
            max_slots,
            slot_period_ms: params.slot_period_ms,
            placement: Placement::EqualLayers,
            cell_radius: params.cell_radius,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayEstimate {
    /// Mean delay of the served tracked devices, `None` if none was served.
    pub mean_delay_ms: Option<f64>,
    pub std_error_ms: Option<f64>,
    pub mean_slots: Option<f64>,
    pub p50_slots: Option<u64>,
    pub p90_slots: Option<u64>,
    pub p99_slots: Option<u64>,
    pub max_slots_observed: Option<u64>,
    pub tracked: u64,
    pub served: u64,
    pub slots_run: u64,
    /// Fewer than 99% of the tracked devices were served.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
struct Member {
    id: u64,
    arrival: u64,
}

fn summarize(mut delays: Vec<u64>, tracked: u64, slots_run: u64, slot_ms: f64) -> DelayEstimate {
    let served = delays.len() as u64;
    let truncated = (served as f64) < 0.99 * tracked as f64;
    if delays.is_empty() {
        return DelayEstimate {
            mean_delay_ms: None,
            std_error_ms: None,
            mean_slots: None,
            p50_slots: None,
            p90_slots: None,
            p99_slots: None,
            max_slots_observed: None,
            tracked,
            served,
            slots_run,
            truncated,
        };
    }
    delays.sort_unstable();
    let n = delays.len() as f64;
    let mean = delays.iter().sum::<u64>() as f64 / n;
    let var = if delays.len() > 1 {
        delays.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let pct = |q: f64| delays[((q * n).ceil() as usize).clamp(1, delays.len()) - 1];
    DelayEstimate {
        mean_delay_ms: Some(mean * slot_ms),
        std_error_ms: Some((var / n).sqrt() * slot_ms),
        mean_slots: Some(mean),
        p50_slots: Some(pct(0.5)),
        p90_slots: Some(pct(0.9)),
        p99_slots: Some(pct(0.99)),
        max_slots_observed: delays.last().copied(),
        tracked,
        served,
        slots_run,
        truncated,
    }
}

/// Delay from first attempt to first success, in slots times `T_P`.
pub fn simulate_delay(run: &DelayRun, seed: RngSpec) -> Result<DelayEstimate> {
    if !(0.0..=1.0).contains(&run.p_e) {
        return Err(Error::invalid(format!("p_E = {} outside [0, 1]", run.p_e)));
    }
    if run.n_tracked < 1 || run.max_slots < 1 {
        return Err(Error::invalid("need at least one tracked device and one slot"));
    }
    if run.population < 1 {
        return Err(Error::invalid("need a non-empty population"));
    }
    if run.p_e == 0.0 {
        // nobody ever passes the barring draw
        return Ok(summarize(Vec::new(), run.n_tracked, run.max_slots, run.slot_period_ms));
    }
    let scheme = SchemeConfig::new(run.kind, run.num_levels, (run.p_e < 1.0).then_some(run.p_e))?;
    let levels = scheme.num_levels;
    let mut engine = SlotEngine::new(scheme, run.num_subchannels)?;
    let mut rng: SimRng = seed.rng();

    let plan = LayerPlan::new(1.0, run.cell_radius, levels)?;
    let draw_layer = |rng: &mut SimRng, i: u64| -> Result<u32> {
        match run.placement {
            Placement::EqualLayers => Ok((i % levels as u64) as u32 + 1),
            Placement::UniformDisk => {
                let u: f64 = rng.random();
                plan.layer_of(run.cell_radius * u.sqrt())
            }
        }
    };

    let mut devices = Vec::with_capacity(run.population as usize);
    let mut members = Vec::with_capacity(run.population as usize);
    for i in 0..run.population {
        devices.push(Device {
            layer: draw_layer(&mut rng, i)?,
            active: true,
        });
        members.push(Member { id: i, arrival: 0 });
    }
    let mut next_id = run.population;
    let mut delays = Vec::with_capacity(run.n_tracked.min(1 << 24) as usize);
    let mut flags = Vec::new();
    let mut slot = 0;
    while slot < run.max_slots && (delays.len() as u64) < run.n_tracked {
        engine.run(&devices, &mut rng, Some(&mut flags))?;
        for (i, &ok) in flags.iter().enumerate() {
            if !ok {
                continue;
            }
            let m = members[i];
            if m.id < run.n_tracked {
                delays.push(slot - m.arrival + 1);
            }
            // fresh device takes the slot from the next one on
            members[i] = Member {
                id: next_id,
                arrival: slot + 1,
            };
            if run.placement == Placement::UniformDisk {
                devices[i].layer = draw_layer(&mut rng, next_id)?;
            }
            next_id += 1;
        }
        slot += 1;
    }
    Ok(summarize(delays, run.n_tracked, slot, run.slot_period_ms))
}
