use rand::seq::SliceRandom;
use rand::Rng;

use super::rng::SimRng;
use super::scheme::{SchemeConfig, SchemeKind};
use super::sic::{tally, Occupancy};
use crate::error::{Error, Result};

/// A device at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Device {
    /// 1-based layer (ring) of the device.
    pub layer: u32,
    /// Whether the device has a packet to send.
    pub active: bool,
}

/// Per-slot counts, indexed by 0-based power level. For the layered scheme
/// the level is the device's layer; the OMA schemes use a single level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotOutcome {
    pub attempts_per_layer: Vec<u32>,
    pub successes_per_layer: Vec<u32>,
    /// Subchannels whose decoding stopped at this level.
    pub collisions_per_layer: Vec<u32>,
    pub power_collision_events: u32,
    pub blocked_by_eab: u32,
}

impl SlotOutcome {
    fn zeroed(levels: usize) -> Self {
        SlotOutcome {
            attempts_per_layer: vec![0; levels],
            successes_per_layer: vec![0; levels],
            collisions_per_layer: vec![0; levels],
            power_collision_events: 0,
            blocked_by_eab: 0,
        }
    }

    pub fn attempts(&self) -> u32 {
        self.attempts_per_layer.iter().sum()
    }

    pub fn successes(&self) -> u32 {
        self.successes_per_layer.iter().sum()
    }
}

/// Reusable per-slot state for one scheme and subchannel count.
#[derive(Debug, Clone)]
pub struct SlotEngine {
    scheme: SchemeConfig,
    num_subchannels: u32,
    occupancy: Occupancy,
    // (device index, subchannel, 0-based level) of every transmitting device
    picks: Vec<(usize, usize, usize)>,
    succ: Vec<u64>,
    coll: Vec<u64>,
}

impl SlotEngine {
    pub fn new(scheme: SchemeConfig, num_subchannels: u32) -> Result<Self> {
        scheme.validate()?;
        if num_subchannels < 1 {
            return Err(Error::invalid("need at least one subchannel"));
        }
        let levels = scheme.num_levels as usize;
        Ok(SlotEngine {
            scheme,
            num_subchannels,
            occupancy: Occupancy::new(num_subchannels as usize, levels),
            picks: Vec::new(),
            succ: vec![0; levels],
            coll: vec![0; levels],
        })
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    /// Resolve one slot. When `decoded` is given it is resized to
    /// `devices.len()` and marks the devices that got through.
    pub fn run(&mut self, devices: &[Device], rng: &mut SimRng, mut decoded: Option<&mut Vec<bool>>) -> Result<SlotOutcome> {
        let levels = self.scheme.num_levels as usize;
        let m = self.num_subchannels as usize;
        let gate = self.scheme.eab_enabled.then_some(self.scheme.p_e);
        let mut out = SlotOutcome::zeroed(levels);
        if let Some(flags) = decoded.as_deref_mut() {
            flags.clear();
            flags.resize(devices.len(), false);
        }

        self.picks.clear();
        for (i, dev) in devices.iter().enumerate() {
            if !dev.active {
                continue;
            }
            if let Some(p) = gate {
                if rng.random::<f64>() >= p {
                    out.blocked_by_eab += 1;
                    continue;
                }
            }
            let level = match self.scheme.kind {
                SchemeKind::HybridLayered => {
                    if dev.layer < 1 || dev.layer as usize > levels {
                        return Err(Error::invalid(format!(
                            "device layer {} outside 1..={levels}",
                            dev.layer
                        )));
                    }
                    dev.layer as usize - 1
                }
                SchemeKind::RandomNoma => rng.random_range(0..levels),
                SchemeKind::GrantFreeOma | SchemeKind::CoordinatedOma => 0,
            };
            let sub = match self.scheme.kind {
                SchemeKind::CoordinatedOma => 0,
                _ => rng.random_range(0..m),
            };
            self.picks.push((i, sub, level));
        }

        if self.scheme.kind == SchemeKind::CoordinatedOma {
            let gated = self.picks.len();
            let served = gated.min(m);
            out.attempts_per_layer[0] = gated as u32;
            out.successes_per_layer[0] = served as u32;
            if let Some(flags) = decoded {
                let (chosen, _) = self.picks.partial_shuffle(rng, served);
                for &(i, _, _) in chosen.iter() {
                    flags[i] = true;
                }
            }
            return Ok(out);
        }

        self.occupancy.clear();
        for &(_, sub, level) in &self.picks {
            self.occupancy.add(sub, level);
            out.attempts_per_layer[level] += 1;
        }
        self.succ.iter_mut().for_each(|x| *x = 0);
        self.coll.iter_mut().for_each(|x| *x = 0);
        tally(&self.occupancy, &mut self.succ, &mut self.coll);
        for l in 0..levels {
            out.successes_per_layer[l] = self.succ[l] as u32;
            out.collisions_per_layer[l] = self.coll[l] as u32;
        }
        out.power_collision_events = out.collisions_per_layer.iter().sum();

        if let Some(flags) = decoded {
            for &(i, sub, level) in &self.picks {
                flags[i] = self.occupancy.is_decoded(sub, level);
            }
        }
        Ok(out)
    }
}

/// Resolve a single slot for `devices` on `num_subchannels` subchannels.
pub fn run_slot(scheme: &SchemeConfig, num_subchannels: u32, devices: &[Device], rng: &mut SimRng) -> Result<SlotOutcome> {
    SlotEngine::new(*scheme, num_subchannels)?.run(devices, rng, None)
}
