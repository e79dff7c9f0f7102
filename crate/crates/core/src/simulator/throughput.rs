use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{RngSpec, SimRng};
use super::scheme::{SchemeConfig, SchemeKind};
use super::slot::{Device, SlotEngine, SlotOutcome};
use crate::error::{Error, Result};
use crate::model::LayerPlan;

/// Slots simulated per independent replication stream.
pub const SLOTS_PER_CHUNK: u64 = 1024;

/// Normal quantile for a two-sided 99% interval.
pub const Z99: f64 = 2.576;

/// How devices are assigned to layers each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Fresh uniform position in the disk every slot; the layer follows
    /// from the ring the device falls in.
    #[default]
    UniformDisk,
    /// Device `i` sits in layer `i mod L + 1`, so layers hold equal counts.
    EqualLayers,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-disk" => Ok(Placement::UniformDisk),
            "equal-layers" => Ok(Placement::EqualLayers),
            _ => Err(Error::invalid(format!("unknown placement {s:?}"))),
        }
    }
}

/// A Monte Carlo throughput experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRun {
    pub scheme: SchemeConfig,
    pub num_subchannels: u32,
    /// Backlogged devices per slot, before barring.
    pub num_devices: u64,
    pub n_slots: u64,
    pub placement: Placement,
    pub cell_radius: f64,
}

impl ThroughputRun {
    pub fn new(scheme: SchemeConfig, num_subchannels: u32, num_devices: u64, n_slots: u64) -> Self {
        ThroughputRun {
            scheme,
            num_subchannels,
            num_devices,
            n_slots,
            placement: Placement::default(),
            cell_radius: 1.0,
        }
    }

    pub fn with_placement(self, placement: Placement) -> Self {
        ThroughputRun { placement, ..self }
    }

    fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.n_slots < 1 {
            return Err(Error::invalid("need at least one slot"));
        }
        if self.num_subchannels < 1 {
            return Err(Error::invalid("need at least one subchannel"));
        }
        if !(self.cell_radius > 0.0) {
            return Err(Error::invalid("cell radius must be positive"));
        }
        Ok(())
    }
}

/// Ratio estimate (successes / attempts) with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl RatioEstimate {
    pub fn ci99_halfwidth(&self) -> f64 {
        Z99 * self.std_error
    }
}

/// Mean decoded devices per slot with its sampling error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci99_halfwidth: f64,
    pub n_slots: u64,
    /// Mean successes per slot at each level.
    pub per_layer_means: Vec<f64>,
    /// Mean transmissions per slot at each level.
    pub per_layer_attempt_means: Vec<f64>,
    pub per_layer_std_errors: Vec<f64>,
    /// Successes / attempts per level.
    pub per_layer_connection_prob: Vec<RatioEstimate>,
}

// Integer sums, so merging is exact and independent of order.
#[derive(Debug, Clone, Default)]
struct Accum {
    n: u64,
    s: u64,
    ss: u128,
    layer_s: Vec<u64>,
    layer_ss: Vec<u128>,
    layer_a: Vec<u64>,
    layer_aa: Vec<u128>,
    layer_sa: Vec<u128>,
}

impl Accum {
    fn new(levels: usize) -> Self {
        Accum {
            layer_s: vec![0; levels],
            layer_ss: vec![0; levels],
            layer_a: vec![0; levels],
            layer_aa: vec![0; levels],
            layer_sa: vec![0; levels],
            ..Default::default()
        }
    }

    fn push(&mut self, o: &SlotOutcome) {
        let total = o.successes() as u64;
        self.n += 1;
        self.s += total;
        self.ss += (total as u128) * (total as u128);
        for l in 0..self.layer_s.len() {
            let s = o.successes_per_layer[l] as u64;
            let a = o.attempts_per_layer[l] as u64;
            self.layer_s[l] += s;
            self.layer_ss[l] += (s as u128) * (s as u128);
            self.layer_a[l] += a;
            self.layer_aa[l] += (a as u128) * (a as u128);
            self.layer_sa[l] += (s as u128) * (a as u128);
        }
    }

    fn merge(mut self, other: &Accum) -> Self {
        self.n += other.n;
        self.s += other.s;
        self.ss += other.ss;
        for l in 0..self.layer_s.len() {
            self.layer_s[l] += other.layer_s[l];
            self.layer_ss[l] += other.layer_ss[l];
            self.layer_a[l] += other.layer_a[l];
            self.layer_aa[l] += other.layer_aa[l];
            self.layer_sa[l] += other.layer_sa[l];
        }
        self
    }

    fn finish(&self) -> ThroughputEstimate {
        let n = self.n as f64;
        let mean_se = |s: u64, ss: u128| {
            let mean = s as f64 / n;
            let var = if self.n > 1 {
                ((ss as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            (mean, (var / n).sqrt())
        };
        let (mean, std_error) = mean_se(self.s, self.ss);
        let levels = self.layer_s.len();
        let mut per_layer_means = Vec::with_capacity(levels);
        let mut per_layer_std_errors = Vec::with_capacity(levels);
        let mut per_layer_attempt_means = Vec::with_capacity(levels);
        let mut per_layer_connection_prob = Vec::with_capacity(levels);
        for l in 0..levels {
            let (m, se) = mean_se(self.layer_s[l], self.layer_ss[l]);
            per_layer_means.push(m);
            per_layer_std_errors.push(se);
            let a_mean = self.layer_a[l] as f64 / n;
            per_layer_attempt_means.push(a_mean);
            per_layer_connection_prob.push(self.ratio(l, a_mean));
        }
        ThroughputEstimate {
            mean,
            std_error,
            ci99_halfwidth: Z99 * std_error,
            n_slots: self.n,
            per_layer_means,
            per_layer_attempt_means,
            per_layer_std_errors,
            per_layer_connection_prob,
        }
    }

    fn ratio(&self, l: usize, a_mean: f64) -> RatioEstimate {
        if self.layer_a[l] == 0 {
            return RatioEstimate {
                value: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let n = self.n as f64;
        let r = self.layer_s[l] as f64 / self.layer_a[l] as f64;
        // variance of the per-slot residual s - r·a
        let ss = self.layer_ss[l] as f64;
        let aa = self.layer_aa[l] as f64;
        let sa = self.layer_sa[l] as f64;
        let resid = (ss - 2.0 * r * sa + r * r * aa).max(0.0);
        let var = if self.n > 1 { resid / (n - 1.0) } else { 0.0 };
        RatioEstimate {
            value: r,
            std_error: (var / n).sqrt() / a_mean,
        }
    }
}

struct ChunkRunner<'a> {
    run: &'a ThroughputRun,
    plan: Option<LayerPlan<f64>>,
}

impl<'a> ChunkRunner<'a> {
    fn new(run: &'a ThroughputRun) -> Result<Self> {
        let plan = match (run.scheme.kind, run.placement) {
            (SchemeKind::HybridLayered, Placement::UniformDisk) => {
                // only the ring boundaries are used
                Some(LayerPlan::new(1.0, run.cell_radius, run.scheme.num_levels)?)
            }
            _ => None,
        };
        Ok(ChunkRunner { run, plan })
    }

    fn chunk_count(&self) -> u64 {
        self.run.n_slots.div_ceil(SLOTS_PER_CHUNK)
    }

    fn place(&self, devices: &mut [Device], rng: &mut SimRng) -> Result<()> {
        if let Some(plan) = &self.plan {
            for d in devices.iter_mut() {
                let u: f64 = rng.random();
                d.layer = plan.layer_of(self.run.cell_radius * u.sqrt())?;
            }
        }
        Ok(())
    }

    fn run_chunk(&self, seed: &RngSpec, k: u64, mut on_slot: impl FnMut(u64, &SlotOutcome)) -> Result<Accum> {
        let levels = self.run.scheme.num_levels;
        let mut rng = seed.substream(k).rng();
        let mut engine = SlotEngine::new(self.run.scheme, self.run.num_subchannels)?;
        let mut devices: Vec<Device> = (0..self.run.num_devices)
            .map(|i| Device {
                layer: (i % levels as u64) as u32 + 1,
                active: true,
            })
            .collect();
        let first = k * SLOTS_PER_CHUNK;
        let last = (first + SLOTS_PER_CHUNK).min(self.run.n_slots);
        let mut acc = Accum::new(levels as usize);
        for slot in first..last {
            self.place(&mut devices, &mut rng)?;
            let out = engine.run(&devices, &mut rng, None)?;
            on_slot(slot, &out);
            acc.push(&out);
        }
        Ok(acc)
    }
}

/// Mean decoded devices per slot over `run.n_slots` slots.
///
/// The run is split into chunks of [`SLOTS_PER_CHUNK`] slots, each on its
/// own substream of `seed`; chunks execute in parallel and are merged by
/// index, so the result depends only on `run` and `seed`.
pub fn simulate_throughput(run: &ThroughputRun, seed: RngSpec) -> Result<ThroughputEstimate> {
    run.validate()?;
    let runner = ChunkRunner::new(run)?;
    let chunks: Vec<Accum> = (0..runner.chunk_count())
        .into_par_iter()
        .map(|k| runner.run_chunk(&seed, k, |_, _| {}))
        .collect::<Result<_>>()?;
    let levels = run.scheme.num_levels as usize;
    Ok(chunks.iter().fold(Accum::new(levels), Accum::merge).finish())
}

/// Sequential variant of [`simulate_throughput`] that also reports every
/// slot in order. Produces the same estimate for the same inputs.
pub fn simulate_throughput_traced(
    run: &ThroughputRun,
    seed: RngSpec,
    mut on_slot: impl FnMut(u64, &SlotOutcome),
) -> Result<ThroughputEstimate> {
    run.validate()?;
    let runner = ChunkRunner::new(run)?;
    let levels = run.scheme.num_levels as usize;
    let mut total = Accum::new(levels);
    for k in 0..runner.chunk_count() {
        let acc = runner.run_chunk(&seed, k, &mut on_slot)?;
        total = total.merge(&acc);
    }
    Ok(total.finish())
}
