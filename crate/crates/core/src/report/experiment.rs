use std::path::PathBuf;

use serde::Serialize;

use super::config::{ExperimentConfig, SchemeSpec, SweepVariable};
use super::format::{fmt_num, fmt_opt, output_path, timestamp, write_json, Table};
use crate::analytic;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::optimizer::{hybrid_level_cap, optimize_at_levels, random_noma_level_cap};
use crate::simulator::{simulate_throughput, Placement, RngSpec, SchemeConfig, SchemeKind, ThroughputRun};

/// Barring values tried when searching `p_E` by simulation.
const PILOT_STEPS: u32 = 20;
const MIN_PILOT_SLOTS: u64 = 256;

/// Sweep-point inputs after applying the swept variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub q: u64,
    pub m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_e: Option<f64>,
}

impl Point {
    pub fn resolve(params: &SystemParams<f64>, variable: SweepVariable, value: f64) -> Result<Self> {
        let mut p = Point {
            q: params.num_devices,
            m: params.num_subchannels()?,
            levels: None,
            p_e: None,
        };
        match variable {
            SweepVariable::Q => p.q = value as u64,
            SweepVariable::M => p.m = value as u32,
            SweepVariable::L => p.levels = Some(value as u32),
            SweepVariable::PE => p.p_e = Some(value),
        }
        Ok(p)
    }
}

/// How the barring parameter of a scheme was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeSource {
    /// No barring.
    Off,
    Fixed,
    /// Closed-form grid search under the delay budget.
    Optimized,
    /// Best of a coarse simulated grid.
    PilotSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: String,
    pub kind: SchemeKind,
    /// Transmit probability of a backlogged device; 1 without barring.
    pub p_e: f64,
    pub p_e_source: PeSource,
    pub num_levels: u32,
    pub throughput_analytic: Option<f64>,
    pub throughput_mc: f64,
    pub std_error: f64,
    pub ci99: f64,
    /// Per-device success probability per slot.
    pub access_prob: Option<f64>,
    pub avg_delay_ms: Option<f64>,
    pub feasible: bool,
}

/// Shared settings for evaluating schemes.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub params: SystemParams<f64>,
    pub n_slots: u64,
    pub grid_step: f64,
    pub placement: Placement,
    pub seed: RngSpec,
}

impl Evaluator {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Evaluator {
            params: cfg.system.clone(),
            n_slots: cfg.n_slots,
            grid_step: cfg.grid_step,
            placement: cfg.placement,
            seed: RngSpec::new(cfg.master_seed),
        }
    }

    fn pilot_slots(&self) -> u64 {
        (self.n_slots / 10).max(MIN_PILOT_SLOTS).min(self.n_slots)
    }

    /// Simulated device-slots needed for one scheme at one point.
    pub fn cost(&self, spec: &SchemeSpec, point: &Point) -> u64 {
        let per_slot = point.q.max(1);
        let mut slots = self.n_slots;
        if spec.kind == SchemeKind::RandomNoma && spec.eab && spec.p_e.is_none() && point.p_e.is_none() {
            slots = slots.saturating_add(self.pilot_slots() * PILOT_STEPS as u64);
        }
        slots.saturating_mul(per_slot)
    }

    fn stream(&self, point_idx: usize, scheme_idx: usize, pilot: u32) -> RngSpec {
        self.seed
            .with_stream(((point_idx as u64) << 16) | ((scheme_idx as u64 & 0xff) << 8) | pilot as u64)
    }

    fn levels_for(&self, spec: &SchemeSpec, point: &Point) -> Result<u32> {
        if matches!(spec.kind, SchemeKind::GrantFreeOma | SchemeKind::CoordinatedOma) {
            return Ok(1);
        }
        if let Some(l) = point.levels.or(spec.num_levels) {
            return Ok(l);
        }
        let params = self.params.with_num_subchannels(point.m);
        let cap = match spec.kind {
            SchemeKind::HybridLayered => hybrid_level_cap(point.m, &params)?,
            _ => random_noma_level_cap(&params)?,
        };
        Ok(cap.l_max)
    }

    fn mc_run(&self, kind: SchemeKind, levels: u32, p_e: Option<f64>, point: &Point, slots: u64) -> Result<ThroughputRun> {
        let scheme = SchemeConfig::new(kind, levels, p_e)?;
        let mut run = ThroughputRun::new(scheme, point.m, point.q, slots).with_placement(self.placement);
        run.cell_radius = self.params.cell_radius;
        Ok(run)
    }

    fn access_prob(&self, throughput: f64, p_e: f64, q: u64) -> Option<f64> {
        (q > 0).then(|| (throughput / q as f64).min(p_e))
    }

    /// Coarse simulated search for the barring value, preferring values
    /// that meet the delay budget.
    fn pilot_search(&self, levels: u32, point: &Point, point_idx: usize, scheme_idx: usize) -> Result<f64> {
        let slots = self.pilot_slots();
        let target = self.params.min_access_prob();
        let mut best_any: Option<(f64, f64)> = None;
        let mut best_ok: Option<(f64, f64)> = None;
        for i in 1..=PILOT_STEPS {
            let p = i as f64 / PILOT_STEPS as f64;
            let run = self.mc_run(SchemeKind::RandomNoma, levels, Some(p), point, slots)?;
            let t = simulate_throughput(&run, self.stream(point_idx, scheme_idx, i))?.mean;
            if best_any.is_none_or(|(_, bt)| t > bt) {
                best_any = Some((p, t));
            }
            let ok = self.access_prob(t, p, point.q).is_some_and(|pa| pa >= target);
            if ok && best_ok.is_none_or(|(_, bt)| t > bt) {
                best_ok = Some((p, t));
            }
        }
        Ok(best_ok.or(best_any).map_or(1.0, |(p, _)| p))
    }

    /// Analytic throughput where a closed form exists.
    fn analytic(&self, kind: SchemeKind, levels: u32, p_e: f64, point: &Point) -> Result<Option<f64>> {
        Ok(match kind {
            SchemeKind::HybridLayered => Some(analytic::total_throughput(point.m, point.q, levels, p_e)?),
            SchemeKind::GrantFreeOma => Some(analytic::total_throughput(point.m, point.q, 1, p_e)?),
            SchemeKind::CoordinatedOma => Some(expected_served(point.m, point.q, p_e)),
            SchemeKind::RandomNoma => None,
        })
    }

    pub fn evaluate(&self, spec: &SchemeSpec, point: &Point, point_idx: usize, scheme_idx: usize) -> Result<SchemeResult> {
        let levels = self.levels_for(spec, point)?;
        let fixed = if spec.eab { point.p_e.or(spec.p_e) } else { None };
        let (p_e, source) = match (spec.eab, fixed) {
            (false, _) => (1.0, PeSource::Off),
            (true, Some(p)) => (p, PeSource::Fixed),
            (true, None) => match spec.kind {
                SchemeKind::HybridLayered | SchemeKind::GrantFreeOma => {
                    let params = self.params.with_num_subchannels(point.m);
                    let r = optimize_at_levels(point.q, point.m, levels, &params, self.grid_step)?;
                    (r.p_e_star, PeSource::Optimized)
                }
                SchemeKind::RandomNoma => (self.pilot_search(levels, point, point_idx, scheme_idx)?, PeSource::PilotSearch),
                // serving min(M, contenders) never gains from barring
                SchemeKind::CoordinatedOma => (1.0, PeSource::Optimized),
            },
        };
        let run = self.mc_run(spec.kind, levels, spec.eab.then_some(p_e), point, self.n_slots)?;
        let mc = simulate_throughput(&run, self.stream(point_idx, scheme_idx, 0))?;
        let throughput_analytic = self.analytic(spec.kind, levels, p_e, point)?;
        let access_prob = self.access_prob(throughput_analytic.unwrap_or(mc.mean), p_e, point.q);
        let avg_delay_ms = access_prob.map(|pa| analytic::avg_delay(self.params.slot_period_ms, pa).unwrap_or(f64::INFINITY));
        Ok(SchemeResult {
            scheme: spec.name(),
            kind: spec.kind,
            p_e,
            p_e_source: source,
            num_levels: levels,
            throughput_analytic,
            throughput_mc: mc.mean,
            std_error: mc.std_error,
            ci99: mc.ci99_halfwidth,
            access_prob,
            avg_delay_ms,
            feasible: avg_delay_ms.is_some_and(|d| d <= self.params.delay_requirement_ms),
        })
    }
}

/// `E[min(M, X)]` for `X ~ Binomial(Q, p)`: devices served per slot by an
/// orthogonal scheduler.
pub fn expected_served(m: u32, q: u64, p: f64) -> f64 {
    let m = m as u64;
    if p >= 1.0 || q == 0 {
        return q.min(m) as f64;
    }
    if p <= 0.0 {
        return 0.0;
    }
    // E[min(M, X)] = M - Σ_{k<M} (M-k)·P(X = k)
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut ln_binom = 0.0;
    let mut shortfall = 0.0;
    for k in 0..m.min(q + 1) {
        if k > 0 {
            ln_binom += ((q - k + 1) as f64).ln() - (k as f64).ln();
        }
        let pmf = (ln_binom + k as f64 * lp + (q - k) as f64 * lq).exp();
        shortfall += (m - k) as f64 * pmf;
    }
    m as f64 - shortfall
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub point: Point,
    #[serde(flatten)]
    pub result: SchemeResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub table: Table,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

pub const RESULT_HEADER: [&str; 8] = ["Q", "scheme", "p_E", "L", "throughput_analytic", "throughput_mc", "ci99", "feasible"];

/// Total simulated device-slots of `cfg`.
pub fn experiment_cost(cfg: &ExperimentConfig) -> Result<u64> {
    let ev = Evaluator::from_config(cfg);
    let mut total = 0u64;
    for &v in &cfg.sweep.values {
        let point = Point::resolve(&cfg.system, cfg.sweep.variable, v)?;
        for s in &cfg.schemes {
            total = total.saturating_add(ev.cost(s, &point));
        }
    }
    Ok(total)
}

/// Evaluate every scheme at every sweep point without writing files.
pub fn evaluate_experiment(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, Table)> {
    cfg.validate()?;
    let cost = experiment_cost(cfg)?;
    if cost > cfg.max_device_slots {
        return Err(Error::Budget(format!(
            "run needs {cost} simulated device-slots, max_device_slots is {}",
            cfg.max_device_slots
        )));
    }
    let ev = Evaluator::from_config(cfg);
    let by_m = cfg.sweep.variable == SweepVariable::M;
    let mut header: Vec<&str> = RESULT_HEADER.to_vec();
    if by_m {
        header.insert(0, "M");
    }
    let mut table = Table::new(&header);
    let mut rows = Vec::new();
    for (i, &v) in cfg.sweep.values.iter().enumerate() {
        let point = Point::resolve(&cfg.system, cfg.sweep.variable, v)?;
        for (j, spec) in cfg.schemes.iter().enumerate() {
            log::info!("{} = {v}: {}", cfg.sweep.variable, spec.name());
            let r = ev.evaluate(spec, &point, i, j)?;
            let mut line = Vec::with_capacity(header.len());
            if by_m {
                line.push(point.m.to_string());
            }
            line.extend([
                point.q.to_string(),
                r.scheme.clone(),
                fmt_num(r.p_e),
                r.num_levels.to_string(),
                fmt_opt(r.throughput_analytic),
                fmt_num(r.throughput_mc),
                fmt_num(r.ci99),
                r.feasible.to_string(),
            ]);
            table.push(line);
            rows.push(ResultRow {
                sweep_value: v,
                point,
                result: r,
            });
        }
    }
    Ok((rows, table))
}

#[derive(Serialize)]
struct Summary<'a, E: Serialize> {
    name: &'a str,
    generated_at: String,
    config: &'a ExperimentConfig,
    results: &'a [ResultRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<E>,
}

/// Evaluate `cfg` and write `<name>.csv` and `<name>.json` into its output
/// directory. `extra` is attached to the JSON summary.
pub fn run_named<E: Serialize>(
    cfg: &ExperimentConfig,
    name: &str,
    extra: impl FnOnce(&[ResultRow]) -> Option<E>,
) -> Result<ExperimentOutput> {
    let (rows, table) = evaluate_experiment(cfg)?;
    let csv_path = output_path(&cfg.output_dir, &format!("{name}.csv"))?;
    let json_path = cfg.output_dir.join(format!("{name}.json"));
    table.write(&csv_path)?;
    let summary = Summary {
        name,
        generated_at: timestamp(),
        config: cfg,
        results: &rows,
        extra: extra(&rows),
    };
    write_json(&json_path, &summary)?;
    Ok(ExperimentOutput {
        rows,
        table,
        csv_path,
        json_path,
    })
}

/// Run a configured experiment into `experiment.csv` / `experiment.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_named::<()>(cfg, "experiment", |_| None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::config::Sweep;

    fn small(variable: SweepVariable, values: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            sweep: Sweep { variable, values },
            n_slots: 300,
            grid_step: 0.01,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn served_expectation() {
        assert_eq!(expected_served(48, 300, 1.0), 48.0);
        assert_eq!(expected_served(48, 10, 1.0), 10.0);
        // X ~ Bin(2, 1/2), M = 1: 1 - P(X = 0)
        assert!((expected_served(1, 2, 0.5) - 0.75).abs() < 1e-15);
        // M above Q: plain mean
        assert!((expected_served(48, 20, 0.3) - 6.0).abs() < 1e-12);
        assert!((expected_served(48, 300, 0.5) - 48.0).abs() < 1e-9);
    }

    #[test]
    fn q_sweep_rows() {
        let cfg = small(SweepVariable::Q, vec![30.0, 300.0]);
        let (rows, table) = evaluate_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(table.header.join(","), "Q,scheme,p_E,L,throughput_analytic,throughput_mc,ci99,feasible");
        let hybrid = &rows[5].result;
        assert_eq!((hybrid.scheme.as_str(), hybrid.num_levels), ("hybrid", 5));
        assert!(hybrid.feasible);
        assert!((hybrid.throughput_analytic.unwrap() - 63.0).abs() < 0.2);
        let coord = &rows[9].result;
        assert_eq!(coord.throughput_analytic, Some(48.0));
        assert_eq!(coord.throughput_mc, 48.0);
        let random = &rows[6].result;
        assert_eq!(random.p_e_source, PeSource::PilotSearch);
        assert_eq!(random.num_levels, 4);
        assert_eq!(random.throughput_analytic, None);
    }

    #[test]
    fn other_sweeps() {
        let mut cfg = small(SweepVariable::M, vec![12.0, 24.0]);
        cfg.schemes = vec![SchemeSpec::new(SchemeKind::HybridLayered, false)];
        let (rows, table) = evaluate_experiment(&cfg).unwrap();
        assert_eq!(table.header[0], "M");
        assert_eq!(rows[1].point.m, 24);
        cfg.sweep = Sweep { variable: SweepVariable::L, values: vec![2.0] };
        let (rows, _) = evaluate_experiment(&cfg).unwrap();
        assert_eq!(rows[0].result.num_levels, 2);
        cfg.schemes[0].eab = true;
        cfg.sweep = Sweep { variable: SweepVariable::PE, values: vec![0.3] };
        let (rows, _) = evaluate_experiment(&cfg).unwrap();
        assert_eq!((rows[0].result.p_e, rows[0].result.p_e_source), (0.3, PeSource::Fixed));
    }

    #[test]
    fn budget_refused() {
        let cfg = ExperimentConfig {
            max_device_slots: 1000,
            ..small(SweepVariable::Q, vec![300.0])
        };
        assert!(matches!(evaluate_experiment(&cfg), Err(Error::Budget(_))));
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(SweepVariable::Q, vec![100.0]);
        cfg.schemes = vec![SchemeSpec::new(SchemeKind::GrantFreeOma, false)];
        cfg.output_dir = dir.path().to_path_buf();
        let out = run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(&out.csv_path).unwrap();
        assert!(text.starts_with("Q,scheme,"));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.json_path).unwrap()).unwrap();
        assert_eq!(json["config"]["n_slots"], 300);
        assert!(json["generated_at"].as_str().unwrap().ends_with('Z'));
    }
}
