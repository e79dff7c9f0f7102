//! One-command presets for the standard figure data sets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use super::config::{comparison_schemes, ExperimentConfig, Sweep, SweepVariable};
use super::experiment::{run_named, ResultRow};
use super::format::{fmt_num, output_path, timestamp, write_json, Table};
use super::overhead::overhead_report;
use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{avg_power_random_noma, avg_power_ub_hybrid, default_inv_gain_expectation, to_dbm};
use crate::optimizer::{hybrid_level_cap, random_noma_level_cap};
use crate::simulator::{simulate_throughput, Placement, RngSpec, SchemeConfig, SchemeKind, ThroughputRun};

/// Total backlogged devices compared in the per-layer figure.
pub const FIG3_TOTALS: [u64; 2] = [200, 500];
pub const FIG3_LEVELS: u32 = 5;
pub const FIG4A_LEVELS: u32 = 8;
pub const FIG4B_SUBCHANNELS: [u32; 10] = [2, 4, 8, 12, 16, 24, 32, 48, 64, 96];
pub const FIG4C_MAX_SUCCESS: u64 = 500;
/// Load at which the scheme gains are summarized.
pub const FIG5_REFERENCE_Q: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig3, Figure::Fig4a, Figure::Fig4b, Figure::Fig4c, Figure::Fig5];

    pub fn id(&self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig4c => "fig4c",
            Figure::Fig5 => "fig5",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure {s:?}; expected one of fig3, fig4a, fig4b, fig4c, fig5")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub figure: Figure,
    pub table: Table,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

#[derive(Serialize)]
struct FigureSummary<'a, S: Serialize> {
    figure: Figure,
    generated_at: String,
    config: &'a ExperimentConfig,
    summary: S,
}

fn write_figure<S: Serialize>(figure: Figure, cfg: &ExperimentConfig, table: Table, summary: S) -> Result<FigureOutput> {
    let csv_path = output_path(&cfg.output_dir, &format!("{figure}.csv"))?;
    let json_path = cfg.output_dir.join(format!("{figure}.json"));
    table.write(&csv_path)?;
    write_json(
        &json_path,
        &FigureSummary {
            figure,
            generated_at: timestamp(),
            config: cfg,
            summary,
        },
    )?;
    Ok(FigureOutput {
        figure,
        table,
        csv_path,
        json_path,
    })
}

/// Produce the data set for `figure` using the scenario, seed, slot count
/// and output directory of `cfg`.
pub fn emit_figure_data(figure: Figure, cfg: &ExperimentConfig) -> Result<FigureOutput> {
    cfg.validate()?;
    match figure {
        Figure::Fig3 => fig3(cfg),
        Figure::Fig4a => fig4a(cfg),
        Figure::Fig4b => fig4b(cfg),
        Figure::Fig4c => fig4c(cfg),
        Figure::Fig5 => fig5(cfg),
    }
}

#[derive(Serialize)]
struct Fig3Total {
    c_total: u64,
    max_abs_deviation: f64,
    layers_outside_ci99: u32,
}

#[derive(Serialize)]
struct Fig3Summary {
    totals: Vec<Fig3Total>,
    /// Every layer's throughput is lower at the larger total.
    overload_lowers_every_layer: bool,
}

/// Per-layer connection probability and throughput, analytic against
/// simulation, for the hybrid scheme without barring.
fn fig3(cfg: &ExperimentConfig) -> Result<FigureOutput> {
    let m = cfg.system.num_subchannels()?;
    let levels = FIG3_LEVELS;
    let mut table = Table::new(&[
        "C_T",
        "L",
        "layer",
        "C",
        "connection_prob_analytic",
        "connection_prob_mc",
        "ci99",
        "throughput_analytic",
        "throughput_mc",
    ]);
    let mut totals = Vec::new();
    let mut layer_tp: Vec<Vec<f64>> = Vec::new();
    for (i, &c_total) in FIG3_TOTALS.iter().enumerate() {
        let scheme = SchemeConfig::hybrid(levels, None)?;
        // the closed form assumes the same number of contenders in every layer
        let mut run = ThroughputRun::new(scheme, m, c_total, cfg.n_slots).with_placement(Placement::EqualLayers);
        run.cell_radius = cfg.system.cell_radius;
        let est = simulate_throughput(&run, RngSpec::new(cfg.master_seed).with_stream(i as u64))?;
        let c = c_total as f64 / levels as f64;
        let mut dev: f64 = 0.0;
        let mut outside = 0;
        let mut tps = Vec::new();
        for l in 1..=levels {
            let k = l as usize - 1;
            let p = analytic::connection_prob(m, c, l)?;
            let mc = est.per_layer_connection_prob[k];
            let ci = mc.ci99_halfwidth();
            dev = dev.max((mc.value - p).abs());
            if (mc.value - p).abs() > ci {
                outside += 1;
            }
            tps.push(est.per_layer_means[k]);
            table.push(vec![
                c_total.to_string(),
                levels.to_string(),
                l.to_string(),
                fmt_num(c),
                fmt_num(p),
                fmt_num(mc.value),
                fmt_num(ci),
                fmt_num(analytic::layer_throughput(m, c, l)?),
                fmt_num(est.per_layer_means[k]),
            ]);
        }
        layer_tp.push(tps);
        totals.push(Fig3Total {
            c_total,
            max_abs_deviation: dev,
            layers_outside_ci99: outside,
        });
    }
    let overload_lowers_every_layer = layer_tp[1].iter().zip(&layer_tp[0]).all(|(hi, lo)| hi < lo);
    write_figure(
        Figure::Fig3,
        cfg,
        table,
        Fig3Summary {
            totals,
            overload_lowers_every_layer,
        },
    )
}

#[derive(Serialize)]
struct LevelCapSummary {
    l_max: u32,
    uncapped: Option<u32>,
}

#[derive(Serialize)]
struct Fig4aSummary {
    hybrid: LevelCapSummary,
    random_noma: LevelCapSummary,
}

fn fig4a(cfg: &ExperimentConfig) -> Result<FigureOutput> {
    let params = &cfg.system;
    let m = params.num_subchannels()?;
    let inv_gain = default_inv_gain_expectation(params);
    let mut table = Table::new(&["L", "hybrid_ub_dbm", "random_noma_dbm", "p_max_dbm"]);
    for l in 1..=FIG4A_LEVELS {
        table.push(vec![
            l.to_string(),
            fmt_num(to_dbm(avg_power_ub_hybrid(params, l)?)?),
            fmt_num(to_dbm(avg_power_random_noma(params, l, inv_gain)?)?),
            fmt_num(params.max_avg_power_dbm),
        ]);
    }
    let h = hybrid_level_cap(m, params)?;
    let r = random_noma_level_cap(params)?;
    write_figure(
        Figure::Fig4a,
        cfg,
        table,
        Fig4aSummary {
            hybrid: LevelCapSummary {
                l_max: h.l_max,
                uncapped: h.uncapped,
            },
            random_noma: LevelCapSummary {
                l_max: r.l_max,
                uncapped: r.uncapped,
            },
        },
    )
}

#[derive(Serialize)]
struct Fig4bPoint {
    m: u32,
    hybrid_l_max: u32,
}

fn fig4b(cfg: &ExperimentConfig) -> Result<FigureOutput> {
    let base = &cfg.system;
    let inv_gain = default_inv_gain_expectation(base);
    let mut table = Table::new(&["M", "L", "hybrid_ub_dbm", "random_noma_dbm", "p_max_dbm"]);
    let mut caps = Vec::new();
    for m in FIG4B_SUBCHANNELS {
        let params = base.with_num_subchannels(m);
        for l in 1..=base.receiver_max_levels {
            table.push(vec![
                m.to_string(),
                l.to_string(),
                fmt_num(to_dbm(avg_power_ub_hybrid(&params, l)?)?),
                fmt_num(to_dbm(avg_power_random_noma(&params, l, inv_gain)?)?),
                fmt_num(params.max_avg_power_dbm),
            ]);
        }
        caps.push(Fig4bPoint {
            m,
            hybrid_l_max: hybrid_level_cap(m, &params)?.l_max,
        });
    }
    write_figure(Figure::Fig4b, cfg, table, caps)
}

fn fig4c(cfg: &ExperimentConfig) -> Result<FigureOutput> {
    let mut table = Table::new(&["Q_success", "hybrid_bytes", "coordinated_bytes", "ratio"]);
    for q in 1..=FIG4C_MAX_SUCCESS {
        let r = overhead_report(q, &cfg.system)?;
        table.push(vec![
            q.to_string(),
            r.hybrid_bytes.to_string(),
            r.coordinated_bytes.to_string(),
            fmt_num(r.ratio),
        ]);
    }
    let full_band = overhead_report(cfg.system.num_subchannels()? as u64, &cfg.system)?;
    write_figure(Figure::Fig4c, cfg, table, full_band)
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeGain {
    pub scheme: String,
    pub throughput: f64,
    /// `(hybrid / scheme - 1) · 100`.
    pub hybrid_gain_pct: f64,
    /// Published gain for the same comparison, where one exists.
    pub reference_gain_pct: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GainSummary {
    pub q: u64,
    pub hybrid_throughput: f64,
    pub gains: Vec<SchemeGain>,
}

fn reference_gain(scheme: &str) -> Option<f64> {
    match scheme {
        "coordinated-oma" => Some(31.25),
        "random-noma-eab" => Some(46.6),
        "random-noma" => Some(231.6),
        "grant-free-oma" => Some(6200.0),
        _ => None,
    }
}

/// Throughput used for comparisons: the closed form where there is one.
fn headline(r: &ResultRow) -> f64 {
    r.result.throughput_analytic.unwrap_or(r.result.throughput_mc)
}

/// Gains of the hybrid scheme over the others at load `q`.
pub fn gains_at(rows: &[ResultRow], q: u64) -> Option<GainSummary> {
    let at: Vec<&ResultRow> = rows.iter().filter(|r| r.point.q == q).collect();
    let hybrid = at.iter().find(|r| r.result.kind == SchemeKind::HybridLayered)?;
    let h = headline(hybrid);
    let gains = at
        .iter()
        .filter(|r| r.result.kind != SchemeKind::HybridLayered)
        .map(|r| {
            let t = headline(r);
            SchemeGain {
                scheme: r.result.scheme.clone(),
                throughput: t,
                hybrid_gain_pct: (h / t - 1.0) * 100.0,
                reference_gain_pct: reference_gain(&r.result.scheme),
            }
        })
        .collect();
    Some(GainSummary {
        q,
        hybrid_throughput: h,
        gains,
    })
}

/// Five-scheme comparison over `Q = 50, 100, ..., 500`.
pub fn fig5_config(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        schemes: comparison_schemes(),
        sweep: Sweep::range(SweepVariable::Q, 50.0, 500.0, 50.0)?,
        ..cfg.clone()
    })
}

fn fig5(cfg: &ExperimentConfig) -> Result<FigureOutput> {
    let preset = fig5_config(cfg)?;
    let out = run_named(&preset, "fig5", |rows| gains_at(rows, FIG5_REFERENCE_Q))?;
    Ok(FigureOutput {
        figure: Figure::Fig5,
        table: out.table,
        csv_path: out.csv_path,
        json_path: out.json_path,
    })
}
