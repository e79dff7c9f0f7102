use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use layered_noma::analytic::{self, rational_to_f64, AccessModel};
use layered_noma::model::{avg_power_random_noma, avg_power_ub_hybrid, default_inv_gain_expectation, to_dbm};
use layered_noma::optimizer::{hybrid_level_cap, jacnls, optimize_at_levels, random_noma_level_cap};
use layered_noma::report::{
    csv_writer, emit_figure_data, exit_code, expected_served, run_experiment, timestamp, write_row,
    ExperimentConfig, Figure,
};
use layered_noma::simulator::{
    exhaustive_connection_prob_exact, simulate_throughput, simulate_throughput_traced, Placement, RngSpec,
    SchemeConfig, SchemeKind, ThroughputRun,
};
use layered_noma::{Error, Result};

/// Layered grant-free NOMA access: closed forms, simulation, optimization.
#[derive(Debug, Parser)]
#[command(name = "layered-noma", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML). Defaults to the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulated slots per run.
    #[arg(long, global = true)]
    slots: Option<u64>,
    /// Step of the p_E search grid.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true, env = "LAYERED_NOMA_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form connection probability, throughput, delay and power.
    Analytic {
        /// Backlogged devices (default: num_devices of the scenario).
        #[arg(long)]
        devices: Option<u64>,
        /// Power levels (default: largest level count within the power budget).
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        p_e: f64,
    },
    /// Monte Carlo throughput of one scheme.
    Simulate {
        #[arg(long, default_value = "hybrid-layered")]
        scheme: SchemeKind,
        #[arg(long)]
        devices: Option<u64>,
        #[arg(long)]
        levels: Option<u32>,
        /// Enables access barring with this pass probability.
        #[arg(long)]
        p_e: Option<f64>,
        #[arg(long)]
        placement: Option<Placement>,
        /// Write per-slot, per-level counts to this CSV file.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Joint barring and level selection.
    Optimize {
        #[arg(long)]
        devices: Option<u64>,
        /// Fix the level count instead of taking the power-budget cap.
        #[arg(long)]
        levels: Option<u32>,
    },
    /// Write the data set of a preset figure (fig3, fig4a, fig4b, fig4c, fig5).
    Figure { id: String },
    /// Exhaustive small-instance check of the closed form.
    Oracle {
        #[arg(long, default_value_t = 2)]
        subchannels: u32,
        /// Contenders per layer.
        #[arg(long, default_value_t = 2)]
        contenders: u32,
        #[arg(long, default_value_t = 2)]
        levels: u32,
    },
    /// Run the sweep described by the config file.
    Run,
}

fn resolve(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = common.slots {
        cfg.n_slots = n;
    }
    if let Some(g) = common.grid_step {
        cfg.grid_step = g;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(value: serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn default_levels(kind: SchemeKind, cfg: &ExperimentConfig) -> Result<u32> {
    let m = cfg.system.num_subchannels()?;
    Ok(match kind {
        SchemeKind::HybridLayered => hybrid_level_cap(m, &cfg.system)?.l_max,
        SchemeKind::RandomNoma => random_noma_level_cap(&cfg.system)?.l_max,
        _ => 1,
    })
}

fn cmd_analytic(cfg: &ExperimentConfig, devices: Option<u64>, levels: Option<u32>, p_e: f64) -> Result<()> {
    let p = &cfg.system;
    let m = p.num_subchannels()?;
    let q = devices.unwrap_or(p.num_devices);
    let levels = levels.map_or_else(|| default_levels(SchemeKind::HybridLayered, cfg), Ok)?;
    let model = AccessModel::from_population(m, q, levels, p_e, p.slot_period_ms)?;
    let conn: Vec<f64> = (1..=levels).map(|l| model.connection_prob(l)).collect::<Result<_>>()?;
    let inv_gain = default_inv_gain_expectation(p);
    let hybrid_cap = hybrid_level_cap(m, p)?;
    let random_cap = random_noma_level_cap(p)?;
    print(json!({
        "generated_at": timestamp(),
        "config": cfg,
        "devices": q,
        "subchannels": m,
        "levels": levels,
        "p_e": p_e,
        "contenders_per_layer": model.contenders_per_layer,
        "connection_prob": conn,
        "layer_throughput": model.layer_throughputs()?,
        "throughput": model.throughput()?,
        "success_prob": model.success_prob()?,
        "access_prob": model.access_prob()?,
        "avg_delay_ms": model.avg_delay().ok(),
        "hybrid_ub_dbm": to_dbm(avg_power_ub_hybrid(p, levels)?)?,
        "random_noma_dbm": to_dbm(avg_power_random_noma(p, levels, inv_gain)?)?,
        "hybrid_l_max": hybrid_cap.l_max,
        "random_noma_l_max": random_cap.l_max,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &ExperimentConfig,
    kind: SchemeKind,
    devices: Option<u64>,
    levels: Option<u32>,
    p_e: Option<f64>,
    placement: Option<Placement>,
    records: Option<PathBuf>,
) -> Result<()> {
    let p = &cfg.system;
    let m = p.num_subchannels()?;
    let q = devices.unwrap_or(p.num_devices);
    let levels = levels.map_or_else(|| default_levels(kind, cfg), Ok)?;
    let cost = cfg.n_slots.saturating_mul(q.max(1));
    if cost > cfg.max_device_slots {
        return Err(Error::Budget(format!(
            "run needs {cost} simulated device-slots, max_device_slots is {}",
            cfg.max_device_slots
        )));
    }
    let scheme = SchemeConfig::new(kind, levels, p_e)?;
    let mut run = ThroughputRun::new(scheme, m, q, cfg.n_slots).with_placement(placement.unwrap_or(cfg.placement));
    run.cell_radius = p.cell_radius;
    let seed = RngSpec::new(cfg.master_seed);
    let est = match &records {
        None => simulate_throughput(&run, seed)?,
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = csv_writer(path, &["slot", "layer", "attempts", "successes", "power_collisions"])?;
            let mut failure = None;
            let est = simulate_throughput_traced(&run, seed, |slot, out| {
                for l in 0..out.attempts_per_layer.len() {
                    let row = [
                        slot.to_string(),
                        (l + 1).to_string(),
                        out.attempts_per_layer[l].to_string(),
                        out.successes_per_layer[l].to_string(),
                        out.collisions_per_layer[l].to_string(),
                    ];
                    if let Err(e) = write_row(&mut w, &row) {
                        failure.get_or_insert(e);
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            w.flush()?;
            est
        }
    };
    let gate = scheme.gate_prob();
    let analytic = match kind {
        SchemeKind::HybridLayered | SchemeKind::GrantFreeOma => {
            Some(analytic::total_throughput(m, q, scheme.num_levels, gate)?)
        }
        SchemeKind::CoordinatedOma => Some(expected_served(m, q, gate)),
        SchemeKind::RandomNoma => None,
    };
    print(json!({
        "generated_at": timestamp(),
        "config": cfg,
        "run": run,
        "throughput_analytic": analytic,
        "estimate": est,
        "records": records,
    }))
}

fn cmd_optimize(cfg: &ExperimentConfig, devices: Option<u64>, levels: Option<u32>) -> Result<()> {
    let p = &cfg.system;
    let m = p.num_subchannels()?;
    let q = devices.unwrap_or(p.num_devices);
    let r = match levels {
        Some(l) => optimize_at_levels(q, m, l, p, cfg.grid_step)?,
        None => jacnls(q, m, p, cfg.grid_step)?,
    };
    print(json!({
        "generated_at": timestamp(),
        "config": cfg,
        "devices": q,
        "subchannels": m,
        "result": r,
    }))
}

fn cmd_oracle(subchannels: u32, contenders: u32, levels: u32) -> Result<()> {
    let exact = exhaustive_connection_prob_exact(subchannels, contenders, levels)?;
    let mut layers = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, r) in exact.iter().enumerate() {
        let l = k as u32 + 1;
        let closed = analytic::connection_prob(subchannels, contenders as f64, l)?;
        let closed_exact = analytic::connection_prob_exact(subchannels, contenders, l)?;
        let value = rational_to_f64(r);
        worst = worst.max((value - closed).abs());
        layers.push(json!({
            "layer": l,
            "enumerated": r.to_string(),
            "enumerated_f64": value,
            "closed_form": closed,
            "closed_form_exact_match": *r == closed_exact,
        }));
    }
    print(json!({
        "subchannels": subchannels,
        "contenders_per_layer": contenders,
        "levels": levels,
        "layers": layers,
        "max_abs_deviation": worst,
    }))
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.common)?;
    match cli.command {
        Command::Analytic { devices, levels, p_e } => cmd_analytic(&cfg, devices, levels, p_e),
        Command::Simulate {
            scheme,
            devices,
            levels,
            p_e,
            placement,
            records,
        } => cmd_simulate(&cfg, scheme, devices, levels, p_e, placement, records),
        Command::Optimize { devices, levels } => cmd_optimize(&cfg, devices, levels),
        Command::Figure { id } => {
            let figure: Figure = id.parse()?;
            let out = emit_figure_data(figure, &cfg)?;
            eprintln!("wrote {} and {}", out.csv_path.display(), out.json_path.display());
            Ok(())
        }
        Command::Oracle {
            subchannels,
            contenders,
            levels,
        } => cmd_oracle(subchannels, contenders, levels),
        Command::Run => {
            if cli.common.config.is_none() {
                return Err(Error::Config("`run` needs --config".into()));
            }
            let out = run_experiment(&cfg)?;
            eprintln!("wrote {} and {}", out.csv_path.display(), out.json_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
