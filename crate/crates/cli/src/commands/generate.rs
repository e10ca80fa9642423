use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{
    export_chain, processed_profile, write_csv, ChainConfig, ChainMeta, ExportOptions, Phase,
    PhysicalBounds, SeedProfile,
};

use crate::commands::train::CalibrationFile;
use crate::config::FileConfig;
use crate::{common, CliError};

#[derive(Args)]
pub struct GenerateArgs {
    /// ChargeNet model file.
    #[arg(long, value_name = "FILE")]
    pub charge_net: Option<PathBuf>,
    /// DischargeNet model file.
    #[arg(long, value_name = "FILE")]
    pub discharge_net: Option<PathBuf>,
    /// Calibration sidecar from `train`. Without it the hop error is
    /// calibrated on all pairs of --data.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    /// CSV holding the seed cycle.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Cell the seed cycle comes from (default: first cell in the file).
    #[arg(long)]
    pub seed_cell: Option<String>,
    /// Seed cycle index (default 1).
    #[arg(long)]
    pub seed_cycle: Option<u32>,
    /// Seed phase: charge | discharge (default discharge).
    #[arg(long)]
    pub seed_phase: Option<Phase>,
    /// Accumulated-error budget (default: unbounded).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Hop limit (default 100, i.e. 50 synthetic cycles).
    #[arg(long)]
    pub max_hops: Option<usize>,
    /// Override the lower physical bound.
    #[arg(long)]
    pub bound_min: Option<f64>,
    /// Override the upper physical bound.
    #[arg(long)]
    pub bound_max: Option<f64>,
    /// SOC reference capacity in mAh (default 740).
    #[arg(long)]
    pub soc_reference: Option<f64>,
    /// Seconds between exported samples (default 10).
    #[arg(long)]
    pub time_step: Option<f64>,
    /// Infer phases from charge monotonicity (phase-less CSV schema).
    #[arg(long)]
    pub segment_by_slope: bool,
    /// Expected battery parameter; checked against the model files.
    #[arg(long)]
    pub param: Option<cyclegen_core::Parameter>,
    /// Expected model sequence length; checked against the model files.
    #[arg(long)]
    pub length: Option<usize>,
    /// Unused; accepted so every command shares the flag.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; the chain metadata lands next to it as `<out>.meta.json`.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: GenerateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let charge_net = cfg.require_path(args.charge_net, "charge-net")?;
    let discharge_net = cfg.require_path(args.discharge_net, "discharge-net")?;
    let calibration = cfg.pick_path(args.calibration, "calibration")?;
    let data = cfg.require_path(args.data, "data")?;
    let seed_cell = cfg.pick_opt(args.seed_cell, "seed-cell")?;
    let seed_cycle = cfg.pick(args.seed_cycle, "seed-cycle", 1)?;
    let seed_phase = cfg.pick(args.seed_phase, "seed-phase", Phase::Discharge)?;
    let threshold = cfg.pick(args.threshold, "threshold", f64::INFINITY)?;
    let max_hops = cfg.pick(args.max_hops, "max-hops", 100)?;
    let soc_reference = cfg.pick(args.soc_reference, "soc-reference", 740.0)?;
    let time_step = cfg.pick(args.time_step, "time-step", 10.0)?;
    let out = cfg.require_path(args.out, "out")?;
    let segment_by_slope = args.segment_by_slope || cfg.pick(None, "segment-by-slope", false)?;

    let mut model = common::load_coupled(&charge_net, &discharge_net)?;
    let parameter = model.parameter;
    let stats = model.norm_stats().output;
    let length = model.sequence_len();
    if let Some(requested) = cfg.pick_opt(args.param, "param")? {
        if requested != parameter {
            return Err(CliError::usage(format!(
                "--param {requested} does not match the models' parameter {parameter}"
            )));
        }
    }
    if let Some(requested) = cfg.pick_opt(args.length, "length")? {
        if requested != length {
            return Err(CliError::usage(format!(
                "--length {requested} does not match the models' length {length}"
            )));
        }
    }

    let samples = common::load_samples(&data, segment_by_slope)?;
    let profiles = common::segment_samples(&samples, soc_reference)?;

    match calibration {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            let file: CalibrationFile =
                serde_json::from_str(&text).map_err(|e| CliError::data(e.to_string()))?;
            if file.parameter != parameter {
                return Err(CliError::data(format!(
                    "calibration is for {}, models are for {parameter}",
                    file.parameter
                )));
            }
            model.calibrated_hop_error = Some(file.calibrated_hop_error);
        }
        None => {
            let (pairs, _) = common::pairs_with_stats(&profiles, parameter, length, Some(stats))?;
            let validation: Vec<_> = pairs.all_pairs().cloned().collect();
            model.calibrate_hop_error(&validation)?;
        }
    }

    let seed_cell = match seed_cell {
        Some(cell) => cell,
        None => {
            let mut cells: Vec<&str> = profiles.iter().map(|p| p.cell_id.as_str()).collect();
            cells.sort();
            cells.dedup();
            cells
                .first()
                .ok_or_else(|| CliError::data("no cells in seed data"))?
                .to_string()
        }
    };
    let seed_values = processed_profile(
        &profiles, parameter, &seed_cell, seed_cycle, seed_phase, length, &stats,
    )?;

    let mut bounds = PhysicalBounds::default_for(parameter, &stats);
    if let Some(min) = cfg.pick_opt(args.bound_min, "bound-min")? {
        bounds.min = min;
    }
    if let Some(max) = cfg.pick_opt(args.bound_max, "bound-max")? {
        bounds.max = max;
    }

    let chain = model.generate_chain(
        SeedProfile {
            values: seed_values,
            phase: seed_phase,
            cell_id: seed_cell,
            cycle_index: seed_cycle,
        },
        &ChainConfig {
            threshold,
            max_hops,
            bounds,
        },
    )?;

    let rows = export_chain(
        &chain,
        &stats,
        &ExportOptions {
            soc_reference_mah: soc_reference,
            time_step_s: time_step,
            ..ExportOptions::default()
        },
    )?;
    common::write_atomic(&out, &write_csv(&rows, true))?;

    let meta = ChainMeta::from_chain(&chain);
    let meta_path = out.with_extension(match out.extension() {
        Some(ext) => format!("{}.meta.json", ext.to_string_lossy()),
        None => "meta.json".to_string(),
    });
    common::write_atomic(
        &meta_path,
        &serde_json::to_string_pretty(&meta).map_err(|e| CliError::data(e.to_string()))?,
    )?;

    println!(
        "{} hops ({:?}), accumulated error {}",
        meta.hops, meta.stop_reason, meta.accumulated_error
    );
    println!("wrote {}", out.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}
