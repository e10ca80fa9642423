use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{
    model_io, tune, tuner, tuning_slice, Activation, Direction, GridSpec, NormStatsPair, Parameter,
};

use crate::config::{parse_cells, parse_usize_list, FileConfig};
use crate::{common, CliError};

#[derive(Args)]
pub struct TuneArgs {
    /// Training CSV.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Battery parameter: voltage | soc | temperature (default voltage).
    #[arg(long)]
    pub param: Option<Parameter>,
    /// Model sequence length L (default 128).
    #[arg(long)]
    pub length: Option<usize>,
    /// Candidate weight-layer counts (default 2,4,6,8,10).
    #[arg(long)]
    pub depths: Option<String>,
    /// Candidate hidden widths (default 16,32,64,128).
    #[arg(long)]
    pub widths: Option<String>,
    /// Hidden activation: relu | tanh (default relu).
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Cycles in the tuning slice (default 2).
    #[arg(long)]
    pub tuning_cycles: Option<u32>,
    /// Tuning epochs per candidate (default 50).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate (default 0.01).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minibatch size (default 16).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated cell ids to use (default: all).
    #[arg(long)]
    pub cells: Option<String>,
    /// SOC reference capacity in mAh (default 740).
    #[arg(long)]
    pub soc_reference: Option<f64>,
    /// Worker threads for candidate evaluation (default 1).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Infer phases from charge monotonicity (phase-less CSV schema).
    #[arg(long)]
    pub segment_by_slope: bool,
    /// PRNG seed (default 42).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default .).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: TuneArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let data = cfg.require_path(args.data, "data")?;
    let param = cfg.pick(args.param, "param", Parameter::Voltage)?;
    let length = cfg.pick(args.length, "length", 128)?;
    let depths = parse_usize_list(
        &cfg.pick(args.depths, "depths", "2,4,6,8,10".to_string())?,
        "depth",
    )?;
    let widths = parse_usize_list(
        &cfg.pick(args.widths, "widths", "16,32,64,128".to_string())?,
        "width",
    )?;
    let activation = cfg.pick(args.activation, "activation", Activation::Relu)?;
    let tuning_cycles = cfg.pick(args.tuning_cycles, "tuning-cycles", 2)?;
    let epochs = cfg.pick(args.epochs, "epochs", 50)?;
    let lr = cfg.pick(args.lr, "lr", 0.01)?;
    let batch_size = cfg.pick(args.batch_size, "batch-size", 16)?;
    let cells = parse_cells(cfg.pick_opt(args.cells, "cells")?.as_deref());
    let soc_reference = cfg.pick(args.soc_reference, "soc-reference", 740.0)?;
    let jobs = cfg.pick(args.jobs, "jobs", 1)?;
    let segment_by_slope = args.segment_by_slope || cfg.pick(None, "segment-by-slope", false)?;
    let seed = cfg.pick(args.seed, "seed", 42)?;
    let out_dir = cfg
        .pick_path(args.out_dir, "out-dir")?
        .unwrap_or_else(|| PathBuf::from("."));

    let samples = common::filter_samples(
        common::load_samples(&data, segment_by_slope)?,
        cells.as_deref(),
        None,
    )?;
    let profiles = common::segment_samples(&samples, soc_reference)?;
    let (pairs, stats) = common::pairs_with_stats(&profiles, param, length, None)?;

    let spec = GridSpec {
        depths,
        widths,
        activation,
        tuning_epochs: epochs,
        tuning_cycles,
        learning_rate: lr,
        batch_size,
        seed,
    };
    // DischargeNet candidates first; the winner's shape is shared.
    let slice = tuning_slice(&pairs.to_discharge, tuning_cycles);
    log::info!(
        "tune: {} candidates on {} slice pairs ({param}, L={length})",
        spec.depths.len() * spec.widths.len(),
        slice.len()
    );
    let outcome = tune(
        &spec,
        &slice,
        Direction::ToDischarge,
        &NormStatsPair::symmetric(stats),
        jobs,
    )?;

    let ranked_path = out_dir.join(format!("tuning_{param}.csv"));
    common::write_atomic(&ranked_path, &tuner::ranked_csv(&outcome.ranked))?;
    let arch_path = out_dir.join(format!("selected_{param}.json"));
    if let Some(parent) = arch_path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
    }
    model_io::save_architecture(&outcome.selected, &arch_path)?;

    let best = &outcome.ranked[0];
    println!(
        "selected depth {} width {} ({} parameters, final loss {})",
        best.depth, best.width, best.param_count, best.final_loss
    );
    println!("wrote {}", ranked_path.display());
    println!("wrote {}", arch_path.display());
    Ok(())
}
