use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{
    model_io, train, Activation, AlignedPair, Architecture, CoupledModel, NormStatsPair, PairSet,
    Parameter, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{parse_cells, FileConfig};
use crate::{common, CliError};

#[derive(Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Battery parameter (default voltage).
    #[arg(long)]
    pub param: Option<Parameter>,
    /// Model sequence length L (default 128).
    #[arg(long)]
    pub length: Option<usize>,
    /// Architecture file from `tune` (overrides --depth/--width).
    #[arg(long, value_name = "FILE")]
    pub arch: Option<PathBuf>,
    /// Weight layers when no --arch file is given (default 2).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Hidden width when no --arch file is given (default 64).
    #[arg(long)]
    pub width: Option<usize>,
    /// Hidden activation (default relu).
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Full-training epochs (default 400).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate (default 0.01).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minibatch size (default 16).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated cell ids to train on (default: all).
    #[arg(long)]
    pub cells: Option<String>,
    /// SOC reference capacity in mAh (default 740).
    #[arg(long)]
    pub soc_reference: Option<f64>,
    /// Fraction of trailing cycles per cell held out to calibrate the
    /// per-hop error (default 0.1; 0 calibrates on the training pairs).
    #[arg(long)]
    pub calibration_fraction: Option<f64>,
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

/// Sidecar consumed by `generate`: the calibrated per-hop error.
#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub parameter: Parameter,
    pub calibrated_hop_error: f64,
    pub validation_pairs: usize,
}

/// Split pairs into (training, calibration) by holding out the trailing
/// `fraction` of complete cycles per cell. Pairs touching a held-out cycle
/// land in the calibration set.
fn holdout_split(
    pairs: &PairSet,
    fraction: f64,
) -> (Vec<AlignedPair>, Vec<AlignedPair>, Vec<AlignedPair>) {
    let mut held: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    if fraction > 0.0 {
        let mut cycles_per_cell: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
        for p in pairs.to_discharge.iter() {
            cycles_per_cell
                .entry(p.cell_id.as_str())
                .or_default()
                .insert(p.target_cycle);
        }
        for (cell, cycles) in cycles_per_cell {
            let k = ((cycles.len() as f64 * fraction).ceil() as usize).min(cycles.len() - 1);
            let held_cycles: BTreeSet<u32> = cycles.iter().rev().take(k).copied().collect();
            held.insert(cell, held_cycles);
        }
    }
    let is_held = |p: &AlignedPair| {
        held.get(p.cell_id.as_str())
            .is_some_and(|c| c.contains(&p.input_cycle) || c.contains(&p.target_cycle))
    };
    let split = |list: &[AlignedPair]| -> (Vec<AlignedPair>, Vec<AlignedPair>) {
        list.iter().cloned().partition(|p| !is_held(p))
    };
    let (train_discharge, cal_discharge) = split(&pairs.to_discharge);
    let (train_charge, cal_charge) = split(&pairs.to_charge);
    let calibration: Vec<AlignedPair> = cal_discharge.into_iter().chain(cal_charge).collect();
    (train_charge, train_discharge, calibration)
}

pub fn run(args: TrainArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let data = cfg.require_path(args.data, "data")?;
    let param = cfg.pick(args.param, "param", Parameter::Voltage)?;
    let length = cfg.pick(args.length, "length", 128)?;
    let arch_file = cfg.pick_path(args.arch, "arch")?;
    let depth = cfg.pick(args.depth, "depth", 2)?;
    let width = cfg.pick(args.width, "width", 64)?;
    let activation = cfg.pick(args.activation, "activation", Activation::Relu)?;
    let epochs = cfg.pick(args.epochs, "epochs", 400)?;
    let lr = cfg.pick(args.lr, "lr", 0.01)?;
    let batch_size = cfg.pick(args.batch_size, "batch-size", 16)?;
    let cells = parse_cells(cfg.pick_opt(args.cells, "cells")?.as_deref());
    let soc_reference = cfg.pick(args.soc_reference, "soc-reference", 740.0)?;
    let calibration_fraction = cfg.pick(args.calibration_fraction, "calibration-fraction", 0.1)?;
    let segment_by_slope = args.segment_by_slope || cfg.pick(None, "segment-by-slope", false)?;
    let seed = cfg.pick(args.seed, "seed", 42)?;
    let out_dir = cfg
        .pick_path(args.out_dir, "out-dir")?
        .unwrap_or_else(|| PathBuf::from("."));
    if !(0.0..1.0).contains(&calibration_fraction) {
        return Err(CliError::usage(format!(
            "--calibration-fraction must be in [0, 1), got {calibration_fraction}"
        )));
    }

    let samples = common::filter_samples(
        common::load_samples(&data, segment_by_slope)?,
        cells.as_deref(),
        None,
    )?;
    let profiles = common::segment_samples(&samples, soc_reference)?;
    let (pairs, stats) = common::pairs_with_stats(&profiles, param, length, None)?;
    let norm = NormStatsPair::symmetric(stats);

    let arch = match arch_file {
        Some(path) => model_io::load_architecture(&path)?,
        None => Architecture::uniform(length, width, depth, length, activation)?,
    };
    if arch.input_dim() != length || arch.output_dim() != length {
        return Err(CliError::usage(format!(
            "architecture maps {} -> {} but --length is {length}",
            arch.input_dim(),
            arch.output_dim()
        )));
    }

    let (train_charge, train_discharge, calibration) = holdout_split(&pairs, calibration_fraction);
    let train_cfg = TrainConfig {
        epochs,
        learning_rate: lr,
        batch_size,
        seed,
        ..TrainConfig::default()
    };

    log::info!(
        "train {param}: {} to_charge pairs, {} to_discharge pairs, {} calibration pairs, arch {:?}",
        train_charge.len(),
        train_discharge.len(),
        calibration.len(),
        arch.widths()
    );
    let charge_report = train(&arch, &train_charge, &train_cfg, &norm)?;
    let discharge_report = train(&arch, &train_discharge, &train_cfg, &norm)?;

    let mut coupled = CoupledModel::new(charge_report.model, discharge_report.model)?;
    let validation = if calibration.is_empty() {
        train_discharge
            .iter()
            .chain(train_charge.iter())
            .cloned()
            .collect()
    } else {
        calibration
    };
    let hop_error = coupled.calibrate_hop_error(&validation)?;

    let charge_path = out_dir.join(format!("chargenet_{param}.json"));
    let discharge_path = out_dir.join(format!("dischargenet_{param}.json"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    model_io::save_model(coupled.charge_net(), &charge_path)?;
    model_io::save_model(coupled.discharge_net(), &discharge_path)?;

    let mut history = String::from("epoch,chargenet_loss,dischargenet_loss\n");
    for (epoch, (c, d)) in charge_report
        .loss_history
        .iter()
        .zip(&discharge_report.loss_history)
        .enumerate()
    {
        history.push_str(&format!("{},{},{}\n", epoch + 1, c, d));
    }
    let history_path = out_dir.join(format!("loss_history_{param}.csv"));
    common::write_atomic(&history_path, &history)?;

    let calibration_path = out_dir.join(format!("calibration_{param}.json"));
    let calibration_file = CalibrationFile {
        parameter: param,
        calibrated_hop_error: hop_error,
        validation_pairs: validation.len(),
    };
    common::write_atomic(
        &calibration_path,
        &serde_json::to_string_pretty(&calibration_file)
            .map_err(|e| CliError::data(e.to_string()))?,
    )?;

    println!(
        "chargenet final loss {}, dischargenet final loss {}, hop error {hop_error}",
        charge_report.loss_history.last().unwrap(),
        discharge_report.loss_history.last().unwrap()
    );
    for path in [
        &charge_path,
        &discharge_path,
        &history_path,
        &calibration_path,
    ] {
        println!("wrote {}", path.display());
    }
    Ok(())
}
