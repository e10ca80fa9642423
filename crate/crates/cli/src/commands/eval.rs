use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{cycle_trend, evaluate, metrics, Parameter, TrendSlopes};
use serde::Serialize;

use crate::config::{parse_cells, FileConfig};
use crate::{common, CliError};

#[derive(Args)]
pub struct EvalArgs {
    /// ChargeNet model file.
    #[arg(long, value_name = "FILE")]
    pub charge_net: Option<PathBuf>,
    /// DischargeNet model file.
    #[arg(long, value_name = "FILE")]
    pub discharge_net: Option<PathBuf>,
    /// Test CSV.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Battery parameter; must match the models (default: the models').
    #[arg(long)]
    pub param: Option<Parameter>,
    /// Comma-separated cell ids to evaluate (default: all).
    #[arg(long)]
    pub cells: Option<String>,
    /// Keep only cycles up to this index.
    #[arg(long)]
    pub max_cycles: Option<u32>,
    /// SOC reference capacity in mAh (default 740).
    #[arg(long)]
    pub soc_reference: Option<f64>,
    /// Infer phases from charge monotonicity (phase-less CSV schema).
    #[arg(long)]
    pub segment_by_slope: bool,
    /// Expected model sequence length; checked against the model files.
    #[arg(long)]
    pub length: Option<usize>,
    /// Unused; accepted so every command shares the flag.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default .).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct NetSummary {
    aggregate: metrics::AggregateMetrics,
    cycles: usize,
    /// Absent when fewer than two cycles were evaluated.
    trend: Option<TrendSlopes>,
}

#[derive(Serialize)]
struct EvalSummary {
    parameter: Parameter,
    points_per_cycle: usize,
    charge_net: NetSummary,
    discharge_net: NetSummary,
}

pub fn run(args: EvalArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let charge_net = cfg.require_path(args.charge_net, "charge-net")?;
    let discharge_net = cfg.require_path(args.discharge_net, "discharge-net")?;
    let data = cfg.require_path(args.data, "data")?;
    let cells = parse_cells(cfg.pick_opt(args.cells, "cells")?.as_deref());
    let max_cycles = cfg.pick_opt(args.max_cycles, "max-cycles")?;
    let soc_reference = cfg.pick(args.soc_reference, "soc-reference", 740.0)?;
    let segment_by_slope = args.segment_by_slope || cfg.pick(None, "segment-by-slope", false)?;
    let out_dir = cfg
        .pick_path(args.out_dir, "out-dir")?
        .unwrap_or_else(|| PathBuf::from("."));

    let model = common::load_coupled(&charge_net, &discharge_net)?;
    let parameter = model.parameter;
    if let Some(requested) = cfg.pick_opt(args.param, "param")? {
        if requested != parameter {
            return Err(CliError::usage(format!(
                "--param {requested} does not match the models' parameter {parameter}"
            )));
        }
    }
    if let Some(requested) = cfg.pick_opt(args.length, "length")? {
        if requested != model.sequence_len() {
            return Err(CliError::usage(format!(
                "--length {requested} does not match the models' length {}",
                model.sequence_len()
            )));
        }
    }

    let samples = common::filter_samples(
        common::load_samples(&data, segment_by_slope)?,
        cells.as_deref(),
        max_cycles,
    )?;
    let profiles = common::segment_samples(&samples, soc_reference)?;
    let stats = model.norm_stats().output;
    let (pairs, _) =
        common::pairs_with_stats(&profiles, parameter, model.sequence_len(), Some(stats))?;
    let test_pairs: Vec<_> = pairs.all_pairs().cloned().collect();

    let report = evaluate(&model, &test_pairs, &stats)?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    let charge_path = out_dir.join(format!("eval_{parameter}_chargenet.csv"));
    let discharge_path = out_dir.join(format!("eval_{parameter}_dischargenet.csv"));
    common::write_atomic(&charge_path, &metrics::per_cycle_csv(&report.charge_net))?;
    common::write_atomic(
        &discharge_path,
        &metrics::per_cycle_csv(&report.discharge_net),
    )?;

    let summary = EvalSummary {
        parameter,
        points_per_cycle: report.charge_net.points_per_cycle,
        charge_net: NetSummary {
            aggregate: report.charge_net.aggregate,
            cycles: report.charge_net.per_cycle.len(),
            trend: cycle_trend(&report.charge_net).ok(),
        },
        discharge_net: NetSummary {
            aggregate: report.discharge_net.aggregate,
            cycles: report.discharge_net.per_cycle.len(),
            trend: cycle_trend(&report.discharge_net).ok(),
        },
    };
    let summary_path = out_dir.join(format!("eval_{parameter}_summary.json"));
    common::write_atomic(
        &summary_path,
        &serde_json::to_string_pretty(&summary).map_err(|e| CliError::data(e.to_string()))?,
    )?;

    println!(
        "chargenet    mse {} mae {} rmse {}",
        summary.charge_net.aggregate.mse,
        summary.charge_net.aggregate.mae,
        summary.charge_net.aggregate.rmse
    );
    println!(
        "dischargenet mse {} mae {} rmse {}",
        summary.discharge_net.aggregate.mse,
        summary.discharge_net.aggregate.mae,
        summary.discharge_net.aggregate.rmse
    );
    for path in [&charge_path, &discharge_path, &summary_path] {
        println!("wrote {}", path.display());
    }
    Ok(())
}
