use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{denormalize, model_io, Direction, Parameter};

use crate::config::FileConfig;
use crate::svg::{line_chart, Series};
use crate::{common, CliError};

#[derive(Args)]
pub struct PlotArgs {
    /// ChargeNet model file (needed for --direction to_charge).
    #[arg(long, value_name = "FILE")]
    pub charge_net: Option<PathBuf>,
    /// DischargeNet model file (needed for --direction to_discharge).
    #[arg(long, value_name = "FILE")]
    pub discharge_net: Option<PathBuf>,
    /// CSV with the true cycles.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Cell to plot (default: first cell in the file).
    #[arg(long)]
    pub cell: Option<String>,
    /// Cycle whose predicted profile is overlaid (default 1).
    #[arg(long)]
    pub cycle: Option<u32>,
    /// to_discharge | to_charge (default to_discharge).
    #[arg(long)]
    pub direction: Option<Direction>,
    /// SOC reference capacity in mAh (default 740).
    #[arg(long)]
    pub soc_reference: Option<f64>,
    /// Infer phases from charge monotonicity (phase-less CSV schema).
    #[arg(long)]
    pub segment_by_slope: bool,
    /// Expected battery parameter; checked against the model file.
    #[arg(long)]
    pub param: Option<Parameter>,
    /// Expected model sequence length; checked against the model file.
    #[arg(long)]
    pub length: Option<usize>,
    /// Unused; accepted so every command shares the flag.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default .).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

fn unit_label(parameter: Parameter) -> &'static str {
    match parameter {
        Parameter::Voltage => "voltage (V)",
        Parameter::Soc => "state of charge (%)",
        Parameter::Temperature => "temperature (C)",
    }
}

pub fn run(args: PlotArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let data = cfg.require_path(args.data, "data")?;
    let direction = cfg.pick(args.direction, "direction", Direction::ToDischarge)?;
    let model_path = match direction {
        Direction::ToCharge => cfg.require_path(args.charge_net, "charge-net")?,
        Direction::ToDischarge => cfg.require_path(args.discharge_net, "discharge-net")?,
    };
    let cycle = cfg.pick(args.cycle, "cycle", 1)?;
    let soc_reference = cfg.pick(args.soc_reference, "soc-reference", 740.0)?;
    let segment_by_slope = args.segment_by_slope || cfg.pick(None, "segment-by-slope", false)?;
    let out_dir = cfg
        .pick_path(args.out_dir, "out-dir")?
        .unwrap_or_else(|| PathBuf::from("."));

    let net = model_io::load_model(&model_path)?;
    if net.direction != direction {
        return Err(CliError::usage(format!(
            "model {} is a {} net, not {direction}",
            model_path.display(),
            net.direction
        )));
    }
    let parameter = net.parameter;
    let stats = net.norm_stats.output;
    if let Some(requested) = cfg.pick_opt(args.param, "param")? {
        if requested != parameter {
            return Err(CliError::usage(format!(
                "--param {requested} does not match the model's parameter {parameter}"
            )));
        }
    }
    if let Some(requested) = cfg.pick_opt(args.length, "length")? {
        if requested != net.sequence_len() {
            return Err(CliError::usage(format!(
                "--length {requested} does not match the model's length {}",
                net.sequence_len()
            )));
        }
    }

    let samples = common::load_samples(&data, segment_by_slope)?;
    let profiles = common::segment_samples(&samples, soc_reference)?;
    let cell = match cfg.pick_opt(args.cell, "cell")? {
        Some(cell) => cell,
        None => profiles
            .iter()
            .map(|p| p.cell_id.clone())
            .min()
            .ok_or_else(|| CliError::data("no cells in data"))?,
    };

    let (pairs, _) =
        common::pairs_with_stats(&profiles, parameter, net.sequence_len(), Some(stats))?;
    let pair = pairs
        .pairs_for(direction)
        .iter()
        .find(|p| p.cell_id == cell && p.target_cycle == cycle)
        .ok_or_else(|| {
            CliError::data(format!(
                "no {direction} pair targeting {cell} cycle {cycle} (to_charge needs the preceding cycle too)"
            ))
        })?;

    let predicted = denormalize(&net.forward(&pair.input)?, &stats);
    let truth = denormalize(&pair.target, &stats);

    let mut csv = String::from("step,true,predicted\n");
    for (i, (t, p)) in truth.iter().zip(&predicted).enumerate() {
        csv.push_str(&format!("{i},{t},{p}\n"));
    }
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    let base = format!("plot_{parameter}_{direction}_{cell}_cycle{cycle}");
    let csv_path = out_dir.join(format!("{base}.csv"));
    common::write_atomic(&csv_path, &csv)?;

    let title = format!("{cell} cycle {cycle}: {direction} {parameter}");
    let svg = line_chart(
        &title,
        unit_label(parameter),
        &[
            Series {
                label: "true",
                color: "#1f77b4",
                values: &truth,
            },
            Series {
                label: "predicted",
                color: "#d62728",
                values: &predicted,
            },
        ],
    );
    let svg_path = out_dir.join(format!("{base}.svg"));
    common::write_atomic(&svg_path, &svg)?;

    let max_gap = truth
        .iter()
        .zip(&predicted)
        .map(|(t, p)| (t - p).abs())
        .fold(0.0, f64::max);
    println!("max |true - predicted| = {max_gap}");
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}
