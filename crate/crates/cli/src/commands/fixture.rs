use std::path::PathBuf;

use clap::Args;
use cyclegen_core::{make_fixture, write_csv};

use crate::config::FileConfig;
use crate::{common, CliError};

#[derive(Args)]
pub struct FixtureArgs {
    /// Output CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Number of cells (default 1).
    #[arg(long)]
    pub cells: Option<usize>,
    /// Cycles per cell (default 4).
    #[arg(long)]
    pub cycles: Option<u32>,
    /// Raw samples per discharge phase (default 160).
    #[arg(long)]
    pub length_raw: Option<usize>,
    /// Linear capacity fade per cycle (default 0.0033).
    #[arg(long)]
    pub fade_rate: Option<f64>,
    /// PRNG seed (default 42).
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: FixtureArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = cfg.require_path(args.out, "out")?;
    let cells = cfg.pick(args.cells, "cells", 1)?;
    let cycles = cfg.pick(args.cycles, "cycles", 4)?;
    let length_raw = cfg.pick(args.length_raw, "length-raw", 160)?;
    let fade_rate = cfg.pick(args.fade_rate, "fade-rate", 0.0033)?;
    let seed = cfg.pick(args.seed, "seed", 42)?;

    let samples = make_fixture(cells, cycles, length_raw, seed, fade_rate)?;
    common::write_atomic(&out, &write_csv(&samples, false))?;
    log::info!(
        "fixture: {} rows ({cells} cells x {cycles} cycles) -> {}",
        samples.len(),
        out.display()
    );
    println!("wrote {}", out.display());
    Ok(())
}
