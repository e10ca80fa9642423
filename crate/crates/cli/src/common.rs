//! Shared pipeline plumbing for the subcommands.

use std::path::Path;

use cyclegen_core::{
    build_pairs, model_io, parse_csv, parse_csv_segment_by_slope, segment, training_stats,
    CoupledModel, CycleSample, NormStats, PairSet, Parameter, PhaseProfile, SegmentOptions,
};

use crate::CliError;

/// Read a cycling CSV. `segment_by_slope` switches to the phase-less
/// schema, inferring each row's phase from charge monotonicity.
pub fn load_samples(path: &Path, segment_by_slope: bool) -> Result<Vec<CycleSample>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    if segment_by_slope {
        Ok(parse_csv_segment_by_slope(reader)?)
    } else {
        Ok(parse_csv(reader)?)
    }
}

/// Keep only the named cells (all when `None`) and cycles up to `max_cycles`.
pub fn filter_samples(
    samples: Vec<CycleSample>,
    cells: Option<&[String]>,
    max_cycles: Option<u32>,
) -> Result<Vec<CycleSample>, CliError> {
    let filtered: Vec<CycleSample> = samples
        .into_iter()
        .filter(|s| cells.is_none_or(|c| c.iter().any(|id| id == &s.cell_id)))
        .filter(|s| max_cycles.is_none_or(|m| s.cycle_index <= m))
        .collect();
    if filtered.is_empty() {
        return Err(CliError::data("no samples left after cell/cycle filtering"));
    }
    Ok(filtered)
}

pub fn segment_samples(
    samples: &[CycleSample],
    soc_reference_mah: f64,
) -> Result<Vec<PhaseProfile>, CliError> {
    Ok(segment(samples, &SegmentOptions { soc_reference_mah })?)
}

/// Build the pair set, computing stats from the profiles unless a trained
/// model's stats are imposed.
pub fn pairs_with_stats(
    profiles: &[PhaseProfile],
    parameter: Parameter,
    len: usize,
    imposed: Option<NormStats>,
) -> Result<(PairSet, NormStats), CliError> {
    let stats = match imposed {
        Some(stats) => stats,
        None => training_stats(profiles, parameter)?,
    };
    let pairs = build_pairs(profiles, parameter, len, &stats)?;
    Ok((pairs, stats))
}

/// Load a ChargeNet/DischargeNet file pair into a coupled model.
pub fn load_coupled(charge: &Path, discharge: &Path) -> Result<CoupledModel, CliError> {
    let charge_net = model_io::load_model(charge)?;
    let discharge_net = model_io::load_model(discharge)?;
    Ok(CoupledModel::new(charge_net, discharge_net)?)
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    Ok(model_io::write_atomic(path, contents.as_bytes())?)
}
