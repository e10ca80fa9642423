//! Phase segmentation and training-pair assembly.

use std::collections::BTreeMap;

use crate::dataset::{
    normalize, pad_tail, resample_linear, soc_from_charge, AlignedPair, CycleSample, Direction,
    NormStats, Parameter, Phase, PhaseProfile,
};
use crate::error::{Error, Result};

/// Sanity window for voltage profiles, a little wider than the cell's
/// 2.7 V cut-off / 4.2 V maximum.
pub const VOLTAGE_SANITY_RANGE: (f64, f64) = (2.0, 4.5);

#[derive(Debug, Clone, Copy)]
pub struct SegmentOptions {
    /// Reference capacity for the charge to state-of-charge conversion.
    pub soc_reference_mah: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        // Kokam SLPB533459H4 nominal capacity.
        SegmentOptions {
            soc_reference_mah: 740.0,
        }
    }
}

/// Split samples into one profile per (cell, cycle, phase, parameter).
///
/// Charge readings are converted to state of charge against the reference
/// capacity, so the emitted profiles cover voltage, soc and temperature.
/// Profiles are returned sorted by (cell, cycle, phase, parameter); order
/// within each profile is file order.
pub fn segment(samples: &[CycleSample], opts: &SegmentOptions) -> Result<Vec<PhaseProfile>> {
    let mut groups: BTreeMap<(String, u32, Phase), [Vec<f64>; 3]> = BTreeMap::new();

    for s in samples {
        let key = (s.cell_id.clone(), s.cycle_index, s.phase);
        let entry = groups.entry(key).or_default();
        entry[0].push(s.voltage_v);
        entry[1].push(soc_from_charge(s.charge_mah, opts.soc_reference_mah)?);
        entry[2].push(s.temperature_c);
    }

    let mut profiles = Vec::with_capacity(groups.len() * 3);
    for ((cell_id, cycle_index, phase), [voltage, soc, temperature]) in groups {
        if voltage.is_empty() {
            return Err(Error::Data(format!(
                "{cell_id} cycle {cycle_index} {phase}: phase present but empty"
            )));
        }
        let (v_lo, v_hi) = VOLTAGE_SANITY_RANGE;
        if let Some(bad) = voltage.iter().find(|v| !(v_lo..=v_hi).contains(*v)) {
            return Err(Error::Data(format!(
                "{cell_id} cycle {cycle_index} {phase}: voltage {bad} outside sanity range [{v_lo}, {v_hi}] V"
            )));
        }
        for (parameter, values) in [
            (Parameter::Voltage, voltage),
            (Parameter::Soc, soc),
            (Parameter::Temperature, temperature),
        ] {
            profiles.push(PhaseProfile {
                parameter,
                cell_id: cell_id.clone(),
                cycle_index,
                phase,
                values,
            });
        }
    }
    profiles.sort_by(|a, b| {
        (&a.cell_id, a.cycle_index, a.phase, a.parameter).cmp(&(
            &b.cell_id,
            b.cycle_index,
            b.phase,
            b.parameter,
        ))
    });
    Ok(profiles)
}

/// Min-max stats for one parameter over a set of profiles. Compute this on
/// the training split only and reuse it everywhere downstream.
pub fn training_stats(profiles: &[PhaseProfile], parameter: Parameter) -> Result<NormStats> {
    NormStats::from_values(
        profiles
            .iter()
            .filter(|p| p.parameter == parameter)
            .flat_map(|p| p.values.iter()),
        parameter,
    )
}

/// Training pairs for both network directions, plus bookkeeping about what
/// could not be paired.
#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub to_discharge: Vec<AlignedPair>,
    pub to_charge: Vec<AlignedPair>,
    /// Cycles whose `ToCharge` pair was dropped for lack of a successor cycle.
    pub skipped_to_charge: usize,
    /// Cycles dropped entirely because one phase was missing.
    pub skipped_incomplete: usize,
}

impl PairSet {
    pub fn pairs_for(&self, direction: Direction) -> &[AlignedPair] {
        match direction {
            Direction::ToCharge => &self.to_charge,
            Direction::ToDischarge => &self.to_discharge,
        }
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = &AlignedPair> {
        self.to_discharge.iter().chain(self.to_charge.iter())
    }
}

struct ProcessedCycle {
    charge: Vec<f64>,
    discharge: Vec<f64>,
}

/// Build fixed-length normalized pairs for one parameter.
///
/// Per cycle, the shorter phase is tail-padded to the longer one, both
/// phases are resampled to `len` and normalized with `stats`. Mapping rule:
/// the DischargeNet pair is (charge of cycle c -> discharge of cycle c); the
/// ChargeNet pair is (discharge of cycle c -> charge of cycle c + 1 of the
/// same cell), which is what lets a chain of hops walk forward through
/// cycle life.
pub fn build_pairs(
    profiles: &[PhaseProfile],
    parameter: Parameter,
    len: usize,
    stats: &NormStats,
) -> Result<PairSet> {
    if len < 2 {
        return Err(Error::InvalidArg(format!("model length {len} too small")));
    }

    // cell -> cycle -> (charge values, discharge values)
    type CellCycles<'a> = BTreeMap<u32, (Option<&'a Vec<f64>>, Option<&'a Vec<f64>>)>;
    let mut cells: BTreeMap<&str, CellCycles> = BTreeMap::new();
    for p in profiles.iter().filter(|p| p.parameter == parameter) {
        let slot = cells
            .entry(p.cell_id.as_str())
            .or_default()
            .entry(p.cycle_index)
            .or_insert((None, None));
        match p.phase {
            Phase::Charge => slot.0 = Some(&p.values),
            Phase::Discharge => slot.1 = Some(&p.values),
        }
    }

    let mut set = PairSet::default();
    for (cell_id, cycles) in &cells {
        let mut processed: BTreeMap<u32, ProcessedCycle> = BTreeMap::new();
        for (&cycle, (charge, discharge)) in cycles {
            let (Some(charge), Some(discharge)) = (charge, discharge) else {
                set.skipped_incomplete += 1;
                continue;
            };
            let raw_len = charge.len().max(discharge.len());
            let charge = pad_tail(charge, raw_len)?;
            let discharge = pad_tail(discharge, raw_len)?;
            processed.insert(
                cycle,
                ProcessedCycle {
                    charge: normalize(&resample_linear(&charge, len)?, stats),
                    discharge: normalize(&resample_linear(&discharge, len)?, stats),
                },
            );
        }

        for (&cycle, current) in &processed {
            set.to_discharge.push(AlignedPair {
                input: current.charge.clone(),
                target: current.discharge.clone(),
                parameter,
                direction: Direction::ToDischarge,
                cell_id: cell_id.to_string(),
                input_cycle: cycle,
                target_cycle: cycle,
            });
            match processed.get(&(cycle + 1)) {
                Some(next) => set.to_charge.push(AlignedPair {
                    input: current.discharge.clone(),
                    target: next.charge.clone(),
                    parameter,
                    direction: Direction::ToCharge,
                    cell_id: cell_id.to_string(),
                    input_cycle: cycle,
                    target_cycle: cycle + 1,
                }),
                None => set.skipped_to_charge += 1,
            }
        }
    }
    Ok(set)
}

/// One profile pushed through the same pad -> resample -> normalize path
/// that training pairs take. Both phases of the cycle must exist, since
/// intra-cycle padding equalizes against the sibling phase. This is how
/// chain seeds are prepared.
pub fn processed_profile(
    profiles: &[PhaseProfile],
    parameter: Parameter,
    cell_id: &str,
    cycle: u32,
    phase: Phase,
    len: usize,
    stats: &NormStats,
) -> Result<Vec<f64>> {
    let find = |ph: Phase| {
        profiles.iter().find(|p| {
            p.parameter == parameter
                && p.cell_id == cell_id
                && p.cycle_index == cycle
                && p.phase == ph
        })
    };
    let charge = find(Phase::Charge).ok_or_else(|| {
        Error::Data(format!(
            "{cell_id} cycle {cycle} has no charge profile for {parameter}"
        ))
    })?;
    let discharge = find(Phase::Discharge).ok_or_else(|| {
        Error::Data(format!(
            "{cell_id} cycle {cycle} has no discharge profile for {parameter}"
        ))
    })?;
    let raw_len = charge.values.len().max(discharge.values.len());
    let wanted = match phase {
        Phase::Charge => &charge.values,
        Phase::Discharge => &discharge.values,
    };
    let padded = pad_tail(wanted, raw_len)?;
    Ok(normalize(&resample_linear(&padded, len)?, stats))
}
