//! Coupled ChargeNet/DischargeNet generation.
//!
//! One network per direction, both trained on the same parameter with the
//! same normalization. A hop feeds a charge profile to the DischargeNet to
//! get the same cycle's discharge profile, or a discharge profile to the
//! ChargeNet to get the next cycle's charge profile; chaining hops walks
//! forward through cycle life, synthesizing a new half-cycle each step.
//!
//! Nothing tells a chain how far its outputs have drifted from ground
//! truth, so drift is budgeted instead: a per-hop error `e` is calibrated
//! as the mean RMSE over held-out pairs, the accumulated error after k hops
//! is modeled as `k * e` (deliberately pessimistic), and generation stops
//! before the budget is exceeded, at the hop limit, or as soon as a
//! denormalized profile leaves its physical bounds.

use serde::{Deserialize, Serialize};

use crate::dataset::{denormalize, AlignedPair, NormStats, Parameter, Phase};
use crate::error::{Error, Result};
use crate::metrics;
use crate::nn::ModelWeights;

/// A ChargeNet/DischargeNet pair for one battery parameter.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    charge_net: ModelWeights,
    discharge_net: ModelWeights,
    pub parameter: Parameter,
    pub calibrated_hop_error: Option<f64>,
}

impl CoupledModel {
    pub fn new(charge_net: ModelWeights, discharge_net: ModelWeights) -> Result<Self> {
        if charge_net.direction != crate::dataset::Direction::ToCharge
            || discharge_net.direction != crate::dataset::Direction::ToDischarge
        {
            return Err(Error::InvalidArg(
                "coupled model needs a to_charge net and a to_discharge net".into(),
            ));
        }
        if charge_net.parameter != discharge_net.parameter {
            return Err(Error::InvalidArg(format!(
                "parameter mismatch: {} vs {}",
                charge_net.parameter, discharge_net.parameter
            )));
        }
        if charge_net.sequence_len() != discharge_net.sequence_len()
            || charge_net.arch.output_dim() != charge_net.sequence_len()
            || discharge_net.arch.output_dim() != discharge_net.sequence_len()
        {
            return Err(Error::InvalidArg(
                "coupled nets must map length-L profiles to length-L profiles".into(),
            ));
        }
        if charge_net.norm_stats != discharge_net.norm_stats {
            return Err(Error::StatsMismatch);
        }
        let parameter = charge_net.parameter;
        Ok(CoupledModel {
            charge_net,
            discharge_net,
            parameter,
            calibrated_hop_error: None,
        })
    }

    pub fn charge_net(&self) -> &ModelWeights {
        &self.charge_net
    }

    pub fn discharge_net(&self) -> &ModelWeights {
        &self.discharge_net
    }

    pub fn sequence_len(&self) -> usize {
        self.charge_net.sequence_len()
    }

    pub fn norm_stats(&self) -> &crate::nn::NormStatsPair {
        &self.charge_net.norm_stats
    }

    /// One generation step. A charge profile yields the discharge profile
    /// of the same cycle; a discharge profile yields the next cycle's
    /// charge profile. Deterministic.
    pub fn predict_hop(&self, profile: &[f64], current_phase: Phase) -> Result<(Vec<f64>, Phase)> {
        if profile.len() != self.sequence_len() {
            return Err(Error::InputShape {
                expected: self.sequence_len(),
                got: profile.len(),
            });
        }
        match current_phase {
            Phase::Charge => Ok((self.discharge_net.forward(profile)?, Phase::Discharge)),
            Phase::Discharge => Ok((self.charge_net.forward(profile)?, Phase::Charge)),
        }
    }

    /// Mean per-hop RMSE (normalized units) over validation pairs, both
    /// directions pooled. The result is stored on the model and drives the
    /// chain stopping rule.
    pub fn calibrate_hop_error(&mut self, validation: &[AlignedPair]) -> Result<f64> {
        if validation.is_empty() {
            return Err(Error::EmptyValidation);
        }
        let mut sum = 0.0;
        for pair in validation {
            let net = match pair.direction {
                crate::dataset::Direction::ToCharge => &self.charge_net,
                crate::dataset::Direction::ToDischarge => &self.discharge_net,
            };
            let prediction = net.forward(&pair.input)?;
            sum += metrics::rmse(&prediction, &pair.target)?;
        }
        let error = sum / validation.len() as f64;
        self.calibrated_hop_error = Some(error);
        Ok(error)
    }
}

/// Inclusive value window a denormalized profile must stay inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBounds {
    pub min: f64,
    pub max: f64,
}

impl PhysicalBounds {
    /// Default guard rails per parameter: the voltage sanity window, a
    /// slightly padded SOC percent range, and the observed temperature
    /// range widened by 5 degrees.
    pub fn default_for(parameter: Parameter, output_stats: &NormStats) -> Self {
        match parameter {
            Parameter::Voltage => PhysicalBounds { min: 2.0, max: 4.5 },
            Parameter::Soc => PhysicalBounds {
                min: -5.0,
                max: 105.0,
            },
            Parameter::Temperature => PhysicalBounds {
                min: output_stats.min - 5.0,
                max: output_stats.max + 5.0,
            },
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.min..=self.max).contains(&value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdExceeded,
    MaxHops,
    BoundViolation,
}

/// Starting profile for a chain: normalized, length L, tagged with where it
/// came from.
#[derive(Debug, Clone)]
pub struct SeedProfile {
    pub values: Vec<f64>,
    pub phase: Phase,
    pub cell_id: String,
    pub cycle_index: u32,
}

/// One generated half-cycle.
#[derive(Debug, Clone)]
pub struct Hop {
    pub phase: Phase,
    pub cycle_index: u32,
    /// Normalized values, length L.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GenerationChain {
    pub seed: SeedProfile,
    pub parameter: Parameter,
    pub hops: Vec<Hop>,
    pub accumulated_error: f64,
    pub stop_reason: StopReason,
    pub calibrated_hop_error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ChainConfig {
    /// Accumulated-error budget; generation stops before `(k+1) * e` would
    /// exceed it.
    pub threshold: f64,
    pub max_hops: usize,
    pub bounds: PhysicalBounds,
}

impl CoupledModel {
    /// Chain hops from a seed profile until the error budget, the hop
    /// limit, or the physical bounds end it. After k hops the accumulated
    /// error is exactly `k * calibrated_hop_error`. A hop that would leave
    /// the bounds is discarded, not emitted.
    pub fn generate_chain(&self, seed: SeedProfile, cfg: &ChainConfig) -> Result<GenerationChain> {
        let hop_error = self.calibrated_hop_error.ok_or(Error::MissingCalibration)?;
        if seed.values.len() != self.sequence_len() {
            return Err(Error::InputShape {
                expected: self.sequence_len(),
                got: seed.values.len(),
            });
        }
        // +infinity is a legitimate "no budget" threshold; NaN is not.
        if cfg.threshold.is_nan() || cfg.threshold < 0.0 {
            return Err(Error::InvalidArg(format!(
                "threshold must be >= 0, got {}",
                cfg.threshold
            )));
        }

        let output_stats = self.norm_stats().output;
        let mut hops: Vec<Hop> = Vec::new();
        let mut current = seed.values.clone();
        let mut phase = seed.phase;
        let mut cycle = seed.cycle_index;
        let stop_reason = loop {
            let k = hops.len();
            if (k + 1) as f64 * hop_error > cfg.threshold {
                break StopReason::ThresholdExceeded;
            }
            if k == cfg.max_hops {
                break StopReason::MaxHops;
            }
            let (next, next_phase) = self.predict_hop(&current, phase)?;
            // A discharge closes its cycle; the following charge opens a new one.
            let next_cycle = match phase {
                Phase::Discharge => cycle + 1,
                Phase::Charge => cycle,
            };
            let physical = denormalize(&next, &output_stats);
            if physical.iter().any(|&v| !cfg.bounds.contains(v)) {
                break StopReason::BoundViolation;
            }
            hops.push(Hop {
                phase: next_phase,
                cycle_index: next_cycle,
                values: next.clone(),
            });
            current = next;
            phase = next_phase;
            cycle = next_cycle;
        };

        Ok(GenerationChain {
            accumulated_error: hops.len() as f64 * hop_error,
            seed,
            parameter: self.parameter,
            hops,
            stop_reason,
            calibrated_hop_error: hop_error,
        })
    }
}

/// Column fillers for the parameters a chain does not generate. The CSV
/// schema carries all three signals; the synthetic file keeps the generated
/// one and pins the others to mid-range constants that re-ingest cleanly.
#[derive(Debug, Clone, Copy)]
pub struct ExportOptions {
    pub soc_reference_mah: f64,
    pub time_step_s: f64,
    pub placeholder_voltage: f64,
    pub placeholder_temperature: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            soc_reference_mah: 740.0,
            time_step_s: 10.0,
            placeholder_voltage: 3.7,
            placeholder_temperature: 40.0,
        }
    }
}

/// Denormalize a chain into CSV-ready synthetic rows. Cycle indices
/// continue from the seed cycle; provenance is marked `synthetic`. The
/// seed itself is not exported, only generated hops.
pub fn export_chain(
    chain: &GenerationChain,
    stats: &NormStats,
    opts: &ExportOptions,
) -> Result<Vec<crate::dataset::CycleSample>> {
    let mut rows = Vec::with_capacity(chain.hops.len() * chain.seed.values.len());
    for hop in &chain.hops {
        let physical = denormalize(&hop.values, stats);
        for (i, &value) in physical.iter().enumerate() {
            let mut voltage = opts.placeholder_voltage;
            let mut temperature = opts.placeholder_temperature;
            let mut charge = 0.0;
            match chain.parameter {
                Parameter::Voltage => voltage = value,
                Parameter::Temperature => temperature = value,
                Parameter::Soc => charge = (value * opts.soc_reference_mah / 100.0).max(0.0),
            }
            rows.push(crate::dataset::CycleSample {
                cell_id: chain.seed.cell_id.clone(),
                cycle_index: hop.cycle_index,
                phase: hop.phase,
                time_s: i as f64 * opts.time_step_s,
                voltage_v: voltage,
                temperature_c: temperature,
                charge_mah: charge,
                provenance: crate::dataset::Provenance::Synthetic,
            });
        }
    }
    Ok(rows)
}

/// Sidecar metadata describing one generation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainMeta {
    pub parameter: Parameter,
    pub seed_cell: String,
    pub seed_cycle: u32,
    pub seed_phase: Phase,
    pub hops: usize,
    pub accumulated_error: f64,
    pub stop_reason: StopReason,
    pub calibrated_hop_error: f64,
}

impl ChainMeta {
    pub fn from_chain(chain: &GenerationChain) -> Self {
        ChainMeta {
            parameter: chain.parameter,
            seed_cell: chain.seed.cell_id.clone(),
            seed_cycle: chain.seed.cycle_index,
            seed_phase: chain.seed.phase,
            hops: chain.hops.len(),
            accumulated_error: chain.accumulated_error,
            stop_reason: chain.stop_reason,
            calibrated_hop_error: chain.calibrated_hop_error,
        }
    }
}
