//! Cycling-data ingestion and preprocessing.
//!
//! The pipeline goes: CSV rows ([`CycleSample`]) -> per-phase series
//! ([`PhaseProfile`]) -> fixed-length normalized training examples
//! ([`AlignedPair`]). Charge readings are converted to state of charge
//! against a fixed reference capacity, phases within a cycle are equalized
//! by tail-padding, and everything is resampled to the model length before
//! min-max normalization.

mod csv;
mod fixture;
mod pairs;

pub use csv::{
    parse_csv, parse_csv_segment_by_slope, parse_csv_str, write_csv, CSV_HEADER,
    CSV_HEADER_NO_PHASE, CSV_HEADER_WITH_PROVENANCE,
};
pub use fixture::make_fixture;
pub use pairs::{build_pairs, processed_profile, segment, training_stats, PairSet, SegmentOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Battery parameter a profile or model refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Voltage,
    Soc,
    Temperature,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Voltage, Parameter::Soc, Parameter::Temperature];

    pub fn as_str(&self) -> &'static str {
        match self {
            Parameter::Voltage => "voltage",
            Parameter::Soc => "soc",
            Parameter::Temperature => "temperature",
        }
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voltage" => Ok(Parameter::Voltage),
            "soc" => Ok(Parameter::Soc),
            "temperature" => Ok(Parameter::Temperature),
            other => Err(Error::InvalidArg(format!(
                "unknown parameter {other:?} (expected voltage|soc|temperature)"
            ))),
        }
    }
}

/// Half of a cycle: the charging leg or the discharging leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Charge,
    Discharge,
}

impl Phase {
    pub fn opposite(&self) -> Phase {
        match self {
            Phase::Charge => Phase::Discharge,
            Phase::Discharge => Phase::Charge,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Charge => "charge",
            Phase::Discharge => "discharge",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charge" => Ok(Phase::Charge),
            "discharge" => Ok(Phase::Discharge),
            other => Err(Error::InvalidArg(format!(
                "unknown phase {other:?} (expected charge|discharge)"
            ))),
        }
    }
}

/// Which profile a network produces. `ToCharge` is the ChargeNet mapping
/// (a discharge profile in, the next cycle's charge profile out) and
/// `ToDischarge` is the DischargeNet mapping (a charge profile in, the same
/// cycle's discharge profile out).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "charge")]
    ToCharge,
    #[serde(rename = "discharge")]
    ToDischarge,
}

impl Direction {
    /// Phase of the profile this direction produces.
    pub fn output_phase(&self) -> Phase {
        match self {
            Direction::ToCharge => Phase::Charge,
            Direction::ToDischarge => Phase::Discharge,
        }
    }

    /// Phase of the profile this direction consumes.
    pub fn input_phase(&self) -> Phase {
        self.output_phase().opposite()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::ToCharge => "to_charge",
            Direction::ToDischarge => "to_discharge",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "to_charge" => Ok(Direction::ToCharge),
            "to_discharge" => Ok(Direction::ToDischarge),
            other => Err(Error::InvalidArg(format!(
                "unknown direction {other:?} (expected to_charge|to_discharge)"
            ))),
        }
    }
}

/// Whether a row came from a measurement or from a generation chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// One timestamped measurement row of the ingestion CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSample {
    pub cell_id: String,
    pub cycle_index: u32,
    pub phase: Phase,
    pub time_s: f64,
    pub voltage_v: f64,
    pub temperature_c: f64,
    pub charge_mah: f64,
    pub provenance: Provenance,
}

/// One parameter's raw value series over a single phase of a single cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub parameter: Parameter,
    pub cell_id: String,
    pub cycle_index: u32,
    pub phase: Phase,
    pub values: Vec<f64>,
}

/// Min-max normalization statistics, computed over the training split only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
}

impl NormStats {
    pub fn new(min: f64, max: f64, parameter: Parameter) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::DegenerateStats {
                parameter,
                min,
                max,
            });
        }
        Ok(NormStats { min, max })
    }

    pub fn from_values<'a>(
        values: impl IntoIterator<Item = &'a f64>,
        parameter: Parameter,
    ) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        NormStats::new(min, max, parameter)
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize_value(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn denormalize_value(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Fixed-length normalized (input, target) example for one network direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub parameter: Parameter,
    pub direction: Direction,
    pub cell_id: String,
    /// Cycle the input profile came from.
    pub input_cycle: u32,
    /// Cycle the target profile belongs to (same cycle for `ToDischarge`,
    /// the successor cycle for `ToCharge`).
    pub target_cycle: u32,
}

/// State of charge in percent of a fixed reference capacity.
pub fn soc_from_charge(charge_mah: f64, reference_mah: f64) -> Result<f64> {
    if !reference_mah.is_finite() || reference_mah <= 0.0 {
        return Err(Error::InvalidArg(format!(
            "soc reference capacity must be positive, got {reference_mah}"
        )));
    }
    if charge_mah < 0.0 {
        return Err(Error::InvalidArg(format!(
            "charge must be non-negative, got {charge_mah}"
        )));
    }
    Ok(100.0 * charge_mah / reference_mah)
}

/// Extend `values` to `target_len` by repeating the final value.
pub fn pad_tail(values: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArg("cannot pad an empty series".into()));
    }
    if target_len < values.len() {
        return Err(Error::InvalidArg(format!(
            "pad target {target_len} is shorter than the series ({})",
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(target_len);
    out.extend_from_slice(values);
    out.resize(target_len, *values.last().unwrap());
    Ok(out)
}

/// Resample to `len` points by linear interpolation at uniform positions.
/// Endpoints are preserved exactly, and `len == values.len()` is an identity.
pub fn resample_linear(values: &[f64], len: usize) -> Result<Vec<f64>> {
    if values.len() < 2 || len < 2 {
        return Err(Error::InvalidArg(format!(
            "resample needs at least 2 points on both sides (got {} -> {len})",
            values.len()
        )));
    }
    let n = values.len();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let pos = i as f64 * (n - 1) as f64 / (len - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        out.push(values[lo] + (values[hi] - values[lo]) * frac);
    }
    Ok(out)
}

/// Map values into stats' [0, 1] range. Values outside the stats range are
/// preserved (they land outside [0, 1]), never clamped.
pub fn normalize(values: &[f64], stats: &NormStats) -> Vec<f64> {
    values.iter().map(|&v| stats.normalize_value(v)).collect()
}

/// Exact inverse of [`normalize`].
pub fn denormalize(values: &[f64], stats: &NormStats) -> Vec<f64> {
    values.iter().map(|&v| stats.denormalize_value(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soc_reference_values() {
        // 740 mAh is the nominal capacity of the Kokam SLPB533459H4 cell.
        assert_eq!(soc_from_charge(740.0, 740.0).unwrap(), 100.0);
        assert_eq!(soc_from_charge(0.0, 740.0).unwrap(), 0.0);
        assert_eq!(soc_from_charge(370.0, 740.0).unwrap(), 50.0);
    }

    #[test]
    fn soc_rejects_bad_reference() {
        assert!(soc_from_charge(10.0, 0.0).is_err());
        assert!(soc_from_charge(10.0, -1.0).is_err());
        assert!(soc_from_charge(-1.0, 740.0).is_err());
    }

    #[test]
    fn pad_tail_repeats_last_value() {
        assert_eq!(pad_tail(&[3.1, 3.0], 4).unwrap(), vec![3.1, 3.0, 3.0, 3.0]);
        assert_eq!(pad_tail(&[7.0], 1).unwrap(), vec![7.0]);
    }

    #[test]
    fn pad_tail_oxford_shaped_gap() {
        // Discharge runs ~100 steps longer than charge; the charge profile
        // is brought up to the discharge length.
        let charge: Vec<f64> = (0..400).map(|i| 2.7 + 1.5 * i as f64 / 399.0).collect();
        let discharge_len = 500;
        let padded = pad_tail(&charge, discharge_len).unwrap();
        assert_eq!(padded.len(), discharge_len);
        assert_eq!(&padded[..400], &charge[..]);
        assert!(padded[400..].iter().all(|&v| v == charge[399]));
    }

    #[test]
    fn pad_tail_rejects_shrinking() {
        assert!(pad_tail(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn resample_linear_known_values() {
        assert_eq!(
            resample_linear(&[0.0, 1.0], 3).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            resample_linear(&[0.0, 2.0, 4.0, 6.0], 2).unwrap(),
            vec![0.0, 6.0]
        );
    }

    #[test]
    fn resample_linear_identity_when_length_matches() {
        let v = vec![1.0, 4.0, 2.0, 8.0, 5.5];
        assert_eq!(resample_linear(&v, v.len()).unwrap(), v);
    }

    #[test]
    fn resample_rejects_short_input() {
        assert!(resample_linear(&[1.0], 4).is_err());
        assert!(resample_linear(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn normalize_endpoints() {
        let stats = NormStats::new(2.7, 4.2, Parameter::Voltage).unwrap();
        assert_eq!(stats.normalize_value(2.7), 0.0);
        assert_eq!(stats.normalize_value(4.2), 1.0);
    }

    #[test]
    fn normalize_does_not_clamp() {
        let stats = NormStats::new(0.0, 1.0, Parameter::Soc).unwrap();
        assert_eq!(stats.normalize_value(2.0), 2.0);
        assert_eq!(stats.normalize_value(-1.0), -1.0);
    }

    #[test]
    fn degenerate_stats_rejected() {
        assert!(NormStats::new(1.0, 1.0, Parameter::Voltage).is_err());
        assert!(NormStats::new(2.0, 1.0, Parameter::Voltage).is_err());
        assert!(NormStats::new(f64::NAN, 1.0, Parameter::Voltage).is_err());
    }

    proptest! {
        #[test]
        fn normalize_round_trips(values in proptest::collection::vec(-1e4f64..1e4, 1..64),
                                 min in -100.0f64..0.0, span in 0.5f64..200.0) {
            let stats = NormStats::new(min, min + span, Parameter::Voltage).unwrap();
            let back = denormalize(&normalize(&values, &stats), &stats);
            for (a, b) in values.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn pad_tail_preserves_prefix(values in proptest::collection::vec(-10.0f64..10.0, 1..32),
                                     extra in 0usize..32) {
            let out = pad_tail(&values, values.len() + extra).unwrap();
            prop_assert_eq!(&out[..values.len()], &values[..]);
            let last = *values.last().unwrap();
            prop_assert!(out[values.len()..].iter().all(|&v| v == last));
        }

        #[test]
        fn resample_preserves_monotonicity(values in proptest::collection::vec(0.0f64..1.0, 2..40),
                                           len in 2usize..80) {
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let out = resample_linear(&sorted, len).unwrap();
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(out[0], sorted[0]);
            prop_assert_eq!(out[len - 1], *sorted.last().unwrap());
        }

        #[test]
        fn soc_is_linear(a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let lhs = soc_from_charge(a + b, 740.0).unwrap();
            let rhs = soc_from_charge(a, 740.0).unwrap() + soc_from_charge(b, 740.0).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
