//! MSE / MAE / RMSE and per-cycle evaluation reports.
//!
//! Aggregates are arithmetic means of the per-cycle metrics rather than
//! pooled over all points, so the aggregate RMSE is generally not the
//! square root of the aggregate MSE. Per cycle, `rmse = sqrt(mse)` exactly.

use serde::{Deserialize, Serialize};

use crate::coupled::CoupledModel;
use crate::dataset::{denormalize, AlignedPair, Direction, NormStats};
use crate::error::{Error, Result};

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(y, x)| (y - x) * (y - x)).sum();
    Ok(sum / pred.len() as f64)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(y, x)| (y - x).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Root mean squared error, exactly `sqrt(mse)`.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(mse(pred, truth)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub cycle_index: u32,
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
}

/// Per-cycle rows plus their arithmetic-mean aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_cycle: Vec<CycleMetrics>,
    pub aggregate: AggregateMetrics,
    /// Points per cycle the metrics were computed over.
    pub points_per_cycle: usize,
}

impl MetricsReport {
    pub fn from_per_cycle(per_cycle: Vec<CycleMetrics>, points_per_cycle: usize) -> Result<Self> {
        if per_cycle.is_empty() {
            return Err(Error::InvalidArg(
                "metrics report needs at least one cycle".into(),
            ));
        }
        let n = per_cycle.len() as f64;
        let aggregate = AggregateMetrics {
            mse: per_cycle.iter().map(|c| c.mse).sum::<f64>() / n,
            mae: per_cycle.iter().map(|c| c.mae).sum::<f64>() / n,
            rmse: per_cycle.iter().map(|c| c.rmse).sum::<f64>() / n,
        };
        Ok(MetricsReport {
            per_cycle,
            aggregate,
            points_per_cycle,
        })
    }
}

/// Reports for both halves of a coupled model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub charge_net: MetricsReport,
    pub discharge_net: MetricsReport,
}

/// Evaluate a coupled model on test pairs, one per-cycle row per pair, in
/// denormalized physical units. `stats` must match the normalization the
/// pairs were built with, which must match the model's.
pub fn evaluate(
    model: &CoupledModel,
    pairs: &[AlignedPair],
    stats: &NormStats,
) -> Result<EvalReport> {
    let model_stats = model.norm_stats();
    if model_stats.input != *stats || model_stats.output != *stats {
        return Err(Error::StatsMismatch);
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArg(
            "evaluation needs at least one pair".into(),
        ));
    }

    let mut reports = Vec::with_capacity(2);
    for direction in [Direction::ToCharge, Direction::ToDischarge] {
        let net = match direction {
            Direction::ToCharge => model.charge_net(),
            Direction::ToDischarge => model.discharge_net(),
        };
        let mut rows = Vec::new();
        for pair in pairs.iter().filter(|p| p.direction == direction) {
            if pair.parameter != model.parameter {
                return Err(Error::InvalidArg(format!(
                    "pair parameter {} does not match model parameter {}",
                    pair.parameter, model.parameter
                )));
            }
            let prediction = denormalize(&net.forward(&pair.input)?, stats);
            let truth = denormalize(&pair.target, stats);
            rows.push(CycleMetrics {
                cycle_index: pair.target_cycle,
                mse: mse(&prediction, &truth)?,
                mae: mae(&prediction, &truth)?,
                rmse: rmse(&prediction, &truth)?,
            });
        }
        if rows.is_empty() {
            return Err(Error::InvalidArg(format!(
                "no {direction} pairs in the evaluation set"
            )));
        }
        rows.sort_by_key(|r| r.cycle_index);
        reports.push(MetricsReport::from_per_cycle(rows, model.sequence_len())?);
    }
    let discharge_net = reports.pop().unwrap();
    let charge_net = reports.pop().unwrap();
    Ok(EvalReport {
        charge_net,
        discharge_net,
    })
}

/// Ordinary-least-squares slope of each metric against cycle index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendSlopes {
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
}

pub fn cycle_trend(report: &MetricsReport) -> Result<TrendSlopes> {
    let rows = &report.per_cycle;
    if rows.len() < 2 {
        return Err(Error::InvalidArg("trend needs at least two cycles".into()));
    }
    let n = rows.len() as f64;
    let mean_x = rows.iter().map(|r| r.cycle_index as f64).sum::<f64>() / n;
    let denom: f64 = rows
        .iter()
        .map(|r| {
            let d = r.cycle_index as f64 - mean_x;
            d * d
        })
        .sum();
    if denom == 0.0 {
        return Err(Error::InvalidArg(
            "trend needs at least two distinct cycle indices".into(),
        ));
    }
    let slope = |metric: fn(&CycleMetrics) -> f64| -> f64 {
        let mean_y = rows.iter().map(&metric).sum::<f64>() / n;
        let num: f64 = rows
            .iter()
            .map(|r| (r.cycle_index as f64 - mean_x) * (metric(r) - mean_y))
            .sum();
        num / denom
    };
    Ok(TrendSlopes {
        mse: slope(|r| r.mse),
        mae: slope(|r| r.mae),
        rmse: slope(|r| r.rmse),
    })
}

/// Per-cycle rows as `cycle_index,mse,mae,rmse` CSV.
pub fn per_cycle_csv(report: &MetricsReport) -> String {
    let mut out = String::from("cycle_index,mse,mae,rmse\n");
    for row in &report.per_cycle {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.cycle_index, row.mse, row.mae, row.rmse
        ));
    }
    out
}
