//! Budgeted grid search over depth x hidden width.
//!
//! Protocol: every candidate trains on a small slice of the data (the first
//! couple of cycles of the first cell) for a short epoch budget, candidates
//! are ranked by their final training loss, and the winner's architecture is
//! reused for both the ChargeNet and the DischargeNet of that parameter.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::dataset::{AlignedPair, Direction};
use crate::error::{Error, Result};
use crate::nn::{train, Activation, Architecture, NormStatsPair, TrainConfig};

/// Search space and tuning budget.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Candidate weight-layer counts.
    pub depths: Vec<usize>,
    /// Candidate hidden widths (uniform across a candidate's hidden layers).
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub tuning_epochs: usize,
    /// How many leading cycles of the first cell form the tuning slice.
    pub tuning_cycles: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            depths: vec![2, 4, 6, 8, 10],
            widths: vec![16, 32, 64, 128],
            activation: Activation::Relu,
            tuning_epochs: 50,
            tuning_cycles: 2,
            learning_rate: 1e-2,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.widths.is_empty() {
            return Err(Error::InvalidArg("grid must list depths and widths".into()));
        }
        if self.depths.contains(&0) || self.widths.contains(&0) {
            return Err(Error::InvalidArg("grid entries must be positive".into()));
        }
        if self.tuning_epochs == 0 || self.tuning_cycles == 0 {
            return Err(Error::InvalidArg("tuning budget must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluated candidate. A diverged run carries `final_loss` infinity.
#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub arch: Architecture,
    pub depth: usize,
    pub width: usize,
    pub param_count: usize,
    pub final_loss: f64,
    pub grid_index: usize,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    /// Ascending by (final_loss, param_count, grid_index).
    pub ranked: Vec<CandidateResult>,
    pub selected: Architecture,
}

/// Cartesian product of depths x widths, depths outermost. Candidate
/// `depth` means that many weight layers, so `depth - 1` hidden layers of
/// the uniform width sit between `d_in` and `d_out`.
pub fn enumerate_grid(spec: &GridSpec, d_in: usize, d_out: usize) -> Result<Vec<Architecture>> {
    spec.validate()?;
    let mut archs = Vec::with_capacity(spec.depths.len() * spec.widths.len());
    for &depth in &spec.depths {
        for &width in &spec.widths {
            archs.push(Architecture::uniform(
                d_in,
                width,
                depth,
                d_out,
                spec.activation,
            )?);
        }
    }
    Ok(archs)
}

/// Stable per-candidate seed so grid evaluation order (or parallelism)
/// cannot change any result. splitmix64 over (seed, index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Restrict pairs to the first `tuning_cycles` cycles of the first cell,
/// mirroring a tuning pass that only ever sees a sliver of the data.
pub fn tuning_slice(pairs: &[AlignedPair], tuning_cycles: u32) -> Vec<AlignedPair> {
    let Some(first_cell) = pairs.iter().map(|p| p.cell_id.as_str()).min() else {
        return Vec::new();
    };
    let cell_pairs: Vec<&AlignedPair> = pairs.iter().filter(|p| p.cell_id == first_cell).collect();
    let Some(first_cycle) = cell_pairs.iter().map(|p| p.input_cycle).min() else {
        return Vec::new();
    };
    let last_cycle = first_cycle + tuning_cycles - 1;
    cell_pairs
        .into_iter()
        .filter(|p| p.input_cycle <= last_cycle && p.target_cycle <= last_cycle)
        .cloned()
        .collect()
}

/// Train every candidate for the tuning budget and rank them.
///
/// Each candidate gets its own derived seed, so results are identical no
/// matter how the work is scheduled; `jobs > 1` evaluates candidates on
/// that many threads. Divergence is recorded as infinite loss rather than
/// failing the whole search; only a fully diverged grid is an error.
pub fn tune(
    spec: &GridSpec,
    pairs_slice: &[AlignedPair],
    direction: Direction,
    norm_stats: &NormStatsPair,
    jobs: usize,
) -> Result<TuneOutcome> {
    spec.validate()?;
    let pairs: Vec<AlignedPair> = pairs_slice
        .iter()
        .filter(|p| p.direction == direction)
        .cloned()
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidArg(format!(
            "no {direction} pairs in the tuning slice"
        )));
    }
    let d_in = pairs[0].input.len();
    let d_out = pairs[0].target.len();
    let archs = enumerate_grid(spec, d_in, d_out)?;
    let grid: Vec<(usize, usize)> = spec
        .depths
        .iter()
        .flat_map(|&d| spec.widths.iter().map(move |&w| (d, w)))
        .collect();

    let evaluate = |index: usize, arch: &Architecture| -> CandidateResult {
        let cfg = TrainConfig {
            epochs: spec.tuning_epochs,
            learning_rate: spec.learning_rate,
            batch_size: spec.batch_size,
            seed: derive_seed(spec.seed, index as u64),
            ..TrainConfig::default()
        };
        let final_loss = match train(arch, &pairs, &cfg, norm_stats) {
            Ok(report) => report.final_loss(),
            Err(_) => f64::INFINITY,
        };
        CandidateResult {
            arch: arch.clone(),
            depth: grid[index].0,
            width: grid[index].1,
            param_count: arch.param_count(),
            final_loss,
            grid_index: index,
        }
    };

    let mut results: Vec<Option<CandidateResult>> = vec![None; archs.len()];
    if jobs <= 1 {
        for (index, arch) in archs.iter().enumerate() {
            results[index] = Some(evaluate(index, arch));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(archs.len()) {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    if index >= archs.len() {
                        break;
                    }
                    let result = evaluate(index, &archs[index]);
                    slots.lock().unwrap()[index] = Some(result);
                });
            }
        });
    }

    let ranked = rank(results.into_iter().map(Option::unwrap).collect());
    if ranked[0].final_loss.is_infinite() {
        return Err(Error::AllCandidatesDiverged);
    }
    let selected = ranked[0].arch.clone();
    Ok(TuneOutcome { ranked, selected })
}

/// Total order over candidates: ascending loss, ties to fewer parameters,
/// remaining ties to earlier grid position.
pub fn rank(mut results: Vec<CandidateResult>) -> Vec<CandidateResult> {
    results.sort_by(|a, b| {
        a.final_loss
            .total_cmp(&b.final_loss)
            .then(a.param_count.cmp(&b.param_count))
            .then(a.grid_index.cmp(&b.grid_index))
    });
    results
}

/// The tuned architecture is shared: the same shape trains as ChargeNet and
/// as DischargeNet.
pub fn shared_architecture(selected: &Architecture) -> (Architecture, Architecture) {
    (selected.clone(), selected.clone())
}

/// Ranked results as `rank,depth,width,param_count,final_loss` CSV.
pub fn ranked_csv(ranked: &[CandidateResult]) -> String {
    let mut out = String::from("rank,depth,width,param_count,final_loss\n");
    for (rank, c) in ranked.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rank + 1,
            c.depth,
            c.width,
            c.param_count,
            c.final_loss
        ));
    }
    out
}
