//! Deterministic pseudo-battery fixture for tests and demos.
//!
//! Shapes follow a small Li-ion cell cycled between 2.7 V and 4.2 V at a
//! 40 °C ambient: charging voltage ramps up into a CV plateau, discharge
//! falls back with a steepening tail, temperature bumps by about 0.8 °C
//! mid-phase, and capacity fades linearly so cycle k retains a fraction
//! (1 - fade_rate * k) of nominal. Discharge legs run longer than charge
//! legs, so the downstream tail-padding step has real work to do.
//!
//! Two disturbance kinds ride on the clean shapes. Every signal carries a
//! small per-sample jitter, windowed to vanish at phase endpoints. The
//! charge signal additionally gets a per-phase shape wobble
//! (`capacity * w * sin(2*pi*t)`, one `w` drawn per phase) whose amplitude
//! grows with cycle number: an aged cell's charge trajectory varies run to
//! run even when its endpoints repeat. The wobble is invisible to a
//! profile's endpoints, unpredictable from the sibling phase, and is what
//! makes late-cycle state-of-charge reconstruction genuinely harder, the
//! way fading cells behave. Voltage and temperature noise stay flat across
//! cycle life.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CycleSample, Phase, Provenance};
use crate::error::{Error, Result};

const NOMINAL_CAPACITY_MAH: f64 = 740.0;
const AMBIENT_C: f64 = 40.0;
const TIME_STEP_S: f64 = 10.0;

// Per-sample jitter half-widths, constant across cycle life.
const VOLTAGE_NOISE_V: f64 = 0.003;
const TEMPERATURE_NOISE_C: f64 = 0.03;
const CHARGE_JITTER_MAH: f64 = 1.11; // 0.15% of nominal

// Per-phase charge shape wobble, as a fraction of the cycle's capacity;
// ramps from the fresh to the aged value over cycle life.
const CHARGE_WOBBLE_FRESH: f64 = 0.0015;
const CHARGE_WOBBLE_AGED: f64 = 0.03;

/// Generate `n_cells * n_cycles` synthetic cycles, CSV-ready.
///
/// Deterministic for identical arguments. Output always passes
/// [`parse_csv`](crate::dataset::parse_csv) and
/// [`segment`](crate::dataset::segment).
pub fn make_fixture(
    n_cells: usize,
    n_cycles: u32,
    l_raw: usize,
    seed: u64,
    fade_rate: f64,
) -> Result<Vec<CycleSample>> {
    if n_cells == 0 || n_cycles == 0 {
        return Err(Error::InvalidArg(
            "fixture needs at least one cell and one cycle".into(),
        ));
    }
    if l_raw < 5 {
        return Err(Error::InvalidArg(format!(
            "fixture raw length must be >= 5, got {l_raw}"
        )));
    }
    if !fade_rate.is_finite() || fade_rate <= 0.0 {
        return Err(Error::InvalidArg(format!(
            "fade rate must be positive, got {fade_rate}"
        )));
    }
    if fade_rate * n_cycles as f64 >= 1.0 {
        return Err(Error::InvalidArg(format!(
            "fade_rate {fade_rate} over {n_cycles} cycles would consume the whole capacity"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let discharge_len = l_raw;
    let charge_len = (l_raw * 4 / 5).max(2);

    let mut samples =
        Vec::with_capacity(n_cells * n_cycles as usize * (discharge_len + charge_len));
    for cell in 1..=n_cells {
        let cell_id = format!("cell_{cell}");
        // Mild unit-to-unit spread.
        let capacity_factor = 1.0 + rng.random_range(-0.01..0.01);
        let knee_shift = rng.random_range(-0.02..0.02);
        let temp_offset = rng.random_range(-0.1..0.1);

        for cycle in 1..=n_cycles {
            let age = (cycle - 1) as f64 / (n_cycles.max(2) - 1) as f64;
            let scale = 1.0 - fade_rate * cycle as f64;
            let capacity = NOMINAL_CAPACITY_MAH * capacity_factor * scale;
            let wobble_amp = CHARGE_WOBBLE_FRESH + (CHARGE_WOBBLE_AGED - CHARGE_WOBBLE_FRESH) * age;
            let charge_wobble = rng.random_range(-wobble_amp..wobble_amp);
            let discharge_wobble = rng.random_range(-wobble_amp..wobble_amp);
            let knee = 0.7 - 0.15 * (1.0 - scale) + knee_shift;

            for i in 0..charge_len {
                let t = i as f64 / (charge_len - 1) as f64;
                // Jitter window: zero at both phase endpoints.
                let w = (PI * t).sin().powi(2);
                let ramp = 1.0 - (1.0 - (t / knee).min(1.0)).powi(2);
                let voltage = 2.7 + 1.5 * ramp + rng.random_range(-1.0..1.0) * VOLTAGE_NOISE_V * w;
                let charge = (capacity * (1.0 - (1.0 - t).powi(2))
                    + capacity * charge_wobble * (2.0 * PI * t).sin()
                    + rng.random_range(-1.0..1.0) * CHARGE_JITTER_MAH * w)
                    .max(0.0);
                let temperature = AMBIENT_C
                    + temp_offset
                    + 0.8 * (PI * t).sin().powi(2)
                    + rng.random_range(-1.0..1.0) * TEMPERATURE_NOISE_C * w;
                samples.push(CycleSample {
                    cell_id: cell_id.clone(),
                    cycle_index: cycle,
                    phase: Phase::Charge,
                    time_s: i as f64 * TIME_STEP_S,
                    voltage_v: voltage,
                    temperature_c: temperature,
                    charge_mah: charge,
                    provenance: Provenance::Real,
                });
            }

            for i in 0..discharge_len {
                let t = i as f64 / (discharge_len - 1) as f64;
                let w = (PI * t).sin().powi(2);
                let sag = 0.04 * (1.0 - scale) * (PI * t).sin();
                let voltage = 4.2 - 1.5 * (0.3 * t + 0.7 * t.powi(4)) - sag
                    + rng.random_range(-1.0..1.0) * VOLTAGE_NOISE_V * w;
                let charge = (capacity * (1.0 - 0.7 * t - 0.3 * t * t)
                    + capacity * discharge_wobble * (2.0 * PI * t).sin()
                    + rng.random_range(-1.0..1.0) * CHARGE_JITTER_MAH * w)
                    .max(0.0);
                let temperature = AMBIENT_C
                    + temp_offset
                    + 0.15 * (1.0 - scale)
                    + 0.8 * (PI * t.powf(0.85)).sin().powi(2)
                    + rng.random_range(-1.0..1.0) * TEMPERATURE_NOISE_C * w;
                samples.push(CycleSample {
                    cell_id: cell_id.clone(),
                    cycle_index: cycle,
                    phase: Phase::Discharge,
                    time_s: i as f64 * TIME_STEP_S,
                    voltage_v: voltage,
                    temperature_c: temperature,
                    charge_mah: charge,
                    provenance: Provenance::Real,
                });
            }
        }
    }
    Ok(samples)
}
