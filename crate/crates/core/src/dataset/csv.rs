//! Bit-exact CSV schema for cycling data.
//!
//! Header, column order and decimal format are fixed. UTF-8, `.` decimal
//! separator, LF or CRLF line endings. The optional trailing `provenance`
//! column marks synthetic rows produced by a generation chain.

use std::collections::HashMap;
use std::io::BufRead;

use crate::dataset::{CycleSample, Phase, Provenance};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "cell_id,cycle_index,phase,time_s,voltage_v,temperature_c,charge_mah";
pub const CSV_HEADER_WITH_PROVENANCE: &str =
    "cell_id,cycle_index,phase,time_s,voltage_v,temperature_c,charge_mah,provenance";

fn csv_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Csv {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| csv_err(line, format!("unparseable {name} value {raw:?}")))
}

/// Parse the cycling-data schema from any buffered reader.
///
/// Rows are returned in file order. Within each (cell, cycle, phase) group
/// `time_s` must be strictly increasing; violations are reported with the
/// offending line number.
pub fn parse_csv(reader: impl BufRead) -> Result<Vec<CycleSample>> {
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(csv_err(1, "empty file, expected header")),
    };
    let header = header.trim_end_matches('\r');
    let with_provenance = match header {
        h if h == CSV_HEADER => false,
        h if h == CSV_HEADER_WITH_PROVENANCE => true,
        other => {
            return Err(csv_err(
                1,
                format!("bad header {other:?}, expected {CSV_HEADER:?}"),
            ))
        }
    };
    let n_cols = if with_provenance { 8 } else { 7 };

    let mut samples = Vec::new();
    let mut last_time: HashMap<(String, u32, Phase), f64> = HashMap::new();

    for (idx, line) in lines {
        let line_no = idx + 1; // 1-based, includes the header line
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(csv_err(
                line_no,
                format!("expected {n_cols} columns, got {}", fields.len()),
            ));
        }

        let cell_id = fields[0].to_string();
        if cell_id.is_empty() {
            return Err(csv_err(line_no, "empty cell_id"));
        }
        let cycle_index: u32 = parse_field(fields[1], "cycle_index", line_no)?;
        if cycle_index == 0 {
            return Err(csv_err(line_no, "cycle_index must be >= 1"));
        }
        let phase: Phase = fields[2]
            .parse()
            .map_err(|_| csv_err(line_no, format!("unknown phase {:?}", fields[2])))?;
        let time_s: f64 = parse_field(fields[3], "time_s", line_no)?;
        let voltage_v: f64 = parse_field(fields[4], "voltage_v", line_no)?;
        let temperature_c: f64 = parse_field(fields[5], "temperature_c", line_no)?;
        let charge_mah: f64 = parse_field(fields[6], "charge_mah", line_no)?;
        let provenance = if with_provenance {
            match fields[7] {
                "real" => Provenance::Real,
                "synthetic" => Provenance::Synthetic,
                other => return Err(csv_err(line_no, format!("unknown provenance {other:?}"))),
            }
        } else {
            Provenance::Real
        };

        if !(time_s.is_finite()
            && voltage_v.is_finite()
            && temperature_c.is_finite()
            && charge_mah.is_finite())
        {
            return Err(csv_err(line_no, "non-finite numeric value"));
        }
        if time_s < 0.0 {
            return Err(csv_err(line_no, format!("negative time_s {time_s}")));
        }
        if charge_mah < 0.0 {
            return Err(csv_err(
                line_no,
                format!("negative charge_mah {charge_mah}"),
            ));
        }

        let key = (cell_id.clone(), cycle_index, phase);
        if let Some(&prev) = last_time.get(&key) {
            if time_s <= prev {
                return Err(csv_err(
                    line_no,
                    format!(
                        "time_s not strictly increasing within {cell_id} cycle {cycle_index} {phase} ({time_s} after {prev})"
                    ),
                ));
            }
        }
        last_time.insert(key, time_s);

        samples.push(CycleSample {
            cell_id,
            cycle_index,
            phase,
            time_s,
            voltage_v,
            temperature_c,
            charge_mah,
            provenance,
        });
    }

    Ok(samples)
}

pub fn parse_csv_str(data: &str) -> Result<Vec<CycleSample>> {
    parse_csv(data.as_bytes())
}

pub const CSV_HEADER_NO_PHASE: &str =
    "cell_id,cycle_index,time_s,voltage_v,temperature_c,charge_mah";

/// Fallback parser for datasets that never recorded a phase column: each
/// cycle is one continuous record and the phase is inferred from charge
/// monotonicity. Charge rises to its per-cycle maximum and falls after it,
/// so rows up to the maximum are tagged `charge`, the rest `discharge`.
/// Within a cycle, `time_s` must be strictly increasing.
pub fn parse_csv_segment_by_slope(reader: impl BufRead) -> Result<Vec<CycleSample>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(csv_err(1, "empty file, expected header")),
    };
    if header.trim_end_matches('\r') != CSV_HEADER_NO_PHASE {
        return Err(csv_err(
            1,
            format!("bad header, expected {CSV_HEADER_NO_PHASE:?}"),
        ));
    }

    // (cell, cycle) -> rows in file order, phase assigned afterwards
    struct Row {
        line_no: usize,
        time_s: f64,
        voltage_v: f64,
        temperature_c: f64,
        charge_mah: f64,
    }
    let mut order: Vec<(String, u32)> = Vec::new();
    let mut groups: HashMap<(String, u32), Vec<Row>> = HashMap::new();

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(csv_err(
                line_no,
                format!("expected 6 columns, got {}", fields.len()),
            ));
        }
        let cell_id = fields[0].to_string();
        if cell_id.is_empty() {
            return Err(csv_err(line_no, "empty cell_id"));
        }
        let cycle_index: u32 = parse_field(fields[1], "cycle_index", line_no)?;
        if cycle_index == 0 {
            return Err(csv_err(line_no, "cycle_index must be >= 1"));
        }
        let row = Row {
            line_no,
            time_s: parse_field(fields[2], "time_s", line_no)?,
            voltage_v: parse_field(fields[3], "voltage_v", line_no)?,
            temperature_c: parse_field(fields[4], "temperature_c", line_no)?,
            charge_mah: parse_field(fields[5], "charge_mah", line_no)?,
        };
        if !(row.time_s.is_finite()
            && row.voltage_v.is_finite()
            && row.temperature_c.is_finite()
            && row.charge_mah.is_finite())
        {
            return Err(csv_err(line_no, "non-finite numeric value"));
        }
        if row.charge_mah < 0.0 {
            return Err(csv_err(line_no, "negative charge_mah"));
        }
        let key = (cell_id, cycle_index);
        let group = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        if let Some(prev) = group.last() {
            if row.time_s <= prev.time_s {
                return Err(csv_err(
                    line_no,
                    format!(
                        "time_s not strictly increasing within the cycle ({} after {})",
                        row.time_s, prev.time_s
                    ),
                ));
            }
        }
        group.push(row);
    }

    let mut samples = Vec::new();
    for key in order {
        let rows = groups.remove(&key).unwrap();
        let turn = rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.charge_mah.total_cmp(&b.1.charge_mah))
            .map(|(i, _)| i)
            .unwrap();
        if turn == rows.len() - 1 {
            return Err(csv_err(
                rows[turn].line_no,
                format!(
                    "{} cycle {}: charge never falls, cannot infer a discharge phase",
                    key.0, key.1
                ),
            ));
        }
        for (i, row) in rows.into_iter().enumerate() {
            samples.push(CycleSample {
                cell_id: key.0.clone(),
                cycle_index: key.1,
                phase: if i <= turn {
                    Phase::Charge
                } else {
                    Phase::Discharge
                },
                time_s: row.time_s,
                voltage_v: row.voltage_v,
                temperature_c: row.temperature_c,
                charge_mah: row.charge_mah,
                provenance: Provenance::Real,
            });
        }
    }
    Ok(samples)
}

/// Serialize samples back to the schema. Floats are written with the
/// shortest representation that parses back to the identical double.
pub fn write_csv(samples: &[CycleSample], with_provenance: bool) -> String {
    let header = if with_provenance {
        CSV_HEADER_WITH_PROVENANCE
    } else {
        CSV_HEADER
    };
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(header);
    out.push('\n');
    for s in samples {
        out.push_str(&s.cell_id);
        out.push(',');
        out.push_str(&s.cycle_index.to_string());
        out.push(',');
        out.push_str(s.phase.as_str());
        out.push(',');
        out.push_str(&s.time_s.to_string());
        out.push(',');
        out.push_str(&s.voltage_v.to_string());
        out.push(',');
        out.push_str(&s.temperature_c.to_string());
        out.push(',');
        out.push_str(&s.charge_mah.to_string());
        if with_provenance {
            out.push(',');
            out.push_str(s.provenance.as_str());
        }
        out.push('\n');
    }
    out
}
