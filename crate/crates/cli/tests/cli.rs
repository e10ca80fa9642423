//! Command-line surface tests: flags, exit codes, file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn cyclegen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cyclegen"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn cyclegen")
}

fn assert_ok(cmd: &mut Command) -> Output {
    let output = run(cmd);
    assert!(
        output.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// Fixture + tuned + trained soc model shared by the read-only tests.
struct Workspace {
    _dir: tempfile::TempDir,
    data: PathBuf,
    out: PathBuf,
}

fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("fixture.csv");
        let out = dir.path().join("out");
        assert_ok(
            cyclegen()
                .args([
                    "fixture",
                    "--cells",
                    "2",
                    "--cycles",
                    "8",
                    "--length-raw",
                    "40",
                    "--seed",
                    "3",
                ])
                .args(["--out", &arg(&data)]),
        );
        assert_ok(
            cyclegen()
                .args([
                    "tune", "--param", "voltage", "--length", "24", "--depths", "1,2",
                ])
                .args(["--widths", "8,16", "--epochs", "15", "--seed", "3"])
                .args(["--data", &arg(&data), "--out-dir", &arg(&out)]),
        );
        assert_ok(
            cyclegen()
                .args([
                    "train", "--param", "voltage", "--length", "24", "--epochs", "120", "--seed",
                    "3",
                ])
                .args(["--arch", &arg(&out.join("selected_voltage.json"))])
                .args(["--data", &arg(&data), "--out-dir", &arg(&out)]),
        );
        Workspace {
            _dir: dir,
            data,
            out,
        }
    })
}

#[test]
fn fixture_rerun_is_byte_identical_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        assert_ok(
            cyclegen()
                .args(["fixture", "--cells", "1", "--cycles", "4", "--seed", "7"])
                .args(["--out", &arg(path)]),
        );
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    cyclegen_core::parse_csv_str(std::str::from_utf8(&bytes_a).unwrap()).unwrap();
}

#[test]
fn fixture_zero_cycles_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(cyclegen()
        .args(["fixture", "--cycles", "0"])
        .args(["--out", &arg(&dir.path().join("f.csv"))]));
    assert_eq!(output.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn unknown_flag_is_usage_error() {
    let output = run(cyclegen().args(["fixture", "--frobnicate"]));
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_data_file_is_data_error() {
    let output = run(cyclegen().args(["tune", "--data", "/nonexistent/f.csv"]));
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn malformed_csv_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,valid,header\n").unwrap();
    let output = run(cyclegen().args(["tune", "--data", &arg(&bad)]));
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 1"));
}

#[test]
fn absurd_learning_rate_is_divergence_exit() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let output = run(cyclegen()
        .args([
            "train", "--param", "voltage", "--length", "24", "--depth", "2", "--width", "8",
        ])
        .args(["--epochs", "5", "--lr", "1e154", "--seed", "3"])
        .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]));
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("diverged"));
}

#[test]
fn default_grid_emits_twenty_ranked_rows() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        cyclegen()
            .args([
                "tune", "--param", "voltage", "--length", "16", "--epochs", "2", "--seed", "1",
            ])
            .args(["--jobs", "4"])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    let ranked = std::fs::read_to_string(dir.path().join("tuning_voltage.csv")).unwrap();
    let lines: Vec<&str> = ranked.lines().collect();
    assert_eq!(lines[0], "rank,depth,width,param_count,final_loss");
    assert_eq!(lines.len(), 21, "header + 5 depths x 4 widths");
}

#[test]
fn tuned_architecture_feeds_training() {
    // selected_voltage.json round-trips through cmd_train in workspace()
    let ws = workspace();
    for name in [
        "chargenet_voltage.json",
        "dischargenet_voltage.json",
        "loss_history_voltage.csv",
        "calibration_voltage.json",
    ] {
        assert!(ws.out.join(name).exists(), "missing output {name}");
    }
    let history = std::fs::read_to_string(ws.out.join("loss_history_voltage.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,chargenet_loss,dischargenet_loss");
    assert_eq!(lines.len(), 121, "one row per epoch");
}

#[test]
fn tuning_defaults_follow_protocol() {
    let help = assert_ok(cyclegen().args(["tune", "--help"]));
    let text = String::from_utf8_lossy(&help.stdout).to_string();
    assert!(text.contains("default 50"), "tuning epochs default");
    assert!(text.contains("default 2"), "tuning cycles default");
    let help = assert_ok(cyclegen().args(["train", "--help"]));
    let text = String::from_utf8_lossy(&help.stdout).to_string();
    assert!(text.contains("default 400"), "full training epochs default");
}

#[test]
fn generate_zero_hops_writes_header_only() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synthetic.csv");
    assert_ok(
        cyclegen()
            .args([
                "generate",
                "--max-hops",
                "0",
                "--seed-cell",
                "cell_1",
                "--seed-cycle",
                "2",
            ])
            .args(["--charge-net", &arg(&ws.out.join("chargenet_voltage.json"))])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args([
                "--calibration",
                &arg(&ws.out.join("calibration_voltage.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out", &arg(&out)]),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text,
        "cell_id,cycle_index,phase,time_s,voltage_v,temperature_c,charge_mah,provenance\n"
    );
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.with_extension("csv.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["hops"], 0);
    assert_eq!(meta["stop_reason"], "max_hops");
}

#[test]
fn self_evaluation_on_generated_cycles_is_near_zero() {
    // Evaluating the models against their own chained output must give
    // (numerically) zero error: the "truth" is the model's own prediction.
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let synthetic = dir.path().join("synthetic.csv");
    assert_ok(
        cyclegen()
            .args([
                "generate",
                "--max-hops",
                "20",
                "--seed-cell",
                "cell_1",
                "--seed-cycle",
                "1",
            ])
            .args(["--seed-phase", "discharge"])
            .args(["--charge-net", &arg(&ws.out.join("chargenet_voltage.json"))])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args([
                "--calibration",
                &arg(&ws.out.join("calibration_voltage.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out", &arg(&synthetic)]),
    );
    assert_ok(
        cyclegen()
            .args(["eval"])
            .args(["--charge-net", &arg(&ws.out.join("chargenet_voltage.json"))])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args(["--data", &arg(&synthetic), "--out-dir", &arg(dir.path())]),
    );
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("eval_voltage_summary.json")).unwrap(),
    )
    .unwrap();
    for net in ["charge_net", "discharge_net"] {
        let rmse = summary[net]["aggregate"]["rmse"].as_f64().unwrap();
        assert!(rmse < 1e-9, "{net} self-evaluation rmse {rmse}");
    }
}

#[test]
fn eval_emits_one_row_per_test_cycle() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        cyclegen()
            .args(["eval", "--cells", "cell_2", "--max-cycles", "6"])
            .args(["--charge-net", &arg(&ws.out.join("chargenet_voltage.json"))])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    let per_cycle =
        std::fs::read_to_string(dir.path().join("eval_voltage_dischargenet.csv")).unwrap();
    let lines: Vec<&str> = per_cycle.lines().collect();
    assert_eq!(lines[0], "cycle_index,mse,mae,rmse");
    assert_eq!(lines.len(), 7, "header + 6 cycles");
    // ChargeNet predicts successor cycles, so it covers one fewer
    let charge_rows =
        std::fs::read_to_string(dir.path().join("eval_voltage_chargenet.csv")).unwrap();
    assert_eq!(charge_rows.lines().count(), 6);
}

#[test]
fn soc_eval_reports_in_percent() {
    // Drive-cycle style usage: soc models, errors come out in SOC percent.
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        cyclegen()
            .args([
                "tune", "--param", "soc", "--length", "24", "--depths", "2", "--widths", "8",
            ])
            .args(["--epochs", "20", "--seed", "4"])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    assert_ok(
        cyclegen()
            .args([
                "train", "--param", "soc", "--length", "24", "--epochs", "150", "--seed", "4",
            ])
            .args(["--arch", &arg(&dir.path().join("selected_soc.json"))])
            .args(["--cells", "cell_1"])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    assert_ok(
        cyclegen()
            .args(["eval", "--cells", "cell_2"])
            .args(["--charge-net", &arg(&dir.path().join("chargenet_soc.json"))])
            .args([
                "--discharge-net",
                &arg(&dir.path().join("dischargenet_soc.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("eval_soc_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["parameter"], "soc");
    let rmse = summary["discharge_net"]["aggregate"]["rmse"]
        .as_f64()
        .unwrap();
    // percent scale: errors are O(1)%, not O(0.01) normalized
    assert!(
        rmse > 0.001 && rmse < 50.0,
        "rmse {rmse} not on a percent scale"
    );
}

#[test]
fn plot_emits_overlay_csv_and_wellformed_svg() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        cyclegen()
            .args([
                "plot",
                "--cell",
                "cell_1",
                "--cycle",
                "1",
                "--direction",
                "to_discharge",
            ])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out-dir", &arg(dir.path())]),
    );
    let csv_path = dir
        .path()
        .join("plot_voltage_to_discharge_cell_1_cycle1.csv");
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,true,predicted");
    assert_eq!(lines.len(), 25, "header + L rows");
    // overlay tracks truth well inside the physical-bounds tolerance
    let mut max_gap = 0.0f64;
    for line in &lines[1..] {
        let fields: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        max_gap = max_gap.max((fields[0] - fields[1]).abs());
    }
    assert!(max_gap < 0.25, "overlay gap {max_gap} V too large");

    let svg = std::fs::read_to_string(
        dir.path()
            .join("plot_voltage_to_discharge_cell_1_cycle1.svg"),
    )
    .unwrap();
    assert!(svg.starts_with("<?xml version=\"1.0\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<svg").count(), 1);
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
}

#[test]
fn phaseless_csv_tunes_with_segment_by_slope() {
    // strip the phase column and make time continuous per cycle
    let ws = workspace();
    let samples =
        cyclegen_core::parse_csv_str(&std::fs::read_to_string(&ws.data).unwrap()).unwrap();
    let mut text = String::from("cell_id,cycle_index,time_s,voltage_v,temperature_c,charge_mah\n");
    let mut clock = std::collections::HashMap::new();
    for s in &samples {
        let t = clock
            .entry((s.cell_id.clone(), s.cycle_index))
            .or_insert(0u32);
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.cell_id, s.cycle_index, *t, s.voltage_v, s.temperature_c, s.charge_mah
        ));
        *t += 10;
    }
    let dir = tempfile::tempdir().unwrap();
    let phaseless = dir.path().join("phaseless.csv");
    std::fs::write(&phaseless, text).unwrap();

    // without the flag the header is rejected as a data error
    let output = run(cyclegen().args(["tune", "--data", &arg(&phaseless)]));
    assert_eq!(output.status.code(), Some(3));

    assert_ok(
        cyclegen()
            .args([
                "tune",
                "--segment-by-slope",
                "--param",
                "voltage",
                "--length",
                "16",
            ])
            .args([
                "--depths", "1", "--widths", "8", "--epochs", "5", "--seed", "2",
            ])
            .args(["--data", &arg(&phaseless), "--out-dir", &arg(dir.path())]),
    );
    assert!(dir.path().join("selected_voltage.json").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out_conf = dir.path().join("from_conf.csv");
    std::fs::write(
        &conf,
        format!(
            "# fixture settings\ncells = 1\ncycles = 3\nlength-raw = 30\nseed = 5\nout = {}\n",
            out_conf.display()
        ),
    )
    .unwrap();
    assert_ok(cyclegen().args(["fixture", "--config", &arg(&conf)]));
    let from_conf = std::fs::read_to_string(&out_conf).unwrap();
    let conf_cycles = cyclegen_core::parse_csv_str(&from_conf)
        .unwrap()
        .iter()
        .map(|s| s.cycle_index)
        .max()
        .unwrap();
    assert_eq!(conf_cycles, 3);

    // the flag overrides the config's cycle count
    let out_flag = dir.path().join("from_flag.csv");
    assert_ok(
        cyclegen()
            .args(["fixture", "--config", &arg(&conf), "--cycles", "5"])
            .args(["--out", &arg(&out_flag)]),
    );
    let from_flag = std::fs::read_to_string(&out_flag).unwrap();
    let flag_cycles = cyclegen_core::parse_csv_str(&from_flag)
        .unwrap()
        .iter()
        .map(|s| s.cycle_index)
        .max()
        .unwrap();
    assert_eq!(flag_cycles, 5);
}

#[test]
fn log_env_var_controls_verbosity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let quiet = run(cyclegen().env("CYCLEGEN_LOG", "error").args([
        "fixture",
        "--cycles",
        "2",
        "--out",
        &arg(&out),
    ]));
    assert!(quiet.status.success());
    assert!(String::from_utf8_lossy(&quiet.stderr).is_empty());

    let chatty = run(cyclegen().env("CYCLEGEN_LOG", "info").args([
        "fixture",
        "--cycles",
        "2",
        "--out",
        &arg(&out),
    ]));
    assert!(chatty.status.success());
    assert!(String::from_utf8_lossy(&chatty.stderr).contains("fixture"));
}

#[test]
fn generated_csv_retrains_through_cli() {
    // augmentation loop at the command level: generate -> train on output
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let synthetic = dir.path().join("synthetic.csv");
    assert_ok(
        cyclegen()
            .args([
                "generate",
                "--max-hops",
                "12",
                "--seed-cell",
                "cell_1",
                "--seed-cycle",
                "1",
            ])
            .args(["--charge-net", &arg(&ws.out.join("chargenet_voltage.json"))])
            .args([
                "--discharge-net",
                &arg(&ws.out.join("dischargenet_voltage.json")),
            ])
            .args([
                "--calibration",
                &arg(&ws.out.join("calibration_voltage.json")),
            ])
            .args(["--data", &arg(&ws.data), "--out", &arg(&synthetic)]),
    );
    assert_ok(
        cyclegen()
            .args([
                "train", "--param", "voltage", "--length", "24", "--depth", "1", "--width", "8",
            ])
            .args(["--epochs", "5", "--seed", "1"])
            .args(["--data", &arg(&synthetic), "--out-dir", &arg(dir.path())]),
    );
}
