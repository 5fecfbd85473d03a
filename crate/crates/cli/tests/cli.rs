use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wgm_core::io::{parse_spectrum, parse_trace, parse_tuning_curve};
use wgm_core::Polarization;

fn wgm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgm"))
        .current_dir(dir)
        .env_remove("WGM_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .expect("valid json")
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.json"), "{ \"seed\": 3,\n  \"geometry\": { \"radius\": }\n}").unwrap();
    let o = wgm(tmp.path(), &["--config", "bad.json", "spectrum"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(entries(tmp.path()), ["bad.json"]);
}

#[test]
fn unknown_field_names_its_path() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"geometry": {"equatorial_radius": 40, "radius_um": 1}}"#).unwrap();
    let o = wgm(tmp.path(), &["--config", "c.json", "summary"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("geometry"), "{}", stderr(&o));
    assert_eq!(entries(tmp.path()), ["c.json"]);
}

#[test]
fn empty_voltage_grid_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"voltages": []}"#).unwrap();
    let o = wgm(tmp.path(), &["--config", "c.json", "tune-curve"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("voltages"), "{}", stderr(&o));
    assert_eq!(entries(tmp.path()), ["c.json"]);
}

#[test]
fn missing_input_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["fit", "nope.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope.csv"));
    assert!(entries(tmp.path()).is_empty());
    let o = wgm(tmp.path(), &["--preset", "device9", "summary"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_window_gives_header_only() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["spectrum", "--window", "374.0", "374.0001"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l.starts_with("q,")), "{text}");
    assert!(parse_spectrum::<f64>(&text).unwrap().is_empty());
}

#[test]
fn device2_spectrum_has_fsr_spacing() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["spectrum"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = parse_spectrum::<f64>(&fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap()).unwrap();
    assert!(!lines.is_empty());
    let te: Vec<_> = lines.iter().filter(|l| l.mode.pol == Polarization::TE && l.mode.m == l.mode.l as i32).collect();
    let mut checked = 0;
    for w in te.windows(2) {
        if w[1].mode.l == w[0].mode.l + 1 {
            let d = (w[1].frequency - w[0].frequency) * 1e3;
            assert!((d / 810.0 - 1.0).abs() < 0.03, "adjacent-l spacing {d} GHz");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn tune_curve_slopes_and_device1_range() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["tune-curve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pts = parse_tuning_curve::<f64>(&fs::read_to_string(tmp.path().join("out/tuning.csv")).unwrap()).unwrap();
    let (p0, p1) = (&pts[0], pts.last().unwrap());
    let dv = p1.voltage - p0.voltage;
    let te = (p1.shift_te - p0.shift_te) / dv;
    let tm = (p1.shift_tm - p0.shift_tm) / dv;
    assert!((te / 5.0 - 1.0).abs() < 0.05, "TE {te}");
    assert!((tm / 8.0 - 1.0).abs() < 0.05, "TM {tm}");
    let plot = json(tmp.path().join("out/tuning_plot.json"));
    assert_eq!(plot["series"].as_array().unwrap().len(), 2);

    let o = wgm(tmp.path(), &["--preset", "device1", "--out", "d1", "tune-curve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pts = parse_tuning_curve::<f64>(&fs::read_to_string(tmp.path().join("d1/tuning.csv")).unwrap()).unwrap();
    let max = pts.iter().map(|p| p.shift_te.abs()).fold(0.0, f64::max);
    assert!((max / 150.0 - 1.0).abs() < 0.1, "device1 max shift {max} GHz");
}

#[test]
fn summary_reports_budget() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["--preset", "device1", "summary"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(tmp.path().join("out/summary.json"));
    let shift = s["elastic_budget"]["max_shift_te"].as_f64().unwrap();
    assert!((shift / 150.0 - 1.0).abs() < 0.1, "{shift}");
    assert_eq!(s["command"], "summary");
    assert_eq!(s["preset"], "device1");
}

#[test]
fn same_seed_scans_are_byte_identical() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    let args = ["--seed", "11", "scan", "--voltages", "0,10"];
    for r in &runs {
        let o = wgm(r.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let files = entries(&runs[0].path().join("out"));
    assert_eq!(files, ["scan.json", "trace_000.csv", "trace_001.csv"]);
    for f in &files {
        let a = fs::read(runs[0].path().join("out").join(f)).unwrap();
        let b = fs::read(runs[1].path().join("out").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let t = parse_trace::<f64>(&fs::read_to_string(runs[0].path().join("out/trace_001.csv")).unwrap()).unwrap();
    assert_eq!(t.metadata.voltage, 10.0);
    assert_eq!(t.metadata.extra.get("preset").map(String::as_str), Some("device2"));

    let o = wgm(runs[0].path(), &["--seed", "12", "--out", "c", "scan", "--voltages", "0,10"]);
    assert_eq!(code(&o), 0);
    let a = fs::read_to_string(runs[0].path().join("out/trace_000.csv")).unwrap();
    let c = fs::read_to_string(runs[0].path().join("c/trace_000.csv")).unwrap();
    let rows = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
    assert_ne!(rows(&a), rows(&c));
}

#[test]
fn scan_fit_calibrate_recovers_strain() {
    let tmp = TempDir::new().unwrap();
    let o = wgm(tmp.path(), &["--seed", "5", "--out", "run", "scan"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut traces: Vec<String> =
        entries(&tmp.path().join("run")).into_iter().filter(|f| f.starts_with("trace_")).map(|f| format!("run/{f}")).collect();
    traces.sort();
    assert!(traces.len() >= 5);
    let args: Vec<&str> = ["--out", "run"].into_iter().chain(["fit"]).chain(traces.iter().map(String::as_str)).collect();
    let o = wgm(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = json(tmp.path().join("run/fit_report.json"));
    assert_eq!(fit["status"], "ok");
    assert_eq!(fit["inputs"].as_array().unwrap().len(), traces.len());

    let args: Vec<&str> = ["--seed", "5", "--out", "run", "calibrate"].into_iter().chain(traces.iter().map(String::as_str)).collect();
    let o = wgm(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cal = json(tmp.path().join("run/calibration_report.json"));
    let s = cal["strain_per_volt"].as_f64().unwrap();
    assert!((s / 6e-5 - 1.0).abs() < 0.1, "strain per volt {s}");
    assert_eq!(cal["seed"], 5);
    assert_eq!(cal["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(cal["format"], "wgm-report v1");
}

#[test]
fn assign_spectrum_recovers_labels() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&wgm(tmp.path(), &["spectrum"])), 0);
    let o = wgm(tmp.path(), &["--set", "geometry.equatorial_radius=41", "--set", "geometry.ellipticity=0", "assign", "out/spectrum.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(tmp.path().join("out/assign_report.json"));
    assert_eq!(r["status"], "assigned");
    let eps = r["assignment"]["fitted_ellipticity"].as_f64().unwrap();
    assert!((eps - 0.46).abs() < 0.05, "{eps}");
    let lines = parse_spectrum::<f64>(&fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap()).unwrap();
    let dips = r["assignment"]["dips"].as_array().unwrap();
    for (line, dip) in lines.iter().zip(dips) {
        assert_eq!(dip["label"], line.mode.to_string());
    }
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn rejected_assignment_exits_3_with_candidates() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&wgm(tmp.path(), &["spectrum"])), 0);
    let lines = parse_spectrum::<f64>(&fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap()).unwrap();
    let offsets = [0.8e-3, -1.1e-3, 0.3e-3, 1.4e-3, -0.6e-3, -0.9e-3];
    let centers: Vec<String> = lines.iter().zip(offsets).map(|(l, d)| (l.frequency + d).to_string()).collect();
    let centers = centers.join(",");
    let o = wgm(tmp.path(), &["--set", "analysis.assign.threshold_rms_ghz=0.0001", "assign", "--centers", &centers]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = json(tmp.path().join("out/assign_report.json"));
    assert_eq!(r["status"], "unassigned");
    assert!(!r["candidates"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_and_env_are_equivalent() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"preset": "device1", "seed": 9, "out_dir": "x"}"#).unwrap();
    assert_eq!(code(&wgm(tmp.path(), &["--config", "c.json", "summary"])), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_wgm"))
        .current_dir(tmp.path())
        .env("WGM_CONFIG", "c.json")
        .args(["--out", "y", "summary"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (x, y) = (json(tmp.path().join("x/summary.json")), json(tmp.path().join("y/summary.json")));
    assert_eq!(x["seed"], 9);
    assert_eq!(x["fsr_GHz"], y["fsr_GHz"]);
    assert_ne!(x["config_sha256"], y["config_sha256"]);
}
