//! One function per subcommand. Each computes everything first and then
//! commits its files, so a failure leaves the output directory untouched.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use wgm_core::analysis::{
    assign_modes, calibrate_device, fit_trace, AnalysisError, DipFit, ModeAssignment,
};
use wgm_core::config::RunConfig;
use wgm_core::io::{
    parse_spectrum, parse_trace, write_spectrum, write_trace, write_tuning_curve, SPECTRUM_MAGIC,
    TRACE_MAGIC,
};
use wgm_core::modes::{
    equatorial_azimuthal_splitting, free_spectral_range, nearest_l, polarization_splitting,
    spectrum_window,
};
use wgm_core::spectroscopy::{voltage_sweep_experiment, TransmissionTrace};
use wgm_core::tuning::{
    elastic_budget, reference_line, strain_required_for_full_fsr, thermal_shift, tuning_curve,
    tuning_slope, ThermalState,
};
use wgm_core::{ModeId, Polarization, WgmError};

use crate::output::{config_hash, envelope, sha256_hex, to_json, Outputs};
use crate::{CliError, Status};

fn model(e: WgmError) -> CliError {
    CliError::Input(e.to_string())
}

fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let hash = sha256_hex(text.as_bytes());
    Ok((text, hash))
}

fn read_trace(path: &Path) -> Result<(TransmissionTrace<f64>, String), CliError> {
    let (text, hash) = read_input(path)?;
    let trace = parse_trace(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((trace, hash))
}

fn report(mut head: serde_json::Map<String, Value>, status: &str, body: Value) -> String {
    head.insert("status".into(), json!(status));
    if let Value::Object(b) = body {
        head.extend(b);
    }
    to_json(&Value::Object(head))
}

pub fn spectrum(cfg: &RunConfig) -> Result<Status, CliError> {
    let [lo, hi] = cfg.window;
    let lines = spectrum_window(&cfg.geometry, &cfg.material, lo, hi, &cfg.filter).map_err(model)?;
    let path = cfg.out_dir.join("spectrum.csv");
    let mut out = Outputs::default();
    out.add(path.clone(), write_spectrum(&lines));
    out.commit()?;
    println!("{} lines in [{lo}, {hi}] THz -> {}", lines.len(), path.display());
    Ok(Status::Complete)
}

pub fn tune_curve(cfg: &RunConfig) -> Result<Status, CliError> {
    let v = cfg.voltage_points();
    let points = tuning_curve(&cfg.material, &cfg.assembly, &v).map_err(model)?;
    let te = tuning_slope(&cfg.geometry, &cfg.material, &cfg.assembly, Polarization::TE).map_err(model)?;
    let tm = tuning_slope(&cfg.geometry, &cfg.material, &cfg.assembly, Polarization::TM).map_err(model)?;
    let series = |name: &str, slope: f64, y: Vec<f64>| {
        json!({ "name": name, "slope_GHz_per_V": slope, "x": v, "y": y })
    };
    let plot = json!({
        "title": "Frequency shift versus PZT voltage",
        "x_label": "PZT voltage (V)",
        "y_label": "frequency shift (GHz)",
        "series": [
            series("TE", te, points.iter().map(|p| p.shift_te).collect()),
            series("TM", tm, points.iter().map(|p| p.shift_tm).collect()),
        ],
        "ratio_TM_TE": tm / te,
        "strain_per_volt": cfg.assembly.strain_per_volt(),
    });
    let mut out = Outputs::default();
    out.add(cfg.out_dir.join("tuning.csv"), write_tuning_curve(&points));
    out.add(cfg.out_dir.join("tuning_plot.json"), report(envelope("tune-curve", cfg, &[]), "ok", plot));
    out.commit()?;
    let last = points.last().expect("grid is non-empty");
    println!(
        "TE {te:.3} GHz/V, TM {tm:.3} GHz/V (ratio {:.3}); at {} V: TE {:.2} GHz, TM {:.2} GHz",
        tm / te,
        last.voltage,
        last.shift_te,
        last.shift_tm
    );
    Ok(Status::Complete)
}

pub fn scan(cfg: &RunConfig) -> Result<Status, CliError> {
    let v = cfg.voltage_points();
    let opts = cfg.sweep_options();
    let mut traces = voltage_sweep_experiment(&cfg.geometry, &cfg.material, &cfg.assembly, &cfg.scan, &v, &opts)
        .map_err(model)?;
    let hash = config_hash(cfg);
    let mut out = Outputs::default();
    let mut files = Vec::new();
    for (i, t) in traces.iter_mut().enumerate() {
        t.metadata.seed = cfg.seed.wrapping_add(i as u64);
        t.metadata.extra.insert("preset".into(), cfg.preset.clone());
        t.metadata.extra.insert("config_sha256".into(), hash.clone());
        t.metadata.extra.insert("index".into(), i.to_string());
        let name = format!("trace_{i:03}.csv");
        files.push(json!({ "file": name, "voltage_V": t.metadata.voltage, "seed": t.metadata.seed }));
        out.add(cfg.out_dir.join(&name), write_trace(t));
    }
    let manifest = json!({ "traces": files });
    out.add(cfg.out_dir.join("scan.json"), report(envelope("scan", cfg, &[]), "ok", manifest));
    out.commit()?;
    println!("{} traces -> {}", traces.len(), cfg.out_dir.display());
    Ok(Status::Complete)
}

fn dip_json(fit: &DipFit<f64>) -> Value {
    let sd = fit.covariance_diag.map(f64::sqrt);
    json!({
        "center_THz": fit.center,
        "loaded_Q": fit.loaded_q,
        "depth": fit.depth,
        "linewidth_MHz": fit.linewidth() * 1e6,
        "residual_rms": fit.residual_rms,
        "sigma_center_THz": sd[0],
        "sigma_Q": sd[1],
        "sigma_depth": sd[2],
        "iterations": fit.iterations,
    })
}

/// Fits one trace. Returns the per-dip JSON, the converged centres and
/// whether any dip failed to converge.
fn fit_one(trace: &TransmissionTrace<f64>, prominence: f64) -> Result<(Vec<Value>, Vec<f64>, bool), CliError> {
    let fitted = fit_trace(trace, prominence).map_err(|e| CliError::Input(e.to_string()))?;
    let mut dips = Vec::new();
    let mut centers = Vec::new();
    let mut failed = false;
    for (w, r) in fitted {
        let mut d = match &r {
            Ok(f) => {
                centers.push(f.center);
                let mut d = dip_json(f);
                d["status"] = json!("ok");
                d
            }
            Err(AnalysisError::NotConverged { last, iterations }) => {
                failed = true;
                let mut d = dip_json(last);
                d["status"] = json!("not_converged");
                d["iterations"] = json!(iterations);
                d
            }
            Err(AnalysisError::NoDip { reason, .. }) => json!({ "status": "no_dip", "message": reason }),
            Err(e) => json!({ "status": "error", "message": e.to_string() }),
        };
        d["samples"] = json!([w.start, w.end]);
        dips.push(d);
    }
    Ok((dips, centers, failed))
}

pub fn fit(cfg: &RunConfig, files: &[PathBuf]) -> Result<Status, CliError> {
    let mut inputs = Vec::new();
    let mut results = Vec::new();
    let mut any_failed = false;
    for path in files {
        let (trace, hash) = read_trace(path)?;
        let (dips, _, failed) = fit_one(&trace, cfg.analysis.prominence)?;
        any_failed |= failed;
        results.push(json!({
            "path": path.display().to_string(),
            "voltage_V": trace.metadata.voltage,
            "delta_t_K": trace.metadata.delta_t,
            "trace_seed": trace.metadata.seed,
            "dips": dips,
        }));
        inputs.push((path.clone(), hash));
    }
    let status = if any_failed { "not_converged" } else { "ok" };
    let path = cfg.out_dir.join("fit_report.json");
    let mut out = Outputs::default();
    out.add(path.clone(), report(envelope("fit", cfg, &inputs), status, json!({ "traces": results })));
    out.commit()?;
    println!("fitted {} traces ({status}) -> {}", files.len(), path.display());
    Ok(if any_failed { Status::Partial } else { Status::Complete })
}

fn assignment_json(a: &ModeAssignment<f64>, centers: &[f64]) -> Value {
    let dips: Vec<Value> = a
        .labels
        .iter()
        .zip(centers)
        .zip(&a.residuals_ghz)
        .map(|((id, c), r)| {
            json!({
                "center_THz": c,
                "label": id.to_string(),
                "q": id.q, "l": id.l, "m": id.m, "pol": id.pol,
                "residual_GHz": r,
            })
        })
        .collect();
    json!({
        "fitted_radius_um": a.fitted_radius,
        "fitted_ellipticity": a.fitted_ellipticity,
        "objective_GHz2": a.objective_value,
        "rms_interval_residual_GHz": a.rms_interval_residual,
        "offset_GHz": a.offset_ghz,
        "dips": dips,
    })
}

pub fn assign(cfg: &RunConfig, file: Option<&Path>, centers: Option<&[f64]>) -> Result<Status, CliError> {
    let mut inputs = Vec::new();
    let mut notes = Vec::new();
    let centers: Vec<f64> = match (file, centers) {
        (_, Some(c)) => c.to_vec(),
        (Some(path), None) => {
            let (text, hash) = read_input(path)?;
            inputs.push((path.to_path_buf(), hash));
            let first = text.lines().next().unwrap_or("").trim();
            let err = |e: wgm_core::io::FormatError| CliError::Input(format!("{}: {e}", path.display()));
            if first == TRACE_MAGIC {
                let trace = parse_trace(&text).map_err(err)?;
                let (_, c, failed) = fit_one(&trace, cfg.analysis.prominence)?;
                if failed {
                    notes.push("some dips did not converge and were left out".to_string());
                }
                c
            } else if first == SPECTRUM_MAGIC {
                parse_spectrum::<f64>(&text).map_err(err)?.iter().map(|l| l.frequency).collect()
            } else {
                return Err(CliError::Input(format!(
                    "{}: expected a `{TRACE_MAGIC}` or `{SPECTRUM_MAGIC}` file",
                    path.display()
                )));
            }
        }
        (None, None) => return Err(CliError::Input("assign needs a file or --centers".into())),
    };
    let result = assign_modes(&centers, &cfg.geometry, &cfg.material, &cfg.analysis.assign);
    let head = envelope("assign", cfg, &inputs);
    let path = cfg.out_dir.join("assign_report.json");
    let (text, status) = match result {
        Ok(a) => {
            println!(
                "a = {:.4} um, eps = {:.4}, rms {:.3} GHz: {}",
                a.fitted_radius,
                a.fitted_ellipticity,
                a.rms_interval_residual,
                a.labels.iter().map(ModeId::to_string).collect::<Vec<_>>().join(", ")
            );
            let mut body = json!({ "assignment": assignment_json(&a, &centers), "notes": notes });
            body["centers_THz"] = json!(centers);
            (report(head, "assigned", body), Status::Complete)
        }
        Err(AnalysisError::Unassigned { best_rms_ghz, candidates }) => {
            println!("unassigned: best rms {best_rms_ghz:.3} GHz");
            let body = json!({
                "best_rms_GHz": best_rms_ghz,
                "centers_THz": centers,
                "candidates": candidates.iter().map(|c| assignment_json(c, &centers)).collect::<Vec<_>>(),
                "notes": notes,
            });
            (report(head, "unassigned", body), Status::Partial)
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let mut out = Outputs::default();
    out.add(path, text);
    out.commit()?;
    Ok(status)
}

pub fn calibrate(cfg: &RunConfig, files: &[PathBuf]) -> Result<Status, CliError> {
    let mut inputs = Vec::new();
    let mut traces = Vec::new();
    for path in files {
        let (t, hash) = read_trace(path)?;
        traces.push(t);
        inputs.push((path.clone(), hash));
    }
    let mut opts = cfg.analysis.calibrate.clone();
    opts.prominence = cfg.analysis.prominence;
    let cal = calibrate_device(&traces, &cfg.material, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    let body = json!({
        "strain_per_volt": cal.strain_per_volt,
        "slope_TE_GHz_per_V": cal.slope_te,
        "slope_TM_GHz_per_V": cal.slope_tm,
        "ratio_TM_TE": cal.ratio,
        "displacement_um_per_10V": cal.strain_per_volt * 10.0 * cfg.assembly.gauge_length,
        "model_strain_per_volt": cfg.assembly.strain_per_volt(),
        "warnings": cal.warnings,
        "tracks": cal.tracks,
    });
    let path = cfg.out_dir.join("calibration_report.json");
    let mut out = Outputs::default();
    out.add(path.clone(), report(envelope("calibrate", cfg, &inputs), "ok", body));
    out.commit()?;
    println!(
        "strain/V = {:.4e}, TE {:.3} GHz/V, TM {} -> {}",
        cal.strain_per_volt,
        cal.slope_te,
        cal.slope_tm.map_or("n/a".into(), |s| format!("{s:.3} GHz/V")),
        path.display()
    );
    Ok(Status::Complete)
}

pub fn summary(cfg: &RunConfig) -> Result<Status, CliError> {
    let (g, m, a) = (&cfg.geometry, &cfg.material, &cfg.assembly);
    let lambda = m.reference_wavelength;
    let fsr = free_spectral_range(g, m, lambda).map_err(model)?;
    let dp = polarization_splitting(g, m, lambda).map_err(model)?;
    let dm = equatorial_azimuthal_splitting(g, m, lambda).map_err(model)?;
    let te_line = reference_line(m, Polarization::TE);
    let thermal = thermal_shift(&te_line, &ThermalState { delta_t: 1.0 }, m).map_err(model)?;
    let te = tuning_slope(g, m, a, Polarization::TE).map_err(model)?;
    let tm = tuning_slope(g, m, a, Polarization::TM).map_err(model)?;
    let budget = elastic_budget(g, m, a).map_err(model)?;
    let l = nearest_l(g, m, 1, Polarization::TE, te_line.frequency).map_err(model)?;
    let full = strain_required_for_full_fsr(g, m, ModeId::equatorial(1, l, Polarization::TE)).map_err(model)?;
    let body = json!({
        "wavelength_um": lambda,
        "fsr_GHz": fsr,
        "polarization_splitting_GHz": dp,
        "azimuthal_splitting_GHz": dm,
        "thermal_shift_GHz_per_K": thermal,
        "slope_TE_GHz_per_V": te,
        "slope_TM_GHz_per_V": tm,
        "ratio_TM_TE": tm / te,
        "strain_per_volt": a.strain_per_volt(),
        "elastic_budget": budget,
        "full_fsr": { "l": l, "strain": full },
    });
    let mut out = Outputs::default();
    out.add(cfg.out_dir.join("summary.json"), report(envelope("summary", cfg, &[]), "ok", body));
    out.commit()?;
    println!(
        "FSR {fsr:.1} GHz, Delta_P {dp:.1} GHz, Delta_m {dm:.1} GHz, {thermal:.2} GHz/K, TE {te:.2} / TM {tm:.2} GHz/V, budget {:.1} GHz ({:.2} FSR)",
        budget.max_shift_te, budget.fsr_fraction
    );
    Ok(Status::Complete)
}
