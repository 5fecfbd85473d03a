//! Run configuration: named device presets with JSON overrides.
//!
//! A user file is merged key by key over a preset (`device2` unless the file
//! or the caller names another). `material` may be a profile name, or an
//! object with a `profile` key plus field overrides. The merged document is
//! then deserialized and every section validated.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analysis::{AssignOptions, CalibrateOptions};
use crate::error::WgmError;
use crate::geometry::SpheroidGeometry;
use crate::material::OpticalMaterial;
use crate::modes::ModeFilter;
use crate::spectroscopy::{LaserScan, SweepOptions, TraceConditions};
use crate::tuning::{ActuatorAssembly, MAX_DELTA_T};

pub const DEFAULT_PRESET: &str = "device2";
pub const PRESETS: [&str; 2] = ["device1", "device2"];
pub const MATERIAL_PROFILES: [&str; 1] = ["fused_silica"];

fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "device1" => Some(include_str!("../presets/device1.json")),
        "device2" => Some(include_str!("../presets/device2.json")),
        _ => None,
    }
}

fn material_profile(name: &str) -> Option<OpticalMaterial<f64>> {
    match name {
        "fused_silica" => Some(OpticalMaterial::fused_silica()),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown preset `{0}` (known: device1, device2)")]
    UnknownPreset(String),
    #[error("unknown material profile `{0}` (known: fused_silica)")]
    UnknownProfile(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] WgmError),
}

/// Voltage grid: an explicit list or an inclusive `start..=stop` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VoltageGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl VoltageGrid {
    pub fn points(&self) -> Result<Vec<f64>, WgmError> {
        let v = match self {
            VoltageGrid::List(v) => v.clone(),
            VoltageGrid::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Err(WgmError::invalid("voltages.step", "range needs finite bounds and step > 0"));
                }
                if stop < start {
                    Vec::new()
                } else {
                    let n = ((stop - start) / step + 1e-9).floor() as usize;
                    (0..=n).map(|i| start + step * i as f64).collect()
                }
            }
        };
        if v.is_empty() {
            return Err(WgmError::invalid("voltages", "empty voltage grid"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(WgmError::invalid("voltages", "non-finite voltage"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Minimum relative dip depth for detection.
    pub prominence: f64,
    #[serde(default)]
    pub assign: AssignOptions<f64>,
    #[serde(default)]
    pub calibrate: CalibrateOptions<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    #[serde(default)]
    pub provenance: Vec<String>,
    pub material: OpticalMaterial<f64>,
    pub geometry: SpheroidGeometry<f64>,
    pub assembly: ActuatorAssembly<f64>,
    /// Spectrum window, THz.
    pub window: [f64; 2],
    pub filter: ModeFilter<f64>,
    pub scan: LaserScan<f64>,
    pub conditions: TraceConditions<f64>,
    pub voltages: VoltageGrid,
    /// Temperature offset, K.
    pub delta_t: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub analysis: AnalysisConfig,
}

/// Recursive merge; objects merge key by key, anything else replaces.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Expands a material given as a profile name or `{ "profile": .., ..}`.
/// Returns `None` when the value names no profile.
fn expand_material(v: &Value) -> Result<Option<Value>, ConfigError> {
    let (name, rest) = match v {
        Value::String(s) => (s.clone(), Map::new()),
        Value::Object(o) => match o.get("profile") {
            Some(Value::String(s)) => {
                let mut rest = o.clone();
                rest.remove("profile");
                (s.clone(), rest)
            }
            Some(_) => {
                return Err(ConfigError::Field {
                    path: "material.profile".into(),
                    message: "expected a profile name".into(),
                })
            }
            None => return Ok(None),
        },
        _ => return Ok(None),
    };
    let profile = material_profile(&name).ok_or(ConfigError::UnknownProfile(name))?;
    let mut out = serde_json::to_value(profile).expect("material serializes");
    merge(&mut out, Value::Object(rest));
    Ok(Some(out))
}

fn parse_json(text: &str) -> Result<Value, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Sets `value` at a dotted `path`, creating objects on the way.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        if key.is_empty() {
            return Err(ConfigError::Field { path: path.into(), message: "empty key".into() });
        }
        let obj = match cur {
            Value::Object(o) => o,
            _ => {
                return Err(ConfigError::Field {
                    path: parts[..i].join("."),
                    message: "not an object".into(),
                })
            }
        };
        if i + 1 == parts.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*key).to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

impl RunConfig {
    /// The named preset with no overrides.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::load(None, Some(name), &[])
    }

    /// Builds a configuration from an optional user JSON document.
    ///
    /// The preset is `preset` if given, else the document's `preset` key, else
    /// `device2`. `overrides` are dotted paths set after merging, e.g.
    /// `("seed", 7)` or `("scan.points", 4001)`; a `preset` override selects
    /// the preset and takes precedence over `preset`.
    pub fn load(user: Option<&str>, preset: Option<&str>, overrides: &[(String, Value)]) -> Result<Self, ConfigError> {
        let user = match user {
            Some(text) => parse_json(text)?,
            None => Value::Object(Map::new()),
        };
        if !user.is_object() {
            return Err(ConfigError::Field { path: "<root>".into(), message: "expected a JSON object".into() });
        }
        let overridden = overrides.iter().rev().find(|(p, _)| p == "preset").map(|(_, v)| v);
        let preset = match overridden {
            Some(Value::String(p)) => Some(p.as_str()),
            Some(_) => {
                return Err(ConfigError::Field { path: "preset".into(), message: "expected a preset name".into() })
            }
            None => preset,
        };
        let name = match (preset, user.get("preset")) {
            (Some(p), _) => p.to_string(),
            (None, Some(Value::String(p))) => p.clone(),
            (None, Some(_)) => {
                return Err(ConfigError::Field { path: "preset".into(), message: "expected a preset name".into() })
            }
            (None, None) => DEFAULT_PRESET.to_string(),
        };
        let source = preset_source(&name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
        let mut doc = parse_json(source).expect("bundled presets are valid JSON");
        if let Some(m) = doc.get("material").map(expand_material).transpose()?.flatten() {
            doc["material"] = m;
        }
        let mut user = user;
        if let Some(m) = user.get("material").map(expand_material).transpose()?.flatten() {
            // a named profile replaces the preset's material outright
            doc["material"] = m;
            if let Value::Object(o) = &mut user {
                o.remove("material");
            }
        }
        merge(&mut doc, user);
        doc["preset"] = Value::String(name);
        for (path, value) in overrides.iter().filter(|(p, _)| p != "preset") {
            set_path(&mut doc, path, value.clone())?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(&doc).map_err(|e| ConfigError::Field {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section; the voltage grid must be non-empty.
    pub fn validate(&self) -> Result<(), WgmError> {
        self.material.validate()?;
        self.geometry.validate()?;
        self.assembly.validate()?;
        self.scan.validate()?;
        let [lo, hi] = self.window;
        if !(lo > 0.0 && lo < hi) {
            return Err(WgmError::invalid("window", "needs 0 < lo < hi (THz)"));
        }
        let f = &self.filter;
        if !(f.loaded_q > 0.0) || !(0.0..=1.0).contains(&f.depth) {
            return Err(WgmError::invalid("filter", "needs loaded_q > 0 and depth in [0, 1]"));
        }
        let c = &self.conditions;
        if !(c.noise_rms >= 0.0) || !(c.scan_duration >= 0.0) || !c.drift.is_finite() || !c.time_offset.is_finite() {
            return Err(WgmError::invalid("conditions", "noise and duration must be non-negative, drift finite"));
        }
        if !(self.delta_t.abs() <= MAX_DELTA_T) {
            return Err(WgmError::invalid("delta_t", format!("must lie within ±{MAX_DELTA_T} K")));
        }
        let p = self.analysis.prominence;
        if !(p > 0.0 && p < 1.0) {
            return Err(WgmError::invalid("analysis.prominence", "must lie in (0, 1)"));
        }
        self.analysis.assign.validate()?;
        if !(self.analysis.calibrate.gate_ghz > 0.0) {
            return Err(WgmError::invalid("analysis.calibrate.gate_ghz", "must be positive"));
        }
        self.voltages.points()?;
        Ok(())
    }

    pub fn voltage_points(&self) -> Vec<f64> {
        self.voltages.points().expect("validated on load")
    }

    pub fn sweep_options(&self) -> SweepOptions<f64> {
        SweepOptions {
            filter: self.filter.clone(),
            conditions: self.conditions,
            delta_t: self.delta_t,
            seed: self.seed,
        }
    }

    /// Compact JSON with a fixed field order; identical configs give identical text.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
