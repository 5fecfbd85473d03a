//! Strain calibration from a voltage sweep of traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_trace, DipFit};
use super::slope::{classify_slope, fit_tuning_slope, PolarizationGuess, SlopeFit};
use super::{AnalysisError, AnalysisResult};
use crate::error::WgmError;
use crate::material::OpticalMaterial;
use crate::mode::Polarization;
use crate::scalar::Real;
use crate::spectroscopy::TransmissionTrace;
use crate::tuning::strain_tuning_coefficient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct CalibrateOptions<T> {
    pub prominence: T,
    /// Largest distance (GHz) between a predicted and an observed centre.
    pub gate_ghz: T,
    /// Slope (GHz/V) used to predict a track's next position before it has
    /// two points of its own.
    pub prior_slope: T,
    /// Tracks with fewer points are not slope-fitted.
    pub min_track_points: usize,
}

impl<T: Real> Default for CalibrateOptions<T> {
    fn default() -> Self {
        CalibrateOptions {
            prominence: T::lit(0.05),
            gate_ghz: T::lit(30.0),
            prior_slope: T::zero(),
            min_track_points: 3,
        }
    }
}

/// One dip followed across voltages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track<T> {
    /// `(voltage V, centre THz)` in sweep order.
    pub points: Vec<(T, T)>,
    pub fits: Vec<DipFit<T>>,
    pub slope: Option<SlopeFit<T>>,
    /// The track ended before the last voltage.
    pub lost: bool,
}

impl<T: Real> Track<T> {
    fn predicted(&self, voltage: T, prior_slope: T) -> T {
        let (v1, c1) = self.points[self.points.len() - 1];
        let slope = if self.points.len() >= 2 {
            let (v0, c0) = self.points[self.points.len() - 2];
            if v1 != v0 {
                (c1 - c0) / (v1 - v0)
            } else {
                prior_slope / T::lit(1000.0)
            }
        } else {
            prior_slope / T::lit(1000.0)
        };
        c1 + slope * (voltage - v1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    /// Axial strain per volt.
    pub strain_per_volt: T,
    /// GHz/V
    pub slope_te: T,
    /// GHz/V, absent if no track was classified TM.
    pub slope_tm: Option<T>,
    pub ratio: Option<T>,
    pub tracks: Vec<Track<T>>,
    pub warnings: Vec<String>,
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + *x) / T::from_usize_lossy(v.len())
}

/// Fits every trace, follows dips across voltages by nearest neighbour to
/// their predicted positions, fits a slope per track, and inverts the TE slope
/// through the photoelastic model to a strain per volt.
///
/// The smallest-magnitude track slope is the TE reference; tracks are then
/// classified against it. Lost tracks and failed fits are reported as
/// warnings rather than errors.
pub fn calibrate_device<T: Real>(
    traces: &[TransmissionTrace<T>],
    material: &OpticalMaterial<T>,
    options: &CalibrateOptions<T>,
) -> AnalysisResult<Calibration<T>> {
    material.validate()?;
    if !(options.gate_ghz > T::zero()) {
        return Err(WgmError::invalid("calibrate.gate_ghz", "must be positive").into());
    }
    let mut voltages: Vec<T> = traces.iter().map(|t| t.metadata.voltage).collect();
    if voltages.iter().any(|v| !v.is_finite()) {
        return Err(WgmError::invalid("trace voltage", "must be finite").into());
    }
    voltages.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    voltages.dedup();
    if voltages.len() < 3 {
        return Err(WgmError::domain(format!(
            "calibration needs at least 3 distinct voltages, got {}",
            voltages.len()
        ))
        .into());
    }

    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| {
        traces[a]
            .metadata
            .voltage
            .partial_cmp(&traces[b].metadata.voltage)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let fitted: Vec<AnalysisResult<Vec<_>>> = order
        .par_iter()
        .map(|&i| fit_trace(&traces[i], options.prominence))
        .collect();

    let mut warnings = Vec::new();
    let mut tracks: Vec<Track<T>> = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    let gate = options.gate_ghz / T::lit(1000.0);
    for (&i, result) in order.iter().zip(fitted) {
        let v = traces[i].metadata.voltage;
        let dips: Vec<DipFit<T>> = match result {
            Ok(list) => list
                .into_iter()
                .filter_map(|(w, r)| match r {
                    Ok(f) => Some(f),
                    Err(AnalysisError::NoDip { .. }) => None,
                    Err(e) => {
                        warnings.push(format!("trace {i} ({v} V), samples {}..{}: {e}", w.start, w.end));
                        None
                    }
                })
                .collect(),
            Err(e) => {
                warnings.push(format!("trace {i} ({v} V): {e}"));
                continue;
            }
        };

        // greedy nearest-neighbour matching, closest pairs first
        let mut pairs: Vec<(T, usize, usize)> = Vec::new();
        for (ti, &t) in alive.iter().enumerate() {
            let p = tracks[t].predicted(v, options.prior_slope);
            for (di, d) in dips.iter().enumerate() {
                let dist = (d.center - p).abs();
                if dist <= gate {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut track_used = vec![false; alive.len()];
        let mut dip_used = vec![false; dips.len()];
        for (_, ti, di) in pairs {
            if track_used[ti] || dip_used[di] {
                continue;
            }
            track_used[ti] = true;
            dip_used[di] = true;
            let t = &mut tracks[alive[ti]];
            t.points.push((v, dips[di].center));
            t.fits.push(dips[di]);
        }
        let mut next_alive = Vec::new();
        for (ti, &t) in alive.iter().enumerate() {
            if track_used[ti] {
                next_alive.push(t);
            } else {
                tracks[t].lost = true;
                let (lv, lc) = tracks[t].points[tracks[t].points.len() - 1];
                warnings.push(format!("track {t} lost after {lv} V (last centre {lc} THz)"));
            }
        }
        for (di, d) in dips.iter().enumerate() {
            if !dip_used[di] {
                next_alive.push(tracks.len());
                tracks.push(Track { points: vec![(v, d.center)], fits: vec![*d], slope: None, lost: false });
            }
        }
        alive = next_alive;
    }

    for (k, t) in tracks.iter_mut().enumerate() {
        if t.points.len() < options.min_track_points.max(3) {
            continue;
        }
        match fit_tuning_slope(&t.points, None) {
            Ok(s) => t.slope = Some(s),
            Err(e) => warnings.push(format!("track {k}: {e}")),
        }
    }
    let te_ref = tracks
        .iter()
        .filter_map(|t| t.slope.map(|s| s.slope))
        .filter(|s| *s != T::zero())
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| WgmError::domain("no track spans enough voltages for a slope fit"))?;

    let mut te = Vec::new();
    let mut tm = Vec::new();
    let mut te_centers = Vec::new();
    for t in tracks.iter_mut() {
        if let Some(s) = t.slope.as_mut() {
            s.polarization_guess = classify_slope(s.slope, te_ref);
            match s.polarization_guess {
                PolarizationGuess::TE => {
                    te.push(s.slope);
                    te_centers.extend(t.points.iter().map(|p| p.1));
                }
                PolarizationGuess::TM => tm.push(s.slope),
                PolarizationGuess::Unknown => {}
            }
        }
    }
    let slope_te = mean(&te);
    let slope_tm = (!tm.is_empty()).then(|| mean(&tm));
    let nu_ghz = mean(&te_centers) * T::lit(1000.0);
    let k_te = strain_tuning_coefficient(material, Polarization::TE)?;
    Ok(Calibration {
        strain_per_volt: slope_te / (nu_ghz * k_te),
        slope_te,
        slope_tm,
        ratio: slope_tm.map(|s| s / slope_te),
        tracks,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{ModeId, ModeLine};
    use crate::spectroscopy::{sweep_traces, LaserScan, SweepOptions, TraceConditions};
    use crate::modes::ModeFilter;
    use crate::tuning::ActuatorAssembly;

    fn assembly() -> ActuatorAssembly<f64> {
        ActuatorAssembly {
            pzt_displacement_per_volt: 0.05,
            voltage_range: [0.0, 50.0],
            compliance_fraction_sphere: 0.5,
            gauge_length: 416.67,
        }
    }

    fn sweep(voltages: &[f64], drift: f64) -> Vec<TransmissionTrace<f64>> {
        let base = [
            ModeLine { mode: ModeId::equatorial(1, 443, Polarization::TE), frequency: 375.0, loaded_q: 1e6, depth: 0.3 },
            ModeLine { mode: ModeId::equatorial(1, 443, Polarization::TM), frequency: 375.1, loaded_q: 1e6, depth: 0.4 },
        ];
        let scan = LaserScan { start_frequency: 374.95, span: 400.0, points: 20001, laser_linewidth: 0.0 };
        let opts = SweepOptions {
            filter: ModeFilter::fundamental(0),
            conditions: TraceConditions { drift, ..TraceConditions::noiseless() },
            delta_t: 0.0,
            seed: 1,
        };
        let mat = OpticalMaterial::fused_silica();
        sweep_traces(&base, &mat, &assembly(), &scan, voltages, &opts).unwrap()
    }

    #[test]
    fn recovers_strain_per_volt() {
        let v: Vec<f64> = (0..9).map(|i| i as f64 * 2.5).collect();
        let mat = OpticalMaterial::fused_silica();
        let cal = calibrate_device(&sweep(&v, 0.0), &mat, &CalibrateOptions::default()).unwrap();
        let truth = assembly().strain_per_volt();
        assert!((cal.strain_per_volt / truth - 1.0).abs() < 1e-3, "{} vs {truth}", cal.strain_per_volt);
        assert!(cal.slope_tm.is_some());
        assert!(cal.warnings.is_empty(), "{:?}", cal.warnings);
    }

    #[test]
    fn slow_drift_leaves_slopes_unchanged() {
        let v: Vec<f64> = (0..9).map(|i| i as f64 * 2.5).collect();
        let mat = OpticalMaterial::fused_silica();
        let a = calibrate_device(&sweep(&v, 0.0), &mat, &CalibrateOptions::default()).unwrap();
        // 10 GHz per day
        let b = calibrate_device(&sweep(&v, 10.0 / 86400.0), &mat, &CalibrateOptions::default()).unwrap();
        assert!((a.slope_te / b.slope_te - 1.0).abs() < 1e-3);
        assert!((a.slope_tm.unwrap() / b.slope_tm.unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn repeated_voltage_is_a_domain_error() {
        let mat = OpticalMaterial::fused_silica();
        let err = calibrate_device(&sweep(&[5.0, 5.0, 5.0, 5.0], 0.0), &mat, &CalibrateOptions::default()).unwrap_err();
        assert!(matches!(err, AnalysisError::Model(WgmError::Domain(_))));
    }
}
