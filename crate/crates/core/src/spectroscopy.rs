//! Synthetic laser-scan transmission traces.
//!
//! Each line is an independent loss channel, so dips multiply. Noise is
//! additive white Gaussian noise drawn from a ChaCha8 generator seeded with
//! the trace seed; samples are drawn in grid order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::geometry::SpheroidGeometry;
use crate::material::OpticalMaterial;
use crate::mode::{ModeLine, Polarization};
use crate::modes::{spectrum_window, ModeFilter};
use crate::scalar::Real;
use crate::tuning::{
    strain_from_voltage, thermal_shift, tuned_frequency_shift, tuning_slope, ActuatorAssembly,
    ThermalState,
};

/// Laser sweep: start in THz, span in GHz, linewidth in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserScan<T> {
    pub start_frequency: T,
    pub span: T,
    pub points: usize,
    #[serde(default)]
    pub laser_linewidth: T,
}

impl<T: Real> LaserScan<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_frequency > T::zero()) {
            return Err(WgmError::invalid("scan.start_frequency", "must be positive"));
        }
        if !(self.span > T::zero()) {
            return Err(WgmError::invalid("scan.span", "must be positive"));
        }
        if self.points < 2 {
            return Err(WgmError::invalid("scan.points", "need at least 2 points"));
        }
        if !(self.laser_linewidth >= T::zero()) {
            return Err(WgmError::invalid("scan.laser_linewidth", "must be non-negative"));
        }
        Ok(())
    }

    /// Grid step, THz.
    pub fn step(&self) -> T {
        self.span / T::lit(1000.0) / T::from_usize_lossy(self.points - 1)
    }

    pub fn end_frequency(&self) -> T {
        self.start_frequency + self.span / T::lit(1000.0)
    }

    pub fn frequencies(&self) -> Vec<T> {
        let step = self.step();
        (0..self.points)
            .map(|i| self.start_frequency + step * T::from_usize_lossy(i))
            .collect()
    }
}

/// Acquisition conditions recorded with a trace.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMetadata<T> {
    pub voltage: T,
    pub delta_t: T,
    pub seed: u64,
    /// Any further `key=value` pairs, kept verbatim.
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

/// Transmission sampled on a uniform, increasing frequency grid (THz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTrace<T> {
    pub frequencies: Vec<T>,
    pub transmission: Vec<T>,
    pub metadata: TraceMetadata<T>,
}

impl<T: Real> TransmissionTrace<T> {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Grid step (THz); zero for fewer than two samples.
    pub fn step(&self) -> T {
        let n = self.len();
        if n < 2 {
            return T::zero();
        }
        (self.frequencies[n - 1] - self.frequencies[0]) / T::from_usize_lossy(n - 1)
    }

    /// Checks equal lengths and a strictly increasing, uniform grid.
    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.transmission.len() {
            return Err(WgmError::invalid("trace", "frequency and transmission lengths differ"));
        }
        if self.len() < 2 {
            return Err(WgmError::invalid("trace", "need at least two samples"));
        }
        let step = self.step();
        if !(step > T::zero()) {
            return Err(WgmError::invalid("trace.frequencies", "grid must be strictly increasing"));
        }
        let tol = step * T::lit(1e-3) + self.frequencies[self.len() - 1] * T::epsilon() * T::lit(4.0);
        for (i, w) in self.frequencies.windows(2).enumerate() {
            let d = w[1] - w[0];
            if !(d > T::zero()) || (d - step).abs() > tol {
                return Err(WgmError::invalid(
                    "trace.frequencies",
                    format!("grid not uniform at row {}", i + 1),
                ));
            }
        }
        if self.transmission.iter().any(|t| !t.is_finite()) {
            return Err(WgmError::invalid("trace.transmission", "non-finite value"));
        }
        Ok(())
    }
}

/// `T(f) = 1 - depth (γ/2)² / ((f - f₀)² + (γ/2)²)` with `γ = f₀ / Q`.
pub fn lorentzian_transmission<T: Real>(f: T, line: &ModeLine<T>) -> T {
    dip(f, line.frequency, line.linewidth(), line.depth)
}

fn dip<T: Real>(f: T, f0: T, gamma: T, depth: T) -> T {
    let h = gamma * T::lit(0.5);
    let d = f - f0;
    // the ratio is at most 1 after rounding, which keeps T within [1 - depth, 1]
    T::one() - depth * (h * h / (d * d + h * h))
}

/// Noise and drift applied while synthesizing a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConditions<T> {
    pub noise_rms: T,
    /// Line-centre drift, GHz/s.
    #[serde(default)]
    pub drift: T,
    /// Time to sweep the full span, s.
    #[serde(default)]
    pub scan_duration: T,
    /// Time elapsed before this scan started, s.
    #[serde(default)]
    pub time_offset: T,
}

impl<T: Real> Default for TraceConditions<T> {
    fn default() -> Self {
        TraceConditions {
            noise_rms: T::zero(),
            drift: T::zero(),
            scan_duration: T::one(),
            time_offset: T::zero(),
        }
    }
}

impl<T: Real> TraceConditions<T> {
    pub fn noiseless() -> Self {
        Self::default()
    }
}

/// Dip width and depth after folding in the laser line (MHz). A Lorentzian
/// laser line only matters once it exceeds a tenth of the mode width.
fn effective_dip<T: Real>(line: &ModeLine<T>, laser_linewidth_mhz: T) -> (T, T) {
    let gamma = line.linewidth();
    let laser = laser_linewidth_mhz * T::lit(1e-6);
    if laser > gamma * T::lit(0.1) {
        (gamma + laser, line.depth * gamma / (gamma + laser))
    } else {
        (gamma, line.depth)
    }
}

/// Transmission seen by a laser sweeping `scan` across `spectrum`.
pub fn synthesize_trace<T: Real>(
    spectrum: &[ModeLine<T>],
    scan: &LaserScan<T>,
    conditions: &TraceConditions<T>,
    seed: u64,
) -> Result<TransmissionTrace<T>> {
    scan.validate()?;
    if !(conditions.noise_rms >= T::zero()) {
        return Err(WgmError::invalid("noise_rms", "must be non-negative"));
    }
    for line in spectrum {
        line.validate()?;
    }
    let frequencies = scan.frequencies();
    let dips: Vec<(T, T, T)> = spectrum
        .iter()
        .map(|l| {
            let (g, d) = effective_dip(l, scan.laser_linewidth);
            (l.frequency, g, d)
        })
        .collect();
    let last = T::from_usize_lossy(scan.points - 1);
    let ghz = T::lit(1e-3);
    let mut transmission: Vec<T> = frequencies
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let t = conditions.time_offset + conditions.scan_duration * T::from_usize_lossy(i) / last;
            let shift = conditions.drift * t * ghz;
            dips.iter()
                .fold(T::one(), |acc, &(f0, g, d)| acc * dip(f, f0 + shift, g, d))
        })
        .collect();
    if conditions.noise_rms > T::zero() {
        let normal = Normal::new(0.0, conditions.noise_rms.to_f64_lossy())
            .map_err(|e| WgmError::invalid("noise_rms", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in transmission.iter_mut() {
            *t = *t + T::lit(normal.sample(&mut rng));
        }
    }
    Ok(TransmissionTrace {
        frequencies,
        transmission,
        metadata: TraceMetadata {
            seed,
            ..TraceMetadata::default()
        },
    })
}

/// Options of a voltage sweep beyond the scan itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions<T> {
    pub filter: ModeFilter<T>,
    pub conditions: TraceConditions<T>,
    #[serde(default)]
    pub delta_t: T,
    /// Trace `i` uses seed `seed + i`.
    pub seed: u64,
}

/// Unstrained lines that can enter the scan window anywhere in the sweep.
pub fn sweep_spectrum<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
    scan: &LaserScan<T>,
    voltages: &[T],
    options: &SweepOptions<T>,
) -> Result<Vec<ModeLine<T>>> {
    let slope = tuning_slope(geometry, material, assembly, Polarization::TE)?
        .abs()
        .max(tuning_slope(geometry, material, assembly, Polarization::TM)?.abs());
    let v_max = voltages.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let ghz = T::lit(1e-3);
    let drift = (options.conditions.drift
        * (options.conditions.time_offset
            + options.conditions.scan_duration * T::from_usize_lossy(voltages.len().max(1))))
    .abs();
    let thermal = T::lit(3.0) * options.delta_t.abs();
    // margin for tuning, drift, temperature, and a few linewidths of wing
    let margin = (slope * v_max + drift + thermal) * ghz * T::lit(1.05) + scan.span * ghz * T::lit(0.02);
    let lo = scan.start_frequency - margin;
    let hi = scan.end_frequency() + margin;
    spectrum_window(geometry, material, lo, hi, &options.filter)
}

/// One trace per voltage, all on the grid of `scan`.
///
/// Lines are shifted by the strain at each voltage and by `delta_t`; drift
/// accumulates over consecutive scans.
pub fn voltage_sweep_experiment<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
    scan: &LaserScan<T>,
    voltages: &[T],
    options: &SweepOptions<T>,
) -> Result<Vec<TransmissionTrace<T>>> {
    let base = sweep_spectrum(geometry, material, assembly, scan, voltages, options)?;
    sweep_traces(&base, material, assembly, scan, voltages, options)
}

/// [`voltage_sweep_experiment`] on an explicit unstrained line list.
pub fn sweep_traces<T: Real>(
    base: &[ModeLine<T>],
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
    scan: &LaserScan<T>,
    voltages: &[T],
    options: &SweepOptions<T>,
) -> Result<Vec<TransmissionTrace<T>>> {
    let thermal = ThermalState {
        delta_t: options.delta_t,
    };
    voltages
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let strain = strain_from_voltage(assembly, material, v)?;
            let lines = base
                .iter()
                .map(|line| {
                    let shift = tuned_frequency_shift(line, &strain) + thermal_shift(line, &thermal, material)?;
                    Ok(ModeLine {
                        frequency: line.frequency + shift * T::lit(1e-3),
                        ..*line
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut conditions = options.conditions;
            conditions.time_offset = conditions.time_offset + conditions.scan_duration * T::from_usize_lossy(i);
            let seed = options.seed.wrapping_add(i as u64);
            let mut trace = synthesize_trace(&lines, scan, &conditions, seed)?;
            trace.metadata.voltage = v;
            trace.metadata.delta_t = options.delta_t;
            Ok(trace)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::ModeId;

    fn line(f: f64, q: f64, depth: f64) -> ModeLine<f64> {
        ModeLine {
            mode: ModeId::equatorial(1, 443, Polarization::TE),
            frequency: f,
            loaded_q: q,
            depth,
        }
    }

    #[test]
    fn lorentzian_landmarks() {
        // binary-exact numbers: f₀ = 1, γ = 1/4
        let l = line(1.0, 4.0, 0.3);
        assert_eq!(lorentzian_transmission(1.0, &l), 1.0 - 0.3);
        assert_eq!(lorentzian_transmission(1.125, &l), 1.0 - 0.15);
        assert_eq!(lorentzian_transmission(0.875, &l), 1.0 - 0.15);
        let l = line(375.0, 1e9, 0.3);
        let half = lorentzian_transmission(375.0 + l.linewidth() / 2.0, &l);
        assert!((half - 0.85).abs() < 1e-7);
    }

    #[test]
    fn empty_spectrum_is_flat() {
        let scan = LaserScan { start_frequency: 375.0, span: 30.0, points: 101, laser_linewidth: 0.0 };
        let t = synthesize_trace::<f64>(&[], &scan, &TraceConditions::noiseless(), 1).unwrap();
        assert!(t.transmission.iter().all(|&v| v == 1.0));
        t.validate().unwrap();
    }

    #[test]
    fn single_line_matches_analytic_profile() {
        let scan = LaserScan { start_frequency: 374.999, span: 2.0, points: 2001, laser_linewidth: 0.0 };
        let l = line(375.0, 1e7, 0.4);
        let t = synthesize_trace(&[l], &scan, &TraceConditions::noiseless(), 0).unwrap();
        for (f, v) in t.frequencies.iter().zip(&t.transmission) {
            assert!((v - lorentzian_transmission(*f, &l)).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let scan = LaserScan { start_frequency: 375.0, span: 1.0, points: 500, laser_linewidth: 0.0 };
        let c = TraceConditions { noise_rms: 1e-3, ..TraceConditions::default() };
        let a = synthesize_trace(&[line(375.0005, 1e7, 0.3)], &scan, &c, 7).unwrap();
        let b = synthesize_trace(&[line(375.0005, 1e7, 0.3)], &scan, &c, 7).unwrap();
        let d = synthesize_trace(&[line(375.0005, 1e7, 0.3)], &scan, &c, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.transmission, d.transmission);
        let clean = synthesize_trace(&[line(375.0005, 1e7, 0.3)], &scan, &TraceConditions::noiseless(), 7).unwrap();
        let resid: Vec<f64> = a.transmission.iter().zip(&clean.transmission).map(|(x, y)| x - y).collect();
        let mean = resid.iter().sum::<f64>() / 500.0;
        let rms = (resid.iter().map(|r| r * r).sum::<f64>() / 500.0).sqrt();
        assert!(mean.abs() < 2e-4);
        assert!((rms - 1e-3).abs() < 1.5e-4);
    }

    #[test]
    fn broad_laser_widens_and_shallows() {
        let l = line(375.0, 1e9, 0.3);
        let (g, d) = effective_dip(&l, 0.3);
        assert!((g - l.linewidth() - 0.3e-6).abs() < 1e-15);
        assert!(d < 0.3);
        let (g, d) = effective_dip(&l, 0.03);
        assert_eq!((g, d), (l.linewidth(), 0.3));
    }

    #[test]
    fn drift_moves_the_dip_by_drift_times_arrival() {
        let scan = LaserScan { start_frequency: 374.999, span: 2.0, points: 20001, laser_linewidth: 0.0 };
        let c = TraceConditions { noise_rms: 0.0, drift: 0.02, scan_duration: 10.0, time_offset: 0.0 };
        let t = synthesize_trace(&[line(375.0, 1e7, 0.3)], &scan, &c, 0).unwrap();
        let (imin, _) = t
            .transmission
            .iter()
            .enumerate()
            .fold((0, f64::MAX), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
        let seen = t.frequencies[imin];
        // the laser (0.2 GHz/s from 1 GHz below) meets the line at t = 1 / (0.2 - 0.02) s
        let t_hit = 1.0 / (0.2 - 0.02);
        let expect = 375.0 + 0.02 * t_hit * 1e-3;
        assert!((seen - expect).abs() < 2.0 * scan.step() + 1e-6, "{seen} vs {expect}");
    }

    #[test]
    fn noiseless_trace_stays_within_unit_interval() {
        let scan = LaserScan { start_frequency: 374.999, span: 2.0, points: 4001, laser_linewidth: 0.0 };
        let lines = [line(375.0, 1e7, 0.9), line(375.0000001, 1e7, 0.9)];
        let t = synthesize_trace(&lines, &scan, &TraceConditions::noiseless(), 0).unwrap();
        assert!(t.transmission.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
