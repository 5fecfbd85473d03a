//! Lorentzian dip fitting.
//!
//! Three parameters (centre, half-width, depth) are fitted by
//! Levenberg–Marquardt on a local, scaled frequency axis. The baseline is not
//! fitted: a single dip uses the trace median, and [`fit_trace`] refines each
//! dip against the product of the other fitted dips.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{detect_dips, median, MIN_WINDOW};
use super::{AnalysisError, AnalysisResult};
use crate::error::WgmError;
use crate::numeric::{invert3, solve3};
use crate::scalar::Real;
use crate::spectroscopy::TransmissionTrace;

pub const MAX_ITERATIONS: usize = 100;
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Initial depth must exceed this many noise standard deviations.
const MIN_SNR: f64 = 8.0;
const REFINE_PASSES: usize = 2;

/// Fitted dip: centre in THz, loaded Q, depth, rms residual in transmission
/// units and the variances of `(center, loaded_q, depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipFit<T> {
    pub center: T,
    pub loaded_q: T,
    pub depth: T,
    pub residual_rms: T,
    pub covariance_diag: [T; 3],
    pub iterations: usize,
}

impl<T: Real> DipFit<T> {
    /// Full width at half depth, THz.
    pub fn linewidth(&self) -> T {
        self.center / self.loaded_q
    }

    fn to_f64(self) -> DipFit<f64> {
        DipFit {
            center: self.center.to_f64_lossy(),
            loaded_q: self.loaded_q.to_f64_lossy(),
            depth: self.depth.to_f64_lossy(),
            residual_rms: self.residual_rms.to_f64_lossy(),
            covariance_diag: self.covariance_diag.map(|v| v.to_f64_lossy()),
            iterations: self.iterations,
        }
    }

    /// Multiplicative dip profile at `f`.
    pub fn profile(&self, f: T) -> T {
        let h = self.linewidth() * T::lit(0.5);
        let d = f - self.center;
        T::one() - self.depth * h * h / (d * d + h * h)
    }
}

/// Robust white-noise estimate from the median absolute deviation of first
/// differences.
pub fn noise_estimate<T: Real>(values: &[T]) -> T {
    if values.len() < 3 {
        return T::zero();
    }
    let diffs: Vec<T> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = median(&diffs);
    let dev: Vec<T> = diffs.iter().map(|d| (*d - m).abs()).collect();
    median(&dev) * T::lit(1.482_602_218_505_602) / T::lit(2.0).sqrt()
}

/// Fits one dip in `window`. The baseline starts at the trace median and is
/// then re-levelled against the fitted profile.
pub fn fit_lorentzian<T: Real>(trace: &TransmissionTrace<T>, window: Range<usize>) -> AnalysisResult<DipFit<T>> {
    trace.validate()?;
    let base = median(&trace.transmission);
    let noise = noise_estimate(&trace.transmission);
    let mut fit = fit_window(trace, window.clone(), &vec![base; trace.len()], noise, None)?;
    // the median sits slightly inside the dip's wings; re-level against the fit
    for _ in 0..REFINE_PASSES {
        let ratio: Vec<T> = trace
            .frequencies
            .iter()
            .zip(&trace.transmission)
            .map(|(&f, &y)| y / fit.profile(f))
            .collect();
        let base = median(&ratio);
        fit = fit_window(trace, window.clone(), &vec![base; trace.len()], noise, Some(&fit))?;
    }
    Ok(fit)
}

struct Problem<'a, T> {
    u: Vec<T>,
    y: &'a [T],
    b: &'a [T],
}

impl<T: Real> Problem<'_, T> {
    fn cost(&self, p: [T; 3]) -> T {
        let (u0, hs, d) = (p[0], p[1], p[2]);
        let h2 = hs * hs;
        self.u
            .iter()
            .zip(self.y)
            .zip(self.b)
            .fold(T::zero(), |acc, ((&u, &y), &b)| {
                let x = u - u0;
                let r = y - b * (T::one() - d * h2 / (x * x + h2));
                acc + r * r
            })
    }

    /// Normal equations `JᵀJ` and `Jᵀr` at `p`.
    fn normal(&self, p: [T; 3]) -> ([[T; 3]; 3], [T; 3]) {
        let (u0, hs, d) = (p[0], p[1], p[2]);
        let h2 = hs * hs;
        let two = T::lit(2.0);
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for ((&u, &y), &b) in self.u.iter().zip(self.y).zip(self.b) {
            let x = u - u0;
            let den = x * x + h2;
            let l = h2 / den;
            let r = y - b * (T::one() - d * l);
            let den2 = den * den;
            let j = [
                -b * d * two * x * h2 / den2,
                -b * d * two * hs * x * x / den2,
                -b * l,
            ];
            for i in 0..3 {
                jtr[i] = jtr[i] + j[i] * r;
                for k in 0..3 {
                    jtj[i][k] = jtj[i][k] + j[i] * j[k];
                }
            }
        }
        (jtj, jtr)
    }
}

fn initial_guess<T: Real>(f: &[T], y: &[T], b: &[T], k: usize) -> (T, T) {
    let depth = T::one() - y[k] / b[k];
    let level = T::one() - depth * T::lit(0.5);
    let cross = |j0: usize, j1: usize| {
        // linear interpolation of the half-depth crossing between samples
        let r0 = y[j0] / b[j0];
        let r1 = y[j1] / b[j1];
        let t = (level - r0) / (r1 - r0);
        f[j0] + (f[j1] - f[j0]) * t
    };
    let mut left = f[0];
    let mut j = k;
    while j > 0 {
        if y[j - 1] / b[j - 1] >= level {
            left = cross(j, j - 1);
            break;
        }
        j -= 1;
    }
    let mut right = f[f.len() - 1];
    let mut j = k;
    while j + 1 < f.len() {
        if y[j + 1] / b[j + 1] >= level {
            right = cross(j, j + 1);
            break;
        }
        j += 1;
    }
    let step = if f.len() > 1 { f[1] - f[0] } else { T::zero() };
    (depth, (right - left).max(step))
}

fn fit_window<T: Real>(
    trace: &TransmissionTrace<T>,
    window: Range<usize>,
    background: &[T],
    noise: T,
    start: Option<&DipFit<T>>,
) -> AnalysisResult<DipFit<T>> {
    let (lo, hi) = (window.start, window.end.min(trace.len()));
    let no_dip = |reason: String| AnalysisError::NoDip { start: lo, end: hi, reason };
    if hi <= lo || hi - lo < MIN_WINDOW {
        return Err(no_dip(format!("window needs at least {MIN_WINDOW} samples")));
    }
    let f = &trace.frequencies[lo..hi];
    let y = &trace.transmission[lo..hi];
    let b = &background[lo..hi];
    let k = (0..y.len())
        .min_by(|&i, &j| {
            (y[i] / b[i])
                .partial_cmp(&(y[j] / b[j]))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let (depth0, fwhm0) = initial_guess(f, y, b, k);
    let base = median(b);
    if !(depth0 > T::zero()) || depth0 * base < T::lit(MIN_SNR) * noise {
        return Err(no_dip(format!(
            "depth {} not above {MIN_SNR} x noise {}",
            depth0.to_f64_lossy(),
            noise.to_f64_lossy()
        )));
    }
    let (fc, scale, mut p) = match start {
        Some(s) => {
            let h = s.linewidth() * T::lit(0.5);
            (s.center, h, [T::zero(), T::one(), s.depth])
        }
        None => (f[k], fwhm0 * T::lit(0.5), [T::zero(), T::one(), depth0]),
    };
    let problem = Problem {
        u: f.iter().map(|&v| (v - fc) / scale).collect(),
        y,
        b,
    };

    let mut cost = problem.cost(p);
    let mut lambda = T::lit(1e-3);
    let tol = T::tol(STEP_TOLERANCE);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = problem.normal(p);
        let mut accepted = false;
        while lambda < T::lit(1e16) {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = row[i] * (T::one() + lambda) + T::min_positive_value();
            }
            let Some(delta) = solve3(a, jtr) else {
                lambda = lambda * T::lit(10.0);
                continue;
            };
            let trial = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
            if !(trial[1] > T::zero() && trial[2] > T::zero()) {
                lambda = lambda * T::lit(10.0);
                continue;
            }
            let c = problem.cost(trial);
            if c <= cost {
                let rel = (delta[0] / trial[1])
                    .abs()
                    .max((delta[1] / trial[1]).abs())
                    .max((delta[2] / trial[2]).abs());
                p = trial;
                cost = c;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                accepted = true;
                if rel < tol {
                    converged = true;
                }
                break;
            }
            lambda = lambda * T::lit(10.0);
        }
        if !accepted {
            // no downhill step at any damping: the minimum is resolved to rounding
            converged = true;
        }
        if converged {
            break;
        }
    }

    let n = T::from_usize_lossy(y.len());
    let center = fc + scale * p[0];
    let gamma = T::lit(2.0) * scale * p[1];
    let loaded_q = center / gamma;
    let dof = y.len().saturating_sub(3).max(1);
    let sigma2 = cost / T::from_usize_lossy(dof);
    let (jtj, _) = problem.normal(p);
    let cov = invert3(jtj).unwrap_or([[T::nan(); 3]; 3]);
    let var_u0 = sigma2 * cov[0][0];
    let g = [T::lit(0.5) / p[1], -loaded_q / p[1], T::zero()];
    let mut var_q = T::zero();
    for i in 0..3 {
        for k in 0..3 {
            var_q = var_q + g[i] * cov[i][k] * g[k];
        }
    }
    let fit = DipFit {
        center,
        loaded_q,
        depth: p[2],
        residual_rms: (cost / n).sqrt(),
        covariance_diag: [scale * scale * var_u0, sigma2 * var_q, sigma2 * cov[2][2]],
        iterations,
    };
    if !converged {
        return Err(AnalysisError::NotConverged {
            last: Box::new(fit.to_f64()),
            iterations,
        });
    }
    Ok(fit)
}

/// Detects and fits every dip of a trace.
///
/// After a first pass against the median baseline, each dip is refitted with
/// the other fitted dips and a rescaled baseline folded into the background,
/// which removes the bias from overlapping wings.
pub fn fit_trace<T: Real>(
    trace: &TransmissionTrace<T>,
    prominence: T,
) -> AnalysisResult<Vec<(Range<usize>, AnalysisResult<DipFit<T>>)>> {
    trace.validate()?;
    if !(prominence > T::zero() && prominence < T::one()) {
        return Err(WgmError::invalid("prominence", "must lie in (0, 1)").into());
    }
    let windows = detect_dips(trace, prominence);
    let noise = noise_estimate(&trace.transmission);
    let base = median(&trace.transmission);
    let flat = vec![base; trace.len()];
    let mut fits: Vec<AnalysisResult<DipFit<T>>> = windows
        .par_iter()
        .map(|w| fit_window(trace, w.clone(), &flat, noise, None))
        .collect();

    for _ in 0..REFINE_PASSES {
        if fits.iter().all(|f| f.is_err()) {
            break;
        }
        let product: Vec<T> = trace
            .frequencies
            .iter()
            .map(|&f| fits.iter().flatten().fold(T::one(), |acc, d| acc * d.profile(f)))
            .collect();
        let ratio: Vec<T> = trace
            .transmission
            .iter()
            .zip(&product)
            .map(|(&y, &p)| y / p)
            .collect();
        let baseline = median(&ratio);
        fits = windows
            .par_iter()
            .zip(fits.par_iter())
            .map(|(w, prev)| {
                let own = prev.as_ref().ok();
                let background: Vec<T> = trace
                    .frequencies
                    .iter()
                    .zip(&product)
                    .map(|(&f, &p)| {
                        let others = match own {
                            Some(d) => p / d.profile(f),
                            None => p,
                        };
                        baseline * others
                    })
                    .collect();
                fit_window(trace, w.clone(), &background, noise, own)
            })
            .collect();
    }
    Ok(windows.into_iter().zip(fits).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{ModeId, ModeLine, Polarization};
    use crate::spectroscopy::{synthesize_trace, LaserScan, TraceConditions};

    fn line(f: f64, q: f64, depth: f64) -> ModeLine<f64> {
        ModeLine {
            mode: ModeId::equatorial(1, 443, Polarization::TE),
            frequency: f,
            loaded_q: q,
            depth,
        }
    }

    fn scan() -> LaserScan<f64> {
        // 0.25 MHz grid around 375 THz
        LaserScan { start_frequency: 374.9995, span: 1.0, points: 4001, laser_linewidth: 0.0 }
    }

    #[test]
    fn noiseless_dip_round_trip() {
        let planted = line(375.0, 1e8, 0.3);
        let t = synthesize_trace(&[planted], &scan(), &TraceConditions::noiseless(), 0).unwrap();
        let w = detect_dips(&t, 0.05);
        assert_eq!(w.len(), 1);
        let fit = fit_lorentzian(&t, w[0].clone()).unwrap();
        assert!(((fit.center - 375.0) / 375.0).abs() < 1e-6);
        assert!((fit.loaded_q / 1e8 - 1.0).abs() < 1e-6, "{}", fit.loaded_q);
        assert!((fit.depth / 0.3 - 1.0).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn noisy_dip_center_within_tenth_of_linewidth() {
        let planted = line(375.0, 1e8, 0.3);
        let c = TraceConditions { noise_rms: 1e-3, ..TraceConditions::default() };
        let gamma = planted.linewidth();
        for seed in 0..10 {
            let t = synthesize_trace(&[planted], &scan(), &c, seed).unwrap();
            let w = detect_dips(&t, 0.05);
            let fit = fit_lorentzian(&t, w[0].clone()).unwrap();
            assert!((fit.center - 375.0).abs() < gamma / 10.0);
            assert!(fit.covariance_diag.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn window_without_dip_is_an_error() {
        let c = TraceConditions { noise_rms: 1e-3, ..TraceConditions::default() };
        let t = synthesize_trace(&[], &scan(), &c, 3).unwrap();
        let err = fit_lorentzian(&t, 100..140).unwrap_err();
        assert!(matches!(err, AnalysisError::NoDip { .. }));
        let err = fit_lorentzian(&t, 100..104).unwrap_err();
        assert!(matches!(err, AnalysisError::NoDip { .. }));
    }

    #[test]
    fn overlapping_wings_are_removed_by_refinement() {
        let lines = [line(375.0, 1e8, 0.3), line(375.00005, 1e8, 0.5)];
        let t = synthesize_trace(&lines, &scan(), &TraceConditions::noiseless(), 0).unwrap();
        let fits = fit_trace(&t, 0.05).unwrap();
        assert_eq!(fits.len(), 2);
        for ((_, fit), planted) in fits.iter().zip(&lines) {
            let fit = fit.as_ref().unwrap();
            assert!(((fit.center - planted.frequency) / planted.frequency).abs() < 1e-6);
            assert!((fit.loaded_q / planted.loaded_q - 1.0).abs() < 1e-6);
            assert!((fit.depth / planted.depth - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn noise_estimate_of_white_noise() {
        let c = TraceConditions { noise_rms: 2e-3, ..TraceConditions::default() };
        let t = synthesize_trace::<f64>(&[], &scan(), &c, 11).unwrap();
        let s = noise_estimate(&t.transmission);
        assert!((s / 2e-3 - 1.0).abs() < 0.1, "{s}");
    }
}
