//! Tuning-slope extraction and slope-ratio polarization guess.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::scalar::Real;

/// TM/TE slope ratio of an ideal strained cylinder.
pub const TM_TE_CYLINDER_RATIO: f64 = 1.75;
/// Relative window around each expected slope used by the classifier.
pub const CLASSIFY_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolarizationGuess {
    TE,
    TM,
    Unknown,
}

impl fmt::Display for PolarizationGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TE => "TE",
            Self::TM => "TM",
            Self::Unknown => "unknown",
        })
    }
}

/// Straight-line fit of resonance frequency against voltage. `slope` is in
/// GHz/V, `intercept` is the frequency at 0 V in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub polarization_guess: PolarizationGuess,
}

/// Classifies `slope` against a TE reference slope (same units).
pub fn classify_slope<T: Real>(slope: T, te_reference: T) -> PolarizationGuess {
    let tol = T::lit(CLASSIFY_TOLERANCE);
    let near = |target: T| target != T::zero() && ((slope - target) / target).abs() <= tol;
    let tm = te_reference * T::lit(TM_TE_CYLINDER_RATIO);
    match (near(te_reference), near(tm)) {
        (true, _) => PolarizationGuess::TE,
        (false, true) => PolarizationGuess::TM,
        (false, false) => PolarizationGuess::Unknown,
    }
}

/// Ordinary least squares of centre (THz) against voltage (V).
///
/// With `te_reference` (GHz/V) the slope is classified as TE, TM or unknown.
pub fn fit_tuning_slope<T: Real>(points: &[(T, T)], te_reference: Option<T>) -> Result<SlopeFit<T>> {
    if points.len() < 3 {
        return Err(WgmError::domain(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(v, c)| !v.is_finite() || !c.is_finite()) {
        return Err(WgmError::invalid("points", "non-finite voltage or centre"));
    }
    let n = T::from_usize_lossy(points.len());
    let ghz = T::lit(1000.0);
    // centre on the first point so the GHz conversion does not swamp small shifts
    let c0 = points[0].1;
    let vm = points.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let ym = points.iter().fold(T::zero(), |a, p| a + (p.1 - c0) * ghz) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(v, c) in points {
        let dx = v - vm;
        let dy = (c - c0) * ghz - ym;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if !(sxx > T::zero()) {
        return Err(WgmError::domain("all voltages are equal; slope is undefined"));
    }
    let slope = sxy / sxx;
    let intercept = c0 * ghz + ym - slope * vm;
    let ss_res = points.iter().fold(T::zero(), |a, &(v, c)| {
        let r = (c - c0) * ghz - ym - slope * (v - vm);
        a + r * r
    });
    let r_squared = if syy > T::zero() {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    } else {
        T::one()
    };
    let polarization_guess = match te_reference {
        Some(r) => classify_slope(slope, r),
        None => PolarizationGuess::Unknown,
    };
    Ok(SlopeFit { slope, intercept, r_squared, polarization_guess })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 5.0, 375.0 + 0.008 * i as f64 * 5.0)).collect();
        let fit = fit_tuning_slope(&pts, None).unwrap();
        assert!((fit.slope - 8.0).abs() < 1e-9, "{}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 375_000.0).abs() < 1e-6);
        assert_eq!(fit.polarization_guess, PolarizationGuess::Unknown);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_tuning_slope(&[(1.0, 375.0), (2.0, 375.1)], None), Err(WgmError::Domain(_))));
        let same = [(3.0, 375.0), (3.0, 375.1), (3.0, 375.2)];
        assert!(matches!(fit_tuning_slope(&same, None), Err(WgmError::Domain(_))));
    }

    #[test]
    fn classification() {
        assert_eq!(classify_slope(5.1, 5.0), PolarizationGuess::TE);
        assert_eq!(classify_slope(8.0, 5.0), PolarizationGuess::TM);
        assert_eq!(classify_slope(-8.0, -5.0), PolarizationGuess::TM);
        assert_eq!(classify_slope(20.0, 5.0), PolarizationGuess::Unknown);
        assert_eq!(classify_slope(2.0, 5.0), PolarizationGuess::Unknown);
        assert_eq!(classify_slope(6.2, 5.0), PolarizationGuess::TE);
        assert_eq!(classify_slope(6.6, 5.0), PolarizationGuess::TM);
    }

    #[test]
    fn noisy_points_have_r_squared_below_one() {
        let pts = [(0.0, 375.0), (1.0, 375.006), (2.0, 375.009), (3.0, 375.016)];
        let fit = fit_tuning_slope(&pts, Some(5.0)).unwrap();
        assert!(fit.r_squared < 1.0 && fit.r_squared > 0.9);
        assert_eq!(fit.polarization_guess, PolarizationGuess::TE);
    }
}
