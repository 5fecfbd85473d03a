//! Candidate dip windows.

use std::ops::Range;

use crate::scalar::Real;
use crate::spectroscopy::TransmissionTrace;

/// Smallest window handed to the fitter.
pub const MIN_WINDOW: usize = 7;
/// Windows extend out to where the dip is this fraction of its peak depth.
const EDGE_FRACTION: f64 = 0.05;

/// Median of a slice (mean of the middle pair for even lengths); NaN when empty.
pub fn median<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::nan();
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::lit(0.5)
    }
}

/// Disjoint index windows around dips at least `prominence` deep relative to
/// the baseline (the trace median), sorted by frequency.
///
/// Dips are claimed deepest first. A window spans the samples deeper than 5%
/// of its dip and is padded to at least seven samples where room allows.
/// Depths are relative, so scaling the trace leaves the windows unchanged.
pub fn detect_dips<T: Real>(trace: &TransmissionTrace<T>, prominence: T) -> Vec<Range<usize>> {
    let n = trace.transmission.len();
    if n == 0 || !(prominence > T::zero() && prominence < T::one()) {
        return Vec::new();
    }
    let base = median(&trace.transmission);
    if !(base > T::zero()) {
        return Vec::new();
    }
    let depth: Vec<T> = trace.transmission.iter().map(|&t| T::one() - t / base).collect();

    let mut order: Vec<usize> = (0..n).filter(|&i| depth[i] >= prominence).collect();
    order.sort_by(|&a, &b| {
        depth[b]
            .partial_cmp(&depth[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut claimed = vec![false; n];
    let mut windows = Vec::new();
    for i in order {
        if claimed[i] {
            continue;
        }
        let edge = depth[i] * T::lit(EDGE_FRACTION);
        let mut lo = i;
        while lo > 0 && !claimed[lo - 1] && depth[lo - 1] > edge {
            lo -= 1;
        }
        let mut hi = i + 1;
        while hi < n && !claimed[hi] && depth[hi] > edge {
            hi += 1;
        }
        while hi - lo < MIN_WINDOW {
            let grow_lo = lo > 0 && !claimed[lo - 1];
            let grow_hi = hi < n && !claimed[hi];
            if !grow_lo && !grow_hi {
                break;
            }
            if grow_lo {
                lo -= 1;
            }
            if grow_hi && hi - lo < MIN_WINDOW {
                hi += 1;
            }
        }
        claimed[lo..hi].iter_mut().for_each(|c| *c = true);
        windows.push(lo..hi);
    }
    windows.sort_by_key(|w| w.start);
    windows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{ModeId, ModeLine, Polarization};
    use crate::spectroscopy::{synthesize_trace, LaserScan, TraceConditions};

    fn line(f: f64, depth: f64) -> ModeLine<f64> {
        ModeLine {
            mode: ModeId::equatorial(1, 443, Polarization::TE),
            frequency: f,
            loaded_q: 375e6,
            depth,
        }
    }

    fn trace(lines: &[ModeLine<f64>]) -> TransmissionTrace<f64> {
        let scan = LaserScan { start_frequency: 374.995, span: 20.0, points: 40001, laser_linewidth: 0.0 };
        synthesize_trace(lines, &scan, &TraceConditions::noiseless(), 0).unwrap()
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median::<f64>(&[]).is_nan());
    }

    #[test]
    fn flat_trace_has_no_dips() {
        assert!(detect_dips(&trace(&[]), 0.05).is_empty());
    }

    #[test]
    fn two_planted_dips_five_ghz_apart() {
        // γ = 1 MHz
        let t = trace(&[line(375.0, 0.3), line(375.005, 0.3)]);
        let w = detect_dips(&t, 0.05);
        assert_eq!(w.len(), 2);
        let step = t.step();
        for (win, f0) in w.iter().zip([375.0, 375.005]) {
            let imin = win.clone().min_by(|&a, &b| t.transmission[a].partial_cmp(&t.transmission[b]).unwrap()).unwrap();
            assert!((t.frequencies[imin] - f0).abs() <= step);
            assert!(win.len() >= MIN_WINDOW);
        }
    }

    #[test]
    fn shallow_dip_is_excluded() {
        let t = trace(&[line(375.0, 0.3), line(375.005, 0.02)]);
        assert_eq!(detect_dips(&t, 0.05).len(), 1);
    }

    #[test]
    fn scaling_leaves_windows_unchanged() {
        let t = trace(&[line(375.0, 0.3), line(375.01, 0.6)]);
        let mut s = t.clone();
        s.transmission.iter_mut().for_each(|v| *v *= 3.7);
        assert_eq!(detect_dips(&t, 0.05), detect_dips(&s, 0.05));
    }
}
