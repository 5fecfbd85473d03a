//! Logarithmic derivatives of the Riccati–Bessel functions
//! `ψ_l(z) = z j_l(z)` and `χ_l(x) = x y_l(x)` from exact recurrences.

use crate::scalar::Real;

/// `ψ_l'(z) / ψ_l(z)` via backward recurrence of `j_{k+1}/j_k` started well
/// above the turning point, where the ratio is negligible.
pub fn psi_log_derivative<T: Real>(l: u32, z: T) -> T {
    let zf = z.to_f64_lossy();
    let lf = l as f64;
    let start = (lf.max(zf) + 15.0 * zf.cbrt() + 16.0).ceil() as u64;
    let mut ratio = T::zero();
    let mut k = start;
    while k > l as u64 {
        let kk = T::lit(k as f64);
        ratio = (((T::lit(2.0) * kk + T::one()) / z) - ratio).recip();
        k -= 1;
    }
    // j_l'/j_l = l/z - j_{l+1}/j_l ; ψ'/ψ = 1/z + j'/j
    (T::lit(lf) + T::one()) / z - ratio
}

/// `χ_l'(x) / χ_l(x)` via upward recurrence of `y_k/y_{k-1}`, stable because
/// `y_k` is the dominant solution.
pub fn chi_log_derivative<T: Real>(l: u32, x: T) -> T {
    let (s, c) = x.sin_cos();
    // y_1/y_0 = 1/x + tan x
    let mut ratio = x.recip() + s / c;
    for k in 1..l {
        let kk = T::lit(k as f64);
        ratio = (T::lit(2.0) * kk + T::one()) / x - ratio.recip();
    }
    if l == 0 {
        // y_0' / y_0 = -y_1/y_0
        return x.recip() - ratio;
    }
    // y_l' = y_{l-1} - (l+1)/x · y_l
    x.recip() + ratio.recip() - (T::lit(l as f64) + T::one()) / x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi_direct(l: u32, z: f64) -> f64 {
        // closed forms for l = 0, 1
        match l {
            0 => z.cos() / z.sin(),
            1 => {
                let psi = z.sin() / z - z.cos();
                let dpsi = z.cos() / z - z.sin() / (z * z) + z.sin();
                dpsi / psi
            }
            _ => unreachable!(),
        }
    }

    fn chi_direct(l: u32, x: f64) -> f64 {
        match l {
            0 => -x.sin() / x.cos(),
            1 => {
                let chi = -x.cos() / x - x.sin();
                let dchi = x.sin() / x + x.cos() / (x * x) - x.cos();
                dchi / chi
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn low_orders_match_closed_forms() {
        for &x in &[0.7, 2.3, 5.1, 11.9] {
            for l in 0..2 {
                let a = psi_log_derivative(l, x);
                let b = psi_direct(l, x);
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "psi l={l} x={x}: {a} vs {b}");
                let a = chi_log_derivative(l, x);
                let b = chi_direct(l, x);
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "chi l={l} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn high_order_matches_reference() {
        // reference log-derivatives from an arbitrary-precision evaluation
        let psi = psi_log_derivative(100, 110.0f64);
        assert!((psi - (1.498_791_501_972_460_8 + 0.5 / 110.0)).abs() < 1e-11);
        let chi = chi_log_derivative(100, 75.0f64);
        let want = 0.5 / 75.0 - 0.883_235_988_240_609_6;
        assert!((chi - want).abs() < 1e-11, "{chi} vs {want}");
    }
}
