//! Airy function of the first kind and its zeros.

use crate::scalar::Real;

const AI0: f64 = 0.355_028_053_887_817_239_26;
const AIP0: f64 = 0.258_819_403_792_806_798_41;
const SERIES_LIMIT: f64 = 7.0;

/// Returns `(Ai(x), Ai'(x))`.
pub fn airy_ai<T: Real>(x: T) -> (T, T) {
    if x.abs() <= T::lit(SERIES_LIMIT) {
        maclaurin(x)
    } else if x > T::zero() {
        asymptotic_positive(x)
    } else {
        asymptotic_negative(-x)
    }
}

fn maclaurin<T: Real>(x: T) -> (T, T) {
    let x3 = x * x * x;
    let eps = T::epsilon();
    let (mut f, mut g, mut fp, mut gp) = (T::one(), x, T::zero(), T::one());
    let (mut a, mut b, mut d, mut e) = (T::one(), x, x * x / T::lit(2.0), T::one());
    fp = fp + d;
    for k in 1..400 {
        let kf = T::from_usize_lossy(k);
        let three_k = T::lit(3.0) * kf;
        a = a * x3 / ((three_k - T::one()) * three_k);
        b = b * x3 / (three_k * (three_k + T::one()));
        e = e * x3 / ((three_k - T::lit(2.0)) * three_k);
        f = f + a;
        g = g + b;
        gp = gp + e;
        if k >= 2 {
            d = d * x3 / ((three_k - T::lit(3.0)) * (three_k - T::one()));
            fp = fp + d;
        }
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if k > 2 && (a.abs() + b.abs() + d.abs() + e.abs()) <= eps * scale {
            break;
        }
    }
    let c1 = T::lit(AI0);
    let c2 = T::lit(AIP0);
    (c1 * f - c2 * g, c1 * fp - c2 * gp)
}

/// Coefficients `u_k`, `v_k` of the large-argument Airy expansions.
fn uv_coefficients<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    u.push(T::one());
    v.push(T::one());
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let six_k = T::lit(6.0) * kf;
        let next = u[k - 1] * (six_k - T::lit(5.0)) * (six_k - T::lit(3.0)) * (six_k - T::one())
            / ((T::lit(2.0) * kf - T::one()) * T::lit(216.0) * kf);
        u.push(next);
        v.push(-(six_k + T::one()) / (six_k - T::one()) * next);
    }
    (u, v)
}

/// Sums `Σ (±1)^k c_k ξ^{-k}` over the selected indices with optimal truncation.
fn asymptotic_sum<T: Real>(c: &[T], xi: T, start: usize, stride: usize, alternate: bool) -> T {
    let mut sum = T::zero();
    let mut prev = T::infinity();
    let mut sign = T::one();
    let mut k = start;
    while k < c.len() {
        let term = c[k] / xi.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        sum = sum + sign * term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
        prev = term.abs();
        if alternate {
            sign = -sign;
        }
        k += stride;
    }
    sum
}

fn asymptotic_positive<T: Real>(x: T) -> (T, T) {
    let xi = T::lit(2.0 / 3.0) * x * x.sqrt();
    let (u, v) = uv_coefficients::<T>(40);
    let pref = (-xi).exp() / (T::lit(2.0) * T::PI().sqrt());
    let q = x.sqrt().sqrt();
    let su = asymptotic_sum(&u, xi, 0, 1, true);
    let sv = asymptotic_sum(&v, xi, 0, 1, true);
    (pref / q * su, -pref * q * sv)
}

fn asymptotic_negative<T: Real>(z: T) -> (T, T) {
    let xi = T::lit(2.0 / 3.0) * z * z.sqrt();
    let (u, v) = uv_coefficients::<T>(40);
    let phase = xi - T::FRAC_PI_4();
    let (s, c) = phase.sin_cos();
    let q = z.sqrt().sqrt();
    let rpi = T::PI().sqrt();
    let u_even = asymptotic_sum(&u, xi, 0, 2, true);
    let u_odd = asymptotic_sum(&u, xi, 1, 2, true);
    let v_even = asymptotic_sum(&v, xi, 0, 2, true);
    let v_odd = asymptotic_sum(&v, xi, 1, 2, true);
    let ai = (c * u_even + s * u_odd) / (rpi * q);
    let aip = q / rpi * (s * v_even - c * v_odd);
    (ai, aip)
}

/// Magnitude of the `k`-th zero of Ai (`Ai(-α_k) = 0`), `k ≥ 1`.
pub fn airy_zero<T: Real>(k: usize) -> T {
    assert!(k >= 1, "Airy zeros are 1-indexed");
    let t = T::lit(3.0) * T::PI() * (T::lit(4.0) * T::from_usize_lossy(k) - T::one()) / T::lit(8.0);
    let t2 = (t * t).recip();
    let series = T::one()
        + t2 * (T::lit(5.0 / 48.0)
            + t2 * (T::lit(-5.0 / 36.0)
                + t2 * (T::lit(77125.0 / 82944.0) + t2 * T::lit(-108_056_875.0 / 6_967_296.0))));
    let mut x = -(t.powf(T::lit(2.0 / 3.0)) * series);
    for _ in 0..4 {
        let (ai, aip) = airy_ai(x);
        if aip == T::zero() {
            break;
        }
        x = x - ai / aip;
    }
    -x
}
