//! Uniform asymptotic expansions of the cylinder functions of large order.
//!
//! The interior function uses Olver's Airy-type expansion of `J_ν(νz)` with
//! the first correction terms `B₀`, `C₀`; the exterior function uses the Debye
//! expansion of `Y_ν(ν sech α)`, summed to its smallest term.

use super::airy::airy_ai;
use crate::scalar::Real;

/// Half-width of the window around `z = 1` where `B₀`, `C₀` are interpolated
/// instead of evaluated from their closed forms (which cancel there).
const NEAR_TURNING: f64 = 0.005;

/// Olver's `ζ(z)`: positive for `z < 1`, negative for `z > 1`.
pub fn zeta<T: Real>(z: T) -> T {
    let one = T::one();
    let u = one - z;
    if u.abs() < T::lit(1e-3) {
        let c = T::lit(2.0).cbrt();
        return c * u * (one + u * (T::lit(0.3) + u * (T::lit(32.0 / 175.0) + u * T::lit(1037.0 / 7875.0))));
    }
    let two_thirds = T::lit(2.0 / 3.0);
    if z < one {
        let s = (one - z * z).sqrt();
        (T::lit(1.5) * (((one + s) / z).ln() - s)).powf(two_thirds)
    } else {
        let s = (z * z - one).sqrt();
        -(T::lit(1.5) * (s - z.recip().acos())).powf(two_thirds)
    }
}

/// `sqrt((1 - z²) / (4ζ))`, finite through `z = 1`.
fn turning_ratio<T: Real>(z: T, zt: T) -> T {
    let one = T::one();
    let u = one - z;
    if u.abs() < T::lit(1e-3) {
        let poly = one + u * (T::lit(0.3) + u * (T::lit(32.0 / 175.0) + u * T::lit(1037.0 / 7875.0)));
        return ((one + z) / (T::lit(4.0) * T::lit(2.0).cbrt() * poly)).sqrt();
    }
    ((one - z * z) / (T::lit(4.0) * zt)).sqrt()
}

fn b0_c0_closed(z: f64) -> (f64, f64) {
    let zt = zeta(z);
    let b_pole = -5.0 / 48.0 / (zt * zt);
    let c_pole = 7.0 / 48.0 / zt;
    if z < 1.0 {
        let s = (1.0 - z * z).sqrt();
        let r = zt.sqrt();
        let s3 = s * s * s;
        let b = b_pole + (5.0 / 24.0 / s3 - 1.0 / 8.0 / s) / r;
        let c = c_pole + r * (-7.0 / 24.0 / s3 + 3.0 / 8.0 / s);
        (b, c)
    } else {
        let s = (z * z - 1.0).sqrt();
        let r = (-zt).sqrt();
        let s3 = s * s * s;
        let b = b_pole + (5.0 / 24.0 / s3 + 1.0 / 8.0 / s) / r;
        let c = c_pole + r * (7.0 / 24.0 / s3 + 3.0 / 8.0 / s);
        (b, c)
    }
}

/// Olver's first correction coefficients `(B₀(ζ), C₀(ζ))` as functions of `z`.
///
/// Always evaluated in double precision; the closed forms lose digits to
/// cancellation as `z → 1`.
pub fn olver_b0_c0<T: Real>(z: T) -> (T, T) {
    let z = z.to_f64_lossy();
    let h = NEAR_TURNING;
    if (z - 1.0).abs() >= h {
        let (b, c) = b0_c0_closed(z);
        return (T::lit(b), T::lit(c));
    }
    // cubic Lagrange interpolation on nodes away from the cancellation
    let nodes = [1.0 - 2.0 * h, 1.0 - h, 1.0 + h, 1.0 + 2.0 * h];
    let mut b = 0.0;
    let mut c = 0.0;
    for (i, &xi) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if i != j {
                w *= (z - xj) / (xi - xj);
            }
        }
        let (bi, ci) = b0_c0_closed(xi);
        b += w * bi;
        c += w * ci;
    }
    (T::lit(b), T::lit(c))
}

/// `J_ν'(w) / J_ν(w)` from the Airy-type uniform expansion.
pub fn bessel_j_log_derivative<T: Real>(nu: T, w: T) -> T {
    let z = w / nu;
    let zt = zeta(z);
    let (b0, c0) = olver_b0_c0(z);
    let nu13 = nu.cbrt();
    let t = nu13 * nu13 * zt;
    let (ai, aip) = airy_ai(t);
    let num = ai * c0 / nu + aip / nu13;
    let den = ai + aip * b0 / (nu * nu13);
    -(T::lit(2.0) / z) * turning_ratio(z, zt) * num / den
}

/// `ψ'(w)/ψ(w)` for `ψ(w) = w j_l(w)`, `ν = l + 1/2`.
pub fn psi_log_derivative<T: Real>(nu: T, w: T) -> T {
    (T::lit(2.0) * w).recip() + bessel_j_log_derivative(nu, w)
}

/// Debye polynomials `U_k(p)`, `V_k(p)` for `k = 0..=4`.
fn debye_uv<T: Real>(p: T) -> ([T; 5], [T; 5]) {
    let p2 = p * p;
    let poly = |coeffs: &[f64], first_power: i32, denom: f64| -> T {
        // coefficients of p^(first_power), p^(first_power+2), ...
        let mut acc = T::zero();
        for &c in coeffs.iter().rev() {
            acc = acc * p2 + T::lit(c);
        }
        acc * p.powi(first_power) / T::lit(denom)
    };
    let u = [
        T::one(),
        poly(&[3.0, -5.0], 1, 24.0),
        poly(&[81.0, -462.0, 385.0], 2, 1152.0),
        poly(&[30375.0, -369_603.0, 765_765.0, -425_425.0], 3, 414_720.0),
        poly(
            &[4_465_125.0, -94_121_676.0, 349_922_430.0, -446_185_740.0, 185_910_725.0],
            4,
            39_813_120.0,
        ),
    ];
    let v = [
        T::one(),
        poly(&[-9.0, 7.0], 1, 24.0),
        poly(&[-135.0, 594.0, -455.0], 2, 1152.0),
        poly(&[-42525.0, 451_737.0, -883_575.0, 475_475.0], 3, 414_720.0),
        poly(
            &[-6_081_075.0, 107_442_720.0, -372_054_542.0, 464_574_120.0, -188_699_780.0],
            4,
            39_813_120.0,
        ),
    ];
    (u, v)
}

/// `Y_ν'(x) / Y_ν(x)` for `x < ν` from the Debye expansion.
pub fn bessel_y_log_derivative<T: Real>(nu: T, x: T) -> T {
    let alpha = (nu / x).acosh();
    let p = alpha.tanh().recip();
    let (u, v) = debye_uv(p);
    let mut su = T::zero();
    let mut sv = T::zero();
    let mut prev = T::infinity();
    let mut sign = T::one();
    let mut nuk = T::one();
    for k in 0..5 {
        let tu = u[k] / nuk;
        let tv = v[k] / nuk;
        let size = tu.abs().max(tv.abs());
        if size > prev {
            break;
        }
        su = su + sign * tu;
        sv = sv + sign * tv;
        prev = size;
        sign = -sign;
        nuk = nuk * nu;
    }
    -alpha.sinh() * sv / su
}

/// `χ'(x)/χ(x)` for `χ(x) = x y_l(x)`, `ν = l + 1/2`, `x < ν`.
pub fn chi_log_derivative<T: Real>(nu: T, x: T) -> T {
    (T::lit(2.0) * x).recip() + bessel_y_log_derivative(nu, x)
}

/// Leading terms of the large-order expansion of the `k`-th positive zero of `J_ν`.
pub fn bessel_zero_estimate<T: Real>(nu: T, alpha_k: T) -> T {
    let c = T::lit(2.0).powf(T::lit(-1.0 / 3.0));
    let nu13 = nu.cbrt();
    nu + c * alpha_k * nu13 + T::lit(0.3) * c * c * alpha_k * alpha_k / nu13
}
