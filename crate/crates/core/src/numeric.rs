//! Small one-dimensional root finding helpers.

use crate::error::{Result, WgmError};
use crate::scalar::Real;

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
///
/// Stops when the bracket is narrower than `rel_tol * |x|` (plus a tiny absolute floor).
pub fn brent<T, F>(mut f: F, a: T, b: T, rel_tol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(WgmError::numeric("NaN at bracket end"));
    }
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(WgmError::Bracket {
            lo: a.to_f64_lossy(),
            hi: b.to_f64_lossy(),
            reason: "function has the same sign at both ends".into(),
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * rel_tol * b.abs() + T::min_positive_value();
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = T::lit(3.0) * m * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if fb.is_nan() {
            return Err(WgmError::numeric("NaN during Brent iteration"));
        }
    }
    Err(WgmError::numeric(format!(
        "Brent did not converge in {max_iter} iterations"
    )))
}

/// Walks right from `start` in steps of `step` until `f` changes sign from
/// positive to negative, skipping negative-to-positive jumps (poles).
///
/// Returns the bracket of the `nth` such crossing (1-based).
pub fn scan_descending_crossing<T, F>(
    mut f: F,
    start: T,
    step: T,
    stop: T,
    nth: usize,
) -> Result<(T, T)>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let mut x = start;
    let mut fx = f(x);
    let mut found = 0;
    while x < stop {
        let xn = x + step;
        let fxn = f(xn);
        if fx.is_nan() || fxn.is_nan() {
            return Err(WgmError::numeric(format!(
                "NaN while scanning near {}",
                xn.to_f64_lossy()
            )));
        }
        if fx > T::zero() && fxn <= T::zero() {
            found += 1;
            if found == nth {
                return Ok((x, xn));
            }
        }
        x = xn;
        fx = fxn;
    }
    Err(WgmError::Bracket {
        lo: start.to_f64_lossy(),
        hi: stop.to_f64_lossy(),
        reason: format!("found {found} of {nth} descending sign changes"),
    })
}

/// Solves the 3×3 system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverse of a symmetric positive definite 3×3 matrix, column by column.
pub fn invert3<T: Real>(a: [[T; 3]; 3]) -> Option<[[T; 3]; 3]> {
    let mut inv = [[T::zero(); 3]; 3];
    for col in 0..3 {
        let mut e = [T::zero(); 3];
        e[col] = T::one();
        let x = solve3(a, e)?;
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// The location is only resolved to about `sqrt(eps)` relative, where the
/// function becomes flat to rounding.
pub fn minimize_golden<T, F>(mut f: F, a: T, b: T, rel_tol: T, max_iter: usize) -> (T, T)
where
    T: Real,
    F: FnMut(T) -> T,
{
    let r = T::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (c.abs() + d.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
