//! Resonance frequencies and spectral intervals of spheroidal resonators.
//!
//! The working solver ([`mode_frequency`]) finds the root of the dielectric
//! sphere characteristic equation with uniform asymptotic expansions of the
//! cylinder functions and then applies the quadrupole deformation shift in `m`.
//! [`exact_mie_root`] solves the same equation with exact recurrences and
//! serves as its reference.
//!
//! Polarization convention: the characteristic equation reads
//! `P ψ_l'(nx)/ψ_l(nx) = χ_l'(x)/χ_l(x)` with `P = n` for TE and `P = 1/n` for
//! TM. The same `P` appears in the closed-form size parameter
//! [`airy_expansion_root`], and TM resonances lie above TE ones.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::geometry::SpheroidGeometry;
use crate::material::{refractive_index, OpticalMaterial, MAX_WAVELENGTH_UM, MIN_WAVELENGTH_UM};
use crate::mode::{ModeId, ModeLine, Polarization};
use crate::numeric::{brent, scan_descending_crossing};
use crate::scalar::{speed_of_light, Real};
use crate::special::{airy, riccati, uniform};

/// Smallest angular number handled by the asymptotic solver.
pub const MIN_ANGULAR_L: u32 = 20;
/// Largest angular number handled by the exact solver.
pub const MAX_EXACT_L: u32 = 2000;
/// Widest window `spectrum_window` will enumerate, in free spectral ranges.
pub const MAX_WINDOW_FSR: f64 = 5.0;

const MAX_DISPERSION_ITERATIONS: usize = 8;
/// Beyond this `x/ν` the exterior Debye sum is no longer accurate.
const MAX_EXTERIOR_RATIO: f64 = 0.92;

fn polarization_factor<T: Real>(n: T, pol: Polarization) -> T {
    match pol {
        Polarization::TE => n,
        Polarization::TM => n.recip(),
    }
}

fn check_l(l: u32) -> Result<()> {
    if l < MIN_ANGULAR_L {
        return Err(WgmError::domain(format!(
            "l = {l} below the asymptotic validity floor {MIN_ANGULAR_L}"
        )));
    }
    Ok(())
}

/// Closed-form size parameter `x = 2πa/λ` of the `(q, l)` resonance of a
/// sphere with fixed index `n`, from the large-`l` Airy-zero expansion
/// (five terms). Accurate to a few 1e-4; used to seed the solvers.
pub fn airy_expansion_root<T: Real>(n: T, l: u32, q: u32, pol: Polarization) -> T {
    let nu = T::lit(l as f64 + 0.5);
    let alpha = airy::airy_zero::<T>(q as usize);
    let p = polarization_factor(n, pol);
    let s = (n * n - T::one()).sqrt();
    let c = T::lit(2.0).powf(T::lit(-1.0 / 3.0));
    let nu13 = nu.cbrt();
    let w = nu + c * alpha * nu13 - p / s
        + T::lit(0.3) * c * c * alpha * alpha / nu13
        - c * p * (n * n - T::lit(2.0 / 3.0) * p * p) * alpha / (nu13 * nu13 * s * s * s);
    w / n
}

/// Size parameter `n x` of the `(q, l)` root at fixed index `n` from the
/// uniform asymptotic characteristic function.
fn asymptotic_root_w<T: Real>(n: T, l: u32, q: u32, pol: Polarization) -> Result<T> {
    let nu = T::lit(l as f64 + 0.5);
    let p = polarization_factor(n, pol);
    let g = |w: T| p * uniform::psi_log_derivative(nu, w) - uniform::chi_log_derivative(nu, w / n);
    let seed = n * airy_expansion_root(n, l, q, pol);
    let upper_pole = uniform::bessel_zero_estimate(nu, airy::airy_zero::<T>(q as usize));
    let mut start = seed - T::one();
    if q > 1 {
        let lower_pole = uniform::bessel_zero_estimate(nu, airy::airy_zero::<T>(q as usize - 1));
        start = start.max(lower_pole + T::lit(0.1));
    }
    if seed / n > T::lit(MAX_EXTERIOR_RATIO) * nu {
        return Err(WgmError::numeric(format!(
            "q = {q} at l = {l}: x/ν = {} beyond the range of the exterior expansion",
            (seed / n / nu).to_f64_lossy()
        )));
    }
    let (lo, hi) = scan_descending_crossing(g, start, T::lit(0.1), upper_pole + T::one(), 1)?;
    let w = brent(g, lo, hi, T::tol(1e-13), 200)?;

    // the root must sit between the (q-1)-th and q-th zeros of J_ν
    let nu13 = nu.cbrt();
    let t = nu13 * nu13 * uniform::zeta(w / nu);
    let upper_ok = q == 1 || t < -airy::airy_zero::<T>(q as usize - 1);
    if !(t > -airy::airy_zero::<T>(q as usize) && upper_ok) {
        return Err(WgmError::numeric(format!(
            "root at nx = {} does not belong to radial order {q}",
            w.to_f64_lossy()
        )));
    }
    if w / n > T::lit(MAX_EXTERIOR_RATIO) * nu {
        return Err(WgmError::numeric("root beyond the range of the exterior expansion"));
    }
    Ok(w)
}

fn clamp_wavelength<T: Real>(lambda: T) -> T {
    lambda.max(T::lit(MIN_WAVELENGTH_UM)).min(T::lit(MAX_WAVELENGTH_UM))
}

/// Frequency (THz) of a sphere of radius `a` at size parameter `x`.
fn frequency_of_x<T: Real>(a: T, x: T) -> T {
    x * speed_of_light::<T>() / (T::lit(2.0 * PI) * a)
}

/// Resonance frequency (THz) of the `(q, l)` family on a perfect sphere of the
/// geometry's equatorial radius, iterated to self-consistency in `n(λ)`.
pub fn sphere_frequency<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    q: u32,
    l: u32,
    pol: Polarization,
) -> Result<T> {
    check_l(l)?;
    if q < 1 {
        return Err(WgmError::invalid("mode.q", "radial order must be at least 1"));
    }
    let a = geometry.equatorial_radius;
    let two_pi_a = T::lit(2.0 * PI) * a;
    let nu = T::lit(l as f64 + 0.5);
    let n_ref = refractive_index(material, material.reference_wavelength)?;
    let mut lambda = clamp_wavelength(two_pi_a * n_ref / nu);
    let tol = T::tol(1e-10);
    for _ in 0..MAX_DISPERSION_ITERATIONS {
        let n = refractive_index(material, lambda)?;
        let x = asymptotic_root_w(n, l, q, pol)? / n;
        let next = two_pi_a / x;
        if ((next - lambda) / lambda).abs() <= tol {
            let n = refractive_index(material, next)?;
            let x = asymptotic_root_w(n, l, q, pol)? / n;
            return Ok(frequency_of_x(a, x));
        }
        lambda = next;
    }
    Err(WgmError::numeric(format!(
        "dispersion loop for q={q}, l={l} did not converge in {MAX_DISPERSION_ITERATIONS} iterations"
    )))
}

/// Relative frequency factor of the `m` sublevel on a spheroid of
/// ellipticity `eps`, normalized so that `|m| = l` keeps the equatorial
/// sphere frequency.
pub fn ellipticity_factor<T: Real>(eps: T, l: u32, m: i32) -> T {
    let lf = T::lit(l as f64);
    let mf = T::lit(m as f64);
    T::one() - eps * T::lit(0.5) * (lf * lf - mf * mf) / (lf * (lf + T::one()))
}

/// Resonance frequency (THz) of `mode` on the spheroid.
pub fn mode_frequency<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    mode: ModeId,
) -> Result<T> {
    check_l(mode.l)?;
    mode.validate()?;
    let f = sphere_frequency(geometry, material, mode.q, mode.l, mode.pol)?;
    Ok(f * ellipticity_factor(geometry.ellipticity, mode.l, mode.m))
}

/// Exact `q`-th root (THz) of the characteristic equation of a perfect
/// sphere, with the index evaluated at the root's own wavelength.
pub fn exact_mie_root<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    q: u32,
    l: u32,
    pol: Polarization,
) -> Result<T> {
    if geometry.ellipticity != T::zero() {
        return Err(WgmError::domain("exact solver handles spheres only (ellipticity 0)"));
    }
    if l < 1 || l > MAX_EXACT_L {
        return Err(WgmError::domain(format!("l = {l} outside [1, {MAX_EXACT_L}]")));
    }
    if q < 1 {
        return Err(WgmError::invalid("mode.q", "radial order must be at least 1"));
    }
    let a = geometry.equatorial_radius;
    let two_pi_a = T::lit(2.0 * PI) * a;
    let nu = T::lit(l as f64 + 0.5);

    let failure: RefCell<Option<WgmError>> = RefCell::new(None);
    let g = |x: T| -> T {
        match refractive_index(material, two_pi_a / x) {
            Ok(n) => {
                polarization_factor(n, pol) * riccati::psi_log_derivative(l, n * x)
                    - riccati::chi_log_derivative(l, x)
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    };

    // start where n(λ(x))·x = ν, below the first root
    let mut x0 = nu / refractive_index(material, clamp_wavelength(material.reference_wavelength))?;
    for _ in 0..3 {
        x0 = nu / refractive_index(material, clamp_wavelength(two_pi_a / x0))?;
    }
    let start = x0 * T::lit(0.999);
    let step = T::lit(0.05);
    let stop = x0 + T::lit(3.0 * (q as f64 + 2.0)) * nu.cbrt();
    let bracket = scan_descending_crossing(g, start, step, stop, q as usize);
    let (lo, hi) = match (bracket, failure.take()) {
        (_, Some(e)) => return Err(e),
        (Err(e), None) => return Err(e),
        (Ok(b), None) => b,
    };
    let x = brent(g, lo, hi, T::tol(1e-12), 200)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(frequency_of_x(a, x))
}

/// Angular number whose `(q, pol)` equatorial resonance lies closest to `f`.
pub fn nearest_l<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    q: u32,
    pol: Polarization,
    frequency: T,
) -> Result<u32> {
    let lambda = speed_of_light::<T>() / frequency;
    let n = refractive_index(material, lambda)?;
    let x = T::lit(2.0 * PI) * geometry.equatorial_radius / lambda;
    // invert nx ≈ ν + 1.856 q^{2/3} ν^{1/3}
    let nx = (n * x).to_f64_lossy();
    let shift = 1.856 * (q as f64).powf(2.0 / 3.0);
    let mut nu = nx;
    for _ in 0..4 {
        nu = nx - shift * nu.max(1.0).cbrt();
    }
    let mut l = (nu - 0.5).round().max(MIN_ANGULAR_L as f64) as u32;
    let dist = |l: u32| -> Result<T> {
        Ok((sphere_frequency(geometry, material, q, l, pol)? - frequency).abs())
    };
    let mut best = dist(l)?;
    loop {
        let up = dist(l + 1)?;
        if up < best {
            l += 1;
            best = up;
            continue;
        }
        if l > MIN_ANGULAR_L {
            let down = dist(l - 1)?;
            if down < best {
                l -= 1;
                best = down;
                continue;
            }
        }
        return Ok(l);
    }
}

fn to_ghz<T: Real>(thz: T) -> T {
    thz * T::lit(1000.0)
}

/// Free spectral range (GHz) of the fundamental TE family near `wavelength` (µm).
pub fn free_spectral_range<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    wavelength: T,
) -> Result<T> {
    let f = speed_of_light::<T>() / wavelength;
    let pol = Polarization::TE;
    let l = nearest_l(geometry, material, 1, pol, f)?;
    let lo = mode_frequency(geometry, material, ModeId::equatorial(1, l, pol))?;
    let hi = mode_frequency(geometry, material, ModeId::equatorial(1, l + 1, pol))?;
    Ok(to_ghz(hi - lo))
}

/// TM minus TE frequency (GHz) at equal `(q=1, l, m=l)` near `wavelength`.
pub fn polarization_splitting<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    wavelength: T,
) -> Result<T> {
    let f = speed_of_light::<T>() / wavelength;
    let l = nearest_l(geometry, material, 1, Polarization::TE, f)?;
    let te = mode_frequency(geometry, material, ModeId::equatorial(1, l, Polarization::TE))?;
    let tm = mode_frequency(geometry, material, ModeId::equatorial(1, l, Polarization::TM))?;
    Ok(to_ghz(tm - te))
}

/// `f(q=1, l, |m|) - f(q=1, l, |m|-1)` in GHz for the TE family.
///
/// Zero for a sphere, linear in `|m|`, and close to `ε·FSR` at `|m| = l`.
/// The sublevel pair needs `|m| ≥ 1`.
pub fn ellipticity_splitting<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    l: u32,
    m: i32,
) -> Result<T> {
    check_l(l)?;
    let am = m.unsigned_abs();
    if am > l {
        return Err(WgmError::domain(format!("|m| = {am} exceeds l = {l}")));
    }
    if am == 0 {
        return Err(WgmError::domain("the splitting below |m| = 0 is undefined"));
    }
    let eps = geometry.ellipticity;
    if eps == T::zero() {
        return Ok(T::zero());
    }
    let f0 = sphere_frequency(geometry, material, 1, l, Polarization::TE)?;
    let am = am as i32;
    let d = ellipticity_factor(eps, l, am) - ellipticity_factor(eps, l, am - 1);
    Ok(to_ghz(f0 * d))
}

/// [`ellipticity_splitting`] at `|m| = l` for the TE family nearest `wavelength`.
pub fn equatorial_azimuthal_splitting<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    wavelength: T,
) -> Result<T> {
    let f = speed_of_light::<T>() / wavelength;
    let l = nearest_l(geometry, material, 1, Polarization::TE, f)?;
    ellipticity_splitting(geometry, material, l, l as i32)
}

/// Which families [`spectrum_window`] enumerates, and the line parameters
/// attached to each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFilter<T> {
    /// Radial orders `1..=max_q`; 0 selects nothing.
    pub max_q: u32,
    /// Largest `l - m`; sublevels have `0 ≤ m ≤ l`.
    pub max_l_minus_m: u32,
    pub polarizations: Vec<Polarization>,
    pub loaded_q: T,
    pub depth: T,
}

impl<T: Real> ModeFilter<T> {
    pub fn fundamental(max_l_minus_m: u32) -> Self {
        ModeFilter {
            max_q: 1,
            max_l_minus_m,
            polarizations: Polarization::BOTH.to_vec(),
            loaded_q: T::lit(1e8),
            depth: T::lit(0.3),
        }
    }

    pub fn empty() -> Self {
        ModeFilter {
            max_q: 0,
            polarizations: Vec::new(),
            ..Self::fundamental(0)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max_q == 0 || self.polarizations.is_empty()
    }
}

/// All modes selected by `filter` with frequency in `[f_lo, f_hi)` THz, sorted
/// by frequency (ties by mode label).
pub fn spectrum_window<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    f_lo: T,
    f_hi: T,
    filter: &ModeFilter<T>,
) -> Result<Vec<ModeLine<T>>> {
    if !(f_lo < f_hi) || f_lo <= T::zero() {
        return Err(WgmError::domain("window needs 0 < f_lo < f_hi"));
    }
    if filter.is_empty() {
        return Ok(Vec::new());
    }
    let mid = (f_lo + f_hi) * T::lit(0.5);
    let c = speed_of_light::<T>();
    let fsr = free_spectral_range(geometry, material, c / mid)? / T::lit(1000.0);
    if f_hi - f_lo > T::lit(MAX_WINDOW_FSR) * fsr {
        return Err(WgmError::domain(format!(
            "window of {} GHz exceeds {MAX_WINDOW_FSR} free spectral ranges",
            to_ghz(f_hi - f_lo).to_f64_lossy()
        )));
    }
    let eps = geometry.ellipticity;
    let spread = (eps.abs().to_f64_lossy() * filter.max_l_minus_m as f64).ceil() as u32 + 2;

    let mut lines = Vec::new();
    for &pol in &filter.polarizations {
        for q in 1..=filter.max_q {
            let l_lo = nearest_l(geometry, material, q, pol, f_lo)?
                .saturating_sub(spread)
                .max(MIN_ANGULAR_L);
            let l_hi = nearest_l(geometry, material, q, pol, f_hi)? + spread;
            for l in l_lo..=l_hi {
                let fs = sphere_frequency(geometry, material, q, l, pol)?;
                for d in 0..=filter.max_l_minus_m.min(l) {
                    let m = (l - d) as i32;
                    let f = fs * ellipticity_factor(eps, l, m);
                    if f >= f_lo && f < f_hi {
                        lines.push(ModeLine {
                            mode: ModeId { q, l, m, pol },
                            frequency: f,
                            loaded_q: filter.loaded_q,
                            depth: filter.depth,
                        });
                    }
                }
            }
        }
    }
    lines.sort_by(|a, b| {
        a.frequency
            .partial_cmp(&b.frequency)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.mode.cmp(&b.mode))
    });
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    type G = SpheroidGeometry<f64>;
    type M = OpticalMaterial<f64>;

    fn silica() -> M {
        M::fused_silica()
    }

    // roots at n = 1.4533 from an independent arbitrary-precision evaluation
    const REFERENCE_X: [(u32, u32, Polarization, f64); 3] = [
        (1, 100, Polarization::TE, 74.239_566_968_029_85),
        (1, 100, Polarization::TM, 74.722_171_272_705_96),
        (2, 600, Polarization::TM, 431.806_316_207_509_67),
    ];

    fn x_to_f(a: f64, x: f64) -> f64 {
        x * 299.792_458 / (2.0 * PI * a)
    }

    // radius that puts size parameter x at 800 nm
    fn radius_for(x: f64) -> f64 {
        x * 0.8 / (2.0 * PI)
    }

    #[test]
    fn exact_root_matches_reference() {
        let mat = M::constant_index(1.4533);
        for (q, l, pol, x) in REFERENCE_X {
            let a = radius_for(x);
            let f = exact_mie_root(&G::sphere(a), &mat, q, l, pol).unwrap();
            let want = x_to_f(a, x);
            assert!(((f - want) / want).abs() < 1e-11, "{q} {l} {pol}: {f} vs {want}");
        }
    }

    #[test]
    fn asymptotic_root_matches_reference() {
        let mat = M::constant_index(1.4533);
        for (q, l, pol, x) in REFERENCE_X {
            let a = radius_for(x);
            let f = mode_frequency(&G::sphere(a), &mat, ModeId::equatorial(q, l, pol)).unwrap();
            let want = x_to_f(a, x);
            assert!(((f - want) / want).abs() < 1e-6, "{q} {l} {pol}: {f} vs {want}");
        }
    }

    #[test]
    fn closed_form_seed_is_close() {
        for (q, l, pol, x) in REFERENCE_X {
            let s = airy_expansion_root(1.4533, l, q, pol);
            assert!(((s - x) / x).abs() < 5e-4);
        }
    }

    #[test]
    fn low_l_is_refused() {
        let g = G::sphere(5.0);
        let err = mode_frequency(&g, &silica(), ModeId::equatorial(1, 19, Polarization::TE));
        assert!(matches!(err, Err(WgmError::Domain(_))));
        assert!(mode_frequency(&g, &silica(), ModeId::equatorial(1, 20, Polarization::TE)).is_ok());
    }

    #[test]
    fn l_near_375_thz_on_40_um() {
        let g = G::sphere(40.0);
        let l = nearest_l(&g, &silica(), 1, Polarization::TE, 375.0).unwrap();
        assert!((441..=445).contains(&l), "l = {l}");
        let f = mode_frequency(&g, &silica(), ModeId::equatorial(1, l, Polarization::TE)).unwrap();
        assert!((f - 375.0).abs() < 0.82);
    }

    #[test]
    fn tm_above_te() {
        let g = G::sphere(40.0);
        for l in [300, 443] {
            let te = exact_mie_root(&g, &silica(), 1, l, Polarization::TE).unwrap();
            let tm = exact_mie_root(&g, &silica(), 1, l, Polarization::TM).unwrap();
            assert!(tm > te);
        }
        assert!(polarization_splitting(&g, &silica(), 0.8).unwrap() > 0.0);
    }

    #[test]
    fn doubling_radius_halves_frequency() {
        let mode = ModeId::equatorial(1, 600, Polarization::TE);
        let f1 = mode_frequency(&G::sphere(40.0), &silica(), mode).unwrap();
        let f2 = mode_frequency(&G::sphere(80.0), &silica(), mode).unwrap();
        assert!((f2 / f1 - 0.5).abs() < 0.01);
    }

    #[test]
    fn fsr_and_polarization_interval_of_80_um_sphere() {
        let g = G::sphere(40.0);
        let fsr = free_spectral_range(&g, &silica(), 0.8).unwrap();
        assert!((fsr - 810.0).abs() < 0.03 * 810.0, "{fsr}");
        let dp = polarization_splitting(&g, &silica(), 0.8).unwrap();
        assert!((dp - 580.0).abs() < 0.05 * 580.0, "{dp}");
        let n = silica().refractive_index(0.8).unwrap();
        let simple = 299.792_458 / (2.0 * PI * 40.0 * n) * 1000.0;
        assert!((fsr / simple - 1.0).abs() < 0.02);
    }

    #[test]
    fn fsr_of_200_um_sphere_is_about_twice_150_ghz() {
        let fsr = free_spectral_range(&G::sphere(100.0), &silica(), 0.8).unwrap();
        assert!((300.0..=330.0).contains(&fsr), "{fsr}");
    }

    #[test]
    fn ellipticity_splitting_properties() {
        let g = G::sphere(40.0);
        assert_eq!(ellipticity_splitting(&g, &silica(), 443, 443).unwrap(), 0.0);
        let g = g.with_ellipticity(0.46);
        let dm = equatorial_azimuthal_splitting(&g, &silica(), 0.8).unwrap();
        assert!((dm - 375.0).abs() < 0.05 * 375.0, "{dm}");
        // linear in |m|
        let d = |m| ellipticity_splitting(&g, &silica(), 443, m).unwrap();
        let (a, b, c) = (d(100), d(200), d(300));
        assert!(((c - b) - (b - a)).abs() < 1e-9 * c);
        assert_eq!(d(-200), b);
        assert!(ellipticity_splitting(&g, &silica(), 443, 0).is_err());
    }

    #[test]
    fn sublevels_are_even_in_m() {
        let g = G::sphere(40.0).with_ellipticity(0.3);
        for m in [0, 17, 300] {
            let p = mode_frequency(&g, &silica(), ModeId::new(1, 443, m, Polarization::TM).unwrap()).unwrap();
            let n = mode_frequency(&g, &silica(), ModeId::new(1, 443, -m, Polarization::TM).unwrap()).unwrap();
            assert_eq!(p, n);
        }
    }

    #[test]
    fn window_counts() {
        let mat = silica();
        let g = G::sphere(40.0).with_ellipticity(0.46);
        let fsr = free_spectral_range(&g, &mat, 0.8).unwrap() / 1000.0;
        let f_lo = 374.9;
        let lines = spectrum_window(&g, &mat, f_lo, f_lo + fsr, &ModeFilter::fundamental(0)).unwrap();
        assert_eq!(lines.len(), 2);
        assert_ne!(lines[0].mode.pol, lines[1].mode.pol);
        let lines = spectrum_window(&g, &mat, f_lo, f_lo + fsr, &ModeFilter::fundamental(2)).unwrap();
        assert_eq!(lines.len(), 6);
        assert!(lines.windows(2).all(|w| w[0].frequency <= w[1].frequency));
        assert!(spectrum_window(&g, &mat, f_lo, f_lo + fsr, &ModeFilter::empty()).unwrap().is_empty());
        assert!(spectrum_window(&g, &mat, f_lo, f_lo + 6.0 * fsr, &ModeFilter::fundamental(0)).is_err());
    }

    #[test]
    fn single_precision_solver() {
        let g = SpheroidGeometry::<f32>::sphere(40.0);
        let mat = OpticalMaterial::<f32>::fused_silica();
        let f = mode_frequency(&g, &mat, ModeId::equatorial(1, 443, Polarization::TE)).unwrap();
        let f64_ref = mode_frequency(&G::sphere(40.0), &silica(), ModeId::equatorial(1, 443, Polarization::TE)).unwrap();
        assert!(((f as f64 - f64_ref) / f64_ref).abs() < 1e-5);
    }
}
