//! Optical and mechanical constants of the resonator glass.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::scalar::Real;

/// Supported dispersion range of the Sellmeier model, µm.
pub const MIN_WAVELENGTH_UM: f64 = 0.4;
pub const MAX_WAVELENGTH_UM: f64 = 2.0;

/// One Sellmeier resonance term `B λ² / (λ² − C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerm<T> {
    /// Oscillator strength, dimensionless.
    pub b: T,
    /// Resonance wavelength squared, µm².
    pub c: T,
}

/// Glass constants: dispersion, thermal, elastic and photoelastic.
///
/// The photoelastic response is projected on the mode's electric field. The
/// TE field of a whispering-gallery mode points mostly along the strain axis;
/// `te_transverse_field_fraction` is the share of its energy in the transverse
/// plane. `tm_strain_correction` rescales the total TM strain response and
/// absorbs the departure of a strongly deformed sphere from the cylinder limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalMaterial<T> {
    pub name: String,
    pub sellmeier: Vec<SellmeierTerm<T>>,
    /// dN/dT, 1/K.
    pub dn_dt: T,
    /// Linear thermal expansion coefficient, 1/K.
    pub thermal_expansion: T,
    pub poisson_ratio: T,
    pub photoelastic_p11: T,
    pub photoelastic_p12: T,
    pub te_transverse_field_fraction: T,
    pub tm_strain_correction: T,
    /// Largest axial strain with fully reversible tuning.
    pub elastic_limit_strain: T,
    /// Axial strain where plastic slip sets in.
    pub plastic_onset_strain: T,
    /// Wavelength (µm) at which strain-optic coefficients are evaluated.
    pub reference_wavelength: T,
}

impl<T: Real> OpticalMaterial<T> {
    /// Fused silica with standard tabulated constants.
    ///
    /// `dn_dt` is tuned so the thermal shift at 800 nm is −2.5 GHz/K, the
    /// transverse TE field fraction so the bare cylinder TM/TE slope ratio is
    /// 1.75, and the strain limits to the plastic slip observed near 42 V on
    /// the 80 µm two-stem device.
    pub fn fused_silica() -> Self {
        let term = |b: f64, lambda: f64| SellmeierTerm {
            b: T::lit(b),
            c: T::lit(lambda * lambda),
        };
        OpticalMaterial {
            name: "fused_silica".into(),
            sellmeier: vec![
                term(0.696_166_3, 0.068_404_3),
                term(0.407_942_6, 0.116_241_4),
                term(0.897_479_4, 9.896_161),
            ],
            dn_dt: T::lit(8.9e-6),
            thermal_expansion: T::lit(5.5e-7),
            poisson_ratio: T::lit(0.17),
            photoelastic_p11: T::lit(0.121),
            photoelastic_p12: T::lit(0.270),
            te_transverse_field_fraction: T::lit(0.104),
            tm_strain_correction: T::one(),
            elastic_limit_strain: T::lit(2.5e-3),
            plastic_onset_strain: T::lit(2.52e-3),
            reference_wavelength: T::lit(0.8),
        }
    }

    /// Dispersion-free medium of index `n` (single Sellmeier term with `C = 0`).
    pub fn constant_index(n: T) -> Self {
        OpticalMaterial {
            name: "constant_index".into(),
            sellmeier: vec![SellmeierTerm {
                b: n * n - T::one(),
                c: T::zero(),
            }],
            ..Self::fused_silica()
        }
    }

    /// Refractive index at `wavelength` (µm).
    pub fn refractive_index(&self, wavelength: T) -> Result<T> {
        refractive_index(self, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(WgmError::invalid(format!("material.{field}"), reason))
            }
        };
        check(!self.sellmeier.is_empty(), "sellmeier", "at least one term required")?;
        let sigma = self.poisson_ratio;
        check(
            sigma > T::zero() && sigma < T::lit(0.5),
            "poisson_ratio",
            "must lie in (0, 0.5)",
        )?;
        check(
            self.elastic_limit_strain > T::zero(),
            "elastic_limit_strain",
            "must be positive",
        )?;
        check(
            self.plastic_onset_strain >= self.elastic_limit_strain,
            "plastic_onset_strain",
            "must be at least elastic_limit_strain",
        )?;
        let frac = self.te_transverse_field_fraction;
        check(
            frac >= T::zero() && frac <= T::one(),
            "te_transverse_field_fraction",
            "must lie in [0, 1]",
        )?;
        check(
            self.tm_strain_correction > T::zero(),
            "tm_strain_correction",
            "must be positive",
        )?;
        let lref = self.reference_wavelength.to_f64_lossy();
        check(
            (MIN_WAVELENGTH_UM..=MAX_WAVELENGTH_UM).contains(&lref),
            "reference_wavelength",
            "outside the supported dispersion range",
        )?;
        for i in 0..=32 {
            let lam = MIN_WAVELENGTH_UM + (MAX_WAVELENGTH_UM - MIN_WAVELENGTH_UM) * i as f64 / 32.0;
            let n = refractive_index(self, T::lit(lam))?;
            if !(n.is_finite() && n > T::one() && n < T::lit(2.0)) {
                return Err(WgmError::invalid(
                    "material.sellmeier",
                    format!("index {n} at {lam} µm is outside (1, 2)"),
                ));
            }
        }
        Ok(())
    }
}

/// Sellmeier refractive index `n(λ)`, λ in µm within [0.4, 2.0].
pub fn refractive_index<T: Real>(material: &OpticalMaterial<T>, wavelength: T) -> Result<T> {
    let lam = wavelength.to_f64_lossy();
    if !(MIN_WAVELENGTH_UM..=MAX_WAVELENGTH_UM).contains(&lam) {
        return Err(WgmError::domain(format!(
            "wavelength {lam} µm outside dispersion range [{MIN_WAVELENGTH_UM}, {MAX_WAVELENGTH_UM}]"
        )));
    }
    let l2 = wavelength * wavelength;
    let n2 = material
        .sellmeier
        .iter()
        .fold(T::one(), |acc, t| acc + t.b * l2 / (l2 - t.c));
    Ok(n2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = OpticalMaterial<f64>;

    #[test]
    fn fused_silica_at_800nm() {
        // hand evaluation of the three-term formula gives 1.453317
        let n = M::fused_silica().refractive_index(0.8).unwrap();
        assert!((n - 1.4533).abs() < 5e-4);
        assert!((n - 1.453_317_25).abs() < 1e-7);
    }

    #[test]
    fn vacuum_limit() {
        let mut m = M::fused_silica();
        m.sellmeier = vec![SellmeierTerm { b: 0.0, c: 0.01 }];
        assert_eq!(m.refractive_index(0.8).unwrap(), 1.0);
        assert_eq!(m.refractive_index(1.9).unwrap(), 1.0);
    }

    #[test]
    fn normal_dispersion() {
        let m = M::fused_silica();
        assert!(m.refractive_index(0.8).unwrap() > m.refractive_index(1.5).unwrap());
        let mut prev = f64::INFINITY;
        for i in 0..=110 {
            let n = m.refractive_index(0.5 + 0.01 * i as f64).unwrap();
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn out_of_range_wavelength_is_domain_error() {
        let m = M::fused_silica();
        assert!(matches!(m.refractive_index(0.3), Err(WgmError::Domain(_))));
        assert!(matches!(m.refractive_index(2.5), Err(WgmError::Domain(_))));
    }

    #[test]
    fn defaults_validate_and_bad_values_do_not() {
        M::fused_silica().validate().unwrap();
        let mut m = M::fused_silica();
        m.poisson_ratio = 0.6;
        assert!(m.validate().is_err());
        let mut m = M::fused_silica();
        m.plastic_onset_strain = 1e-4;
        assert!(m.validate().is_err());
    }

    #[test]
    fn constant_index_is_flat() {
        let m = M::constant_index(1.45);
        assert!((m.refractive_index(0.5).unwrap() - 1.45).abs() < 1e-15);
        assert!((m.refractive_index(1.7).unwrap() - 1.45).abs() < 1e-15);
    }

    #[test]
    fn single_precision() {
        let n = OpticalMaterial::<f32>::fused_silica().refractive_index(0.8).unwrap();
        assert!((n - 1.4533).abs() < 5e-4);
    }
}
