//! Strain and temperature tuning of resonance frequencies.
//!
//! To first order a mode follows `Δν/ν = -Δa/a - ΔN/N`. Axial stretching
//! `ε_z` contracts the equator (`Δa/a = -σ ε_z`) and changes the index through
//! the strain-optic tensor, differently for the two polarizations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::geometry::SpheroidGeometry;
use crate::material::{refractive_index, OpticalMaterial};
use crate::mode::{ModeId, ModeLine, Polarization};
use crate::modes::{free_spectral_range, MIN_ANGULAR_L};
use crate::scalar::{speed_of_light, Real};

/// Largest temperature excursion the linear thermal model accepts, K.
pub const MAX_DELTA_T: f64 = 100.0;

/// Piezo stack pulling on the stems. Displacements in µm, voltages in V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorAssembly<T> {
    pub pzt_displacement_per_volt: T,
    pub voltage_range: [T; 2],
    /// Share of the stack displacement taken up by the strained gauge section.
    pub compliance_fraction_sphere: T,
    /// Length of the strained section (sphere plus stems), µm.
    pub gauge_length: T,
}

impl<T: Real> ActuatorAssembly<T> {
    /// Axial strain per volt.
    pub fn strain_per_volt(&self) -> T {
        self.pzt_displacement_per_volt * self.compliance_fraction_sphere / self.gauge_length
    }

    /// Elongation of the gauge section per volt, µm/V.
    pub fn gauge_displacement_per_volt(&self) -> T {
        self.pzt_displacement_per_volt * self.compliance_fraction_sphere
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pzt_displacement_per_volt > T::zero()) {
            return Err(WgmError::invalid("assembly.pzt_displacement_per_volt", "must be positive"));
        }
        let [lo, hi] = self.voltage_range;
        if !(lo < hi) {
            return Err(WgmError::invalid("assembly.voltage_range", "needs V_min < V_max"));
        }
        let c = self.compliance_fraction_sphere;
        if !(c > T::zero() && c <= T::one()) {
            return Err(WgmError::invalid("assembly.compliance_fraction_sphere", "must lie in (0, 1]"));
        }
        if !(self.gauge_length > T::zero()) {
            return Err(WgmError::invalid("assembly.gauge_length", "must be positive"));
        }
        Ok(())
    }
}

/// Strain of the resonator: axial strain, equatorial `Δa/a` and the relative
/// index changes `ΔN/N` seen by each polarization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrainState<T> {
    pub axial_strain: T,
    pub equatorial_radius_strain: T,
    pub index_strain_te: T,
    pub index_strain_tm: T,
}

impl<T: Real> StrainState<T> {
    pub fn from_axial(material: &OpticalMaterial<T>, axial_strain: T) -> Result<Self> {
        Ok(StrainState {
            axial_strain,
            equatorial_radius_strain: -material.poisson_ratio * axial_strain,
            index_strain_te: photoelastic_index_shift(material, axial_strain, Polarization::TE)?,
            index_strain_tm: photoelastic_index_shift(material, axial_strain, Polarization::TM)?,
        })
    }

    pub fn index_strain(&self, pol: Polarization) -> T {
        match pol {
            Polarization::TE => self.index_strain_te,
            Polarization::TM => self.index_strain_tm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThermalState<T> {
    pub delta_t: T,
}

/// Strain produced by `voltage` on the actuator.
pub fn strain_from_voltage<T: Real>(
    assembly: &ActuatorAssembly<T>,
    material: &OpticalMaterial<T>,
    voltage: T,
) -> Result<StrainState<T>> {
    assembly.validate()?;
    let [lo, hi] = assembly.voltage_range;
    if !(voltage >= lo && voltage <= hi) {
        return Err(WgmError::domain(format!(
            "voltage {voltage} V outside actuator range [{lo}, {hi}]"
        )));
    }
    StrainState::from_axial(material, voltage * assembly.strain_per_volt())
}

/// `ΔN/N` for axial strain `eps_z` (transverse strain `-σ ε_z`).
///
/// The impermeability change along the axis is `ε(p11 - 2σ p12)` and across it
/// `ε(p12 - σ(p11 + p12))`. The TM field lies in the transverse plane; the TE
/// field lies along the axis except for `te_transverse_field_fraction`.
/// `tm_strain_correction` scales the resulting total TM tuning rate.
pub fn photoelastic_index_shift<T: Real>(
    material: &OpticalMaterial<T>,
    eps_z: T,
    pol: Polarization,
) -> Result<T> {
    if eps_z.abs() > material.plastic_onset_strain {
        return Err(WgmError::domain(format!(
            "strain {eps_z} beyond plastic onset {}",
            material.plastic_onset_strain
        )));
    }
    let sigma = material.poisson_ratio;
    let (p11, p12) = (material.photoelastic_p11, material.photoelastic_p12);
    let d_axis = eps_z * (p11 - T::lit(2.0) * sigma * p12);
    let d_trans = eps_z * (p12 - sigma * (p11 + p12));
    let n = refractive_index(material, material.reference_wavelength)?;
    let half_n2 = n * n * T::lit(0.5);
    match pol {
        Polarization::TE => {
            let w = material.te_transverse_field_fraction;
            Ok(-half_n2 * ((T::one() - w) * d_axis + w * d_trans))
        }
        Polarization::TM => {
            let f = material.tm_strain_correction;
            let bare = -half_n2 * d_trans;
            Ok((T::one() - f) * sigma * eps_z + f * bare)
        }
    }
}

/// Relative tuning rate `(Δν/ν)/ε_z` of a polarization.
pub fn strain_tuning_coefficient<T: Real>(material: &OpticalMaterial<T>, pol: Polarization) -> Result<T> {
    let probe = material.elastic_limit_strain;
    let state = StrainState::from_axial(material, probe)?;
    Ok((-state.equatorial_radius_strain - state.index_strain(pol)) / probe)
}

/// Frequency shift (GHz) of `line` under `strain`.
pub fn tuned_frequency_shift<T: Real>(line: &ModeLine<T>, strain: &StrainState<T>) -> T {
    let rel = -strain.equatorial_radius_strain - strain.index_strain(line.mode.pol);
    line.frequency * rel * T::lit(1000.0)
}

/// Frequency shift (GHz) of `line` for a temperature change.
pub fn thermal_shift<T: Real>(
    line: &ModeLine<T>,
    thermal: &ThermalState<T>,
    material: &OpticalMaterial<T>,
) -> Result<T> {
    if !(thermal.delta_t.abs() <= T::lit(MAX_DELTA_T)) {
        return Err(WgmError::domain(format!(
            "|ΔT| = {} K exceeds {MAX_DELTA_T} K",
            thermal.delta_t.abs()
        )));
    }
    let n = refractive_index(material, speed_of_light::<T>() / line.frequency)?;
    let rate = material.thermal_expansion + material.dn_dt / n;
    Ok(-line.frequency * rate * thermal.delta_t * T::lit(1000.0))
}

/// Nominal line at the material's reference wavelength, used for slopes.
pub fn reference_line<T: Real>(material: &OpticalMaterial<T>, pol: Polarization) -> ModeLine<T> {
    ModeLine {
        mode: ModeId::equatorial(1, MIN_ANGULAR_L, pol),
        frequency: speed_of_light::<T>() / material.reference_wavelength,
        loaded_q: T::lit(1e8),
        depth: T::lit(0.3),
    }
}

/// Tuning slope (GHz/V) of the reference line; the model is linear in voltage.
pub fn tuning_slope<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
    pol: Polarization,
) -> Result<T> {
    geometry.validate()?;
    assembly.validate()?;
    let line = reference_line(material, pol);
    let per_volt = StrainState::from_axial(material, assembly.strain_per_volt())?;
    Ok(tuned_frequency_shift(&line, &per_volt))
}

/// One row of a voltage tuning curve (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint<T> {
    pub voltage: T,
    pub shift_te: T,
    pub shift_tm: T,
}

/// Shifts of the reference TE and TM lines at each voltage.
pub fn tuning_curve<T: Real>(
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
    voltages: &[T],
) -> Result<Vec<TuningPoint<T>>> {
    let te = reference_line(material, Polarization::TE);
    let tm = reference_line(material, Polarization::TM);
    voltages
        .iter()
        .map(|&v| {
            let s = strain_from_voltage(assembly, material, v)?;
            Ok(TuningPoint {
                voltage: v,
                shift_te: tuned_frequency_shift(&te, &s),
                shift_tm: tuned_frequency_shift(&tm, &s),
            })
        })
        .collect()
}

/// Reversible tuning range of an assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticBudget<T> {
    pub max_voltage: T,
    pub max_strain: T,
    /// GHz.
    pub max_shift_te: T,
    /// GHz.
    pub max_shift_tm: T,
    /// GHz, at the reference wavelength.
    pub fsr: T,
    /// `max_shift_te / fsr`.
    pub fsr_fraction: T,
    pub fsr_fraction_tm: T,
    /// True when the elastic limit, not the supply, sets `max_voltage`.
    pub strain_limited: bool,
}

/// Largest voltage keeping the strain elastic, and the shifts it buys.
///
/// Shifts are counted from the lower end of the voltage range; a zero-width
/// range gives a zero budget.
pub fn elastic_budget<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    assembly: &ActuatorAssembly<T>,
) -> Result<ElasticBudget<T>> {
    geometry.validate()?;
    let [lo, hi] = assembly.voltage_range;
    if !(lo <= hi) {
        return Err(WgmError::invalid("assembly.voltage_range", "needs V_min <= V_max"));
    }
    let per_volt = assembly.strain_per_volt();
    if !(per_volt > T::zero()) {
        return Err(WgmError::invalid("assembly", "strain per volt must be positive"));
    }
    let v_limit = material.elastic_limit_strain / per_volt;
    let strain_limited = v_limit < hi;
    let max_voltage = if strain_limited { v_limit.max(lo) } else { hi };
    let strain_at = |v: T| StrainState::from_axial(material, v * per_volt);
    let s0 = strain_at(lo)?;
    let s1 = strain_at(max_voltage)?;
    let shift = |pol| {
        let line = reference_line(material, pol);
        tuned_frequency_shift(&line, &s1) - tuned_frequency_shift(&line, &s0)
    };
    let max_shift_te = shift(Polarization::TE);
    let max_shift_tm = shift(Polarization::TM);
    let fsr = free_spectral_range(geometry, material, material.reference_wavelength)?;
    Ok(ElasticBudget {
        max_voltage,
        max_strain: s1.axial_strain,
        max_shift_te,
        max_shift_tm,
        fsr,
        fsr_fraction: max_shift_te / fsr,
        fsr_fraction_tm: max_shift_tm / fsr,
        strain_limited,
    })
}

/// Strain needed to tune a mode across one free spectral range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullFsrStrain<T> {
    /// Required `Δν/ν`, equal to `1/l`.
    pub relative_shift: T,
    pub axial_strain: T,
    /// `|Δa/a|` at that strain.
    pub equatorial_deformation: T,
}

/// Axial strain giving `Δν/ν = 1/l` for the TE tuning model.
pub fn strain_required_for_full_fsr<T: Real>(
    geometry: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    mode: ModeId,
) -> Result<FullFsrStrain<T>> {
    geometry.validate()?;
    mode.validate()?;
    if mode.l < MIN_ANGULAR_L {
        return Err(WgmError::domain(format!("l = {} below {MIN_ANGULAR_L}", mode.l)));
    }
    let relative_shift = T::lit(mode.l as f64).recip();
    let k = strain_tuning_coefficient(material, Polarization::TE)?;
    let axial_strain = relative_shift / k;
    Ok(FullFsrStrain {
        relative_shift,
        axial_strain,
        equatorial_deformation: (material.poisson_ratio * axial_strain).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::nearest_l;

    type M = OpticalMaterial<f64>;

    fn device2() -> ActuatorAssembly<f64> {
        ActuatorAssembly {
            pzt_displacement_per_volt: 0.05,
            voltage_range: [0.0, 60.0],
            compliance_fraction_sphere: 0.5,
            gauge_length: 416.666_666_666_666_7,
        }
    }

    #[test]
    fn strain_per_volt_and_displacement() {
        let a = device2();
        let s = strain_from_voltage(&a, &M::fused_silica(), 1.0).unwrap();
        assert!((s.axial_strain - 6e-5).abs() < 1e-12);
        assert!((10.0 * a.gauge_displacement_per_volt() - 0.25).abs() < 1e-12);
        let zero = strain_from_voltage(&a, &M::fused_silica(), 0.0).unwrap();
        assert_eq!(zero, StrainState::default());
        assert!(strain_from_voltage(&a, &M::fused_silica(), 61.0).is_err());
    }

    #[test]
    fn cylinder_ratio_and_corrected_ratio() {
        let m = M::fused_silica();
        let te = strain_tuning_coefficient(&m, Polarization::TE).unwrap();
        let tm = strain_tuning_coefficient(&m, Polarization::TM).unwrap();
        assert!((tm / te - 1.75).abs() < 0.02, "{}", tm / te);
        let mut c = m.clone();
        c.tm_strain_correction = 0.914;
        let tm_c = strain_tuning_coefficient(&c, Polarization::TM).unwrap();
        assert!((tm_c / te - 1.6).abs() < 0.05);
        assert!((tm_c - 0.914 * tm).abs() < 1e-12);
    }

    #[test]
    fn zero_strain_gives_zero_index_change() {
        let m = M::fused_silica();
        for p in Polarization::BOTH {
            assert_eq!(photoelastic_index_shift(&m, 0.0, p).unwrap(), 0.0);
        }
        assert!(photoelastic_index_shift(&m, 3e-3, Polarization::TE).is_err());
    }

    #[test]
    fn slopes_of_device2() {
        let g = SpheroidGeometry::sphere(40.0);
        let mut m = M::fused_silica();
        m.tm_strain_correction = 0.914;
        let te = tuning_slope(&g, &m, &device2(), Polarization::TE).unwrap();
        let tm = tuning_slope(&g, &m, &device2(), Polarization::TM).unwrap();
        assert!((te - 5.0).abs() < 0.75, "{te}");
        assert!((tm - 8.0).abs() < 1.2, "{tm}");
        let mut a = device2();
        a.pzt_displacement_per_volt *= 3.0;
        let te3 = tuning_slope(&g, &m, &a, Polarization::TE).unwrap();
        assert!((te3 / te - 3.0).abs() < 1e-12);
    }

    #[test]
    fn stretching_raises_frequency() {
        let m = M::fused_silica();
        let s = StrainState::from_axial(&m, 1e-3).unwrap();
        for p in Polarization::BOTH {
            assert!(tuned_frequency_shift(&reference_line(&m, p), &s) > 0.0);
        }
    }

    #[test]
    fn thermal_coefficient() {
        let m = M::fused_silica();
        let mut line = reference_line(&m, Polarization::TE);
        line.frequency = 375.0;
        let one = thermal_shift(&line, &ThermalState { delta_t: 1.0 }, &m).unwrap();
        assert!((one + 2.5).abs() < 0.25, "{one}");
        let two = thermal_shift(&line, &ThermalState { delta_t: 2.0 }, &m).unwrap();
        assert_eq!(two, 2.0 * one);
        assert_eq!(thermal_shift(&line, &ThermalState { delta_t: 0.0 }, &m).unwrap(), 0.0);
        assert!(thermal_shift(&line, &ThermalState { delta_t: 101.0 }, &m).is_err());
    }

    #[test]
    fn budget_of_device2_stops_at_elastic_limit() {
        let g = SpheroidGeometry::sphere(40.0).with_ellipticity(0.46);
        let b = elastic_budget(&g, &M::fused_silica(), &device2()).unwrap();
        assert!(b.strain_limited);
        assert!((b.max_voltage - 41.67).abs() < 0.1, "{}", b.max_voltage);
        assert!((b.max_strain - 2.5e-3).abs() < 1e-9);
        assert!((b.fsr_fraction * b.fsr - b.max_shift_te).abs() < 1e-9);
    }

    #[test]
    fn zero_range_budget_is_zero() {
        let mut a = device2();
        a.voltage_range = [0.0, 0.0];
        let b = elastic_budget(&SpheroidGeometry::sphere(40.0), &M::fused_silica(), &a).unwrap();
        assert_eq!(b.max_shift_te, 0.0);
        assert_eq!(b.max_shift_tm, 0.0);
        assert_eq!(b.fsr_fraction, 0.0);
    }

    #[test]
    fn full_fsr_strain_of_50_um_sphere() {
        let g = SpheroidGeometry::sphere(25.0);
        let m = M::fused_silica();
        let l = nearest_l(&g, &m, 1, Polarization::TE, 299.792_458 / 0.8).unwrap();
        let r = strain_required_for_full_fsr(&g, &m, ModeId::equatorial(1, l, Polarization::TE)).unwrap();
        assert!(r.axial_strain > 0.005 && r.axial_strain < 0.02, "{}", r.axial_strain);
        assert!(r.equatorial_deformation > 0.001 && r.equatorial_deformation < 0.004);
        let r2 = strain_required_for_full_fsr(&g, &m, ModeId::equatorial(1, 2 * l, Polarization::TE)).unwrap();
        assert_eq!(r2.relative_shift * 2.0, r.relative_shift);
        let r3 = strain_required_for_full_fsr(&g, &m, ModeId::new(1, l, 3, Polarization::TE).unwrap()).unwrap();
        assert_eq!(r3, r);
    }
}
