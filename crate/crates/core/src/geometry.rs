//! Two-stem spheroidal resonator geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::scalar::Real;

/// Spheroid with two coaxial stems. Lengths in µm.
///
/// `ellipticity` is `(r_polar - r_equatorial) / a`, positive for a prolate
/// shape stretched along the stem axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpheroidGeometry<T> {
    pub equatorial_radius: T,
    #[serde(default)]
    pub ellipticity: T,
    pub stem_radius: T,
    pub stem_total_length: T,
}

impl<T: Real> SpheroidGeometry<T> {
    /// Perfect sphere of radius `a` with stems of a third of its radius.
    pub fn sphere(a: T) -> Self {
        SpheroidGeometry {
            equatorial_radius: a,
            ellipticity: T::zero(),
            stem_radius: a / T::lit(3.0),
            stem_total_length: T::lit(8.0) * a,
        }
    }

    pub fn with_ellipticity(mut self, eps: T) -> Self {
        self.ellipticity = eps;
        self
    }

    pub fn with_radius(mut self, a: T) -> Self {
        self.equatorial_radius = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.equatorial_radius;
        if !(a.is_finite() && a > T::zero()) {
            return Err(WgmError::invalid("geometry.equatorial_radius", "must be positive"));
        }
        if !(self.ellipticity.abs() < T::one()) {
            return Err(WgmError::invalid("geometry.ellipticity", "|eps| must be below 1"));
        }
        if !(self.stem_radius >= T::zero() && self.stem_radius < a) {
            return Err(WgmError::invalid(
                "geometry.stem_radius",
                "must be non-negative and below the equatorial radius",
            ));
        }
        if !(self.stem_total_length >= T::zero()) {
            return Err(WgmError::invalid("geometry.stem_total_length", "must be non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let g = SpheroidGeometry::sphere(40.0);
        g.validate().unwrap();
        assert!(g.with_radius(-1.0).validate().is_err());
        assert!(g.with_ellipticity(1.0).validate().is_err());
        assert!(g.with_ellipticity(-0.5).validate().is_ok());
        let mut thick = g;
        thick.stem_radius = 45.0;
        assert!(thick.validate().is_err());
    }
}
