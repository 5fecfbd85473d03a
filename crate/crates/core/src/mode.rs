//! Mode labels and resonance lines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgmError};
use crate::scalar::Real;

/// Field polarization. TE sorts before TM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl FromStr for Polarization {
    type Err = WgmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TE" => Ok(Polarization::TE),
            "TM" => Ok(Polarization::TM),
            other => Err(WgmError::invalid("polarization", format!("unknown value {other:?}"))),
        }
    }
}

/// Quantum numbers of a whispering-gallery mode.
///
/// The derived ordering is lexicographic in `(q, l, m, pol)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub q: u32,
    pub l: u32,
    pub m: i32,
    pub pol: Polarization,
}

impl ModeId {
    pub fn new(q: u32, l: u32, m: i32, pol: Polarization) -> Result<Self> {
        let id = ModeId { q, l, m, pol };
        id.validate()?;
        Ok(id)
    }

    /// Fundamental equatorial mode `m = l`.
    pub fn equatorial(q: u32, l: u32, pol: Polarization) -> Self {
        ModeId { q, l, m: l as i32, pol }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(WgmError::invalid("mode.q", "radial order must be at least 1"));
        }
        if self.m.unsigned_abs() > self.l {
            return Err(WgmError::invalid("mode.m", format!("|m| = {} exceeds l = {}", self.m.abs(), self.l)));
        }
        Ok(())
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(q={}, l={}, m={})", self.pol, self.q, self.l, self.m)
    }
}

/// A resonance: frequency in THz, loaded quality factor and dip depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeLine<T> {
    pub mode: ModeId,
    pub frequency: T,
    pub loaded_q: T,
    pub depth: T,
}

impl<T: Real> ModeLine<T> {
    /// Full width at half depth, THz.
    pub fn linewidth(&self) -> T {
        self.frequency / self.loaded_q
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if !(self.frequency.is_finite() && self.frequency > T::zero()) {
            return Err(WgmError::invalid("line.frequency", "must be positive"));
        }
        if !(self.loaded_q.is_finite() && self.loaded_q > T::zero()) {
            return Err(WgmError::invalid("line.loaded_q", "must be positive"));
        }
        if !(self.depth >= T::zero() && self.depth <= T::one()) {
            return Err(WgmError::invalid("line.depth", "must lie in [0, 1]"));
        }
        Ok(())
    }
}
