use rug::float::Constant;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working precision and the requested accuracy of final results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecCtx {
    bits: u32,
    target_rel_err: f64,
}

impl PrecCtx {
    pub const DEFAULT_BITS: u32 = 256;
    pub const DEFAULT_TARGET: f64 = 1e-30;
    pub const MIN_BITS: u32 = 64;
    pub const MAX_BITS: u32 = 1 << 16;

    pub fn new(bits: u32, target_rel_err: f64) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::InvalidPrecision(format!(
                "bits = {bits} outside [{}, {}]",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        let floor = 2f64.powi(1 - bits as i32);
        if !(target_rel_err.is_finite() && target_rel_err > 0.0 && target_rel_err >= floor) {
            return Err(Error::InvalidPrecision(format!(
                "target_rel_err = {target_rel_err:e} must be finite and >= 2^(1-bits)"
            )));
        }
        Ok(Self {
            bits,
            target_rel_err,
        })
    }

    /// Precision with the default target, loosened if `bits` cannot reach it.
    pub fn with_bits(bits: u32) -> Result<Self> {
        let floor = 2f64.powi(1 - bits as i32);
        Self::new(bits, Self::DEFAULT_TARGET.max(floor * 16.0))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn target(&self) -> f64 {
        self.target_rel_err
    }

    /// Same target at twice the precision.
    pub fn doubled(&self) -> Self {
        Self {
            bits: (self.bits * 2).min(Self::MAX_BITS),
            target_rel_err: self.target_rel_err,
        }
    }

    pub fn with_target(&self, target_rel_err: f64) -> Result<Self> {
        Self::new(self.bits, target_rel_err)
    }

    pub fn real<T>(&self, v: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.bits, v)
    }

    pub fn complex<T>(&self, v: T) -> Complex
    where
        Complex: rug::Assign<T>,
    {
        Complex::with_val(self.bits, v)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi)
    }

    /// 2^-bits as a working-precision float.
    pub fn ulp(&self) -> Float {
        Float::with_val(self.bits, Float::u_exp(1, -(self.bits as i32)))
    }

    /// Parse a decimal literal at working precision.
    pub fn parse(&self, s: &str) -> Result<Float> {
        Float::parse(s.trim())
            .map(|p| Float::with_val(self.bits, p))
            .map_err(|e| Error::Parse(format!("'{s}': {e}")))
    }
}

impl Default for PrecCtx {
    fn default() -> Self {
        Self {
            bits: Self::DEFAULT_BITS,
            target_rel_err: Self::DEFAULT_TARGET,
        }
    }
}
