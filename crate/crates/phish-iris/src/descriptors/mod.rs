//! The five compact visual descriptors (SCD, CLD, CEDD, FCTH, JCD) and
//! the HOG baseline.
//!
//! Every extractor takes an arbitrary-sized RGB raster (above its minimum
//! grid size) and produces a fixed-length real vector.

mod cedd;
mod cld;
mod fcth;
mod fuzzy;
mod hog;
mod jcd;
mod scd;

pub use cedd::{cedd, CEDD_DIM};
pub use cld::{cld, CLD_DIM};
pub use fcth::{fcth, FCTH_DIM};
pub use hog::{hog, hog_dim};
pub use jcd::{jcd, JCD_DIM};
pub use scd::{scd, scd_histogram, SCD_DIM};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("{kind} needs at least a {min_w}x{min_h} image, got {w}x{h}")]
    ImageTooSmall {
        kind: DescriptorKind,
        min_w: u32,
        min_h: u32,
        w: u32,
        h: u32,
    },
    #[error("{0} has no fixed base dimension; its length is set by its parameters")]
    NoFixedDimension(DescriptorKind),
    #[error("schema error: expected a {expected}-dimensional {kind} vector, got {got} values")]
    DimensionMismatch {
        kind: DescriptorKind,
        expected: usize,
        got: usize,
    },
    #[error("expected a {expected} vector, got {got}")]
    KindMismatch {
        expected: DescriptorKind,
        got: DescriptorKind,
    },
    #[error("invalid HOG parameters: {0}")]
    InvalidHogParams(String),
}

/// Which descriptor a vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Scd,
    Cld,
    Cedd,
    Fcth,
    Jcd,
    Hog,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 6] = [
        DescriptorKind::Scd,
        DescriptorKind::Cld,
        DescriptorKind::Cedd,
        DescriptorKind::Fcth,
        DescriptorKind::Jcd,
        DescriptorKind::Hog,
    ];

    /// The five compact descriptors, without the HOG baseline.
    pub const COMPACT: [DescriptorKind; 5] = [
        DescriptorKind::Scd,
        DescriptorKind::Cld,
        DescriptorKind::Cedd,
        DescriptorKind::Fcth,
        DescriptorKind::Jcd,
    ];
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DescriptorKind::Scd => "scd",
            DescriptorKind::Cld => "cld",
            DescriptorKind::Cedd => "cedd",
            DescriptorKind::Fcth => "fcth",
            DescriptorKind::Jcd => "jcd",
            DescriptorKind::Hog => "hog",
        };
        f.write_str(s)
    }
}

impl FromStr for DescriptorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scd" => Ok(DescriptorKind::Scd),
            "cld" => Ok(DescriptorKind::Cld),
            "cedd" => Ok(DescriptorKind::Cedd),
            "fcth" => Ok(DescriptorKind::Fcth),
            "jcd" => Ok(DescriptorKind::Jcd),
            "hog" => Ok(DescriptorKind::Hog),
            other => Err(format!(
                "unknown descriptor '{other}' (expected scd|cld|cedd|fcth|jcd|hog)"
            )),
        }
    }
}

/// Base (holistic) vector length of a descriptor kind.
///
/// HOG has no fixed base dimension; it errors here.
pub fn descriptor_dim(kind: DescriptorKind) -> Result<usize, DescriptorError> {
    match kind {
        DescriptorKind::Scd => Ok(SCD_DIM),
        DescriptorKind::Cld => Ok(CLD_DIM),
        DescriptorKind::Cedd => Ok(CEDD_DIM),
        DescriptorKind::Fcth => Ok(FCTH_DIM),
        DescriptorKind::Jcd => Ok(JCD_DIM),
        DescriptorKind::Hog => Err(DescriptorError::NoFixedDimension(DescriptorKind::Hog)),
    }
}

/// Fixed-length real vector tagged with the descriptor that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    kind: DescriptorKind,
    values: Vec<f64>,
}

impl FeatureVector {
    /// Panics if any value is non-finite; extractors never produce those.
    pub fn new(kind: DescriptorKind, values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite()),
            "feature values must be finite"
        );
        Self { kind, values }
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// HOG geometry: square block and cell sizes in pixels, block stride, and
/// the orientation bin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HogParams {
    pub block: u32,
    pub stride: u32,
    pub cell: u32,
    pub bins: u32,
}

impl HogParams {
    pub fn new(block: u32, stride: u32, cell: u32, bins: u32) -> Result<Self, DescriptorError> {
        let p = Self {
            block,
            stride,
            cell,
            bins,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DescriptorError> {
        let fail = |msg: String| Err(DescriptorError::InvalidHogParams(msg));
        if self.cell == 0 || self.block == 0 || self.stride == 0 {
            return fail("block, stride and cell must be positive".into());
        }
        if !self.block.is_multiple_of(self.cell) {
            return fail(format!(
                "block {} not divisible by cell {}",
                self.block, self.cell
            ));
        }
        if self.stride > self.block {
            return fail(format!(
                "stride {} exceeds block {}",
                self.stride, self.block
            ));
        }
        if self.bins < 2 {
            return fail(format!("need at least 2 orientation bins, got {}", self.bins));
        }
        Ok(())
    }
}

/// Printed as `block-stride-cell-bins`, e.g. `80-40-20-9`.
impl fmt::Display for HogParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}-{}", self.block, self.stride, self.cell, self.bins)
    }
}

impl FromStr for HogParams {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 4 {
            return Err(format!(
                "invalid HOG parameters '{s}': expected block-stride-cell-bins"
            ));
        }
        let mut nums = [0u32; 4];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| format!("invalid HOG parameter '{part}' in '{s}'"))?;
        }
        HogParams::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| e.to_string())
    }
}
