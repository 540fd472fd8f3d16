//! Holistic and spatial multi-level patch-pyramid feature extraction.
//!
//! A pyramid config is an ascending set of grid orders from {1,2,3,4}.
//! Level n splits the screenshot into n x n equal cells (floor-boundary
//! rule), the base descriptor runs on every cell, and the per-cell
//! vectors are concatenated — levels ascending, cells row-major, no
//! pooling or quantization. Config "1" is the holistic scheme.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{
    cedd, cld, descriptor_dim, fcth, hog, jcd, scd, DescriptorError, DescriptorKind,
    FeatureVector, HogParams,
};
use crate::imaging::{crop, RasterImage, Region};

#[derive(Debug, Error)]
pub enum PyramidError {
    #[error("grid order {n} does not fit a {w}x{h} image")]
    DegenerateGrid { n: u32, w: u32, h: u32 },
    #[error("invalid pyramid config '{0}': expected ascending patch counts from 1, 4, 9, 16")]
    InvalidConfig(String),
    #[error("level {level} cell {cell}: {source}")]
    CellExtraction {
        level: u32,
        cell: usize,
        source: DescriptorError,
    },
    #[error("{kind} does not use pyramid configs; pass explicit parameters instead")]
    UnsupportedKind { kind: DescriptorKind },
    #[error("{kind} expects a {expected} config, got '{got}'")]
    ConfigMismatch {
        kind: DescriptorKind,
        expected: &'static str,
        got: String,
    },
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
}

/// Ascending set of grid orders, each in 1..=4.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PyramidConfig {
    levels: Vec<u32>,
}

impl PyramidConfig {
    pub fn new(levels: &[u32]) -> Result<Self, PyramidError> {
        let ok = !levels.is_empty()
            && levels.windows(2).all(|w| w[0] < w[1])
            && levels.iter().all(|&n| (1..=4).contains(&n));
        if !ok {
            let shown: Vec<String> = levels.iter().map(|n| (n * n).to_string()).collect();
            return Err(PyramidError::InvalidConfig(shown.join("+")));
        }
        Ok(Self {
            levels: levels.to_vec(),
        })
    }

    /// The single-level config covering the whole screenshot.
    pub fn holistic() -> Self {
        Self { levels: vec![1] }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn total_patches(&self) -> usize {
        self.levels.iter().map(|&n| (n * n) as usize).sum()
    }
}

/// Written in patch-count notation: "1", "1+4", "1+4+9+16", "16", ...
impl fmt::Display for PyramidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|&n| (n * n).to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for PyramidConfig {
    type Err = PyramidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || PyramidError::InvalidConfig(s.to_string());
        let mut levels = Vec::new();
        for token in s.split('+') {
            let n = match token.trim() {
                "1" => 1,
                "4" => 2,
                "9" => 3,
                "16" => 4,
                _ => return Err(invalid()),
            };
            levels.push(n);
        }
        PyramidConfig::new(&levels).map_err(|_| invalid())
    }
}

impl Serialize for PyramidConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PyramidConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Partition a w x h image into an n x n grid with cell boundaries at
/// `floor(i*w/n)` / `floor(j*h/n)`. Cells are returned row-major and
/// tile the image exactly.
pub fn grid_cells(w: u32, h: u32, n: u32) -> Result<Vec<Region>, PyramidError> {
    if n == 0 || w < n || h < n {
        return Err(PyramidError::DegenerateGrid { n, w, h });
    }
    let bound = |i: u32, extent: u32| (u64::from(i) * u64::from(extent) / u64::from(n)) as u32;
    let mut cells = Vec::with_capacity((n * n) as usize);
    for j in 0..n {
        let y0 = bound(j, h);
        let y1 = bound(j + 1, h);
        for i in 0..n {
            let x0 = bound(i, w);
            let x1 = bound(i + 1, w);
            cells.push(Region::new(x0, y0, x1 - x0, y1 - y0));
        }
    }
    Ok(cells)
}

/// Base descriptor of a whole image. HOG is parameterized and not
/// dispatchable here.
pub fn base_descriptor(
    img: &RasterImage,
    kind: DescriptorKind,
) -> Result<FeatureVector, DescriptorError> {
    match kind {
        DescriptorKind::Scd => Ok(scd(img)),
        DescriptorKind::Cld => cld(img),
        DescriptorKind::Cedd => cedd(img),
        DescriptorKind::Fcth => fcth(img),
        DescriptorKind::Jcd => jcd(&cedd(img)?, &fcth(img)?),
        DescriptorKind::Hog => Err(DescriptorError::NoFixedDimension(DescriptorKind::Hog)),
    }
}

/// Extract the concatenated pyramid vector: for each level in ascending
/// order, for each cell row-major, the base descriptor of the cropped
/// cell.
pub fn pyramid_extract(
    img: &RasterImage,
    kind: DescriptorKind,
    cfg: &PyramidConfig,
) -> Result<FeatureVector, PyramidError> {
    if kind == DescriptorKind::Hog {
        return Err(PyramidError::UnsupportedKind { kind });
    }
    let mut values = Vec::with_capacity(pyramid_dim(kind, cfg)?);
    for &n in cfg.levels() {
        let cells = grid_cells(img.width(), img.height(), n)?;
        for (cell_idx, cell) in cells.into_iter().enumerate() {
            let patch = crop(img, cell).expect("grid cells are in bounds");
            let vec = base_descriptor(&patch, kind).map_err(|source| {
                PyramidError::CellExtraction {
                    level: n,
                    cell: cell_idx,
                    source,
                }
            })?;
            values.extend_from_slice(vec.values());
        }
    }
    Ok(FeatureVector::new(kind, values))
}

/// Vector length of a pyramid extraction: base dimension times total
/// patch count.
pub fn pyramid_dim(kind: DescriptorKind, cfg: &PyramidConfig) -> Result<usize, PyramidError> {
    if kind == DescriptorKind::Hog {
        return Err(PyramidError::UnsupportedKind { kind });
    }
    Ok(descriptor_dim(kind)? * cfg.total_patches())
}

/// How a feature table was extracted: a pyramid config for the compact
/// descriptors, or explicit HOG parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtractionConfig {
    Pyramid(PyramidConfig),
    Hog(HogParams),
}

impl ExtractionConfig {
    pub fn holistic() -> Self {
        ExtractionConfig::Pyramid(PyramidConfig::holistic())
    }

    /// Check that the config variant matches the descriptor kind.
    pub fn validate_for(&self, kind: DescriptorKind) -> Result<(), PyramidError> {
        match (self, kind) {
            (ExtractionConfig::Hog(_), DescriptorKind::Hog) => Ok(()),
            (ExtractionConfig::Pyramid(_), k) if k != DescriptorKind::Hog => Ok(()),
            (cfg, kind) => Err(PyramidError::ConfigMismatch {
                kind,
                expected: if kind == DescriptorKind::Hog {
                    "block-stride-cell-bins"
                } else {
                    "patch-count pyramid"
                },
                got: cfg.to_string(),
            }),
        }
    }
}

impl fmt::Display for ExtractionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionConfig::Pyramid(cfg) => cfg.fmt(f),
            ExtractionConfig::Hog(p) => p.fmt(f),
        }
    }
}

impl FromStr for ExtractionConfig {
    type Err = String;

    /// Pyramid tokens are '+'-joined patch counts; HOG tokens are four
    /// '-'-joined integers. The two never collide.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('-') {
            return Ok(ExtractionConfig::Hog(s.parse()?));
        }
        s.parse::<PyramidConfig>()
            .map(ExtractionConfig::Pyramid)
            .map_err(|e| e.to_string())
    }
}

impl Serialize for ExtractionConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtractionConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Extract a feature vector for any (kind, config) pair.
pub fn extract(
    img: &RasterImage,
    kind: DescriptorKind,
    config: &ExtractionConfig,
) -> Result<FeatureVector, PyramidError> {
    config.validate_for(kind)?;
    match config {
        ExtractionConfig::Pyramid(cfg) => pyramid_extract(img, kind, cfg),
        ExtractionConfig::Hog(params) => Ok(hog(img, params)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_grid_splits_exactly() {
        let cells = grid_cells(100, 100, 2).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.w == 50 && c.h == 50));
        assert_eq!(cells[0], Region::new(0, 0, 50, 50));
        assert_eq!(cells[3], Region::new(50, 50, 50, 50));
    }

    #[test]
    fn remainder_pixels_go_to_later_cells() {
        let cells = grid_cells(100, 100, 3).unwrap();
        let widths: Vec<u32> = cells[..3].iter().map(|c| c.w).collect();
        assert_eq!(widths, vec![33, 33, 34]);
        let heights: Vec<u32> = (0..3).map(|j| cells[j * 3].h).collect();
        assert_eq!(heights, vec![33, 33, 34]);
    }

    #[test]
    fn screenshot_sized_grid_widths() {
        let cells = grid_cells(1366, 768, 4).unwrap();
        let widths: Vec<u32> = cells[..4].iter().map(|c| c.w).collect();
        assert_eq!(widths, vec![341, 342, 341, 342]);
        assert!(cells.iter().all(|c| c.h == 192));
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        assert!(matches!(
            grid_cells(3, 10, 4),
            Err(PyramidError::DegenerateGrid { .. })
        ));
    }

    #[test]
    fn config_tokens_round_trip() {
        for token in ["1", "4", "9", "16", "1+4", "1+4+9", "1+4+9+16"] {
            let cfg: PyramidConfig = token.parse().unwrap();
            assert_eq!(cfg.to_string(), token);
        }
        assert!("4+1".parse::<PyramidConfig>().is_err());
        assert!("1+2".parse::<PyramidConfig>().is_err());
        assert!("".parse::<PyramidConfig>().is_err());
        assert!("1+25".parse::<PyramidConfig>().is_err());
    }

    #[test]
    fn pyramid_dims_match_the_published_feature_counts() {
        let configs: Vec<(&str, [usize; 5])> = vec![
            // scd, cld, cedd, fcth, jcd
            ("4", [1024, 48, 576, 768, 672]),
            ("9", [2304, 108, 1296, 1728, 1512]),
            ("16", [4096, 192, 2304, 3072, 2688]),
            ("1+4", [1280, 60, 720, 960, 840]),
            ("1+4+9", [3584, 168, 2016, 2688, 2352]),
            ("1+4+9+16", [7680, 360, 4320, 5760, 5040]),
        ];
        for (token, expected) in configs {
            let cfg: PyramidConfig = token.parse().unwrap();
            for (kind, dim) in DescriptorKind::COMPACT.iter().zip(expected) {
                assert_eq!(pyramid_dim(*kind, &cfg).unwrap(), dim, "{kind} {token}");
            }
        }
    }

    #[test]
    fn single_level_config_equals_the_holistic_descriptor() {
        let img = RasterImage::from_pixels(
            30,
            20,
            (0..600)
                .map(|i| [(i % 256) as u8, (i * 3 % 256) as u8, 9])
                .collect(),
        );
        let holistic = base_descriptor(&img, DescriptorKind::Scd).unwrap();
        let pyr = pyramid_extract(&img, DescriptorKind::Scd, &PyramidConfig::holistic()).unwrap();
        assert_eq!(holistic.values(), pyr.values());
    }

    #[test]
    fn two_level_scd_has_five_identical_blocks_for_a_solid_image() {
        let img = RasterImage::solid(40, 40, [3, 250, 7]);
        let cfg: PyramidConfig = "1+4".parse().unwrap();
        let v = pyramid_extract(&img, DescriptorKind::Scd, &cfg).unwrap();
        assert_eq!(v.dim(), 1280);
        let first = &v.values()[..256];
        for block in v.values().chunks(256).skip(1) {
            assert_eq!(block, first);
        }
    }

    #[test]
    fn undersized_cells_identify_their_level() {
        // 100x100 image: level-2 cells are 50x50, below the 80x80 CEDD minimum
        let img = RasterImage::solid(100, 100, [1, 2, 3]);
        let cfg: PyramidConfig = "1+4".parse().unwrap();
        match pyramid_extract(&img, DescriptorKind::Cedd, &cfg) {
            Err(PyramidError::CellExtraction { level: 2, cell: 0, .. }) => {}
            other => panic!("expected a level-2 cell error, got {other:?}"),
        }
    }

    #[test]
    fn hog_kind_is_rejected_by_pyramid_ops() {
        let cfg = PyramidConfig::holistic();
        assert!(matches!(
            pyramid_dim(DescriptorKind::Hog, &cfg),
            Err(PyramidError::UnsupportedKind { .. })
        ));
        let img = RasterImage::solid(4, 4, [0, 0, 0]);
        assert!(pyramid_extract(&img, DescriptorKind::Hog, &cfg).is_err());
    }

    #[test]
    fn extraction_config_tokens_round_trip() {
        let p: ExtractionConfig = "1+4+9".parse().unwrap();
        assert_eq!(p.to_string(), "1+4+9");
        let h: ExtractionConfig = "80-40-20-9".parse().unwrap();
        assert_eq!(h.to_string(), "80-40-20-9");
        assert!(h.validate_for(DescriptorKind::Hog).is_ok());
        assert!(h.validate_for(DescriptorKind::Scd).is_err());
        assert!(p.validate_for(DescriptorKind::Hog).is_err());
        assert!(p.validate_for(DescriptorKind::Jcd).is_ok());
    }
}
