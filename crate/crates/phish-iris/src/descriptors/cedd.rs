//! Color and edge directivity descriptor: a 40x40 block scan classifying
//! each block into one of six edge-texture regions and spreading its mean
//! color over the fuzzy 24-color palette; 6 x 24 = 144 bins.

use crate::imaging::{rgb_to_hsv, RasterImage};
use crate::pyramid::grid_cells;

use super::fuzzy::{fuzzy24, mean_rgb, subblock_mean_lumas, BLOCK_GRID, MIN_IMAGE_SIDE, PALETTE_SIZE};
use super::{DescriptorError, DescriptorKind, FeatureVector};

pub const CEDD_DIM: usize = 144;

/// Texture regions: 0 no-edge, 1 non-directional, 2 horizontal,
/// 3 vertical, 4 diagonal 45 degrees, 5 diagonal 135 degrees.
pub(crate) const CEDD_REGIONS: usize = 6;

/// The five 2x2 edge filters over sub-block mean lumas (a0 a1 / a2 a3),
/// in region order 1..=5: non-directional, horizontal, vertical, 45, 135.
const EDGE_FILTERS: [[f64; 4]; 5] = [
    [2.0, -2.0, -2.0, 2.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [std::f64::consts::SQRT_2, 0.0, 0.0, -std::f64::consts::SQRT_2],
    [0.0, std::f64::consts::SQRT_2, -std::f64::consts::SQRT_2, 0.0],
];

/// Minimum filter response (in gray levels) for a block to count as
/// textured at all; below it the block is no-edge.
const EDGE_PRESENCE_THRESHOLD: f64 = 14.0;

/// Classify a block by its strongest edge filter; ties go to the earlier
/// region in the order above.
pub(crate) fn edge_region(lumas: [f64; 4]) -> usize {
    let mut best = 0usize;
    let mut best_response = 0.0;
    for (i, filter) in EDGE_FILTERS.iter().enumerate() {
        let response = filter
            .iter()
            .zip(&lumas)
            .map(|(c, a)| c * a)
            .sum::<f64>()
            .abs();
        if response > best_response {
            best_response = response;
            best = i;
        }
    }
    if best_response < EDGE_PRESENCE_THRESHOLD {
        0
    } else {
        best + 1
    }
}

pub fn cedd(img: &RasterImage) -> Result<FeatureVector, DescriptorError> {
    let hist = composite_histogram::<CEDD_REGIONS>(img, DescriptorKind::Cedd, edge_region)?;
    Ok(FeatureVector::new(DescriptorKind::Cedd, hist))
}

/// Shared scan for CEDD and FCTH: walk the 40x40 block grid, classify
/// each block's texture with `classify`, weight its mean color over the
/// 24-color palette and normalize the stacked histogram to unit sum.
pub(crate) fn composite_histogram<const REGIONS: usize>(
    img: &RasterImage,
    kind: DescriptorKind,
    classify: fn([f64; 4]) -> usize,
) -> Result<Vec<f64>, DescriptorError> {
    if img.width() < MIN_IMAGE_SIDE || img.height() < MIN_IMAGE_SIDE {
        return Err(DescriptorError::ImageTooSmall {
            kind,
            min_w: MIN_IMAGE_SIDE,
            min_h: MIN_IMAGE_SIDE,
            w: img.width(),
            h: img.height(),
        });
    }
    let blocks = grid_cells(img.width(), img.height(), BLOCK_GRID)
        .expect("40x40 grid fits: dimensions checked above");

    let mut hist = vec![0.0; REGIONS * PALETTE_SIZE];
    for block in blocks {
        let region = classify(subblock_mean_lumas(img, block));
        debug_assert!(region < REGIONS);
        let [r, g, b] = mean_rgb(img, block);
        let (h, s, v) = rgb_to_hsv(r, g, b);
        let weights = fuzzy24(h, s * 255.0, v * 255.0);
        for (c, &w) in weights.iter().enumerate() {
            hist[region * PALETTE_SIZE + c] += w;
        }
    }
    let total: f64 = hist.iter().sum();
    debug_assert!(total > 0.0, "fuzzy palette weights always have mass");
    for v in &mut hist {
        *v /= total;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_a_144_bin_unit_histogram() {
        let mut pixels = Vec::new();
        for i in 0..(100 * 90) as u32 {
            pixels.push([
                (i % 256) as u8,
                (i * 7 % 256) as u8,
                (i * 13 % 256) as u8,
            ]);
        }
        let img = RasterImage::from_pixels(100, 90, pixels);
        let v = cedd(&img).unwrap();
        assert_eq!(v.dim(), 144);
        assert!(v.values().iter().all(|&x| x >= 0.0));
        assert!((v.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solid_color_mass_stays_in_the_no_edge_region() {
        let img = RasterImage::solid(80, 80, [200, 30, 30]);
        let v = cedd(&img).unwrap();
        let (no_edge, rest) = v.values().split_at(24);
        assert!((no_edge.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(rest.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn solid_black_is_exactly_the_black_bin() {
        let img = RasterImage::solid(80, 80, [0, 0, 0]);
        let v = cedd(&img).unwrap();
        assert_eq!(v.values()[0], 1.0);
        assert!(v.values()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn undersized_image_is_rejected() {
        let img = RasterImage::solid(79, 200, [9, 9, 9]);
        assert!(matches!(
            cedd(&img),
            Err(DescriptorError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn edge_region_picks_the_dominant_filter() {
        assert_eq!(edge_region([100.0, 100.0, 100.0, 100.0]), 0);
        // columns differ strongly -> vertical
        assert_eq!(edge_region([200.0, 0.0, 200.0, 0.0]), 3);
        // rows differ strongly -> horizontal
        assert_eq!(edge_region([200.0, 200.0, 0.0, 0.0]), 2);
        // main diagonal contrast -> 45 degrees
        assert_eq!(edge_region([200.0, 100.0, 100.0, 0.0]), 4);
        // anti-diagonal contrast -> 135 degrees
        assert_eq!(edge_region([100.0, 200.0, 0.0, 100.0]), 5);
        // checkerboard pattern -> non-directional dominates
        assert_eq!(edge_region([200.0, 0.0, 0.0, 200.0]), 1);
        // straddling the presence threshold: nd response 16 vs 12
        assert_eq!(edge_region([4.0, 0.0, 0.0, 4.0]), 1);
        assert_eq!(edge_region([3.0, 0.0, 0.0, 3.0]), 0);
    }
}
