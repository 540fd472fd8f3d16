//! Fuzzy color and texture histogram: the same 40x40 block scan and
//! 24-color palette as CEDD, with texture classified into eight regions
//! from the high-frequency coefficients of a one-level 2-D Haar wavelet
//! of the block's luma; 8 x 24 = 192 bins.

use crate::imaging::RasterImage;

use super::cedd::composite_histogram;
use super::{DescriptorError, DescriptorKind, FeatureVector};

pub const FCTH_DIM: usize = 192;

pub(crate) const FCTH_REGIONS: usize = 8;

/// Minimum detail-coefficient magnitude (in gray levels) for a wavelet
/// band to count as active. Matches the edge-presence scale of the 2x2
/// filters once the 1/2 Haar normalization is applied.
const DETAIL_THRESHOLD: f64 = 7.0;

/// One-level Haar on the 2x2 sub-block means (a0 a1 / a2 a3) yields three
/// detail coefficients; thresholding them gives a 3-bit region code:
///
/// bit 0: vertical detail  |a0 - a1 + a2 - a3| / 2 (columns differ)
/// bit 1: horizontal detail |a0 + a1 - a2 - a3| / 2 (rows differ)
/// bit 2: diagonal detail  |a0 - a1 - a2 + a3| / 2
///
/// Region 0 is therefore the smooth/no-edge case and region 7 has all
/// bands active.
pub(crate) fn wavelet_region(lumas: [f64; 4]) -> usize {
    let [a0, a1, a2, a3] = lumas;
    let vertical = (a0 - a1 + a2 - a3).abs() / 2.0;
    let horizontal = (a0 + a1 - a2 - a3).abs() / 2.0;
    let diagonal = (a0 - a1 - a2 + a3).abs() / 2.0;
    usize::from(vertical > DETAIL_THRESHOLD)
        | usize::from(horizontal > DETAIL_THRESHOLD) << 1
        | usize::from(diagonal > DETAIL_THRESHOLD) << 2
}

pub fn fcth(img: &RasterImage) -> Result<FeatureVector, DescriptorError> {
    let hist = composite_histogram::<FCTH_REGIONS>(img, DescriptorKind::Fcth, wavelet_region)?;
    Ok(FeatureVector::new(DescriptorKind::Fcth, hist))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_a_192_bin_unit_histogram() {
        let mut pixels = Vec::new();
        for i in 0..(120 * 80) as u32 {
            pixels.push([
                (i * 3 % 256) as u8,
                (i * 5 % 256) as u8,
                (255 - i % 256) as u8,
            ]);
        }
        let img = RasterImage::from_pixels(120, 80, pixels);
        let v = fcth(&img).unwrap();
        assert_eq!(v.dim(), 192);
        assert!(v.values().iter().all(|&x| x >= 0.0));
        assert!((v.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solid_color_mass_stays_in_the_smooth_region() {
        let img = RasterImage::solid(81, 93, [12, 140, 230]);
        let v = fcth(&img).unwrap();
        let (smooth, rest) = v.values().split_at(24);
        assert!((smooth.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(rest.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wavelet_region_codes() {
        assert_eq!(wavelet_region([50.0, 50.0, 50.0, 50.0]), 0);
        assert_eq!(wavelet_region([100.0, 0.0, 100.0, 0.0]), 0b001);
        assert_eq!(wavelet_region([100.0, 100.0, 0.0, 0.0]), 0b010);
        assert_eq!(wavelet_region([100.0, 0.0, 0.0, 100.0]), 0b100);
        // columns and rows both differ, diagonal cancels
        assert_eq!(wavelet_region([100.0, 50.0, 50.0, 0.0]), 0b011);
        assert_eq!(wavelet_region([200.0, 20.0, 60.0, 90.0]), 0b111);
    }

    #[test]
    fn rotating_an_aligned_image_by_180_degrees_is_invariant() {
        // width and height are multiples of 80, so the block partition
        // maps onto itself under the rotation
        let (w, h) = (160u32, 80u32);
        let mut pixels = Vec::new();
        for y in 0..h {
            for x in 0..w {
                pixels.push([
                    ((x * 7 + y * 3) % 256) as u8,
                    ((x * 2 + y * 11) % 256) as u8,
                    ((x + y * 5) % 256) as u8,
                ]);
            }
        }
        let img = RasterImage::from_pixels(w, h, pixels.clone());
        pixels.reverse();
        let rotated = RasterImage::from_pixels(w, h, pixels);
        let a = fcth(&img).unwrap();
        let b = fcth(&rotated).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn undersized_image_is_rejected() {
        assert!(matches!(
            fcth(&RasterImage::solid(200, 79, [1, 1, 1])),
            Err(DescriptorError::ImageTooSmall { .. })
        ));
    }
}
