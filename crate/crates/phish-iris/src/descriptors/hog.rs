//! Histogram of oriented gradients, the comparative baseline.
//!
//! Centered [-1,0,1] gradients with replicated borders, unsigned
//! orientations in [0, 180) with bilinear vote splitting between bin
//! centers, cell histograms grouped into overlapping blocks scanned
//! row-major at a fixed stride, and per-block L2 normalization.

use crate::imaging::{to_grayscale, RasterImage};

use super::{DescriptorError, DescriptorKind, FeatureVector, HogParams};

const NORM_EPSILON: f64 = 1e-12;

/// Output length for an image of the given size: blocks per axis times
/// cells per block times orientation bins.
pub fn hog_dim(width: u32, height: u32, p: &HogParams) -> Result<usize, DescriptorError> {
    p.validate()?;
    if width < p.block || height < p.block {
        return Err(DescriptorError::ImageTooSmall {
            kind: DescriptorKind::Hog,
            min_w: p.block,
            min_h: p.block,
            w: width,
            h: height,
        });
    }
    let nbx = ((width - p.block) / p.stride + 1) as usize;
    let nby = ((height - p.block) / p.stride + 1) as usize;
    let cells = (p.block / p.cell) as usize;
    Ok(nbx * nby * cells * cells * p.bins as usize)
}

pub fn hog(img: &RasterImage, p: &HogParams) -> Result<FeatureVector, DescriptorError> {
    let expected_dim = hog_dim(img.width(), img.height(), p)?;
    let w = img.width() as usize;
    let h = img.height() as usize;
    let gray = to_grayscale(img);
    let at = |x: usize, y: usize| f64::from(gray[y * w + x]);

    // Per-pixel magnitude and split vote, computed once; blocks overlap.
    let bins = p.bins as usize;
    let bin_width = 180.0 / p.bins as f64;
    let mut magnitude = vec![0.0f64; w * h];
    let mut vote_lo = vec![0u16; w * h]; // bin index of the lower vote
    let mut weight_lo = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            let mut theta = gy.atan2(gx).to_degrees();
            if theta < 0.0 {
                theta += 180.0;
            }
            if theta >= 180.0 {
                theta -= 180.0;
            }
            // split between the two nearest bin centers, wrapping at 180
            let pos = theta / bin_width - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo_bin = (lo.rem_euclid(bins as f64)) as usize;
            let idx = y * w + x;
            magnitude[idx] = mag;
            vote_lo[idx] = lo_bin as u16;
            weight_lo[idx] = 1.0 - frac;
        }
    }

    let block = p.block as usize;
    let stride = p.stride as usize;
    let cell = p.cell as usize;
    let cells_per_side = block / cell;
    let block_dim = cells_per_side * cells_per_side * bins;
    let nbx = (w - block) / stride + 1;
    let nby = (h - block) / stride + 1;

    let mut out = Vec::with_capacity(expected_dim);
    let mut block_hist = vec![0.0f64; block_dim];
    for by in 0..nby {
        for bx in 0..nbx {
            block_hist.iter_mut().for_each(|v| *v = 0.0);
            let x_start = bx * stride;
            let y_start = by * stride;
            for dy in 0..block {
                let cy = dy / cell;
                let row = (y_start + dy) * w + x_start;
                for dx in 0..block {
                    let idx = row + dx;
                    let mag = magnitude[idx];
                    if mag == 0.0 {
                        continue;
                    }
                    let cx = dx / cell;
                    let base = (cy * cells_per_side + cx) * bins;
                    let lo = vote_lo[idx] as usize;
                    let hi = (lo + 1) % bins;
                    let w_lo = weight_lo[idx];
                    block_hist[base + lo] += mag * w_lo;
                    block_hist[base + hi] += mag * (1.0 - w_lo);
                }
            }
            let norm = block_hist.iter().map(|v| v * v).sum::<f64>().sqrt() + NORM_EPSILON;
            out.extend(block_hist.iter().map(|v| v / norm));
        }
    }
    debug_assert_eq!(out.len(), expected_dim);
    Ok(FeatureVector::new(DescriptorKind::Hog, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table5_params(block: u32, stride: u32, cell: u32) -> HogParams {
        HogParams::new(block, stride, cell, 9).unwrap()
    }

    #[test]
    fn reference_dimensions_at_640x480() {
        assert_eq!(hog_dim(640, 480, &table5_params(80, 40, 20)).unwrap(), 23760);
        assert_eq!(hog_dim(640, 480, &table5_params(160, 80, 40)).unwrap(), 5040);
        assert_eq!(hog_dim(640, 480, &table5_params(320, 160, 80)).unwrap(), 864);
    }

    #[test]
    fn extraction_length_matches_the_formula() {
        let img = RasterImage::from_pixels(
            100,
            90,
            (0..100 * 90)
                .map(|i| {
                    let v = (i % 251) as u8;
                    [v, v.wrapping_mul(3), v.wrapping_add(40)]
                })
                .collect(),
        );
        let p = HogParams::new(40, 20, 10, 9).unwrap();
        let v = hog(&img, &p).unwrap();
        assert_eq!(v.dim(), hog_dim(100, 90, &p).unwrap());
    }

    #[test]
    fn solid_image_yields_all_zeros() {
        let img = RasterImage::solid(64, 64, [120, 7, 200]);
        let p = HogParams::new(32, 16, 8, 9).unwrap();
        let v = hog(&img, &p).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn blocks_are_l2_normalized() {
        let mut pixels = Vec::new();
        for y in 0..64u32 {
            for x in 0..64u32 {
                let v = ((x * 11 + y * 29) % 256) as u8;
                pixels.push([v, v, v]);
            }
        }
        let img = RasterImage::from_pixels(64, 64, pixels);
        let p = HogParams::new(32, 32, 8, 9).unwrap();
        let v = hog(&img, &p).unwrap();
        let block_dim = (32 / 8) * (32 / 8) * 9;
        for block in v.values().chunks(block_dim) {
            let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-9);
            assert!(norm > 0.9, "textured block should be close to unit norm");
        }
    }

    #[test]
    fn image_smaller_than_one_block_is_rejected() {
        let img = RasterImage::solid(60, 100, [1, 1, 1]);
        assert!(matches!(
            hog(&img, &table5_params(80, 40, 20)),
            Err(DescriptorError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn dimension_formula_matches_block_enumeration() {
        // brute-force count of valid block origins vs the closed form
        let mut rng_state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            rng_state
        };
        let mut checked = 0;
        while checked < 50 {
            let cell = 4 + (next() % 24) as u32;
            let cells_per_block = 1 + (next() % 4) as u32;
            let block = cell * cells_per_block;
            let stride = 1 + (next() % block as u64) as u32;
            let bins = 2 + (next() % 12) as u32;
            let w = block + (next() % 400) as u32;
            let h = block + (next() % 400) as u32;
            let p = HogParams::new(block, stride, cell, bins).unwrap();

            let mut blocks = 0usize;
            let mut y = 0;
            while y + block <= h {
                let mut x = 0;
                while x + block <= w {
                    blocks += 1;
                    x += stride;
                }
                y += stride;
            }
            let per_block = (cells_per_block * cells_per_block * bins) as usize;
            assert_eq!(hog_dim(w, h, &p).unwrap(), blocks * per_block, "{p:?} {w}x{h}");
            checked += 1;
        }
    }
}
