//! Scalable color descriptor: a 256-bin quantized HSV histogram passed
//! through a full 1-D Haar coefficient cascade.

use crate::imaging::{rgb_to_hsv, RasterImage};

use super::{DescriptorKind, FeatureVector};

pub const SCD_DIM: usize = 256;

const HUE_BINS: usize = 16;
const SAT_BINS: usize = 4;
const VAL_BINS: usize = 4;

/// Quantized, count-normalized 256-bin HSV histogram: the pre-transform
/// stage of [`scd`]. Bins sum to exactly 1 for any image.
///
/// Counting happens in integers, so the histogram (and everything
/// downstream) is invariant under any spatial permutation of pixels.
pub fn scd_histogram(img: &RasterImage) -> [f64; SCD_DIM] {
    let mut counts = [0u64; SCD_DIM];
    for &[r, g, b] in img.pixels() {
        let (h, s, v) = rgb_to_hsv(f64::from(r), f64::from(g), f64::from(b));
        let hq = ((h / 360.0 * HUE_BINS as f64) as usize).min(HUE_BINS - 1);
        let sq = ((s * SAT_BINS as f64) as usize).min(SAT_BINS - 1);
        let vq = ((v * VAL_BINS as f64) as usize).min(VAL_BINS - 1);
        counts[(hq * SAT_BINS + sq) * VAL_BINS + vq] += 1;
    }
    let total = img.pixels().len() as f64;
    let mut hist = [0.0; SCD_DIM];
    for (out, &c) in hist.iter_mut().zip(&counts) {
        *out = c as f64 / total;
    }
    hist
}

/// Full Haar cascade over the 256 histogram bins.
///
/// Each pass turns pairs into unscaled sums and differences and recurses
/// on the sums (8 passes for 256 bins). The output is laid out with the
/// coarsest sum first, then difference bands from coarsest to finest:
/// `[S, D8, D7(2), D6(4), ..., D1(128)]`. The transform is exactly
/// invertible, and coefficient 0 is the histogram total (1.0).
pub fn scd(img: &RasterImage) -> FeatureVector {
    let hist = scd_histogram(img);
    let mut current = hist.to_vec();
    let mut bands: Vec<Vec<f64>> = Vec::new(); // finest band first
    while current.len() > 1 {
        let half = current.len() / 2;
        let mut sums = Vec::with_capacity(half);
        let mut diffs = Vec::with_capacity(half);
        for k in 0..half {
            sums.push(current[2 * k] + current[2 * k + 1]);
            diffs.push(current[2 * k] - current[2 * k + 1]);
        }
        bands.push(diffs);
        current = sums;
    }
    let mut out = Vec::with_capacity(SCD_DIM);
    out.push(current[0]);
    for band in bands.iter().rev() {
        out.extend_from_slice(band);
    }
    FeatureVector::new(DescriptorKind::Scd, out)
}
