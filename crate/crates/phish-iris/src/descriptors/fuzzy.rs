//! Shared machinery for the composite descriptors: the two-stage fuzzy
//! 24-color palette and the 40x40 block scan geometry.
//!
//! The trapezoid breakpoints and rule tables below follow the published
//! fuzzy-linking scheme of the CEDD/FCTH descriptor family and are
//! collected here as the single audit point for those constants. Hue is
//! in degrees; saturation and value are fuzzified on a 0..255 scale.

use crate::imaging::{luma, RasterImage, Region};

/// Both composite descriptors scan a fixed 40x40 grid of blocks.
pub(crate) const BLOCK_GRID: u32 = 40;

/// Every block needs four nonempty sub-blocks, so images must be at
/// least two pixels per block side.
pub(crate) const MIN_IMAGE_SIDE: u32 = 2 * BLOCK_GRID;

/// 24-color palette layout: black, grey, white, then for each of the
/// seven hues (red, orange, yellow, green, cyan, blue, magenta) the
/// shades dark, normal, light.
pub(crate) const PALETTE_SIZE: usize = 24;

/// First-stage hue sets: red (low wrap), orange, yellow, green, cyan,
/// blue, magenta, red (high wrap).
const HUE_SETS: [[f64; 4]; 8] = [
    [0.0, 0.0, 5.0, 10.0],
    [5.0, 10.0, 35.0, 50.0],
    [35.0, 50.0, 70.0, 85.0],
    [70.0, 85.0, 150.0, 165.0],
    [150.0, 165.0, 195.0, 205.0],
    [195.0, 205.0, 265.0, 280.0],
    [265.0, 280.0, 315.0, 330.0],
    [315.0, 330.0, 360.0, 360.0],
];

/// 10-bin palette index each hue set maps to when the sample is chromatic.
const HUE_SET_COLOR: [usize; 8] = [3, 4, 5, 6, 7, 8, 9, 3];

/// First-stage saturation sets: low (achromatic side), high.
const SAT_SETS: [[f64; 4]; 2] = [[0.0, 0.0, 10.0, 75.0], [10.0, 75.0, 255.0, 255.0]];

/// First-stage value sets: dark, mid, bright.
const VAL_SETS: [[f64; 4]; 3] = [
    [0.0, 0.0, 10.0, 75.0],
    [10.0, 75.0, 180.0, 220.0],
    [180.0, 220.0, 255.0, 255.0],
];

/// Second-stage (shade) saturation/value sets: low, high.
const SHADE_SETS: [[f64; 4]; 2] = [[0.0, 0.0, 68.0, 188.0], [68.0, 188.0, 255.0, 255.0]];

fn trapezoid(x: f64, [a, b, c, d]: [f64; 4]) -> f64 {
    if x < a || x > d {
        0.0
    } else if x >= b && x <= c {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (d - x) / (d - c)
    }
}

/// First stage: 10 fuzzy color weights — black, grey, white, red, orange,
/// yellow, green, cyan, blue, magenta.
///
/// Rule base (min-combined, additively aggregated), for each hue set `h`:
/// dark samples are black regardless of saturation; desaturated mid and
/// bright samples are grey and white; saturated mid and bright samples
/// take the hue's color.
fn fuzzy10(h: f64, s255: f64, v255: f64) -> [f64; 10] {
    let s0 = trapezoid(s255, SAT_SETS[0]);
    let s1 = trapezoid(s255, SAT_SETS[1]);
    let v0 = trapezoid(v255, VAL_SETS[0]);
    let v1 = trapezoid(v255, VAL_SETS[1]);
    let v2 = trapezoid(v255, VAL_SETS[2]);

    let mut out = [0.0; 10];
    for (set, &color) in HUE_SETS.iter().zip(&HUE_SET_COLOR) {
        let mh = trapezoid(h, *set);
        if mh <= 0.0 {
            continue;
        }
        out[0] += mh.min(s0).min(v0); // desaturated dark -> black
        out[0] += mh.min(s1).min(v0); // saturated dark -> black
        out[1] += mh.min(s0).min(v1); // desaturated mid -> grey
        out[2] += mh.min(s0).min(v2); // desaturated bright -> white
        out[color] += mh.min(s1).min(v1);
        out[color] += mh.min(s1).min(v2);
    }
    out
}

/// Second stage: expand the 10 colors onto the 24-color palette. The
/// achromatic bins pass through; each chromatic color splits into dark /
/// normal / light shades driven by saturation and value.
pub(crate) fn fuzzy24(h: f64, s255: f64, v255: f64) -> [f64; PALETTE_SIZE] {
    let f10 = fuzzy10(h, s255, v255);
    let mut out = [0.0; PALETTE_SIZE];
    out[..3].copy_from_slice(&f10[..3]);

    let s0 = trapezoid(s255, SHADE_SETS[0]);
    let s1 = trapezoid(s255, SHADE_SETS[1]);
    let v0 = trapezoid(v255, SHADE_SETS[0]);
    let v1 = trapezoid(v255, SHADE_SETS[1]);
    let dark = s0.min(v0) + s1.min(v0);
    let normal = s1.min(v1);
    let light = s0.min(v1);

    for hue in 0..7 {
        let w = f10[3 + hue];
        if w > 0.0 {
            let base = 3 + hue * 3;
            out[base] += w * dark;
            out[base + 1] += w * normal;
            out[base + 2] += w * light;
        }
    }
    out
}

/// Channel-wise mean color of a region.
pub(crate) fn mean_rgb(img: &RasterImage, r: Region) -> [f64; 3] {
    let mut sum = [0.0f64; 3];
    for y in r.y0..r.y0 + r.h {
        for x in r.x0..r.x0 + r.w {
            let p = img.pixel(x, y);
            sum[0] += f64::from(p[0]);
            sum[1] += f64::from(p[1]);
            sum[2] += f64::from(p[2]);
        }
    }
    let n = f64::from(r.w) * f64::from(r.h);
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

/// Mean unrounded lumas of the four floor-rule sub-blocks of a region,
/// ordered top-left, top-right, bottom-left, bottom-right.
pub(crate) fn subblock_mean_lumas(img: &RasterImage, r: Region) -> [f64; 4] {
    debug_assert!(r.w >= 2 && r.h >= 2, "sub-blocks would be empty");
    let mx = r.w / 2;
    let my = r.h / 2;
    let quarters = [
        Region::new(r.x0, r.y0, mx, my),
        Region::new(r.x0 + mx, r.y0, r.w - mx, my),
        Region::new(r.x0, r.y0 + my, mx, r.h - my),
        Region::new(r.x0 + mx, r.y0 + my, r.w - mx, r.h - my),
    ];
    let mut out = [0.0; 4];
    for (slot, q) in out.iter_mut().zip(quarters) {
        let mut sum = 0.0;
        for y in q.y0..q.y0 + q.h {
            for x in q.x0..q.x0 + q.w {
                let p = img.pixel(x, y);
                sum += luma(f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
            }
        }
        *slot = sum / (f64::from(q.w) * f64::from(q.h));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_black_maps_entirely_to_the_black_bin() {
        let w = fuzzy24(0.0, 0.0, 0.0);
        assert_eq!(w[0], 1.0);
        assert!(w[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_white_maps_entirely_to_the_white_bin() {
        let w = fuzzy24(0.0, 0.0, 255.0);
        assert_eq!(w[2], 1.0);
        assert_eq!(w[0] + w[1], 0.0);
        assert!(w[3..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_red_lands_in_the_red_shades() {
        let w = fuzzy24(0.0, 255.0, 255.0);
        // red shades occupy bins 3..6 (dark, normal, light)
        let red_mass: f64 = w[3..6].iter().sum();
        let other: f64 = w.iter().sum::<f64>() - red_mass;
        assert!(red_mass > 0.0);
        assert_eq!(other, 0.0);
        assert!(w[4] > 0.0, "a vivid red is the 'normal' shade");
    }

    #[test]
    fn hue_sets_cover_the_circle() {
        let mut h = 0.0;
        while h < 360.0 {
            let total: f64 = HUE_SETS.iter().map(|set| trapezoid(h, *set)).sum();
            assert!((total - 1.0).abs() < 1e-9, "hue {h} covered {total}");
            h += 0.25;
        }
    }

    #[test]
    fn every_sample_gets_positive_weight() {
        for h in (0..360).step_by(15) {
            for s in (0..=255).step_by(51) {
                for v in (0..=255).step_by(51) {
                    let total: f64 = fuzzy24(f64::from(h), f64::from(s), f64::from(v))
                        .iter()
                        .sum();
                    assert!(total > 0.0, "h={h} s={s} v={v}");
                }
            }
        }
    }

    #[test]
    fn subblock_lumas_follow_the_quadrants() {
        // 2x2 image: one bright pixel top-left
        let img = RasterImage::from_pixels(
            2,
            2,
            vec![[255, 255, 255], [0, 0, 0], [0, 0, 0], [0, 0, 0]],
        );
        let lumas = subblock_mean_lumas(&img, Region::new(0, 0, 2, 2));
        assert!((lumas[0] - 255.0).abs() < 1e-9);
        assert_eq!(&lumas[1..], &[0.0, 0.0, 0.0]);
    }
}
