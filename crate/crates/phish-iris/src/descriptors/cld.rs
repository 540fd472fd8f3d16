//! Color layout descriptor: 8x8 grid of cell-mean colors in YCbCr, an
//! orthonormal 2-D DCT per channel, and a 12-coefficient zigzag readout
//! (6 Y + 3 Cb + 3 Cr).

use crate::imaging::{rgb_to_ycbcr, RasterImage};
use crate::pyramid::grid_cells;

use super::{DescriptorError, DescriptorKind, FeatureVector};

pub const CLD_DIM: usize = 12;

const GRID: u32 = 8;
const Y_COEFFS: usize = 6;
const CHROMA_COEFFS: usize = 3;

pub fn cld(img: &RasterImage) -> Result<FeatureVector, DescriptorError> {
    if img.width() < GRID || img.height() < GRID {
        return Err(DescriptorError::ImageTooSmall {
            kind: DescriptorKind::Cld,
            min_w: GRID,
            min_h: GRID,
            w: img.width(),
            h: img.height(),
        });
    }
    let cells = grid_cells(img.width(), img.height(), GRID)
        .expect("8x8 grid fits: dimensions checked above");

    let mut y_plane = [0.0; 64];
    let mut cb_plane = [0.0; 64];
    let mut cr_plane = [0.0; 64];
    for (i, cell) in cells.iter().enumerate() {
        let mut sum = [0.0f64; 3];
        for y in cell.y0..cell.y0 + cell.h {
            for x in cell.x0..cell.x0 + cell.w {
                let p = img.pixel(x, y);
                sum[0] += f64::from(p[0]);
                sum[1] += f64::from(p[1]);
                sum[2] += f64::from(p[2]);
            }
        }
        let count = f64::from(cell.w) * f64::from(cell.h);
        let [y_val, cb, cr] = rgb_to_ycbcr(sum[0] / count, sum[1] / count, sum[2] / count);
        y_plane[i] = y_val;
        cb_plane[i] = cb;
        cr_plane[i] = cr;
    }

    let order = zigzag_order();
    let mut values = Vec::with_capacity(CLD_DIM);
    for (plane, take) in [
        (&y_plane, Y_COEFFS),
        (&cb_plane, CHROMA_COEFFS),
        (&cr_plane, CHROMA_COEFFS),
    ] {
        let coeffs = dct_8x8(plane);
        for &(u, v) in order.iter().take(take) {
            values.push(coeffs[u * 8 + v]);
        }
    }
    Ok(FeatureVector::new(DescriptorKind::Cld, values))
}

/// Orthonormal type-II 2-D DCT of an 8x8 row-major field. Index `[u][v]`
/// holds vertical frequency `u` and horizontal frequency `v`.
///
/// The transform runs on the mean-subtracted field and the DC term is
/// set from the mean directly; the result is algebraically identical but
/// a constant field produces bit-exact zero AC coefficients.
fn dct_8x8(field: &[f64; 64]) -> [f64; 64] {
    let mean = pairwise_sum(field) / 64.0;
    let mut residual = [0.0; 64];
    for (r, f) in residual.iter_mut().zip(field) {
        *r = f - mean;
    }

    let mut cos = [[0.0; 8]; 8];
    for (k, row) in cos.iter_mut().enumerate() {
        for (n, c) in row.iter_mut().enumerate() {
            *c = ((2.0 * n as f64 + 1.0) * k as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    let scale = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };

    // rows first (horizontal frequency), then columns
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += residual[y * 8 + x] * cos[v][x];
            }
            tmp[y * 8 + v] = acc * scale(v);
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += tmp[y * 8 + v] * cos[u][y];
            }
            out[u * 8 + v] = acc * scale(u);
        }
    }
    out[0] += 8.0 * mean;
    out
}

/// Tree-shaped summation; exact for 64 equal values, so the residual of
/// a constant field is bit-zero.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Standard JPEG zigzag scan order over (u, v).
fn zigzag_order() -> [(usize, usize); 64] {
    let mut out = [(0usize, 0usize); 64];
    let (mut u, mut v) = (0usize, 0usize);
    for slot in out.iter_mut() {
        *slot = (u, v);
        if (u + v) % 2 == 0 {
            // moving up-right
            if v == 7 {
                u += 1;
            } else if u == 0 {
                v += 1;
            } else {
                u -= 1;
                v += 1;
            }
        } else if u == 7 {
            v += 1;
        } else if v == 0 {
            u += 1;
        } else {
            u += 1;
            v -= 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct four-loop evaluation of the orthonormal DCT definition; the
    /// oracle for the separable implementation.
    fn dct_8x8_reference(field: &[f64; 64]) -> [f64; 64] {
        let mut out = [0.0; 64];
        let scale = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        for u in 0..8 {
            for v in 0..8 {
                let mut acc = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        acc += field[y * 8 + x]
                            * ((2.0 * y as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0)
                                .cos()
                            * ((2.0 * x as f64 + 1.0) * v as f64 * std::f64::consts::PI / 16.0)
                                .cos();
                    }
                }
                out[u * 8 + v] = acc * scale(u) * scale(v);
            }
        }
        out
    }

    #[test]
    fn separable_dct_matches_the_definition() {
        let mut field = [0.0; 64];
        for (i, f) in field.iter_mut().enumerate() {
            *f = ((i * 37) % 251) as f64 - 90.0;
        }
        let fast = dct_8x8(&field);
        let slow = dct_8x8_reference(&field);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zigzag_starts_with_the_standard_prefix() {
        let order = zigzag_order();
        assert_eq!(
            &order[..6],
            &[(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)]
        );
        assert_eq!(order[63], (7, 7));
        let mut seen = std::collections::HashSet::new();
        assert!(order.iter().all(|p| seen.insert(*p)), "order must be a permutation");
    }

    #[test]
    fn output_has_12_coefficients() {
        let img = RasterImage::solid(33, 9, [10, 90, 170]);
        assert_eq!(cld(&img).unwrap().dim(), 12);
    }

    #[test]
    fn constant_field_has_only_dc_terms() {
        let img = RasterImage::solid(16, 16, [128, 128, 128]);
        let v = cld(&img).unwrap();
        for (i, &c) in v.values().iter().enumerate() {
            if i == 0 || i == 6 || i == 9 {
                assert!(c != 0.0, "DC coefficient {i} must be nonzero");
            } else {
                assert_eq!(c, 0.0, "AC coefficient {i} must be exactly zero");
            }
        }
    }

    #[test]
    fn left_dark_right_bright_activates_the_first_horizontal_term() {
        let mut pixels = Vec::new();
        for _y in 0..16 {
            for x in 0..16 {
                pixels.push(if x < 8 { [0, 0, 0] } else { [255, 255, 255] });
            }
        }
        let img = RasterImage::from_pixels(16, 16, pixels);
        let v = cld(&img).unwrap();
        assert!(v.values()[0] > 0.0, "Y DC must be positive");
        assert!(v.values()[1] != 0.0, "first horizontal Y AC must be nonzero");

        // Fix the sign against the oracle: bright mass on the right makes
        // the v=1 basis response negative.
        let mut field = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                field[y * 8 + x] = if x < 4 { 0.0 } else { 255.0 };
            }
        }
        let oracle = dct_8x8_reference(&field);
        assert!(oracle[1] < 0.0);
        assert_eq!(v.values()[1].signum(), oracle[1].signum());
        // chroma of an achromatic image is flat, so its AC terms vanish
        // (up to the conversion matrix's float residue)
        for &c in v.values()[7..9].iter().chain(&v.values()[10..12]) {
            assert!(c.abs() < 1e-9, "chroma AC {c} should vanish");
        }
    }

    #[test]
    fn tiny_image_is_rejected() {
        let img = RasterImage::solid(7, 20, [1, 2, 3]);
        assert!(matches!(
            cld(&img),
            Err(DescriptorError::ImageTooSmall { .. })
        ));
    }
}
