//! Joint composite descriptor: merges the CEDD and FCTH histograms into
//! seven shared texture areas over the same 24-color palette;
//! 7 x 24 = 168 bins.

use super::{DescriptorError, DescriptorKind, FeatureVector, CEDD_DIM, FCTH_DIM};

pub const JCD_DIM: usize = 168;

const PALETTE: usize = 24;

/// Area-pairing table: joint area -> (CEDD regions, FCTH regions), the
/// single source of truth for the combination.
///
/// CEDD regions are matched to the FCTH wavelet codes by orientation
/// (horizontal with the horizontal-detail code, vertical with the
/// vertical-detail code, non-directional with the all-bands code, 45
/// degrees with the pure-diagonal code); the remaining parent regions
/// join the area of their side. Every parent region appears exactly
/// once and each joint bin is half the sum of its parents, so a pair of
/// unit-sum inputs yields a unit-sum output.
const AREA_SOURCES: [(&[usize], &[usize]); 7] = [
    (&[0], &[0]),       // no-edge / smooth
    (&[1], &[7]),       // non-directional / all bands active
    (&[2], &[2]),       // horizontal
    (&[3], &[1]),       // vertical
    (&[4], &[4]),       // 45 degrees / pure diagonal
    (&[5], &[]),        // 135 degrees
    (&[], &[3, 5, 6]),  // mixed-orientation wavelet codes
];

pub fn jcd(
    cedd_vec: &FeatureVector,
    fcth_vec: &FeatureVector,
) -> Result<FeatureVector, DescriptorError> {
    check_input(cedd_vec, DescriptorKind::Cedd, CEDD_DIM)?;
    check_input(fcth_vec, DescriptorKind::Fcth, FCTH_DIM)?;

    let cedd = cedd_vec.values();
    let fcth = fcth_vec.values();
    let mut out = vec![0.0; JCD_DIM];
    for (area, (cedd_regions, fcth_regions)) in AREA_SOURCES.iter().enumerate() {
        for color in 0..PALETTE {
            let mut mass = 0.0;
            for &r in *cedd_regions {
                mass += cedd[r * PALETTE + color];
            }
            for &r in *fcth_regions {
                mass += fcth[r * PALETTE + color];
            }
            out[area * PALETTE + color] = mass / 2.0;
        }
    }
    Ok(FeatureVector::new(DescriptorKind::Jcd, out))
}

fn check_input(
    v: &FeatureVector,
    expected: DescriptorKind,
    dim: usize,
) -> Result<(), DescriptorError> {
    if v.kind() != expected {
        return Err(DescriptorError::KindMismatch {
            expected,
            got: v.kind(),
        });
    }
    if v.dim() != dim {
        return Err(DescriptorError::DimensionMismatch {
            kind: expected,
            expected: dim,
            got: v.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::{cedd, fcth};
    use crate::imaging::RasterImage;

    #[test]
    fn output_length_is_168() {
        let img = RasterImage::solid(90, 85, [77, 77, 200]);
        let c = cedd(&img).unwrap();
        let f = fcth(&img).unwrap();
        assert_eq!(jcd(&c, &f).unwrap().dim(), 168);
    }

    #[test]
    fn zero_inputs_give_zero_output() {
        let c = FeatureVector::new(DescriptorKind::Cedd, vec![0.0; CEDD_DIM]);
        let f = FeatureVector::new(DescriptorKind::Fcth, vec![0.0; FCTH_DIM]);
        assert!(jcd(&c, &f).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solid_color_mass_is_the_mean_of_the_parent_no_edge_rows() {
        let img = RasterImage::solid(80, 80, [230, 40, 10]);
        let c = cedd(&img).unwrap();
        let f = fcth(&img).unwrap();
        let joint = jcd(&c, &f).unwrap();
        for color in 0..24 {
            let expected = (c.values()[color] + f.values()[color]) / 2.0;
            assert!((joint.values()[color] - expected).abs() < 1e-12);
        }
        assert!(joint.values()[24..].iter().all(|&v| v == 0.0));
        assert!((joint.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unit_sum_inputs_give_a_unit_sum_output() {
        // synthetic unit-sum histograms with mass spread over every region
        let mut c_vals = vec![0.0; CEDD_DIM];
        for (i, v) in c_vals.iter_mut().enumerate() {
            *v = (i + 1) as f64;
        }
        let total: f64 = c_vals.iter().sum();
        c_vals.iter_mut().for_each(|v| *v /= total);
        let mut f_vals = vec![0.0; FCTH_DIM];
        for (i, v) in f_vals.iter_mut().enumerate() {
            *v = ((i * 31) % 97 + 1) as f64;
        }
        let total: f64 = f_vals.iter().sum();
        f_vals.iter_mut().for_each(|v| *v /= total);

        let joint = jcd(
            &FeatureVector::new(DescriptorKind::Cedd, c_vals),
            &FeatureVector::new(DescriptorKind::Fcth, f_vals),
        )
        .unwrap();
        assert!((joint.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_dimension_is_a_schema_error() {
        let c = FeatureVector::new(DescriptorKind::Cedd, vec![0.0; 143]);
        let f = FeatureVector::new(DescriptorKind::Fcth, vec![0.0; FCTH_DIM]);
        assert!(matches!(
            jcd(&c, &f),
            Err(DescriptorError::DimensionMismatch { .. })
        ));
        let c = FeatureVector::new(DescriptorKind::Scd, vec![0.0; 256]);
        assert!(matches!(
            jcd(&c, &f),
            Err(DescriptorError::KindMismatch { .. })
        ));
    }
}
