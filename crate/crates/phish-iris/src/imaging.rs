//! Screenshot decoding and the pixel-level operations every descriptor
//! depends on: color-space conversions, bilinear resizing and cropping.
//!
//! Conventions are pinned so descriptor outputs are reproducible
//! bit-for-bit: hexcone HSV, full-range BT.601 YCbCr, half-pixel-center
//! bilinear resampling, and half-up rounding for integer channels.

use image::ImageFormat;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("decode error: {0}")]
    Decode(String),
    #[error("decode error: image has zero width or height")]
    ZeroDimension,
    #[error("region ({x0},{y0}) {w}x{h} exceeds {img_w}x{img_h} image")]
    RegionOutOfBounds {
        x0: u32,
        y0: u32,
        w: u32,
        h: u32,
        img_w: u32,
        img_h: u32,
    },
    #[error("encode error: {0}")]
    Encode(String),
}

/// Decoded 8-bit RGB image, pixels stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    /// Build from raw pixels.
    ///
    /// Panics if either dimension is zero or `pixels.len()` is not
    /// `width * height`.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(
            pixels.len(),
            width as usize * height as usize,
            "pixel count must equal width * height"
        );
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Single-color image, handy for tests and synthetic corpora.
    pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self::from_pixels(width, height, vec![rgb; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// Rectangular sub-area of an image: top-left offset plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: u32,
    pub y0: u32,
    pub w: u32,
    pub h: u32,
}

impl Region {
    pub fn new(x0: u32, y0: u32, w: u32, h: u32) -> Self {
        Self { x0, y0, w, h }
    }
}

/// Decode a PNG or JPEG byte stream into an RGB raster.
///
/// An alpha channel, if present, is composited over white (screenshots
/// render against white viewports). Other container formats are rejected.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage, ImagingError> {
    let format = image::guess_format(bytes).map_err(|e| ImagingError::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(ImagingError::Decode(format!(
            "unsupported format {format:?}: only PNG and JPEG are accepted"
        )));
    }
    let dynamic = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    if dynamic.width() == 0 || dynamic.height() == 0 {
        return Err(ImagingError::ZeroDimension);
    }
    let rgba = dynamic.to_rgba8();
    let pixels = rgba
        .pixels()
        .map(|p| {
            let a = f64::from(p[3]) / 255.0;
            let over_white = |c: u8| round_half_up(f64::from(c) * a + 255.0 * (1.0 - a));
            [over_white(p[0]), over_white(p[1]), over_white(p[2])]
        })
        .collect();
    Ok(RasterImage::from_pixels(
        dynamic.width(),
        dynamic.height(),
        pixels,
    ))
}

/// Encode a raster losslessly as PNG.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, ImagingError> {
    let mut buf = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut buf);
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    image::ImageEncoder::write_image(
        encoder,
        &raw,
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| ImagingError::Encode(e.to_string()))?;
    Ok(buf)
}

/// Hexcone RGB -> HSV for one pixel. Inputs are channel values in
/// `[0,255]`; output is (H in degrees `[0,360)`, S in `[0,1]`, V in
/// `[0,1]`). Achromatic pixels get H = 0.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { h - 360.0 } else { h };
    (h, s, v)
}

/// Full-range BT.601 RGB -> YCbCr for one pixel, clamped to `[0,255]`.
pub fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> [f64; 3] {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    [y.clamp(0.0, 255.0), cb.clamp(0.0, 255.0), cr.clamp(0.0, 255.0)]
}

/// BT.601 luma of one pixel, unrounded.
#[inline]
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Per-pixel HSV of the whole image, row-major.
pub fn to_hsv(img: &RasterImage) -> Vec<(f64, f64, f64)> {
    img.pixels()
        .iter()
        .map(|&[r, g, b]| rgb_to_hsv(f64::from(r), f64::from(g), f64::from(b)))
        .collect()
}

/// Per-pixel YCbCr of the whole image, row-major.
pub fn to_ycbcr(img: &RasterImage) -> Vec<[f64; 3]> {
    img.pixels()
        .iter()
        .map(|&[r, g, b]| rgb_to_ycbcr(f64::from(r), f64::from(g), f64::from(b)))
        .collect()
}

/// Per-pixel luma in `[0,255]`, rounded half-up.
pub fn to_grayscale(img: &RasterImage) -> Vec<u8> {
    img.pixels()
        .iter()
        .map(|&[r, g, b]| round_half_up(luma(f64::from(r), f64::from(g), f64::from(b))))
        .collect()
}

/// Bilinear resize with half-pixel-center sampling.
///
/// Output pixel (x,y) samples the source at `((x+0.5)*sx - 0.5,
/// (y+0.5)*sy - 0.5)` with coordinates clamped to the source grid, so the
/// identity size reproduces the input exactly.
pub fn resize(img: &RasterImage, w: u32, h: u32) -> RasterImage {
    assert!(w >= 1 && h >= 1, "target dimensions must be >= 1");
    if w == img.width() && h == img.height() {
        return img.clone();
    }
    let sx = f64::from(img.width()) / f64::from(w);
    let sy = f64::from(img.height()) / f64::from(h);
    let mut pixels = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        let src_y = ((f64::from(y) + 0.5) * sy - 0.5).clamp(0.0, f64::from(img.height() - 1));
        let y0 = src_y.floor() as u32;
        let y1 = (y0 + 1).min(img.height() - 1);
        let fy = src_y - f64::from(y0);
        for x in 0..w {
            let src_x = ((f64::from(x) + 0.5) * sx - 0.5).clamp(0.0, f64::from(img.width() - 1));
            let x0 = src_x.floor() as u32;
            let x1 = (x0 + 1).min(img.width() - 1);
            let fx = src_x - f64::from(x0);
            let p00 = img.pixel(x0, y0);
            let p10 = img.pixel(x1, y0);
            let p01 = img.pixel(x0, y1);
            let p11 = img.pixel(x1, y1);
            let mut out = [0u8; 3];
            for c in 0..3 {
                let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
                let bot = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
                out[c] = round_half_up(top * (1.0 - fy) + bot * fy);
            }
            pixels.push(out);
        }
    }
    RasterImage::from_pixels(w, h, pixels)
}

/// Extract the exact sub-grid covered by `r`; no resampling.
pub fn crop(img: &RasterImage, r: Region) -> Result<RasterImage, ImagingError> {
    let in_bounds = r.w >= 1
        && r.h >= 1
        && r.x0.checked_add(r.w).is_some_and(|x| x <= img.width())
        && r.y0.checked_add(r.h).is_some_and(|y| y <= img.height());
    if !in_bounds {
        return Err(ImagingError::RegionOutOfBounds {
            x0: r.x0,
            y0: r.y0,
            w: r.w,
            h: r.h,
            img_w: img.width(),
            img_h: img.height(),
        });
    }
    let mut pixels = Vec::with_capacity(r.w as usize * r.h as usize);
    for y in r.y0..r.y0 + r.h {
        for x in r.x0..r.x0 + r.w {
            pixels.push(img.pixel(x, y));
        }
    }
    Ok(RasterImage::from_pixels(r.w, r.h, pixels))
}

fn round_half_up(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}
