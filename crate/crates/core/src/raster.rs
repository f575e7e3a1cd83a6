//! 8-bit grayscale and 1-bit mask PNG files.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};
use thiserror::Error;

use crate::specrender::Stimulus;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("png decode error: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode error: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("{0}")]
    Shape(String),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn encode(width: usize, height: usize, depth: BitDepth, data: &[u8]) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(depth);
        let mut writer = enc.write_header()?;
        writer.write_image_data(data)?;
    }
    Ok(out)
}

pub fn encode_gray(image: &GrayImage) -> Result<Vec<u8>, RasterError> {
    if image.pixels.len() != image.width * image.height {
        return Err(RasterError::Shape("pixel count does not match dimensions".into()));
    }
    encode(image.width, image.height, BitDepth::Eight, &image.pixels)
}

/// 1-bit PNG; object pixels are white.
pub fn encode_mask(width: usize, height: usize, mask: &[bool]) -> Result<Vec<u8>, RasterError> {
    if mask.len() != width * height {
        return Err(RasterError::Shape("mask size does not match dimensions".into()));
    }
    let stride = width.div_ceil(8);
    let mut packed = vec![0u8; stride * height];
    for (i, m) in mask.iter().enumerate() {
        if *m {
            let (y, x) = (i / width, i % width);
            packed[y * stride + x / 8] |= 0x80 >> (x % 8);
        }
    }
    encode(width, height, BitDepth::One, &packed)
}

/// Largest decoded frame accepted, enough for an 8192 x 8192 RGBA image.
pub const MAX_DECODED_BYTES: usize = 1 << 28;

/// Decode any PNG to 8-bit luma. Color images are reduced with Rec.709
/// weights; alpha is ignored.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .filter(|n| *n <= MAX_DECODED_BYTES)
        .ok_or_else(|| RasterError::Shape("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(RasterError::Shape("palette was not expanded".into()));
        }
    };
    if info.bit_depth != BitDepth::Eight {
        return Err(RasterError::Shape(format!("unexpected bit depth {:?}", info.bit_depth)));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for row in buf.chunks(info.line_size).take(height) {
        for px in row[..width * channels].chunks_exact(channels) {
            let v = if channels >= 3 {
                (0.2126 * f64::from(px[0]) + 0.7152 * f64::from(px[1]) + 0.0722 * f64::from(px[2])).round() as u8
            } else {
                px[0]
            };
            pixels.push(v);
        }
    }
    Ok(GrayImage { width, height, pixels })
}

/// Decode a mask PNG; any non-zero pixel is object.
pub fn decode_mask(bytes: &[u8]) -> Result<(usize, usize, Vec<bool>), RasterError> {
    let img = decode_gray(bytes)?;
    Ok((img.width, img.height, img.pixels.iter().map(|v| *v != 0).collect()))
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage, RasterError> {
    decode_gray(&fs::read(path)?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>), RasterError> {
    decode_mask(&fs::read(path)?)
}

/// Write the stimulus image and, if requested, its mask.
pub fn write_stimulus(
    stimulus: &Stimulus,
    image_path: impl AsRef<Path>,
    mask_path: Option<&Path>,
) -> Result<(), RasterError> {
    let n = stimulus.size();
    let img = GrayImage {
        width: n,
        height: n,
        pixels: stimulus.image().to_vec(),
    };
    fs::write(image_path, encode_gray(&img)?)?;
    if let Some(p) = mask_path {
        fs::write(p, encode_mask(n, n, stimulus.mask())?)?;
    }
    Ok(())
}
