//! Portable float map (`.pfm`): lossless single-precision storage.
//!
//! Rows are stored bottom-to-top. A negative scale marks little-endian data.

use super::{EnvMapError, HdrImage, Rgb};

pub const MAX_PIXELS: usize = 1 << 28;

fn header_err(msg: impl Into<String>) -> EnvMapError {
    EnvMapError::CorruptHeader(msg.into())
}

/// Next whitespace-delimited token; the single whitespace byte after it is
/// consumed as well.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, EnvMapError> {
    while bytes.get(*pos).is_some_and(u8::is_ascii_whitespace) {
        *pos += 1;
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    if start == *pos || *pos >= bytes.len() {
        return Err(header_err("truncated header"));
    }
    *pos += 1;
    std::str::from_utf8(&bytes[start..*pos - 1]).map_err(|_| header_err("non-ASCII header"))
}

pub fn decode(bytes: &[u8]) -> Result<HdrImage, EnvMapError> {
    let mut pos = 0;
    let channels = match token(bytes, &mut pos)? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(header_err(format!("bad signature {other:?}"))),
    };
    let width: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| header_err("bad width"))?;
    let height: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| header_err("bad height"))?;
    let scale: f32 = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| header_err("bad scale"))?;
    if width == 0 || height == 0 || width.saturating_mul(height) > MAX_PIXELS {
        return Err(header_err(format!("unsupported dimensions {width}x{height}")));
    }
    if !(scale.is_finite() && scale != 0.0) {
        return Err(header_err(format!("bad scale {scale}")));
    }
    let little = scale < 0.0;

    let need = width * height * channels * 4;
    let data = &bytes[pos..];
    if data.len() < need {
        return Err(EnvMapError::CorruptData(format!(
            "expected {need} bytes of pixel data, found {}",
            data.len()
        )));
    }
    let floats: Vec<f64> = data[..need]
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            f64::from(if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) })
        })
        .collect();
    if let Some(v) = floats.iter().find(|v| !v.is_finite()) {
        return Err(EnvMapError::NonFinite(*v));
    }

    let mut pixels = Vec::with_capacity(width * height);
    for row in (0..height).rev() {
        let line = &floats[row * width * channels..(row + 1) * width * channels];
        pixels.extend(line.chunks_exact(channels).map(|c| -> Rgb {
            if channels == 3 {
                [c[0], c[1], c[2]]
            } else {
                [c[0]; 3]
            }
        }));
    }
    Ok(HdrImage { width, height, pixels })
}

/// Encode as little-endian three-channel PFM.
pub fn encode(image: &HdrImage) -> Vec<u8> {
    let mut out = format!("PF\n{} {}\n-1.0\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 12);
    for row in image.pixels.chunks_exact(image.width).rev() {
        for v in row.iter().flatten() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}
