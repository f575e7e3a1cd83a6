//! Radiance RGBE (`.hdr`) reader and writer.
//!
//! Reads flat, old-style run-length and new-style (per-channel) run-length
//! scanlines with the standard `-Y <h> +X <w>` orientation. Writes new-style
//! RLE scanlines whenever the width allows it.

use super::{EnvMapError, HdrImage, Rgb};

/// Upper bound on decoded pixels, so a forged header cannot demand an
/// absurd allocation.
pub const MAX_PIXELS: usize = 1 << 28;

const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;
const MIN_RUN: usize = 4;

fn header_err(msg: impl Into<String>) -> EnvMapError {
    EnvMapError::CorruptHeader(msg.into())
}

fn data_err(msg: impl Into<String>) -> EnvMapError {
    EnvMapError::CorruptData(msg.into())
}

struct Header {
    width: usize,
    height: usize,
    exposure: f64,
}

/// Split off one `\n`-terminated line.
fn next_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    let rest = &bytes[*pos..];
    let end = rest.iter().position(|&b| b == b'\n')?;
    *pos += end + 1;
    Some(&rest[..end])
}

fn parse_header(bytes: &[u8], pos: &mut usize) -> Result<Header, EnvMapError> {
    let magic = next_line(bytes, pos).ok_or_else(|| header_err("truncated header"))?;
    if !magic.starts_with(b"#?") {
        return Err(header_err("missing #? signature"));
    }
    let mut exposure = 1.0;
    loop {
        let line = next_line(bytes, pos).ok_or_else(|| header_err("truncated header"))?;
        if line.is_empty() {
            break;
        }
        let line = std::str::from_utf8(line).map_err(|_| header_err("non-UTF-8 header line"))?;
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(header_err(format!("unsupported format {fmt:?}")));
            }
        } else if let Some(e) = line.strip_prefix("EXPOSURE=") {
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| header_err(format!("bad exposure {e:?}")))?;
            if !(e.is_finite() && e > 0.0) {
                return Err(header_err(format!("bad exposure {e}")));
            }
            exposure *= e;
        }
    }

    let res = next_line(bytes, pos).ok_or_else(|| header_err("missing resolution line"))?;
    let res = std::str::from_utf8(res).map_err(|_| header_err("non-UTF-8 resolution line"))?;
    let fields: Vec<&str> = res.split_whitespace().collect();
    let (height, width) = match fields.as_slice() {
        ["-Y", h, "+X", w] => (
            h.parse::<usize>().map_err(|_| header_err(format!("bad height {h:?}")))?,
            w.parse::<usize>().map_err(|_| header_err(format!("bad width {w:?}")))?,
        ),
        _ => return Err(header_err(format!("unsupported resolution line {res:?}"))),
    };
    if width == 0 || height == 0 || width.saturating_mul(height) > MAX_PIXELS {
        return Err(header_err(format!("unsupported dimensions {width}x{height}")));
    }
    Ok(Header { width, height, exposure })
}

fn rgbe_to_rgb(px: [u8; 4]) -> Rgb {
    if px[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(i32::from(px[3]) - (128 + 8));
    [
        (f64::from(px[0]) + 0.5) * f,
        (f64::from(px[1]) + 0.5) * f,
        (f64::from(px[2]) + 0.5) * f,
    ]
}

fn rgb_to_rgbe(p: Rgb) -> [u8; 4] {
    let v = p[0].max(p[1]).max(p[2]);
    if !(v > 1e-32) {
        return [0; 4];
    }
    let mut e = v.log2().floor() as i32 + 1;
    // Fix up rounding in log2 so that v / 2^e lies in [0.5, 1).
    let mant = v / 2f64.powi(e);
    if mant >= 1.0 {
        e += 1;
    } else if mant < 0.5 {
        e -= 1;
    }
    if e < -128 {
        return [0; 4];
    }
    if e > 127 {
        return [255, 255, 255, 255];
    }
    let scale = 256.0 / 2f64.powi(e);
    let q = |c: f64| (c.max(0.0) * scale).min(255.0) as u8;
    [q(p[0]), q(p[1]), q(p[2]), (e + 128) as u8]
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn byte(&mut self) -> Result<u8, EnvMapError> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| data_err("truncated pixel data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn quad(&mut self) -> Result<[u8; 4], EnvMapError> {
        let s = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| data_err("truncated pixel data"))?;
        self.pos += 4;
        Ok([s[0], s[1], s[2], s[3]])
    }

    fn peek_quad(&self) -> Option<[u8; 4]> {
        let s = self.bytes.get(self.pos..self.pos + 4)?;
        Some([s[0], s[1], s[2], s[3]])
    }
}

fn read_flat_scanline(cur: &mut Cursor<'_>, line: &mut [[u8; 4]]) -> Result<(), EnvMapError> {
    let mut x = 0;
    let mut shift = 0u32;
    while x < line.len() {
        let px = cur.quad()?;
        if px[0] == 1 && px[1] == 1 && px[2] == 1 {
            // Old-style run: repeat the previous pixel.
            if x == 0 {
                return Err(data_err("run-length marker at start of scanline"));
            }
            if shift > 16 {
                return Err(data_err("old-style run too long"));
            }
            let count = usize::from(px[3]) << shift;
            if x + count > line.len() {
                return Err(data_err("old-style run overflows scanline"));
            }
            let prev = line[x - 1];
            line[x..x + count].fill(prev);
            x += count;
            shift += 8;
        } else {
            line[x] = px;
            x += 1;
            shift = 0;
        }
    }
    Ok(())
}

fn read_rle_scanline(cur: &mut Cursor<'_>, line: &mut [[u8; 4]]) -> Result<(), EnvMapError> {
    let width = line.len();
    for channel in 0..4 {
        let mut x = 0;
        while x < width {
            let count = cur.byte()?;
            if count > 128 {
                let run = usize::from(count - 128);
                if x + run > width {
                    return Err(data_err("run overflows scanline"));
                }
                let value = cur.byte()?;
                for px in &mut line[x..x + run] {
                    px[channel] = value;
                }
                x += run;
            } else {
                let run = usize::from(count);
                if run == 0 || x + run > width {
                    return Err(data_err("bad literal count"));
                }
                for px in &mut line[x..x + run] {
                    px[channel] = cur.byte()?;
                }
                x += run;
            }
        }
    }
    Ok(())
}

/// Decode a complete RGBE file. No aspect-ratio check is made here.
pub fn decode(bytes: &[u8]) -> Result<HdrImage, EnvMapError> {
    let mut pos = 0;
    let header = parse_header(bytes, &mut pos)?;
    let Header { width, height, exposure } = header;

    let mut cur = Cursor { bytes, pos };
    let mut line = vec![[0u8; 4]; width];
    // Grow with the input so that truncated files fail before allocating
    // the full declared size.
    let mut pixels: Vec<Rgb> = Vec::with_capacity(width.min(bytes.len()));
    for _ in 0..height {
        let rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width)
            && matches!(cur.peek_quad(), Some([2, 2, hi, _]) if hi & 0x80 == 0);
        if rle {
            let [_, _, hi, lo] = cur.quad()?;
            let declared = (usize::from(hi) << 8) | usize::from(lo);
            if declared != width {
                return Err(data_err(format!(
                    "scanline width {declared} does not match header width {width}"
                )));
            }
            read_rle_scanline(&mut cur, &mut line)?;
        } else {
            read_flat_scanline(&mut cur, &mut line)?;
        }
        pixels.extend(line.iter().map(|px| rgbe_to_rgb(*px).map(|v| v / exposure)));
    }
    Ok(HdrImage { width, height, pixels })
}

fn write_rle_channel(out: &mut Vec<u8>, data: &[u8]) {
    let n = data.len();
    let mut cur = 0;
    while cur < n {
        let mut beg_run = cur;
        let mut run_count = 0;
        let mut old_run_count = 0;
        while run_count < MIN_RUN && beg_run < n {
            beg_run += run_count;
            old_run_count = run_count;
            run_count = 1;
            while beg_run + run_count < n
                && run_count < 127
                && data[beg_run] == data[beg_run + run_count]
            {
                run_count += 1;
            }
        }
        if old_run_count > 1 && old_run_count == beg_run - cur {
            out.push(128 + old_run_count as u8);
            out.push(data[cur]);
            cur = beg_run;
        }
        while cur < beg_run {
            let literal = (beg_run - cur).min(128);
            out.push(literal as u8);
            out.extend_from_slice(&data[cur..cur + literal]);
            cur += literal;
        }
        if run_count >= MIN_RUN {
            out.push(128 + run_count as u8);
            out.push(data[beg_run]);
            cur += run_count;
        }
    }
}

/// Encode as an RGBE file with a `-Y h +X w` resolution line.
pub fn encode(image: &HdrImage) -> Vec<u8> {
    let HdrImage { width, height, .. } = *image;
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n").into_bytes();
    let rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width);
    let mut channel = vec![0u8; width];
    for row in image.pixels.chunks_exact(width) {
        let quads: Vec<[u8; 4]> = row.iter().map(|p| rgb_to_rgbe(*p)).collect();
        if rle {
            out.extend_from_slice(&[2, 2, (width >> 8) as u8, (width & 0xff) as u8]);
            for c in 0..4 {
                for (dst, q) in channel.iter_mut().zip(&quads) {
                    *dst = q[c];
                }
                write_rle_channel(&mut out, &channel);
            }
        } else {
            out.extend(quads.iter().flatten());
        }
    }
    out
}
