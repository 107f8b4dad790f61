//! Binary PGM/PPM and 8-bit PNG reading, PGM writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{GrayRaster, Image, RgbRaster};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads a P5 PGM, P6 PPM or 8-bit PNG file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes an in-memory image, dispatching on the magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        return decode_png(bytes);
    }
    match bytes.get(..2) {
        Some(b"P5") => decode_pnm(bytes, 1).map(|(w, h, data)| Image::Gray(gray(w, h, data))),
        Some(b"P6") => decode_pnm(bytes, 3).map(|(w, h, data)| {
            let rgb = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            Image::Rgb(RgbRaster::new(w, h, rgb).expect("length checked by decoder"))
        }),
        _ => Err(Error::format(
            0,
            "unrecognised magic; expected P5, P6 or PNG",
        )),
    }
}

fn gray(w: usize, h: usize, data: Vec<u8>) -> GrayRaster {
    GrayRaster::new(w, h, data).expect("length checked by decoder")
}

/// Serialises a raster as binary PGM (P5, maxval 255).
pub fn encode_pgm(img: &GrayRaster) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn save_pgm(path: impl AsRef<Path>, img: &GrayRaster) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Returns the parsed value and the offset where it started.
    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(|v| (v, start))
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

fn decode_pnm(bytes: &[u8], channels: usize) -> Result<(usize, usize, Vec<u8>)> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let (width, width_at) = cur.number("width")?;
    let (height, _) = cur.number("height")?;
    let (maxval, maxval_at) = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(width_at, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::format(
            maxval_at,
            format!("maxval {maxval} unsupported; only 8-bit (255) images are accepted"),
        ));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(cur.pos, "expected whitespace after maxval")),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(width_at, "image dimensions overflow"))?;
    let data = bytes.get(cur.pos..cur.pos + len).ok_or_else(|| {
        Error::format(
            bytes.len(),
            format!(
                "truncated pixel data: need {len} bytes from offset {}",
                cur.pos
            ),
        )
    })?;
    Ok((width, height, data.to_vec()))
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let png_err = |e: png::DecodingError| Error::format(0, format!("png: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(0, "png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format(
            0,
            format!(
                "png bit depth {:?} unsupported; only 8-bit accepted",
                info.bit_depth
            ),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let row = |y: usize| &buf[y * stride..(y + 1) * stride];
    use png::ColorType::*;
    let image = match info.color_type {
        Grayscale | GrayscaleAlpha => {
            let step = if info.color_type == Grayscale { 1 } else { 2 };
            let px = (0..h)
                .flat_map(|y| row(y).chunks_exact(step).take(w).map(|c| c[0]))
                .collect();
            Image::Gray(gray(w, h, px))
        }
        Rgb | Rgba => {
            let step = if info.color_type == Rgb { 3 } else { 4 };
            let px = (0..h)
                .flat_map(|y| {
                    row(y)
                        .chunks_exact(step)
                        .take(w)
                        .map(|c| [c[0], c[1], c[2]])
                })
                .collect();
            Image::Rgb(RgbRaster::new(w, h, px).map_err(|_| Error::format(0, "png: bad size"))?)
        }
        Indexed => return Err(Error::format(0, "png: palette was not expanded")),
    };
    Ok(image)
}
