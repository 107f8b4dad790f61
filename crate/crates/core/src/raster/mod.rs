//! Raster types, image I/O and the preprocessing chain that turns a page photo
//! into white dots on a black background.

mod filter;
mod io;

pub use filter::{
    binarize, complement, dilate, median_filter, otsu_threshold, preprocess, preprocess_stages,
    to_grayscale, Binarization, PreprocessParams, Stages,
};
pub use io::{decode_image, encode_pgm, load_image, save_pgm};

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major, 0 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "raster dimensions must be positive"
        );
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }
}

/// Binary image, row-major, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "raster dimensions must be positive"
        );
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Foreground as 255, background as 0.
    pub fn to_gray(&self) -> GrayRaster {
        GrayRaster {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Number of 4-connected foreground components.
    pub fn count_components(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = (i % self.width, i / self.width);
                let mut visit = |j: usize| {
                    if self.bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < self.width {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - self.width);
                }
                if y + 1 < self.height {
                    visit(i + self.width);
                }
            }
        }
        count
    }
}

/// 24-bit colour image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }
}

/// A decoded input image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayRaster),
    Rgb(RgbRaster),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(g) => g.width(),
            Image::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(g) => g.height(),
            Image::Rgb(c) => c.height(),
        }
    }
}

impl From<GrayRaster> for Image {
    fn from(g: GrayRaster) -> Self {
        Image::Gray(g)
    }
}

impl From<RgbRaster> for Image {
    fn from(c: RgbRaster) -> Self {
        Image::Rgb(c)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Param(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Param(format!(
            "pixel buffer of length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(GrayRaster::new(2, 2, vec![0; 3]).is_err());
        assert!(BinaryRaster::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn counts_four_connected_components() {
        // Diagonal neighbours are separate 4-components.
        let bits = vec![
            true, false, false, //
            false, true, true, //
            false, false, false,
        ];
        let b = BinaryRaster::new(3, 3, bits).unwrap();
        assert_eq!(b.count_components(), 2);
        assert_eq!(BinaryRaster::empty(4, 4).count_components(), 0);
    }
}
