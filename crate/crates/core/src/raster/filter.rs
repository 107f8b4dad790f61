//! The five-step preprocessing chain: grayscale, median, binarize, complement,
//! dilate.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{BinaryRaster, GrayRaster, Image, RgbRaster};
use crate::error::{Error, Result};

/// ITU-R 601 luma, rounded half up. Integer arithmetic keeps it exact.
pub fn to_grayscale(img: &RgbRaster) -> GrayRaster {
    let pixels = img
        .data()
        .iter()
        .map(|&[r, g, b]| {
            let y = (299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000;
            y.min(255) as u8
        })
        .collect();
    GrayRaster::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Median over a `window` x `window` neighbourhood with edge replication.
pub fn median_filter(img: &GrayRaster, window: usize) -> Result<GrayRaster> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Param(format!(
            "median window must be odd and positive, got {window}"
        )));
    }
    if window > img.width().min(img.height()) {
        return Err(Error::Param(format!(
            "median window {window} exceeds image size {}x{}",
            img.width(),
            img.height()
        )));
    }
    if window == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let half = (window / 2) as isize;
    let mid = window * window / 2;
    let src = img.pixels();
    let mut out = vec![0u8; w * h];
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -half..=half {
                let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                let row = &src[sy * w..(sy + 1) * w];
                for dx in -half..=half {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    buf.push(row[sx]);
                }
            }
            let (_, m, _) = buf.select_nth_unstable(mid);
            out[y * w + x] = *m;
        }
    }
    GrayRaster::new(w, h, out)
}

/// Global Otsu threshold over a 256-bin histogram.
///
/// Returns `T` such that foreground is `pixel < T`, or `None` when the
/// histogram holds fewer than two distinct values. When several cut points
/// share the maximal between-class variance, the middle of that run is used.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut variances = [f64::NEG_INFINITY; 255];
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    for t in 0..255 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total_f - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        variances[t] = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    }
    let best = variances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = variances.iter().position(|&v| v == best)?;
    let mut last = first;
    while last + 1 < 255 && variances[last + 1] == best {
        last += 1;
    }
    // Cut after value t: foreground is pixel <= t.
    let t = (first + last) / 2;
    Some((t + 1) as u8)
}

/// Result of [`binarize`].
#[derive(Debug, Clone)]
pub struct Binarization {
    pub raster: BinaryRaster,
    /// `None` when the histogram was degenerate.
    pub threshold: Option<u8>,
    pub degenerate: bool,
}

/// Global Otsu binarization. Dark pixels (the dots, at this stage) become
/// foreground. A constant image yields an all-background raster.
pub fn binarize(img: &GrayRaster) -> Binarization {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    match otsu_threshold(&hist) {
        Some(t) => {
            let bits = img.pixels().iter().map(|&p| p < t).collect();
            Binarization {
                raster: BinaryRaster::new(img.width(), img.height(), bits).expect("same size"),
                threshold: Some(t),
                degenerate: false,
            }
        }
        None => {
            warn!("degenerate histogram: image has a single intensity");
            Binarization {
                raster: BinaryRaster::empty(img.width(), img.height()),
                threshold: None,
                degenerate: true,
            }
        }
    }
}

pub fn complement(img: &BinaryRaster) -> BinaryRaster {
    let bits = img.bits().iter().map(|&b| !b).collect();
    BinaryRaster::new(img.width(), img.height(), bits).expect("same size")
}

/// Offsets of the disk structuring element: `dx² + dy² <= r² + r`, i.e. the
/// pixels whose centres fall inside a circle of radius `r + 0.5`. Radius 1 is
/// the full 3x3 square.
fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let limit = r * r + r;
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= limit {
                offs.push((dx, dy));
            }
        }
    }
    offs
}

/// Binary dilation with a disk structuring element, clipped at the borders.
pub fn dilate(img: &BinaryRaster, se_radius: usize) -> Result<BinaryRaster> {
    if se_radius == 0 {
        return Err(Error::Param(
            "structuring element radius must be >= 1".into(),
        ));
    }
    let (w, h) = (img.width() as isize, img.height() as isize);
    let offs = disk_offsets(se_radius);
    let mut out = BinaryRaster::empty(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            if !img.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in &offs {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub median_window: usize,
    pub se_radius: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            median_window: 3,
            se_radius: 1,
        }
    }
}

/// Every intermediate raster of the chain, in order.
#[derive(Debug, Clone)]
pub struct Stages {
    pub gray: GrayRaster,
    pub median: GrayRaster,
    pub binary: BinaryRaster,
    pub complement: BinaryRaster,
    pub dilated: BinaryRaster,
    pub threshold: Option<u8>,
    pub degenerate_histogram: bool,
}

impl Stages {
    /// File names and rasters for stage dumps.
    pub fn dumps(&self) -> [(&'static str, GrayRaster); 5] {
        [
            ("01_gray.pgm", self.gray.clone()),
            ("02_median.pgm", self.median.clone()),
            ("03_binarize.pgm", self.binary.to_gray()),
            ("04_complement.pgm", self.complement.to_gray()),
            ("05_dilate.pgm", self.dilated.to_gray()),
        ]
    }
}

pub fn preprocess_stages(img: &Image, params: &PreprocessParams) -> Result<Stages> {
    let gray = match img {
        Image::Gray(g) => g.clone(),
        Image::Rgb(c) => to_grayscale(c),
    };
    let median = median_filter(&gray, params.median_window)?;
    let bin = binarize(&median);
    // `bin.raster` marks the dark dots. As a picture, the binarized page is
    // white paper with black dots, i.e. the complement of that mask; the
    // complement step then turns the dots white on black.
    let binary = complement(&bin.raster);
    let complement = complement(&binary);
    let dilated = dilate(&complement, params.se_radius)?;
    Ok(Stages {
        gray,
        median,
        binary,
        complement,
        dilated,
        threshold: bin.threshold,
        degenerate_histogram: bin.degenerate,
    })
}

pub fn preprocess(img: &Image, params: &PreprocessParams) -> Result<BinaryRaster> {
    preprocess_stages(img, params).map(|s| s.dilated)
}
