//! Rotation, illumination ramp and salt-and-pepper noise.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::GrayRaster;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorruptOpts {
    /// Fraction of pixels forced to pure black or white.
    pub salt_pepper_frac: f64,
    /// Rotation about the image centre, degrees.
    pub rotate_deg: f64,
    /// Brightness falls linearly to `1 - g` at the left edge.
    pub illum_gradient: f64,
    pub seed: u64,
}

impl CorruptOpts {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.salt_pepper_frac) {
            return Err(Error::Param(format!(
                "salt-and-pepper fraction must lie in [0, 1], got {}",
                self.salt_pepper_frac
            )));
        }
        if !(0.0..=1.0).contains(&self.illum_gradient) {
            return Err(Error::Param(format!(
                "illumination gradient must lie in [0, 1], got {}",
                self.illum_gradient
            )));
        }
        if !self.rotate_deg.is_finite() {
            return Err(Error::Param("rotation must be finite".into()));
        }
        Ok(())
    }
}

pub(crate) fn rotation_center(w: usize, h: usize) -> (f64, f64) {
    ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0)
}

/// Where content at `(x, y)` lands after rotating the page by `deg`.
pub(crate) fn rotate_point(x: f64, y: f64, deg: f64, c: (f64, f64)) -> (f64, f64) {
    let (s, co) = deg.to_radians().sin_cos();
    let (dx, dy) = (x - c.0, y - c.1);
    (c.0 + dx * co - dy * s, c.1 + dx * s + dy * co)
}

/// Most frequent intensity; ties go to the brighter value.
pub fn modal_intensity(img: &GrayRaster) -> u8 {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    (0..256)
        .rev()
        .max_by_key(|&v| (hist[v], v))
        .map(|v| v as u8)
        .unwrap_or(0)
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

fn rotate(img: &GrayRaster, deg: f64) -> GrayRaster {
    let (w, h) = (img.width(), img.height());
    let fill = modal_intensity(img) as f64;
    let c = rotation_center(w, h);
    let (s, co) = deg.to_radians().sin_cos();
    let (s, co) = (snap(s), snap(co));
    let src = img.pixels();
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            fill
        } else {
            src[y as usize * w + x as usize] as f64
        }
    };
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            // Inverse mapping: the source point that lands on (x, y).
            let (dx, dy) = (x as f64 - c.0, y as f64 - c.1);
            let sx = snap(c.0 + dx * co + dy * s);
            let sy = snap(c.1 - dx * s + dy * co);
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let v = at(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + at(x0 + 1, y0) * fx * (1.0 - fy)
                + at(x0, y0 + 1) * (1.0 - fx) * fy
                + at(x0 + 1, y0 + 1) * fx * fy;
            out[y * w + x] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayRaster::new(w, h, out).expect("same size")
}

fn illuminate(img: &mut GrayRaster, g: f64) {
    let w = img.width();
    let denom = (w.max(2) - 1) as f64;
    for y in 0..img.height() {
        for x in 0..w {
            let factor = if w == 1 {
                1.0
            } else {
                1.0 - g + g * x as f64 / denom
            };
            let v = (img.get(x, y) as f64 * factor).round().clamp(0.0, 255.0) as u8;
            img.set(x, y, v);
        }
    }
}

/// Applies rotation, then the illumination ramp, then salt-and-pepper noise.
/// Noise hits exactly `round(frac · N)` distinct pixels and always changes
/// them. Deterministic given `opts.seed`.
pub fn corrupt(img: &GrayRaster, opts: &CorruptOpts) -> Result<GrayRaster> {
    opts.validate()?;
    let mut out = if opts.rotate_deg != 0.0 {
        rotate(img, opts.rotate_deg)
    } else {
        img.clone()
    };
    if opts.illum_gradient > 0.0 {
        illuminate(&mut out, opts.illum_gradient);
    }
    if opts.salt_pepper_frac > 0.0 {
        let n = out.pixels().len();
        let k = ((opts.salt_pepper_frac * n as f64).round() as usize).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let px = out.pixels_mut();
        for i in sample(&mut rng, n, k).into_iter() {
            let salt = rng.gen_bool(0.5);
            let v = match (salt, px[i]) {
                (true, 255) => 0,
                (true, _) => 255,
                (false, 0) => 255,
                (false, _) => 0,
            };
            px[i] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayRaster {
        GrayRaster::new(w, h, (0..w * h).map(|i| (i * 7 % 251) as u8).collect()).unwrap()
    }

    #[test]
    fn zero_opts_is_identity() {
        let img = ramp(9, 7);
        assert_eq!(corrupt(&img, &CorruptOpts::default()).unwrap(), img);
    }

    #[test]
    fn quarter_turn_maps_corners() {
        let img = ramp(5, 5);
        let out = corrupt(
            &img,
            &CorruptOpts {
                rotate_deg: 90.0,
                ..Default::default()
            },
        )
        .unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(out.get(x, y), img.get(y, 4 - x), "at ({x},{y})");
            }
        }
    }

    #[test]
    fn rotated_point_matches_image() {
        // A bright pixel moves where rotate_point says it does.
        let mut img = GrayRaster::filled(41, 41, 0);
        img.set(30, 20, 255);
        let out = corrupt(
            &img,
            &CorruptOpts {
                rotate_deg: 90.0,
                ..Default::default()
            },
        )
        .unwrap();
        let (x, y) = rotate_point(30.0, 20.0, 90.0, rotation_center(41, 41));
        assert_eq!(out.get(x.round() as usize, y.round() as usize), 255);
    }

    #[test]
    fn salt_pepper_count_is_exact() {
        let img = GrayRaster::filled(100, 50, 128);
        let opts = CorruptOpts {
            salt_pepper_frac: 0.02,
            seed: 9,
            ..Default::default()
        };
        let out = corrupt(&img, &opts).unwrap();
        let diff = out
            .pixels()
            .iter()
            .zip(img.pixels())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(diff, 100);
        assert_eq!(corrupt(&img, &opts).unwrap(), out);
        let other = corrupt(&img, &CorruptOpts { seed: 10, ..opts }).unwrap();
        assert_ne!(other, out);
    }

    #[test]
    fn illumination_darkens_left_edge() {
        let img = GrayRaster::filled(11, 1, 200);
        let out = corrupt(
            &img,
            &CorruptOpts {
                illum_gradient: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.get(0, 0), 100);
        assert_eq!(out.get(10, 0), 200);
    }

    #[test]
    fn rejects_out_of_range() {
        let img = GrayRaster::filled(2, 2, 0);
        assert!(corrupt(
            &img,
            &CorruptOpts {
                salt_pepper_frac: 1.5,
                ..Default::default()
            }
        )
        .is_err());
        assert!(corrupt(
            &img,
            &CorruptOpts {
                illum_gradient: -0.1,
                ..Default::default()
            }
        )
        .is_err());
    }
}
