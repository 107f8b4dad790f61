//! Circular Hough transform over the preprocessed binary page.
//!
//! Boundary pixels of the white dots vote for every centre at distance `r`
//! for each radius in `[r_min, r_max]`. Accumulator cells reaching
//! `vote_fraction * 2πr` votes become candidates, which are then thinned by
//! greedy non-maximum suppression.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryRaster;

/// A detected circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dot {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub votes: u32,
}

impl Dot {
    pub fn new(cx: f64, cy: f64, r: f64, votes: u32) -> Self {
        Self { cx, cy, r, votes }
    }

    pub fn dist(&self, other: &Dot) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    pub r_min: u32,
    pub r_max: u32,
    pub vote_fraction: f64,
    pub nms_dist: f64,
}

impl HoughParams {
    pub const DEFAULT_VOTE_FRACTION: f64 = 0.45;

    pub fn new(r_min: u32, r_max: u32, vote_fraction: f64, nms_dist: f64) -> Result<Self> {
        if r_min < 1 || r_min > r_max {
            return Err(Error::Param(format!(
                "radius range must satisfy 1 <= r_min <= r_max, got ({r_min}, {r_max})"
            )));
        }
        if !(vote_fraction > 0.0 && vote_fraction <= 1.0) {
            return Err(Error::Param(format!(
                "vote fraction must lie in (0, 1], got {vote_fraction}"
            )));
        }
        if !(nms_dist > 0.0) {
            return Err(Error::Param(format!(
                "nms distance must be positive, got {nms_dist}"
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            vote_fraction,
            nms_dist,
        })
    }

    /// Default vote fraction and an NMS distance halfway through the radius range.
    pub fn for_radius_range(r_min: u32, r_max: u32) -> Result<Self> {
        Self::new(
            r_min,
            r_max,
            Self::DEFAULT_VOTE_FRACTION,
            (r_min + r_max) as f64 / 2.0,
        )
    }

    pub fn for_resolution(dpi: f64, dot_diameter_mm: f64) -> Result<Self> {
        let (lo, hi) = estimate_radius_range(dpi, dot_diameter_mm);
        Self::for_radius_range(lo, hi)
    }
}

/// Radius search range for dots of the given physical diameter:
/// `(max(1, floor(0.6 r)), ceil(1.5 r))` around the nominal pixel radius.
pub fn estimate_radius_range(dpi: f64, dot_diameter_mm: f64) -> (u32, u32) {
    let r = dot_diameter_mm / 2.0 * dpi / 25.4;
    let lo = ((0.6 * r).floor() as u32).max(1);
    let hi = ((1.5 * r).ceil() as u32).max(lo);
    (lo, hi)
}

/// Integer offsets whose distance rounds to `r`:
/// `(r - 0.5)² <= dx² + dy² < (r + 0.5)²`.
fn ring_offsets(r: u32) -> Vec<(isize, isize)> {
    let r = r as isize;
    let (lo, hi) = (r * r - r + 1, r * r + r);
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = dx * dx + dy * dy;
            if d2 >= lo && d2 <= hi {
                offs.push((dx, dy));
            }
        }
    }
    offs
}

/// Foreground pixels with at least one background 4-neighbour. Pixels outside
/// the raster count as background.
fn boundary_pixels(img: &BinaryRaster) -> Vec<(usize, usize)> {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !img.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !img.get(x - 1, y)
                || !img.get(x + 1, y)
                || !img.get(x, y - 1)
                || !img.get(x, y + 1);
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn hough_circles(img: &BinaryRaster, p: &HoughParams) -> Vec<Dot> {
    let boundary = boundary_pixels(img);
    if boundary.is_empty() {
        return Vec::new();
    }
    let (w, h) = (img.width(), img.height());
    let mut acc = vec![0u16; w * h];
    let mut candidates = Vec::new();

    for r in p.r_min..=p.r_max {
        acc.fill(0);
        let offs = ring_offsets(r);
        for &(bx, by) in &boundary {
            for &(dx, dy) in &offs {
                let (cx, cy) = (bx as isize + dx, by as isize + dy);
                if cx >= 0 && cy >= 0 && (cx as usize) < w && (cy as usize) < h {
                    let i = cy as usize * w + cx as usize;
                    acc[i] = acc[i].saturating_add(1);
                }
            }
        }
        let min_votes = (p.vote_fraction * 2.0 * std::f64::consts::PI * r as f64)
            .ceil()
            .max(1.0) as u16;
        for (i, &v) in acc.iter().enumerate() {
            if v < min_votes {
                continue;
            }
            let (x, y) = (i % w, i / w);
            // Filled dots: the centre of a real dot is itself foreground.
            if !img.get(x, y) {
                continue;
            }
            let (cx, cy) = refine(&acc, w, h, x, y);
            candidates.push(Dot::new(cx, cy, r as f64, v as u32));
        }
    }

    let mut dots = non_max_suppress(candidates, p.nms_dist);
    dots.sort_by(cmp_position);
    dots
}

/// Vote-weighted centroid of the 3x3 accumulator neighbourhood.
fn refine(acc: &[u16], w: usize, h: usize, x: usize, y: usize) -> (f64, f64) {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            let v = acc[ny * w + nx] as f64;
            sx += v * nx as f64;
            sy += v * ny as f64;
            sw += v;
        }
    }
    (sx / sw, sy / sw)
}

fn cmp_position(a: &Dot, b: &Dot) -> Ordering {
    a.cy.total_cmp(&b.cy).then(a.cx.total_cmp(&b.cx))
}

/// Greedy suppression by descending votes; equal votes are taken in `(cy, cx)`
/// order, then by ascending radius. A candidate survives iff it lies at least
/// `min_dist` from every centre already kept.
pub fn non_max_suppress(mut cands: Vec<Dot>, min_dist: f64) -> Vec<Dot> {
    cands.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then_with(|| cmp_position(a, b))
            .then(a.r.total_cmp(&b.r))
    });
    let cell = min_dist.max(1e-9);
    let key = |d: &Dot| ((d.cx / cell).floor() as i64, (d.cy / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<Dot> = Vec::new();
    for c in cands {
        let (gx, gy) = key(&c);
        let clear = (-1..=1).all(|dy| {
            (-1..=1).all(|dx| {
                grid.get(&(gx + dx, gy + dy))
                    .is_none_or(|ids| ids.iter().all(|&k| kept[k].dist(&c) >= min_dist))
            })
        });
        if clear {
            grid.entry((gx, gy)).or_default().push(kept.len());
            kept.push(c);
        }
    }
    kept
}
