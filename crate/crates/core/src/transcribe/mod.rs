//! From clustered dots to characters: corrected cell centroids, relative dot
//! positions, classification and reading order.
//!
//! A cell whose dots fill both columns and all three rows fixes its own
//! centre. Any other cell is ambiguous on its own (a lone dot could be any of
//! six positions), so its missing levels are placed by comparing it against
//! a full "sample" cell on the page: the sample level whose distance to the
//! cell is closest to a whole number of cell (or line) periods is the level
//! the cell's dots occupy.

pub mod forest;
pub mod table;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cell_cluster::{BrailleCell, LayoutParams};
use crate::dot_detect::Dot;
use crate::error::{Error, Result};

pub use forest::{train_forest, ForestModel, ForestParams};
pub use table::{decode_lines, BrailleTable, Slot};

pub const ENCODING_LEN: usize = 7;

/// `[n, b00, b10, b01, b11, b02, b12]`, where `bXY` marks a dot at `<X, Y>`.
pub type Encoding = [f64; ENCODING_LEN];

/// A cell's reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    pub corrected_x: bool,
    pub corrected_y: bool,
    /// A correction had two equally good level assignments.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub n: u8,
    pub dot_code: BTreeSet<(u8, u8)>,
}

impl FeatureVector {
    pub fn from_code(dot_code: BTreeSet<(u8, u8)>) -> Self {
        Self {
            n: dot_code.len() as u8,
            dot_code,
        }
    }

    pub fn mask(&self) -> u8 {
        table::mask_from_code(&self.dot_code)
    }
}

/// Dots sharing one coordinate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGroup {
    /// Mean coordinate of the members.
    pub pos: f64,
    /// Indices into the page's dot list.
    pub members: Vec<usize>,
}

/// Column and row groups of one cell, each sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub x: Vec<LevelGroup>,
    pub y: Vec<LevelGroup>,
}

impl Levels {
    pub fn x_full(&self) -> bool {
        self.x.len() >= 2
    }

    pub fn y_full(&self) -> bool {
        self.y.len() >= 3
    }

    pub fn is_full(&self) -> bool {
        self.x_full() && self.y_full()
    }

    /// Occupied columns, or `None` while a single column leaves it open
    /// which one it is.
    pub fn x_present(&self) -> Option<Vec<u8>> {
        self.x_full().then(|| vec![0, 1])
    }

    /// Occupied rows, or `None` unless all three are filled.
    pub fn y_present(&self) -> Option<Vec<u8>> {
        self.y_full().then(|| vec![0, 1, 2])
    }
}

fn group_axis(items: &mut [(f64, usize)], tol: f64) -> Vec<LevelGroup> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut groups: Vec<LevelGroup> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &(v, i) in items.iter() {
        match groups.last_mut() {
            Some(g) if v - last <= tol => g.members.push(i),
            _ => groups.push(LevelGroup {
                pos: 0.0,
                members: vec![i],
            }),
        }
        last = v;
    }
    groups
}

/// Groups a cell's dots into columns (tolerance `hor_max / 2`) and rows
/// (tolerance `ver_max / 2`).
pub fn detect_levels(cell: &BrailleCell, dots: &[Dot], layout: &LayoutParams) -> Levels {
    let mut xs: Vec<(f64, usize)> = cell.dots.iter().map(|&i| (dots[i].cx, i)).collect();
    let mut ys: Vec<(f64, usize)> = cell.dots.iter().map(|&i| (dots[i].cy, i)).collect();
    let mut x = group_axis(&mut xs, layout.hor_max / 2.0);
    let mut y = group_axis(&mut ys, layout.ver_max / 2.0);
    for g in &mut x {
        g.pos = g.members.iter().map(|&i| dots[i].cx).sum::<f64>() / g.members.len() as f64;
    }
    for g in &mut y {
        g.pos = g.members.iter().map(|&i| dots[i].cy).sum::<f64>() / g.members.len() as f64;
    }
    Levels { x, y }
}

/// Column and row positions of a reference cell, plus the lattice periods
/// used to compare positions across cells and lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: [f64; 2],
    pub y: [f64; 3],
    pub hor_period: f64,
    pub ver_period: f64,
    /// Built from layout parameters rather than observed on the page.
    pub synthetic: bool,
}

impl Sample {
    /// The sample defined by a full cell, or `None` if the cell is not full.
    pub fn from_levels(levels: &Levels, layout: &LayoutParams) -> Option<Self> {
        if !levels.is_full() {
            return None;
        }
        let (xs, ys) = (&levels.x, &levels.y);
        Some(Self {
            x: [xs[0].pos, xs[xs.len() - 1].pos],
            y: [ys[0].pos, ys[ys.len() / 2].pos, ys[ys.len() - 1].pos],
            hor_period: layout.hor_period,
            ver_period: layout.ver_period,
            synthetic: false,
        })
    }

    /// A sample whose dot 1 sits at `origin`, spaced by the layout pitches.
    pub fn synthetic(origin: (f64, f64), layout: &LayoutParams) -> Self {
        let (ox, oy) = origin;
        Self {
            x: [ox, ox + layout.hor_pitch],
            y: [oy, oy + layout.ver_pitch, oy + 2.0 * layout.ver_pitch],
            hor_period: layout.hor_period,
            ver_period: layout.ver_period,
            synthetic: true,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x[0] + self.x[1]) / 2.0, self.y[1])
    }
}

/// Distance from `d` to the nearest multiple of `period`.
fn circular_residue(d: f64, period: f64) -> f64 {
    if !(period > 0.0) {
        return d.abs();
    }
    let r = d.abs().rem_euclid(period);
    r.min(period - r)
}

const TIE_EPS: f64 = 1e-9;

/// Index of the smallest residue; ties go to the lowest index and are
/// reported.
fn pick_level(residues: &[(usize, f64)]) -> (usize, bool) {
    let best = residues
        .iter()
        .fold(None, |b: Option<(usize, f64)>, &(l, r)| match b {
            Some(bb) if bb.1 <= r => Some(bb),
            _ => Some((l, r)),
        })
        .expect("at least one candidate level");
    let tied = residues
        .iter()
        .any(|&(l, r)| l != best.0 && (r - best.1).abs() <= TIE_EPS);
    (best.0, tied)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Horizontal centre of a single-column cell. The column is matched to the
/// sample column whose offset is nearest a whole number of cell periods; a
/// virtual column is placed one sample column gap away and the centre is the
/// midpoint of the two. Returns the centre and whether the match was a tie.
/// A cell that already has two columns keeps its mean x.
pub fn correct_x(levels: &Levels, sample: &Sample) -> (f64, bool) {
    if levels.x_full() {
        let all = levels
            .x
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.pos, g.members.len()));
        return (mean(all), false);
    }
    let d = levels.x[0].pos;
    let res: Vec<(usize, f64)> = (0..2)
        .map(|l| (l, circular_residue(d - sample.x[l], sample.hor_period)))
        .collect();
    let (level, tied) = pick_level(&res);
    let gap = sample.x[1] - sample.x[0];
    let x = if level == 0 {
        d + gap / 2.0
    } else {
        d - gap / 2.0
    };
    (x, tied)
}

/// Vertical centre of a cell with fewer than three rows. The top row is
/// matched to a sample row as in [`correct_x`], constrained so every row of
/// the cell lands on one of the three levels; missing rows become virtual
/// rows at the sample's spacing and the centre is the mean of the three
/// levels. A cell with three rows keeps its mean y.
pub fn correct_y(levels: &Levels, sample: &Sample) -> (f64, bool) {
    if levels.y_full() {
        let all = levels
            .y
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.pos, g.members.len()));
        return (mean(all), false);
    }
    let pitch = (sample.y[2] - sample.y[0]) / 2.0;
    let top = levels.y[0].pos;
    let rel: Vec<usize> = levels
        .y
        .iter()
        .map(|g| ((g.pos - top) / pitch).round().clamp(0.0, 2.0) as usize)
        .collect();
    let span = rel.iter().copied().max().unwrap_or(0);
    let res: Vec<(usize, f64)> = (0..=2 - span)
        .map(|l| (l, circular_residue(top - sample.y[l], sample.ver_period)))
        .collect();
    let (first, tied) = pick_level(&res);
    let reps: Vec<f64> = (0..3)
        .map(|level| {
            let present: Vec<f64> = levels
                .y
                .iter()
                .zip(&rel)
                .filter(|(_, &r)| first + r == level)
                .map(|(g, _)| g.pos)
                .collect();
            if present.is_empty() {
                top + sample.y[level] - sample.y[first]
            } else {
                mean(present.into_iter())
            }
        })
        .collect();
    (mean(reps.into_iter()), tied)
}

/// Reference point of a cell. Full cells use the plain mean of their dots;
/// other cells are corrected against `sample` in whichever direction lacks
/// levels.
pub fn centroid(
    cell: &BrailleCell,
    dots: &[Dot],
    sample: Option<&Sample>,
    layout: &LayoutParams,
) -> Result<Centroid> {
    if cell.dots.is_empty() {
        return Err(Error::InsufficientInput(format!(
            "cell {} has no dots",
            cell.id
        )));
    }
    let levels = detect_levels(cell, dots, layout);
    let mean_x = mean(cell.dots.iter().map(|&i| dots[i].cx));
    let mean_y = mean(cell.dots.iter().map(|&i| dots[i].cy));
    let need_x = !levels.x_full();
    let need_y = !levels.y_full();
    if !need_x && !need_y {
        return Ok(Centroid {
            x: mean_x,
            y: mean_y,
            corrected_x: false,
            corrected_y: false,
            ambiguous: false,
        });
    }
    let sample = sample.ok_or(Error::UnresolvedCentroid(cell.id))?;
    let (x, tx) = if need_x {
        correct_x(&levels, sample)
    } else {
        (mean_x, false)
    };
    let (y, ty) = if need_y {
        correct_y(&levels, sample)
    } else {
        (mean_y, false)
    };
    Ok(Centroid {
        x,
        y,
        corrected_x: need_x,
        corrected_y: need_y,
        ambiguous: tx || ty,
    })
}

/// Position of every dot relative to the centroid. A dot within
/// `ver_max / 2` of the centroid's y is on the middle row.
pub fn extract_features(
    cell: &BrailleCell,
    dots: &[Dot],
    cent: &Centroid,
    layout: &LayoutParams,
) -> Result<FeatureVector> {
    let ver_tol = layout.ver_max / 2.0;
    let mut code = BTreeSet::new();
    for &i in &cell.dots {
        let (h, v) = (dots[i].cx - cent.x, dots[i].cy - cent.y);
        let y = if v.abs() <= ver_tol {
            1
        } else if v > 0.0 {
            2
        } else {
            0
        };
        let x = u8::from(h > 0.0);
        if !code.insert((x, y)) {
            return Err(Error::MalformedCell {
                cell: cell.id,
                x,
                y,
            });
        }
    }
    Ok(FeatureVector::from_code(code))
}

pub fn encode(fv: &FeatureVector) -> Encoding {
    let mut row = [0.0; ENCODING_LEN];
    row[0] = fv.n as f64;
    for &(x, y) in &fv.dot_code {
        row[1 + table::dot_bit(x, y) as usize] = 1.0;
    }
    row
}

/// Table symbol of a feature vector, if the mask is defined.
pub fn decode_table_lookup(fv: &FeatureVector, table: &BrailleTable) -> Option<char> {
    table.symbol(fv.mask())
}

/// Groups positioned items into lines: sorted by y, a jump larger than
/// `line_gap` starts a new line, and each line is sorted by x. Items are
/// `(id, x, y)`; the result holds ids.
pub fn order_cells(items: &[(usize, f64, f64)], line_gap: f64) -> Vec<Vec<usize>> {
    let mut by_y: Vec<&(usize, f64, f64)> = items.iter().collect();
    by_y.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then(a.1.total_cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    let mut lines: Vec<Vec<&(usize, f64, f64)>> = Vec::new();
    let mut last_y = f64::NEG_INFINITY;
    for it in by_y {
        if lines.is_empty() || it.2 - last_y > line_gap {
            lines.push(Vec::new());
        }
        lines.last_mut().expect("line exists").push(it);
        last_y = it.2;
    }
    lines
        .into_iter()
        .map(|mut l| {
            l.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            l.into_iter().map(|it| it.0).collect()
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Spaces to insert before each cell of a line, given centroid x positions in
/// reading order. A gap `g` holds `round(g / p) - 1` blank cells, where `p`
/// is the line's median gap. Lines with fewer than three gaps, or whose
/// median strays more than 25% from `page_pitch`, use `page_pitch` instead.
pub fn insert_spaces(xs: &[f64], page_pitch: f64) -> Vec<usize> {
    if xs.is_empty() {
        return Vec::new();
    }
    let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let pitch = if gaps.len() >= 3 {
        let m = median(&mut gaps.clone());
        if (m - page_pitch).abs() <= 0.25 * page_pitch {
            m
        } else {
            page_pitch
        }
    } else {
        page_pitch
    };
    let mut out = vec![0];
    for g in gaps.drain(..) {
        out.push(((g / pitch).round() as i64 - 1).max(0) as usize);
    }
    out
}

/// Median angle (radians) of the row direction, measured from pairs of dots
/// that share a row or a column inside a cell. Zero when no such pair exists.
pub fn estimate_skew(cells: &[BrailleCell], dots: &[Dot], layout: &LayoutParams) -> f64 {
    let min_len = 0.5 * layout.hor_pitch.min(layout.ver_pitch);
    let mut angles = Vec::new();
    for c in cells {
        for (k, &i) in c.dots.iter().enumerate() {
            for &j in &c.dots[k + 1..] {
                let (mut dx, mut dy) = (dots[j].cx - dots[i].cx, dots[j].cy - dots[i].cy);
                if dx.abs() >= dy.abs() {
                    if dx < 0.0 {
                        (dx, dy) = (-dx, -dy);
                    }
                    if dx >= min_len && dy.abs() <= 0.3 * dx {
                        angles.push(dy.atan2(dx));
                    }
                } else {
                    if dy < 0.0 {
                        (dx, dy) = (-dx, -dy);
                    }
                    if dy >= min_len && dx.abs() <= 0.3 * dy {
                        angles.push((-dx).atan2(dy));
                    }
                }
            }
        }
    }
    if angles.is_empty() {
        0.0
    } else {
        median(&mut angles)
    }
}

/// Rotates dot centres by `-angle` about `center`, so rows running at
/// `angle` become horizontal.
pub fn deskew(dots: &[Dot], angle: f64, center: (f64, f64)) -> Vec<Dot> {
    let (s, c) = angle.sin_cos();
    dots.iter()
        .map(|d| {
            let (x, y) = (d.cx - center.0, d.cy - center.1);
            Dot {
                cx: center.0 + x * c + y * s,
                cy: center.1 - x * s + y * c,
                ..*d
            }
        })
        .collect()
}
