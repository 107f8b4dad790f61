//! Page-level distance statistics and grouping of dots into Braille cells.
//!
//! Every dot is paired with its nearest neighbour under the city-block metric
//! and the horizontal and vertical components of that distance are recorded.
//! The first histogram peak of each component bounds the spacing of dots
//! inside one cell; the second peak gives the spacing between cells. Dots are
//! then linked whenever both components fall within the intra-cell bounds,
//! and each connected group becomes a cell.

use std::cmp::Ordering;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dot_detect::Dot;
use crate::error::{Error, Result};

/// Horizontal and vertical distance from each dot to its nearest neighbour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborStats {
    pub hor_near: Vec<f64>,
    pub ver_near: Vec<f64>,
    /// Index of the neighbour each pair of entries was measured against.
    pub neighbor: Vec<usize>,
}

fn neighbor_key(dots: &[Dot], i: usize, j: usize) -> (f64, f64, f64, usize) {
    let (a, b) = (&dots[i], &dots[j]);
    let city = (a.cx - b.cx).abs() + (a.cy - b.cy).abs();
    (city, b.cy, b.cx, j)
}

fn key_less(a: &(f64, f64, f64, usize), b: &(f64, f64, f64, usize)) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .then(a.3.cmp(&b.3))
        == Ordering::Less
}

/// Nearest neighbour of every dot by city-block distance `|dx| + |dy|`;
/// ties go to the neighbour with the smaller `(cy, cx)`.
///
/// Uses a sweep over x-sorted dots, stopping once `|dx|` alone exceeds the
/// best distance found.
pub fn nearest_neighbor_distances(dots: &[Dot]) -> Result<NeighborStats> {
    if dots.len() < 2 {
        return Err(Error::InsufficientInput(format!(
            "nearest-neighbour distances need at least 2 dots, got {}",
            dots.len()
        )));
    }
    let mut order: Vec<usize> = (0..dots.len()).collect();
    order.sort_by(|&a, &b| dots[a].cx.total_cmp(&dots[b].cx).then(a.cmp(&b)));

    let n = dots.len();
    let mut stats = NeighborStats {
        hor_near: vec![0.0; n],
        ver_near: vec![0.0; n],
        neighbor: vec![0; n],
    };
    for (pos, &i) in order.iter().enumerate() {
        let mut best: Option<(f64, f64, f64, usize)> = None;
        let mut consider = |j: usize| -> bool {
            let dx = (dots[i].cx - dots[j].cx).abs();
            if let Some(b) = &best {
                if dx > b.0 {
                    return false;
                }
            }
            let k = neighbor_key(dots, i, j);
            if best.as_ref().is_none_or(|b| key_less(&k, b)) {
                best = Some(k);
            }
            true
        };
        for &j in &order[pos + 1..] {
            if !consider(j) {
                break;
            }
        }
        for &j in order[..pos].iter().rev() {
            if !consider(j) {
                break;
            }
        }
        let j = best.expect("at least one other dot").3;
        stats.hor_near[i] = (dots[i].cx - dots[j].cx).abs();
        stats.ver_near[i] = (dots[i].cy - dots[j].cy).abs();
        stats.neighbor[i] = j;
    }
    Ok(stats)
}

/// Fixed-width histogram with origin 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u32,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(samples: &[f64], bin_width: u32) -> Self {
        let w = bin_width.max(1) as f64;
        let max_bin = samples
            .iter()
            .map(|&s| (s.max(0.0) / w).floor() as usize)
            .max()
            .unwrap_or(0);
        let mut counts = vec![0u64; max_bin + 1];
        for &s in samples {
            counts[(s.max(0.0) / w).floor() as usize] += 1;
        }
        Self {
            bin_width: bin_width.max(1),
            counts,
        }
    }

    pub fn bin_of(&self, sample: f64) -> usize {
        (sample.max(0.0) / self.bin_width as f64).floor() as usize
    }

    /// Centred 3-bin moving average, padded by one bin past the last count.
    pub fn smoothed(&self) -> Vec<f64> {
        let n = self.counts.len() + 1;
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= self.counts.len() {
                0.0
            } else {
                self.counts[i as usize] as f64
            }
        };
        (0..n as isize)
            .map(|i| (at(i - 1) + at(i) + at(i + 1)) / 3.0)
            .collect()
    }
}

/// One histogram peak: the range of raw samples it covers and its mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub lo: f64,
    pub hi: f64,
    pub mode: f64,
    pub count: usize,
}

pub const DEFAULT_PEAK_LEVEL: f64 = 0.2;

pub fn histogram_peaks(samples: &[f64], bin_width: u32) -> Vec<Peak> {
    histogram_peaks_at(samples, bin_width, DEFAULT_PEAK_LEVEL)
}

/// Peaks of the smoothed histogram, in ascending distance order.
///
/// A peak is a maximal run of bins whose smoothed count is at least `level`
/// times the largest smoothed count. `lo`/`hi` are the extreme raw samples in
/// the run's bins; `mode` is the mean of the samples in the run's fullest raw
/// bin.
pub fn histogram_peaks_at(samples: &[f64], bin_width: u32, level: f64) -> Vec<Peak> {
    if samples.is_empty() {
        return Vec::new();
    }
    let hist = Histogram::build(samples, bin_width);
    let smooth = hist.smoothed();
    let top = smooth.iter().cloned().fold(0.0, f64::max);
    let cut = (level * top).max(f64::MIN_POSITIVE);

    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in smooth.iter().enumerate() {
        match (v >= cut, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, smooth.len() - 1));
    }

    runs.into_iter()
        .filter_map(|(a, b)| {
            let inside: Vec<f64> = samples
                .iter()
                .copied()
                .filter(|&s| (a..=b).contains(&hist.bin_of(s)))
                .collect();
            if inside.is_empty() {
                return None;
            }
            let mode_bin = (a..=b.min(hist.counts.len() - 1))
                .max_by(|&x, &y| hist.counts[x].cmp(&hist.counts[y]).then(y.cmp(&x)))?;
            let in_mode: Vec<f64> = inside
                .iter()
                .copied()
                .filter(|&s| hist.bin_of(s) == mode_bin)
                .collect();
            Some(Peak {
                lo: inside.iter().cloned().fold(f64::INFINITY, f64::min),
                hi: inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mode: in_mode.iter().sum::<f64>() / in_mode.len() as f64,
                count: inside.len(),
            })
        })
        .collect()
}

/// How the inter-cell distance is read off the first two histogram peaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterRule {
    /// Second peak mode minus first peak mode.
    ModeDifference,
    /// Second peak mode on its own: the gap between facing dots of
    /// neighbouring cells.
    #[default]
    SecondMode,
}

impl InterRule {
    fn apply(self, first_mode: f64, second_mode: f64) -> f64 {
        match self {
            InterRule::ModeDifference => second_mode - first_mode,
            InterRule::SecondMode => second_mode,
        }
    }
}

/// Ratio of standard cell pitch (6.0 mm) to intra-cell pitch (2.5 mm), used
/// when a histogram shows a single peak.
pub const INTER_FALLBACK_RATIO: f64 = 2.4;

/// Standard line pitch (10.0 mm) over row pitch (2.5 mm).
const LINE_FALLBACK_RATIO: f64 = 4.0;

/// Physical Braille dimensions in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrailleGeometry {
    pub dot_diameter_mm: f64,
    /// Distance between the two columns of a cell.
    pub col_pitch_mm: f64,
    /// Distance between adjacent rows of a cell.
    pub row_pitch_mm: f64,
    /// Distance between corresponding dots of adjacent cells.
    pub cell_pitch_mm: f64,
    pub line_pitch_mm: f64,
}

impl Default for BrailleGeometry {
    fn default() -> Self {
        Self {
            dot_diameter_mm: 1.5,
            col_pitch_mm: 2.5,
            row_pitch_mm: 2.5,
            cell_pitch_mm: 6.0,
            line_pitch_mm: 10.0,
        }
    }
}

impl BrailleGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.dot_diameter_mm,
            self.col_pitch_mm,
            self.row_pitch_mm,
            self.cell_pitch_mm,
            self.line_pitch_mm,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Param(format!(
                "geometry values must be positive: {self:?}"
            )));
        }
        if self.cell_pitch_mm <= self.col_pitch_mm {
            return Err(Error::Param("cell pitch must exceed column pitch".into()));
        }
        if self.line_pitch_mm <= 2.0 * self.row_pitch_mm {
            return Err(Error::Param(
                "line pitch must exceed twice the row pitch".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub bin_width: u32,
    pub peak_level: f64,
    /// Samples below this are dropped before peak analysis. Nearest
    /// neighbours stacked in the other direction contribute near-zero
    /// components that say nothing about spacing.
    pub alignment_floor: f64,
    pub inter_rule: InterRule,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            bin_width: 1,
            peak_level: DEFAULT_PEAK_LEVEL,
            alignment_floor: 0.0,
            inter_rule: InterRule::default(),
        }
    }
}

/// Spacing parameters of a page, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub hor_max: f64,
    pub ver_max: f64,
    pub hor_inter: f64,
    pub ver_inter: f64,
    /// Mode of the first peak: typical column spacing inside a cell.
    pub hor_pitch: f64,
    /// Mode of the first peak: typical row spacing inside a cell.
    pub ver_pitch: f64,
    /// Distance between corresponding dots of horizontally adjacent cells.
    pub hor_period: f64,
    /// Distance between corresponding dots of vertically adjacent lines.
    pub ver_period: f64,
    pub hor_low_confidence: bool,
    pub ver_low_confidence: bool,
}

impl LayoutParams {
    /// `hor_inter > hor_max` and `ver_inter > ver_max`, as on a well-formed page.
    pub fn is_consistent(&self) -> bool {
        self.hor_inter > self.hor_max && self.ver_inter > self.ver_max
    }

    pub fn low_confidence(&self) -> bool {
        self.hor_low_confidence || self.ver_low_confidence
    }

    /// Layout implied by the physical geometry alone, for pages with too few
    /// dots to measure. Flagged low-confidence in both directions.
    pub fn nominal(dpi: f64, g: &BrailleGeometry, rule: InterRule) -> Self {
        let px = dpi / 25.4;
        let (hor_pitch, ver_pitch) = (g.col_pitch_mm * px, g.row_pitch_mm * px);
        let hor_gap = (g.cell_pitch_mm - g.col_pitch_mm) * px;
        let ver_gap = (g.line_pitch_mm - 2.0 * g.row_pitch_mm) * px;
        // Leave room for jitter above the nominal pitch.
        let slack = 0.1;
        Self {
            hor_max: hor_pitch * (1.0 + slack),
            ver_max: ver_pitch * (1.0 + slack),
            hor_inter: rule.apply(hor_pitch, hor_gap),
            ver_inter: rule.apply(ver_pitch, ver_gap),
            hor_pitch,
            ver_pitch,
            hor_period: g.cell_pitch_mm * px,
            ver_period: g.line_pitch_mm * px,
            hor_low_confidence: true,
            ver_low_confidence: true,
        }
    }
}

struct AxisLayout {
    max: f64,
    pitch: f64,
    inter: f64,
    period: f64,
    low_confidence: bool,
}

/// `levels` is the number of dot positions a cell has along this axis.
fn estimate_axis(
    samples: &[f64],
    cfg: &LayoutConfig,
    axis: &str,
    levels: f64,
    period_ratio: f64,
) -> Result<AxisLayout> {
    let kept: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|&s| s >= cfg.alignment_floor)
        .collect();
    let peaks = histogram_peaks_at(&kept, cfg.bin_width, cfg.peak_level);
    let first = peaks
        .first()
        .ok_or_else(|| Error::Estimation(format!("no {axis} distance peaks")))?;
    let (inter, period, low_confidence) = match peaks.get(1) {
        Some(second) => (
            cfg.inter_rule.apply(first.mode, second.mode),
            (levels - 1.0) * first.mode + second.mode,
            false,
        ),
        None => (
            INTER_FALLBACK_RATIO * first.hi,
            period_ratio * first.mode,
            true,
        ),
    };
    Ok(AxisLayout {
        max: first.hi,
        pitch: first.mode,
        inter,
        period,
        low_confidence,
    })
}

pub fn estimate_layout(stats: &NeighborStats, cfg: &LayoutConfig) -> Result<LayoutParams> {
    let hor = estimate_axis(
        &stats.hor_near,
        cfg,
        "horizontal",
        2.0,
        INTER_FALLBACK_RATIO,
    )?;
    let ver = estimate_axis(&stats.ver_near, cfg, "vertical", 3.0, LINE_FALLBACK_RATIO)?;
    let layout = LayoutParams {
        hor_max: hor.max,
        ver_max: ver.max,
        hor_inter: hor.inter,
        ver_inter: ver.inter,
        hor_pitch: hor.pitch,
        ver_pitch: ver.pitch,
        hor_period: hor.period,
        ver_period: ver.period,
        hor_low_confidence: hor.low_confidence,
        ver_low_confidence: ver.low_confidence,
    };
    if !(layout.hor_max > 0.0 && layout.ver_max > 0.0) {
        return Err(Error::Estimation(format!(
            "non-positive intra-cell bound ({}, {})",
            layout.hor_max, layout.ver_max
        )));
    }
    if !layout.is_consistent() {
        warn!(
            "inter-cell distance does not exceed intra-cell bound: {:?}",
            layout
        );
    }
    Ok(layout)
}

/// A cluster of dots, by index into the page's dot list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrailleCell {
    pub id: usize,
    pub dots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub cells: Vec<BrailleCell>,
    /// Some component held more than six dots and had to be split.
    pub over_merged: bool,
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connected components of the relation `|dx| <= hor_max && |dy| <= ver_max`,
/// each sorted, ordered by first index. No size limit is applied.
pub fn link_components(dots: &[Dot], hor_max: f64, ver_max: f64) -> Vec<Vec<usize>> {
    let n = dots.len();
    let mut sets = DisjointSets::new(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dots[a].cx.total_cmp(&dots[b].cx).then(a.cmp(&b)));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if dots[j].cx - dots[i].cx > hor_max {
                break;
            }
            if (dots[j].cy - dots[i].cy).abs() <= ver_max {
                sets.union(i, j);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = sets.find(i);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].push(i);
    }
    groups
}

/// Groups dots into cells: `i` and `j` share a cell when they are connected
/// through links with `|dx| <= hor_max` and `|dy| <= ver_max`. Unlinked dots
/// form single-dot cells. Components of more than six dots are split at
/// their widest gap. Cells come out ordered by their lowest dot index.
pub fn cluster_cells(dots: &[Dot], hor_max: f64, ver_max: f64) -> Clustering {
    let groups = link_components(dots, hor_max, ver_max);
    let mut over_merged = false;
    let mut parts = Vec::with_capacity(groups.len());
    for g in groups {
        if g.len() > 6 {
            over_merged = true;
            split_oversized(dots, g, &mut parts);
        } else {
            parts.push(g);
        }
    }
    if over_merged {
        warn!("clusters with more than six dots were split; page is low-confidence");
    }
    parts.sort_by_key(|p| p[0]);
    let cells = parts
        .into_iter()
        .enumerate()
        .map(|(id, dots)| BrailleCell { id, dots })
        .collect();
    Clustering { cells, over_merged }
}

/// Splits a component at its widest x gap until every part has at most six
/// dots. A part stacked in one column is split at its widest y gap instead.
fn split_oversized(dots: &[Dot], mut group: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if group.len() <= 6 {
        group.sort_unstable();
        out.push(group);
        return;
    }
    let widest = |g: &mut Vec<usize>, coord: fn(&Dot) -> f64| -> (f64, usize) {
        g.sort_by(|&a, &b| coord(&dots[a]).total_cmp(&coord(&dots[b])).then(a.cmp(&b)));
        (1..g.len())
            .map(|k| (coord(&dots[g[k]]) - coord(&dots[g[k - 1]]), k))
            .fold((f64::NEG_INFINITY, 1), |best, cur| {
                if cur.0 > best.0 {
                    cur
                } else {
                    best
                }
            })
    };
    let (gap, mut at) = widest(&mut group, |d| d.cx);
    if gap <= 0.0 {
        at = widest(&mut group, |d| d.cy).1;
    }
    let rest = group.split_off(at);
    split_oversized(dots, group, out);
    split_oversized(dots, rest, out);
}

/// Start of the text lines modulo `period`: the residue that puts the most
/// dots within `band` below it. `None` for an empty input.
pub fn line_phase(ys: &[f64], period: f64, band: f64) -> Option<f64> {
    if ys.is_empty() || !(period > 0.0) {
        return None;
    }
    let mut r: Vec<f64> = ys.iter().map(|y| y.rem_euclid(period)).collect();
    r.sort_by(f64::total_cmp);
    let n = r.len();
    // Window over the residues unrolled once around the circle.
    let at = |k: usize| if k < n { r[k] } else { r[k - n] + period };
    let (mut best, mut best_count, mut end) = (r[0], 0, 0);
    for start in 0..n {
        end = end.max(start);
        while end < start + n && at(end) - r[start] <= band {
            end += 1;
        }
        if end - start > best_count {
            best_count = end - start;
            best = r[start];
        }
    }
    Some(best)
}

/// Joins cells that the link rule left in pieces. A cell with an empty
/// middle row (k, m, u, x) has its top and bottom rows two pitches apart and
/// falls apart into two clusters. Two clusters are joined when they sit on
/// the same text line, their combined width stays below the midpoint of the
/// column pitch and the gap between cells, and the union holds at most six
/// dots. Cells come out ordered by lowest dot index.
pub fn merge_split_cells(
    cells: &[BrailleCell],
    dots: &[Dot],
    layout: &LayoutParams,
) -> Vec<BrailleCell> {
    let ys: Vec<f64> = dots.iter().map(|d| d.cy).collect();
    let tol = (layout.ver_max - layout.ver_pitch).max(0.2 * layout.ver_pitch);
    let period = layout.ver_period;
    let Some(phase) = line_phase(&ys, period, 2.0 * layout.ver_pitch + tol) else {
        return cells.to_vec();
    };
    let line_of = |y: f64| ((y - phase + tol) / period).floor() as i64;
    let width = 0.5 * (layout.hor_pitch + layout.hor_inter).max(2.0 * layout.hor_max);

    struct Piece {
        line: Option<i64>,
        x0: f64,
        x1: f64,
    }
    let pieces: Vec<Piece> = cells
        .iter()
        .map(|c| {
            let first = line_of(dots[c.dots[0]].cy);
            let same = c.dots.iter().all(|&i| line_of(dots[i].cy) == first);
            let (x0, x1) = c
                .dots
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                    (a.min(dots[i].cx), b.max(dots[i].cx))
                });
            Piece {
                line: same.then_some(first),
                x0,
                x1,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..cells.len())
        .filter(|&k| pieces[k].line.is_some())
        .collect();
    order.sort_by(|&a, &b| {
        pieces[a]
            .line
            .cmp(&pieces[b].line)
            .then(pieces[a].x0.total_cmp(&pieces[b].x0))
            .then(a.cmp(&b))
    });
    let mut sets = DisjointSets::new(cells.len());
    let mut size: Vec<usize> = cells.iter().map(|c| c.dots.len()).collect();
    let mut span: Vec<(f64, f64)> = pieces.iter().map(|p| (p.x0, p.x1)).collect();
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if pieces[b].line != pieces[a].line || pieces[b].x0 - pieces[a].x0 > width {
                break;
            }
            let (ra, rb) = (sets.find(a), sets.find(b));
            if ra == rb {
                continue;
            }
            let lo = span[ra].0.min(span[rb].0);
            let hi = span[ra].1.max(span[rb].1);
            if hi - lo <= width && size[ra] + size[rb] <= 6 {
                sets.union(ra, rb);
                let r = sets.find(ra);
                size[r] = size[ra] + size[rb];
                span[r] = (lo, hi);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot_of_root = vec![usize::MAX; cells.len()];
    for (k, c) in cells.iter().enumerate() {
        let r = sets.find(k);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].extend_from_slice(&c.dots);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
        .into_iter()
        .enumerate()
        .map(|(id, dots)| BrailleCell { id, dots })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64, y: f64) -> Dot {
        Dot::new(x, y, 3.0, 10)
    }

    #[test]
    fn mutual_nearest_pair() {
        let s = nearest_neighbor_distances(&[d(0.0, 0.0), d(3.0, 4.0)]).unwrap();
        assert_eq!(s.hor_near, vec![3.0, 3.0]);
        assert_eq!(s.ver_near, vec![4.0, 4.0]);
    }

    #[test]
    fn collinear_dots() {
        let s = nearest_neighbor_distances(&[d(0.0, 0.0), d(10.0, 0.0), d(12.0, 0.0)]).unwrap();
        assert_eq!(s.hor_near, vec![10.0, 2.0, 2.0]);
    }

    #[test]
    fn tie_prefers_smaller_cy_then_cx() {
        // Dot 0 is 5 away from both: (5,0) above-right and (0,5) below.
        let s = nearest_neighbor_distances(&[d(0.0, 0.0), d(0.0, 5.0), d(5.0, 0.0)]).unwrap();
        assert_eq!(s.neighbor[0], 2);
    }

    #[test]
    fn one_dot_is_insufficient() {
        assert!(matches!(
            nearest_neighbor_distances(&[d(0.0, 0.0)]),
            Err(Error::InsufficientInput(_))
        ));
    }

    #[test]
    fn single_value_peak() {
        let p = histogram_peaks(&[7.0; 20], 1);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].lo, p[0].hi, p[0].mode), (7.0, 7.0, 7.0));
    }

    #[test]
    fn bimodal_peaks() {
        let mut s = vec![5.0; 50];
        s.extend(vec![20.0; 50]);
        let p = histogram_peaks(&s, 1);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].mode, 5.0);
        assert_eq!(p[1].mode, 20.0);
    }

    #[test]
    fn uniform_noise_is_one_wide_peak() {
        let s: Vec<f64> = (0..400).map(|i| (i % 100) as f64 + 0.5).collect();
        let p = histogram_peaks(&s, 2);
        assert_eq!(p.len(), 1);
        assert!(p[0].hi - p[0].lo > 90.0);
    }

    fn stats_from(hor: Vec<f64>, ver: Vec<f64>) -> NeighborStats {
        let n = hor.len();
        NeighborStats {
            hor_near: hor,
            ver_near: ver,
            neighbor: vec![0; n],
        }
    }

    #[test]
    fn layout_from_two_peaks() {
        let mut hor = Vec::new();
        for v in [8.0, 9.0, 9.0, 9.0, 10.0] {
            hor.extend(std::iter::repeat_n(v, 10));
        }
        hor.extend(vec![25.0; 20]);
        let ver = vec![20.0; hor.len()];
        let cfg = LayoutConfig {
            bin_width: 1,
            inter_rule: InterRule::ModeDifference,
            ..Default::default()
        };
        let l = estimate_layout(&stats_from(hor.clone(), ver.clone()), &cfg).unwrap();
        assert_eq!(l.hor_max, 10.0);
        assert_eq!(l.hor_inter, 25.0 - 9.0);
        assert_eq!(l.hor_period, 9.0 + 25.0);
        let second = LayoutConfig {
            inter_rule: InterRule::SecondMode,
            ..cfg
        };
        assert_eq!(
            estimate_layout(&stats_from(hor.clone(), ver.clone()), &second)
                .unwrap()
                .hor_inter,
            25.0
        );
        assert!(!l.hor_low_confidence);
        // single vertical peak falls back to the geometry ratio
        assert_eq!(l.ver_max, 20.0);
        assert_eq!(l.ver_inter, 48.0);
        assert!(l.ver_low_confidence);
    }

    #[test]
    fn no_samples_is_an_estimation_error() {
        let cfg = LayoutConfig {
            alignment_floor: 100.0,
            ..Default::default()
        };
        assert!(matches!(
            estimate_layout(&stats_from(vec![1.0, 2.0], vec![1.0, 2.0]), &cfg),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn two_linked_dots_form_one_cell() {
        let c = cluster_cells(&[d(0.0, 0.0), d(0.0, 9.0)], 10.0, 10.0);
        assert_eq!(c.cells.len(), 1);
        assert_eq!(c.cells[0].dots, vec![0, 1]);
    }

    #[test]
    fn isolated_dot_is_its_own_cell() {
        let c = cluster_cells(&[d(0.0, 0.0), d(0.0, 10.0), d(40.0, 0.0)], 12.0, 12.0);
        assert_eq!(c.cells.len(), 2);
        assert_eq!(c.cells[1].dots, vec![2]);
    }

    #[test]
    fn oversized_cluster_is_split() {
        // Eight dots in a 4x2 block with uniform spacing chain into one group.
        let dots: Vec<Dot> = (0..8)
            .map(|i| {
                d(
                    (i % 4) as f64 * 10.0 + if i % 4 >= 2 { 5.0 } else { 0.0 },
                    (i / 4) as f64 * 10.0,
                )
            })
            .collect();
        let c = cluster_cells(&dots, 15.0, 10.0);
        assert!(c.over_merged);
        assert!(c.cells.iter().all(|cell| cell.dots.len() <= 6));
        assert_eq!(c.cells.iter().map(|c| c.dots.len()).sum::<usize>(), 8);
    }
}
