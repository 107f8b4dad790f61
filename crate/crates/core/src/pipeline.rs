//! The full recognition pipeline over one page.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::cell_cluster::{
    cluster_cells, estimate_layout, merge_split_cells, nearest_neighbor_distances, BrailleCell,
    BrailleGeometry, LayoutConfig, LayoutParams,
};
use crate::dot_detect::{hough_circles, Dot, HoughParams};
use crate::error::Result;
use crate::raster::{preprocess_stages, BinaryRaster, Image, PreprocessParams, Stages};
use crate::transcribe::{
    centroid, decode_lines, deskew, detect_levels, encode, estimate_skew, extract_features,
    insert_spaces, order_cells, BrailleTable, Centroid, Encoding, FeatureVector, ForestModel,
    Levels, Sample, Slot,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub preprocess: PreprocessParams,
    /// Derived from `dpi` and the dot diameter when unset.
    pub hough: Option<HoughParams>,
    pub dpi: f64,
    pub geometry: BrailleGeometry,
    pub layout: LayoutConfig,
    /// Replaces the median detected dot radius as the alignment floor.
    pub alignment_floor: Option<f64>,
    /// Spacings that replace the estimated ones.
    pub layout_override: LayoutOverride,
    /// Image position of dot 1 of some cell. Anchors the reference cell on
    /// pages without a cell that fills both columns and all rows.
    pub grid_origin: Option<(f64, f64)>,
    /// Rotate dot positions into a level reading frame before transcription.
    pub deskew: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessParams::default(),
            hough: None,
            dpi: 200.0,
            geometry: BrailleGeometry::default(),
            layout: LayoutConfig::default(),
            alignment_floor: None,
            layout_override: LayoutOverride::default(),
            grid_origin: None,
            deskew: true,
        }
    }
}

impl PipelineConfig {
    pub fn hough_params(&self) -> Result<HoughParams> {
        match self.hough {
            Some(h) => Ok(h),
            None => HoughParams::for_resolution(self.dpi, self.geometry.dot_diameter_mm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayoutOverride {
    pub hor_max: Option<f64>,
    pub ver_max: Option<f64>,
    pub hor_inter: Option<f64>,
    pub ver_inter: Option<f64>,
}

impl LayoutOverride {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, l: &mut LayoutParams) {
        if let Some(v) = self.hor_max {
            l.hor_max = v;
        }
        if let Some(v) = self.ver_max {
            l.ver_max = v;
        }
        if let Some(v) = self.hor_inter {
            l.hor_inter = v;
        }
        if let Some(v) = self.ver_inter {
            l.ver_inter = v;
        }
    }
}

/// How cells become symbols.
#[derive(Debug, Clone, Copy)]
pub enum Classifier<'a> {
    Table(&'a BrailleTable),
    Forest(&'a ForestModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReading {
    pub id: usize,
    /// Indices into [`PageAnalysis::dots`].
    pub dots: Vec<usize>,
    pub centroid: Option<Centroid>,
    pub features: Option<FeatureVector>,
    pub encoding: Option<Encoding>,
    pub mask: Option<u8>,
    pub symbol: Option<char>,
    pub confidence: f64,
    /// The reference cell was built from layout parameters.
    pub synthetic_sample: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageAnalysis {
    pub threshold: Option<u8>,
    pub degenerate_histogram: bool,
    /// Detections in image coordinates, sorted by `(cy, cx)`.
    pub dots: Vec<Dot>,
    pub layout: Option<LayoutParams>,
    /// Layout fell back to the nominal geometry.
    pub layout_fallback: bool,
    pub over_merged: bool,
    /// Estimated rotation of the text rows, radians.
    pub skew: f64,
    pub cells: Vec<BrailleCell>,
    pub readings: Vec<CellReading>,
    /// Cell ids per line, in reading order.
    pub lines: Vec<Vec<usize>>,
    pub text: String,
}

impl PageAnalysis {
    fn empty(stages: &Stages) -> Self {
        Self {
            threshold: stages.threshold,
            degenerate_histogram: stages.degenerate_histogram,
            dots: Vec::new(),
            layout: None,
            layout_fallback: false,
            over_merged: false,
            skew: 0.0,
            cells: Vec::new(),
            readings: Vec::new(),
            lines: Vec::new(),
            text: String::new(),
        }
    }

    /// Some dot was found but no cell produced a symbol.
    pub fn is_unresolved(&self) -> bool {
        !self.dots.is_empty() && self.readings.iter().all(|r| r.symbol.is_none())
    }

    pub fn low_confidence(&self) -> bool {
        self.layout_fallback
            || self.over_merged
            || self.layout.is_some_and(|l| l.low_confidence())
            || self.readings.iter().any(|r| r.synthetic_sample)
    }
}

pub fn analyze(img: &Image, cfg: &PipelineConfig, clf: Classifier<'_>) -> Result<PageAnalysis> {
    let stages = preprocess_stages(img, &cfg.preprocess)?;
    analyze_stages(&stages, cfg, clf)
}

/// Runs everything after preprocessing.
pub fn analyze_stages(
    stages: &Stages,
    cfg: &PipelineConfig,
    clf: Classifier<'_>,
) -> Result<PageAnalysis> {
    let mut out = PageAnalysis::empty(stages);
    let dots = hough_circles(&stages.dilated, &cfg.hough_params()?);
    debug!("{} dots detected", dots.len());
    if dots.is_empty() {
        return Ok(out);
    }
    let (layout, fallback) = page_layout(&dots, cfg);
    out.layout = Some(layout);
    out.layout_fallback = fallback;

    let clustering = cluster_cells(&dots, layout.hor_max, layout.ver_max);
    out.over_merged = clustering.over_merged;
    let cells = clustering.cells;

    let center = page_center(&stages.dilated);
    let skew = if cfg.deskew {
        estimate_skew(&cells, &dots, &layout)
    } else {
        0.0
    };
    let frame = deskew(&dots, skew, center);
    let cells = merge_split_cells(&cells, &frame, &layout);
    let origin = cfg.grid_origin.map(|(x, y)| {
        let d = deskew(&[Dot::new(x, y, 1.0, 1)], skew, center)[0];
        (d.cx, d.cy)
    });
    out.skew = skew;

    let levels: Vec<Levels> = cells
        .iter()
        .map(|c| detect_levels(c, &frame, &layout))
        .collect();
    let samples = page_samples(&cells, &levels, &layout);
    let fallback_sample = samples.is_empty().then(|| {
        let anchor = origin.unwrap_or_else(|| top_left(&frame));
        warn!("no full cell on the page; reference cell anchored at {anchor:?}");
        Sample::synthetic(anchor, &layout)
    });

    let mut readings = Vec::with_capacity(cells.len());
    let mut positions = Vec::with_capacity(cells.len());
    for (cell, lv) in cells.iter().zip(&levels) {
        let mean = mean_position(cell, &frame);
        let sample = if lv.is_full() {
            None
        } else {
            nearest_sample(&samples, mean, &layout).or(fallback_sample.as_ref())
        };
        let reading = read_cell(cell, &frame, sample, &layout, clf);
        let pos = reading.centroid.map_or(mean, |c| (c.x, c.y));
        positions.push((cell.id, pos.0, pos.1));
        readings.push(reading);
    }

    let lines = order_cells(&positions, layout.ver_inter);
    let mut slots: Vec<Vec<Slot>> = Vec::with_capacity(lines.len());
    for line in &lines {
        let xs: Vec<f64> = line.iter().map(|&id| positions[id].1).collect();
        let spaces = insert_spaces(&xs, layout.hor_period);
        let mut row = Vec::new();
        for (&id, &n) in line.iter().zip(&spaces) {
            row.extend(std::iter::repeat_n(Slot::Space, n));
            row.push(Slot::Cell(readings[id].symbol));
        }
        slots.push(row);
    }
    out.text = decode_lines(&slots);
    out.dots = dots;
    out.cells = cells;
    out.readings = readings;
    out.lines = lines;
    Ok(out)
}

fn page_layout(dots: &[Dot], cfg: &PipelineConfig) -> (LayoutParams, bool) {
    let floor = cfg.alignment_floor.unwrap_or_else(|| {
        let mut r: Vec<f64> = dots.iter().map(|d| d.r).collect();
        r.sort_by(f64::total_cmp);
        r[r.len() / 2]
    });
    let lc = LayoutConfig {
        alignment_floor: floor,
        ..cfg.layout
    };
    let nominal = LayoutParams::nominal(cfg.dpi, &cfg.geometry, cfg.layout.inter_rule);
    let (mut layout, fallback) =
        match nearest_neighbor_distances(dots).and_then(|s| estimate_layout(&s, &lc)) {
            Ok(l) => plausible_layout(l, &nominal),
            Err(e) => {
                debug!("layout estimation failed ({e}); using nominal geometry");
                (nominal, true)
            }
        };
    cfg.layout_override.apply(&mut layout);
    (layout, fallback)
}

/// Replaces an axis whose measured pitch is far from the physical one. Tiny
/// pages can measure two-row gaps as the row pitch.
fn plausible_layout(mut l: LayoutParams, nominal: &LayoutParams) -> (LayoutParams, bool) {
    let off = |got: f64, want: f64| !(0.75..=1.25).contains(&(got / want));
    let mut replaced = false;
    if off(l.hor_pitch, nominal.hor_pitch) {
        debug!(
            "horizontal pitch {:.2} implausible; using nominal geometry",
            l.hor_pitch
        );
        l.hor_max = nominal.hor_max;
        l.hor_inter = nominal.hor_inter;
        l.hor_pitch = nominal.hor_pitch;
        l.hor_period = nominal.hor_period;
        l.hor_low_confidence = true;
        replaced = true;
    }
    if off(l.ver_pitch, nominal.ver_pitch) {
        debug!(
            "vertical pitch {:.2} implausible; using nominal geometry",
            l.ver_pitch
        );
        l.ver_max = nominal.ver_max;
        l.ver_inter = nominal.ver_inter;
        l.ver_pitch = nominal.ver_pitch;
        l.ver_period = nominal.ver_period;
        l.ver_low_confidence = true;
        replaced = true;
    }
    (l, replaced)
}

fn page_center(img: &BinaryRaster) -> (f64, f64) {
    (
        (img.width() as f64 - 1.0) / 2.0,
        (img.height() as f64 - 1.0) / 2.0,
    )
}

fn top_left(dots: &[Dot]) -> (f64, f64) {
    let d = dots
        .iter()
        .min_by(|a, b| a.cy.total_cmp(&b.cy).then(a.cx.total_cmp(&b.cx)))
        .expect("non-empty page");
    (d.cx, d.cy)
}

fn mean_position(cell: &BrailleCell, dots: &[Dot]) -> (f64, f64) {
    let n = cell.dots.len() as f64;
    let (sx, sy) = cell
        .dots
        .iter()
        .fold((0.0, 0.0), |(x, y), &i| (x + dots[i].cx, y + dots[i].cy));
    (sx / n, sy / n)
}

fn page_samples(cells: &[BrailleCell], levels: &[Levels], layout: &LayoutParams) -> Vec<Sample> {
    cells
        .iter()
        .zip(levels)
        .filter(|(c, _)| c.dots.len() <= 6)
        .filter_map(|(_, lv)| Sample::from_levels(lv, layout))
        .collect()
}

/// The full cell nearest in x on the same text line, else the nearest full
/// cell anywhere.
fn nearest_sample<'s>(
    samples: &'s [Sample],
    at: (f64, f64),
    layout: &LayoutParams,
) -> Option<&'s Sample> {
    let same_line = samples
        .iter()
        .filter(|s| (s.center().1 - at.1).abs() <= 2.0 * layout.ver_pitch)
        .min_by(|a, b| {
            (a.center().0 - at.0)
                .abs()
                .total_cmp(&(b.center().0 - at.0).abs())
        });
    same_line.or_else(|| {
        samples.iter().min_by(|a, b| {
            let da = (a.center().0 - at.0).hypot(a.center().1 - at.1);
            let db = (b.center().0 - at.0).hypot(b.center().1 - at.1);
            da.total_cmp(&db)
        })
    })
}

fn read_cell(
    cell: &BrailleCell,
    dots: &[Dot],
    sample: Option<&Sample>,
    layout: &LayoutParams,
    clf: Classifier<'_>,
) -> CellReading {
    let mut r = CellReading {
        id: cell.id,
        dots: cell.dots.clone(),
        centroid: None,
        features: None,
        encoding: None,
        mask: None,
        symbol: None,
        confidence: 0.0,
        synthetic_sample: sample.is_some_and(|s| s.synthetic),
        error: None,
    };
    let fv = match centroid(cell, dots, sample, layout) {
        Ok(c) => {
            r.centroid = Some(c);
            extract_features(cell, dots, &c, layout)
        }
        Err(e) => Err(e),
    };
    let fv = match fv {
        Ok(fv) => fv,
        Err(e) => {
            r.error = Some(e.to_string());
            return r;
        }
    };
    let enc = encode(&fv);
    r.mask = Some(fv.mask());
    match clf {
        Classifier::Table(t) => {
            r.symbol = t.symbol(fv.mask());
            r.confidence = if r.symbol.is_some() { 1.0 } else { 0.0 };
        }
        Classifier::Forest(m) => {
            let (label, conf) = m.classify(&enc);
            r.symbol = label.chars().next();
            r.confidence = conf;
        }
    }
    r.features = Some(fv);
    r.encoding = Some(enc);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_cluster::InterRule;

    fn nominal() -> LayoutParams {
        LayoutParams::nominal(200.0, &BrailleGeometry::default(), InterRule::default())
    }

    #[test]
    fn doubled_row_pitch_falls_back() {
        let n = nominal();
        let mut l = n;
        l.ver_pitch *= 2.0;
        l.ver_max *= 2.0;
        l.ver_low_confidence = false;
        let (got, replaced) = plausible_layout(l, &n);
        assert!(replaced);
        assert_eq!(got.ver_pitch, n.ver_pitch);
        assert!(got.ver_low_confidence);
        assert_eq!(got.hor_pitch, n.hor_pitch);
        assert_eq!(plausible_layout(n, &n), (n, false));
    }

    #[test]
    fn overrides_replace_single_fields() {
        let mut l = nominal();
        let before = l;
        LayoutOverride {
            ver_inter: Some(50.0),
            ..Default::default()
        }
        .apply(&mut l);
        assert_eq!(l.ver_inter, 50.0);
        assert_eq!(l.hor_max, before.hor_max);
    }

    #[test]
    fn samples_prefer_the_same_line() {
        let l = nominal();
        let near_other_line = Sample::synthetic((100.0, 300.0), &l);
        let far_same_line = Sample::synthetic((900.0, 100.0), &l);
        let samples = [near_other_line, far_same_line];
        let got = nearest_sample(&samples, (120.0, 120.0), &l).unwrap();
        assert_eq!(got.x, samples[1].x);
    }
}
