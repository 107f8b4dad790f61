//! Rendering of Braille pages with ground truth, plus corruption and corpus
//! generation.

mod corpus;
mod corrupt;

pub use corpus::{
    corpus_page, page_text, read_manifest, write_manifest, write_page, CorpusPage, CorpusSpec,
    ManifestEntry, Severity, MANIFEST_NAME,
};
pub use corrupt::{corrupt, modal_intensity, CorruptOpts};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell_cluster::BrailleGeometry;
use crate::error::{Error, Result};
use crate::raster::GrayRaster;
use crate::transcribe::table::{code_from_mask, dot_bit, BrailleTable};

pub const DOT_INTENSITY: u8 = 60;
pub const PAPER_INTENSITY: u8 = 230;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSpec {
    pub text: String,
    pub dpi: f64,
    #[serde(flatten)]
    pub geometry: BrailleGeometry,
    pub margin_mm: f64,
    pub page_w_mm: f64,
    pub page_h_mm: f64,
}

impl Default for PageSpec {
    fn default() -> Self {
        Self {
            text: String::new(),
            dpi: 200.0,
            geometry: BrailleGeometry::default(),
            margin_mm: 15.0,
            page_w_mm: 265.0,
            page_h_mm: 320.0,
        }
    }
}

impl PageSpec {
    pub fn with_text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if [self.dpi, self.margin_mm, self.page_w_mm, self.page_h_mm]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err(Error::Param(format!(
                "dpi, margin and page size must be positive: {} dpi, {} mm, {}x{} mm",
                self.dpi, self.margin_mm, self.page_w_mm, self.page_h_mm
            )));
        }
        if self.cells_per_line() == 0 || self.lines_per_page() == 0 {
            return Err(Error::Param("page too small for a single cell".into()));
        }
        Ok(())
    }

    pub fn px_per_mm(&self) -> f64 {
        self.dpi / 25.4
    }

    pub fn size_px(&self) -> (usize, usize) {
        let px = self.px_per_mm();
        (
            ((self.page_w_mm * px).round() as usize).max(1),
            ((self.page_h_mm * px).round() as usize).max(1),
        )
    }

    pub fn cells_per_line(&self) -> usize {
        let g = &self.geometry;
        let room = self.page_w_mm - 2.0 * self.margin_mm - g.col_pitch_mm;
        if room < 0.0 {
            0
        } else {
            (room / g.cell_pitch_mm).floor() as usize + 1
        }
    }

    pub fn lines_per_page(&self) -> usize {
        let g = &self.geometry;
        let room = self.page_h_mm - 2.0 * self.margin_mm - 2.0 * g.row_pitch_mm;
        if room < 0.0 {
            0
        } else {
            (room / g.line_pitch_mm).floor() as usize + 1
        }
    }

    /// Pixel position of dot 1 of the cell at `(line, col)`.
    pub fn cell_origin(&self, line: usize, col: usize) -> (f64, f64) {
        let px = self.px_per_mm();
        (
            (self.margin_mm + col as f64 * self.geometry.cell_pitch_mm) * px,
            (self.margin_mm + line as f64 * self.geometry.line_pitch_mm) * px,
        )
    }

    /// Pixel position of the dot at column `x`, row `y` of a cell.
    pub fn dot_position(&self, line: usize, col: usize, x: u8, y: u8) -> (f64, f64) {
        let (ox, oy) = self.cell_origin(line, col);
        let px = self.px_per_mm();
        (
            ox + x as f64 * self.geometry.col_pitch_mm * px,
            oy + y as f64 * self.geometry.row_pitch_mm * px,
        )
    }

    pub fn dot_radius_px(&self) -> f64 {
        self.geometry.dot_diameter_mm / 2.0 * self.px_per_mm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthDot {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub cell_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCell {
    pub cell_id: usize,
    pub mask: u8,
    /// Table symbol of the cell.
    #[serde(rename = "char")]
    pub symbol: char,
    pub line: usize,
    pub col: usize,
    /// Centres of all six positions, indexed by dot bit, raised or flat.
    pub positions: [[f64; 2]; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// The text as laid out: one line per rendered line.
    pub text: String,
    pub dpi: f64,
    pub width: usize,
    pub height: usize,
    pub dots: Vec<TruthDot>,
    pub cells: Vec<TruthCell>,
}

impl GroundTruth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }

    /// Ground truth after [`corrupt`] rotates the page by `deg` degrees.
    pub fn rotated(&self, deg: f64) -> Self {
        if deg == 0.0 {
            return self.clone();
        }
        let center = corrupt::rotation_center(self.width, self.height);
        let f = |x: f64, y: f64| corrupt::rotate_point(x, y, deg, center);
        let mut out = self.clone();
        for d in &mut out.dots {
            (d.cx, d.cy) = f(d.cx, d.cy);
        }
        for c in &mut out.cells {
            for p in &mut c.positions {
                let (x, y) = f(p[0], p[1]);
                *p = [x, y];
            }
        }
        out
    }

    /// Number of raised dots, which always equals `dots.len()`.
    pub fn planted_dots(&self) -> usize {
        self.cells
            .iter()
            .map(|c| c.mask.count_ones() as usize)
            .sum()
    }
}

/// Cells of each rendered line, as `(mask, char index)`, and the laid-out
/// text. Words wrap at spaces; `\n` forces a break.
#[allow(clippy::type_complexity)]
fn layout_text(spec: &PageSpec, table: &BrailleTable) -> Result<(Vec<Vec<Option<u8>>>, String)> {
    let per_line = spec.cells_per_line();
    let mut lines: Vec<Vec<Option<u8>>> = Vec::new();
    let mut text_lines: Vec<String> = Vec::new();
    let mut offset = 0;
    for para in spec.text.split('\n') {
        let mut cur: Vec<Option<u8>> = Vec::new();
        let mut cur_text = String::new();
        for word in para.split(' ') {
            let start = offset;
            offset += word.chars().count() + 1;
            if word.is_empty() {
                continue;
            }
            let cells = table.encode_word(word, start)?;
            if cells.len() > per_line {
                return Err(Error::Pagination {
                    index: start + per_line,
                });
            }
            let need = if cur.is_empty() {
                cells.len()
            } else {
                cur.len() + 1 + cells.len()
            };
            if need > per_line {
                lines.push(std::mem::take(&mut cur));
                text_lines.push(std::mem::take(&mut cur_text));
                if lines.len() >= spec.lines_per_page() {
                    return Err(Error::Pagination { index: start });
                }
            }
            if !cur.is_empty() {
                cur.push(None);
                cur_text.push(' ');
            }
            cur.extend(cells.into_iter().map(Some));
            cur_text.push_str(word);
        }
        if !cur.is_empty() {
            if lines.len() >= spec.lines_per_page() {
                return Err(Error::Pagination {
                    index: offset.saturating_sub(1),
                });
            }
            lines.push(cur);
            text_lines.push(cur_text);
        }
    }
    Ok((lines, text_lines.join("\n")))
}

/// Paints an anti-aliased dark disc: a pixel's darkness is the fraction of a
/// unit-wide band around the rim it lies inside.
fn paint_disc(img: &mut GrayRaster, cx: f64, cy: f64, r: f64) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let reach = r + 1.0;
    let (x0, x1) = ((cx - reach).floor() as isize, (cx + reach).ceil() as isize);
    let (y0, y1) = ((cy - reach).floor() as isize, (cy + reach).ceil() as isize);
    let span = (PAPER_INTENSITY - DOT_INTENSITY) as f64;
    for y in y0.max(0)..=y1.min(h - 1) {
        for x in x0.max(0)..=x1.min(w - 1) {
            let d = (x as f64 - cx).hypot(y as f64 - cy);
            let cover = (r + 0.5 - d).clamp(0.0, 1.0);
            if cover > 0.0 {
                let v = (PAPER_INTENSITY as f64 - cover * span).round() as u8;
                let (xu, yu) = (x as usize, y as usize);
                img.set(xu, yu, img.get(xu, yu).min(v));
            }
        }
    }
}

/// Renders `spec.text` as dark dots on light paper.
pub fn render_page(spec: &PageSpec, table: &BrailleTable) -> Result<(GrayRaster, GroundTruth)> {
    spec.validate()?;
    let (lines, text) = layout_text(spec, table)?;
    let (w, h) = spec.size_px();
    let mut img = GrayRaster::filled(w, h, PAPER_INTENSITY);
    let r = spec.dot_radius_px();
    let mut truth = GroundTruth {
        text,
        dpi: spec.dpi,
        width: w,
        height: h,
        dots: Vec::new(),
        cells: Vec::new(),
    };
    for (li, line) in lines.iter().enumerate() {
        for (ci, cell) in line.iter().enumerate() {
            let Some(mask) = *cell else { continue };
            let cell_id = truth.cells.len();
            let mut positions = [[0.0; 2]; 6];
            for y in 0..3u8 {
                for x in 0..2u8 {
                    let (px, py) = spec.dot_position(li, ci, x, y);
                    positions[dot_bit(x, y) as usize] = [px, py];
                }
            }
            for (x, y) in code_from_mask(mask) {
                let [cx, cy] = positions[dot_bit(x, y) as usize];
                paint_disc(&mut img, cx, cy, r);
                truth.dots.push(TruthDot { cx, cy, r, cell_id });
            }
            truth.cells.push(TruthCell {
                cell_id,
                mask,
                symbol: table.symbol(mask).expect("masks come from the table"),
                line: li,
                col: ci,
                positions,
            });
        }
    }
    Ok((img, truth))
}

/// Renders a single cell with an arbitrary non-empty mask at line 0, col 0.
/// `symbol` in the truth is the table entry, or `?` for masks without one.
pub fn render_mask(spec: &PageSpec, mask: u8) -> Result<(GrayRaster, GroundTruth)> {
    if mask == 0 || mask >= 64 {
        return Err(Error::Param(format!(
            "mask {mask} is not a non-empty 6-bit pattern"
        )));
    }
    let table = BrailleTable::grade1();
    let blank = PageSpec {
        text: String::new(),
        ..spec.clone()
    };
    let (mut img, mut truth) = render_page(&blank, &table)?;
    let r = spec.dot_radius_px();
    let mut positions = [[0.0; 2]; 6];
    for y in 0..3u8 {
        for x in 0..2u8 {
            let (px, py) = spec.dot_position(0, 0, x, y);
            positions[dot_bit(x, y) as usize] = [px, py];
        }
    }
    for (x, y) in code_from_mask(mask) {
        let [cx, cy] = positions[dot_bit(x, y) as usize];
        paint_disc(&mut img, cx, cy, r);
        truth.dots.push(TruthDot {
            cx,
            cy,
            r,
            cell_id: 0,
        });
    }
    truth.cells.push(TruthCell {
        cell_id: 0,
        mask,
        symbol: table.symbol(mask).unwrap_or('?'),
        line: 0,
        col: 0,
        positions,
    });
    Ok((img, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_a_has_one_dot_at_margin() {
        let t = BrailleTable::grade1();
        let (img, truth) = render_page(&PageSpec::with_text("a"), &t).unwrap();
        assert_eq!(truth.dots.len(), 1);
        let m = 15.0 * 200.0 / 25.4;
        assert!((truth.dots[0].cx - m).abs() < 1e-9 && (truth.dots[0].cy - m).abs() < 1e-9);
        assert_eq!((img.width(), img.height()), (2087, 2520));
        assert_eq!(
            img.get(m.round() as usize, m.round() as usize),
            DOT_INTENSITY
        );
    }

    #[test]
    fn letter_l_is_one_column() {
        let t = BrailleTable::grade1();
        let (_, truth) = render_page(&PageSpec::with_text("l"), &t).unwrap();
        assert_eq!(truth.dots.len(), 3);
        assert!(truth.dots.iter().all(|d| d.cx == truth.dots[0].cx));
    }

    #[test]
    fn be_neighbours_straddle_cells() {
        let t = BrailleTable::grade1();
        let (_, truth) = render_page(&PageSpec::with_text("be"), &t).unwrap();
        assert_eq!(truth.cells.len(), 2);
        // 'b' is a single left column; the nearest horizontal dot of its top
        // dot is the first dot of 'e'.
        let b_top = truth.dots[0];
        let e_first = truth.dots.iter().find(|d| d.cell_id == 1).unwrap();
        assert!(e_first.cx > b_top.cx && e_first.cy == b_top.cy);
    }

    #[test]
    fn dot_count_matches_masks() {
        let t = BrailleTable::grade1();
        let (_, truth) = render_page(&PageSpec::with_text("The quick brown fox, 42."), &t).unwrap();
        assert_eq!(truth.dots.len(), truth.planted_dots());
        assert_eq!(truth.text, "The quick brown fox, 42.");
    }

    #[test]
    fn wrapping_and_overflow() {
        let t = BrailleTable::grade1();
        let spec = PageSpec::default();
        let word = "abcdefghij";
        let text = [word; 4].join(" ");
        let (_, truth) = render_page(
            &PageSpec {
                text,
                ..spec.clone()
            },
            &t,
        )
        .unwrap();
        assert_eq!(truth.text.lines().count(), 2);
        let long = "a".repeat(40);
        assert!(matches!(
            render_page(
                &PageSpec {
                    text: long,
                    ..spec.clone()
                },
                &t
            ),
            Err(Error::Pagination { index: 39 })
        ));
        let many = vec![word; 3 * 30].join(" ");
        assert!(matches!(
            render_page(&PageSpec { text: many, ..spec }, &t),
            Err(Error::Pagination { .. })
        ));
    }

    #[test]
    fn capacity_at_defaults() {
        let s = PageSpec::default();
        assert_eq!((s.cells_per_line(), s.lines_per_page()), (39, 29));
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = BrailleTable::grade1();
        let s = PageSpec::with_text("abc def");
        assert_eq!(render_page(&s, &t).unwrap(), render_page(&s, &t).unwrap());
    }
}
