//! Seeded multi-page corpora with per-page ground truth and a CSV manifest.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{corrupt, render_page, CorruptOpts, GroundTruth, PageSpec};
use crate::error::{Error, Result};
use crate::raster::{save_pgm, GrayRaster};
use crate::transcribe::table::BrailleTable;

const WORDS: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "is",
    "that",
    "for",
    "as",
    "with",
    "by",
    "on",
    "are",
    "this",
    "be",
    "from",
    "or",
    "an",
    "which",
    "at",
    "it",
    "can",
    "these",
    "their",
    "we",
    "was",
    "has",
    "between",
    "analysis",
    "method",
    "results",
    "data",
    "model",
    "image",
    "images",
    "system",
    "document",
    "braille",
    "cell",
    "cells",
    "dots",
    "dot",
    "page",
    "pages",
    "reading",
    "text",
    "character",
    "recognition",
    "accuracy",
    "sample",
    "distance",
    "feature",
    "features",
    "classifier",
    "forest",
    "tree",
    "trees",
    "noise",
    "filter",
    "binary",
    "pixel",
    "pixels",
    "threshold",
    "circle",
    "detection",
    "study",
    "research",
    "students",
    "learning",
    "visual",
    "impaired",
    "community",
    "education",
    "science",
    "theory",
    "experiment",
    "measure",
    "evaluation",
    "proposed",
    "approach",
    "algorithm",
    "performance",
    "compared",
    "previous",
    "work",
    "value",
    "values",
    "number",
    "level",
    "levels",
    "horizontal",
    "vertical",
    "centre",
    "point",
    "points",
    "error",
    "rate",
    "table",
    "figure",
    "section",
    "paper",
    "english",
    "grade",
    "single",
    "sided",
    "camera",
    "phone",
    "scanner",
    "low",
    "cost",
    "high",
    "quality",
    "simple",
    "robust",
    "fast",
    "accurate",
    "new",
    "standard",
    "large",
    "small",
    "each",
    "all",
    "every",
    "first",
    "second",
    "third",
    "final",
    "known",
    "used",
    "given",
    "shown",
    "found",
    "based",
    "using",
    "obtained",
    "present",
    "describe",
    "consider",
    "improve",
    "reduce",
    "library",
    "university",
    "journal",
    "volume",
    "process",
    "processing",
    "digital",
    "output",
    "input",
    "language",
    "natural",
    "label",
    "class",
    "classes",
    "vote",
    "votes",
    "random",
    "matrix",
    "column",
    "row",
    "rows",
    "space",
    "blank",
    "raised",
    "flat",
    "position",
];

const ACRONYMS: &[&str] = &["OCR", "RGB", "DPI", "UK", "USA", "PDF"];
const CLAUSE_MARKS: &[char] = &[',', ';', ':'];
const END_MARKS: &[char] = &['.', '.', '.', '!', '?'];

/// Corruption drawn per page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Severity {
    pub salt_pepper_frac: f64,
    /// Rotation is uniform in `[-max_rotate_deg, max_rotate_deg]`.
    pub max_rotate_deg: f64,
    pub illum_gradient: f64,
}

impl Severity {
    pub const CLEAN: Severity = Severity {
        salt_pepper_frac: 0.0,
        max_rotate_deg: 0.0,
        illum_gradient: 0.0,
    };

    pub const MILD: Severity = Severity {
        salt_pepper_frac: 0.01,
        max_rotate_deg: 2.0,
        illum_gradient: 0.15,
    };
}

impl Default for Severity {
    fn default() -> Self {
        Self::MILD
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub pages: usize,
    pub seed: u64,
    /// Target number of cells per page, signs included.
    pub cells_per_page: usize,
    pub severity: Severity,
    /// Geometry and resolution; the text field is ignored.
    pub page: PageSpec,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            pages: 54,
            seed: 42,
            cells_per_page: 244,
            severity: Severity::MILD,
            page: PageSpec::default(),
        }
    }
}

/// One generated page before it is written out.
#[derive(Debug, Clone)]
pub struct CorpusPage {
    pub index: usize,
    pub seed: u64,
    pub clean: GrayRaster,
    pub image: GrayRaster,
    /// Ground truth in the coordinates of `image`.
    pub truth: GroundTruth,
    pub opts: CorruptOpts,
}

fn number_token(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(1..100).to_string(),
        1 => rng.gen_range(1900..2030).to_string(),
        _ => format!("{}.{}", rng.gen_range(0..10), rng.gen_range(0..100)),
    }
}

/// Academic-style sentences whose Braille needs about `target_cells` cells.
pub fn page_text(rng: &mut ChaCha8Rng, target_cells: usize, table: &BrailleTable) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut cells = 0usize;
    while cells < target_cells {
        let len = rng.gen_range(5..13);
        for k in 0..len {
            let mut w = match rng.gen_range(0..40) {
                0..=1 => number_token(rng),
                2 => ACRONYMS.choose(rng).expect("non-empty").to_string(),
                _ => WORDS.choose(rng).expect("non-empty").to_string(),
            };
            if k == 0 || rng.gen_range(0..25) == 0 {
                let mut cs = w.chars();
                if let Some(f) = cs.next() {
                    w = f.to_uppercase().chain(cs).collect();
                }
            }
            if k + 1 == len {
                w.push(*END_MARKS.choose(rng).expect("non-empty"));
            } else if rng.gen_range(0..10) == 0 {
                w.push(*CLAUSE_MARKS.choose(rng).expect("non-empty"));
            }
            let n = table.encode_word(&w, 0).map(|c| c.len()).unwrap_or(0);
            if n == 0 {
                continue;
            }
            cells += n;
            words.push(w);
            if cells >= target_cells {
                break;
            }
        }
    }
    words.join(" ")
}

/// Page `index` of the corpus. Everything random is drawn from a generator
/// seeded with `seed + index`.
pub fn corpus_page(spec: &CorpusSpec, index: usize) -> Result<CorpusPage> {
    let table = BrailleTable::grade1();
    let seed = spec.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = page_text(&mut rng, spec.cells_per_page, &table);
    let sev = spec.severity;
    let rotate_deg = if sev.max_rotate_deg > 0.0 {
        rng.gen_range(-sev.max_rotate_deg..=sev.max_rotate_deg)
    } else {
        0.0
    };
    let opts = CorruptOpts {
        salt_pepper_frac: sev.salt_pepper_frac,
        rotate_deg,
        illum_gradient: sev.illum_gradient,
        seed: rng.gen(),
    };
    let page = PageSpec {
        text,
        ..spec.page.clone()
    };
    let (clean, truth) = render_page(&page, &table)?;
    let image = corrupt(&clean, &opts)?;
    Ok(CorpusPage {
        index,
        seed,
        clean,
        image,
        truth: truth.rotated(opts.rotate_deg),
        opts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub page: String,
    pub truth: String,
    pub seed: u64,
    pub salt_pepper_frac: f64,
    pub rotate_deg: f64,
    pub illum_gradient: f64,
}

fn page_names(index: usize) -> (String, String) {
    (
        format!("page_{index:03}.pgm"),
        format!("page_{index:03}.truth.json"),
    )
}

/// Writes the image and truth sidecar of one page into `dir`.
pub fn write_page(dir: &Path, page: &CorpusPage) -> Result<ManifestEntry> {
    let (img_name, truth_name) = page_names(page.index);
    save_pgm(dir.join(&img_name), &page.image)?;
    page.truth.save(dir.join(&truth_name))?;
    Ok(ManifestEntry {
        page: img_name,
        truth: truth_name,
        seed: page.seed,
        salt_pepper_frac: page.opts.salt_pepper_frac,
        rotate_deg: page.opts.rotate_deg,
        illum_gradient: page.opts.illum_gradient,
    })
}

pub const MANIFEST_NAME: &str = "manifest.csv";

/// Writes `manifest.csv`. Callers write it after every page so its presence
/// marks a complete corpus.
pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let mut w = csv::Writer::from_path(&path)?;
    for e in entries {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a manifest; page and truth paths are resolved against its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<(ManifestEntry, PathBuf, PathBuf)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let e: ManifestEntry = rec?;
        let (p, t) = (base.join(&e.page), base.join(&e.truth));
        out.push((e, p, t));
    }
    Ok(out)
}
