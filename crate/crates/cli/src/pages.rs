//! Running the pipeline over every page of a manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::warn;
use obr_core::eval::{score_page, PageScore};
use obr_core::pipeline::{analyze, Classifier, PipelineConfig};
use obr_core::raster::load_image;
use obr_core::synth::{read_manifest, GroundTruth, ManifestEntry};
use rayon::prelude::*;

pub struct PageRun {
    pub entry: ManifestEntry,
    /// Why the page was left out, if it was.
    pub outcome: std::result::Result<ScoredPage, String>,
}

pub struct ScoredPage {
    pub score: PageScore,
    pub text: String,
    pub truth_text: String,
    pub low_confidence: bool,
}

pub fn read_nonempty_manifest(path: &Path) -> Result<Vec<(ManifestEntry, PathBuf, PathBuf)>> {
    let entries =
        read_manifest(path).with_context(|| format!("reading manifest {}", path.display()))?;
    if entries.is_empty() {
        bail!("manifest {} lists no pages", path.display());
    }
    Ok(entries)
}

/// Match radius: half the column pitch.
pub fn default_tol(cfg: &PipelineConfig) -> f64 {
    cfg.geometry.col_pitch_mm / 2.0 * cfg.dpi / 25.4
}

fn run_one(
    image: &Path,
    truth: &Path,
    cfg: &PipelineConfig,
    clf: Classifier<'_>,
    tol: f64,
) -> std::result::Result<ScoredPage, String> {
    if !truth.exists() {
        return Err(format!("missing truth sidecar {}", truth.display()));
    }
    let truth = GroundTruth::load(truth).map_err(|e| e.to_string())?;
    let img = load_image(image).map_err(|e| e.to_string())?;
    let a = analyze(&img, cfg, clf).map_err(|e| e.to_string())?;
    let score = score_page(&a, &truth, tol).map_err(|e| e.to_string())?;
    Ok(ScoredPage {
        score,
        low_confidence: a.low_confidence(),
        text: a.text,
        truth_text: truth.text,
    })
}

/// Pages run on `jobs` threads; results come back in manifest order.
pub fn score_pages(
    entries: Vec<(ManifestEntry, PathBuf, PathBuf)>,
    cfg: &PipelineConfig,
    clf: Classifier<'_>,
    tol: f64,
    jobs: usize,
) -> Result<Vec<PageRun>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let runs: Vec<PageRun> = pool.install(|| {
        entries
            .into_par_iter()
            .map(|(entry, image, truth)| PageRun {
                outcome: run_one(&image, &truth, cfg, clf, tol),
                entry,
            })
            .collect()
    });
    for r in &runs {
        if let Err(why) = &r.outcome {
            warn!("skipping {}: {why}", r.entry.page);
        }
    }
    Ok(runs)
}
