use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use obr_core::cell_cluster::{InterRule, LayoutConfig};
use obr_core::pipeline::{LayoutOverride, PipelineConfig};
use obr_core::raster::PreprocessParams;
use obr_core::synth::Severity;
use obr_core::transcribe::ForestParams;
use obr_core::{BrailleGeometry, HoughParams};

/// Optical Braille recognition for single-sided Grade-1 English pages.
#[derive(Debug, Parser)]
#[command(name = "obr", version)]
pub struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read one page image and print its text.
    Translate(TranslateArgs),
    /// Render a synthetic corpus with ground truth and a manifest.
    #[command(alias = "generate-corpus")]
    Generate(GenerateArgs),
    /// Train the cell classifier.
    Train(TrainArgs),
    /// Score the pipeline against a corpus and cross-validate the classifier.
    Evaluate(EvaluateArgs),
    /// Print layout statistics of one page and optionally dump stage images.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterRuleArg {
    /// The second peak's mode.
    SecondMode,
    /// Second mode minus first mode.
    ModeDifference,
}

/// Parses `X,Y`.
fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let x: f64 = x.trim().parse().map_err(|e| format!("bad x: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("bad y: {e}"))?;
    Ok((x, y))
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Scan resolution in dots per inch.
    #[arg(long, default_value_t = 200.0)]
    pub dpi: f64,
    /// Physical dot diameter in millimetres; sets the Hough radius range.
    #[arg(long, default_value_t = 1.5)]
    pub dot_diameter_mm: f64,
    /// Median filter window (odd).
    #[arg(long, default_value_t = 3)]
    pub median_window: usize,
    /// Dilation radius in pixels.
    #[arg(long, default_value_t = 1)]
    pub se_radius: usize,
    /// Smallest circle radius searched [default: from --dpi].
    #[arg(long)]
    pub r_min: Option<u32>,
    /// Largest circle radius searched [default: from --dpi].
    #[arg(long)]
    pub r_max: Option<u32>,
    /// Fraction of a circle's boundary that must vote.
    #[arg(long, default_value_t = HoughParams::DEFAULT_VOTE_FRACTION)]
    pub vote_fraction: f64,
    /// Minimum distance between detected centres [default: mean radius].
    #[arg(long)]
    pub nms_dist: Option<f64>,
    /// Histogram bin width in pixels.
    #[arg(long, default_value_t = 1)]
    pub bin_width: u32,
    /// Peak level as a fraction of the tallest smoothed bin.
    #[arg(long, default_value_t = 0.2)]
    pub peak_level: f64,
    /// How the inter-cell distance is read from the histogram peaks.
    #[arg(long, value_enum, default_value = "second-mode")]
    pub inter_rule: InterRuleArg,
    /// Neighbour distances below this are ignored [default: median dot radius].
    #[arg(long)]
    pub alignment_floor: Option<f64>,
    /// Replaces the estimated horizontal intra-cell bound.
    #[arg(long)]
    pub hor_max: Option<f64>,
    /// Replaces the estimated vertical intra-cell bound.
    #[arg(long)]
    pub ver_max: Option<f64>,
    /// Replaces the estimated horizontal inter-cell distance.
    #[arg(long)]
    pub hor_inter: Option<f64>,
    /// Replaces the estimated vertical inter-cell distance.
    #[arg(long)]
    pub ver_inter: Option<f64>,
    /// Image position X,Y of dot 1 of any cell, for pages without a full cell.
    #[arg(long, value_parser = parse_point)]
    pub grid_origin: Option<(f64, f64)>,
    /// Do not rotate dot positions to level the text rows.
    #[arg(long)]
    pub no_deskew: bool,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<PipelineConfig> {
        let geometry = BrailleGeometry {
            dot_diameter_mm: self.dot_diameter_mm,
            ..Default::default()
        };
        geometry.validate()?;
        if !(self.dpi > 0.0) {
            bail!("--dpi must be positive");
        }
        let (lo, hi) = obr_core::dot_detect::estimate_radius_range(self.dpi, self.dot_diameter_mm);
        let (lo, hi) = (self.r_min.unwrap_or(lo), self.r_max.unwrap_or(hi));
        let nms = self.nms_dist.unwrap_or((lo + hi) as f64 / 2.0);
        let hough = HoughParams::new(lo, hi, self.vote_fraction, nms)?;
        if self.bin_width == 0 {
            bail!("--bin-width must be at least 1");
        }
        if !(self.peak_level > 0.0 && self.peak_level < 1.0) {
            bail!("--peak-level must lie in (0, 1)");
        }
        Ok(PipelineConfig {
            preprocess: PreprocessParams {
                median_window: self.median_window,
                se_radius: self.se_radius,
            },
            hough: Some(hough),
            dpi: self.dpi,
            geometry,
            layout: LayoutConfig {
                bin_width: self.bin_width,
                peak_level: self.peak_level,
                inter_rule: match self.inter_rule {
                    InterRuleArg::SecondMode => InterRule::SecondMode,
                    InterRuleArg::ModeDifference => InterRule::ModeDifference,
                },
                ..LayoutConfig::default()
            },
            alignment_floor: self.alignment_floor,
            layout_override: LayoutOverride {
                hor_max: self.hor_max,
                ver_max: self.ver_max,
                hor_inter: self.hor_inter,
                ver_inter: self.ver_inter,
            },
            grid_origin: self.grid_origin,
            deskew: !self.no_deskew,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    /// Maximum tree depth.
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    /// Features tried at each split.
    #[arg(long, default_value_t = 3)]
    pub features_per_node: usize,
}

impl ForestArgs {
    pub fn params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            features_per_node: self.features_per_node,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TranslateArgs {
    /// Page image (PGM or PNG).
    pub image: PathBuf,
    /// Classify cells with a trained forest instead of the table.
    #[arg(long, conflicts_with = "table_only")]
    pub model: Option<PathBuf>,
    /// Classify cells with the Grade-1 table (the default without --model).
    #[arg(long)]
    pub table_only: bool,
    /// Write each preprocessing stage as PGM into this directory.
    #[arg(long)]
    pub dump_stages: Option<PathBuf>,
    /// Write detected dots as JSON.
    #[arg(long)]
    pub dots_json: Option<PathBuf>,
    /// Write the layout and cell partition as JSON.
    #[arg(long)]
    pub cells_json: Option<PathBuf>,
    /// Write the encoded feature row of every cell as CSV.
    #[arg(long)]
    pub features_csv: Option<PathBuf>,
    /// Write per-cell readings and confidences as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Corpus settings as JSON, replacing the corpus flags below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Number of pages.
    #[arg(long, default_value_t = 54)]
    pub pages: usize,
    /// Base seed; page i uses seed + i.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Target cells per page, signs included.
    #[arg(long, default_value_t = 244)]
    pub cells_per_page: usize,
    /// Render resolution.
    #[arg(long, default_value_t = 200.0)]
    pub dpi: f64,
    /// Fraction of pixels hit by salt-and-pepper noise.
    #[arg(long, default_value_t = Severity::MILD.salt_pepper_frac)]
    pub salt_pepper: f64,
    /// Rotation drawn uniformly from [-x, x] degrees.
    #[arg(long, default_value_t = Severity::MILD.max_rotate_deg)]
    pub max_rotate: f64,
    /// Left-edge darkening of the illumination ramp.
    #[arg(long, default_value_t = Severity::MILD.illum_gradient)]
    pub illum: f64,
    /// No corruption at all.
    #[arg(long)]
    pub clean: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labelled feature rows as written by `evaluate --features-csv`.
    #[arg(
        long,
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    pub features: Option<PathBuf>,
    /// Corpus manifest; rows come from running the pipeline on every page.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Worker threads for page processing.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for reports.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Score this forest's readings instead of the table's.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Skip cross-validation.
    #[arg(long)]
    pub no_cv: bool,
    /// Dot match radius in pixels [default: half the column pitch].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the labelled feature rows.
    #[arg(long)]
    pub features_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Worker threads for page processing.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    /// Page image (PGM or PNG).
    pub image: PathBuf,
    /// Write each preprocessing stage as PGM into this directory.
    #[arg(long)]
    pub dump_stages: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

pub fn severity(a: &GenerateArgs) -> Severity {
    if a.clean {
        Severity::CLEAN
    } else {
        Severity {
            salt_pepper_frac: a.salt_pepper,
            max_rotate_deg: a.max_rotate,
            illum_gradient: a.illum,
        }
    }
}
