use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use obr_core::eval::{char_confusion, kfold, metrics, BinaryCounts, CvRow};
use obr_core::pipeline::{analyze_stages, Classifier, PageAnalysis};
use obr_core::raster::{load_image, preprocess_stages, save_pgm, Stages};
use obr_core::synth::{corpus_page, write_manifest, write_page, CorpusSpec, PageSpec};
use obr_core::transcribe::{train_forest, Encoding};
use obr_core::{BrailleTable, ForestModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{severity, EvaluateArgs, GenerateArgs, InspectArgs, TrainArgs, TranslateArgs};
use crate::output::{
    create, read_features, write_cells, write_dots, write_features, write_json, FeatureRecord,
};
use crate::pages::{default_tol, read_nonempty_manifest, score_pages};

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Dots were found but no cell could be read.
    Unresolved,
}

fn dump_stages(dir: &Path, stages: &Stages) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, img) in stages.dumps() {
        save_pgm(dir.join(name), &img)?;
    }
    Ok(())
}

fn page_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

#[derive(Serialize)]
struct CellReport<'a> {
    id: usize,
    symbol: Option<String>,
    confidence: f64,
    mask: Option<u8>,
    x: Option<f64>,
    y: Option<f64>,
    synthetic_sample: bool,
    error: &'a Option<String>,
}

#[derive(Serialize)]
struct TranslateReport<'a> {
    text: &'a str,
    low_confidence: bool,
    layout_fallback: bool,
    skew_deg: f64,
    threshold: Option<u8>,
    dots: usize,
    cells: Vec<CellReport<'a>>,
}

fn translate_report(a: &PageAnalysis) -> TranslateReport<'_> {
    TranslateReport {
        text: &a.text,
        low_confidence: a.low_confidence(),
        layout_fallback: a.layout_fallback,
        skew_deg: a.skew.to_degrees(),
        threshold: a.threshold,
        dots: a.dots.len(),
        cells: a
            .readings
            .iter()
            .map(|r| CellReport {
                id: r.id,
                symbol: r.symbol.map(String::from),
                confidence: r.confidence,
                mask: r.mask,
                x: r.centroid.map(|c| c.x),
                y: r.centroid.map(|c| c.y),
                synthetic_sample: r.synthetic_sample,
                error: &r.error,
            })
            .collect(),
    }
}

pub fn translate(a: &TranslateArgs) -> Result<Status> {
    let cfg = a.pipeline.config()?;
    let img = load_image(&a.image).with_context(|| format!("loading {}", a.image.display()))?;
    let model = match (&a.model, a.table_only) {
        (Some(p), false) => {
            Some(ForestModel::load(p).with_context(|| format!("loading model {}", p.display()))?)
        }
        _ => None,
    };
    let table = BrailleTable::grade1();
    let clf = model
        .as_ref()
        .map_or(Classifier::Table(&table), Classifier::Forest);

    let stages = preprocess_stages(&img, &cfg.preprocess)?;
    if let Some(dir) = &a.dump_stages {
        dump_stages(dir, &stages)?;
    }
    let page = analyze_stages(&stages, &cfg, clf)?;
    if let Some(p) = &a.dots_json {
        write_dots(p, &page)?;
    }
    if let Some(p) = &a.cells_json {
        write_cells(p, &page)?;
    }
    if let Some(p) = &a.features_csv {
        let name = page_name(&a.image);
        let rows: Vec<FeatureRecord> = page
            .readings
            .iter()
            .filter_map(|r| {
                let label = r.symbol.map(String::from).unwrap_or_default();
                r.encoding
                    .map(|e| FeatureRecord::new(&name, r.id, &label, &e))
            })
            .collect();
        write_features(p, &rows)?;
    }
    if let Some(p) = &a.report {
        write_json(p, &translate_report(&page))?;
    }
    if page.is_unresolved() {
        eprintln!(
            "{}: {} dots found but no cell could be read",
            a.image.display(),
            page.dots.len()
        );
        return Ok(Status::Unresolved);
    }
    if !page.text.is_empty() {
        println!("{}", page.text);
    }
    Ok(Status::Done)
}

pub fn generate(a: &GenerateArgs) -> Result<Status> {
    let spec = match &a.spec {
        Some(p) => {
            let s =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<CorpusSpec>(&s)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => CorpusSpec {
            pages: a.pages,
            seed: a.seed,
            cells_per_page: a.cells_per_page,
            severity: severity(a),
            page: PageSpec {
                dpi: a.dpi,
                ..PageSpec::default()
            },
        },
    };
    spec.page.validate()?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()?;
    let entries = pool.install(|| {
        (0..spec.pages)
            .into_par_iter()
            .map(|i| {
                let page = corpus_page(&spec, i)?;
                info!("page {i}: {} cells", page.truth.cells.len());
                write_page(&a.out, &page)
            })
            .collect::<obr_core::Result<Vec<_>>>()
    })?;
    let manifest = write_manifest(&a.out, &entries)?;
    println!(
        "wrote {} pages; manifest {}",
        entries.len(),
        manifest.display()
    );
    Ok(Status::Done)
}

fn print_summary(model: &ForestModel) {
    let t = &model.training;
    println!("rows: {}", t.rows);
    println!("classes: {}", model.classes.len());
    for (label, n) in &t.class_counts {
        println!("  {label}\t{n}");
    }
    match t.oob_accuracy {
        Some(acc) => println!("out-of-bag accuracy: {acc:.6}"),
        None => println!("out-of-bag accuracy: undefined"),
    }
}

pub fn train(a: &TrainArgs) -> Result<Status> {
    let rows: Vec<(Encoding, String)> = match (&a.features, &a.manifest) {
        (Some(p), _) => read_features(p)?,
        (None, Some(m)) => {
            let cfg = a.pipeline.config()?;
            let entries = read_nonempty_manifest(m)?;
            let table = BrailleTable::grade1();
            let runs = score_pages(
                entries,
                &cfg,
                Classifier::Table(&table),
                default_tol(&cfg),
                a.jobs,
            )?;
            runs.iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .flat_map(|p| &p.score.rows)
                .filter_map(|r| r.features.map(|e| (e, r.label.clone())))
                .collect()
        }
        (None, None) => bail!("either --features or --manifest is required"),
    };
    if rows.is_empty() {
        bail!("no labelled rows to train on");
    }
    let model = train_forest(&rows, &a.forest.params(a.seed))?;
    model
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    print_summary(&model);
    Ok(Status::Done)
}

#[derive(Serialize)]
struct DotRow {
    page: String,
    tp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    fp: u64,
    tn: u64,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    accuracy: Option<f64>,
}

impl DotRow {
    fn new(page: &str, c: &BinaryCounts) -> Self {
        let m = metrics(c);
        Self {
            page: page.to_string(),
            tp: c.tp,
            fn_: c.fn_,
            fp: c.fp,
            tn: c.tn,
            sensitivity: m.sensitivity,
            specificity: m.specificity,
            accuracy: m.accuracy,
        }
    }
}

#[derive(Serialize)]
struct CvSummary {
    folds: usize,
    accuracy: f64,
    error: f64,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    fold_accuracies: Vec<f64>,
}

#[derive(Serialize)]
struct EvaluateReport {
    pages: usize,
    skipped: BTreeMap<String, String>,
    low_confidence_pages: Vec<String>,
    pages_with_exact_text: usize,
    tol: f64,
    classifier: String,
    dots: BinaryCounts,
    dot_sensitivity: Option<f64>,
    dot_specificity: Option<f64>,
    dot_accuracy: Option<f64>,
    cells: usize,
    char_accuracy: Option<f64>,
    char_macro_sensitivity: Option<f64>,
    char_macro_specificity: Option<f64>,
    cross_validation: Option<CvSummary>,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Status> {
    let cfg = a.pipeline.config()?;
    let entries = read_nonempty_manifest(&a.manifest)?;
    let model = match &a.model {
        Some(p) => {
            Some(ForestModel::load(p).with_context(|| format!("loading model {}", p.display()))?)
        }
        None => None,
    };
    let table = BrailleTable::grade1();
    let clf = model
        .as_ref()
        .map_or(Classifier::Table(&table), Classifier::Forest);
    let tol = a.tol.unwrap_or_else(|| default_tol(&cfg));
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let runs = score_pages(entries, &cfg, clf, tol, a.jobs)?;
    let mut dot_rows = Vec::new();
    let mut total = BinaryCounts::default();
    let (mut pred, mut actual, mut rows, mut features) =
        (Vec::new(), Vec::new(), Vec::<CvRow>::new(), Vec::new());
    let mut skipped = BTreeMap::new();
    let mut low = Vec::new();
    let mut exact = 0;
    for r in &runs {
        let p = match &r.outcome {
            Ok(p) => p,
            Err(why) => {
                skipped.insert(r.entry.page.clone(), why.clone());
                continue;
            }
        };
        dot_rows.push(DotRow::new(&r.entry.page, &p.score.dots.counts));
        total.add(&p.score.dots.counts);
        pred.extend(p.score.predicted.iter().cloned());
        actual.extend(p.score.rows.iter().map(|row| row.label.clone()));
        for (i, row) in p.score.rows.iter().enumerate() {
            if let Some(e) = row.features {
                features.push(FeatureRecord::new(&r.entry.page, i, &row.label, &e));
            }
        }
        rows.extend(p.score.rows.iter().cloned());
        if p.low_confidence {
            low.push(r.entry.page.clone());
        }
        exact += usize::from(p.text == p.truth_text);
    }
    if dot_rows.is_empty() {
        bail!("no page of {} could be evaluated", a.manifest.display());
    }
    dot_rows.push(DotRow::new("total", &total));
    let mut w = csv::Writer::from_writer(create(&a.out.join("dots.csv"))?);
    for r in &dot_rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let cm = char_confusion(&pred, &actual)?;
    cm.save_csv(a.out.join("classifier_confusion.csv"))?;
    let cm_metrics = cm.metrics();
    if let Some(p) = &a.features_csv {
        write_features(p, &features)?;
    }

    let cross_validation = if a.no_cv {
        None
    } else {
        let cv = kfold(&rows, a.folds, &a.forest.params(a.seed))?;
        cv.save_metrics_csv(a.out.join("metrics.csv"))?;
        cv.confusion.save_csv(a.out.join("confusion.csv"))?;
        Some(CvSummary {
            folds: a.folds,
            accuracy: cv.accuracy,
            error: cv.error,
            sensitivity: cv.sensitivity,
            specificity: cv.specificity,
            fold_accuracies: cv.folds.iter().map(|f| f.accuracy).collect(),
        })
    };

    let m = metrics(&total);
    let report = EvaluateReport {
        pages: runs.len(),
        skipped,
        low_confidence_pages: low,
        pages_with_exact_text: exact,
        tol,
        classifier: if model.is_some() { "forest" } else { "table" }.into(),
        dots: total,
        dot_sensitivity: m.sensitivity,
        dot_specificity: m.specificity,
        dot_accuracy: m.accuracy,
        cells: actual.len(),
        char_accuracy: cm_metrics.overall_accuracy,
        char_macro_sensitivity: cm_metrics.macro_sensitivity,
        char_macro_specificity: cm_metrics.macro_specificity,
        cross_validation,
    };
    write_json(&a.out.join("report.json"), &report)?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
    println!(
        "pages: {} evaluated, {} skipped",
        runs.len() - report.skipped.len(),
        report.skipped.len()
    );
    println!(
        "dots: sensitivity {} specificity {} accuracy {}",
        fmt(m.sensitivity),
        fmt(m.specificity),
        fmt(m.accuracy)
    );
    println!(
        "characters ({}): accuracy {}",
        report.classifier,
        fmt(report.char_accuracy)
    );
    if let Some(cv) = &report.cross_validation {
        println!(
            "{}-fold cross-validation: accuracy {:.6}",
            cv.folds, cv.accuracy
        );
    }
    Ok(Status::Done)
}

pub fn inspect(a: &InspectArgs) -> Result<Status> {
    let cfg = a.pipeline.config()?;
    let img = load_image(&a.image).with_context(|| format!("loading {}", a.image.display()))?;
    let stages = preprocess_stages(&img, &cfg.preprocess)?;
    if let Some(dir) = &a.dump_stages {
        dump_stages(dir, &stages)?;
    }
    let table = BrailleTable::grade1();
    let page = analyze_stages(&stages, &cfg, Classifier::Table(&table))?;
    println!("image: {}x{}", img.width(), img.height());
    match page.threshold {
        Some(t) => println!("threshold: {t}"),
        None => println!("threshold: none (degenerate histogram)"),
    }
    println!("dots: {}", page.dots.len());
    if let Some(r) = median_radius(&page) {
        println!("median radius: {r:.2}");
    }
    if let Some(l) = page.layout {
        println!("hor_max: {:.3}", l.hor_max);
        println!("ver_max: {:.3}", l.ver_max);
        println!("hor_inter: {:.3}", l.hor_inter);
        println!("ver_inter: {:.3}", l.ver_inter);
        println!("hor_pitch: {:.3}", l.hor_pitch);
        println!("ver_pitch: {:.3}", l.ver_pitch);
        println!("cell period: {:.3}", l.hor_period);
        println!("line period: {:.3}", l.ver_period);
        println!(
            "low confidence: hor {} ver {}",
            l.hor_low_confidence, l.ver_low_confidence
        );
    }
    println!("layout fallback: {}", page.layout_fallback);
    println!("skew: {:.3} deg", page.skew.to_degrees());
    println!("cells: {}", page.cells.len());
    println!("over-merged: {}", page.over_merged);
    println!("lines: {}", page.lines.len());
    let unread = page.readings.iter().filter(|r| r.symbol.is_none()).count();
    println!("unread cells: {unread}");
    Ok(Status::Done)
}

fn median_radius(a: &PageAnalysis) -> Option<f64> {
    let mut r: Vec<f64> = a.dots.iter().map(|d| d.r).collect();
    r.sort_by(f64::total_cmp);
    r.get(r.len() / 2).copied()
}
