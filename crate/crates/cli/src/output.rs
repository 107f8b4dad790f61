//! File formats written and read by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use obr_core::pipeline::PageAnalysis;
use obr_core::transcribe::Encoding;
use obr_core::{BrailleCell, Dot};
use serde::{Deserialize, Serialize};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct DotsFile<'a> {
    dots: &'a [Dot],
}

pub fn write_dots(path: &Path, a: &PageAnalysis) -> Result<()> {
    write_json(path, &DotsFile { dots: &a.dots })
}

#[derive(Serialize)]
struct LayoutSummary {
    hor_max: f64,
    ver_max: f64,
    hor_inter: f64,
    ver_inter: f64,
}

#[derive(Serialize)]
struct CellsFile<'a> {
    layout: Option<LayoutSummary>,
    cells: &'a [BrailleCell],
}

pub fn write_cells(path: &Path, a: &PageAnalysis) -> Result<()> {
    let layout = a.layout.map(|l| LayoutSummary {
        hor_max: l.hor_max,
        ver_max: l.ver_max,
        hor_inter: l.hor_inter,
        ver_inter: l.ver_inter,
    });
    write_json(
        path,
        &CellsFile {
            layout,
            cells: &a.cells,
        },
    )
}

/// One encoded cell. Position columns are named `x<col>y<row>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub page: String,
    pub cell: usize,
    /// Empty when unknown.
    pub label: String,
    pub n: f64,
    pub x0y0: f64,
    pub x1y0: f64,
    pub x0y1: f64,
    pub x1y1: f64,
    pub x0y2: f64,
    pub x1y2: f64,
}

impl FeatureRecord {
    pub fn new(page: &str, cell: usize, label: &str, e: &Encoding) -> Self {
        Self {
            page: page.to_string(),
            cell,
            label: label.to_string(),
            n: e[0],
            x0y0: e[1],
            x1y0: e[2],
            x0y1: e[3],
            x1y1: e[4],
            x0y2: e[5],
            x1y2: e[6],
        }
    }

    pub fn encoding(&self) -> Encoding {
        [
            self.n, self.x0y0, self.x1y0, self.x0y1, self.x1y1, self.x0y2, self.x1y2,
        ]
    }
}

pub fn write_features(path: &Path, rows: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Labelled rows only.
pub fn read_features(path: &Path) -> Result<Vec<(Encoding, String)>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(f).deserialize() {
        let r: FeatureRecord = rec.with_context(|| format!("reading {}", path.display()))?;
        if !r.label.is_empty() {
            out.push((r.encoding(), r.label));
        }
    }
    if out.is_empty() {
        bail!("{} holds no labelled rows", path.display());
    }
    Ok(out)
}
