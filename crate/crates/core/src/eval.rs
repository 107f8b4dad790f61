//! Dot- and character-level scoring, the standard confusion metrics and
//! stratified k-fold cross-validation of the forest.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell_cluster::BrailleCell;
use crate::dot_detect::Dot;
use crate::error::{Error, Result};
use crate::pipeline::PageAnalysis;
use crate::synth::GroundTruth;
use crate::transcribe::{train_forest, Encoding, ForestParams};

/// Label of a truth cell the pipeline did not produce.
pub const MISSING: &str = "∅";

/// Two-class counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl BinaryCounts {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn add(&mut self, o: &BinaryCounts) {
        self.tp += o.tp;
        self.fn_ += o.fn_;
        self.fp += o.fp;
        self.tn += o.tn;
    }
}

/// A ratio is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &BinaryCounts) -> Metrics {
    Metrics {
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        accuracy: ratio(c.tp + c.tn, c.tp + c.tn + c.fn_ + c.fp),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotMatchResult {
    pub counts: BinaryCounts,
    /// Matched `(predicted, truth)` index pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Truth cell grid positions without a dot.
    pub flat_positions: u64,
}

impl DotMatchResult {
    /// Truth index matched by each prediction.
    pub fn truth_of_pred(&self, n_pred: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_pred];
        for &(p, t) in &self.pairs {
            out[p] = Some(t);
        }
        out
    }
}

fn pairs_within(pred: &[(f64, f64)], truth: &[(f64, f64)], tol: f64) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| truth[a].0.total_cmp(&truth[b].0));
    let xs: Vec<f64> = order.iter().map(|&t| truth[t].0).collect();
    let mut out = Vec::new();
    for (p, &(px, py)) in pred.iter().enumerate() {
        let start = xs.partition_point(|&x| x < px - tol);
        for &t in &order[start..] {
            let (tx, ty) = truth[t];
            if tx > px + tol {
                break;
            }
            let d = (tx - px).hypot(ty - py);
            if d <= tol {
                out.push((d, p, t));
            }
        }
    }
    out
}

/// Greedy nearest-pair matching: closest pairs first, each dot used once.
/// True negatives are the flat grid positions of truth cells that no
/// unmatched prediction lands on.
pub fn match_dots(pred: &[Dot], truth: &GroundTruth, tol: f64) -> Result<DotMatchResult> {
    if !(tol > 0.0) {
        return Err(Error::Param(format!(
            "match tolerance must be positive, got {tol}"
        )));
    }
    let p: Vec<(f64, f64)> = pred.iter().map(|d| (d.cx, d.cy)).collect();
    let t: Vec<(f64, f64)> = truth.dots.iter().map(|d| (d.cx, d.cy)).collect();
    let mut cand = pairs_within(&p, &t, tol);
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut p_used, mut t_used) = (vec![false; p.len()], vec![false; t.len()]);
    let mut pairs = Vec::new();
    for (_, i, j) in cand {
        if !p_used[i] && !t_used[j] {
            p_used[i] = true;
            t_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();

    let flats: Vec<(f64, f64)> = truth
        .cells
        .iter()
        .flat_map(|c| {
            (0..6u8)
                .filter(move |b| c.mask & (1 << b) == 0)
                .map(move |b| (c.positions[b as usize][0], c.positions[b as usize][1]))
        })
        .collect();
    let stray: Vec<(f64, f64)> = p
        .iter()
        .zip(&p_used)
        .filter(|(_, &u)| !u)
        .map(|(&q, _)| q)
        .collect();
    let hit: BTreeSet<usize> = pairs_within(&stray, &flats, tol)
        .into_iter()
        .map(|(_, _, f)| f)
        .collect();

    let tp = pairs.len() as u64;
    let counts = BinaryCounts {
        tp,
        fn_: t.len() as u64 - tp,
        fp: stray.len() as u64,
        tn: (flats.len() - hit.len()) as u64,
    };
    Ok(DotMatchResult {
        counts,
        pairs,
        flat_positions: flats.len() as u64,
    })
}

/// Rows are actual labels, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub per_class: Vec<(String, Metrics)>,
    pub macro_sensitivity: Option<f64>,
    pub macro_specificity: Option<f64>,
    pub macro_accuracy: Option<f64>,
    /// Trace over total.
    pub overall_accuracy: Option<f64>,
    /// Classes with at least one undefined metric.
    pub undefined: Vec<String>,
}

fn mean_defined(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (s, n) = vals
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    /// One-vs-rest counts for class `k`.
    pub fn class_counts(&self, k: usize) -> BinaryCounts {
        let tp = self.counts[k][k];
        let fp = self.col_sum(k) - tp;
        let fn_ = self.row_sum(k) - tp;
        BinaryCounts {
            tp,
            fn_,
            fp,
            tn: self.total() - tp - fp - fn_,
        }
    }

    pub fn metrics(&self) -> ClassMetrics {
        let per_class: Vec<(String, Metrics)> = (0..self.labels.len())
            .map(|k| (self.labels[k].clone(), metrics(&self.class_counts(k))))
            .collect();
        let undefined = per_class
            .iter()
            .filter(|(_, m)| {
                m.sensitivity.is_none() || m.specificity.is_none() || m.accuracy.is_none()
            })
            .map(|(l, _)| l.clone())
            .collect();
        ClassMetrics {
            macro_sensitivity: mean_defined(per_class.iter().map(|(_, m)| m.sensitivity)),
            macro_specificity: mean_defined(per_class.iter().map(|(_, m)| m.specificity)),
            macro_accuracy: mean_defined(per_class.iter().map(|(_, m)| m.accuracy)),
            overall_accuracy: ratio(self.trace(), self.total()),
            per_class,
            undefined,
        }
    }

    /// Header row and column hold the labels.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["actual\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![l.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Tallies position-aligned label sequences. Labels are sorted.
pub fn char_confusion<S: AsRef<str>>(pred: &[S], truth: &[S]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Alignment(format!(
            "{} predicted cells against {} truth cells",
            pred.len(),
            truth.len()
        )));
    }
    let labels: BTreeSet<&str> = pred.iter().chain(truth).map(|s| s.as_ref()).collect();
    let mut cm = ConfusionMatrix::new(labels.iter().map(|s| s.to_string()).collect());
    let slot: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    for (p, t) in pred.iter().zip(truth) {
        cm.counts[slot[t.as_ref()]][slot[p.as_ref()]] += 1;
    }
    Ok(cm)
}

/// For each truth cell, the detected cell holding most of its matched dots,
/// kept only when that detected cell's own majority is the same truth cell.
/// Ties go to the lower index.
pub fn align_cells(
    cells: &[BrailleCell],
    n_pred: usize,
    m: &DotMatchResult,
    truth: &GroundTruth,
) -> Vec<Option<usize>> {
    let truth_of = m.truth_of_pred(n_pred);
    let mut votes: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (ci, c) in cells.iter().enumerate() {
        for &d in &c.dots {
            if let Some(t) = truth_of.get(d).copied().flatten() {
                *votes.entry((truth.dots[t].cell_id, ci)).or_default() += 1;
            }
        }
    }
    let best = |pairs: &mut dyn Iterator<Item = (usize, usize)>| -> Option<usize> {
        pairs
            .fold(None, |acc: Option<(usize, usize)>, (k, n)| match acc {
                Some((_, bn)) if bn >= n => acc,
                _ => Some((k, n)),
            })
            .map(|(k, _)| k)
    };
    let mut cell_major = vec![None; cells.len()];
    for (ci, slot) in cell_major.iter_mut().enumerate() {
        *slot = best(
            &mut votes
                .iter()
                .filter(|((_, c), _)| *c == ci)
                .map(|(&(t, _), &n)| (t, n)),
        );
    }
    let mut by_truth: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (&(t, c), &n) in &votes {
        by_truth.entry(t).or_default().push((c, n));
    }
    truth
        .cells
        .iter()
        .map(|tc| {
            let c = best(&mut by_truth.get(&tc.cell_id)?.iter().copied())?;
            (cell_major[c] == Some(tc.cell_id)).then_some(c)
        })
        .collect()
}

/// One truth cell as a cross-validation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    /// `None` when the pipeline did not recover the cell.
    pub features: Option<Encoding>,
    pub label: String,
}

/// Everything scored on one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageScore {
    pub dots: DotMatchResult,
    /// Per truth cell, in truth order.
    pub rows: Vec<CvRow>,
    /// Symbol the pipeline assigned to each truth cell, or [`MISSING`].
    pub predicted: Vec<String>,
}

pub fn score_page(a: &PageAnalysis, truth: &GroundTruth, tol: f64) -> Result<PageScore> {
    let dots = match_dots(&a.dots, truth, tol)?;
    let aligned = align_cells(&a.cells, a.dots.len(), &dots, truth);
    let mut rows = Vec::with_capacity(truth.cells.len());
    let mut predicted = Vec::with_capacity(truth.cells.len());
    for (tc, c) in truth.cells.iter().zip(aligned) {
        let reading = c.map(|c| &a.readings[c]);
        rows.push(CvRow {
            features: reading.and_then(|r| r.encoding),
            label: tc.symbol.to_string(),
        });
        predicted.push(
            reading
                .and_then(|r| r.symbol)
                .map_or_else(|| MISSING.to_string(), |s| s.to_string()),
        );
    }
    Ok(PageScore {
        dots,
        rows,
        predicted,
    })
}

/// Stratified fold assignment. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped; classes with fewer than `k`
/// rows are pooled and dealt last.
pub fn kfold_indices<S: AsRef<str>>(labels: &[S], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Param(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Param(format!(
            "k = {k} exceeds {} rows",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_ref()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pooled, mut small, mut strata) = (Vec::new(), Vec::new(), Vec::new());
    for (label, idx) in by_class {
        if idx.len() < k {
            small.push(label);
            pooled.extend(idx);
        } else {
            strata.push(idx);
        }
    }
    if !pooled.is_empty() {
        warn!("classes with fewer than {k} rows pooled for stratification: {small:?}");
        pooled.sort_unstable();
        strata.push(pooled);
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for mut idx in strata {
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_rows: usize,
    pub accuracy: f64,
    pub error: f64,
    /// Macro averages over the classes of this fold.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    /// Mean of the fold accuracies.
    pub accuracy: f64,
    pub error: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Pooled over all test folds.
    pub confusion: ConfusionMatrix,
}

impl CvReport {
    /// Columns: fold, accuracy, error, sensitivity, specificity. The last row
    /// is labelled `overall`; undefined metrics are left empty.
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["fold", "accuracy", "error", "sensitivity", "specificity"])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.6}"));
        for f in &self.folds {
            w.write_record([
                (f.fold + 1).to_string(),
                format!("{:.6}", f.accuracy),
                format!("{:.6}", f.error),
                opt(f.sensitivity),
                opt(f.specificity),
            ])?;
        }
        w.write_record([
            "overall".to_string(),
            format!("{:.6}", self.accuracy),
            format!("{:.6}", self.error),
            opt(self.sensitivity),
            opt(self.specificity),
        ])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_metrics_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_metrics_csv(std::io::BufWriter::new(f))
    }
}

/// Trains on `k - 1` folds and tests on the remaining one, `k` times. The
/// forest of fold `f` is seeded with `params.seed + f`. Rows without
/// features are left out of training and count as errors when tested.
pub fn kfold(rows: &[CvRow], k: usize, params: &ForestParams) -> Result<CvReport> {
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    let folds = kfold_indices(&labels, k, params.seed)?;
    let mut reports = Vec::with_capacity(k);
    let (mut all_pred, mut all_truth) = (Vec::new(), Vec::new());
    for (f, test) in folds.iter().enumerate() {
        let in_test: BTreeSet<usize> = test.iter().copied().collect();
        let train: Vec<(Encoding, String)> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_test.contains(i))
            .filter_map(|(_, r)| r.features.map(|e| (e, r.label.clone())))
            .collect();
        let fp = ForestParams {
            seed: params.seed.wrapping_add(f as u64),
            ..*params
        };
        let model = train_forest(&train, &fp)?;
        let pred: Vec<String> = test
            .iter()
            .map(|&i| {
                rows[i]
                    .features
                    .map_or_else(|| MISSING.to_string(), |e| model.classify(&e).0)
            })
            .collect();
        let truth: Vec<String> = test.iter().map(|&i| rows[i].label.clone()).collect();
        let cm = char_confusion(&pred, &truth)?;
        let m = cm.metrics();
        let accuracy = m.overall_accuracy.unwrap_or(0.0);
        reports.push(FoldReport {
            fold: f,
            test_rows: test.len(),
            accuracy,
            error: 1.0 - accuracy,
            sensitivity: m.macro_sensitivity,
            specificity: m.macro_specificity,
        });
        all_pred.extend(pred);
        all_truth.extend(truth);
    }
    let accuracy = reports.iter().map(|r| r.accuracy).sum::<f64>() / k as f64;
    Ok(CvReport {
        accuracy,
        error: 1.0 - accuracy,
        sensitivity: mean_defined(reports.iter().map(|r| r.sensitivity)),
        specificity: mean_defined(reports.iter().map(|r| r.specificity)),
        folds: reports,
        confusion: char_confusion(&all_pred, &all_truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{render_page, PageSpec, TruthCell, TruthDot};
    use crate::transcribe::table::code_from_mask;
    use crate::transcribe::{encode, BrailleTable, FeatureVector};

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-5)
    }

    #[test]
    fn table_three_counts() {
        let m = metrics(&BinaryCounts::new(39226, 6, 8, 39861));
        assert!(close(m.sensitivity, 0.99985), "{m:?}");
        assert!(close(m.specificity, 0.99980), "{m:?}");
        assert!(close(m.accuracy, 0.99982), "{m:?}");
    }

    #[test]
    fn degenerate_counts() {
        let m = metrics(&BinaryCounts::new(0, 3, 3, 0));
        assert_eq!(m.accuracy, Some(0.0));
        assert_eq!(m.sensitivity, Some(0.0));
        assert_eq!(m.specificity, Some(0.0));
        let m = metrics(&BinaryCounts::new(5, 0, 0, 0));
        assert_eq!(m.specificity, None);
        assert_eq!(m.sensitivity, Some(1.0));
        assert_eq!(metrics(&BinaryCounts::default()).accuracy, None);
    }

    #[test]
    fn single_substitution() {
        let cm = char_confusion(&["a", "b", "b"], &["a", "a", "b"]).unwrap();
        let (a, b) = (cm.index("a").unwrap(), cm.index("b").unwrap());
        assert_eq!(cm.counts[a][b], 1);
        assert_eq!(cm.class_counts(b).fp, 1);
        assert_eq!(cm.class_counts(a).fn_, 1);
        assert_eq!(cm.metrics().overall_accuracy, Some(2.0 / 3.0));
    }

    #[test]
    fn identical_sequences_are_diagonal() {
        let s = ["x", "y", "z", "x"];
        let cm = char_confusion(&s, &s).unwrap();
        assert_eq!(cm.trace(), 4);
        assert_eq!(cm.metrics().macro_sensitivity, Some(1.0));
    }

    #[test]
    fn length_mismatch_is_alignment_error() {
        assert!(matches!(
            char_confusion(&["a"], &["a", "b"]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn csv_has_label_header() {
        let cm = char_confusion(&["a", "b"], &["a", "a"]).unwrap();
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "actual\\predicted,a,b\na,1,1\nb,0,0\n"
        );
    }

    fn truth_of(text: &str) -> GroundTruth {
        render_page(&PageSpec::with_text(text), &BrailleTable::grade1())
            .unwrap()
            .1
    }

    fn preds(t: &GroundTruth) -> Vec<Dot> {
        t.dots
            .iter()
            .map(|d| Dot::new(d.cx, d.cy, d.r, 1))
            .collect()
    }

    #[test]
    fn perfect_detection() {
        let t = truth_of("be");
        let m = match_dots(&preds(&t), &t, 9.8).unwrap();
        assert_eq!(
            m.counts,
            BinaryCounts::new(t.dots.len() as u64, 0, 0, m.flat_positions)
        );
        assert_eq!(m.flat_positions, 12 - t.dots.len() as u64);
    }

    #[test]
    fn spurious_and_missing() {
        let t = truth_of("be");
        let mut p = preds(&t);
        p.pop();
        p.push(Dot::new(5.0, 5.0, 5.0, 1));
        let flat = t.cells[0].positions[5];
        p.push(Dot::new(flat[0] + 1.0, flat[1], 5.0, 1));
        let m = match_dots(&p, &t, 9.8).unwrap();
        assert_eq!(m.counts.fn_, 1);
        assert_eq!(m.counts.fp, 2);
        assert_eq!(m.counts.tn, m.flat_positions - 1);
        assert!(match_dots(&p, &t, 0.0).is_err());
    }

    #[test]
    fn greedy_prefers_closest() {
        let truth = GroundTruth {
            text: String::new(),
            dpi: 200.0,
            width: 100,
            height: 100,
            dots: vec![
                TruthDot {
                    cx: 10.0,
                    cy: 10.0,
                    r: 5.0,
                    cell_id: 0,
                },
                TruthDot {
                    cx: 20.0,
                    cy: 10.0,
                    r: 5.0,
                    cell_id: 0,
                },
            ],
            cells: vec![TruthCell {
                cell_id: 0,
                mask: 0b11,
                symbol: 'c',
                line: 0,
                col: 0,
                positions: [
                    [10.0, 10.0],
                    [20.0, 10.0],
                    [10.0, 20.0],
                    [20.0, 20.0],
                    [10.0, 30.0],
                    [20.0, 30.0],
                ],
            }],
        };
        let p = [Dot::new(16.0, 10.0, 5.0, 1), Dot::new(19.0, 10.0, 5.0, 1)];
        let m = match_dots(&p, &truth, 7.0).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let folds = kfold_indices(&labels, 2, 7).unwrap();
        assert_eq!(folds[0].len(), 5);
        assert_eq!(folds[1].len(), 5);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(kfold_indices(&labels, 11, 7).is_err());
        assert!(kfold_indices(&labels, 1, 7).is_err());
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<&str> = (0..50)
            .map(|i| if i % 5 == 0 { "rare" } else { "common" })
            .collect();
        for f in kfold_indices(&labels, 5, 3).unwrap() {
            assert_eq!(f.iter().filter(|&&i| labels[i] == "rare").count(), 2);
        }
    }

    #[test]
    fn separable_rows_score_perfectly() {
        let table = BrailleTable::grade1();
        let rows: Vec<CvRow> = table
            .entries()
            .flat_map(|(c, m)| {
                let e = encode(&FeatureVector::from_code(code_from_mask(m)));
                std::iter::repeat_n(
                    CvRow {
                        features: Some(e),
                        label: c.to_string(),
                    },
                    6,
                )
            })
            .collect();
        let r = kfold(&rows, 5, &ForestParams::default()).unwrap();
        assert_eq!(r.folds.len(), 5);
        for f in &r.folds {
            assert_eq!(f.accuracy, 1.0, "{f:?}");
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn missing_features_count_as_errors() {
        let mut rows: Vec<CvRow> = (0..10)
            .map(|i| CvRow {
                features: Some([i as f64 % 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
                label: if i % 2 == 0 { "a" } else { "b" }.into(),
            })
            .collect();
        rows[0].features = None;
        let r = kfold(&rows, 2, &ForestParams::default()).unwrap();
        assert_eq!(
            r.confusion.counts[r.confusion.index("a").unwrap()]
                [r.confusion.index(MISSING).unwrap()],
            1
        );
        assert!((r.accuracy - 0.9).abs() < 1e-12);
    }
}
