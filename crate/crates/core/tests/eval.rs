use obr_core::eval::*;
use obr_core::oracles::{confusion_tally, match_greedy_brute};
use obr_core::pipeline::{analyze, Classifier, PipelineConfig};
use obr_core::raster::Image;
use obr_core::synth::{corrupt, render_page, CorruptOpts, GroundTruth, PageSpec, TruthDot};
use obr_core::{BrailleTable, Dot};
use proptest::prelude::*;

fn labels(max: u8) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(
        (0..max).prop_map(|c| ((b'a' + c) as char).to_string()),
        1..80,
    )
}

fn bare_truth(points: &[(f64, f64)]) -> GroundTruth {
    GroundTruth {
        text: String::new(),
        dpi: 200.0,
        width: 1000,
        height: 1000,
        dots: points
            .iter()
            .map(|&(cx, cy)| TruthDot {
                cx,
                cy,
                r: 5.0,
                cell_id: 0,
            })
            .collect(),
        cells: Vec::new(),
    }
}

proptest! {
    #[test]
    fn metrics_are_scale_invariant(tp in 0u64..1000, fn_ in 0u64..1000, fp in 0u64..1000, tn in 0u64..1000, c in 1u64..50) {
        let a = metrics(&BinaryCounts::new(tp, fn_, fp, tn));
        let b = metrics(&BinaryCounts::new(tp * c, fn_ * c, fp * c, tn * c));
        for (x, y) in [(a.sensitivity, b.sensitivity), (a.specificity, b.specificity), (a.accuracy, b.accuracy)] {
            prop_assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn confusion_matches_tally((pred, truth) in labels(3).prop_flat_map(|t| {
        let n = t.len();
        (proptest::collection::vec((0u8..3).prop_map(|c| ((b'a' + c) as char).to_string()), n), Just(t))
    })) {
        let cm = char_confusion(&pred, &truth).unwrap();
        let tally = confusion_tally(&pred, &truth);
        for (i, a) in cm.labels.iter().enumerate() {
            for (j, p) in cm.labels.iter().enumerate() {
                prop_assert_eq!(cm.counts[i][j], tally.get(&(a.clone(), p.clone())).copied().unwrap_or(0));
            }
            prop_assert_eq!(cm.row_sum(i), truth.iter().filter(|t| *t == a).count() as u64);
            prop_assert_eq!(cm.col_sum(i), pred.iter().filter(|t| *t == a).count() as u64);
        }
        prop_assert_eq!(cm.total(), truth.len() as u64);
    }

    #[test]
    fn two_class_accuracy_is_trace_over_total(pred in proptest::collection::vec(any::<bool>(), 40), truth in proptest::collection::vec(any::<bool>(), 40)) {
        let s = |v: &Vec<bool>| v.iter().map(|&b| if b { "p" } else { "n" }.to_string()).collect::<Vec<_>>();
        let cm = char_confusion(&s(&pred), &s(&truth)).unwrap();
        let overall = cm.metrics().overall_accuracy.unwrap();
        for k in 0..cm.labels.len() {
            let acc = metrics(&cm.class_counts(k)).accuracy.unwrap();
            prop_assert!((acc - overall).abs() < 1e-12);
        }
        prop_assert!((overall - cm.trace() as f64 / cm.total() as f64).abs() < 1e-12);
    }

    #[test]
    fn folds_partition_the_rows(ls in labels(6), k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= ls.len());
        let folds = kfold_indices(&ls, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ls.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(kfold_indices(&ls, k, seed).unwrap(), folds);
    }

    #[test]
    fn greedy_matching_matches_brute_force(
        truth in proptest::collection::vec((0.0f64..200.0, 0.0f64..200.0), 0..30),
        pred in proptest::collection::vec((0.0f64..200.0, 0.0f64..200.0), 0..30),
        tol in 1.0f64..30.0,
    ) {
        let t = bare_truth(&truth);
        let p: Vec<Dot> = pred.iter().map(|&(x, y)| Dot::new(x, y, 5.0, 1)).collect();
        let m = match_dots(&p, &t, tol).unwrap();
        prop_assert_eq!(&m.pairs, &match_greedy_brute(&pred, &truth, tol));
        prop_assert_eq!(m.counts.tp as usize, m.pairs.len());
        prop_assert_eq!(m.counts.tp + m.counts.fn_, truth.len() as u64);
        prop_assert_eq!(m.counts.tp + m.counts.fp, pred.len() as u64);
    }
}

#[test]
fn clean_page_scores_perfectly() {
    let table = BrailleTable::grade1();
    let (img, truth) =
        render_page(&PageSpec::with_text("Every cell, 42 of them."), &table).unwrap();
    let a = analyze(
        &Image::Gray(img),
        &PipelineConfig::default(),
        Classifier::Table(&table),
    )
    .unwrap();
    let s = score_page(&a, &truth, 9.8).unwrap();
    assert_eq!(s.dots.counts.fn_, 0);
    assert_eq!(s.dots.counts.fp, 0);
    assert_eq!(s.dots.counts.tn, s.dots.flat_positions);
    let want: Vec<String> = truth.cells.iter().map(|c| c.symbol.to_string()).collect();
    assert_eq!(s.predicted, want);
    assert!(s.rows.iter().all(|r| r.features.is_some()));
}

#[test]
fn rotated_page_scores_against_rotated_truth() {
    let table = BrailleTable::grade1();
    let (img, truth) =
        render_page(&PageSpec::with_text("skewed pages still align"), &table).unwrap();
    let opts = CorruptOpts {
        rotate_deg: 2.5,
        ..Default::default()
    };
    let img = corrupt(&img, &opts).unwrap();
    let truth = truth.rotated(opts.rotate_deg);
    let a = analyze(
        &Image::Gray(img),
        &PipelineConfig::default(),
        Classifier::Table(&table),
    )
    .unwrap();
    let s = score_page(&a, &truth, 9.8).unwrap();
    assert_eq!(s.dots.counts.tp as usize, truth.dots.len());
    assert!(s.predicted.iter().all(|p| p != MISSING));
    assert_eq!(a.text, truth.text);
}
