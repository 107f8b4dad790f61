use obr_core::cell_cluster::{cluster_cells, InterRule};
use obr_core::pipeline::{analyze, Classifier, PipelineConfig};
use obr_core::raster::Image;
use obr_core::synth::{render_mask, render_page, PageSpec};
use obr_core::transcribe::table::{code_from_mask, dot_bit};
use obr_core::transcribe::*;
use obr_core::{BrailleCell, BrailleGeometry, Dot, LayoutParams};
use proptest::prelude::*;

fn layout() -> LayoutParams {
    LayoutParams::nominal(200.0, &BrailleGeometry::default(), InterRule::default())
}

/// Dots of `mask` in a cell whose dot 1 sits at `origin`.
fn cell_dots(mask: u8, origin: (f64, f64)) -> Vec<Dot> {
    let l = layout();
    code_from_mask(mask)
        .into_iter()
        .map(|(x, y)| {
            Dot::new(
                origin.0 + x as f64 * l.hor_pitch,
                origin.1 + y as f64 * l.ver_pitch,
                5.9,
                1,
            )
        })
        .collect()
}

fn whole(dots: &[Dot]) -> BrailleCell {
    BrailleCell {
        id: 0,
        dots: (0..dots.len()).collect(),
    }
}

fn read(mask: u8, origin: (f64, f64)) -> (Centroid, FeatureVector) {
    let l = layout();
    let dots = cell_dots(mask, origin);
    let sample = Sample::synthetic(origin, &l);
    let c = centroid(&whole(&dots), &dots, Some(&sample), &l).unwrap();
    let fv = extract_features(&whole(&dots), &dots, &c, &l).unwrap();
    (c, fv)
}

proptest! {
    #[test]
    fn translation_shifts_centroids_only(mask in 1u8..64, tx in -300.0f64..300.0, ty in -300.0f64..300.0) {
        let (c0, f0) = read(mask, (400.0, 500.0));
        let (c1, f1) = read(mask, (400.0 + tx, 500.0 + ty));
        prop_assert!((c1.x - c0.x - tx).abs() < 1e-6);
        prop_assert!((c1.y - c0.y - ty).abs() < 1e-6);
        prop_assert_eq!(f0, f1);
    }

    #[test]
    fn features_hold_only_real_dots(mask in 1u8..64) {
        let (_, fv) = read(mask, (100.0, 100.0));
        prop_assert_eq!(fv.n as u32, mask.count_ones());
        prop_assert_eq!(fv.dot_code.len(), fv.n as usize);
        prop_assert_eq!(fv.mask(), mask);
    }
}

#[test]
fn full_cell_uses_plain_mean() {
    let dots = cell_dots(63, (10.0, 20.0));
    let l = layout();
    let c = centroid(&whole(&dots), &dots, None, &l).unwrap();
    assert!(!c.corrected_x && !c.corrected_y && !c.ambiguous);
    assert!((c.x - (10.0 + l.hor_pitch / 2.0)).abs() < 1e-9);
    assert!((c.y - (20.0 + l.ver_pitch)).abs() < 1e-9);
}

#[test]
fn every_rendered_pattern_reads_back() {
    let spec = PageSpec {
        page_w_mm: 40.0,
        page_h_mm: 40.0,
        ..Default::default()
    };
    let table = BrailleTable::grade1();
    for mask in 1u8..64 {
        let (img, truth) = render_mask(&spec, mask).unwrap();
        let p = truth.cells[0].positions[dot_bit(0, 0) as usize];
        let cfg = PipelineConfig {
            grid_origin: Some((p[0], p[1])),
            ..Default::default()
        };
        let a = analyze(&Image::Gray(img), &cfg, Classifier::Table(&table)).unwrap();
        assert_eq!(a.readings.len(), 1, "mask {mask:06b}");
        let fv = a.readings[0].features.as_ref().unwrap();
        assert_eq!(fv.mask(), mask, "mask {mask:06b}");
        assert_eq!(decode_table_lookup(fv, &table), table.symbol(mask));
    }
}

fn clean_rows(table: &BrailleTable, copies: usize) -> Vec<(Encoding, String)> {
    table
        .entries()
        .flat_map(|(c, m)| {
            let e = encode(&FeatureVector::from_code(code_from_mask(m)));
            std::iter::repeat_n((e, c.to_string()), copies)
        })
        .collect()
}

#[test]
fn forest_agrees_with_table_on_clean_encodings() {
    let table = BrailleTable::grade1();
    let model = train_forest(&clean_rows(&table, 5), &ForestParams::default()).unwrap();
    for (_c, m) in table.entries() {
        let fv = FeatureVector::from_code(code_from_mask(m));
        assert_eq!(
            model.classify(&encode(&fv)).0,
            decode_table_lookup(&fv, &table).unwrap().to_string()
        );
    }
}

#[test]
fn forest_training_is_reproducible() {
    let table = BrailleTable::grade1();
    let rows = clean_rows(&table, 3);
    let p = ForestParams::default();
    let a = train_forest(&rows, &p).unwrap().to_json().unwrap();
    assert_eq!(a, train_forest(&rows, &p).unwrap().to_json().unwrap());
    let other = train_forest(&rows, &ForestParams { seed: 7, ..p })
        .unwrap()
        .to_json()
        .unwrap();
    assert_ne!(a, other);
}

#[test]
fn model_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_forest(
        &clean_rows(&BrailleTable::grade1(), 2),
        &ForestParams::default(),
    )
    .unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    assert_eq!(ForestModel::load(&path).unwrap(), model);
    std::fs::write(&path, "{\"version\": 99}").unwrap();
    assert!(ForestModel::load(&path).is_err());
}

#[test]
fn clean_page_round_trips_with_spaces() {
    let table = BrailleTable::grade1();
    let text = "the quick brown fox";
    let (img, _) = render_page(&PageSpec::with_text(text), &table).unwrap();
    let a = analyze(
        &Image::Gray(img),
        &PipelineConfig::default(),
        Classifier::Table(&table),
    )
    .unwrap();
    assert_eq!(a.text, text);
}

#[test]
fn numbers_and_capitals_round_trip() {
    let table = BrailleTable::grade1();
    let text = "In 1998 the UK had 3.5 Braille readers; Known, used!";
    let (img, truth) = render_page(&PageSpec::with_text(text), &table).unwrap();
    let a = analyze(
        &Image::Gray(img),
        &PipelineConfig::default(),
        Classifier::Table(&table),
    )
    .unwrap();
    assert_eq!(a.text, truth.text);
    assert_eq!(
        a.text.split_whitespace().collect::<Vec<_>>(),
        text.split_whitespace().collect::<Vec<_>>()
    );
}

#[test]
fn clusters_of_a_clean_page_match_truth_cells() {
    let table = BrailleTable::grade1();
    let (img, truth) = render_page(&PageSpec::with_text("abc def"), &table).unwrap();
    let a = analyze(
        &Image::Gray(img),
        &PipelineConfig::default(),
        Classifier::Table(&table),
    )
    .unwrap();
    assert_eq!(a.cells.len(), truth.cells.len());
    let l = a.layout.unwrap();
    assert_eq!(
        cluster_cells(&a.dots, l.hor_max, l.ver_max).cells.len(),
        truth.cells.len()
    );
}
