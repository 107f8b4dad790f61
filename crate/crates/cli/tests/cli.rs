use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use obr_core::raster::save_pgm;
use obr_core::synth::{render_page, PageSpec};
use obr_core::BrailleTable;

fn obr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obr"))
        .args(args)
        .output()
        .expect("obr runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_page(dir: &Path, text: &str) -> PathBuf {
    let spec = PageSpec {
        page_w_mm: 120.0,
        page_h_mm: 50.0,
        ..PageSpec::with_text(text)
    };
    let (img, _) = render_page(&spec, &BrailleTable::grade1()).unwrap();
    let path = dir.join("page.pgm");
    save_pgm(&path, &img).unwrap();
    path
}

#[test]
fn translate_prints_hello_world() {
    let dir = tempfile::tempdir().unwrap();
    let page = small_page(dir.path(), "hello world");
    let out = obr(&["translate", s(&page), "--table-only"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim_end(),
        "hello world"
    );
}

#[test]
fn blank_page_is_empty_success() {
    let dir = tempfile::tempdir().unwrap();
    let page = small_page(dir.path(), "");
    let out = obr(&["translate", s(&page)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn corrupt_image_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.pgm");
    std::fs::write(&p, b"P5\n10 10\n255\nshort").unwrap();
    assert_eq!(obr(&["translate", s(&p)]).status.code(), Some(1));
    assert_eq!(
        obr(&["translate", s(&dir.path().join("missing.png"))])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(obr(&["translate"]).status.code(), Some(1));
    assert_eq!(obr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(obr(&["--help"]).status.code(), Some(0));
    let help = obr(&["evaluate", "--help"]);
    assert!(String::from_utf8_lossy(&help.stdout).contains("[default: 5]"));
}

#[test]
fn translate_writes_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let page = small_page(dir.path(), "abc");
    let d = dir.path();
    let out = obr(&[
        "translate",
        s(&page),
        "--dump-stages",
        s(&d.join("stages")),
        "--dots-json",
        s(&d.join("dots.json")),
        "--cells-json",
        s(&d.join("cells.json")),
        "--features-csv",
        s(&d.join("f.csv")),
        "--report",
        s(&d.join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for stage in [
        "01_gray",
        "02_median",
        "03_binarize",
        "04_complement",
        "05_dilate",
    ] {
        assert!(d.join("stages").join(format!("{stage}.pgm")).exists());
    }
    let dots: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("dots.json")).unwrap()).unwrap();
    // a, b, c: 1 + 2 + 2 dots
    assert_eq!(dots["dots"].as_array().unwrap().len(), 5);
    let cells: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("cells.json")).unwrap()).unwrap();
    assert_eq!(cells["cells"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(d.join("f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("page,cell,label,n,"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["text"], "abc");
}

#[test]
fn inspect_prints_layout() {
    let dir = tempfile::tempdir().unwrap();
    let page = small_page(dir.path(), "the layout of this page");
    let out = obr(&["inspect", s(&page)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["threshold:", "dots:", "hor_max:", "ver_inter:", "cells:"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let o = dir.path().join(name);
        let out = obr(&[
            "generate",
            "-o",
            s(&o),
            "--pages",
            "2",
            "--cells-per-page",
            "40",
            "--jobs",
            jobs,
        ]);
        assert_eq!(out.status.code(), Some(0));
        o
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    for f in ["manifest.csv", "page_000.pgm", "page_001.truth.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn train_and_evaluate_reject_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("missing.csv");
    assert_eq!(
        obr(&[
            "train",
            "--features",
            s(&missing),
            "-o",
            s(&d.join("m.json"))
        ])
        .status
        .code(),
        Some(1)
    );
    let manifest = d.join("manifest.csv");
    std::fs::write(
        &manifest,
        "page,truth,seed,salt_pepper_frac,rotate_deg,illum_gradient\n",
    )
    .unwrap();
    assert_eq!(
        obr(&[
            "evaluate",
            "--manifest",
            s(&manifest),
            "-o",
            s(&d.join("e"))
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        obr(&[
            "train",
            "--manifest",
            s(&manifest),
            "-o",
            s(&d.join("m.json"))
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn evaluate_skips_pages_without_truth() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    obr(&[
        "generate",
        "-o",
        s(&c),
        "--pages",
        "2",
        "--cells-per-page",
        "40",
        "--clean",
    ]);
    std::fs::remove_file(c.join("page_001.truth.json")).unwrap();
    let e = dir.path().join("e");
    let out = obr(&[
        "evaluate",
        "--manifest",
        s(&c.join("manifest.csv")),
        "-o",
        s(&e),
        "--no-cv",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(e.join("report.json")).unwrap()).unwrap();
    assert!(report["skipped"]["page_001.pgm"].is_string());
    assert_eq!(report["char_accuracy"], 1.0);
    assert!(!e.join("metrics.csv").exists());
}
