//! Fixtures shared by the benchmarks in `benches/`.

use obr_core::synth::{corpus_page, CorpusSpec, Severity};
use obr_core::GrayRaster;

/// First page of the default corpus with mild corruption.
pub fn mild_page() -> GrayRaster {
    let spec = CorpusSpec {
        pages: 1,
        severity: Severity::MILD,
        ..CorpusSpec::default()
    };
    corpus_page(&spec, 0).expect("default corpus page").image
}
