//! Two-pass preprocessing over generated corpora.

use proptest::prelude::*;
use xray_core::dataset::{load_manifest, ClassLabel};
use xray_core::imaging::{Centroid, Rect};
use xray_core::io::read_png;
use xray_core::pipeline::{compute_mean_window, preprocess_corpus, running_mean_window, PassOneRecord, PipelineConfig};
use xray_core::syngen::{generate_corpus, CorpusSpec};

fn rec(i: usize, w: usize, h: usize) -> PassOneRecord {
    PassOneRecord {
        image_id: format!("r{i}"),
        width: 500,
        height: 500,
        centroid: Some(Centroid { cx: 10.0, cy: 10.0 }),
        brect: Some(Rect::new(0, 0, w, h)),
        empty_mask: false,
    }
}

proptest! {
    #[test]
    fn running_mean_agrees_with_sum(sizes in proptest::collection::vec((1usize..400, 1usize..400), 1..300)) {
        let recs: Vec<_> = sizes.iter().enumerate().map(|(i, &(w, h))| rec(i, w, h)).collect();
        let a = compute_mean_window(&recs).unwrap();
        let b = running_mean_window(&recs).unwrap();
        prop_assert_eq!(a.count, b.count);
        prop_assert!((a.w - b.w).abs() < 1e-9 && (a.h - b.h).abs() < 1e-9);
    }
}

#[test]
fn corpus_outputs_share_dimensions_and_failures_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    let counts: Vec<_> = ClassLabel::ALL.iter().map(|&c| (c, 6)).collect();
    let spec = CorpusSpec { empty_rate: 0.1, ..CorpusSpec::default() };
    let corpus = generate_corpus(&counts, &spec, 4, &src).unwrap();
    // corrupt one file
    let victim = &corpus.manifest.records()[7];
    std::fs::write(src.join(&victim.path), b"not a png").unwrap();

    let manifest = load_manifest(&corpus.manifest_path).unwrap();
    let cfg = PipelineConfig { network_input: Some(224), ..PipelineConfig::default() };
    let out = dir.path().join("out");
    let report = preprocess_corpus(&manifest, &cfg, &out).unwrap();

    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].image_id, victim.image_id);
    assert_eq!(report.outputs.len(), 29);
    let [ow, oh] = report.output_dims;
    for p in &report.outputs {
        let img = read_png(&out.join(&p.output)).unwrap();
        assert_eq!((img.width(), img.height()), (ow, oh));
        let sq = read_png(&out.join(p.network_output.as_ref().unwrap())).unwrap();
        assert_eq!((sq.width(), sq.height()), (224, 224));
    }
    let (ww, wh) = report.mean_window.dims();
    assert_eq!([ow, oh], [ww / 2, wh / 2]);
    let contributors = report.records.iter().filter(|r| r.brect.is_some()).count();
    assert_eq!(report.mean_window.count, contributors);
    assert_eq!(report.empty_masks.len(), report.records.len() - contributors);
}
