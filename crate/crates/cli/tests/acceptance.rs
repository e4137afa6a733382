//! Acceptance suite. Each criterion prints one PASS or FAIL line; the process
//! exits non-zero if any fails.

use rand::Rng;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};
use xray_core::classify::StubClassifier;
use xray_core::dataset::{split_report, stratified_group_split, verify_assignment, ClassLabel, DatasetManifest, ImageRecord, Side};
use xray_core::eval::{
    measure_inference, overall_accuracy, per_class_metrics, ConfusionMatrix, Decision, EarlyStopState, OneVsAll,
};
use xray_core::imaging::{close, dilate, erode, BinaryMask, Bgr, RawImage, StructuringElement};
use xray_core::pipeline::{analyze_image, compute_mean_window, PipelineConfig};
use xray_core::seed;
use xray_core::syngen::{class_band, generate_scene, SceneSpec};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- metrics

/// (tp, tn, fp, fn, sens, spec, acc, ber) per model, classes 0..4.
const REFERENCE_ROWS: [(&str, [(u64, u64, u64, u64, f64, f64, f64, f64); 5]); 5] = [
    ("AlexNet", [
        (110, 470, 34, 22, 83.33, 93.25, 91.20, 11.71),
        (90, 462, 42, 42, 68.18, 91.67, 86.79, 20.08),
        (97, 489, 15, 35, 73.48, 97.02, 92.13, 14.75),
        (86, 516, 12, 22, 79.62, 97.72, 94.65, 11.32),
        (110, 464, 40, 22, 83.33, 92.06, 90.26, 12.30),
    ]),
    ("VGG19", [
        (122, 491, 13, 10, 92.42, 97.42, 96.38, 5.08),
        (113, 496, 8, 19, 85.60, 98.41, 95.75, 7.99),
        (109, 497, 7, 23, 82.58, 98.61, 95.28, 9.41),
        (96, 504, 24, 12, 88.89, 95.45, 94.33, 7.83),
        (124, 484, 20, 8, 93.94, 96.03, 95.60, 5.01),
    ]),
    ("ResNet50", [
        (125, 497, 7, 7, 94.70, 98.61, 97.80, 3.35),
        (109, 492, 12, 23, 82.58, 97.62, 94.50, 9.90),
        (121, 488, 16, 11, 91.67, 96.83, 95.75, 5.75),
        (102, 521, 7, 6, 94.44, 98.67, 97.96, 3.44),
        (122, 489, 15, 10, 92.42, 97.02, 96.07, 5.28),
    ]),
    ("InceptionV3", [
        (118, 488, 16, 14, 89.39, 96.83, 95.28, 6.89),
        (96, 481, 23, 36, 72.73, 95.44, 90.72, 15.92),
        (100, 479, 25, 32, 75.76, 95.04, 91.04, 14.60),
        (95, 513, 15, 13, 87.96, 97.16, 95.60, 7.44),
        (107, 463, 41, 25, 81.06, 91.87, 89.62, 13.54),
    ]),
    ("Xception", [
        (119, 484, 20, 13, 90.15, 96.03, 94.81, 6.91),
        (108, 489, 15, 24, 81.82, 97.02, 93.87, 10.58),
        (105, 481, 23, 27, 79.55, 95.44, 92.14, 12.51),
        (94, 516, 12, 14, 87.04, 97.73, 95.91, 7.62),
        (111, 475, 29, 21, 84.09, 94.24, 92.14, 10.83),
    ]),
];

const REFERENCE_OVERALL: [f64; 5] = [77.51, 88.68, 91.04, 81.13, 84.43];

fn metric_rows() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for (model, table) in REFERENCE_ROWS {
        for (c, &(tp, tn, fp, fn_, sens, spec, acc, ber)) in table.iter().enumerate() {
            let m = per_class_metrics(c as u8, OneVsAll { tp, tn, fp, fn_ }).map_err(|e| e.to_string())?;
            for (name, got, want) in [
                ("sens", m.sensitivity, sens),
                ("spec", m.specificity, spec),
                ("acc", m.accuracy, acc),
                ("ber", m.ber, ber),
            ] {
                let d = (got - want).abs();
                worst = worst.max(d);
                ensure(d <= 0.01 + 1e-9, || format!("{model} class {c} {name}: {got:.4} vs {want}"))?;
            }
            rows += 1;
        }
    }
    Ok(format!("{rows} rows, max |error| {worst:.4}"))
}

fn overall_accuracies() -> Outcome {
    let mut detail = Vec::new();
    for ((model, table), want) in REFERENCE_ROWS.iter().zip(REFERENCE_OVERALL) {
        let mut cells = vec![vec![0u64; 5]; 5];
        let mut correct = 0;
        for (c, row) in table.iter().enumerate() {
            cells[c][c] = row.0;
            correct += row.0;
        }
        // the remaining test samples are misclassified; where does not matter
        cells[0][1] = 636 - correct;
        let cm = ConfusionMatrix::from_cells(cells);
        ensure(cm.total() == 636, || format!("{model}: total {}", cm.total()))?;
        let got = overall_accuracy(&cm).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 0.01 + 1e-9, || format!("{model}: {got:.4} vs {want}"))?;
        detail.push(format!("{model} {got:.3}"));
    }
    Ok(detail.join(", "))
}

// ---------------------------------------------------------------- geometry

fn geometric_oracle() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut rng = seed::rng(2024, 31);
    let mut records = Vec::new();
    let (mut gt_w, mut gt_h) = (0.0, 0.0);
    let (mut worst_side, mut worst_centroid) = (0i64, 0.0f64);
    for i in 0..200u64 {
        let class = ClassLabel::ALL[(i % 5) as usize];
        let mut spec = SceneSpec::sample(&mut rng, 160, 120, class_band(class), 0.0);
        match i % 3 {
            0 => spec.clutter_count = 0,
            1 => {}
            _ => spec.noise_level = 0.1,
        }
        let (img, truth) = generate_scene(&spec, i).map_err(|e| e.to_string())?;
        let g = truth.threat_bbox.ok_or("scene without threat")?;
        let gc = truth.threat_centroid.ok_or("scene without threat")?;
        let rec = analyze_image(&format!("s{i}"), &img, &cfg);
        let b = rec.brect.ok_or_else(|| format!("scene {i}: empty response"))?;
        let c = rec.centroid.expect("brect implies centroid");
        let sides = [
            b.x as i64 - g.x as i64,
            b.y as i64 - g.y as i64,
            g.right() as i64 - b.right() as i64,
            g.bottom() as i64 - b.bottom() as i64,
        ];
        // erosion can only pull sides inward
        ensure(sides.iter().all(|&d| (0..=1).contains(&d)), || {
            format!("scene {i}: brect {b:?} vs truth {g:?}")
        })?;
        let dc = (c.cx - gc.cx).abs().max((c.cy - gc.cy).abs());
        ensure(dc <= 1.0, || format!("scene {i}: centroid off by {dc:.3}"))?;
        worst_side = worst_side.max(*sides.iter().max().unwrap());
        worst_centroid = worst_centroid.max(dc);
        gt_w += g.w as f64;
        gt_h += g.h as f64;
        records.push(rec);
    }
    let mw = compute_mean_window(&records).map_err(|e| e.to_string())?;
    let (gt_w, gt_h) = (gt_w / 200.0, gt_h / 200.0);
    let (dw, dh) = (mw.w - gt_w, mw.h - gt_h);
    // diagnostic only: a J_3 erosion trims one pixel per side, two per axis
    let (aw, ah) = (dw + 2.0, dh + 2.0);
    let summary = format!(
        "max side shrink {worst_side}px, max centroid error {worst_centroid:.3}px, mean window {:.3}x{:.3} \
         vs truth mean {gt_w:.3}x{gt_h:.3}: error {dw:+.3}/{dh:+.3} (after 2px erosion shrink {aw:+.3}/{ah:+.3})",
        mw.w, mw.h
    );
    ensure(dw.abs() <= 1.0 && dh.abs() <= 1.0, || summary.clone())?;
    Ok(summary)
}

// ------------------------------------------------------------- morphology

fn at(m: &BinaryMask, x: i64, y: i64) -> bool {
    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height() && m.get(x as usize, y as usize)
}

fn footprint(se: &StructuringElement) -> Vec<(i64, i64)> {
    let (lo, hi) = se.offsets();
    (lo..=hi).flat_map(|dy| (lo..=hi).map(move |dx| (dx, dy))).collect()
}

/// Set-definition oracles. Erosion and dilation see an empty outside; closing
/// is taken on the unbounded plane and restricted to the frame.
fn oracles(a: &BinaryMask, se: &StructuringElement) -> (BinaryMask, BinaryMask, BinaryMask) {
    let b = footprint(se);
    let (w, h) = (a.width(), a.height());
    let er = BinaryMask::from_fn(w, h, |x, y| b.iter().all(|&(dx, dy)| at(a, x as i64 + dx, y as i64 + dy))).unwrap();
    let di = BinaryMask::from_fn(w, h, |x, y| b.iter().any(|&(dx, dy)| at(a, x as i64 - dx, y as i64 - dy))).unwrap();
    let n = se.size() as i64;
    let in_plane_dilation = |x: i64, y: i64| b.iter().any(|&(dx, dy)| at(a, x - dx, y - dy));
    let cl = BinaryMask::from_fn(w, h, |x, y| {
        b.iter().all(|&(dx, dy)| in_plane_dilation(x as i64 + dx, y as i64 + dy))
    })
    .unwrap();
    debug_assert!(n > 0);
    (er, di, cl)
}

fn morphology_equivalence() -> Outcome {
    let mut rng = seed::rng(77, 4);
    let elements = [StructuringElement::square(3), StructuringElement::square(10)];
    let mut checks = 0;
    for i in 0..1000 {
        let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let density: f64 = rng.gen_range(0.0..1.0);
        let bits: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(density)).collect();
        let a = BinaryMask::from_vec(w, h, bits).unwrap();
        for se in &elements {
            let (er, di, cl) = oracles(&a, se);
            ensure(erode(&a, se) == er, || format!("mask {i} ({w}x{h}) erode J_{}", se.size()))?;
            ensure(dilate(&a, se) == di, || format!("mask {i} ({w}x{h}) dilate J_{}", se.size()))?;
            ensure(close(&a, se) == cl, || format!("mask {i} ({w}x{h}) close J_{}", se.size()))?;
            checks += 3;
        }
    }
    Ok(format!("1000 masks, {checks} operator comparisons"))
}

// ------------------------------------------------------------------ split

fn manifest_from(sizes: &[Vec<usize>]) -> DatasetManifest {
    let mut records = Vec::new();
    for (c, groups) in sizes.iter().enumerate() {
        for (g, &n) in groups.iter().enumerate() {
            for v in 0..n {
                let id = format!("c{c}g{g}v{v}");
                records.push(ImageRecord {
                    path: PathBuf::from(format!("{id}.png")),
                    image_id: id,
                    class: ClassLabel::ALL[c],
                    imagegroup_id: format!("c{c}g{g}"),
                });
            }
        }
    }
    DatasetManifest::new(records, "acceptance").unwrap()
}

fn split_invariants() -> Outcome {
    let mut rng = seed::rng(5, 5);
    for case in 0..500 {
        let classes = rng.gen_range(1..=5);
        let sizes: Vec<Vec<usize>> = (0..classes)
            .map(|_| {
                let groups = rng.gen_range(1..=30);
                let max = *[1usize, 3, 6, 12].get(rng.gen_range(0..4)).unwrap();
                (0..groups).map(|_| rng.gen_range(1..=max)).collect()
            })
            .collect();
        let ratio = 0.7;
        let m = manifest_from(&sizes);
        let a = stratified_group_split(&m, ratio, case).map_err(|e| e.to_string())?;
        verify_assignment(&a, &m).map_err(|e| format!("case {case}: {e}"))?;
        let report = split_report(&a, &m);
        ensure(report.bisected_count == 0, || format!("case {case}: bisected groups"))?;
        let ids: BTreeSet<&str> = m.records().iter().map(|r| r.image_id.as_str()).collect();
        ensure(a.train.is_disjoint(&a.test), || format!("case {case}: overlap"))?;
        ensure(a.train.len() + a.test.len() == ids.len(), || format!("case {case}: not a partition"))?;
        for (c, groups) in sizes.iter().enumerate() {
            let total: usize = groups.iter().sum();
            let max_group = *groups.iter().max().unwrap();
            let train = m
                .records()
                .iter()
                .filter(|r| r.class.index() == c && a.side(&r.image_id) == Some(Side::Train))
                .count();
            let dev = (train as f64 / total as f64 - ratio).abs();
            ensure(dev <= max_group as f64 / total as f64 + 1e-12, || {
                format!("case {case} class {c}: {train}/{total} with max group {max_group}")
            })?;
        }
    }
    let reference: Vec<Vec<usize>> = [450usize, 450, 450, 360, 450].iter().map(|&n| vec![3; n / 3]).collect();
    let m = manifest_from(&reference);
    let a = stratified_group_split(&m, 0.7, 1).map_err(|e| e.to_string())?;
    let report = split_report(&a, &m);
    let mut fractions = Vec::new();
    for row in &report.classes {
        ensure((0.68..=0.72).contains(&row.train_fraction), || format!("class {}: {:.4}", row.class_id, row.train_fraction))?;
        fractions.push(format!("{}/{}", row.train, row.test));
    }
    Ok(format!("500 random manifests clean; 2160-image corpus train/test {}", fractions.join(" ")))
}

// ------------------------------------------------------------ end to end

fn xraypipe(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_xraypipe"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "xraypipe {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn desk_run(root: &Path) -> Result<Value, String> {
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let (data, pre, ev) = (s(root.join("data")), s(root.join("pre")), s(root.join("eval")));
    let manifest = s(root.join("data/manifest.csv"));
    let (split, split_json) = (s(root.join("split.csv")), s(root.join("split.json")));
    xraypipe(&["gen", "--classes", "30,30,30,30,30", "--views", "3", "--seed", "7", "--out", &data])?;
    xraypipe(&["split", "--manifest", &manifest, "--seed", "7", "--out", &split, "--report", &split_json])?;
    xraypipe(&["preprocess", "--manifest", &manifest, "--out", &pre])?;
    xraypipe(&["eval", "--manifest", &manifest, "--split", &split, "--fit-baseline", "--images", &pre, "--out", &ev])?;
    read_json(&root.join("eval/eval_report.json"))
}

fn end_to_end(root: &Path) -> Outcome {
    let started = Instant::now();
    let report = desk_run(root)?;
    let elapsed = started.elapsed();
    let split = read_json(&root.join("split.json"))?;
    ensure(split["bisected_count"] == 0, || format!("bisected groups: {}", split["bisected_groups"]))?;
    let pre = read_json(&root.join("pre/preprocess_report.json"))?;
    let dims = &pre["output_dims"];
    let outputs = pre["outputs"].as_array().ok_or("no outputs")?;
    ensure(outputs.len() == 150, || format!("{} outputs", outputs.len()))?;
    for o in outputs {
        ensure(o["width"] == dims[0] && o["height"] == dims[1], || format!("non-uniform output {o}"))?;
        let img = xray_core::io::read_png(&root.join("pre").join(o["output"].as_str().unwrap())).map_err(|e| e.to_string())?;
        ensure(Value::from(img.width()) == dims[0] && Value::from(img.height()) == dims[1], || "PNG size differs from report".into())?;
    }
    let acc = report["overall_accuracy"].as_f64().ok_or("no accuracy")?;
    ensure(xray_core::eval::round2(acc) == 100.0, || format!("baseline accuracy {acc:.2}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "150 images, outputs {}x{}, {} test samples, accuracy {:.2}, {:.1}s",
        dims[0],
        dims[1],
        report["samples"],
        acc,
        elapsed.as_secs_f64()
    ))
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    desk_run(second)?;
    let (a, b) = (files_under(first), files_under(second));
    ensure(a.keys().eq(b.keys()), || "different file sets".into())?;
    let mut compared = 0;
    for (name, bytes) in &a {
        let other = &b[name];
        if name.ends_with("preprocess_report.json") {
            let strip = |raw: &[u8]| {
                let mut v: Value = serde_json::from_slice(raw).unwrap();
                v.as_object_mut().unwrap().remove("elapsed_seconds");
                v
            };
            ensure(strip(bytes) == strip(other), || format!("{} differs", name.display()))?;
        } else {
            ensure(bytes == other, || format!("{} differs", name.display()))?;
        }
        compared += 1;
    }
    Ok(format!("{compared} files identical (wall-clock field excluded)"))
}

// ----------------------------------------------------------------- timing

fn timing_shape(root: &Path) -> Outcome {
    let stub = StubClassifier::new(Duration::from_micros(50));
    let images = vec![RawImage::filled(4, 4, Bgr::WHITE).unwrap(); 7];
    let r = measure_inference(&stub, &images, 9).map_err(|e| e.to_string())?;
    ensure(r.iterations == 9 && r.samples_per_iteration == 7, || format!("{r:?}"))?;
    ensure(r.mean_per_image_ms == 1000.0 * r.total_elapsed_s / 63.0, || format!("{r:?}"))?;

    let out = root.join("bench.json");
    xraypipe(&["bench", "--iterations", "2", "--samples", "5", "--stub-ms", "0.2", "--out", &out.to_string_lossy()])?;
    let v = read_json(&out)?;
    let (it, n) = (v["iterations"].as_u64().unwrap(), v["samples_per_iteration"].as_u64().unwrap());
    let (total, mean) = (v["total_elapsed_s"].as_f64().unwrap(), v["mean_per_image_ms"].as_f64().unwrap());
    ensure(it == 2 && n == 5, || format!("{v}"))?;
    ensure(mean == 1000.0 * total / (it * n) as f64, || format!("mean {mean} total {total}"))?;
    ensure(mean >= 0.2, || format!("mean {mean} below the stub delay"))?;
    Ok(format!("library and CLI reports exact; CLI mean {mean:.4} ms with 0.2 ms stub"))
}

// ------------------------------------------------------------- early stop

fn early_stop_contract() -> Outcome {
    let (k, upper) = (50, 3000);
    let mut rng = seed::rng(9, 9);
    let (mut by_patience, mut by_limit) = (0, 0);
    for case in 0..10_000 {
        let len = rng.gen_range(1..=3200);
        let levels = rng.gen_range(2..=64);
        // mostly decreasing drift with plateaus and ties
        let drift: f64 = rng.gen_range(0.0..0.2);
        let losses: Vec<f64> = (0..len)
            .map(|i| (rng.gen_range(0..levels) as f64 - drift * i as f64).max(-1000.0))
            .collect();

        let mut best = f64::INFINITY;
        let mut best_epoch = 0;
        let mut expected = None;
        for (i, &l) in losses.iter().enumerate() {
            let epoch = i + 1;
            if l < best {
                best = l;
                best_epoch = epoch;
            }
            if epoch - best_epoch == k || epoch == upper {
                expected = Some((epoch, best_epoch));
                break;
            }
        }

        let mut state = EarlyStopState::default();
        let mut got = None;
        for &l in &losses {
            let (next, d) = state.step(l).map_err(|e| e.to_string())?;
            state = next;
            if let Decision::Stop { best_epoch, .. } = d {
                got = Some((state.epoch, best_epoch));
                break;
            }
        }
        ensure(got == expected, || format!("case {case}: got {got:?}, expected {expected:?}"))?;
        if let Some((epoch, best)) = got {
            let global_min = losses[..epoch].iter().cloned().fold(f64::INFINITY, f64::min);
            let first = losses.iter().position(|&l| l == global_min).unwrap() + 1;
            ensure(best == first, || format!("case {case}: best {best} vs earliest minimum {first}"))?;
            if epoch == upper && epoch - best < k {
                by_limit += 1;
            } else {
                by_patience += 1;
            }
        }
    }
    Ok(format!("10000 sequences; {by_patience} patience stops, {by_limit} upper-limit stops"))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (scratch.path().join("run1"), scratch.path().join("run2"));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 metric oracle vs reference rows", Box::new(metric_rows)),
        ("2 overall accuracy cross-check", Box::new(overall_accuracies)),
        ("3 maximal-information geometric oracle", Box::new(geometric_oracle)),
        ("4 morphology brute-force equivalence", Box::new(morphology_equivalence)),
        ("5 split invariants", Box::new(split_invariants)),
        ("6 end-to-end desk-scale run", Box::new(|| end_to_end(&first))),
        ("7 determinism", Box::new(|| determinism(&first, &second))),
        ("8 timing protocol shape", Box::new(|| timing_shape(scratch.path()))),
        ("9 early-stop contract", Box::new(early_stop_contract)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let started = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} [{secs:.2}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.2}s]: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
