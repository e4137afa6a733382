use crate::ConfigArgs;
use anyhow::{bail, Context, Result};
use clap::builder::TypedValueParser;
use clap::Args;
use log::{info, warn};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Duration;
use xray_core::classify::{fit_baseline, load_predictions, write_predictions, Classifier, Prediction, StubClassifier};
use xray_core::config::{ReportFormat, RunConfig};
use xray_core::dataset::{
    load_assignment, load_manifest, split_report, stratified_group_split, verify_assignment, write_assignment,
    ClassLabel, Side, SplitReport,
};
use xray_core::eval::{confusion_matrix, evaluation_report, measure_inference};
use xray_core::imaging::{Bgr, RawImage};
use xray_core::io::read_png;
use xray_core::pipeline::preprocess_corpus;
use xray_core::syngen::{generate_corpus, CorpusSpec};

/// Config file (or defaults), before flag overrides.
fn base_config(args: &ConfigArgs) -> Result<RunConfig> {
    Ok(RunConfig::load_or_default(args.config.as_deref())?)
}

/// Validates the layered config and honours `--dump-config`.
fn finish_config(args: &ConfigArgs, cfg: RunConfig) -> Result<RunConfig> {
    cfg.validate()?;
    if let Some(path) = &args.dump_config {
        std::fs::write(path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_class_counts(s: &str) -> Result<[usize; ClassLabel::COUNT], String> {
    let counts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    counts
        .try_into()
        .map_err(|v: Vec<usize>| format!("expected {} comma-separated counts, got {}", ClassLabel::COUNT, v.len()))
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if r > 0.0 && r < 1.0 {
        Ok(r)
    } else {
        Err(format!("{r} is not in (0, 1)"))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Images per class, in class id order.
    #[arg(long, value_parser = parse_class_counts, default_value = "30,30,30,30,30")]
    classes: [usize; ClassLabel::COUNT],
    /// Views per imagegroup.
    #[arg(long, default_value_t = 3)]
    views: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 160)]
    width: usize,
    #[arg(long, default_value_t = 120)]
    height: usize,
    /// Fraction of channel-jitter pixels.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Probability of an empty acquisition per view.
    #[arg(long, default_value_t = 0.0)]
    empty_rate: f64,
    #[arg(long)]
    out: PathBuf,
}

pub fn gen(cfg_args: &ConfigArgs, a: GenArgs) -> Result<()> {
    let mut cfg = base_config(cfg_args)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let cfg = finish_config(cfg_args, cfg)?;
    let counts: Vec<(ClassLabel, usize)> = ClassLabel::ALL
        .into_iter()
        .zip(a.classes)
        .filter(|&(_, n)| n > 0)
        .collect();
    let spec = CorpusSpec {
        width: a.width,
        height: a.height,
        views_per_group: a.views,
        noise_level: a.noise,
        empty_rate: a.empty_rate,
    };
    let corpus = generate_corpus(&counts, &spec, cfg.seed, &a.out)?;
    write_json(&a.out.join("ground_truth.json"), &corpus.truths)?;
    println!(
        "generated {} images in {} imagegroups -> {}",
        corpus.manifest.len(),
        corpus.manifest.groups().len(),
        corpus.manifest_path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Target train fraction per class.
    #[arg(long, value_parser = parse_ratio)]
    ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the `image_id,split` assignment.
    #[arg(long, required_unless_present = "verify", conflicts_with = "verify")]
    out: Option<PathBuf>,
    /// JSON split report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Check an existing assignment instead of computing one.
    #[arg(long)]
    verify: Option<PathBuf>,
}

fn print_split_summary(r: &SplitReport) {
    for row in &r.classes {
        println!(
            "class {} {:<22} train {:>5} test {:>5} ({:.3})",
            row.class_id, row.class_name, row.train, row.test, row.train_fraction
        );
        if let Some(w) = &row.warning {
            println!("{w}");
        }
    }
    println!(
        "total train {} test {}; bisected groups {}",
        r.total_train, r.total_test, r.bisected_count
    );
}

pub fn split(cfg_args: &ConfigArgs, a: SplitArgs) -> Result<()> {
    let mut cfg = base_config(cfg_args)?;
    if let Some(r) = a.ratio {
        cfg.split_ratio = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let cfg = finish_config(cfg_args, cfg)?;
    let manifest = load_manifest(&a.manifest)?;

    let assignment = match &a.verify {
        Some(path) => load_assignment(path)?,
        None => stratified_group_split(&manifest, cfg.split_ratio, cfg.seed)?,
    };
    let report = split_report(&assignment, &manifest);
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    print_split_summary(&report);
    if a.verify.is_some() {
        verify_assignment(&assignment, &manifest)?;
        println!("assignment is valid");
    } else if let Some(out) = &a.out {
        write_assignment(out, &assignment)?;
        info!("wrote {}", out.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for cropped images.
    #[arg(long)]
    out: PathBuf,
    /// Also write square network inputs of this side.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["224", "299"]).map(|s| s.parse::<usize>().expect("listed values parse")))]
    network_input: Option<usize>,
    /// JSON report path; defaults to `<out>/preprocess_report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn preprocess(cfg_args: &ConfigArgs, a: PreprocessArgs) -> Result<()> {
    let mut cfg = base_config(cfg_args)?;
    if a.network_input.is_some() {
        cfg.pipeline.network_input = a.network_input;
    }
    let cfg = finish_config(cfg_args, cfg)?;
    let manifest = load_manifest(&a.manifest)?;
    let report = preprocess_corpus(&manifest, &cfg.pipeline, &a.out)?;
    let report_path = a.report.unwrap_or_else(|| a.out.join("preprocess_report.json"));
    write_json(&report_path, &report)?;
    for f in &report.failures {
        warn!("{}: {}", f.image_id, f.error);
    }
    println!(
        "mean window {:.2}x{:.2} over {} images; output {}x{}; {} written, {} empty masks, {} failures",
        report.mean_window.w,
        report.mean_window.h,
        report.mean_window.count,
        report.output_dims[0],
        report.output_dims[1],
        report.outputs.len(),
        report.empty_masks.len(),
        report.failures.len()
    );
    if report.outputs.is_empty() && !report.failures.is_empty() {
        bail!("every record failed; see {}", report_path.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["predictions", "fit_baseline"]))]
pub struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Assignment file; only test-side images are scored.
    #[arg(long)]
    split: Option<PathBuf>,
    /// `image_id,predicted_class[,s0..s4]` CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Fit the histogram baseline on training images and score the test side.
    #[arg(long, requires_all = ["images", "split"])]
    fit_baseline: bool,
    /// Directory of preprocessed `<image_id>.png` files.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Also time baseline inference over the test set.
    #[arg(long, requires = "fit_baseline")]
    time: bool,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value = "model")]
    model: String,
    /// Directory for the report files and baseline predictions.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_images(dir: &Path, ids: &[&str]) -> Result<Vec<RawImage>> {
    ids.iter()
        .map(|id| {
            let p = dir.join(format!("{id}.png"));
            read_png(&p).with_context(|| format!("loading {}", p.display()))
        })
        .collect()
}

pub fn eval(cfg_args: &ConfigArgs, a: EvalArgs) -> Result<()> {
    let mut cfg = base_config(cfg_args)?;
    if let Some(n) = a.iterations {
        cfg.timing_iterations = n;
    }
    let cfg = finish_config(cfg_args, cfg)?;
    let manifest = load_manifest(&a.manifest)?;
    let assignment = a.split.as_deref().map(load_assignment).transpose()?;
    if let Some(asg) = &assignment {
        verify_assignment(asg, &manifest)?;
    }
    let on_test = |id: &str| assignment.as_ref().is_none_or(|s| s.side(id) == Some(Side::Test));

    let mut timing = None;
    let mut model = a.model.clone();
    let predictions: Vec<Prediction> = if let Some(path) = &a.predictions {
        let all = load_predictions(path, &manifest)?;
        let n = all.len();
        let kept: Vec<Prediction> = all.into_iter().filter(|p| on_test(&p.image_id)).collect();
        if kept.len() < n {
            warn!("ignored {} predictions for images outside the test split", n - kept.len());
        }
        kept
    } else {
        let asg = assignment.as_ref().expect("clap requires --split");
        let dir = a.images.as_deref().expect("clap requires --images");
        let by_side = |side: Side| -> Vec<&str> {
            manifest
                .records()
                .iter()
                .filter(|r| asg.side(&r.image_id) == Some(side))
                .map(|r| r.image_id.as_str())
                .collect()
        };
        let (train_ids, test_ids) = (by_side(Side::Train), by_side(Side::Test));
        let train_images = load_images(dir, &train_ids)?;
        let train: Vec<(RawImage, ClassLabel)> = train_images
            .into_iter()
            .zip(&train_ids)
            .map(|(img, id)| (img, manifest.get(id).expect("assignment verified").class))
            .collect();
        let clf = fit_baseline(&train)?;
        model = clf.name().to_string();
        let test_images = load_images(dir, &test_ids)?;
        let preds = test_ids
            .iter()
            .zip(&test_images)
            .map(|(id, img)| clf.predict(id, img))
            .collect::<Result<Vec<_>, _>>()?;
        if a.time && !test_images.is_empty() {
            timing = Some(measure_inference(&clf, &test_images, cfg.timing_iterations)?);
        }
        preds
    };
    if predictions.is_empty() {
        bail!("no predictions to score");
    }

    let cm = confusion_matrix(&predictions, &manifest.truths())?;
    let report = evaluation_report(&model, &cm, timing)?;
    let table = report.render_table();
    print!("{table}");
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for f in &cfg.report_formats {
            match f {
                ReportFormat::Json => write_json(&dir.join("eval_report.json"), &report)?,
                ReportFormat::Text => std::fs::write(dir.join("eval_report.txt"), &table)?,
            }
        }
        if a.fit_baseline {
            write_predictions(&dir.join("predictions.csv"), &predictions)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Passes over the test set.
    #[arg(long)]
    iterations: Option<usize>,
    /// Busy-wait per image, in milliseconds.
    #[arg(long, default_value_t = 0.1)]
    stub_ms: f64,
    /// Images per pass.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// JSON timing report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn bench(cfg_args: &ConfigArgs, a: BenchArgs) -> Result<()> {
    let mut cfg = base_config(cfg_args)?;
    if let Some(n) = a.iterations {
        cfg.timing_iterations = n;
    }
    let cfg = finish_config(cfg_args, cfg)?;
    if a.samples == 0 || !(a.stub_ms >= 0.0 && a.stub_ms.is_finite()) {
        bail!("bench needs at least one sample and a non-negative delay");
    }
    let stub = StubClassifier::new(Duration::from_secs_f64(a.stub_ms / 1000.0));
    let images = vec![RawImage::filled(8, 8, Bgr::WHITE)?; a.samples];
    let report = measure_inference(&stub, &images, cfg.timing_iterations)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(())
}
