use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use scatfex_core::synthgen::Signal;
use scatfex_core::{
    build_filter_bank, dct_forward, extract_all_classes, gen_cbf, gen_triangle, kkt_residual,
    load_csv, load_features_csv, save_csv, save_features_csv, scatter_batch, scattering,
    template_classify, LabeledDataset, MlrModel, ModelFile, ZoRun,
};

use crate::artifacts;
use crate::config::{DatasetKind, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::report::{
    best_disjoint_windows, best_window, ClassExtraction, ClassLocalization, KktReport,
    LocalizationReport, Report, Results, LOCALIZATION_MASS, LOCALIZATION_PAIR_MIN,
    LOCALIZATION_WINDOW, REPORT_SCHEMA_VERSION,
};
use crate::svgplot;

pub const ZO_RUN_SCHEMA_VERSION: u32 = 1;

/// On-disk record of one extraction run: the run itself plus a reference to
/// the exact model it searched against, so evaluation can refuse runs made
/// with a different model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoRunFile {
    pub schema_version: u32,
    /// Artifact name of the model within the same output directory.
    pub model_file: String,
    /// Content hash of that model at extraction time.
    pub model_sha256: String,
    pub run: ZoRun,
}

/// All artifact locations for one experiment directory.
pub struct Paths {
    pub train_csv: PathBuf,
    pub test_csv: PathBuf,
    pub features_train: PathBuf,
    pub features_test: PathBuf,
    pub model: PathBuf,
    pub extracted_csv: PathBuf,
    pub report_json: PathBuf,
    pub report_txt: PathBuf,
    pub plots_dir: PathBuf,
}

impl Paths {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let dir = &cfg.output_dir;
        Self {
            train_csv: dir.join("train.csv"),
            test_csv: dir.join("test.csv"),
            features_train: dir.join("features_train.csv"),
            features_test: dir.join("features_test.csv"),
            model: dir.join("model.json"),
            extracted_csv: dir.join("extracted.csv"),
            report_json: dir.join("report.json"),
            report_txt: dir.join("report.txt"),
            plots_dir: dir.join("plots"),
        }
    }

    pub fn zo_run(&self, cfg: &ExperimentConfig, class: u32) -> PathBuf {
        cfg.output_dir.join(format!("zo_class_{class}.json"))
    }
}

fn generate(kind: DatasetKind, n_per_class: usize, seed: u64) -> scatfex_core::Result<LabeledDataset> {
    match kind {
        DatasetKind::Cbf => gen_cbf(n_per_class, seed),
        DatasetKind::Triangle => gen_triangle(n_per_class, seed),
    }
}

/// Generates the train and test datasets.
pub fn run_gen(cfg: &ExperimentConfig) -> Result<()> {
    const STAGE: &str = "gen";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::stage(
            STAGE,
            format!("cannot create {}: {e}", cfg.output_dir.display()),
        )
    })?;
    let seeds = cfg.seeds();
    let train = generate(cfg.dataset, cfg.n_train_per_class, seeds.train)
        .map_err(|e| CliError::stage(STAGE, e))?;
    let test = generate(cfg.dataset, cfg.n_test_per_class, seeds.test)
        .map_err(|e| CliError::stage(STAGE, e))?;
    save_csv(&train, &paths.train_csv).map_err(|e| CliError::stage(STAGE, e))?;
    artifacts::write_meta(STAGE, &paths.train_csv, &hash)?;
    save_csv(&test, &paths.test_csv).map_err(|e| CliError::stage(STAGE, e))?;
    artifacts::write_meta(STAGE, &paths.test_csv, &hash)?;
    Ok(())
}

/// Computes scattering features for both datasets.
pub fn run_scatter(cfg: &ExperimentConfig) -> Result<()> {
    const STAGE: &str = "scatter";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    let bank = build_filter_bank(&cfg.scattering).map_err(|e| CliError::stage(STAGE, e))?;
    for (input, output) in [
        (&paths.train_csv, &paths.features_train),
        (&paths.test_csv, &paths.features_test),
    ] {
        artifacts::verify(STAGE, input, &hash)?;
        let dataset =
            load_csv(input, cfg.dataset.n_classes()).map_err(|e| CliError::stage(STAGE, e))?;
        let features = scatter_batch(&dataset, &bank).map_err(|e| CliError::stage(STAGE, e))?;
        save_features_csv(&features, &dataset.labels, output)
            .map_err(|e| CliError::stage(STAGE, e))?;
        artifacts::write_meta(STAGE, output, &hash)?;
    }
    Ok(())
}

/// Fits the sparse classifier on the training features.
pub fn run_train(cfg: &ExperimentConfig) -> Result<()> {
    const STAGE: &str = "train";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    artifacts::verify(STAGE, &paths.features_train, &hash)?;
    let (features, labels) = load_features_csv(&paths.features_train, cfg.dataset.n_classes())
        .map_err(|e| CliError::stage(STAGE, e))?;
    let (model, _path) =
        scatfex_core::fit_with_path(features.view(), &labels, &cfg.fit)
            .map_err(|e| CliError::stage(STAGE, e))?;
    ModelFile::from_model(&model, &cfg.scattering)
        .save(&paths.model)
        .map_err(|e| CliError::stage(STAGE, e))?;
    artifacts::write_meta(STAGE, &paths.model, &hash)?;
    Ok(())
}

/// Search-box half-widths: 10 × the largest absolute DCT coefficient seen
/// in the training signals, per slot, floored at 1e-3 of the largest bound
/// so no slot degenerates to zero width.
fn dct_bounds(train: &LabeledDataset) -> Result<Vec<f64>> {
    let d = train.signal_len();
    let mut max_abs = vec![0.0f64; d];
    for signal in &train.signals {
        let coeffs = dct_forward(signal.samples());
        for (m, c) in max_abs.iter_mut().zip(&coeffs) {
            *m = m.max(c.abs());
        }
    }
    let cap = max_abs.iter().fold(0.0f64, |a, &b| a.max(b)) * 10.0;
    if cap <= 0.0 {
        return Err(CliError::stage(
            "extract",
            "training signals are identically zero; no search box can be derived",
        ));
    }
    Ok(max_abs
        .iter()
        .map(|&m| (10.0 * m).max(1e-3 * cap))
        .collect())
}

fn load_model(
    stage: &'static str,
    cfg: &ExperimentConfig,
    paths: &Paths,
) -> Result<(MlrModel, String)> {
    let hash = cfg.hash();
    let content_hash = artifacts::verify(stage, &paths.model, &hash)?;
    let (model, trained_under) = ModelFile::load(&paths.model)
        .and_then(ModelFile::into_model)
        .map_err(|e| CliError::stage(stage, e))?;
    if trained_under != cfg.scattering {
        return Err(CliError::stage(
            stage,
            "model was trained under a different scattering config; re-run the train stage",
        ));
    }
    Ok((model, content_hash))
}

/// Runs the per-class signal extraction against the trained model.
pub fn run_extract(cfg: &ExperimentConfig) -> Result<()> {
    const STAGE: &str = "extract";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    let (model, model_sha256) = load_model(STAGE, cfg, &paths)?;
    artifacts::verify(STAGE, &paths.train_csv, &hash)?;
    let train =
        load_csv(&paths.train_csv, cfg.dataset.n_classes()).map_err(|e| CliError::stage(STAGE, e))?;
    let bounds = dct_bounds(&train)?;
    let de_config = cfg.de.to_de_config(bounds, cfg.seeds().de);
    let bank = build_filter_bank(&cfg.scattering).map_err(|e| CliError::stage(STAGE, e))?;
    let runs = extract_all_classes(&model, &bank, cfg.mu, cfg.nu, &de_config)
        .map_err(|e| CliError::stage(STAGE, e))?;
    let mut signals = Vec::with_capacity(runs.len());
    let mut labels = Vec::with_capacity(runs.len());
    for run in runs {
        let class = run.target_class;
        labels.push(class);
        signals.push(Signal::new(run.best_x.clone()).map_err(|e| CliError::stage(STAGE, e))?);
        let record = ZoRunFile {
            schema_version: ZO_RUN_SCHEMA_VERSION,
            model_file: "model.json".into(),
            model_sha256: model_sha256.clone(),
            run,
        };
        let path = paths.zo_run(cfg, class);
        let text = serde_json::to_string_pretty(&record).expect("run serialization cannot fail");
        std::fs::write(&path, text)
            .map_err(|e| CliError::stage(STAGE, format!("cannot write {}: {e}", path.display())))?;
        artifacts::write_meta(STAGE, &path, &hash)?;
    }
    let extracted = LabeledDataset::new(signals, labels, cfg.dataset.n_classes(), None)
        .map_err(|e| CliError::stage(STAGE, e))?;
    save_csv(&extracted, &paths.extracted_csv).map_err(|e| CliError::stage(STAGE, e))?;
    artifacts::write_meta(STAGE, &paths.extracted_csv, &hash)?;
    Ok(())
}

fn localization_for(x: &[f64], class: u32) -> ClassLocalization {
    if class == 1 {
        // cylinder: two edges → two disjoint concentrations
        let ((a, fa), (b, fb)) = best_disjoint_windows(x, LOCALIZATION_WINDOW);
        let passed = fa + fb >= LOCALIZATION_MASS
            && fa >= LOCALIZATION_PAIR_MIN
            && fb >= LOCALIZATION_PAIR_MIN;
        ClassLocalization {
            class,
            best_window_start: a,
            best_window_mass: fa,
            second_window_start: Some(b),
            second_window_mass: Some(fb),
            passed,
        }
    } else {
        let (start, frac) = best_window(x, LOCALIZATION_WINDOW);
        ClassLocalization {
            class,
            best_window_start: start,
            best_window_mass: frac,
            second_window_start: None,
            second_window_mass: None,
            passed: frac >= LOCALIZATION_MASS,
        }
    }
}

fn load_zo_runs(
    stage: &'static str,
    cfg: &ExperimentConfig,
    paths: &Paths,
    model_sha256: &str,
) -> Result<Vec<ZoRun>> {
    let hash = cfg.hash();
    let mut runs = Vec::new();
    for class in 1..=cfg.dataset.n_classes() {
        let path = paths.zo_run(cfg, class);
        artifacts::verify(stage, &path, &hash)?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::stage(stage, format!("cannot read {}: {e}", path.display())))?;
        let record: ZoRunFile = serde_json::from_str(&text)
            .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))?;
        if record.schema_version != ZO_RUN_SCHEMA_VERSION {
            return Err(CliError::stage(
                stage,
                format!(
                    "{}: unsupported schema version {}",
                    path.display(),
                    record.schema_version
                ),
            ));
        }
        if record.model_sha256 != model_sha256 {
            return Err(CliError::stage(
                stage,
                format!(
                    "{} was extracted against model hash {} but {} has hash {model_sha256}; \
                     re-run the extract stage",
                    path.display(),
                    record.model_sha256,
                    record.model_file
                ),
            ));
        }
        if record.run.target_class != class {
            return Err(CliError::stage(
                stage,
                format!(
                    "{} records class {} instead of {class}",
                    path.display(),
                    record.run.target_class
                ),
            ));
        }
        runs.push(record.run);
    }
    Ok(runs)
}

/// Derives every report quantity from the stored artifacts.
pub fn compute_results(cfg: &ExperimentConfig) -> Result<Results> {
    const STAGE: &str = "eval";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    let k = cfg.dataset.n_classes();
    let (model, model_sha256) = load_model(STAGE, cfg, &paths)?;

    artifacts::verify(STAGE, &paths.features_test, &hash)?;
    let (f_test, y_test) =
        load_features_csv(&paths.features_test, k).map_err(|e| CliError::stage(STAGE, e))?;
    let test_accuracy = model
        .accuracy(f_test.view(), &y_test)
        .map_err(|e| CliError::stage(STAGE, e))?;

    artifacts::verify(STAGE, &paths.features_train, &hash)?;
    let (f_train, y_train) =
        load_features_csv(&paths.features_train, k).map_err(|e| CliError::stage(STAGE, e))?;
    let res = kkt_residual(&model, f_train.view(), &y_train)
        .map_err(|e| CliError::stage(STAGE, e))?;
    let kkt = KktReport {
        zero: res.zero,
        active: res.active,
        intercept: res.intercept,
        tol: cfg.fit.tol,
        passed: res.max() <= 10.0 * cfg.fit.tol,
    };

    let bank = build_filter_bank(&cfg.scattering).map_err(|e| CliError::stage(STAGE, e))?;
    let runs = load_zo_runs(STAGE, cfg, &paths, &model_sha256)?;
    let mut extraction = Vec::with_capacity(runs.len());
    for run in &runs {
        let sv = scattering::scatter2_samples(&run.best_x, &bank)
            .map_err(|e| CliError::stage(STAGE, e))?;
        let probs = model
            .predict_proba(sv.coeffs())
            .map_err(|e| CliError::stage(STAGE, e))?;
        let argmax_class = scatfex_core::mlr::argmax_first(&probs) as u32 + 1;
        let p_target = probs[run.target_class as usize - 1];
        extraction.push(ClassExtraction {
            class: run.target_class,
            best_objective: run.best_value,
            p_target,
            argmax_class,
            self_consistent: argmax_class == run.target_class,
            prob_pass: p_target >= 0.9,
            evals_used: run.evals_used,
        });
    }

    let localization = (cfg.dataset == DatasetKind::Cbf).then(|| {
        let per_class: Vec<ClassLocalization> = runs
            .iter()
            .map(|run| localization_for(&run.best_x, run.target_class))
            .collect();
        let passed = per_class.iter().all(|c| c.passed);
        LocalizationReport {
            window_width: LOCALIZATION_WINDOW,
            mass_threshold: LOCALIZATION_MASS,
            per_class,
            passed,
        }
    });

    artifacts::verify(STAGE, &paths.test_csv, &hash)?;
    let test_set =
        load_csv(&paths.test_csv, k).map_err(|e| CliError::stage(STAGE, e))?;
    let templates: Vec<Vec<f64>> = runs.iter().map(|r| r.best_x.clone()).collect();
    let template_accuracy =
        template_classify(&templates, &test_set).map_err(|e| CliError::stage(STAGE, e))?;

    let mut notes = Vec::new();
    if cfg.dataset == DatasetKind::Cbf {
        notes.push(format!(
            "the CBF benchmark's test size is conventionally quoted as a 3000-signal total; \
             this run draws {} per class ({} total)",
            cfg.n_test_per_class,
            3 * cfg.n_test_per_class
        ));
    }

    Ok(Results {
        dataset: cfg.dataset.to_string(),
        n_train_per_class: cfg.n_train_per_class,
        n_test_per_class: cfg.n_test_per_class,
        master_seed: cfg.master_seed,
        scattering_output_dim: cfg.scattering.output_dim(),
        test_accuracy,
        template_accuracy,
        lambda_selected: model.lambda(),
        per_class_nonzeros: model.nonzeros_per_class(),
        kkt,
        extraction,
        localization,
        mu: cfg.mu,
        nu: cfg.nu,
        notes,
    })
}

fn write_report(
    stage: &'static str,
    cfg: &ExperimentConfig,
    results: Results,
    timings_ms: BTreeMap<String, f64>,
) -> Result<Report> {
    let paths = Paths::new(cfg);
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        results,
        timings_ms,
    };
    report.save(stage, &paths.report_json, &paths.report_txt)?;
    artifacts::write_meta(stage, &paths.report_json, &cfg.hash())?;
    Ok(report)
}

/// Computes results and writes the report pair (JSON + text). Timings cover
/// only this stage; `run` produces the same results with full timings.
pub fn run_eval(cfg: &ExperimentConfig) -> Result<Report> {
    let mut timings = BTreeMap::new();
    let results = timed(&mut timings, "eval", || compute_results(cfg))?;
    write_report("eval", cfg, results, timings)
}

/// Renders the three plot pairs (SVG + CSV data) under `plots/`.
pub fn run_plot(cfg: &ExperimentConfig) -> Result<()> {
    const STAGE: &str = "plot";
    let paths = Paths::new(cfg);
    let hash = cfg.hash();
    artifacts::verify(STAGE, &paths.train_csv, &hash)?;
    let train =
        load_csv(&paths.train_csv, cfg.dataset.n_classes()).map_err(|e| CliError::stage(STAGE, e))?;
    let (model, _) = load_model(STAGE, cfg, &paths)?;
    artifacts::verify(STAGE, &paths.extracted_csv, &hash)?;
    let extracted = load_csv(&paths.extracted_csv, cfg.dataset.n_classes())
        .map_err(|e| CliError::stage(STAGE, e))?;
    std::fs::create_dir_all(&paths.plots_dir).map_err(|e| {
        CliError::stage(
            STAGE,
            format!("cannot create {}: {e}", paths.plots_dir.display()),
        )
    })?;
    let pairs = [
        ("samples", svgplot::samples_plot(&train, cfg.dataset, 5)),
        ("betas", svgplot::betas_plot(&model)),
        ("extracted", svgplot::extracted_plot(&extracted, cfg.dataset)),
    ];
    for (name, (svg, csv)) in pairs {
        for (ext, body) in [("svg", &svg), ("csv", &csv)] {
            let path = paths.plots_dir.join(format!("{name}.{ext}"));
            std::fs::write(&path, body).map_err(|e| {
                CliError::stage(STAGE, format!("cannot write {}: {e}", path.display()))
            })?;
            artifacts::write_meta(STAGE, &path, &hash)?;
        }
    }
    Ok(())
}

fn timed<F: FnOnce() -> Result<T>, T>(
    timings: &mut BTreeMap<String, f64>,
    name: &str,
    f: F,
) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
    Ok(out)
}

/// The whole pipeline: gen → scatter → train → extract → eval → plot, with
/// per-stage wall-clock recorded in the report.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Report> {
    let mut timings = BTreeMap::new();
    timed(&mut timings, "gen", || run_gen(cfg))?;
    timed(&mut timings, "scatter", || run_scatter(cfg))?;
    timed(&mut timings, "train", || run_train(cfg))?;
    timed(&mut timings, "extract", || run_extract(cfg))?;
    let results = timed(&mut timings, "eval", || compute_results(cfg))?;
    timed(&mut timings, "plot", || run_plot(cfg))?;
    write_report("run", cfg, results, timings)
}
