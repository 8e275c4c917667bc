//! Run-directory layout and the stages behind each subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{compute_metrics, measure_latency, measure_size, BenchReport, BenchRow, LatencyConfig, Stage};
use crate::config::{kind_key, RunConfig};
use crate::dataflow::{load_csv, merge_chronological, preprocess, synth_generate_stream, Dataset, FlowTable, Prepared};
use crate::error::{Error, Result};
use crate::explain::{explain_model, fs_prune_from_report, AttributionReport, FsPruneConfig};
use crate::nn::{argmax, load_dense, save_dense, train, Architecture, Model, ModelKind, ModelMeta};
use crate::prune::prune_and_finetune;
use crate::sparse::{deserialize_sparse, serialize_sparse, DenseEngine, InferenceModel, MatVec, SparseModel};
use crate::tuner::{run_study, StudyConfig};

/// Paths of every artifact inside `runs/<name>/`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDir {
    pub root: PathBuf,
}

fn stage_key(stage: Stage) -> &'static str {
    stage.as_str()
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self, file: &str) -> PathBuf {
        self.root.join("data").join(file)
    }

    pub fn train_csv(&self) -> PathBuf {
        self.data("train.csv")
    }

    pub fn val_csv(&self) -> PathBuf {
        self.data("val.csv")
    }

    pub fn test_csv(&self) -> PathBuf {
        self.data("test.csv")
    }

    pub fn dataset_info(&self) -> PathBuf {
        self.data("dataset.json")
    }

    pub fn raw_flows(&self, split: &str) -> PathBuf {
        self.root.join("raw").join(format!("{split}_flows.csv"))
    }

    pub fn dense_model(&self, kind: ModelKind, stage: Stage) -> PathBuf {
        self.root.join("models").join(format!("{}_{}.json", kind_key(kind), stage_key(stage)))
    }

    pub fn sparse_model(&self, kind: ModelKind, stage: Stage) -> PathBuf {
        self.root.join("models").join(format!("{}_{}.spif", kind_key(kind), stage_key(stage)))
    }

    /// File whose weights are benchmarked for a stage.
    pub fn bench_model(&self, kind: ModelKind, stage: Stage) -> PathBuf {
        match stage {
            Stage::Original => self.dense_model(kind, stage),
            _ => self.sparse_model(kind, stage),
        }
    }

    pub fn history(&self, kind: ModelKind, stage: Stage) -> PathBuf {
        self.root.join("reports").join(format!("{}_{}_history.csv", kind_key(kind), stage_key(stage)))
    }

    pub fn shap_report(&self, kind: ModelKind) -> PathBuf {
        self.root.join("reports").join(format!("{}_shap.csv", kind_key(kind)))
    }

    pub fn selection(&self, kind: ModelKind) -> PathBuf {
        self.root.join("reports").join(format!("{}_selected.json", kind_key(kind)))
    }

    pub fn study_csv(&self, kind: ModelKind) -> PathBuf {
        self.root.join("tune").join(format!("{}_study.csv", kind_key(kind)))
    }

    pub fn best_config(&self, kind: ModelKind) -> PathBuf {
        self.root.join("tune").join(format!("{}_best.json", kind_key(kind)))
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("reports").join("report.csv")
    }

    pub fn report_md(&self) -> PathBuf {
        self.root.join("reports").join("report.md")
    }

    pub fn latency_raw(&self) -> PathBuf {
        self.root.join("reports").join("latency_raw.csv")
    }
}

/// Reproduction metadata written next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub artifact: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    Ok(())
}

/// Writes the sidecar of each artifact.
pub fn record(cfg: &RunConfig, command: &str, artifacts: &[PathBuf]) -> Result<()> {
    for a in artifacts {
        let meta = Sidecar {
            artifact: a.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            command: command.into(),
            config_sha256: cfg.hash(),
            seed: cfg.seed(),
            version: env!("CARGO_PKG_VERSION").into(),
        };
        std::fs::write(sidecar_path(a), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    Ok(())
}

/// Column and class names of the preprocessed splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub features: Vec<String>,
    pub classes: Vec<String>,
    pub removed_degenerate: Vec<String>,
    pub removed_correlated: Vec<String>,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Raw synthetic train and test tables for a config with a synth spec.
pub fn synth_tables(cfg: &RunConfig) -> Result<(FlowTable, FlowTable)> {
    let spec = cfg.data.synth.clone().ok_or_else(|| Error::Config(vec!["data.synth: required".into()]))?;
    let train = synth_generate_stream(&spec, cfg.seed(), 0)?;
    let test_spec = crate::dataflow::SynthSpec { rows: cfg.data.synth_test_rows.unwrap_or(spec.rows / 4).max(1), ..spec };
    let test = synth_generate_stream(&test_spec, cfg.seed(), 1)?;
    Ok((train, test))
}

fn load_tables(paths: &[PathBuf], cfg: &RunConfig) -> Result<FlowTable> {
    let label = &cfg.data.preprocess.label_column;
    let tables = paths.iter().map(|p| load_csv(p, label)).collect::<Result<Vec<_>>>()?;
    match (tables.len(), &cfg.data.time_column) {
        (1, _) => Ok(tables.into_iter().next().expect("one table")),
        (_, Some(time)) => merge_chronological(&tables, time),
        (_, None) => Err(Error::Config(vec!["data.time_column: required to merge several CSVs".into()])),
    }
}

/// Loads (or generates) the raw tables and preprocesses them.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let d = &cfg.data;
    if d.train_csvs.is_empty() {
        let (train_t, test_t) = synth_tables(cfg)?;
        let mapping = d.synth.as_ref().map(|s| s.label_mapping()).expect("synth spec checked");
        return preprocess(&train_t, Some(&test_t), &mapping, &d.preprocess);
    }
    let mapping = d.mapping.as_ref().ok_or_else(|| Error::Config(vec!["data.mapping: required for CSV input".into()]))?;
    let train_t = load_tables(&d.train_csvs, cfg)?;
    let test_t = if d.test_csvs.is_empty() { None } else { Some(load_tables(&d.test_csvs, cfg)?) };
    preprocess(&train_t, test_t.as_ref(), mapping, &d.preprocess)
}

pub fn stage_synth(cfg: &RunConfig, run: &RunDir) -> Result<Vec<PathBuf>> {
    let (train_t, test_t) = synth_tables(cfg)?;
    let label = &cfg.data.preprocess.label_column;
    let out = vec![run.raw_flows("train"), run.raw_flows("test")];
    ensure_parent(&out[0])?;
    train_t.write_csv(&out[0], label)?;
    test_t.write_csv(&out[1], label)?;
    record(cfg, "synth", &out)?;
    Ok(out)
}

pub fn stage_preprocess(cfg: &RunConfig, run: &RunDir) -> Result<Splits> {
    let p = prepare(cfg)?;
    let test = match p.test {
        Some(t) => t,
        None => {
            log::warn!("no test CSVs configured; the validation split doubles as the test set");
            p.val.clone()
        }
    };
    let info = DatasetInfo {
        features: p.features.clone(),
        classes: p.train.class_names().to_vec(),
        removed_degenerate: p.removed_degenerate,
        removed_correlated: p.removed_correlated,
        train_rows: p.train.len(),
        val_rows: p.val.len(),
        test_rows: test.len(),
    };
    ensure_parent(&run.train_csv())?;
    p.train.write_csv(&run.train_csv())?;
    p.val.write_csv(&run.val_csv())?;
    test.write_csv(&run.test_csv())?;
    std::fs::write(run.dataset_info(), serde_json::to_string_pretty(&info)? + "\n")?;
    record(cfg, "preprocess", &[run.train_csv(), run.val_csv(), run.test_csv(), run.dataset_info()])?;
    log::info!("{} features kept; {} train / {} val / {} test rows", info.features.len(), info.train_rows, info.val_rows, info.test_rows);
    Ok(Splits { train: p.train, val: p.val, test })
}

pub fn load_splits(run: &RunDir) -> Result<Splits> {
    let info_path = run.dataset_info();
    if !info_path.exists() {
        return Err(Error::MissingFile(info_path));
    }
    let info: DatasetInfo = serde_json::from_slice(&std::fs::read(&info_path)?)?;
    Ok(Splits {
        train: Dataset::read_csv(&run.train_csv(), &info.classes)?,
        val: Dataset::read_csv(&run.val_csv(), &info.classes)?,
        test: Dataset::read_csv(&run.test_csv(), &info.classes)?,
    })
}

/// Splits from the run directory, preprocessing first when absent.
pub fn splits(cfg: &RunConfig, run: &RunDir) -> Result<Splits> {
    if run.dataset_info().exists() {
        load_splits(run)
    } else {
        stage_preprocess(cfg, run)
    }
}

fn full_meta(data: &Dataset) -> ModelMeta {
    ModelMeta::full(data.feature_names().to_vec(), data.class_names().to_vec())
}

fn save_model(cfg: &RunConfig, command: &str, path: &Path, model: &Model, meta: &ModelMeta) -> Result<()> {
    ensure_parent(path)?;
    save_dense(path, model, meta)?;
    record(cfg, command, &[path.to_path_buf(), crate::nn::blob_path(path)])
}

fn save_history(cfg: &RunConfig, command: &str, path: &Path, h: &crate::nn::History) -> Result<()> {
    ensure_parent(path)?;
    h.write_csv(path)?;
    record(cfg, command, &[path.to_path_buf()])
}

pub fn stage_tune(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind) -> Result<crate::tuner::Study> {
    let space = cfg.tuner.space_for(kind);
    let mut sc = StudyConfig::new(&space, cfg.seed());
    sc.budget = cfg.tuner.budget;
    sc.workers = cfg.tuner.workers;
    sc.base_arch = cfg.arch.for_kind(kind).clone();
    sc.base_train = cfg.effective_train();
    if cfg.fast {
        sc.base_train.max_epochs = sc.base_train.max_epochs.min(cfg.tuner.fast_max_epochs.max(1));
        sc.base_train.patience = sc.base_train.patience.min(sc.base_train.max_epochs.saturating_sub(1));
    }
    let study = run_study(&space, &data.train, &data.val, &sc)?;
    let (csv_path, best_path) = (run.study_csv(kind), run.best_config(kind));
    ensure_parent(&csv_path)?;
    study.write_csv(&csv_path)?;
    std::fs::write(&best_path, serde_json::to_string_pretty(&study.best_fragment(&sc, &space)?)? + "\n")?;
    record(cfg, "tune", &[csv_path, best_path])?;
    Ok(study)
}

pub fn stage_train(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind) -> Result<Model> {
    let arch = cfg.arch.for_kind(kind);
    let net = arch.build(data.train.n_features(), data.train.n_classes(), cfg.seed());
    let (tr, va) = (arch.samples(&data.train), arch.samples(&data.val));
    let (model, history) = train(net, &tr, Some(&va), &cfg.effective_train(), None)?;
    save_model(cfg, "train", &run.dense_model(kind, Stage::Original), &model, &full_meta(&data.train))?;
    save_history(cfg, "train", &run.history(kind, Stage::Original), &history)?;
    Ok(model)
}

fn original(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind) -> Result<Model> {
    let path = run.dense_model(kind, Stage::Original);
    if path.exists() {
        Ok(load_dense(&path)?.0)
    } else {
        stage_train(cfg, run, data, kind)
    }
}

pub fn stage_prune(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind) -> Result<Model> {
    let base = original(cfg, run, data, kind)?;
    let arch = cfg.arch.for_kind(kind);
    let (tr, va) = (arch.samples(&data.train), arch.samples(&data.val));
    let out = prune_and_finetune(base, &tr, Some(&va), &cfg.effective_train(), &cfg.effective_schedule())?;
    log::info!("{kind} pruned to {:.1}% sparsity", 100.0 * out.mask.sparsity());
    save_model(cfg, "prune", &run.dense_model(kind, Stage::Pruned), &out.net, &full_meta(&data.train))?;
    save_history(cfg, "prune", &run.history(kind, Stage::Pruned), &out.history)?;
    Ok(out.net)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub k: usize,
    pub indices: Vec<usize>,
    pub features: Vec<String>,
    pub share: f64,
}

pub fn stage_select(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind) -> Result<Selection> {
    let base = original(cfg, run, data, kind)?;
    let report = explain_model(&base, &data.train, &data.test, &cfg.effective_shap())?.0;
    let shap_path = run.shap_report(kind);
    ensure_parent(&shap_path)?;
    report.write_csv(&shap_path)?;
    record(cfg, "select-features", &[shap_path])?;
    fs_stage(cfg, run, data, kind, report)
}

fn fs_stage(cfg: &RunConfig, run: &RunDir, data: &Splits, kind: ModelKind, report: AttributionReport) -> Result<Selection> {
    let fs_cfg = FsPruneConfig {
        architecture: cfg.arch.for_kind(kind).clone(),
        train: cfg.effective_train(),
        schedule: cfg.effective_schedule(),
        shap: cfg.effective_shap(),
        k: cfg.select.k,
        seed: cfg.seed(),
    };
    let out = fs_prune_from_report(report, &data.train, &data.val, &fs_cfg)?;
    let selection = Selection {
        k: cfg.select.k,
        features: out.selected.iter().map(|&i| data.train.feature_names()[i].clone()).collect(),
        indices: out.selected.clone(),
        share: out.share,
    };
    log::info!("{kind}: top-{} features hold {:.1}% of mean |shap|", selection.k, 100.0 * selection.share);
    save_model(cfg, "select-features", &run.dense_model(kind, Stage::FsPruned), &out.pruned.net, &out.sparse.meta)?;
    save_history(cfg, "select-features", &run.history(kind, Stage::FsPruned), &out.pruned.history)?;
    std::fs::write(run.selection(kind), serde_json::to_string_pretty(&selection)? + "\n")?;
    record(cfg, "select-features", &[run.selection(kind)])?;
    Ok(selection)
}

/// Converts the pruned and feature-selected dense models to SPIF files.
pub fn stage_convert(cfg: &RunConfig, run: &RunDir, kind: ModelKind) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for stage in [Stage::Pruned, Stage::FsPruned] {
        let (model, meta) = load_dense(&run.dense_model(kind, stage))?;
        let sparse = SparseModel::from_model(&model, meta)?;
        let path = run.sparse_model(kind, stage);
        let payload = serialize_sparse(&sparse, &path)?;
        log::info!("{} -> {payload} payload bytes", path.display());
        record(cfg, "convert-sparse", std::slice::from_ref(&path))?;
        out.push(path);
    }
    Ok(out)
}

/// Inputs of `data` shaped for a model of `kind` with full source width.
pub fn engine_inputs(kind: ModelKind, window: usize, data: &Dataset) -> (Vec<Vec<f32>>, Vec<usize>) {
    let set = Architecture { kind, hidden: Vec::new(), window }.samples(data);
    let inputs = (0..set.len()).map(|i| set.input(i).iter().map(|&v| v as f32).collect()).collect();
    (inputs, set.labels().to_vec())
}

fn bench_engine<M: MatVec>(
    engine: &InferenceModel<M>,
    data: &Dataset,
    lat: &LatencyConfig,
) -> Result<(crate::bench::Metrics, crate::bench::Latency)> {
    let (inputs, labels) = engine_inputs(engine.kind(), engine.window(), data);
    let pred = inputs.iter().map(|x| engine.predict(x).map(|p| argmax(&p))).collect::<Result<Vec<_>>>()?;
    let metrics = compute_metrics(&pred, &labels)?;
    let latency = measure_latency(&inputs, lat, |x| engine.predict(x))?;
    Ok((metrics, latency))
}

/// Whether every artifact `bench` reads already exists.
pub fn bench_ready(cfg: &RunConfig, run: &RunDir) -> bool {
    run.dataset_info().exists()
        && cfg.models.iter().all(|&k| Stage::ALL.iter().all(|&s| run.bench_model(k, s).exists()))
}

/// Produces every missing artifact up to the SPIF files.
pub fn ensure_artifacts(cfg: &RunConfig, run: &RunDir) -> Result<Splits> {
    let data = splits(cfg, run)?;
    for &kind in &cfg.models {
        if !run.dense_model(kind, Stage::Original).exists() {
            stage_train(cfg, run, &data, kind)?;
        }
        if !run.dense_model(kind, Stage::Pruned).exists() {
            stage_prune(cfg, run, &data, kind)?;
        }
        if !run.dense_model(kind, Stage::FsPruned).exists() {
            stage_select(cfg, run, &data, kind)?;
        }
        if [Stage::Pruned, Stage::FsPruned].iter().any(|&s| !run.sparse_model(kind, s).exists()) {
            stage_convert(cfg, run, kind)?;
        }
    }
    Ok(data)
}

/// Three-stage evaluation on the test split: dense engine for the original
/// model, sparse engine for both pruned models.
pub fn stage_bench(cfg: &RunConfig, run: &RunDir) -> Result<BenchReport> {
    let data = ensure_artifacts(cfg, run)?;
    let lat = LatencyConfig { fraction: cfg.bench.latency_fraction, repeats: cfg.bench.repeats, seed: cfg.seed() };
    let mut report = BenchReport::default();
    let mut raw = Vec::new();
    for &kind in &cfg.models {
        for stage in Stage::ALL {
            let path = run.bench_model(kind, stage);
            let (metrics, latency) = match stage {
                Stage::Original => {
                    let (model, meta) = load_dense(&path)?;
                    bench_engine(&DenseEngine::from_model(&model, meta)?, &data.test, &lat)?
                }
                _ => bench_engine(&deserialize_sparse(&path)?, &data.test, &lat)?,
            };
            raw.push((kind, stage, latency.clone()));
            report.push(BenchRow { model: kind.to_string(), stage, metrics, latency_ms: latency.ms_per_sample, size_kb: measure_size(&path)? });
        }
    }
    report.write_csv(&run.report_csv())?;
    report.write_markdown(&run.report_md())?;
    let mut written = vec![run.report_csv(), run.report_md()];
    if cfg.bench.dump_raw {
        let mut w = csv::Writer::from_path(run.latency_raw())?;
        w.write_record(["model", "stage", "repeat", "samples", "ms_per_sample"])?;
        for (kind, stage, l) in &raw {
            for (i, v) in l.repeats_ms.iter().enumerate() {
                w.write_record([kind.to_string(), stage.as_str().into(), i.to_string(), l.count.to_string(), format!("{v:.9}")])?;
            }
        }
        w.flush()?;
        written.push(run.latency_raw());
    }
    record(cfg, "bench", &written)?;
    Ok(report)
}

/// Either model container behind one prediction interface.
pub enum AnyEngine {
    Dense(DenseEngine),
    Sparse(SparseModel),
}

impl AnyEngine {
    pub fn load(path: &Path) -> Result<Self> {
        match crate::bench::detect_format(path)? {
            crate::bench::ModelFormat::Sparse => Ok(AnyEngine::Sparse(deserialize_sparse(path)?)),
            crate::bench::ModelFormat::Dense => {
                let (model, meta) = load_dense(path)?;
                Ok(AnyEngine::Dense(DenseEngine::from_model(&model, meta)?))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyEngine::Dense(e) => e.kind(),
            AnyEngine::Sparse(e) => e.kind(),
        }
    }

    pub fn window(&self) -> usize {
        match self {
            AnyEngine::Dense(e) => e.window(),
            AnyEngine::Sparse(e) => e.window(),
        }
    }

    pub fn meta(&self) -> &ModelMeta {
        match self {
            AnyEngine::Dense(e) => &e.meta,
            AnyEngine::Sparse(e) => &e.meta,
        }
    }

    pub fn predict(&self, x: &[f32]) -> Result<Vec<f32>> {
        match self {
            AnyEngine::Dense(e) => e.predict(x),
            AnyEngine::Sparse(e) => e.predict(x),
        }
    }
}

/// Reads feature rows from a CSV; a `class` column, if present, is ignored.
pub fn read_feature_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| header[i] != "class").collect();
    let mut rows = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow { row, expected: header.len(), found: rec.len() });
        }
        rows.push(
            keep.iter()
                .map(|&i| rec[i].trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {row}, column `{}`: {:?}", header[i], &rec[i]))))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok((keep.into_iter().map(|i| header[i].clone()).collect(), rows))
}

/// Class probabilities for every sample of a feature CSV. LSTM models see
/// sliding windows ending at each row from `window - 1` on.
pub fn infer_csv(engine: &AnyEngine, input: &Path) -> Result<Vec<Vec<f32>>> {
    let (names, rows) = read_feature_rows(input)?;
    let d = names.len();
    let features: Vec<f64> = rows.into_iter().flatten().collect();
    let n = features.len() / d.max(1);
    let classes = engine.meta().class_names.clone();
    let data = Dataset::new(features, vec![0; n], names, classes)?;
    let (inputs, _) = engine_inputs(engine.kind(), engine.window(), &data);
    inputs.iter().map(|x| engine.predict(x)).collect()
}

pub fn write_predictions(path: &Path, class_names: &[String], probs: &[Vec<f32>]) -> Result<()> {
    ensure_parent(path)?;
    write_predictions_to(std::fs::File::create(path)?, class_names, probs)
}

/// `sample,predicted,p_<class>...` rows.
pub fn write_predictions_to(out: impl std::io::Write, class_names: &[String], probs: &[Vec<f32>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample".to_string(), "predicted".to_string()];
    header.extend(class_names.iter().map(|c| format!("p_{c}")));
    w.write_record(&header)?;
    for (i, p) in probs.iter().enumerate() {
        let mut rec = vec![i.to_string(), class_names.get(argmax(p)).cloned().unwrap_or_default()];
        rec.extend(p.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::new(dir.path());
        assert!(run.sparse_model(ModelKind::Lstm, Stage::FsPruned).ends_with("models/lstm_fs_pruned.spif"));
        assert!(sidecar_path(&run.report_csv()).ends_with("reports/report.csv.meta.json"));
        let cfg = RunConfig { seed: Some(4), ..Default::default() };
        let f = dir.path().join("a.txt");
        std::fs::write(&f, "x").unwrap();
        record(&cfg, "test", std::slice::from_ref(&f)).unwrap();
        let meta: Sidecar = serde_json::from_slice(&std::fs::read(sidecar_path(&f)).unwrap()).unwrap();
        assert_eq!(meta.seed, 4);
        assert_eq!(meta.config_sha256, cfg.hash());
        assert_eq!(meta.config_sha256.len(), 64);
    }

    #[test]
    fn feature_rows_skip_the_class_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,class,b\n1,DoS,2\n3,Benign,4.5\n").unwrap();
        let (names, rows) = read_feature_rows(&p).unwrap();
        assert_eq!(names, vec!["a", "b"]);
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        std::fs::write(&p, "a,b\n1,x\n").unwrap();
        assert!(matches!(read_feature_rows(&p), Err(Error::Parse(_))));
    }
}
