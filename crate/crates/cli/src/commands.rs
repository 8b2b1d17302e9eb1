//! One runner per subcommand. Each loads its config, writes its artifacts
//! through a [`RunWriter`] and returns a one-line summary.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ovnet_core::geometry::{
    read_clusters_json, read_planes_json, write_clusters_json, write_planes_json,
};
use ovnet_core::metrics::{centroid_accuracy, write_scores_csv};
use ovnet_core::synthesis::DEFAULT_BETA;
use ovnet_core::{
    canonical_planes, evaluate_accuracy, generate_level_r, incremental_separate, init_weights,
    nested_clusters, op_count_report, score_architecture, synthesize_three_layer, train_backprop,
    verify_separation, ArchitectureScore, ClusterSummary, CollectionKind, FeedForwardNet,
    Hyperplane, LabeledDataset, NestedCubeSpec, PlannerConfig, SynthesisInput, TrainConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, Loaded, Overrides};
use crate::error::CliError;
use crate::output::RunWriter;

pub const COMMANDS: [&str; 9] = [
    "generate",
    "planes",
    "plan",
    "synthesize",
    "train",
    "eval",
    "score",
    "compare",
    "verify",
];

pub fn run(command: &str, config: &Path, overrides: Overrides) -> Result<String, CliError> {
    match command {
        "generate" => generate(load(config, command, overrides)?),
        "planes" => planes(load(config, command, overrides)?),
        "plan" => plan(load(config, command, overrides)?),
        "synthesize" => synthesize(load(config, command, overrides)?),
        "train" => train(load(config, command, overrides)?),
        "eval" => eval(load(config, command, overrides)?),
        "score" => score(load(config, command, overrides)?),
        "compare" => compare(load(config, command, overrides)?),
        "verify" => verify(load(config, command, overrides)?),
        other => Err(CliError::validation(format!("unknown command {other:?}"))),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(path, e))
}

fn read_dataset(path: &Path) -> Result<LabeledDataset, CliError> {
    LabeledDataset::read_csv(open(path)?).map_err(|e| CliError::input(path, e))
}

fn read_planes(path: &Path) -> Result<Vec<Hyperplane>, CliError> {
    read_planes_json(open(path)?).map_err(|e| CliError::input(path, e))
}

fn read_clusters(path: &Path) -> Result<Vec<ClusterSummary>, CliError> {
    read_clusters_json(open(path)?).map_err(|e| CliError::input(path, e))
}

fn read_model(path: &Path) -> Result<FeedForwardNet, CliError> {
    FeedForwardNet::load_json(open(path)?).map_err(|e| CliError::input(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateParams {
    pub n: usize,
    pub r: usize,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub train_per_cluster: Option<usize>,
    #[serde(default)]
    pub test_per_cluster: Option<usize>,
}

fn generate(run: Loaded<GenerateParams>) -> Result<String, CliError> {
    let p = &run.params;
    let defaults = NestedCubeSpec::new(p.n, p.r, run.seed);
    let spec = NestedCubeSpec {
        radius: p.radius.unwrap_or(defaults.radius),
        train_per_cluster: p.train_per_cluster.unwrap_or(defaults.train_per_cluster),
        test_per_cluster: p.test_per_cluster.unwrap_or(defaults.test_per_cluster),
        ..defaults
    };
    let (train, test) = generate_level_r(&spec).map_err(|e| CliError::from_core("dataset", e))?;
    let clusters = nested_clusters(&spec).map_err(|e| CliError::from_core("dataset", e))?;

    let mut w = RunWriter::new(&run)?;
    w.write_with("train.csv", |b| train.write_csv(b))?;
    w.write_with("test.csv", |b| test.write_csv(b))?;
    w.write_with("clusters.json", |b| write_clusters_json(&clusters, b))?;
    w.write_report(
        "dataset_spec.json",
        &json!({
            "spec": spec,
            "clusters": clusters.len(),
            "classes": spec.class_count(),
            "train_samples": train.len(),
            "test_samples": test.len(),
        }),
    )?;
    let dir = w.finish()?;
    Ok(format!(
        "generated {} train and {} test samples over {} clusters in {}",
        train.len(),
        test.len(),
        clusters.len(),
        dir.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanesParams {
    pub n: usize,
    pub r: usize,
}

fn planes(run: Loaded<PlanesParams>) -> Result<String, CliError> {
    let planes = canonical_planes(run.params.n, run.params.r)
        .map_err(|e| CliError::from_core("planes", e))?;
    let mut w = RunWriter::new(&run)?;
    w.write_with("planes.json", |b| write_planes_json(&planes, b))?;
    let dir = w.finish()?;
    Ok(format!(
        "wrote {} planes to {}",
        planes.len(),
        dir.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    pub clusters: PathBuf,
    #[serde(default)]
    pub initial_planes: Option<PathBuf>,
    /// Its `seed` is replaced by the run seed.
    #[serde(default)]
    pub planner: PlannerConfig,
}

fn plan(mut run: Loaded<PlanParams>) -> Result<String, CliError> {
    run.params.planner.seed = run.seed;
    let clusters = read_clusters(&run.input(&run.params.clusters))?;
    let initial = match &run.params.initial_planes {
        Some(p) => read_planes(&run.input(p))?,
        None => Vec::new(),
    };
    let (planes, trace) = incremental_separate(&clusters, &initial, &run.params.planner)
        .map_err(|e| CliError::from_core("plan", e))?;
    let report =
        verify_separation(&planes, &clusters).map_err(|e| CliError::from_core("plan", e))?;

    let mut w = RunWriter::new(&run)?;
    w.write_with("planes.json", |b| write_planes_json(&planes, b))?;
    w.write_report("trace.json", &trace)?;
    w.write_report("separation.json", &report)?;
    let dir = w.finish()?;
    Ok(format!(
        "{} planes separate {} clusters ({} inserted, {} refits, estimate {}) in {}",
        planes.len(),
        clusters.len(),
        trace.insertions,
        trace.refits,
        trace.estimated_planes,
        dir.display()
    ))
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeParams {
    pub planes: PathBuf,
    pub clusters: PathBuf,
    /// Defaults to one more than the largest cluster label.
    #[serde(default)]
    pub class_count: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub collection: CollectionKind,
}

fn synthesized_net<P>(run: &Loaded<P>, p: &SynthesizeParams) -> Result<FeedForwardNet, CliError> {
    let planes = read_planes(&run.input(&p.planes))?;
    let clusters = read_clusters(&run.input(&p.clusters))?;
    let class_count = p.class_count.unwrap_or_else(|| {
        clusters
            .iter()
            .map(|c| c.class_label + 1)
            .max()
            .unwrap_or(0)
    });
    let input = SynthesisInput::new(planes, clusters, class_count).with_beta(p.beta);
    synthesize_three_layer(&input, p.collection).map_err(|e| CliError::from_core("synthesize", e))
}

fn synthesize(run: Loaded<SynthesizeParams>) -> Result<String, CliError> {
    let net = synthesized_net(&run, &run.params)?;
    let mut w = RunWriter::new(&run)?;
    w.write_with("model.json", |b| net.save_json(b))?;
    let dir = w.finish()?;
    Ok(format!(
        "synthesized {} network ({} weights) in {}",
        arch_label(&net.architecture()),
        net.count_weights(),
        dir.display()
    ))
}

fn arch_label(arch: &[usize]) -> String {
    arch.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    pub train: PathBuf,
    #[serde(default)]
    pub test: Option<PathBuf>,
    pub architecture: Vec<usize>,
    /// Its `seed` is replaced by the run seed.
    #[serde(default)]
    pub training: TrainConfig,
}

fn check_architecture(arch: &[usize], data: &LabeledDataset) -> Result<(), CliError> {
    let (Some(&first), Some(&last)) = (arch.first(), arch.last()) else {
        return Err(CliError::validation("field `architecture` is empty"));
    };
    if first != data.dim {
        return Err(CliError::validation(format!(
            "field `architecture` starts with {first} inputs but the data has {} features",
            data.dim
        )));
    }
    if last < data.class_count() {
        return Err(CliError::validation(format!(
            "field `architecture` ends with {last} outputs but the data has {} classes",
            data.class_count()
        )));
    }
    Ok(())
}

fn train_one(
    arch: &[usize],
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, ovnet_core::TrainReport), CliError> {
    let label = arch_label(arch);
    let net = init_weights(arch, cfg.seed, cfg.init_scale, cfg.beta)
        .map_err(|e| CliError::from_core(&label, e))?;
    train_backprop(net, train, test, cfg).map_err(|e| CliError::from_core(&label, e))
}

fn empty_like(d: &LabeledDataset) -> LabeledDataset {
    LabeledDataset {
        dim: d.dim,
        samples: Vec::new(),
        clusters: Vec::new(),
    }
}

fn train(mut run: Loaded<TrainParams>) -> Result<String, CliError> {
    run.params.training.seed = run.seed;
    let p = &run.params;
    let train = read_dataset(&run.input(&p.train))?;
    let test = match &p.test {
        Some(t) => read_dataset(&run.input(t))?,
        None => empty_like(&train),
    };
    check_architecture(&p.architecture, &train)?;
    let (net, report) = train_one(&p.architecture, &train, &test, &p.training)?;

    let mut w = RunWriter::new(&run)?;
    w.write_with("model.json", |b| net.save_json(b))?;
    w.write_report("train_report.json", &report)?;
    w.write_with("losses.csv", |b| report.write_losses_csv(b))?;
    let dir = w.finish()?;
    Ok(format!(
        "trained {} for {} epochs: train {:.3}% test {:.3}% in {}",
        arch_label(&p.architecture),
        report.epochs_run,
        report.final_train_accuracy * 100.0,
        report.final_test_accuracy * 100.0,
        dir.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalParams {
    pub model: PathBuf,
    pub datasets: Vec<PathBuf>,
}

#[derive(Serialize)]
struct EvalResult {
    dataset: String,
    samples: usize,
    accuracy: f64,
}

fn eval(run: Loaded<EvalParams>) -> Result<String, CliError> {
    if run.params.datasets.is_empty() {
        return Err(CliError::validation("field `datasets` is empty"));
    }
    let net = read_model(&run.input(&run.params.model))?;
    let mut results = Vec::new();
    for d in &run.params.datasets {
        let path = run.input(d);
        let data = read_dataset(&path)?;
        let accuracy = evaluate_accuracy(&net, &data).map_err(|e| CliError::input(&path, e))?;
        results.push(EvalResult {
            dataset: d.display().to_string(),
            samples: data.len(),
            accuracy,
        });
    }
    let mut w = RunWriter::new(&run)?;
    w.write_report(
        "accuracy.json",
        &json!({
            "model": run.params.model.display().to_string(),
            "architecture": net.architecture(),
            "results": results,
        }),
    )?;
    let dir = w.finish()?;
    let summary: Vec<String> = results
        .iter()
        .map(|r| format!("{} {:.3}%", r.dataset, r.accuracy * 100.0))
        .collect();
    Ok(format!("{} in {}", summary.join(", "), dir.display()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreParams {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Trained from scratch, in parallel.
    #[serde(default)]
    pub architectures: Vec<Vec<usize>>,
    /// Its `seed` is replaced by the run seed.
    #[serde(default)]
    pub training: TrainConfig,
    /// Scored first when present.
    #[serde(default)]
    pub synthesized: Option<SynthesizeParams>,
}

fn score(mut run: Loaded<ScoreParams>) -> Result<String, CliError> {
    run.params.training.seed = run.seed;
    let p = &run.params;
    if p.architectures.is_empty() && p.synthesized.is_none() {
        return Err(CliError::validation(
            "fields `architectures` and `synthesized` are both empty",
        ));
    }
    let train = read_dataset(&run.input(&p.train))?;
    let test = read_dataset(&run.input(&p.test))?;
    for arch in &p.architectures {
        check_architecture(arch, &train)?;
    }

    let mut scores: Vec<ArchitectureScore> = Vec::new();
    if let Some(s) = &p.synthesized {
        let net = synthesized_net(&run, s)?;
        scores.push(
            score_architecture(&net, &train, &test)
                .map_err(|e| CliError::from_core("synthesized", e))?,
        );
    }
    let trained = p
        .architectures
        .par_iter()
        .map(|arch| {
            let (net, _) = train_one(arch, &train, &test, &p.training)?;
            score_architecture(&net, &train, &test)
                .map_err(|e| CliError::from_core(&arch_label(arch), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    scores.extend(trained);

    let mut w = RunWriter::new(&run)?;
    w.write_with("scores.csv", |b| write_scores_csv(&scores, b))?;
    w.write_report("scores.json", &json!({ "scores": scores }))?;
    let dir = w.finish()?;
    Ok(format!(
        "scored {} architectures in {}",
        scores.len(),
        dir.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareParams {
    /// Canonical nested-cube planes and clusters for `n`, `r`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    /// Or explicit plane and cluster files.
    #[serde(default)]
    pub planes: Option<PathBuf>,
    #[serde(default)]
    pub clusters: Option<PathBuf>,
    /// Scored with the nearest-centroid baseline when given.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
}

fn compare(run: Loaded<CompareParams>) -> Result<String, CliError> {
    let p = &run.params;
    let (planes, clusters) = match (p.n, p.r, &p.planes, &p.clusters) {
        (Some(n), Some(r), None, None) => {
            let spec = NestedCubeSpec::new(n, r, run.seed);
            (
                canonical_planes(n, r).map_err(|e| CliError::from_core("compare", e))?,
                nested_clusters(&spec).map_err(|e| CliError::from_core("compare", e))?,
            )
        }
        (None, None, Some(pl), Some(cl)) => {
            (read_planes(&run.input(pl))?, read_clusters(&run.input(cl))?)
        }
        _ => {
            return Err(CliError::validation(
                "give either fields `n` and `r` or fields `planes` and `clusters`",
            ))
        }
    };
    let dim = planes[0].dim();
    let ops = op_count_report(planes.len(), dim, clusters.len())
        .map_err(|e| CliError::from_core("compare", e))?;
    let baseline = match &p.dataset {
        Some(d) => {
            let path = run.input(d);
            let data = read_dataset(&path)?;
            Some(centroid_accuracy(&clusters, &data).map_err(|e| CliError::input(&path, e))?)
        }
        None => None,
    };

    let mut w = RunWriter::new(&run)?;
    w.write_report(
        "op_count.json",
        &json!({
            "planes": planes.len(),
            "dim": dim,
            "clusters": clusters.len(),
            "linear_ops": ops.linear_ops,
            "distance_ops": ops.distance_ops,
            "ratio": ops.ratio,
            "centroid_accuracy": baseline,
        }),
    )?;
    let dir = w.finish()?;
    Ok(format!(
        "{} plane multiply-adds vs {} distance multiply-adds per sample in {}",
        ops.linear_ops,
        ops.distance_ops,
        dir.display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub planes: PathBuf,
    pub clusters: PathBuf,
}

fn verify(run: Loaded<VerifyParams>) -> Result<String, CliError> {
    let planes = read_planes(&run.input(&run.params.planes))?;
    let clusters = read_clusters(&run.input(&run.params.clusters))?;
    let report =
        verify_separation(&planes, &clusters).map_err(|e| CliError::from_core("verify", e))?;
    let mut w = RunWriter::new(&run)?;
    w.write_report("separation.json", &report)?;
    let dir = w.finish()?;
    if report.is_separated() {
        Ok(format!(
            "{} planes give {} clusters distinct codes with no cuts ({})",
            planes.len(),
            clusters.len(),
            dir.display()
        ))
    } else {
        Err(CliError::runtime(format!(
            "{} duplicate code groups and {} cut clusters, see {}",
            report.duplicate_groups.len(),
            report.cut_clusters.len(),
            dir.join("separation.json").display()
        )))
    }
}
