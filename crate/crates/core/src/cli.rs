//! Command-line front end. Every run writes `resolved-config.json` next to its
//! outputs with all defaults filled in.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 bad arguments or input files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::embedding::Neighborhood;
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, compare, knn_classify};
use crate::io;
use crate::masked::{Dissimilarity, MaskedDataset};
use crate::pipeline::{mr_missing, project_new_points, repair_corrupted, PipelineConfig};
use crate::repair::{check_metric_capped, RepairConfig};
use crate::synthetic::{self, corrupt_distances_gaussian, generate, mask_bernoulli, mask_uniform_fraction, ManifoldKind, ManifoldSpec};
use crate::theory::{monte_carlo_bound_check, optimize_gamma, TheoryParams};

/// Triples kept in violation reports written to disk.
const REPORT_CAP: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "manifold-repair", version, about = "Isomap embeddings of incomplete data via metric repair")]
pub struct Cli {
    /// Seed for every random operation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, env = "MANIFOLD_REPAIR_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic manifold, optionally masked.
    Synth(SynthArgs),
    /// Masked distances, metric repair and Isomap on a dataset.
    Embed(EmbedArgs),
    /// Repair a distance matrix into a metric and embed it.
    Repair(RepairArgs),
    /// Compare two embeddings of the same points.
    Evaluate(EvaluateArgs),
    /// Monte Carlo check of the separation bound.
    TheoryCheck(TheoryArgs),
    /// k-nearest-neighbor classification in embedding space.
    Classify(ClassifyArgs),
    /// Convert MNIST IDX files to dataset and label CSVs.
    IngestMnist(MnistArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// M1..M6 or swissroll.
    #[arg(long, value_parser = parse_manifold)]
    pub manifold: ManifoldKind,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[command(flatten)]
    pub masking: MaskArgs,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct MaskArgs {
    /// Hide exactly this fraction of all entries, chosen uniformly.
    #[arg(long, conflicts_with = "p_present")]
    pub mask_fraction: Option<f64>,
    /// Keep each entry independently with this probability.
    #[arg(long)]
    pub p_present: Option<f64>,
}

impl MaskArgs {
    fn apply(&self, data: MaskedDataset, seed: u64) -> Result<MaskedDataset> {
        match (self.mask_fraction, self.p_present) {
            (Some(f), _) => mask_uniform_fraction(&data, f, seed),
            (None, Some(p)) => mask_bernoulli(&data, p, seed),
            (None, None) => Ok(data),
        }
    }

    fn active(&self) -> bool {
        self.mask_fraction.is_some() || self.p_present.is_some()
    }
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct EmbedParams {
    /// Neighbors per point in the k-NN graph.
    #[arg(long, default_value_t = 10, conflicts_with = "epsilon")]
    pub k: usize,
    /// Use an epsilon-ball graph instead of k-NN.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Embedding dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Repair passes before giving up.
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    /// Absolute repair tolerance; default 1e-9 times the largest distance.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl EmbedParams {
    fn neighborhood(&self) -> Neighborhood {
        match self.epsilon {
            Some(e) => Neighborhood::Epsilon(e),
            None => Neighborhood::Knn(self.k),
        }
    }

    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            neighborhood: self.neighborhood(),
            dim: self.dim,
            repair: RepairConfig {
                max_iters: self.max_iters,
                tol: self.tol,
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    /// Dataset CSV; empty fields or NaN are missing.
    #[arg(long)]
    pub data: PathBuf,
    /// 0/1 mask CSV overriding the missing markers in the dataset.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub masking: MaskArgs,
    #[command(flatten)]
    pub params: EmbedParams,
    /// Dataset of new points to project into the embedding.
    #[arg(long)]
    pub extend: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RepairArgs {
    /// Dense distance matrix CSV.
    #[arg(long)]
    pub distances: PathBuf,
    /// Add Gaussian noise with this standard deviation before repairing.
    #[arg(long)]
    pub corrupt_sigma: Option<f64>,
    /// Only repair; skip the embedding.
    #[arg(long)]
    pub no_embed: bool,
    #[command(flatten)]
    pub params: EmbedParams,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub candidate: PathBuf,
    /// Neighborhood size for the preservation score.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TheoryArgs {
    /// JSON object with n, mu1, mu2, p_present, epsilon and optionally gamma.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Grid points searched when gamma is not given.
    #[arg(long, default_value_t = 999)]
    pub gamma_grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MnistArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Keep only these digits (comma separated); default all.
    #[arg(long, value_delimiter = ',')]
    pub digits: Vec<u8>,
    /// Keep the first this many images per digit, in file order.
    #[arg(long)]
    pub per_digit: Option<usize>,
    /// Keep the first this many matching images overall.
    #[arg(long)]
    pub limit: Option<usize>,
}

fn parse_manifold(s: &str) -> std::result::Result<ManifoldKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Serialize)]
struct Resolved<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    threads: usize,
    out_dir: &'a Path,
    generator: &'a str,
    version: &'a str,
    args: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pipeline: Option<PipelineConfig>,
}

struct Ctx<'a> {
    seed: u64,
    threads: usize,
    out: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_config<T: Serialize>(&self, command: &str, args: &T, pipeline: Option<PipelineConfig>) -> Result<()> {
        io::write_json(
            &self.path("resolved-config.json"),
            &Resolved {
                command,
                seed: self.seed,
                threads: self.threads,
                out_dir: self.out,
                generator: synthetic::GENERATOR,
                version: env!("CARGO_PKG_VERSION"),
                args,
                pipeline,
            },
        )
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", io::to_sorted_json(value)?);
    Ok(())
}

fn intrinsic_header(kind: ManifoldKind) -> &'static [&'static str] {
    match kind {
        ManifoldKind::M1 | ManifoldKind::M2 => &["u1", "u2"],
        ManifoldKind::M3 | ManifoldKind::M4 => &["x", "y"],
        ManifoldKind::M5 | ManifoldKind::SwissRoll => &["t", "h"],
        ManifoldKind::M6 => &["u"],
    }
}

fn synth(ctx: &Ctx, args: &SynthArgs) -> Result<()> {
    let sample = generate(&ManifoldSpec {
        kind: args.manifold,
        n: args.n,
        seed: ctx.seed,
    })?;
    let header: Vec<String> = (1..=sample.data.m()).map(|c| format!("x{c}")).collect();
    io::write_table(&ctx.path("intrinsic.csv"), intrinsic_header(args.manifold), &sample.intrinsic)?;
    if args.masking.active() {
        let masked = args.masking.apply(sample.data.clone(), ctx.seed)?;
        io::write_dataset(&ctx.path("dataset.csv"), &masked, Some(&header))?;
        io::write_dataset(&ctx.path("dataset_full.csv"), &sample.data, Some(&header))?;
        io::write_mask(&ctx.path("mask.csv"), &masked)?;
        eprintln!("{} x {} points, {} entries masked", masked.n(), masked.m(), masked.missing_count());
    } else {
        io::write_dataset(&ctx.path("dataset.csv"), &sample.data, Some(&header))?;
        eprintln!("{} x {} points", sample.data.n(), sample.data.m());
    }
    ctx.write_config("synth", args, None)
}

fn load_dataset(data: &Path, mask: Option<&Path>) -> Result<MaskedDataset> {
    let d = io::read_dataset(data)?;
    match mask {
        Some(path) => {
            let mask = io::read_mask(path, d.n(), d.m())?;
            d.with_mask(mask)
        }
        None => Ok(d),
    }
}

fn check_dim(n: usize, dim: usize) -> Result<()> {
    if dim < 1 || dim > n {
        return Err(Error::param(format!("--dim must be in 1..={n}, got {dim}")));
    }
    Ok(())
}

fn embed(ctx: &Ctx, args: &EmbedArgs) -> Result<()> {
    let data = load_dataset(&args.data, args.mask.as_deref())?;
    let data = args.masking.apply(data, ctx.seed)?;
    let config = args.params.config();
    ctx.write_config("embed", args, Some(config))?;
    check_dim(data.n(), config.dim)?;
    let result = mr_missing(&data, &config)?;
    io::write_embedding(&ctx.path("embedding.csv"), &result.embedding)?;
    io::write_eigenvalues(&ctx.path("eigenvalues.csv"), &result.embedding.eigenvalues)?;
    io::write_matrix(&ctx.path("distances.csv"), result.dissimilarity.matrix())?;
    io::write_matrix(&ctx.path("repair.csv"), result.repair.matrix())?;
    io::write_json(&ctx.path("diagnostics.json"), &result.diagnostics)?;
    if let Some(path) = &args.extend {
        let new = io::read_dataset(path)?;
        let coords = project_new_points(&result, &data, &new, config.neighborhood)?;
        io::write_coords(&ctx.path("extended.csv"), &coords, &(0..new.n()).collect::<Vec<_>>())?;
    }
    print_json(&result.diagnostics)
}

fn repair(ctx: &Ctx, args: &RepairArgs) -> Result<()> {
    let matrix = io::read_matrix(&args.distances)?;
    let original = Dissimilarity::new(matrix).map_err(|e| Error::Format {
        path: args.distances.clone(),
        message: e.to_string(),
    })?;
    let config = args.params.config();
    ctx.write_config("repair", args, Some(config))?;
    let d = match args.corrupt_sigma {
        Some(sigma) => {
            let c = corrupt_distances_gaussian(&original, sigma, ctx.seed)?;
            io::write_matrix(&ctx.path("corrupted.csv"), c.matrix())?;
            c
        }
        None => original,
    };
    let tol = config.repair.resolve_tol(&d);
    let before = check_metric_capped(&d, tol, REPORT_CAP);
    io::write_violations(&ctx.path("violations_before.jsonl"), &before)?;
    let (repaired, delta, diagnostics) = if args.no_embed {
        let outcome = config.repair.run(&d)?;
        let diag = json!({
            "repair_iterations": outcome.iterations,
            "repair_l0": outcome.delta.l0(),
            "repair_tol": tol,
        });
        (outcome.delta.apply(&d), outcome.delta, diag)
    } else {
        check_dim(d.n(), config.dim)?;
        let result = repair_corrupted(&d, &config)?;
        io::write_embedding(&ctx.path("embedding.csv"), &result.embedding)?;
        io::write_eigenvalues(&ctx.path("eigenvalues.csv"), &result.embedding.eigenvalues)?;
        (result.repaired(), result.repair, serde_json::to_value(&result.diagnostics)?)
    };
    let after = check_metric_capped(&repaired, tol, REPORT_CAP);
    io::write_violations(&ctx.path("violations_after.jsonl"), &after)?;
    io::write_matrix(&ctx.path("repaired.csv"), repaired.matrix())?;
    io::write_matrix(&ctx.path("repair.csv"), delta.matrix())?;
    let summary = json!({
        "diagnostics": diagnostics,
        "violations_before": before.count,
        "violations_after": after.count,
        "max_slack_before": before.max_slack,
    });
    io::write_json(&ctx.path("diagnostics.json"), &summary)?;
    print_json(&summary)
}

fn evaluate(ctx: &Ctx, args: &EvaluateArgs) -> Result<()> {
    ctx.write_config("evaluate", args, None)?;
    let (ref_idx, reference) = io::read_embedding(&args.reference)?;
    let (cand_idx, candidate) = io::read_embedding(&args.candidate)?;
    if reference.shape() != candidate.shape() {
        return Err(Error::shape(format!(
            "reference is {}x{}, candidate is {}x{}",
            reference.nrows(),
            reference.ncols(),
            candidate.nrows(),
            candidate.ncols()
        )));
    }
    if ref_idx != cand_idx {
        return Err(Error::shape("embeddings cover different point indices"));
    }
    let metrics = compare(&reference, &candidate, args.k)?;
    io::write_json(&ctx.path("metrics.json"), &metrics)?;
    print_json(&metrics)
}

#[derive(serde::Deserialize)]
struct TheoryInput {
    n: usize,
    mu1: f64,
    mu2: f64,
    p_present: f64,
    epsilon: f64,
    gamma: Option<f64>,
}

fn theory_check(ctx: &Ctx, args: &TheoryArgs) -> Result<()> {
    let input: TheoryInput = io::read_json(&args.params)?;
    let mut params = TheoryParams {
        n: input.n,
        mu1: input.mu1,
        mu2: input.mu2,
        p_present: input.p_present,
        epsilon: input.epsilon,
        gamma: input.gamma.unwrap_or(f64::NAN),
    };
    if input.gamma.is_none() {
        params.gamma = optimize_gamma(&params, args.gamma_grid)?.0;
    }
    ctx.write_config("theory-check", &json!({ "cli": args, "params": params }), None)?;
    let report = monte_carlo_bound_check(&params, args.trials, ctx.seed)?;
    io::write_json(&ctx.path("theory.json"), &report)?;
    print_json(&report)
}

fn classify(ctx: &Ctx, args: &ClassifyArgs) -> Result<()> {
    ctx.write_config("classify", args, None)?;
    let (_, train) = io::read_embedding(&args.train)?;
    let (_, test) = io::read_embedding(&args.test)?;
    let train_labels = io::read_labels(&args.train_labels)?;
    let test_labels = io::read_labels(&args.test_labels)?;
    if test_labels.len() != test.nrows() {
        return Err(Error::shape(format!("{} test labels for {} test points", test_labels.len(), test.nrows())));
    }
    let predicted = knn_classify(&train, &train_labels, &test, args.k)?;
    let acc = accuracy(&predicted, &test_labels)?;
    io::write_labels(&ctx.path("predictions.csv"), &predicted)?;
    let out = json!({ "accuracy": acc, "k": args.k, "test_points": test.nrows(), "train_points": train.nrows() });
    io::write_json(&ctx.path("classification.json"), &out)?;
    print_json(&out)
}

/// Image indices in file order, filtered by digit, capped per digit and overall.
pub fn select_mnist(labels: &[u8], digits: &[u8], per_digit: Option<usize>, limit: Option<usize>) -> Vec<usize> {
    let mut taken = [0usize; 256];
    let mut out = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if limit.is_some_and(|cap| out.len() >= cap) {
            break;
        }
        if !digits.is_empty() && !digits.contains(&l) {
            continue;
        }
        if per_digit.is_some_and(|cap| taken[l as usize] >= cap) {
            continue;
        }
        taken[l as usize] += 1;
        out.push(i);
    }
    out
}

fn ingest_mnist(ctx: &Ctx, args: &MnistArgs) -> Result<()> {
    ctx.write_config("ingest-mnist", args, None)?;
    let images = io::read_idx_images(&args.images)?;
    let labels = io::read_idx_labels(&args.labels)?;
    if labels.len() != images.count {
        return Err(Error::shape(format!("{} labels for {} images", labels.len(), images.count)));
    }
    let select = select_mnist(&labels, &args.digits, args.per_digit, args.limit);
    let data = images.dataset(&select)?;
    let header: Vec<String> = (0..images.pixel_count()).map(|p| format!("px{p}")).collect();
    io::write_dataset(&ctx.path("dataset.csv"), &data, Some(&header))?;
    let chosen: Vec<usize> = select.iter().map(|&i| usize::from(labels[i])).collect();
    io::write_labels(&ctx.path("labels.csv"), &chosen)?;
    eprintln!("{} images x {} pixels", data.n(), data.m());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|source| Error::Io {
        path: cli.out_dir.clone(),
        source,
    })?;
    let ctx = Ctx {
        seed: cli.seed,
        threads: cli.threads,
        out: &cli.out_dir,
    };
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Embed(a) => embed(&ctx, a),
        Command::Repair(a) => repair(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::TheoryCheck(a) => theory_check(&ctx, a),
        Command::Classify(a) => classify(&ctx, a),
        Command::IngestMnist(a) => ingest_mnist(&ctx, a),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_pipeline_failure() {
        1
    } else {
        2
    }
}

/// Parses `args`, runs the command on a pool of the requested size and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} threads: {e}", cli.threads);
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
