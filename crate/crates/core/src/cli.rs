//! The `shx` command-line frontend.
//!
//! Stages communicate through versioned artifact files; every stage appends a
//! record with input and output digests to a JSON-lines run manifest.
//! Failures print exactly one line, `shx-error<TAB><Kind><TAB><message>`, to
//! standard error and exit non-zero.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifact::{self, ModelMeta};
use crate::construct::{
    construct_superhighway, ConstructOptions, ConstructionParams, DEFAULT_PAIR_CAP,
};
use crate::data::{export_tsv, generate_synthetic, ingest, IngestOptions, SynthConfig};
use crate::embed::{train, train_transfer, Backend, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, grid_search, split_side, EvalOptions, EvalReport, EvalSplit, GridCell, GridOptions,
    ParamRange, QueryMode, ResultTable, RunEcho, Similarity,
};
use crate::graph::{
    merge_highway, single_structure, stats, system_stats, CrossDomainSystem, DomainTag,
    StructureKind, TrainingStructure,
};
use crate::seed::derive_seed;

#[derive(Parser, Debug)]
#[command(
    name = "shx",
    version,
    about = "Cross-domain superhighway construction and evaluation"
)]
pub struct Cli {
    /// Master seed; each stage derives its own stream from it.
    #[arg(long, global = true, env = "SHX_SEED", default_value_t = 42)]
    pub seed: u64,

    /// Worker threads for construction and training. 1 is deterministic.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Flat `key=value` file whose keys mirror the long flags. Flags given on
    /// the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Run manifest to append to. Defaults to `manifest.jsonl` beside the
    /// first output.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load source/target TSV files into a system artifact.
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Generate a synthetic cross-domain system.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Build a training structure from a system.
    #[command(args_override_self = true)]
    Build(BuildArgs),
    /// Train node embeddings on a structure.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Score a model against the system's held-out interactions.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Search the alpha/beta grid for one backend.
    #[command(args_override_self = true)]
    Grid(GridArgs),
    /// Tabulate evaluation reports by structure and model.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Share of each eligible user's interactions held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    /// Domain whose users are split and evaluated.
    #[arg(long, default_value_t = DomainTag::Target)]
    pub eval_side: DomainTag,
    /// Keep every interaction; the artifact carries no split.
    #[arg(long)]
    pub no_split: bool,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep the weight column instead of binarizing.
    #[arg(long)]
    pub keep_weights: bool,
    /// Drop malformed lines with a warning instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub users_s: Option<usize>,
    #[arg(long)]
    pub users_t: Option<usize>,
    #[arg(long)]
    pub items_s: Option<usize>,
    #[arg(long)]
    pub items_t: Option<usize>,
    /// Fraction of target items shared with the source.
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub latent_dims: Option<usize>,
    /// Mean interactions per source user.
    #[arg(long)]
    pub interactions_s: Option<f64>,
    /// Mean interactions per target user.
    #[arg(long)]
    pub interactions_t: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Also write `source.tsv` and `target.tsv` (before splitting) here.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub structure: StructureKind,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Upper bound on enumerated candidate pairs.
    #[arg(long, default_value_t = DEFAULT_PAIR_CAP)]
    pub cap: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Default)]
pub struct TrainOpts {
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, visible_alias = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub min_learning_rate: Option<f64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hpe_walk_length: Option<usize>,
    /// MF L2 regularization.
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl TrainOpts {
    fn config(&self, seed: u64, workers: usize) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            dims: self.dims.unwrap_or(d.dims),
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            min_learning_rate: self.min_learning_rate.unwrap_or(d.min_learning_rate),
            negatives: self.negatives.unwrap_or(d.negatives),
            walks_per_node: self.walks_per_node.unwrap_or(d.walks_per_node),
            walk_length: self.walk_length.unwrap_or(d.walk_length),
            window: self.window.unwrap_or(d.window),
            hpe_walk_length: self.hpe_walk_length.unwrap_or(d.hpe_walk_length),
            regularization: self.lambda.unwrap_or(d.regularization),
            seed: derive_seed(seed, "train"),
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Structure file; not used with `--transfer`.
    #[arg(long, required_unless_present = "transfer")]
    pub structure: Option<PathBuf>,
    #[arg(long, visible_alias = "trainer")]
    pub backend: Backend,
    #[arg(long)]
    pub out: PathBuf,
    /// Pretrain on the source domain, fine-tune on the target domain.
    #[arg(long, requires = "system")]
    pub transfer: bool,
    /// System file, for `--transfer`.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Fine-tuning epochs for `--transfer`; defaults to `--epochs`.
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    #[command(flatten)]
    pub train: TrainOpts,
}

#[derive(Args, Debug)]
pub struct EvalOpts {
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "cosine")]
    pub similarity: Similarity,
    /// `top` (one query per user) or `all` (every training item).
    #[arg(long, default_value = "top")]
    pub query_mode: QueryMode,
}

impl EvalOpts {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            k: self.k,
            similarity: self.similarity,
            query_mode: self.query_mode,
            ..EvalOptions::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub eval: EvalOpts,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, visible_alias = "trainer")]
    pub backend: Backend,
    /// `start:end:step` or a single value.
    #[arg(long, default_value_t = ParamRange::DEFAULT_ALPHA)]
    pub alpha_range: ParamRange,
    #[arg(long, default_value_t = ParamRange::DEFAULT_BETA)]
    pub beta_range: ParamRange,
    #[arg(long, default_value_t = DEFAULT_PAIR_CAP)]
    pub cap: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Evaluation reports and grid files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the rendered table here as well as to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the table as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Grid results as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GridFile {
    pub backend: Backend,
    pub alpha_range: ParamRange,
    pub beta_range: ParamRange,
    pub cells: Vec<GridCell>,
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct ManifestRecord<'a> {
    command: &'a str,
    argv: &'a [String],
    seed: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    wall_time_secs: f64,
    tool_version: &'static str,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Files a stage read and wrote.
#[derive(Default)]
struct Io {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

/// Splices `--config` entries in right after the subcommand so that later
/// command-line flags override them. Keys the chosen subcommand does not
/// accept are skipped; keys no subcommand accepts are an error.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strings: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let config_path = strings.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=").map(str::to_string).or_else(|| {
            (a == "--config")
                .then(|| strings.get(i + 1).cloned())
                .flatten()
        })
    });
    let Some(config_path) = config_path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&config_path).map_err(|e| Error::Artifact {
        path: config_path.clone().into(),
        reason: e.to_string(),
    })?;
    let root = Cli::command();
    let Some(sub_pos) = strings
        .iter()
        .position(|a| root.get_subcommands().any(|s| s.get_name() == a))
    else {
        return Ok(args);
    };
    let sub = root
        .find_subcommand(&strings[sub_pos])
        .expect("matched above");
    let long_of = |cmd: &clap::Command, key: &str| {
        cmd.get_arguments()
            .find(|a| a.get_long() == Some(key))
            .map(|a| a.get_action().takes_values())
    };
    let mut injected = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParam(format!("{config_path}:{}: expected key=value", n + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            continue;
        }
        let takes_value = match long_of(sub, &key).or_else(|| long_of(&root, &key)) {
            Some(t) => t,
            None if root.get_subcommands().any(|s| long_of(s, &key).is_some()) => continue,
            None => {
                return Err(Error::InvalidParam(format!(
                    "{config_path}:{}: unknown key `{key}`",
                    n + 1
                )))
            }
        };
        if takes_value {
            injected.push(format!("--{key}={value}"));
        } else if matches!(value, "true" | "1" | "yes") {
            injected.push(format!("--{key}"));
        }
    }
    let mut out: Vec<OsString> = args[..=sub_pos].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(args[sub_pos + 1..].iter().cloned());
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let expanded = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return report_error(e.kind(), &e.to_string()),
    };
    let cli = match Cli::try_parse_from(expanded) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error")
                .trim_start_matches("error: ");
            return report_error("Usage", first);
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => report_error(e.kind(), &e.to_string()),
    }
}

fn report_error(kind: &str, message: &str) -> i32 {
    let one_line = message.replace(['\n', '\r', '\t'], " ");
    eprintln!("shx-error\t{kind}\t{one_line}");
    if kind == "Usage" {
        2
    } else {
        1
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    if cli.workers == 0 {
        return Err(Error::InvalidParam("--workers must be at least 1".into()));
    }
    let start = Instant::now();
    let (name, io) = match &cli.command {
        Command::Ingest(a) => ("ingest", cmd_ingest(cli, a)?),
        Command::Synth(a) => ("synth", cmd_synth(cli, a)?),
        Command::Build(a) => ("build", cmd_build(cli, a)?),
        Command::Train(a) => ("train", cmd_train(cli, a)?),
        Command::Eval(a) => ("eval", cmd_eval(a)?),
        Command::Grid(a) => ("grid", cmd_grid(cli, a)?),
        Command::Report(a) => ("report", cmd_report(a)?),
    };
    let manifest = cli.manifest.clone().or_else(|| {
        io.outputs
            .first()
            .map(|p| p.parent().unwrap_or(Path::new("")).join("manifest.jsonl"))
    });
    if let Some(path) = manifest {
        let record = ManifestRecord {
            command: name,
            argv,
            seed: cli.seed,
            inputs: io.inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            outputs: io
                .outputs
                .iter()
                .map(|p| digest(p))
                .collect::<Result<_>>()?,
            wall_time_secs: start.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        writeln!(f, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn apply_split(
    sys: CrossDomainSystem,
    args: &SplitArgs,
    seed: u64,
) -> Result<(CrossDomainSystem, Option<EvalSplit>)> {
    if args.no_split {
        return Ok((sys, None));
    }
    let (cut, split) = split_side(
        &sys,
        args.eval_side,
        args.holdout,
        derive_seed(seed, "split"),
    )?;
    Ok((cut, Some(split)))
}

fn cmd_ingest(cli: &Cli, a: &IngestArgs) -> Result<Io> {
    let options = IngestOptions {
        keep_weights: a.keep_weights,
        skip_bad_lines: a.skip_bad_lines,
    };
    let (sys, report) = ingest(&a.source, &a.target, &options)?;
    let (sys, split) = apply_split(sys, &a.split, cli.seed)?;
    artifact::write_system(&a.out, &sys, split.as_ref())?;
    print_json(&report)?;
    Ok(Io {
        inputs: vec![a.source.clone(), a.target.clone()],
        outputs: vec![a.out.clone()],
    })
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> Result<Io> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        users_s: a.users_s.unwrap_or(d.users_s),
        users_t: a.users_t.unwrap_or(d.users_t),
        items_s: a.items_s.unwrap_or(d.items_s),
        items_t: a.items_t.unwrap_or(d.items_t),
        overlap_ratio: a.overlap.unwrap_or(d.overlap_ratio),
        latent_dims: a.latent_dims.unwrap_or(d.latent_dims),
        interactions_per_user_s: a.interactions_s.unwrap_or(d.interactions_per_user_s),
        interactions_per_user_t: a.interactions_t.unwrap_or(d.interactions_per_user_t),
        noise: a.noise.unwrap_or(d.noise),
        seed: derive_seed(cli.seed, "synth"),
    };
    let data = generate_synthetic(&cfg)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(dir) = &a.export_dir {
        let (s, t) = export_tsv(&data.system, dir)?;
        outputs.extend([s, t]);
    }
    print_json(&system_stats(&data.system))?;
    let (sys, split) = apply_split(data.system, &a.split, cli.seed)?;
    artifact::write_system(&a.out, &sys, split.as_ref())?;
    Ok(Io {
        inputs: vec![],
        outputs,
    })
}

fn build_structure(
    sys: &CrossDomainSystem,
    split: Option<&EvalSplit>,
    kind: StructureKind,
    alpha: Option<f64>,
    beta: Option<f64>,
    opts: &ConstructOptions,
) -> Result<TrainingStructure> {
    if kind != StructureKind::Superhighway && (alpha.is_some() || beta.is_some()) {
        return Err(Error::InvalidParam(format!(
            "--alpha/--beta only apply to the superhighway structure, not {kind}"
        )));
    }
    match kind {
        StructureKind::Single => Ok(match split.map(|s| s.side) {
            Some(DomainTag::Source) => TrainingStructure::from_domain(sys.source()),
            _ => single_structure(sys),
        }),
        StructureKind::Highway => Ok(merge_highway(sys)),
        StructureKind::Superhighway => {
            let (Some(alpha), Some(beta)) = (alpha, beta) else {
                return Err(Error::InvalidParam(
                    "superhighway needs --alpha and --beta".into(),
                ));
            };
            construct_superhighway(sys, &ConstructionParams::new(alpha, beta)?, opts)
        }
    }
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> Result<Io> {
    let (sys, split) = artifact::read_system(&a.system)?;
    let opts = ConstructOptions {
        cap: a.cap,
        workers: cli.workers,
    };
    let s = build_structure(&sys, split.as_ref(), a.structure, a.alpha, a.beta, &opts)?;
    artifact::write_structure(&a.out, &s)?;
    print_json(&serde_json::json!({
        "provenance": s.provenance(),
        "stats": stats(s.graph()),
    }))?;
    Ok(Io {
        inputs: vec![a.system.clone()],
        outputs: vec![a.out.clone()],
    })
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> Result<Io> {
    let cfg = a.train.config(cli.seed, cli.workers)?;
    let (model, meta, inputs) = if a.transfer {
        let path = a.system.as_ref().expect("clap enforces --system");
        let (sys, _) = artifact::read_system(path)?;
        let fine = a.finetune_epochs.unwrap_or(cfg.epochs);
        let model = train_transfer(&sys, a.backend, &cfg, fine)?;
        let meta = ModelMeta {
            trainer: Some(a.backend),
            seed: cfg.seed,
            config: Some(cfg.clone()),
            provenance: Some(single_structure(&sys).provenance().clone()),
            pretrained: true,
        };
        (model, meta, vec![path.clone()])
    } else {
        let path = a.structure.as_ref().expect("clap enforces --structure");
        let s = artifact::read_structure(path)?;
        let model = train(&s, a.backend, &cfg)?;
        let meta = ModelMeta {
            trainer: Some(a.backend),
            seed: cfg.seed,
            config: Some(cfg.clone()),
            provenance: Some(s.provenance().clone()),
            pretrained: false,
        };
        (model, meta, vec![path.clone()])
    };
    artifact::write_model_file(&a.out, &model, &meta)?;
    Ok(Io {
        inputs,
        outputs: vec![a.out.clone(), artifact::meta_path(&a.out)],
    })
}

fn require_split(path: &Path, split: Option<EvalSplit>) -> Result<EvalSplit> {
    split.ok_or_else(|| Error::Artifact {
        path: path.to_path_buf(),
        reason: "system carries no evaluation split; re-run ingest/synth without --no-split".into(),
    })
}

fn cmd_eval(a: &EvalArgs) -> Result<Io> {
    let (_, split) = artifact::read_system(&a.system)?;
    let split = require_split(&a.system, split)?;
    let (model, meta) = artifact::read_model_file(&a.model)?;
    let mut report = evaluate(&model, &split, &a.eval.options())?;
    let base = meta
        .provenance
        .as_ref()
        .map(RunEcho::from_provenance)
        .unwrap_or_default();
    report.config = RunEcho {
        model: meta.trainer,
        seed: Some(meta.seed),
        pretrained: meta.pretrained,
        ..base
    };
    artifact::write_json(&a.out, artifact::REPORT_FORMAT, &report)?;
    println!(
        "MAP@{} = {:.6} over {} queries",
        report.k,
        report.map_at_k,
        report.per_query.len()
    );
    Ok(Io {
        inputs: vec![
            a.system.clone(),
            a.model.clone(),
            artifact::meta_path(&a.model),
        ],
        outputs: vec![a.out.clone()],
    })
}

fn cmd_grid(cli: &Cli, a: &GridArgs) -> Result<Io> {
    let (sys, split) = artifact::read_system(&a.system)?;
    let split = require_split(&a.system, split)?;
    let cfg = a.train.config(cli.seed, cli.workers)?;
    let opts = GridOptions {
        eval: a.eval.options(),
        construct: ConstructOptions {
            cap: a.cap,
            workers: cli.workers,
        },
        reuse_plans: true,
    };
    let cells = grid_search(
        &sys,
        &split,
        a.backend,
        &cfg,
        &a.alpha_range,
        &a.beta_range,
        &opts,
    )?;
    let failed = cells.iter().filter(|c| c.report.is_none()).count();
    let file = GridFile {
        backend: a.backend,
        alpha_range: a.alpha_range,
        beta_range: a.beta_range,
        cells,
    };
    artifact::write_json(&a.out, artifact::GRID_FORMAT, &file)?;
    match file.cells.first().and_then(|c| c.map().map(|m| (c, m))) {
        Some((best, map)) => println!(
            "best alpha={} beta={} MAP@{} = {map:.6} ({} cells, {failed} failed)",
            best.alpha,
            best.beta,
            a.eval.k,
            file.cells.len()
        ),
        None => println!("all {} cells failed", file.cells.len()),
    }
    Ok(Io {
        inputs: vec![a.system.clone()],
        outputs: vec![a.out.clone()],
    })
}

/// Loads an evaluation report, or the best cell of a grid file.
pub fn load_report(path: &Path) -> Result<EvalReport> {
    match artifact::json_format(path)?.as_str() {
        artifact::GRID_FORMAT => {
            let grid: GridFile = artifact::read_json(path, artifact::GRID_FORMAT)?;
            grid.cells
                .into_iter()
                .find_map(|c| c.report)
                .ok_or_else(|| Error::Artifact {
                    path: path.to_path_buf(),
                    reason: "grid has no successful cell".into(),
                })
        }
        _ => artifact::read_json(path, artifact::REPORT_FORMAT),
    }
}

fn cmd_report(a: &ReportArgs) -> Result<Io> {
    let reports = a
        .inputs
        .iter()
        .map(|p| load_report(p))
        .collect::<Result<Vec<_>>>()?;
    let table = ResultTable::from_reports(&reports)?;
    let text = table.render();
    print!("{text}");
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(out, &text)?;
        outputs.push(out.clone());
    }
    if let Some(json) = &a.json {
        artifact::write_json(json, "shx-table", &table)?;
        outputs.push(json.clone());
    }
    Ok(Io {
        inputs: a.inputs.clone(),
        outputs,
    })
}
