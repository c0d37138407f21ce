//! Argument grammar, resolved run configurations and their execution.
//!
//! Every subcommand first resolves its flags, defaults and seed into a
//! serializable config. The config is echoed in the report and is all that
//! `replay` needs to rerun the command. Output destinations (`--out`,
//! `--save`, ...) are not part of it.

use crate::dataset::{VectorDataset, VectorDomain};
use crate::report::{
    emit_report, Format, GradCheckResults, Results, RunReport, ScanResults, SynthResults,
    TrainingResults,
};
use crate::{warn, CliError, SEED_ENV};
use clap::{Args, Parser, Subcommand, ValueEnum};
use domainshift_core::corpus::{
    load_manifest, save_manifest, scan_tree, CorpusManifest, DomainSpec, FsSource, Warning,
};
use domainshift_core::histogram::{PoolMode, RangePolicy, BINS_PER_CHANNEL};
use domainshift_core::metrics::{
    idd_matrix, intra_class_variation, representation_idd, IcvOptions, IddOptions,
    IdentityFeatures, RepIddOptions, DEFAULT_FEATURE_BINS, DEFAULT_TRIALS,
};
use domainshift_core::smos::synthetic::{shift_task, BlobSpec, ShiftTaskSpec};
use domainshift_core::smos::train::{accuracy, DEFAULT_LAMBDA};
use domainshift_core::smos::{
    check_losses, train_grounded, train_precursor, Checkpoint, GradCheckOptions, InitMode,
    LossCheckSetup, Model, TrainConfig, TrainOutcome,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "domainshift", version, about = "Domain shift measures and grounded training")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice [default: $DOMAINSHIFT_SEED, else 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Histogram bins: 256 per channel for pixels, 32 per dimension for features
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// ICV trials [default: 3]
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Maximum images (or vectors) drawn per class or domain
    #[arg(long, global = true)]
    pub sample_cap: Option<usize>,
    /// Grounding coefficient [default: 0.1]
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Report format [default: from the --out extension, else json]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall time in the report (makes reports differ run to run)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    PixelWeighted,
    ImageAveraged,
}

impl From<PoolArg> for PoolMode {
    fn from(p: PoolArg) -> Self {
        match p {
            PoolArg::PixelWeighted => PoolMode::PixelWeighted,
            PoolArg::ImageAveraged => PoolMode::ImageAveraged,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Hidden and output widths of the featurizer; the input width comes from the data
    #[arg(long, value_delimiter = ',', default_value = "16,8")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Start the featurizer from this checkpoint instead of Kaiming noise
    #[arg(long)]
    pub init: Option<String>,
    /// Save the trained model as a checkpoint
    #[arg(long)]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a manifest from a root/<domain>/<class>/<image> tree
    Scan {
        #[arg(long)]
        root: PathBuf,
        /// Also write the manifest here
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Intra-class variation per domain
    Icv {
        #[arg(long)]
        manifest: PathBuf,
        /// Domain to measure; repeat for several [default: all]
        #[arg(long = "domain")]
        domains: Vec<String>,
        #[arg(long, value_enum, default_value = "pixel-weighted")]
        pool_mode: PoolArg,
        /// Draw a fresh capped subset every trial
        #[arg(long)]
        resample: bool,
    },
    /// Inter-domain dissimilarity matrix
    Idd {
        #[arg(long)]
        manifest: PathBuf,
        /// Manifest pooled into one extra reference row and column
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long = "domain")]
        domains: Vec<String>,
        #[arg(long, value_enum, default_value = "pixel-weighted")]
        pool_mode: PoolArg,
    },
    /// IDD over binned feature vectors of a vector dataset
    RepIdd {
        #[arg(long)]
        data: PathBuf,
        /// Featurizer checkpoint [default: raw inputs]
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long = "domain")]
        domains: Vec<String>,
        /// Fixed binning range "lo,hi" [default: global min-max]
        #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
        range: Option<Vec<f64>>,
    },
    /// Fit the precursor model on pooled precursor data
    TrainPrecursor {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Grounded DG training against a frozen precursor
    TrainSmos {
        #[arg(long)]
        data: PathBuf,
        /// Domain excluded from training
        #[arg(long)]
        held_out: Option<String>,
        /// Precursor checkpoint with head
        #[arg(long)]
        precursor: PathBuf,
        #[arg(long)]
        precursor_data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda_kl: f64,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Finite-difference check of every loss gradient on random networks
    GradCheck {
        #[arg(long, default_value_t = 4)]
        input_dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "16,8")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        n_classes: usize,
        #[arg(long, default_value_t = 4)]
        batch_size: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Check at most this many coordinates per parameter block
        #[arg(long)]
        max_coords: Option<usize>,
    },
    /// Generate a color-shifted blob task as vector datasets
    Synth {
        #[arg(long)]
        dg_out: PathBuf,
        #[arg(long)]
        precursor_out: PathBuf,
        #[arg(long, default_value_t = 2)]
        n_classes: usize,
        #[arg(long, default_value_t = 64)]
        per_class: usize,
        #[arg(long, default_value_t = 3)]
        dg_domains: usize,
        #[arg(long, default_value_t = 8)]
        precursor_domains: usize,
        #[arg(long, default_value_t = 2.0)]
        tint_scale: f64,
        #[arg(long, default_value_t = 0.2)]
        jitter: f64,
    },
    /// Rerun a command from the config_echo of a JSON report
    Replay { report: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scan { .. } => "scan",
            Command::Icv { .. } => "icv",
            Command::Idd { .. } => "idd",
            Command::RepIdd { .. } => "rep-idd",
            Command::TrainPrecursor { .. } => "train-precursor",
            Command::TrainSmos { .. } => "train-smos",
            Command::GradCheck { .. } => "grad-check",
            Command::Synth { .. } => "synth",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub root: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcvConfig {
    pub manifest: String,
    pub domains: Vec<String>,
    pub bins: usize,
    pub options: IcvOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IddConfig {
    pub manifest: String,
    pub reference: Option<String>,
    pub domains: Vec<String>,
    pub bins: usize,
    pub options: IddOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepIddConfig {
    pub data: String,
    pub checkpoint: Option<String>,
    pub domains: Vec<String>,
    pub options: RepIddOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecursorConfig {
    pub data: String,
    pub dims: Vec<usize>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmosConfig {
    pub data: String,
    pub train_domains: Vec<String>,
    pub held_out: Option<String>,
    pub precursor: String,
    pub precursor_data: String,
    pub dims: Vec<usize>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckConfig {
    pub setup: LossCheckSetup,
    pub options: GradCheckOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub spec: ShiftTaskSpec,
    pub seed: u64,
}

/// Where side artifacts go. Never echoed.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub manifest: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub dg_data: Option<PathBuf>,
    pub precursor_data: Option<PathBuf>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Scan(ScanConfig),
    Icv(IcvConfig),
    Idd(IddConfig),
    RepIdd(RepIddConfig),
    TrainPrecursor(PrecursorConfig),
    TrainSmos(SmosConfig),
    GradCheck(GradCheckConfig),
    Synth(SynthConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Scan(_) => "scan",
            RunConfig::Icv(_) => "icv",
            RunConfig::Idd(_) => "idd",
            RunConfig::RepIdd(_) => "rep-idd",
            RunConfig::TrainPrecursor(_) => "train-precursor",
            RunConfig::TrainSmos(_) => "train-smos",
            RunConfig::GradCheck(_) => "grad-check",
            RunConfig::Synth(_) => "synth",
        }
    }

    pub fn echo(&self) -> Value {
        let v = match self {
            RunConfig::Scan(c) => serde_json::to_value(c),
            RunConfig::Icv(c) => serde_json::to_value(c),
            RunConfig::Idd(c) => serde_json::to_value(c),
            RunConfig::RepIdd(c) => serde_json::to_value(c),
            RunConfig::TrainPrecursor(c) => serde_json::to_value(c),
            RunConfig::TrainSmos(c) => serde_json::to_value(c),
            RunConfig::GradCheck(c) => serde_json::to_value(c),
            RunConfig::Synth(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }

    /// Rebuilds a config from a report's `command` and `config_echo`.
    pub fn from_echo(command: &str, echo: Value) -> Result<Self, CliError> {
        fn de<T: DeserializeOwned>(v: Value) -> Result<T, CliError> {
            serde_json::from_value(v).map_err(|e| CliError::new("ParseError", format!("config_echo: {e}")))
        }
        Ok(match command {
            "scan" => RunConfig::Scan(de(echo)?),
            "icv" => RunConfig::Icv(de(echo)?),
            "idd" => RunConfig::Idd(de(echo)?),
            "rep-idd" => RunConfig::RepIdd(de(echo)?),
            "train-precursor" => RunConfig::TrainPrecursor(de(echo)?),
            "train-smos" => RunConfig::TrainSmos(de(echo)?),
            "grad-check" => RunConfig::GradCheck(de(echo)?),
            "synth" => RunConfig::Synth(de(echo)?),
            other => return Err(CliError::new("ParseError", format!("unknown command {other:?} in report"))),
        })
    }
}

fn resolve_seed(flag: Option<u64>, env: &dyn Fn(&str) -> Option<String>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env(SEED_ENV) {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer"))),
        None => Ok(0),
    }
}

/// Rejects global flags that mean nothing to the chosen subcommand.
fn check_applicable(g: &GlobalArgs, cmd: &Command) -> Result<(), CliError> {
    let name = cmd.name();
    let allowed: &[&str] = match cmd {
        Command::Scan { .. } | Command::Synth { .. } | Command::GradCheck { .. } => &["seed"],
        Command::Icv { .. } => &["seed", "bins", "trials", "sample-cap"],
        Command::Idd { .. } | Command::RepIdd { .. } => &["seed", "bins", "sample-cap"],
        Command::TrainPrecursor { .. } => &["seed"],
        Command::TrainSmos { .. } => &["seed", "lambda"],
        Command::Replay { .. } => &[],
    };
    let given = [
        ("seed", g.seed.is_some()),
        ("bins", g.bins.is_some()),
        ("trials", g.trials.is_some()),
        ("sample-cap", g.sample_cap.is_some()),
        ("lambda", g.lambda.is_some()),
    ];
    for (flag, present) in given {
        if present && !allowed.contains(&flag) {
            return Err(CliError::usage(format!("--{flag} does not apply to {name}")));
        }
    }
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn pixel_bins(bins: Option<usize>) -> Result<usize, CliError> {
    match bins {
        None => Ok(BINS_PER_CHANNEL),
        Some(b) if b == BINS_PER_CHANNEL => Ok(b),
        Some(b) => Err(CliError::new(
            "InvalidBins",
            format!("pixel histograms use {BINS_PER_CHANNEL} bins per channel, got {b}"),
        )),
    }
}

fn train_config(t: &TrainArgs, seed: u64, lambda: f64, lambda_kl: f64, temperature: f64) -> TrainConfig {
    TrainConfig {
        lambda,
        lambda_kl,
        temperature,
        lr: t.lr,
        batch_size: t.batch_size,
        steps: t.steps,
        seed,
        init: match &t.init {
            Some(p) => InitMode::FromWeights(p.clone()),
            None => InitMode::Kaiming,
        },
        ..TrainConfig::default()
    }
}

fn dims_for(input_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut dims = vec![input_dim];
    dims.extend_from_slice(hidden);
    dims
}

/// Turns parsed arguments into a resolved config plus output destinations.
pub fn resolve(
    cli: &Cli,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<(RunConfig, Outputs), CliError> {
    let g = &cli.global;
    check_applicable(g, &cli.command)?;
    let seed = resolve_seed(g.seed, env)?;
    let mut outputs = Outputs::default();
    let config = match &cli.command {
        Command::Scan { root, save } => {
            outputs.manifest = save.clone();
            RunConfig::Scan(ScanConfig { root: path_str(root), seed })
        }
        Command::Icv { manifest, domains, pool_mode, resample } => {
            let m = load_manifest(manifest)?;
            RunConfig::Icv(IcvConfig {
                manifest: path_str(manifest),
                domains: pick_domains(&m, domains)?,
                bins: pixel_bins(g.bins)?,
                options: IcvOptions {
                    trials: g.trials.unwrap_or(DEFAULT_TRIALS),
                    seed,
                    sample_cap: g.sample_cap,
                    resample: *resample,
                    pool_mode: (*pool_mode).into(),
                },
            })
        }
        Command::Idd { manifest, reference, domains, pool_mode } => {
            let m = load_manifest(manifest)?;
            RunConfig::Idd(IddConfig {
                manifest: path_str(manifest),
                reference: reference.as_deref().map(path_str),
                domains: pick_domains(&m, domains)?,
                bins: pixel_bins(g.bins)?,
                options: IddOptions {
                    sample_cap: g.sample_cap,
                    seed,
                    pool_mode: (*pool_mode).into(),
                },
            })
        }
        Command::RepIdd { data, checkpoint, domains, range } => {
            let d = VectorDataset::load(data)?;
            let domains = if domains.is_empty() { d.names() } else { domains.clone() };
            RunConfig::RepIdd(RepIddConfig {
                data: path_str(data),
                checkpoint: checkpoint.as_deref().map(path_str),
                domains,
                options: RepIddOptions {
                    bins: g.bins.unwrap_or(DEFAULT_FEATURE_BINS),
                    range: match range.as_deref() {
                        Some([lo, hi]) => RangePolicy::Fixed { lo: *lo, hi: *hi },
                        Some(_) => return Err(CliError::usage("--range takes lo,hi")),
                        None => RangePolicy::GlobalMinMax,
                    },
                    sample_cap: g.sample_cap,
                    seed,
                },
            })
        }
        Command::TrainPrecursor { data, train } => {
            outputs.checkpoint = train.save.clone();
            let d = VectorDataset::load(data)?;
            RunConfig::TrainPrecursor(PrecursorConfig {
                data: path_str(data),
                dims: dims_for(d.input_dim(), &train.hidden),
                train: train_config(train, seed, 0.0, 0.0, 1.0),
            })
        }
        Command::TrainSmos { data, held_out, precursor, precursor_data, lambda_kl, temperature, train } => {
            outputs.checkpoint = train.save.clone();
            let d = VectorDataset::load(data)?;
            if let Some(h) = held_out {
                d.domain(h)?;
            }
            let train_domains: Vec<String> =
                d.names().into_iter().filter(|n| Some(n) != held_out.as_ref()).collect();
            if train_domains.is_empty() {
                return Err(CliError::new("EmptyCorpus", "no training domains left after holding one out"));
            }
            RunConfig::TrainSmos(SmosConfig {
                data: path_str(data),
                train_domains,
                held_out: held_out.clone(),
                precursor: path_str(precursor),
                precursor_data: path_str(precursor_data),
                dims: dims_for(d.input_dim(), &train.hidden),
                train: train_config(train, seed, g.lambda.unwrap_or(DEFAULT_LAMBDA), *lambda_kl, *temperature),
            })
        }
        Command::GradCheck { input_dim, hidden, n_classes, batch_size, temperature, h, tolerance, max_coords } => {
            RunConfig::GradCheck(GradCheckConfig {
                setup: LossCheckSetup {
                    dims: dims_for(*input_dim, hidden),
                    n_classes: *n_classes,
                    batch_size: *batch_size,
                    temperature: *temperature,
                    seed,
                },
                options: GradCheckOptions {
                    h: *h,
                    tolerance: *tolerance,
                    max_coords_per_block: *max_coords,
                    seed,
                },
            })
        }
        Command::Synth {
            dg_out, precursor_out, n_classes, per_class, dg_domains, precursor_domains, tint_scale, jitter,
        } => {
            outputs.dg_data = Some(dg_out.clone());
            outputs.precursor_data = Some(precursor_out.clone());
            RunConfig::Synth(SynthConfig {
                spec: ShiftTaskSpec {
                    blobs: BlobSpec { n_classes: *n_classes, per_class: *per_class, ..BlobSpec::default() },
                    precursor_domains: *precursor_domains,
                    dg_domains: *dg_domains,
                    tint_scale: *tint_scale,
                    jitter: *jitter,
                },
                seed,
            })
        }
        Command::Replay { .. } => unreachable!("replay is resolved from its report"),
    };
    Ok((config, outputs))
}

fn pick_domains(m: &CorpusManifest, requested: &[String]) -> Result<Vec<String>, CliError> {
    if requested.is_empty() {
        return Ok(m.domains.iter().map(|d| d.name.clone()).collect());
    }
    for name in requested {
        if m.domain(name).is_none() {
            return Err(CliError::new("UnknownDomain", format!("manifest has no domain {name:?}")));
        }
    }
    Ok(requested.to_vec())
}

fn manifest_source(path: &str) -> Result<(CorpusManifest, FsSource), CliError> {
    let p = Path::new(path);
    let m = load_manifest(p)?;
    let src = FsSource::new(m.resolved_root(p));
    Ok((m, src))
}

/// Every domain of a manifest pooled into one, named after the corpus.
fn pooled_reference(m: &CorpusManifest) -> DomainSpec {
    let mut classes = BTreeMap::new();
    for d in &m.domains {
        for (class, paths) in &d.classes {
            classes.insert(format!("{}/{class}", d.name), paths.clone());
        }
    }
    DomainSpec {
        name: m.corpus_name.clone(),
        classes,
    }
}

fn training_results(
    outcome: TrainOutcome,
    data: &VectorDataset,
    held_out: Option<String>,
    rep_seed: Option<u64>,
) -> Result<(TrainingResults, Model), CliError> {
    let mut acc = BTreeMap::new();
    for d in &data.domains {
        let set = data.sets(std::slice::from_ref(&d.name))?.remove(0);
        acc.insert(d.name.clone(), accuracy(&outcome.model, &set)?);
    }
    let representation_idd = match rep_seed {
        Some(seed) => {
            let domains = data.sample_domains(&data.names())?;
            let opts = RepIddOptions { seed, ..RepIddOptions::default() };
            Some(representation_idd(&outcome.model.featurizer, &domains, &opts)?)
        }
        None => None,
    };
    Ok((
        TrainingResults {
            history: outcome.history,
            optimizer_steps: outcome.optimizer_steps,
            accuracy: acc,
            held_out,
            representation_idd,
        },
        outcome.model,
    ))
}

fn save_checkpoint(model: &Model, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        Checkpoint::from_model(model).save(p)?;
    }
    Ok(())
}

/// Runs a resolved config. Warnings go to `stderr` as JSON lines.
pub fn run(config: &RunConfig, outputs: &Outputs, stderr: &mut dyn Write) -> Result<Results, CliError> {
    match config {
        RunConfig::Scan(c) => {
            let scan = scan_tree(Path::new(&c.root), c.seed)?;
            for w in &scan.warnings {
                warn(stderr, w);
            }
            if let Some(p) = &outputs.manifest {
                save_manifest(&scan.manifest, p)?;
            }
            let sample_count = scan.manifest.domains.iter().map(DomainSpec::sample_count).sum();
            Ok(Results::Scan(ScanResults { manifest: scan.manifest, sample_count }))
        }
        RunConfig::Icv(c) => {
            pixel_bins(Some(c.bins))?;
            let (m, src) = manifest_source(&c.manifest)?;
            let mut reports = Vec::with_capacity(c.domains.len());
            for name in &c.domains {
                let d = m
                    .domain(name)
                    .ok_or_else(|| CliError::new("UnknownDomain", format!("manifest has no domain {name:?}")))?;
                let r = intra_class_variation(d, &src, &c.options)?;
                for class in &r.dropped_classes {
                    warn(stderr, &Warning::new("class has fewer than 2 samples; skipped", format!("{name}/{class}")));
                }
                reports.push(r);
            }
            Ok(Results::Icv(reports))
        }
        RunConfig::Idd(c) => {
            pixel_bins(Some(c.bins))?;
            let (m, src) = manifest_source(&c.manifest)?;
            let domains: Vec<DomainSpec> = c
                .domains
                .iter()
                .map(|n| {
                    m.domain(n)
                        .cloned()
                        .ok_or_else(|| CliError::new("UnknownDomain", format!("manifest has no domain {n:?}")))
                })
                .collect::<Result<_, _>>()?;
            let reference = match &c.reference {
                Some(p) => {
                    let (rm, rsrc) = manifest_source(p)?;
                    Some((pooled_reference(&rm), rsrc))
                }
                None => None,
            };
            let matrix = idd_matrix(
                &domains,
                &src,
                reference.as_ref().map(|(d, s)| (d, s as &dyn domainshift_core::corpus::ImageSource)),
                &c.options,
            )?;
            Ok(Results::Idd(matrix))
        }
        RunConfig::RepIdd(c) => {
            let data = VectorDataset::load(Path::new(&c.data))?;
            let domains = data.sample_domains(&c.domains)?;
            let matrix = match &c.checkpoint {
                Some(p) => {
                    let f = Checkpoint::load(Path::new(p))?.featurizer()?;
                    representation_idd(&f, &domains, &c.options)?
                }
                None => representation_idd(&IdentityFeatures, &domains, &c.options)?,
            };
            Ok(Results::Idd(matrix))
        }
        RunConfig::TrainPrecursor(c) => {
            let data = VectorDataset::load(Path::new(&c.data))?;
            let outcome = train_precursor(&data.pooled(), &c.dims, &c.train)?;
            let (results, model) = training_results(outcome, &data, None, None)?;
            save_checkpoint(&model, outputs.checkpoint.as_deref())?;
            Ok(Results::Training(results))
        }
        RunConfig::TrainSmos(c) => {
            let data = VectorDataset::load(Path::new(&c.data))?;
            let precursor = Checkpoint::load(Path::new(&c.precursor))?.model()?;
            let pdata = VectorDataset::load(Path::new(&c.precursor_data))?.pooled();
            let sets = data.sets(&c.train_domains)?;
            let outcome = train_grounded(&sets, &precursor, &pdata, &c.dims, &c.train)?;
            let (results, model) = training_results(outcome, &data, c.held_out.clone(), Some(c.train.seed))?;
            save_checkpoint(&model, outputs.checkpoint.as_deref())?;
            Ok(Results::Training(results))
        }
        RunConfig::GradCheck(c) => {
            let checks = check_losses(&c.setup, &c.options)?;
            let passed = checks.iter().all(|t| t.report.passed);
            Ok(Results::GradCheck(GradCheckResults { checks, passed }))
        }
        RunConfig::Synth(c) => {
            if c.spec.dg_domains == 0 || c.spec.precursor_domains == 0 || c.spec.blobs.n_classes < 2 {
                return Err(CliError::new(
                    "InvalidConfig",
                    "synth needs at least one domain of each kind and two classes",
                ));
            }
            let task = shift_task(&c.spec, c.seed);
            let dg = VectorDataset {
                n_classes: c.spec.blobs.n_classes,
                domains: task
                    .domains
                    .iter()
                    .map(|(name, s)| VectorDomain {
                        name: name.clone(),
                        inputs: s.inputs.clone(),
                        labels: s.labels.clone(),
                    })
                    .collect(),
            };
            let pre = VectorDataset {
                n_classes: c.spec.blobs.n_classes,
                domains: vec![VectorDomain {
                    name: "precursor".into(),
                    inputs: task.precursor.inputs.clone(),
                    labels: task.precursor.labels.clone(),
                }],
            };
            if let Some(p) = &outputs.dg_data {
                dg.save(p)?;
            }
            if let Some(p) = &outputs.precursor_data {
                pre.save(p)?;
            }
            let mut samples: BTreeMap<String, usize> =
                dg.domains.iter().map(|d| (d.name.clone(), d.inputs.len())).collect();
            samples.insert("precursor".into(), task.precursor.len());
            Ok(Results::Synth(SynthResults { samples, input_dim: dg.input_dim() }))
        }
    }
}

/// Parses, resolves, runs and emits. Returns the exit code.
pub fn execute(
    cli: Cli,
    env: &dyn Fn(&str) -> Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let g = &cli.global;
    let (config, outputs) = match &cli.command {
        Command::Replay { report } => {
            check_applicable(g, &cli.command)?;
            let text = std::fs::read_to_string(report).map_err(|e| CliError::io(report, e))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::new("ParseError", format!("{}: {e}", report.display())))?;
            let command = v.get("command").and_then(Value::as_str).unwrap_or_default().to_string();
            let echo = v.get("config_echo").cloned().unwrap_or(Value::Null);
            (RunConfig::from_echo(&command, echo)?, Outputs::default())
        }
        _ => resolve(&cli, env)?,
    };
    let started = Instant::now();
    let results = run(&config, &outputs, stderr)?;
    let mut report = RunReport::new(config.command(), config.echo(), results);
    if g.timing {
        report.wall_time = Some(started.elapsed().as_secs_f64());
    }
    let format = g
        .format
        .or_else(|| g.out.as_deref().map(Format::from_path))
        .unwrap_or(Format::Json);
    emit_report(&report, format, g.out.as_deref(), stdout)?;
    if let Results::GradCheck(r) = &report.results {
        if !r.passed {
            let e = CliError::new("GradCheckFailed", "a gradient exceeded the relative error tolerance");
            return Err(e);
        }
    }
    Ok(0)
}
