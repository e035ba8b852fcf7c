//! Command-line front end: graph inspection, self-training runs,
//! inference from saved checkpoints, evaluation against planted truth,
//! synthetic dataset generation, and gradient verification.
//!
//! Option precedence everywhere: explicit flag, then `key=value` lines
//! from `--config`, then built-in defaults. Diagnostics go to stderr;
//! requested data goes to stdout or to files under the run directory
//! (`--run-dir`/`--out`, the `PINFER_RUN_DIR` environment variable, or
//! `./pinfer-run`). Training runs write their manifest before any other
//! artifact so an interrupted run still names everything it intended to
//! produce.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read as _, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::eval::{
    self, decoy_qvalues, entrapment_curve, pauc, write_scores_tsv, DatasetReport, ScoreRow,
    ScoreTable, TruthFlag,
};
use crate::graph::{build_graph, GraphBuildConfig, TripartiteGraph};
use crate::nn::{forward, grad_check, init_params, relu_gap, NetConfig};
use crate::psm::{
    apply_feature_stats, detect_decoys, parse_pin, peptide_protein_map, standardize_features,
    FeatureStats, PsmTable,
};
use crate::synth::{generate, serialize_ground_truth, SynthConfig};
use crate::train::{
    self, baseline_scores, ensemble_score, group_key, score_table, SelfTrainOutput, TrainRunConfig,
};

#[derive(Parser)]
#[command(
    name = "pinfer",
    version,
    about = "Protein inference over protein-peptide-spectrum graphs"
)]
struct Cli {
    /// Cap the worker-thread count for data-parallel sections.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Defaults file with one key=value per line (# starts a comment).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse identification tables and print graph statistics.
    Build(BuildArgs),
    /// Train an ensemble by iterative pseudo-label refinement.
    Selftrain(SelftrainArgs),
    /// Score a dataset with a saved ensemble checkpoint.
    Infer(InferArgs),
    /// Compare scores against planted ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic dataset with planted truth.
    Synth(SynthArgs),
    /// Check analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Input tables (Percolator PIN format).
    #[arg(required = true)]
    pins: Vec<PathBuf>,
    /// Peptide-score cutoff used when crediting shared peptides.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Protein accession prefix marking decoys.
    #[arg(long)]
    decoy_prefix: Option<String>,
    /// Also write a full graph dump per input into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SelftrainArgs {
    /// Input tables (Percolator PIN format), one graph each.
    #[arg(required = true)]
    pins: Vec<PathBuf>,
    /// Base-score table per input (members<TAB>score), same order.
    #[arg(long)]
    base_scores: Vec<PathBuf>,
    /// Derive base scores from peptide evidence instead of files.
    #[arg(long)]
    baseline: bool,
    /// Directory for the manifest and all run artifacts.
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Self-training rounds; each round trains one ensemble member.
    #[arg(long)]
    rounds: Option<usize>,
    /// Maximum training epochs per round.
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden state width per node.
    #[arg(long)]
    hidden: Option<usize>,
    /// Message-passing layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Group-level q-value cutoff for positive pseudo-labels.
    #[arg(long)]
    fdr: Option<f64>,
    /// Peptide-score cutoff used when crediting shared peptides.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Protein accession prefix marking decoys.
    #[arg(long)]
    decoy_prefix: Option<String>,
    /// Fraction of labeled groups held out for early stopping.
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Epochs without validation improvement before stopping a round.
    #[arg(long)]
    patience: Option<usize>,
    /// Base seed for splits, initialization, and per-round reseeding.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InferArgs {
    /// Ensemble checkpoint written by selftrain.
    checkpoint: PathBuf,
    /// Input table (Percolator PIN format).
    pin: PathBuf,
    /// Output scores TSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Scores TSV as written by selftrain or infer.
    scores: PathBuf,
    /// Ground-truth TSV: protein<TAB>true|entrapment per line.
    truth: PathBuf,
    /// Lower edge of the reported FDR band.
    #[arg(long, default_value_t = 0.01)]
    fdr_lo: f64,
    /// Upper edge of the reported FDR band.
    #[arg(long, default_value_t = 0.05)]
    fdr_hi: f64,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Proteins actually present in the simulated sample.
    #[arg(long, default_value_t = 60)]
    n_true: usize,
    /// Proteins present in the search space but not in the sample.
    #[arg(long, default_value_t = 60)]
    n_entrapment: usize,
    /// Fewest peptides per protein.
    #[arg(long, default_value_t = 2)]
    peptides_min: usize,
    /// Most peptides per protein.
    #[arg(long, default_value_t = 4)]
    peptides_max: usize,
    /// Probability that a peptide gets a second parent protein.
    #[arg(long, default_value_t = 0.3)]
    p_share: f64,
    /// Fewest spectrum matches per detected peptide.
    #[arg(long, default_value_t = 1)]
    psms_min: usize,
    /// Most spectrum matches per detected peptide.
    #[arg(long, default_value_t = 3)]
    psms_max: usize,
    /// Decoy proteins generated per target protein.
    #[arg(long, default_value_t = 1.0)]
    decoy_fraction: f64,
    /// Accession prefix for the generated decoys.
    #[arg(long, default_value = "DECOY_")]
    decoy_prefix: String,
    /// Generator seed; equal seeds give identical datasets.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output identification table.
    #[arg(long, default_value = "synth.pin")]
    out_pin: PathBuf,
    /// Output ground-truth table (protein<TAB>true|entrapment).
    #[arg(long, default_value = "synth_truth.tsv")]
    out_truth: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of random graphs to verify.
    #[arg(long, default_value_t = 20)]
    graphs: usize,
    /// Cap on nodes of each type per graph.
    #[arg(long, default_value_t = 12)]
    max_nodes: usize,
    /// Hidden state width of the probed model.
    #[arg(long, default_value_t = 3)]
    hidden: usize,
    /// Message-passing layers of the probed model.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Maximum allowed relative error against finite differences.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Base seed for the random graphs and parameters.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            let msg = e.to_string();
            bail!("{}", msg.strip_prefix("error: ").unwrap_or(&msg).trim_end());
        }
    };
    apply_thread_cap(cli.threads);
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Build(args) => cmd_build(args, &file),
        Command::Selftrain(args) => cmd_selftrain(args, &file, cli.threads),
        Command::Infer(args) => cmd_infer(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    }
}

fn apply_thread_cap(threads: Option<u64>) {
    let Some(n) = threads else { return };
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(n as usize)
        .build_global()
    {
        log::warn!("worker pool already initialized; --threads {n} ignored ({e})");
    }
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature; --threads {n} has no effect");
}

/// `key=value` defaults loaded from `--config`. Keys use the long-flag
/// spelling; unknown keys are rejected so typos cannot silently fall
/// back to defaults.
#[derive(Debug)]
struct FileConfig {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: [&str; 11] = [
    "layers",
    "hidden",
    "learning-rate",
    "epochs",
    "seed",
    "rounds",
    "fdr",
    "epsilon",
    "decoy-prefix",
    "validation-fraction",
    "patience",
];

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<FileConfig> {
        let mut values = BTreeMap::new();
        let Some(path) = path else {
            return Ok(FileConfig { values });
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), idx + 1))?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                bail!("{}:{}: unknown config key {key:?}", path.display(), idx + 1);
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag wins over file value wins over `default`.
    fn get<V>(&self, flag: Option<V>, key: &str, default: V) -> Result<V>
    where
        V: FromStr,
        V::Err: std::fmt::Display,
    {
        debug_assert!(CONFIG_KEYS.contains(&key));
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow!("config key {key}: bad value {raw:?} ({e})")),
            None => Ok(default),
        }
    }
}

fn run_dir_default(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PINFER_RUN_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pinfer-run"))
}

/// Parse one table and flag its decoy records.
fn ingest(path: &Path, decoy_prefix: &str) -> Result<PsmTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut table = parse_pin(BufReader::new(file), decoy_prefix)
        .with_context(|| format!("parsing {}", path.display()))?;
    detect_decoys(&mut table).with_context(|| format!("parsing {}", path.display()))?;
    Ok(table)
}

/// Standardize features with one shared transform: single tables use
/// their own statistics, several tables pool their records first so
/// every graph (and later inference) sees the same scaling.
fn standardize_all(tables: &mut [PsmTable]) -> Result<FeatureStats> {
    for t in &tables[1..] {
        if t.feature_names != tables[0].feature_names {
            bail!(
                "feature columns differ between inputs: {:?} vs {:?}",
                tables[0].feature_names,
                t.feature_names
            );
        }
    }
    if tables.len() == 1 {
        return Ok(standardize_features(&mut tables[0])?);
    }
    let mut merged = PsmTable {
        feature_names: tables[0].feature_names.clone(),
        records: tables.iter().flat_map(|t| t.records.iter().cloned()).collect(),
        decoy_prefix: tables[0].decoy_prefix.clone(),
    };
    let stats = standardize_features(&mut merged)?;
    for t in tables {
        apply_feature_stats(t, &stats)?;
    }
    Ok(stats)
}

/// File stems as dataset names, suffixed on collision.
fn dataset_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names = Vec::with_capacity(paths.len());
    for p in paths {
        let stem = p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string();
        let mut name = stem.clone();
        let mut n = 1;
        while names.contains(&name) {
            n += 1;
            name = format!("{stem}-{n}");
        }
        names.push(name);
    }
    names
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Base scores: one `members<TAB>score` line per protein group, members
/// semicolon-joined exactly as the scores TSV writes them. A header
/// line is tolerated.
fn read_base_scores(path: &Path) -> Result<ScoreTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (members, score) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}:{}: expected members<TAB>score", path.display(), idx + 1))?;
        let score = match score.trim().parse::<f64>() {
            Ok(s) => s,
            Err(_) if idx == 0 => continue, // header
            Err(e) => bail!("{}:{}: bad score ({e})", path.display(), idx + 1),
        };
        rows.push(ScoreRow {
            group_id: members.to_string(),
            members: members.split(';').map(str::to_string).collect(),
            score,
            is_decoy: false,
            truth: TruthFlag::Unknown,
            q_value: None,
        });
    }
    let table = ScoreTable { rows };
    table
        .validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(table)
}

fn cmd_build(args: BuildArgs, file: &FileConfig) -> Result<()> {
    let config = GraphBuildConfig {
        epsilon: file.get(args.epsilon, "epsilon", 0.9)?,
        decoy_prefix: file.get(args.decoy_prefix, "decoy-prefix", "DECOY_".into())?,
        ..GraphBuildConfig::default()
    };
    if let Some(dir) = &args.dump_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
    }
    let names = dataset_names(&args.pins);
    for (path, name) in args.pins.iter().zip(&names) {
        let table = ingest(path, &config.decoy_prefix)?;
        let map = peptide_protein_map(&table);
        let graph = build_graph(&table, &config)
            .with_context(|| format!("building graph for {}", path.display()))?;
        let n_decoy = graph.groups.iter().filter(|g| g.is_decoy).count();
        let (mut d1, mut d2, mut d3) = (0usize, 0usize, 0usize);
        for parents in map.peptide_to_proteins.values() {
            match parents.len() {
                1 => d1 += 1,
                2 => d2 += 1,
                _ => d3 += 1,
            }
        }
        let n_pep = map.peptide_to_proteins.len().max(1) as f64;
        println!(
            "{}: {} psms, {} peptides, {} proteins, {} groups ({} decoy)",
            path.display(),
            graph.n_psm(),
            graph.n_pep(),
            map.protein_to_peptides.len(),
            graph.n_pro(),
            n_decoy,
        );
        println!(
            "  edges: {} group-peptide, {} peptide-psm",
            graph.pro_pep_edges.len(),
            graph.pep_psm_edges.len(),
        );
        println!(
            "  peptides in 1 protein {:.1}%, 2 proteins {:.1}%, 3+ proteins {:.1}%",
            100.0 * d1 as f64 / n_pep,
            100.0 * d2 as f64 / n_pep,
            100.0 * d3 as f64 / n_pep,
        );
        if let Some(dir) = &args.dump_dir {
            let out = dir.join(format!("{name}.graph.tsv"));
            let w = BufWriter::new(File::create(&out)?);
            graph.dump(w)?;
            println!("  dump: {}", out.display());
        }
    }
    Ok(())
}

fn cmd_selftrain(args: SelftrainArgs, file: &FileConfig, threads: Option<u64>) -> Result<()> {
    if args.baseline == !args.base_scores.is_empty() {
        bail!("provide either --baseline or one --base-scores per input, not both/neither");
    }
    if !args.base_scores.is_empty() && args.base_scores.len() != args.pins.len() {
        bail!(
            "{} inputs but {} base-score files",
            args.pins.len(),
            args.base_scores.len()
        );
    }
    let graph_config = GraphBuildConfig {
        epsilon: file.get(args.epsilon, "epsilon", 0.9)?,
        decoy_prefix: file.get(args.decoy_prefix, "decoy-prefix", "DECOY_".into())?,
        ..GraphBuildConfig::default()
    };
    let net_default = NetConfig::default();
    let config = TrainRunConfig {
        net: NetConfig {
            layers: file.get(args.layers, "layers", net_default.layers)?,
            hidden: file.get(args.hidden, "hidden", net_default.hidden)?,
            learning_rate: file.get(args.learning_rate, "learning-rate", net_default.learning_rate)?,
            seed: file.get(args.seed, "seed", net_default.seed)?,
            max_epochs: file.get(args.epochs, "epochs", net_default.max_epochs)?,
        },
        fdr_threshold: file.get(args.fdr, "fdr", 0.05)?,
        rounds: file.get(args.rounds, "rounds", 10)?,
        validation_fraction: file.get(args.validation_fraction, "validation-fraction", 0.1)?,
        patience: file.get(args.patience, "patience", 50)?,
    };
    config.validate()?;

    let names = dataset_names(&args.pins);
    let mut tables = Vec::with_capacity(args.pins.len());
    for path in &args.pins {
        tables.push(ingest(path, &graph_config.decoy_prefix)?);
    }
    let stats = standardize_all(&mut tables)?;
    let mut graphs = Vec::with_capacity(tables.len());
    for (table, path) in tables.iter().zip(&args.pins) {
        graphs.push(
            build_graph(table, &graph_config)
                .with_context(|| format!("building graph for {}", path.display()))?,
        );
    }
    let base: Vec<ScoreTable> = if args.baseline {
        graphs.iter().map(baseline_scores).collect()
    } else {
        args.base_scores
            .iter()
            .map(|p| read_base_scores(p))
            .collect::<Result<_>>()?
    };

    // Manifest first: the run directory names every artifact it will
    // produce before producing any of them.
    let run_dir = run_dir_default(args.run_dir);
    std::fs::create_dir_all(&run_dir)
        .with_context(|| format!("creating {}", run_dir.display()))?;
    let mut artifacts = vec!["manifest.txt".to_string()];
    for round in 1..=config.rounds {
        artifacts.push(format!("round_{round}.labels.tsv"));
        artifacts.push(format!("round_{round}.log.tsv"));
        artifacts.push(format!("round_{round}.ckpt"));
    }
    artifacts.push("ensemble.ckpt".to_string());
    for name in &names {
        artifacts.push(format!("{name}.scores.tsv"));
    }
    let mut manifest = String::new();
    manifest.push_str(&format!("pinfer {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str("command selftrain\n");
    manifest.push_str(&format!("layers {}\n", config.net.layers));
    manifest.push_str(&format!("hidden {}\n", config.net.hidden));
    manifest.push_str(&format!("learning_rate {}\n", config.net.learning_rate));
    manifest.push_str(&format!("epochs {}\n", config.net.max_epochs));
    manifest.push_str(&format!("seed {}\n", config.net.seed));
    manifest.push_str(&format!("rounds {}\n", config.rounds));
    manifest.push_str(&format!("fdr_threshold {}\n", config.fdr_threshold));
    manifest.push_str(&format!("validation_fraction {}\n", config.validation_fraction));
    manifest.push_str(&format!("patience {}\n", config.patience));
    manifest.push_str(&format!("epsilon {}\n", graph_config.epsilon));
    manifest.push_str(&format!("decoy_prefix {}\n", graph_config.decoy_prefix));
    match threads {
        Some(n) => manifest.push_str(&format!("threads {n}\n")),
        None => manifest.push_str("threads default\n"),
    }
    for (path, name) in args.pins.iter().zip(&names) {
        manifest.push_str(&format!(
            "input {name} {} sha256 {}\n",
            path.display(),
            sha256_file(path)?
        ));
    }
    if args.baseline {
        manifest.push_str("base_scores builtin-baseline\n");
    } else {
        for path in &args.base_scores {
            manifest.push_str(&format!(
                "base_scores {} sha256 {}\n",
                path.display(),
                sha256_file(path)?
            ));
        }
    }
    for a in &artifacts {
        manifest.push_str(&format!("artifact {a}\n"));
    }
    std::fs::write(run_dir.join("manifest.txt"), manifest)
        .with_context(|| format!("writing manifest in {}", run_dir.display()))?;

    log::info!(
        "training {} rounds on {} dataset(s), {} epochs max per round",
        config.rounds,
        graphs.len(),
        config.net.max_epochs
    );
    let output = train::self_train(&graphs, &base, &stats, &config)?;
    write_run_artifacts(&run_dir, &output, &graphs, &names, &graph_config)?;

    for (graph, name) in graphs.iter().zip(&names) {
        let scores = ensemble_score(&output.ensemble, graph)?;
        let mut table = score_table(graph, &scores);
        decoy_qvalues(&mut table)?;
        let accepted = table
            .rows
            .iter()
            .filter(|r| !r.is_decoy && r.q_value.is_some_and(|q| q <= config.fdr_threshold))
            .count();
        let w = BufWriter::new(File::create(run_dir.join(format!("{name}.scores.tsv")))?);
        write_scores_tsv(&table, w)?;
        println!(
            "{name}: {} groups, {accepted} accepted at q <= {}",
            table.rows.len(),
            config.fdr_threshold
        );
    }
    println!("artifacts in {}", run_dir.display());
    Ok(())
}

/// Per-round labels, training log, and checkpoint, then the final
/// ensemble checkpoint.
fn write_run_artifacts(
    run_dir: &Path,
    output: &SelfTrainOutput,
    graphs: &[TripartiteGraph],
    names: &[String],
    graph_config: &GraphBuildConfig,
) -> Result<()> {
    for round in &output.rounds {
        for w in &round.warnings {
            log::warn!("round {}: {w}", round.round);
        }
        let mut labels = BufWriter::new(File::create(
            run_dir.join(format!("round_{}.labels.tsv", round.round)),
        )?);
        writeln!(labels, "dataset\tgroup_id\tlabel\tis_validation\tprovenance")?;
        for ((graph, name), set) in graphs.iter().zip(names).zip(&round.labels) {
            for g in 0..graph.n_pro() {
                writeln!(
                    labels,
                    "{name}\t{}\t{}\t{}\t{}",
                    group_key(graph, g),
                    set.labels[g],
                    set.is_validation[g] as u8,
                    set.provenance,
                )?;
            }
        }
        labels.flush()?;
        let mut log_w = BufWriter::new(File::create(
            run_dir.join(format!("round_{}.log.tsv", round.round)),
        )?);
        writeln!(log_w, "epoch\ttrain_loss\tval_loss")?;
        for e in &round.log {
            writeln!(log_w, "{}\t{:.6}\t{:.6}", e.epoch, e.train_loss, e.val_loss)?;
        }
        log_w.flush()?;
        let member = Checkpoint {
            ensemble: train::ModelEnsemble {
                net: output.ensemble.net.clone(),
                stats: output.ensemble.stats.clone(),
                members: vec![round.params.clone()],
            },
            epsilon: graph_config.epsilon,
            decoy_prefix: graph_config.decoy_prefix.clone(),
        };
        save_checkpoint(&member, &run_dir.join(format!("round_{}.ckpt", round.round)))?;
    }
    let full = Checkpoint {
        ensemble: output.ensemble.clone(),
        epsilon: graph_config.epsilon,
        decoy_prefix: graph_config.decoy_prefix.clone(),
    };
    save_checkpoint(&full, &run_dir.join("ensemble.ckpt"))?;
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let mut table = ingest(&args.pin, &ckpt.decoy_prefix)?;
    apply_feature_stats(&mut table, &ckpt.ensemble.stats)
        .context("input features do not match the checkpoint")?;
    let graph_config = GraphBuildConfig {
        epsilon: ckpt.epsilon,
        decoy_prefix: ckpt.decoy_prefix.clone(),
        ..GraphBuildConfig::default()
    };
    let graph = build_graph(&table, &graph_config)
        .with_context(|| format!("building graph for {}", args.pin.display()))?;
    let scores = ensemble_score(&ckpt.ensemble, &graph)?;
    let mut out = score_table(&graph, &scores);
    decoy_qvalues(&mut out)?;
    match &args.out {
        Some(path) => {
            let w = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            write_scores_tsv(&out, w)?;
            log::info!("wrote {} rows to {}", out.rows.len(), path.display());
        }
        None => write_scores_tsv(&out, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut table = eval::read_scores_tsv(&args.scores)
        .with_context(|| format!("reading {}", args.scores.display()))?;
    let truth = eval::read_ground_truth(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))?;
    eval::assign_truth(&mut table, &truth);
    let missing: Vec<&str> = table
        .rows
        .iter()
        .filter(|r| !r.is_decoy && r.truth == TruthFlag::Unknown)
        .map(|r| r.group_id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!(
            "{} scored group(s) absent from the truth table: {}",
            missing.len(),
            missing.join(", ")
        );
    }
    decoy_qvalues(&mut table)?;
    let curve = entrapment_curve(&table, args.fdr_lo, args.fdr_hi)?;
    let p = pauc(&curve)?;
    let name = args
        .scores
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .trim_end_matches(".scores")
        .to_string();
    let out = run_dir_default(args.out);
    eval::emit_report(
        &[DatasetReport {
            name: &name,
            table: &table,
            curve: Some(&curve),
            pauc: Some(p),
        }],
        &out,
    )?;
    println!("pauc {p:.6}");
    println!("report in {}", out.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_true: args.n_true,
        n_entrapment: args.n_entrapment,
        peptides_per_protein: (args.peptides_min, args.peptides_max),
        p_share: args.p_share,
        psms_per_peptide: (args.psms_min, args.psms_max),
        decoy_fraction: args.decoy_fraction,
        decoy_prefix: args.decoy_prefix.clone(),
        seed: args.seed,
        ..SynthConfig::default()
    };
    let (table, truth) = generate(&config)?;
    let w = BufWriter::new(
        File::create(&args.out_pin)
            .with_context(|| format!("creating {}", args.out_pin.display()))?,
    );
    crate::psm::serialize_pin(&table, w)?;
    let w = BufWriter::new(
        File::create(&args.out_truth)
            .with_context(|| format!("creating {}", args.out_truth.display()))?,
    );
    serialize_ground_truth(&truth, w)?;
    println!(
        "wrote {} ({} psms) and {} ({} proteins)",
        args.out_pin.display(),
        table.records.len(),
        args.out_truth.display(),
        truth.len(),
    );
    Ok(())
}

/// Small random planted graphs; reseed any draw whose smallest
/// pre-activation magnitude sits within reach of the finite-difference
/// step, where central differences would straddle a kink.
fn gradcheck_fixture(
    base_seed: u64,
    max_nodes: usize,
    net: &NetConfig,
) -> Result<(TripartiteGraph, crate::nn::ModelParams, Vec<u8>)> {
    const MIN_GAP: f64 = 1e-3;
    for attempt in 0..1000u64 {
        let s = base_seed.wrapping_add(attempt);
        let config = SynthConfig {
            n_true: 2 + (s % 3) as usize,
            n_entrapment: 1 + ((s >> 3) % 3) as usize,
            peptides_per_protein: (1, 1),
            p_share: 0.35,
            psms_per_peptide: (1, 1),
            decoy_fraction: 0.5,
            seed: s,
            ..SynthConfig::default()
        };
        let (mut table, _) = generate(&config)?;
        standardize_features(&mut table)?;
        let graph = build_graph(&table, &GraphBuildConfig::default())?;
        if graph.n_pro() > max_nodes || graph.n_pep() > max_nodes || graph.n_psm() > max_nodes {
            continue;
        }
        let params = init_params(net, graph.feature_dim(), s ^ 0x5eed);
        let trace = forward(&graph, &params)?;
        if relu_gap(&trace) <= MIN_GAP {
            continue;
        }
        let labels = graph.groups.iter().map(|g| (!g.is_decoy) as u8).collect();
        return Ok((graph, params, labels));
    }
    bail!("no numerically clear random graph found from seed {base_seed}");
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<()> {
    let net = NetConfig {
        layers: args.layers,
        hidden: args.hidden,
        ..NetConfig::default()
    };
    let mut worst = 0.0f64;
    for i in 0..args.graphs {
        let base = args.seed.wrapping_add(i as u64 * 10_000);
        let (graph, params, labels) = gradcheck_fixture(base, args.max_nodes, &net)?;
        let report = grad_check(&graph, &params, &labels, args.tolerance)?;
        println!(
            "graph {:>2}/{}: {} groups, {} peptides, {} psms, {} entries, max rel err {:.3e}",
            i + 1,
            args.graphs,
            graph.n_pro(),
            graph.n_pep(),
            graph.n_psm(),
            report.entries,
            report.max_rel_err,
        );
        if !report.passed {
            bail!(
                "gradient mismatch on graph {}: {} entry ({}, {}) rel err {:.3e} >= {:.1e}",
                i + 1,
                report.worst_tensor,
                report.worst_entry.0,
                report.worst_entry.1,
                report.max_rel_err,
                args.tolerance,
            );
        }
        worst = worst.max(report.max_rel_err);
    }
    println!(
        "gradient check passed: {} graphs, worst {:.3e} < {:.1e}",
        args.graphs, worst, args.tolerance
    );
    Ok(())
}
