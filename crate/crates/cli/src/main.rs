//! `sqp` — selective query processing at desk scale.
//!
//! Subcommands cover the pipeline stages individually (`index`, `grid`,
//! `candidates`, `train`, `route`, `fuse`, `eval`) plus the full experiment
//! protocol (`experiment`) and report re-rendering (`report`). A synthetic
//! TREC-format corpus generator (`synth`) makes the whole thing self-
//! contained.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 malformed
//! input data, 1 any other failure.

use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sqp_core::corpus::build_index;
use sqp_core::evalkit::{evaluate, write_topic_metrics, Measure};
use sqp_core::features::{
    extract_features, feature_config_id, label_candidates, read_features, write_features,
};
use sqp_core::gridpoints::{build_grid, run_threads, GridOfPoints};
use sqp_core::harness::{load_corpus, run_experiment, ExperimentConfig, ReportTable};
use sqp_core::retrieval::{read_run, write_run};
use sqp_core::selector::{
    combsum_with, read_model, route, select_pair, train_router, write_manifest, write_model,
    Candidate, FusionNorm, SelectionMode,
};
use sqp_core::synth::{write_to_dir, SynthSpec};
use sqp_core::Error;

#[derive(Parser)]
#[command(
    name = "sqp",
    about = "Selective query processing: retrieval engine and meta-search experiment harness",
    version
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, default_value = "sqp.toml")]
    config: PathBuf,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured training measure (AP, nDCG@10, P@10).
    #[arg(long, global = true)]
    measure: Option<String>,

    /// Override the configured grid-generation parallelism (0 = all cores).
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the inverted index and persist it as a plain-text artifact.
    Index {
        /// Output path; defaults to `<output.dir>/index.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every processing thread over all topics; write per-thread runs,
    /// the grid of points, and the query feature file.
    Grid,
    /// Select the candidate thread pair for a mode from the persisted grid.
    Candidates {
        /// Selection mode: ERisk-SQE, ERisk-SQP, or Best-SQE.
        #[arg(long)]
        mode: String,
        /// Risk trade-off λ (SQP only); defaults to the configured value.
        #[arg(long)]
        lambda: Option<f64>,
        /// Output manifest; defaults to `<output.dir>/candidates/<mode>.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the routing model for a mode from the persisted grid and
    /// features.
    Train {
        #[arg(long)]
        mode: String,
        /// Output model file; defaults to `<output.dir>/models/<mode>.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Route every topic with a trained model; print `topic thread` lines.
    Route {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Fuse two TREC run files with CombSum.
    Fuse {
        #[arg(long)]
        run_a: PathBuf,
        #[arg(long)]
        run_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-run score treatment before summing: minmax or none.
        #[arg(long, default_value = "minmax")]
        fusion_norm: String,
    },
    /// Evaluate a TREC run file against the configured qrels.
    Eval {
        run: PathBuf,
        /// Write per-topic metric TSV here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full experiment protocol and write the report.
    Experiment,
    /// Re-render the report from the persisted `report.tsv`.
    Report,
    /// Generate a deterministic synthetic TREC-format corpus.
    Synth {
        /// Directory for documents.trec, topics.txt, qrels.txt.
        #[arg(long, default_value = "data")]
        out: PathBuf,
        #[arg(long, default_value_t = 1200)]
        docs: usize,
        #[arg(long, default_value_t = 30)]
        topics: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&cli.config)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(measure) = &cli.measure {
        cfg.experiment.measure = measure.clone();
    }
    if let Some(p) = cli.parallelism {
        cfg.experiment.parallelism = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn grid_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.dir.join("grid.tsv")
}

fn load_grid(cfg: &ExperimentConfig) -> anyhow::Result<GridOfPoints> {
    let path = grid_path(cfg);
    if !path.exists() {
        bail!(
            "{} not found; run `sqp grid` first to generate it",
            path.display()
        );
    }
    let file = File::open(&path)?;
    Ok(GridOfPoints::read_tsv(file, &path.display().to_string())?)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Index { out } => {
            let cfg = load_config(cli)?;
            let docs = sqp_core::corpus::load_documents(&cfg.corpus.documents, &cfg.pipeline)?;
            let index = build_index(docs)?;
            let path = out
                .clone()
                .unwrap_or_else(|| cfg.output.dir.join("index.txt"));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            index.save(&path, &cfg.pipeline)?;
            println!(
                "indexed {} documents, {} terms, {} tokens -> {}",
                index.n_docs(),
                index.n_terms(),
                index.total_tokens(),
                path.display()
            );
        }
        Command::Grid => {
            let cfg = load_config(cli)?;
            let (index, topics, qrels) = load_corpus(&cfg)?;
            let threads = cfg.enumerate()?;
            let measure = cfg.measure()?;
            fs::create_dir_all(cfg.output.dir.join("runs"))?;
            let timed = run_threads(
                &index,
                &topics,
                &threads,
                cfg.experiment.depth,
                cfg.experiment.parallelism,
            )?;
            for tr in &timed {
                let file = cfg
                    .output
                    .dir
                    .join("runs")
                    .join(format!("{}.run", tr.thread.id().replace('/', "_")));
                write_run(File::create(file)?, &tr.lists, &tr.thread.id())?;
            }
            let grid = build_grid(&timed, &qrels, measure)?;
            grid.write_tsv(File::create(grid_path(&cfg))?)?;
            let features: Vec<_> = topics
                .iter()
                .map(|t| extract_features(&index, t, cfg.experiment.top_k))
                .collect();
            write_features(
                File::create(cfg.output.dir.join("features.tsv"))?,
                &features,
            )?;
            println!(
                "grid: {} threads x {} topics ({}) -> {}",
                grid.threads().len(),
                grid.topics().len(),
                measure,
                grid_path(&cfg).display()
            );
        }
        Command::Candidates { mode, lambda, out } => {
            let cfg = load_config(cli)?;
            let mode: SelectionMode = mode.parse::<SelectionMode>()?;
            let grid = load_grid(&cfg)?;
            let lambda = lambda.unwrap_or(cfg.experiment.lambda);
            let (pair, risk) = select_pair(&grid, mode, lambda)?;
            let path = out.clone().unwrap_or_else(|| {
                cfg.output
                    .dir
                    .join("candidates")
                    .join(format!("{mode}.txt"))
            });
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            write_manifest(File::create(&path)?, &pair, lambda)?;
            println!("c1: {}", pair.c1.id());
            println!("c2: {}", pair.c2.id());
            if let Some(rg) = risk {
                println!(
                    "reward: {:.6}  risk: {:.6}  gain: {:.6} (lambda {})",
                    rg.reward, rg.risk, rg.gain, rg.lambda
                );
            }
            println!("manifest -> {}", path.display());
        }
        Command::Train { mode, out } => {
            let cfg = load_config(cli)?;
            let mode: SelectionMode = mode.parse::<SelectionMode>()?;
            let grid = load_grid(&cfg)?;
            let feat_path = cfg.output.dir.join("features.tsv");
            if !feat_path.exists() {
                bail!(
                    "{} not found; run `sqp grid` first to generate it",
                    feat_path.display()
                );
            }
            let features =
                read_features(File::open(&feat_path)?, &feat_path.display().to_string())?;
            let (pair, _) = select_pair(&grid, mode, cfg.experiment.lambda)?;
            let candidates = [pair.c1.clone(), pair.c2.clone()];
            let mut aligned = Vec::new();
            let mut labels = Vec::new();
            for f in &features {
                if grid.topic_index(&f.topic_id).is_some() {
                    labels.push(label_candidates(&grid, &candidates, &f.topic_id)?);
                    aligned.push(f.clone());
                }
            }
            let model = train_router(
                &aligned,
                &labels,
                cfg.experiment.reg,
                cfg.experiment.epochs,
                cfg.experiment.seed,
            )?;
            let path = out
                .clone()
                .unwrap_or_else(|| cfg.output.dir.join("models").join(format!("{mode}.txt")));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            write_model(
                File::create(&path)?,
                &model,
                &feature_config_id(cfg.experiment.top_k),
                &pair,
            )?;
            println!(
                "trained {} router on {} queries ({}) -> {}",
                mode,
                aligned.len(),
                if model.is_zero() {
                    "zero model"
                } else {
                    "non-zero model"
                },
                path.display()
            );
        }
        Command::Route { model } => {
            let cfg = load_config(cli)?;
            let (routing, feature_config, pair) =
                read_model(File::open(model)?, &model.display().to_string())?;
            let expected = feature_config_id(cfg.experiment.top_k);
            if feature_config != expected {
                bail!("model feature configuration {feature_config:?} does not match {expected:?}");
            }
            let (index, topics, _) = load_corpus(&cfg)?;
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for topic in &topics {
                let feats = extract_features(&index, topic, cfg.experiment.top_k);
                let selected = match route(&routing, &feats)? {
                    Candidate::First => &pair.c1,
                    Candidate::Second => &pair.c2,
                };
                // stop quietly when the reader (e.g. `head`) hangs up
                if writeln!(out, "{}\t{}", topic.topic_id, selected.id()).is_err() {
                    break;
                }
            }
        }
        Command::Fuse {
            run_a,
            run_b,
            out,
            fusion_norm,
        } => {
            let cfg = load_config(cli)?;
            let norm: FusionNorm = fusion_norm.parse()?;
            let a = read_run(File::open(run_a)?, &run_a.display().to_string())?;
            let b = read_run(File::open(run_b)?, &run_b.display().to_string())?;
            let mut fused = Vec::new();
            for list_a in &a {
                let Some(list_b) = b.iter().find(|l| l.topic_id == list_a.topic_id) else {
                    continue;
                };
                fused.push(combsum_with(list_a, list_b, cfg.experiment.depth, norm)?);
            }
            write_run(File::create(out)?, &fused, "CombSum")?;
            println!("fused {} topics -> {}", fused.len(), out.display());
        }
        Command::Eval { run, out } => {
            let cfg = load_config(cli)?;
            let qrels_file = File::open(&cfg.corpus.qrels)?;
            let qrels = sqp_core::corpus::parse_qrels(
                qrels_file,
                &cfg.corpus.qrels.display().to_string(),
            )?;
            let lists = read_run(File::open(run)?, &run.display().to_string())?;
            let mut rows = Vec::new();
            for list in &lists {
                for m in Measure::ALL {
                    rows.push((list.topic_id.clone(), m, evaluate(m, list, &qrels)));
                }
            }
            if let Some(path) = out {
                write_topic_metrics(File::create(path)?, &rows)?;
            }
            for m in Measure::ALL {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|(_, rm, _)| *rm == m)
                    .map(|(_, _, v)| *v)
                    .collect();
                let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
                println!("{m}\tall\t{mean:.4}");
            }
        }
        Command::Experiment => {
            let cfg = load_config(cli)?;
            let table = run_experiment(&cfg)?;
            print!("{}", table.render_text());
            println!("artifacts -> {}", cfg.output.dir.display());
        }
        Command::Report => {
            let cfg = load_config(cli)?;
            let path = cfg.output.dir.join("report.tsv");
            if !path.exists() {
                bail!("{} not found; run `sqp experiment` first", path.display());
            }
            let text = fs::read_to_string(&path)?;
            let table = ReportTable::parse_tsv(&text, &path.display().to_string())?;
            print!("{}", table.render_text());
        }
        Command::Synth {
            out,
            docs,
            topics,
            seed,
        } => {
            let spec = SynthSpec {
                docs: *docs,
                topics: *topics,
                seed: *seed,
                ..Default::default()
            };
            let (d, t, q) = write_to_dir(&spec, out)?;
            println!("documents -> {}", d.display());
            println!("topics    -> {}", t.display());
            println!("qrels     -> {}", q.display());
        }
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_))
        | Some(Error::UnknownModel(_))
        | Some(Error::InvalidParameter(_)) => 2,
        Some(Error::Parse { .. }) | Some(Error::DuplicateDocId(_)) | Some(Error::EmptyCorpus) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
