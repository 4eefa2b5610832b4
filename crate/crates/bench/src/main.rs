use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use prunesearch_bench::{
    generate_fixture, run_in_process, run_over_http, split_benchmark, synthesize_queries,
    BenchConfig, BenchmarkQuery, FixtureSpec, FIXTURE_SEED,
};
use prunesearch_core::analytics::{
    load_abstracts, read_history, Abstract, HistoryLog, RadiusPolicy,
};
use prunesearch_core::cloud::CloudService;
use prunesearch_core::corpus::{load_corpus_dir, prepare_upload, SecretKey, Vocabulary};
use prunesearch_core::edge::{EdgeConfig, EdgeEngine};
use prunesearch_core::semantics::SimilarityProvider;
use prunesearch_transport::{
    cloud_router, edge_router, serve, CloudClient, EdgeApp, EdgeClient, WireLog,
};

const FIXTURE_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

/// Pruned search over an encrypted index: cloud and edge services plus the
/// benchmark harness.
#[derive(Debug, Parser)]
#[command(name = "prunesearch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a fresh 32-byte secret key as hex.
    Keygen {
        #[arg(long, default_value = "prunesearch.key")]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Extract keywords, encrypt a corpus directory and upload it.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        cloud: CloudTarget,
        /// Where the edge keeps the token-to-term vocabulary.
        #[arg(long, default_value = "vocab.json")]
        vocab: PathBuf,
        #[arg(long, default_value_t = 15)]
        keywords: usize,
    },
    /// Cluster the uploaded index into k clusters.
    Cluster {
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        kmeans_iters: usize,
        #[command(flatten)]
        cloud: CloudTarget,
    },
    /// Run the cloud service.
    ServeCloud {
        #[arg(long, default_value = "127.0.0.1:7700")]
        bind: String,
        #[arg(long, default_value = "cloud-index")]
        index_dir: PathBuf,
        /// Append every received request body to this JSON-lines file.
        #[arg(long)]
        wire_log: Option<PathBuf>,
    },
    /// Run the edge service in front of a cloud service.
    ServeEdge {
        #[arg(long, default_value = "127.0.0.1:7701")]
        bind: String,
        #[arg(long, default_value = "127.0.0.1:7700")]
        cloud_addr: String,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long, default_value = "vocab.json")]
        vocab: PathBuf,
        /// Holds abstracts.json and history.jsonl.
        #[arg(long, default_value = "edge-state")]
        state_dir: PathBuf,
        /// Edge configuration (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Send one query through the edge service.
    Search {
        query: String,
        #[arg(long, default_value = "127.0.0.1:7701")]
        edge_addr: String,
        #[arg(long, default_value = "cli")]
        session: String,
    },
    /// Benchmark tooling.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Inspect saved abstracts.
    Abstracts {
        #[command(subcommand)]
        command: AbstractsCommand,
    },
    /// Re-issue every query of a history file through the edge service.
    Replay {
        history: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7701")]
        edge_addr: String,
        /// Ask the edge to run maintenance once the replay is done.
        #[arg(long)]
        maintain: bool,
    },
}

#[derive(Debug, Args)]
struct CloudTarget {
    /// Address of a running cloud service.
    #[arg(long, conflicts_with = "index_dir")]
    cloud_addr: Option<String>,
    /// Operate on a local index directory instead.
    #[arg(long)]
    index_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Write the synthetic fixture corpus and taxonomy.
    Fixture {
        #[arg(long, default_value = FIXTURE_DIR)]
        out: PathBuf,
        #[arg(long, default_value_t = FIXTURE_SEED)]
        seed: u64,
    },
    /// Synthesize benchmark queries (JSON lines) from a corpus.
    Synth {
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus"))]
        corpus: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        per_doc: usize,
        #[arg(long, default_value_t = 3)]
        per_query: usize,
        /// Only use this many (seeded) documents.
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a query file into train.jsonl and test.jsonl.
    Split {
        queries: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the replay benchmark and print a JSON report.
    Run {
        #[arg(long, default_value = "all")]
        policy: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus"))]
        corpus: PathBuf,
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/taxonomy.tsv"))]
        taxonomy: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        prune_k: usize,
        #[arg(long, default_value_t = 0)]
        kmeans_iters: usize,
        /// Route cloud traffic through a local HTTP server.
        #[arg(long)]
        http: bool,
        /// Record cloud-bound request bodies here (implies --http).
        #[arg(long)]
        wire_log: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum AbstractsCommand {
    /// Print the saved abstracts as JSON.
    Show {
        #[arg(long, default_value = "edge-state")]
        state_dir: PathBuf,
    },
    /// Per-cluster statistics from the last maintenance run.
    Stats {
        #[arg(long, default_value = "edge-state")]
        state_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("PRUNESEARCH_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .try_init();
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Keygen { out, force } => {
            if out.exists() && !force {
                bail!("{} exists; pass --force to overwrite", out.display());
            }
            SecretKey::generate().save_hex(&out)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Ingest {
            dir,
            key,
            cloud,
            vocab,
            keywords,
        } => {
            let key = SecretKey::load(&key)?;
            let docs = load_corpus_dir(&dir)?;
            let (batch, new_vocab) = prepare_upload(&docs, keywords, &key)?;
            let summary = match (&cloud.cloud_addr, &cloud.index_dir) {
                (Some(addr), _) => CloudClient::new(addr)?.upload(&batch)?,
                (None, Some(index)) => CloudService::open(index)?.upload(batch)?,
                (None, None) => bail!("pass --cloud-addr or --index-dir"),
            };
            let mut merged = if vocab.exists() {
                Vocabulary::load(&vocab)?
            } else {
                Vocabulary::default()
            };
            merged.merge(new_vocab);
            merged.save(&vocab)?;
            print_json(&summary)
        }
        Command::Cluster {
            k,
            kmeans_iters,
            cloud,
        } => {
            let summary = match (&cloud.cloud_addr, &cloud.index_dir) {
                (Some(addr), _) => CloudClient::new(addr)?.cluster(k, kmeans_iters)?,
                (None, Some(index)) => CloudService::open(index)?.cluster(k, kmeans_iters)?,
                (None, None) => bail!("pass --cloud-addr or --index-dir"),
            };
            print_json(&summary)
        }
        Command::ServeCloud {
            bind,
            index_dir,
            wire_log,
        } => {
            let service = Arc::new(CloudService::open(&index_dir)?);
            let wire = wire_log
                .map(|p| WireLog::to_file(&p).map(Arc::new))
                .transpose()?;
            serve_blocking(&bind, cloud_router(service, wire))
        }
        Command::ServeEdge {
            bind,
            cloud_addr,
            key,
            taxonomy,
            vocab,
            state_dir,
            config,
        } => {
            let config: EdgeConfig = match config {
                Some(path) => toml::from_str(&fs::read_to_string(&path)?)
                    .with_context(|| format!("reading edge config {}", path.display()))?,
                None => EdgeConfig::default(),
            };
            let cloud = CloudClient::new(&cloud_addr)?;
            let health = cloud
                .health()
                .with_context(|| format!("cloud at {cloud_addr} is not reachable"))?;
            if !health.clustered {
                bail!("cloud at {cloud_addr} has not been clustered yet");
            }
            fs::create_dir_all(&state_dir)?;
            let history = HistoryLog::open(&state_dir.join("history.jsonl"))?;
            let engine = EdgeEngine::new(
                SecretKey::load(&key)?.token_key(),
                SimilarityProvider::load_taxonomy(&taxonomy)?,
                cloud,
                config,
                history,
            );
            let abstracts_path = state_dir.join("abstracts.json");
            if abstracts_path.exists() {
                engine.load_state(load_abstracts(&abstracts_path)?)?;
            } else {
                engine.init_from_cloud(&Vocabulary::load(&vocab)?)?;
                prunesearch_core::analytics::save_abstracts(&engine.abstracts(), &abstracts_path)?;
            }
            let app = Arc::new(EdgeApp::new(engine, Some(abstracts_path)));
            serve_blocking(&bind, edge_router(app))
        }
        Command::Search {
            query,
            edge_addr,
            session,
        } => print_json(&EdgeClient::new(&edge_addr)?.query(&query, &session)?),
        Command::Bench { command } => bench(command),
        Command::Abstracts { command } => match command {
            AbstractsCommand::Show { state_dir } => {
                print_json(&load_abstracts(&state_dir.join("abstracts.json"))?)
            }
            AbstractsCommand::Stats { state_dir } => {
                print_stats(&load_abstracts(&state_dir.join("abstracts.json"))?);
                Ok(())
            }
        },
        Command::Replay {
            history,
            edge_addr,
            maintain,
        } => {
            let records = read_history(&history)?;
            let edge = EdgeClient::new(&edge_addr)?;
            let mut failed = 0;
            for r in &records {
                if let Err(e) = edge.query(&r.raw_query, &r.session_id) {
                    if e.status().is_none() {
                        return Err(e.into());
                    }
                    tracing::warn!(query = %r.raw_query, error = %e, "replayed query rejected");
                    failed += 1;
                }
            }
            let maintenance = if maintain {
                Some(edge.maintain()?)
            } else {
                None
            };
            print_json(&serde_json::json!({
                "queries": records.len(),
                "failed": failed,
                "maintenance": maintenance,
            }))
        }
    }
}

fn serve_blocking(bind: &str, router: axum::Router) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .with_context(|| format!("binding {bind}"))?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        eprintln!("listening on {}", listener.local_addr()?);
        serve(listener, router, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

fn print_stats(abstracts: &[Abstract]) {
    println!(
        "{:>7} {:>6} {:>8} {:>8} {:>8} {:>6} {:>6} {:>5}",
        "cluster", "q", "sigma", "delta", "beta", "gamma", "sr", "terms"
    );
    for a in abstracts {
        match &a.stats {
            Some(s) => println!(
                "{:>7} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>6.4} {:>5}",
                a.cluster_id,
                s.q,
                s.sigma,
                s.delta_bar,
                s.beta,
                s.gamma,
                s.sr,
                a.len()
            ),
            None => println!(
                "{:>7} {:>6} {:>8} {:>8} {:>8} {:>6} {:>6} {:>5}",
                a.cluster_id,
                "-",
                "-",
                "-",
                "-",
                "-",
                "-",
                a.len()
            ),
        }
    }
}

fn read_queries(path: &Path) -> anyhow::Result<Vec<BenchmarkQuery>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn write_queries(queries: &[BenchmarkQuery], out: &mut dyn Write) -> anyhow::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut *out, q)?;
        writeln!(out)?;
    }
    Ok(())
}

fn bench(command: BenchCommand) -> anyhow::Result<()> {
    match command {
        BenchCommand::Fixture { out, seed } => {
            generate_fixture(seed, &FixtureSpec::default()).write(&out)?;
            eprintln!("wrote fixture to {}", out.display());
            Ok(())
        }
        BenchCommand::Synth {
            corpus,
            seed,
            per_doc,
            per_query,
            subset,
            out,
        } => {
            let docs = load_corpus_dir(&corpus)?;
            let queries = synthesize_queries(&docs, per_doc, per_query, seed, subset);
            match out {
                Some(path) => write_queries(&queries, &mut fs::File::create(path)?),
                None => write_queries(&queries, &mut std::io::stdout().lock()),
            }
        }
        BenchCommand::Split {
            queries,
            seed,
            train_fraction,
            out_dir,
        } => {
            let (train, test) = split_benchmark(&read_queries(&queries)?, train_fraction, seed)?;
            fs::create_dir_all(&out_dir)?;
            write_queries(&train, &mut fs::File::create(out_dir.join("train.jsonl"))?)?;
            write_queries(&test, &mut fs::File::create(out_dir.join("test.jsonl"))?)?;
            print_json(&serde_json::json!({"train": train.len(), "test": test.len()}))
        }
        BenchCommand::Run {
            policy,
            seed,
            corpus,
            taxonomy,
            k,
            prune_k,
            kmeans_iters,
            http,
            wire_log,
            csv,
        } => {
            let policies: Vec<RadiusPolicy> = if policy == "all" {
                RadiusPolicy::ALL.to_vec()
            } else {
                policy
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_, _>>()?
            };
            let cfg = BenchConfig {
                seed,
                k,
                prune_k,
                kmeans_iters,
                ..BenchConfig::default()
            };
            let docs = load_corpus_dir(&corpus)?;
            let provider = SimilarityProvider::load_taxonomy(&taxonomy)?;
            let report = if http || wire_log.is_some() {
                let wire = wire_log
                    .map(|p| WireLog::to_file(&p).map(Arc::new))
                    .transpose()?;
                run_over_http(&docs, &provider, &policies, &cfg, wire)?
            } else {
                run_in_process(&docs, &provider, &policies, &cfg)?
            };
            if let Some(path) = csv {
                report.write_csv(&path)?;
            }
            print_json(&report)
        }
    }
}
