use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rumorflow::content::Lexicon;
use rumorflow::corpus::{CorpusFiles, TruthStatus};
use rumorflow::eval::{
    ablate_diffusion_feature, evaluate_diffusion, predict_credibility, run_credibility,
    run_diffusion, DiffusionSource, ExperimentConfig, RankingScope,
};
use rumorflow::features::FeatureSchema;
use rumorflow::graph::{cascade_stats, class_balance};
use rumorflow::learn::{fit_forest, ForestParams, LogRegModel, LogRegOptions};
use rumorflow::pipeline::{EdgeTable, PipelineConfig, ScoredCorpus, DIFFUSION_COLUMN, SCORES_FILE};
use rumorflow::query::build_query;
use rumorflow::synth::{generate, SynthConfig};
use rumorflow::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "rumorflow",
    version,
    about = "Rumor diffusion and credibility pipeline"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Directory holding users/tweets/reactions/follows/topics .jsonl files.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Learn {
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Prior variance of the logistic-regression weights.
    #[arg(long, default_value_t = 10.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long, value_enum, default_value_t = Scope::PerClass)]
    ranking: Scope,
    #[arg(long, value_enum, default_value_t = Source::Observed)]
    diffusion_source: Source,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct DiffusionToggle {
    #[arg(long, overrides_with = "without_diffusion")]
    with_diffusion: bool,
    #[arg(long, overrides_with = "with_diffusion")]
    without_diffusion: bool,
}

impl DiffusionToggle {
    fn enabled(self) -> bool {
        !self.without_diffusion
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Scope {
    PerClass,
    Pooled,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Source {
    Observed,
    Predicted,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Default,
    Coupled,
    Uncoupled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus and summarize it.
    Ingest,
    /// Build the keyword search query.
    Query {
        /// Keywords; with none, one query per topic of --corpus.
        keywords: Vec<String>,
    },
    /// Write every exposure edge with its 57 features as CSV.
    Featurize,
    /// Write labeled exposure edges as JSON lines.
    Edges,
    /// Cascade depth and diffusion statistics per topic and truth class.
    Stats,
    /// Forest feature ranking per truth class.
    Rank {
        #[command(flatten)]
        learn: Learn,
    },
    /// Fit per-class diffusion models into the --out directory.
    Train {
        #[command(flatten)]
        learn: Learn,
    },
    /// Full experiment report, or score a saved model with --model.
    Eval {
        #[command(flatten)]
        learn: Learn,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Message-level credibility by majority vote over edges.
    Credibility {
        #[command(flatten)]
        learn: Learn,
        #[command(flatten)]
        diffusion: DiffusionToggle,
        /// Score every message with a saved credibility model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Credibility with and without the diffusion column.
    Ablate {
        #[command(flatten)]
        learn: Learn,
    },
    /// Generate a planted synthetic corpus into --out.
    Synth {
        #[arg(long, value_enum, default_value_t = Preset::Default)]
        preset: Preset,
        /// JSON generator configuration; overrides --preset.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn internal(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Internal(format!("{}: {e}", path.display()))
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.common, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}

fn experiment(common: &Common, l: &Learn) -> Outcome<ExperimentConfig> {
    if l.trees == 0 {
        return Err(invalid("--trees must be at least 1"));
    }
    Ok(ExperimentConfig {
        seed: common.seed,
        top_k: l.top_k,
        train_frac: l.train_frac,
        folds: l.folds,
        threshold: l.threshold,
        logreg: LogRegOptions {
            prior_variance: l.sigma2,
            ..LogRegOptions::default()
        },
        forest: ForestParams {
            n_trees: l.trees,
            ..ForestParams::default()
        },
        ranking: match l.ranking {
            Scope::PerClass => RankingScope::PerClass,
            Scope::Pooled => RankingScope::Pooled,
        },
        diffusion_source: match l.diffusion_source {
            Source::Observed => DiffusionSource::Observed,
            Source::Predicted => DiffusionSource::Predicted,
        },
    })
}

fn corpus_dir(common: &Common) -> Outcome<&Path> {
    let dir = common
        .corpus
        .as_deref()
        .ok_or_else(|| invalid("--corpus is required"))?;
    if !dir.is_dir() {
        return Err(invalid(format!(
            "corpus directory {} does not exist",
            dir.display()
        )));
    }
    Ok(dir)
}

fn load(common: &Common) -> Outcome<ScoredCorpus> {
    Ok(ScoredCorpus::load(
        corpus_dir(common)?,
        &Lexicon::default(),
    )?)
}

fn table(scored: &ScoredCorpus) -> Outcome<EdgeTable> {
    Ok(EdgeTable::build(scored, &PipelineConfig::default())?)
}

fn sha256_file(path: &Path) -> Outcome<String> {
    let bytes = fs::read(path).map_err(|e| internal(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digests of every corpus file present, plus any extra inputs.
fn input_digests(common: &Common, extra: &[&Path]) -> Outcome<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if let Some(dir) = &common.corpus {
        let files = CorpusFiles::in_dir(dir);
        let scores = dir.join(SCORES_FILE);
        for p in files.paths().chain(std::iter::once(&scores)) {
            if p.exists() {
                out.insert(format!("corpus/{}", file_name(p)), sha256_file(p)?);
            }
        }
    }
    for p in extra {
        out.insert(file_name(p), sha256_file(p)?);
    }
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

struct Emit<'a> {
    common: &'a Common,
    command: &'static str,
    config: Value,
    extra_inputs: Vec<&'a Path>,
}

impl Emit<'_> {
    /// Writes `body` to --out (plus a manifest) or stdout.
    fn text(&self, body: &str) -> Outcome {
        match &self.common.out {
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(body.as_bytes())
                    .map_err(|e| Failure::Internal(format!("stdout: {e}")))
            }
            Some(path) => {
                write_file(path, body)?;
                let mut name = path.as_os_str().to_owned();
                name.push(".manifest.json");
                self.manifest(Path::new(&name), &[path.as_path()])
            }
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Outcome {
        let body =
            serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
        self.text(&(body + "\n"))
    }

    fn out_dir(&self) -> Outcome<&Path> {
        let dir = self
            .common
            .out
            .as_deref()
            .ok_or_else(|| invalid(format!("{} needs --out DIR", self.command)))?;
        fs::create_dir_all(dir).map_err(|e| internal(dir, e))?;
        Ok(dir)
    }

    fn manifest(&self, path: &Path, outputs: &[&Path]) -> Outcome {
        let mut produced = BTreeMap::new();
        for p in outputs {
            produced.insert(file_name(p), sha256_file(p)?);
        }
        let m = json!({
            "tool": "rumorflow",
            "version": VERSION,
            "command": self.command,
            "seed": self.common.seed,
            "config": self.config,
            "inputs": input_digests(self.common, &self.extra_inputs)?,
            "outputs": produced,
        });
        let body =
            serde_json::to_string_pretty(&m).map_err(|e| Failure::Internal(e.to_string()))?;
        write_file(path, &(body + "\n"))
    }
}

fn write_file(path: &Path, body: &str) -> Outcome {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| internal(parent, e))?;
    }
    fs::write(path, body).map_err(|e| internal(path, e))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn load_model(path: &Path) -> Outcome<LogRegModel> {
    if !path.is_file() {
        return Err(invalid(format!(
            "model file {} does not exist",
            path.display()
        )));
    }
    Ok(LogRegModel::load(path)?)
}

fn run(common: &Common, command: &Command) -> Outcome {
    let emit = |name: &'static str, config: Value| Emit {
        common,
        command: name,
        config,
        extra_inputs: Vec::new(),
    };
    match command {
        Command::Ingest => {
            let s = load(common)?;
            let c = &s.corpus;
            let summary = json!({
                "users": c.users.len(),
                "tweets": c.tweets.len(),
                "original_posts": c.tweets.values().filter(|t| !t.is_retweet).count(),
                "reactions": c.reactions.len(),
                "follow_edges": c.follow_edges.len(),
                "topics": c.topics.len(),
                "snapshot": c.snapshot().to_rfc3339(),
            });
            emit("ingest", json!({})).json(&summary)
        }
        Command::Query { keywords } => {
            let body = if keywords.is_empty() {
                let s = load(common)?;
                let mut lines = String::new();
                for t in s.corpus.topics.values() {
                    let q = build_query(&t.keywords)?;
                    lines.push_str(
                        &serde_json::to_string(&json!({"topic_id": t.topic_id, "query": q}))
                            .expect("json"),
                    );
                    lines.push('\n');
                }
                lines
            } else {
                build_query(keywords)? + "\n"
            };
            emit("query", json!({ "keywords": keywords })).text(&body)
        }
        Command::Featurize => {
            let t = table(&load(common)?)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec![
                "tweet_id".to_string(),
                "spreader_id".into(),
                "receiver_id".into(),
                "topic_status".into(),
            ];
            header.extend(FeatureSchema::standard().names());
            header.push("label".into());
            w.write_record(&header)
                .map_err(|e| Failure::Internal(e.to_string()))?;
            for (e, v) in t.edges.iter().zip(&t.vectors) {
                let mut rec = vec![
                    e.tweet_id.clone(),
                    e.spreader_id.clone(),
                    e.receiver_id.clone(),
                    e.topic_status.to_string(),
                ];
                rec.extend(v.values.iter().map(|x| x.to_string()));
                rec.push(u8::from(e.label.is_diffused()).to_string());
                w.write_record(&rec)
                    .map_err(|e| Failure::Internal(e.to_string()))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Failure::Internal(e.to_string()))?;
            emit("featurize", json!({})).text(&String::from_utf8(bytes).expect("csv is utf-8"))
        }
        Command::Edges => {
            let s = load(common)?;
            let edges = rumorflow::graph::build_edges(&s.corpus);
            let mut body = String::new();
            for e in &edges {
                body.push_str(&serde_json::to_string(e).expect("json"));
                body.push('\n');
            }
            emit("edges", json!({})).text(&body)
        }
        Command::Stats => {
            let s = load(common)?;
            let edges = rumorflow::graph::build_edges(&s.corpus);
            let stats = cascade_stats(&s.corpus, &edges);
            let balance = class_balance(&edges).ok();
            emit("stats", json!({})).json(&json!({
                "by_status": stats.by_status,
                "topics": stats.topics,
                "diffused_fraction": balance,
            }))
        }
        Command::Rank { learn } => {
            let cfg = experiment(common, learn)?;
            let t = table(&load(common)?)?;
            let mut out = BTreeMap::new();
            for status in TruthStatus::ALL {
                let data = t.with_status(status).diffusion_dataset();
                let forest = fit_forest(
                    &data,
                    &ForestParams {
                        seed: cfg.seed,
                        ..cfg.forest
                    },
                )?;
                let ranking = forest.ranking();
                let k = cfg.top_k.min(ranking.len());
                out.insert(
                    status.to_string(),
                    json!({
                        "selected": ranking.entries[..k].iter().map(|(n, _)| n).collect::<Vec<_>>(),
                        "ranking": ranking.entries,
                    }),
                );
            }
            emit("rank", to_value(learn)).json(&out)
        }
        Command::Train { learn } => {
            let cfg = experiment(common, learn)?;
            let e = emit("train", to_value(learn));
            let dir = e.out_dir()?.to_path_buf();
            let run = run_diffusion(&table(&load(common)?)?, &cfg)?;
            let mut written = Vec::new();
            for (status, model) in &run.models {
                let path = dir.join(format!("diffusion_{}.json", status.as_str().to_lowercase()));
                model.save(&path)?;
                written.push(path);
            }
            let report = dir.join("report.json");
            write_file(
                &report,
                &(serde_json::to_string_pretty(&run.report).expect("json") + "\n"),
            )?;
            written.push(report);
            let refs: Vec<&Path> = written.iter().map(PathBuf::as_path).collect();
            e.manifest(&dir.join("manifest.json"), &refs)
        }
        Command::Eval { learn, model } => {
            let cfg = experiment(common, learn)?;
            let t = table(&load(common)?)?;
            match model {
                Some(path) => {
                    let m = load_model(path)?;
                    let status = m
                        .trained_on
                        .as_deref()
                        .and_then(|s| s.parse::<TruthStatus>().ok());
                    let sub = match status {
                        Some(s) => t.with_status(s),
                        None => t.clone(),
                    };
                    let metrics = evaluate_diffusion(&m, &sub.edges, &sub.vectors, cfg.threshold)?;
                    let mut e = emit(
                        "eval",
                        json!({ "threshold": cfg.threshold, "model": file_name(path) }),
                    );
                    e.extra_inputs.push(path);
                    e.json(&json!({
                        "model": file_name(path),
                        "trained_on": m.trained_on,
                        "edges": sub.len(),
                        "metrics": metrics,
                    }))
                }
                None => {
                    let run = run_diffusion(&t, &cfg)?;
                    let (credibility, _) = run_credibility(&t, &cfg, true)?;
                    emit("eval", to_value(learn)).json(&json!({
                        "diffusion": run.report,
                        "credibility": credibility,
                    }))
                }
            }
        }
        Command::Credibility {
            learn,
            diffusion,
            model,
        } => {
            let cfg = experiment(common, learn)?;
            let t = table(&load(common)?)?;
            match model {
                Some(path) => {
                    let m = load_model(path)?;
                    let data = if m.selected_features.iter().any(|f| f == DIFFUSION_COLUMN) {
                        t.credibility_dataset(Some(&t.diffusion_labels()))?
                    } else {
                        t.credibility_dataset(None)?
                    };
                    let mut verdicts = Vec::new();
                    for (id, idx) in t.messages() {
                        let v = predict_credibility(&m, &data.subset(&idx), cfg.threshold)?;
                        verdicts.push(json!({ "message_id": id, "verdict": v }));
                    }
                    let mut e = emit(
                        "credibility",
                        json!({ "threshold": cfg.threshold, "model": file_name(path) }),
                    );
                    e.extra_inputs.push(path);
                    e.json(&verdicts)
                }
                None => {
                    let (report, _) = run_credibility(&t, &cfg, diffusion.enabled())?;
                    let mut config = to_value(learn);
                    config["with_diffusion"] = json!(diffusion.enabled());
                    emit("credibility", config).json(&report)
                }
            }
        }
        Command::Ablate { learn } => {
            let cfg = experiment(common, learn)?;
            let report = ablate_diffusion_feature(&table(&load(common)?)?, &cfg)?;
            emit("ablate", to_value(learn)).json(&report)
        }
        Command::Synth { preset, config } => {
            let mut e = emit("synth", json!({ "preset": preset }));
            let cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|err| invalid(format!("{}: {err}", path.display())))?;
                    let mut c: SynthConfig = serde_json::from_str(&text)
                        .map_err(|err| invalid(format!("{}: {err}", path.display())))?;
                    c.seed = common.seed;
                    e.extra_inputs.push(path);
                    c
                }
                None => match preset {
                    Preset::Default => SynthConfig {
                        seed: common.seed,
                        ..SynthConfig::default()
                    },
                    Preset::Coupled => SynthConfig::coupled(common.seed),
                    Preset::Uncoupled => SynthConfig::uncoupled(common.seed),
                },
            };
            let dir = e.out_dir()?.to_path_buf();
            let out = generate(&cfg)?;
            out.write(&dir)?;
            let mut files: Vec<PathBuf> = CorpusFiles::in_dir(&dir).paths().cloned().collect();
            files.push(dir.join(SCORES_FILE));
            files.push(dir.join(rumorflow::synth::GROUND_TRUTH_FILE));
            let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            // the corpus just written is an output, not an input
            let common_no_corpus = Common {
                corpus: None,
                ..common.clone()
            };
            let e = Emit {
                common: &common_no_corpus,
                ..e
            };
            e.manifest(&dir.join("manifest.json"), &refs)
        }
    }
}
