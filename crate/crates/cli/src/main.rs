use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use topicforge::defmine::{
    eval_classifier, eval_rule_baseline, read_category_file, train_sentence_classifier, DefinitionCategory,
    LinearConfig, SentenceClassifier,
};
use topicforge::nertag::{augment, read_labeled_file, train_tagger, AugmentMode, EntityBank, LabelSet, TaggerConfig};
use topicforge::pipeline::{
    build_kb, export_kb, load_corpus, now_unix, run_full, viterbi_suite, ConfigOverrides, Models, PipelineConfig,
    PipelineError, PipelineState, UpdateEvent, UpdateOutcome,
};
use topicforge::topicrank::{cross_validate_auc, labeled_rows, read_label_file, train_gbdt, GbdtConfig};
use topicforge::{GbdtModel, TaggerModel};

#[derive(Parser)]
#[command(name = "topicforge", version, about = "Mine topic cards from a document corpus")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output directory for the knowledge base.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shortlist size before reranking.
    #[arg(long, global = true)]
    top_n: Option<usize>,
    /// Length of each related list on a card.
    #[arg(long, global = true)]
    card_k: Option<usize>,
    /// Factorization memory budget in bytes.
    #[arg(long, global = true)]
    mem_budget: Option<u64>,
    /// Abbreviation list, one per line, replacing the built-in one.
    #[arg(long, global = true)]
    abbreviations: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Augment {
    Lowercase,
    EntityReplace,
}

#[derive(Subcommand)]
enum Command {
    /// Process the corpus into a fresh state file.
    Ingest,
    /// Train the token tagger from labeled JSONL.
    TrainTagger {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, value_enum)]
        augment: Option<Augment>,
        /// Replacement surfaces per type, for entity-replace augmentation.
        #[arg(long)]
        entity_bank: Option<PathBuf>,
    },
    /// Train the topic reranker on candidates in the state file.
    TrainRanker {
        /// `key,label` CSV.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Train the definition sentence classifier.
    TrainDefclassifier {
        /// `category,text` CSV.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Held-out `category,text` CSV to report F1 on.
        #[arg(long)]
        eval: Option<PathBuf>,
    },
    /// Full run: ingest, rank, build and export the knowledge base.
    Mine,
    /// Apply a JSONL stream of upsert/delete events to the state file.
    Update {
        #[arg(long)]
        events: PathBuf,
    },
    /// Recompute the ranked topic list from current counters.
    Refresh,
    /// Build and export the knowledge base from the state file.
    Export,
    /// Decoder checks, and optionally ranker AUC and classifier F1.
    Eval {
        #[arg(long, default_value_t = 1000)]
        optimality_cases: usize,
        #[arg(long, default_value_t = 10_000)]
        validity_cases: usize,
        /// `key,label` CSV scored against the state's candidates.
        #[arg(long)]
        ranker_labels: Option<PathBuf>,
        /// `category,text` CSV for definition F1.
        #[arg(long)]
        def_data: Option<PathBuf>,
    },
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

fn stage<E: Into<BoxError>>(name: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::stage(name, e.into())
}

fn load_config(g: &Global) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &g.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    config.apply(&ConfigOverrides {
        corpus: g.corpus.clone(),
        out: g.out.clone(),
        seed: g.seed,
        top_n: g.top_n,
        card_k: g.card_k,
        mem_budget: g.mem_budget,
    });
    if let Some(p) = &g.abbreviations {
        config.abbreviations = Some(p.clone());
    }
    Ok(config)
}

fn load_state(config: &PipelineConfig) -> Result<PipelineState, PipelineError> {
    if !config.state.exists() {
        return Err(PipelineError::Config(format!(
            "no state at {}; run ingest or mine first",
            config.state.display()
        )));
    }
    PipelineState::load(&config.state)
}

fn load_ranker(config: &PipelineConfig) -> Result<Option<GbdtModel>, PipelineError> {
    config
        .ranker_model
        .as_ref()
        .map(|p| GbdtModel::load_json(p).map_err(stage("load ranker")))
        .transpose()
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn read_events(path: &Path) -> Result<Vec<UpdateEvent>, PipelineError> {
    let file = std::fs::File::open(path).map_err(stage("read events"))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(stage("read events"))?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|e| PipelineError::stage("read events", format!("line {}: {e}", i + 1).into()))?;
        events.push(event);
    }
    Ok(events)
}

fn binary_rows(rows: Vec<(String, DefinitionCategory)>) -> Vec<(String, bool)> {
    rows.into_iter().map(|(t, c)| (t, c == DefinitionCategory::Sufficient)).collect()
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let config = load_config(&cli.global)?;
    match cli.command {
        Command::Ingest => {
            config.validate()?;
            let corpus = config.corpus.as_deref().ok_or_else(|| PipelineError::Config("no corpus given".into()))?;
            let models = Models::load(&config)?;
            let mut state = PipelineState::new();
            state.ingest(load_corpus(corpus)?, &models)?;
            state.save(&config.state)?;
            print_json(&json!({ "documents": state.documents.len(), "candidates": state.store.len() }));
        }
        Command::TrainTagger {
            data,
            output,
            gamma,
            epochs,
            augment: mode,
            entity_bank,
        } => {
            let labels = LabelSet::new(&config.entity_types).map_err(|e| PipelineError::Config(e.to_string()))?;
            let mut rows = read_labeled_file(&data, &labels).map_err(stage("read training data"))?;
            if let Some(mode) = mode {
                let bank = entity_bank
                    .as_ref()
                    .map(EntityBank::from_json_file)
                    .transpose()
                    .map_err(stage("read entity bank"))?;
                let mode = match mode {
                    Augment::Lowercase => AugmentMode::Lowercase,
                    Augment::EntityReplace => AugmentMode::EntityReplace,
                };
                rows = augment(&rows, mode, bank.as_ref(), &labels, config.seed).map_err(stage("augment"))?;
            }
            let defaults = TaggerConfig::default();
            let tc = TaggerConfig {
                gamma: gamma.unwrap_or(defaults.gamma),
                epochs: epochs.unwrap_or(defaults.epochs),
                seed: config.seed,
                ..defaults
            };
            let model: TaggerModel = train_tagger(&rows, &labels, &tc).map_err(stage("train tagger"))?;
            model.save_json(&output).map_err(stage("save tagger"))?;
            print_json(&json!({ "sentences": rows.len(), "training_loss": model.training_loss() }));
        }
        Command::TrainRanker { labels, output, folds } => {
            let state = load_state(&config)?;
            let labels = read_label_file(&labels).map_err(stage("read ranker labels"))?;
            let candidates: Vec<_> = state.store.candidates().cloned().collect();
            let rows = labeled_rows::<f64>(&candidates, &labels);
            let gc = GbdtConfig {
                seed: config.seed,
                ..GbdtConfig::default()
            };
            let aucs = cross_validate_auc(&rows, &gc, folds).map_err(stage("cross-validate ranker"))?;
            let model = train_gbdt(&rows, &gc).map_err(stage("train ranker"))?;
            model.save_json(&output).map_err(stage("save ranker"))?;
            print_json(&json!({ "rows": rows.len(), "fold_auc": aucs }));
        }
        Command::TrainDefclassifier { data, output, eval } => {
            let rows = read_category_file(&data).map_err(stage("read classifier data"))?;
            let lc = LinearConfig {
                seed: config.seed,
                ..LinearConfig::default()
            };
            let model: SentenceClassifier<f64> = train_sentence_classifier(&rows, &lc).map_err(stage("train classifier"))?;
            model.save_json(&output).map_err(stage("save classifier"))?;
            let mut report = json!({ "rows": rows.len() });
            if let Some(p) = eval {
                let held = binary_rows(read_category_file(&p).map_err(stage("read eval data"))?);
                report["linear"] = json!(eval_classifier(&model, &held).map_err(stage("evaluate"))?);
                report["rule"] = json!(eval_rule_baseline(&held).map_err(stage("evaluate"))?);
            }
            print_json(&report);
        }
        Command::Mine => {
            let (_, kb) = run_full(&config)?;
            print_json(&json!({ "cards": kb.cards.len(), "run_id": kb.manifest.run_id, "out": config.out }));
        }
        Command::Update { events } => {
            let events = read_events(&events)?;
            let mut state = load_state(&config)?;
            let models = Models::load(&config)?;
            let (mut inserted, mut replaced, mut deleted, mut unknown) = (0, 0, 0, 0);
            for e in events {
                match state.apply_update(e, &models)? {
                    UpdateOutcome::Inserted => inserted += 1,
                    UpdateOutcome::Replaced => replaced += 1,
                    UpdateOutcome::Deleted => deleted += 1,
                    UpdateOutcome::UnknownDocument => unknown += 1,
                }
            }
            state.save(&config.state)?;
            print_json(&json!({
                "inserted": inserted, "replaced": replaced, "deleted": deleted, "unknown_deletes": unknown
            }));
        }
        Command::Refresh => {
            let mut state = load_state(&config)?;
            let ranker = load_ranker(&config)?;
            let ranked = state.rank_refresh(ranker.as_ref(), &config).clone();
            state.save(&config.state)?;
            print_json(&json!(ranked));
        }
        Command::Export => {
            let state = load_state(&config)?;
            let kb = build_kb(&state, &config, now_unix())?;
            export_kb(&kb, &config.out)?;
            print_json(&json!({ "cards": kb.cards.len(), "run_id": kb.manifest.run_id, "out": config.out }));
        }
        Command::Eval {
            optimality_cases,
            validity_cases,
            ranker_labels,
            def_data,
        } => {
            let mut report = json!({ "viterbi": viterbi_suite(optimality_cases, validity_cases, config.seed) });
            if let Some(p) = ranker_labels {
                let state = load_state(&config)?;
                let labels = read_label_file(&p).map_err(stage("read ranker labels"))?;
                let candidates: Vec<_> = state.store.candidates().cloned().collect();
                let rows = labeled_rows::<f64>(&candidates, &labels);
                let gc = GbdtConfig {
                    seed: config.seed,
                    ..GbdtConfig::default()
                };
                report["ranker_fold_auc"] = json!(cross_validate_auc(&rows, &gc, 5).map_err(stage("cross-validate ranker"))?);
            }
            if let Some(p) = def_data {
                let rows = binary_rows(read_category_file(&p).map_err(stage("read classifier data"))?);
                report["rule_baseline"] = json!(eval_rule_baseline(&rows).map_err(stage("evaluate"))?);
                if let Some(c) = &config.def_classifier {
                    let model = SentenceClassifier::<f64>::load_json(c).map_err(stage("load classifier"))?;
                    report["classifier"] = json!(eval_classifier(&model, &rows).map_err(stage("evaluate"))?);
                }
            }
            print_json(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                PipelineError::Config(_) => ExitCode::from(2),
                PipelineError::Stage { .. } => ExitCode::from(3),
            }
        }
    }
}
