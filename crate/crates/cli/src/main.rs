use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kbqa_core::eval::{load_dataset, run_eval, write_outputs, EvalOptions};
use kbqa_core::kb::{load_kb_dir, validate_kb_dir, KnowledgeBase, LoadMode, Value};
use kbqa_core::pipeline::{Models, Pipeline, PipelineConfig};
use kbqa_core::scoring::{ExternalConfig, ModelError};
use kbqa_core::training::{emit_training_pairs, write_jsonl, PairKind, TrainingOptions, DEFAULT_NEGATIVES};

#[derive(Parser)]
#[command(name = "kbqa", version, about = "Schema-guided question answering over a knowledge base")]
struct Cli {
    /// Directory holding facts.tsv, ontology.tsv, classes.tsv, names.tsv and aliases.tsv.
    #[arg(long, global = true, env = "SGKBQA_KB_DIR")]
    kb_dir: Option<PathBuf>,

    /// Synthesize ontology triples for undeclared relations instead of failing.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, validate or summarize the knowledge base.
    Kb {
        #[arg(value_enum)]
        action: KbAction,
        /// Print machine-readable JSON.
        #[arg(long)]
        json: bool,
    },
    /// Answer one question.
    Ask {
        question: String,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Write the stage trace as JSON to this path. With `-` the trace
        /// replaces the usual answer lines on stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate a dataset and write report.json and results.jsonl.
    Eval {
        dataset: PathBuf,
        #[arg(long, short, default_value = "eval-out")]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Record per-question wall time in results.jsonl.
        #[arg(long)]
        timing: bool,
    },
    /// Emit training pairs for one of the model components.
    EmitTraining {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        kind: TrainingKind,
        /// Output path; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NEGATIVES)]
        negatives: usize,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KbAction {
    Load,
    Validate,
    Stats,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainingKind {
    RelationScorer,
    Generator,
    FallbackRanker,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Grailqa,
    Webqsp,
}

#[derive(Args)]
struct PipelineArgs {
    /// Parameter defaults to start from.
    #[arg(long, value_enum, default_value = "grailqa")]
    profile: Profile,
    #[arg(long)]
    k_relations: Option<usize>,
    #[arg(long)]
    k_sketches: Option<usize>,
    #[arg(long)]
    k_pop: Option<usize>,
    #[arg(long)]
    k_conn: Option<usize>,
    #[arg(long)]
    k_entities: Option<usize>,
    #[arg(long)]
    k_beam: Option<usize>,
    #[arg(long)]
    no_fallback: bool,
    /// `builtin`, an http(s) URL, or `cmd:<program>`.
    #[arg(long)]
    scorer: Option<String>,
    /// `builtin`, `none`, an http(s) URL, or `cmd:<program>`.
    #[arg(long)]
    generator: Option<String>,
    /// `builtin`, an http(s) URL, or `cmd:<program>`.
    #[arg(long)]
    sketcher: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Score only relations sharing a word with the question.
    #[arg(long)]
    relation_prefilter: bool,
    /// Per-request timeout for external models, in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Retries for transient external-model failures.
    #[arg(long, default_value_t = 2)]
    retries: u32,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = match self.profile {
            Profile::Grailqa => PipelineConfig::grailqa(),
            Profile::Webqsp => PipelineConfig::webqsp(),
        };
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.k_relations, self.k_relations);
        set(&mut cfg.k_sketches, self.k_sketches);
        set(&mut cfg.k_pop, self.k_pop);
        set(&mut cfg.k_conn, self.k_conn);
        set(&mut cfg.k_entities, self.k_entities);
        set(&mut cfg.k_beam, self.k_beam);
        set(&mut cfg.workers, self.workers);
        cfg.fallback_enabled = !self.no_fallback;
        cfg.relation_prefilter = self.relation_prefilter;
        for (slot, v) in [
            (&mut cfg.scorer, &self.scorer),
            (&mut cfg.generator, &self.generator),
            (&mut cfg.sketcher, &self.sketcher),
        ] {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn external(&self) -> ExternalConfig {
        ExternalConfig {
            timeout: Duration::from_millis(self.timeout_ms),
            retries: self.retries,
            ..ExternalConfig::default()
        }
    }

    fn models(&self, cfg: &PipelineConfig) -> Result<Models, Failure> {
        Models::from_config(cfg, self.external()).map_err(|e| match e {
            ModelError::BadEndpoint(_) => Failure::Usage(e.to_string()),
            _ => Failure::Model(e),
        })
    }
}

enum Failure {
    NoAnswer,
    Usage(String),
    Data(String),
    Model(ModelError),
    ModelRun(String),
    Io(io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::NoAnswer => 1,
            Failure::Usage(_) => 2,
            Failure::Data(_) | Failure::Io(_) => 3,
            Failure::Model(_) | Failure::ModelRun(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::NoAnswer => f.write_str("no executable logical form"),
            Failure::Usage(m) | Failure::Data(m) | Failure::ModelRun(m) => f.write_str(m),
            Failure::Model(e) => write!(f, "external model error: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e)
    }
}

fn kb_dir(cli: &Cli) -> Result<&Path, Failure> {
    let dir = cli
        .kb_dir
        .as_deref()
        .ok_or_else(|| Failure::Usage("no knowledge base given; pass --kb-dir or set SGKBQA_KB_DIR".into()))?;
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("knowledge base directory {} does not exist", dir.display())));
    }
    Ok(dir)
}

fn load(cli: &Cli) -> Result<KnowledgeBase, Failure> {
    let mode = if cli.lenient { LoadMode::Lenient } else { LoadMode::Strict };
    load_kb_dir(kb_dir(cli)?, mode).map_err(|e| Failure::Data(e.to_string()))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_kb(cli: &Cli, action: KbAction, json: bool) -> Result<(), Failure> {
    match action {
        KbAction::Validate => {
            let report = validate_kb_dir(kb_dir(cli)?).map_err(|e| Failure::Data(e.to_string()))?;
            if json {
                print_json(&report)?;
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                if report.is_clean() {
                    println!("ok");
                }
            }
            if !report.is_clean() {
                return Err(Failure::Data(format!("{} violation(s)", report.violations.len())));
            }
        }
        KbAction::Load | KbAction::Stats => {
            let kb = load(cli)?;
            let s = kb.stats();
            if json {
                print_json(&s)?;
            } else if matches!(action, KbAction::Load) {
                println!(
                    "loaded {} entities, {} relations, {} classes, {} facts, {} aliases",
                    s.entities, s.relations, s.classes, s.facts, s.aliases
                );
            } else {
                println!("entities\t{}", s.entities);
                println!("relations\t{}", s.relations);
                println!("classes\t{}", s.classes);
                println!("facts\t{}", s.facts);
                println!("aliases\t{}", s.aliases);
            }
        }
    }
    Ok(())
}

fn answer_line(kb: &KnowledgeBase, v: &Value) -> String {
    match v {
        Value::Entity(e) => match kb.name_of(e.as_str()) {
            Some(name) => format!("{e}\t{name}"),
            None => e.to_string(),
        },
        Value::Literal(l) => l.to_typed_string(),
    }
}

fn cmd_ask(cli: &Cli, question: &str, args: &PipelineArgs, trace_path: Option<&Path>) -> Result<(), Failure> {
    let cfg = args.config()?;
    let kb = load(cli)?;
    let models = args.models(&cfg)?;
    let pipeline = Pipeline::new(&kb, cfg, models);
    let trace = pipeline.answer(question)?;
    let trace_on_stdout = trace_path == Some(Path::new("-"));
    if let Some(path) = trace_path {
        if trace_on_stdout {
            print_json(&trace)?;
        } else {
            let mut f = fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut f, &trace).map_err(io::Error::from)?;
            writeln!(f)?;
        }
    }
    let Some(answer) = &trace.final_answer else {
        return Err(Failure::NoAnswer);
    };
    if trace_on_stdout {
        return Ok(());
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{}", answer.sexpr)?;
    for v in answer.answers.values() {
        writeln!(out, "{}", answer_line(&kb, &v))?;
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, dataset: &Path, out: &Path, args: &PipelineArgs, timing: bool) -> Result<(), Failure> {
    let cfg = args.config()?;
    let rows = load_dataset(dataset).map_err(|e| Failure::Data(e.to_string()))?;
    let kb = load(cli)?;
    let models = args.models(&cfg)?;
    let pipeline = Pipeline::new(&kb, cfg, models);
    let (report, results) = run_eval(&rows, &pipeline, EvalOptions { record_timing: timing })
        .map_err(|e| Failure::Data(e.to_string()))?;
    write_outputs(out, &report, &results)?;

    let fmt_em = |em: Option<f64>| em.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!("{:<14} {:>5} {:>6} {:>6} {:>6} {:>9}", "level", "n", "em", "f1", "hit", "fallback");
    let rows = report
        .levels
        .iter()
        .map(|(l, m)| (l.as_str(), m))
        .chain(std::iter::once(("overall", &report.overall)));
    for (name, m) in rows {
        println!(
            "{:<14} {:>5} {:>6} {:>6.3} {:>6.3} {:>9.3}",
            name,
            m.count,
            fmt_em(m.em),
            m.f1,
            m.hit,
            m.fallback_rate
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| r.model_failure).collect();
    if let Some(first) = failed.first() {
        return Err(Failure::ModelRun(format!(
            "{} question(s) failed on the external model; first ({}): {}",
            failed.len(),
            first.qid,
            first.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

fn cmd_emit(
    cli: &Cli,
    dataset: &Path,
    kind: TrainingKind,
    out: Option<&Path>,
    negatives: usize,
    args: &PipelineArgs,
) -> Result<(), Failure> {
    let cfg = args.config()?;
    let rows = load_dataset(dataset).map_err(|e| Failure::Data(e.to_string()))?;
    let kb = load(cli)?;
    let models = args.models(&cfg)?;
    let kind = match kind {
        TrainingKind::RelationScorer => PairKind::RelationScorer,
        TrainingKind::Generator => PairKind::Generator,
        TrainingKind::FallbackRanker => PairKind::FallbackRanker,
    };
    let options = TrainingOptions {
        negatives,
        seed: cfg.seed,
        scorer: models.scorer.as_ref(),
        k_relations: cfg.k_relations,
    };
    let emission = emit_training_pairs(&rows, &kb, kind, options)?;
    match out {
        Some(path) => write_jsonl(&emission.pairs, io::BufWriter::new(fs::File::create(path)?))?,
        None => write_jsonl(&emission.pairs, io::stdout().lock())?,
    }
    log::info!("{} pairs, {} rows skipped", emission.pairs.len(), emission.skipped);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Kb { action, json } => cmd_kb(cli, *action, *json),
        Command::Ask {
            question,
            pipeline,
            trace,
        } => cmd_ask(cli, question, pipeline, trace.as_deref()),
        Command::Eval {
            dataset,
            out,
            pipeline,
            timing,
        } => cmd_eval(cli, dataset, out, pipeline, *timing),
        Command::EmitTraining {
            dataset,
            kind,
            out,
            negatives,
            pipeline,
        } => cmd_emit(cli, dataset, *kind, out.as_deref(), *negatives, pipeline),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kbqa: {e}");
            ExitCode::from(e.code())
        }
    }
}
