//! `ina` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 invalid model.

mod repl;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use ina_core::{
    classify, evaluate, ingest_corpus, load_model, load_test_cases, save_model, table2_experiment,
    train, Classification, DiscountStage, EvalError, EvalMode, InaModel, InferenceError,
    InjectionSpec, LemmaTable, ModelConfig, ModelError, SynonymTable, TestCase,
};
use ina_service::{AppState, FeedbackLog};
use serde_json::json;

pub use repl::repl_loop;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID_MODEL: i32 = 3;

const DEFAULT_FEEDBACK_LOG: &str = "feedback.jsonl";

#[derive(Debug, Parser)]
#[command(name = "ina", version, about = "Information-weighted query classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from a labeled CSV corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long)]
        lemmas: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.6)]
        threshold: f64,
        #[arg(long, default_value_t = 0.05)]
        band: f64,
        #[arg(long, default_value_t = 5)]
        max_candidates: usize,
        #[arg(long, value_enum, default_value_t = Stage::Post)]
        discount_stage: Stage,
    },
    /// Classify one query.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long)]
        json: bool,
    },
    /// Score a model on a labeled test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Fraction of tokens to replace with unknown words; prints the
        /// basic-vs-updated table.
        #[arg(long)]
        inject: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Lenient)]
        mode: Mode,
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        addr: String,
        #[arg(long, default_value = DEFAULT_FEEDBACK_LOG)]
        feedback_log: PathBuf,
    },
    /// Interactive classification with candidate picking.
    Repl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = DEFAULT_FEEDBACK_LOG)]
        feedback_log: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Stage {
    Post,
    Pre,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn io(context: &str, err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{context}: {err}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        let code = match err {
            ModelError::InvariantViolation { .. } => EXIT_INVALID_MODEL,
            ModelError::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(err: InferenceError) -> Self {
        CliError {
            code: EXIT_INVALID_MODEL,
            message: err.to_string(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::Inference(e) => e.into(),
            EvalError::Model(e) => e.into(),
            EvalError::InvalidSpec(_) => CliError {
                code: EXIT_USAGE,
                message: err.to_string(),
            },
            other => CliError::io("evaluation", other),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))
}

pub fn read_model(path: &Path) -> Result<InaModel, CliError> {
    let reader = open(path)?;
    load_model(reader).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                let _ = write!(stderr, "{}", err.render());
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{}", err.render());
                EXIT_OK
            };
            return code;
        }
    };
    match execute(cli.command, stdin, stdout) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(stderr, "error: {}", err.message);
            err.code
        }
    }
}

fn execute(
    command: Command,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Train {
            corpus,
            out,
            synonyms,
            lemmas,
            window,
            alpha,
            threshold,
            band,
            max_candidates,
            discount_stage,
        } => {
            let config = ModelConfig {
                alpha_f: alpha,
                window,
                threshold,
                ambiguity_band: band,
                max_candidates,
                discount_stage: match discount_stage {
                    Stage::Post => DiscountStage::PostActivation,
                    Stage::Pre => DiscountStage::PreActivation,
                },
            };
            let synonyms = match synonyms {
                Some(p) => SynonymTable::parse(&read_text(&p)?)
                    .map_err(|e| CliError::io(&p.display().to_string(), e))?,
                None => SynonymTable::default(),
            };
            let lemmas = match lemmas {
                Some(p) => LemmaTable::parse(&read_text(&p)?)
                    .map_err(|e| CliError::io(&p.display().to_string(), e))?,
                None => LemmaTable::default(),
            };
            let examples = ingest_corpus(open(&corpus)?).map_err(|e| {
                let mut err = CliError::from(e);
                err.message = format!("{}: {}", corpus.display(), err.message);
                err
            })?;
            let model = train(&examples, config, synonyms, lemmas)?;
            let file =
                File::create(&out).map_err(|e| CliError::io(&out.display().to_string(), e))?;
            save_model(&model, BufWriter::new(file))?;
            writeln!(
                stdout,
                "trained {} classes, {} words, {} weights -> {}",
                model.classes().len(),
                model.vocabulary().len(),
                model.weights().len(),
                out.display()
            )
            .map_err(|e| CliError::io("stdout", e))?;
            Ok(())
        }
        Command::Classify { model, text, json } => {
            let model = read_model(&model)?;
            let result = classify(&text, &model)?;
            let rendered = if json {
                classification_json(&result).to_string()
            } else {
                render_classification(&result, &model)
            };
            writeln!(stdout, "{rendered}").map_err(|e| CliError::io("stdout", e))
        }
        Command::Eval {
            model,
            test,
            inject,
            seed,
            mode,
            json,
        } => {
            let model = read_model(&model)?;
            let cases = load_test_cases(open(&test)?)?;
            let mode = match mode {
                Mode::Strict => EvalMode::Strict,
                Mode::Lenient => EvalMode::Lenient,
            };
            let output = match inject {
                Some(fraction) => {
                    let spec = InjectionSpec::new(fraction, seed);
                    let (irrelevant, clean): (Vec<TestCase>, Vec<TestCase>) =
                        cases.into_iter().partition(TestCase::is_irrelevant);
                    if clean.is_empty() {
                        return Err(EvalError::EmptyTestSet.into());
                    }
                    let basic = model.with_alpha(0.0)?;
                    let table =
                        table2_experiment(&basic, &model, &clean, &irrelevant, &spec, mode)?;
                    if json {
                        table.to_json().to_string()
                    } else {
                        table.to_string()
                    }
                }
                None => {
                    let report = evaluate(&model, &cases, mode)?;
                    if json {
                        serde_json::to_string(&report).expect("report serializes")
                    } else {
                        report.to_string()
                    }
                }
            };
            write!(stdout, "{}", output.trim_end())
                .and_then(|_| writeln!(stdout))
                .map_err(|e| CliError::io("stdout", e))
        }
        Command::Serve {
            model,
            addr,
            feedback_log,
        } => {
            let model = read_model(&model)?;
            let log = FeedbackLog::open(&feedback_log)
                .map_err(|e| CliError::io(&feedback_log.display().to_string(), e))?;
            let state = Arc::new(AppState::new(model, log));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("runtime", e))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| CliError::io(&addr, e))?;
                let local = listener.local_addr().map_err(|e| CliError::io(&addr, e))?;
                writeln!(stdout, "listening on http://{local}")
                    .map_err(|e| CliError::io("stdout", e))?;
                stdout.flush().map_err(|e| CliError::io("stdout", e))?;
                ina_service::serve(listener, state)
                    .await
                    .map_err(|e| CliError::io(&addr, e))
            })
        }
        Command::Repl {
            model,
            feedback_log,
        } => {
            let model = read_model(&model)?;
            let log = FeedbackLog::open(&feedback_log)
                .map_err(|e| CliError::io(&feedback_log.display().to_string(), e))?;
            repl_loop(&model, &log, stdin, stdout).map_err(|e| CliError::io("repl", e))
        }
    }
}

/// Machine-readable classification result; keys are emitted in sorted order.
pub fn classification_json(result: &Classification) -> serde_json::Value {
    let decision = &result.decision;
    let class = match decision {
        ina_core::Decision::Answered { class, .. } => json!(class),
        _ => serde_json::Value::Null,
    };
    let candidates: Vec<_> = match decision {
        ina_core::Decision::Ambiguous { candidates } => candidates
            .iter()
            .map(|c| json!({"class": c.class, "confidence": c.confidence, "example_query": c.representative}))
            .collect(),
        _ => Vec::new(),
    };
    json!({
        "status": decision.status(),
        "class": class,
        "confidence": decision.confidence(),
        "unknown_count": result.analysis.unknown_count,
        "candidates": candidates,
        "breakdown": result.breakdown,
    })
}

pub fn render_classification(result: &Classification, model: &InaModel) -> String {
    use ina_core::Decision;
    match &result.decision {
        Decision::Answered { class, confidence } => format!("class {class} (CL={confidence:.4})"),
        Decision::Ambiguous { candidates } => {
            let mut out = String::from("ambiguous, closest queries:");
            for (i, c) in candidates.iter().enumerate() {
                out.push_str(&format!(
                    "\n  {}. {} (CL={:.4}) \"{}\"",
                    i + 1,
                    c.class,
                    c.confidence,
                    c.representative
                ));
            }
            out
        }
        Decision::Rejected { best_confidence } => format!(
            "rejected: no confident answer (best CL={best_confidence:.4}, threshold {:.2}, unknown words {})",
            model.config().threshold,
            result.analysis.unknown_count
        ),
    }
}

pub fn stdio_main() -> i32 {
    let stdin = io::stdin();
    let mut stdin = stdin.lock();
    let mut stdout = io::stdout();
    let mut stderr = io::stderr();
    run(std::env::args_os(), &mut stdin, &mut stdout, &mut stderr)
}
