use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use texlate::config::{EngineChoice, MockMode, RunConfig};
use texlate::evaluator::{score_corpus, CompileReport, Engine, LogParser};
use texlate::workflow::{self, Document, Report, Resources, WorkflowError};

const EXIT_USAGE: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

#[derive(Parser)]
#[command(name = "texlate", version, about = "Translate LaTeX projects while keeping them compilable")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate one or more projects and compile the results.
    Translate(TranslateArgs),
    /// Run the parser only and write maps and the unit manifest.
    Parse(ProjectArgs),
    /// Compute FC-scores from compile logs or report.json files.
    Score(ScoreArgs),
    /// Validate a configuration file and print the effective settings.
    ConfigCheck(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Project directory; repeat for several documents.
    #[arg(long = "project", required = true)]
    projects: Vec<PathBuf>,
    /// Entry file relative to each project directory.
    #[arg(long)]
    main: Option<String>,
    /// Output root; defaults to the configured out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TranslateArgs {
    #[command(flatten)]
    project: ProjectArgs,
    #[arg(long = "from")]
    source_language: Option<String>,
    #[arg(long = "to")]
    target_language: Option<String>,
    /// auto, pdflatex or xelatex.
    #[arg(long)]
    engine: Option<EngineChoice>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Offline backend: echo, scripted or rules.
    #[arg(long)]
    mock: Option<MockMode>,
    /// Reply file (or directory of `<doc-id>.json`) for the scripted mock.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Skip the target-language preamble lines.
    #[arg(long)]
    no_preamble: bool,
    /// Stop after writing the translated sources.
    #[arg(long)]
    no_compile: bool,
    /// Documents processed in parallel.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// `.log` files or `report.json` files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Also write the scores as JSON (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

/// An error plus the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    match &args.config {
        Some(path) => RunConfig::load(path).map_err(usage),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(config: &mut RunConfig, args: &TranslateArgs) {
    let set = |slot: &mut String, value: &Option<String>| {
        if let Some(v) = value {
            *slot = v.clone();
        }
    };
    set(&mut config.source_language, &args.source_language);
    set(&mut config.target_language, &args.target_language);
    set(&mut config.endpoint, &args.endpoint);
    set(&mut config.model, &args.model);
    if let Some(e) = args.engine {
        config.engine = e;
    }
    if let Some(r) = args.max_rounds {
        config.max_validation_rounds = r;
    }
    if let Some(m) = args.mock {
        config.mock.mode = Some(m);
    }
    if let Some(t) = &args.transcript {
        config.mock.transcript = Some(t.clone());
    }
    if args.no_preamble {
        config.inject_preamble = false;
    }
    if args.no_compile {
        config.compile = false;
    }
    if let Some(j) = args.jobs {
        config.jobs = j;
    }
    if let Some(out) = &args.project.out {
        config.out_dir = out.clone();
    }
}

/// Resolves every project up front; ids that collide get a numeric suffix.
fn resolve_documents(args: &ProjectArgs) -> Result<Vec<Document>, Failure> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut docs = Vec::new();
    for root in &args.projects {
        let mut doc = Document::resolve(root, args.main.as_deref()).map_err(usage)?;
        let n = seen.entry(doc.doc_id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            doc.doc_id = format!("{}-{n}", doc.doc_id);
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot start worker pool")
        .map_err(|error| Failure { code: EXIT_PIPELINE, error })
}

/// Prints one line per document and picks the exit status.
fn summarize(docs: &[Document], results: Vec<Result<Report, WorkflowError>>) -> Result<(), Failure> {
    let mut worst = 0;
    let mut failed = 0;
    for (doc, result) in docs.iter().zip(results) {
        match result {
            Ok(report) => {
                let score = report.fc_score.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"));
                emit(&format!(
                    "{}: ok, {} units ({} to translate, {} failed), {} warnings, fc-score {score}\n",
                    doc.doc_id,
                    report.units.total,
                    report.units.to_translate,
                    report.units.failed,
                    report.warnings.len()
                ));
            }
            Err(e) => {
                eprintln!("{}: {e}", doc.doc_id);
                failed += 1;
                worst = worst.max(if e.is_usage() { EXIT_USAGE } else { EXIT_PIPELINE });
            }
        }
    }
    match worst {
        0 => Ok(()),
        code => Err(Failure { code, error: anyhow::anyhow!("{failed} of {} document(s) failed", docs.len()) }),
    }
}

fn cmd_translate(args: TranslateArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.project.config)?;
    apply_overrides(&mut config, &args);
    config.validate().map_err(usage)?;
    let docs = resolve_documents(&args.project)?;
    let resources = Resources::load(&config).map_err(usage)?;
    let out = config.out_dir.clone();
    let results: Vec<Result<Report, WorkflowError>> = pool(config.jobs)?.install(|| {
        docs.par_iter()
            .map(|doc| {
                let llm = workflow::build_client(&config, &doc.doc_id)?;
                workflow::translate_document(doc, &config, &resources, &llm, &out)
            })
            .collect()
    });
    summarize(&docs, results)
}

fn cmd_parse(args: ProjectArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    let docs = resolve_documents(&args)?;
    let out = config.out_dir.clone();
    let results = pool(config.jobs)?
        .install(|| docs.par_iter().map(|doc| workflow::parse_document(doc, &config, &out)).collect());
    summarize(&docs, results)
}

/// Reads a compile outcome from a `report.json` or a raw engine log.
fn read_outcome(path: &Path, parser: &LogParser) -> anyhow::Result<Option<CompileReport>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let report: Report = serde_json::from_slice(&bytes).with_context(|| format!("{} is not a report", path.display()))?;
        return Ok(report.compile.map(|c| CompileReport {
            engine: c.engine,
            success: c.success,
            error_count: c.error_count,
            warning_count: c.warning_count,
            log_path: c.log.map(PathBuf::from).unwrap_or_default(),
            elapsed_ms: 0,
        }));
    }
    let counts = parser.parse(&String::from_utf8_lossy(&bytes));
    Ok(Some(CompileReport {
        engine: Engine::Pdflatex,
        success: counts.compiled,
        error_count: counts.error_count,
        warning_count: counts.warning_count,
        log_path: path.to_path_buf(),
        elapsed_ms: 0,
    }))
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    let parser = LogParser::new(&config.log_patterns).map_err(usage)?;
    let mut reports = Vec::new();
    for path in &args.paths {
        match read_outcome(path, &parser).map_err(usage)? {
            Some(r) => reports.push((path.display().to_string(), r)),
            None => log::warn!("{} has no compile result; skipped", path.display()),
        }
    }
    let scores = score_corpus(&reports, &config.fc_score).map_err(usage)?;
    emit(&scores.to_table());
    if let Some(dest) = &args.json {
        let json = serde_json::to_string_pretty(&scores).map_err(usage)? + "\n";
        if dest.as_os_str() == "-" {
            emit(&json);
        } else {
            fs::write(dest, json).with_context(|| format!("cannot write {}", dest.display())).map_err(usage)?;
        }
    }
    Ok(())
}

fn cmd_config_check(args: ConfigArgs) -> Result<(), Failure> {
    let config = load_config(&args)?;
    let mut shown = config.clone();
    if shown.api_key.is_some() {
        shown.api_key = Some("<set>".into());
    }
    let json = serde_json::to_string_pretty(&shown).map_err(usage)?;
    emit(&(json + "\n"));
    Ok(())
}

// A closed pipe (e.g. `| head`) is not an error worth reporting.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Translate(a) => cmd_translate(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Score(a) => cmd_score(a),
        Command::ConfigCheck(a) => cmd_config_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
