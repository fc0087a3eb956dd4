//! One document end to end: parse, filter, translate, reassemble, compile
//! and score, writing everything under `<out>/<doc-id>/`.

use crate::agents::{run_pipeline, AgentContext, ErrorReport, PipelineError, Summary, TermDictionary, UnitRecord};
use crate::config::{MockMode, RunConfig};
use crate::diag::{Warning, WarningKind};
use crate::evaluator::{fc_score, Engine, LogParser};
use crate::filter::{apply_filter, FilterDecision, FilterSettings, ProtectedEnvList};
use crate::generator::{compile, inject_language_preamble, reassemble, unmerge, CompileOptions, GenerateError};
use crate::llm::{
    Agent, ChatBackend, EchoBackend, LlmClient, OpenAiBackend, RuleBackend, ScriptedBackend, UsageTotals,
};
use crate::parser::{
    parse_project, Granularity, ParseError, ParsedDocument, PlaceholderKind, ProjectSource, UnitStatus,
};
use crate::prompts::PromptSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkflowError {
    /// Bad input from the caller: missing project, unreadable config files.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl WorkflowError {
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Usage(_))
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: err.to_string() }
    }
}

/// A project directory and its entry file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub root: PathBuf,
    pub main_file: String,
}

impl Document {
    /// `main_file` defaults to `main.tex` or the sole top-level file with a
    /// `\documentclass`.
    pub fn resolve(root: &Path, main_file: Option<&str>) -> Result<Self, WorkflowError> {
        if !root.is_dir() {
            return Err(WorkflowError::Usage(format!("project directory {} is not readable", root.display())));
        }
        let main_file = match main_file {
            Some(m) => m.to_string(),
            None => ProjectSource::detect_main(root).ok_or_else(|| {
                WorkflowError::Usage(format!("cannot tell the main file of {}; pass --main", root.display()))
            })?,
        };
        if !root.join(&main_file).is_file() {
            return Err(WorkflowError::Usage(format!("main file {main_file} not found in {}", root.display())));
        }
        let doc_id = root
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "document".into());
        Ok(Self { doc_id, root: root.to_path_buf(), main_file })
    }
}

/// Prompts and the protected list, loaded once per run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub prompts: PromptSet,
    pub protected: ProtectedEnvList,
}

impl Resources {
    pub fn load(config: &RunConfig) -> Result<Self, WorkflowError> {
        let prompts = match &config.prompts_dir {
            Some(dir) => PromptSet::load_dir(dir).map_err(|e| WorkflowError::Usage(e.to_string()))?,
            None => PromptSet::bundled(),
        };
        let protected = match &config.protected_envs {
            Some(path) => ProtectedEnvList::load(path)
                .map_err(|e| WorkflowError::Usage(format!("{}: {e}", path.display())))?,
            None => ProtectedEnvList::default(),
        };
        Ok(Self { prompts: prompts.for_language(&config.target_language), protected })
    }
}

/// The LLM client for one document, honouring the configured mock mode.
pub fn build_client(config: &RunConfig, doc_id: &str) -> Result<LlmClient, WorkflowError> {
    let backend: Box<dyn ChatBackend> = match config.mock.mode {
        Some(MockMode::Echo) => Box::new(EchoBackend),
        Some(MockMode::Rules) => Box::new(
            RuleBackend::new(&config.mock.rules).map_err(|e| WorkflowError::Usage(format!("mock rule: {e}")))?,
        ),
        Some(MockMode::Scripted) => {
            let path = config
                .mock
                .transcript
                .as_ref()
                .ok_or_else(|| WorkflowError::Usage("scripted mock mode needs a transcript".into()))?;
            let file = if path.is_dir() { path.join(format!("{doc_id}.json")) } else { path.clone() };
            Box::new(
                ScriptedBackend::from_file(&file)
                    .map_err(|e| WorkflowError::Usage(format!("transcript {}: {e}", file.display())))?,
            )
        }
        None => {
            let key = config.api_key.clone().or_else(|| std::env::var("OPENAI_API_KEY").ok());
            Box::new(OpenAiBackend::new(&config.endpoint, key, Duration::from_secs(config.request_timeout_secs)))
        }
    };
    Ok(LlmClient::new(backend).with_retry(config.retry.clone()).with_prices(config.prices.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderCounts {
    pub cap: usize,
    pub env: usize,
    pub file: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCounts {
    pub total: usize,
    pub sections: usize,
    pub environments: usize,
    pub captions: usize,
    pub to_translate: usize,
    pub validated: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileSummary {
    pub engine: Engine,
    pub success: bool,
    pub error_count: u32,
    pub warning_count: u32,
    /// Relative to the document's output directory.
    pub log: Option<String>,
    pub pdf: Option<String>,
}

/// Contents of `report.json`. Paths are relative to the document's output
/// directory, and nothing time-dependent is recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub doc_id: String,
    pub command: String,
    pub main_file: String,
    pub source_language: String,
    pub target_language: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub placeholders: PlaceholderCounts,
    pub units: UnitCounts,
    pub filter: Vec<FilterDecision>,
    pub rounds_used: u32,
    pub validation: Vec<ErrorReport>,
    pub unit_records: Vec<UnitRecord>,
    pub summary: Summary,
    pub dictionary: TermDictionary,
    pub usage: UsageTotals,
    pub output_files: Vec<String>,
    pub compile: Option<CompileSummary>,
    pub fc_score: Option<f64>,
    pub warnings: Vec<Warning>,
}

impl Report {
    fn new(doc: &Document, command: &str, config: &RunConfig) -> Self {
        Self {
            doc_id: doc.doc_id.clone(),
            command: command.into(),
            main_file: doc.main_file.clone(),
            source_language: config.source_language.clone(),
            target_language: config.target_language.clone(),
            status: RunStatus::Ok,
            error: None,
            placeholders: PlaceholderCounts::default(),
            units: UnitCounts::default(),
            filter: Vec::new(),
            rounds_used: 0,
            validation: Vec::new(),
            unit_records: Vec::new(),
            summary: Summary::default(),
            dictionary: TermDictionary::default(),
            usage: UsageTotals::default(),
            output_files: Vec::new(),
            compile: None,
            fc_score: None,
            warnings: Vec::new(),
        }
    }

    fn record_parse(&mut self, doc: &ParsedDocument) {
        self.placeholders = PlaceholderCounts {
            cap: doc.cap_map.len(),
            env: doc.env_map.len(),
            file: doc.merged.file_map.count_kind(PlaceholderKind::FileBegin),
        };
        self.record_units(doc);
        self.warnings.extend(doc.warnings.iter().cloned());
    }

    fn record_units(&mut self, doc: &ParsedDocument) {
        let count = |g: Granularity| doc.units.iter().filter(|u| u.granularity == g).count();
        let status = |s: UnitStatus| doc.units.iter().filter(|u| u.needs_translation && u.status == s).count();
        self.units = UnitCounts {
            total: doc.units.len(),
            sections: count(Granularity::SectionContext),
            environments: count(Granularity::Environment),
            captions: count(Granularity::Caption),
            to_translate: doc.units.iter().filter(|u| u.needs_translation).count(),
            validated: status(UnitStatus::Validated),
            failed: status(UnitStatus::Failed),
        };
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), WorkflowError> {
    let json = serde_json::to_string_pretty(value).map_err(|e| WorkflowError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, json + "\n").map_err(|e| WorkflowError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), WorkflowError> {
    fs::create_dir_all(path).map_err(|e| WorkflowError::io(path, e))
}

/// Output locations for one document.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(out_root: &Path, doc_id: &str) -> Self {
        Self { root: out_root.join(doc_id) }
    }
    pub fn tex(&self) -> PathBuf {
        self.root.join("tex")
    }
    pub fn pdf(&self) -> PathBuf {
        self.root.join("pdf")
    }
    pub fn logs(&self) -> PathBuf {
        self.root.join("logs")
    }
    pub fn maps(&self) -> PathBuf {
        self.root.join("maps")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    /// Removes the outputs of a previous run so reruns start clean.
    fn reset(&self) -> Result<(), WorkflowError> {
        for dir in [self.tex(), self.pdf(), self.logs(), self.maps()] {
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| WorkflowError::io(&dir, e))?;
            }
        }
        let report = self.report();
        if report.exists() {
            fs::remove_file(&report).map_err(|e| WorkflowError::io(&report, e))?;
        }
        create_dir(&self.root)
    }

    fn relative(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }
}

fn write_maps(layout: &OutputLayout, doc: &ParsedDocument, with_units: bool) -> Result<(), WorkflowError> {
    let maps = layout.maps();
    create_dir(&maps)?;
    let io = |p: PathBuf, r: std::io::Result<()>| r.map_err(|e| WorkflowError::io(&p, e));
    io(maps.join("cap_map.json"), doc.cap_map.write_json(&maps.join("cap_map.json")))?;
    io(maps.join("env_map.json"), doc.env_map.write_json(&maps.join("env_map.json")))?;
    io(maps.join("file_map.json"), doc.merged.file_map.write_json(&maps.join("file_map.json")))?;
    write_json(&maps.join("file_boundaries.json"), &doc.merged.file_boundaries)?;
    if with_units {
        write_json(&maps.join("units.json"), &doc.units)
    } else {
        write_json(&maps.join("units.json"), &doc.manifest())
    }
}

fn load_and_parse(doc: &Document) -> Result<ParsedDocument, WorkflowError> {
    let project = ProjectSource::load(&doc.root, &doc.main_file)?;
    Ok(parse_project(&project)?)
}

/// Parser only: writes the maps, the unit manifest and `report.json`.
pub fn parse_document(doc: &Document, config: &RunConfig, out_root: &Path) -> Result<Report, WorkflowError> {
    let layout = OutputLayout::new(out_root, &doc.doc_id);
    layout.reset()?;
    let mut report = Report::new(doc, "parse", config);
    let result = load_and_parse(doc).and_then(|parsed| {
        report.record_parse(&parsed);
        write_maps(&layout, &parsed, false)
    });
    finish(&layout, report, result)
}

fn finish(layout: &OutputLayout, mut report: Report, result: Result<(), WorkflowError>) -> Result<Report, WorkflowError> {
    if let Err(e) = &result {
        report.status = RunStatus::Failed;
        report.error = Some(e.to_string());
    }
    write_json(&layout.report(), &report)?;
    result.map(|()| report)
}

/// The full translate run for one document. The report is written even
/// when a stage after parsing fails.
pub fn translate_document(
    doc: &Document,
    config: &RunConfig,
    resources: &Resources,
    llm: &LlmClient,
    out_root: &Path,
) -> Result<Report, WorkflowError> {
    let layout = OutputLayout::new(out_root, &doc.doc_id);
    layout.reset()?;
    let mut report = Report::new(doc, "translate", config);
    let result = translate_stages(doc, config, resources, llm, &layout, &mut report);
    report.usage = llm.ledger().totals;
    let logs = layout.logs();
    create_dir(&logs)?;
    llm.write_transcript(&logs.join("transcript.json")).map_err(|e| WorkflowError::io(&logs, e))?;
    finish(&layout, report, result)
}

fn translate_stages(
    doc: &Document,
    config: &RunConfig,
    resources: &Resources,
    llm: &LlmClient,
    layout: &OutputLayout,
    report: &mut Report,
) -> Result<(), WorkflowError> {
    let mut parsed = load_and_parse(doc)?;
    report.record_parse(&parsed);
    write_maps(layout, &parsed, false)?;

    let settings = FilterSettings {
        system_prompt: resources.prompts.filter.clone(),
        model: config.model.clone(),
        params: config.params.for_agent(Agent::Filter),
        attempts: config.filter_attempts,
    };
    let (decisions, warnings) = apply_filter(&mut parsed.units, &resources.protected, llm, &settings);
    report.filter = decisions;
    report.warnings.extend(warnings);

    let pipeline_config = config.pipeline_config();
    let ctx = AgentContext::new(llm, &resources.prompts, &pipeline_config);
    let outcome = run_pipeline(&mut parsed.units, &ctx);
    report.record_units(&parsed);
    write_maps(layout, &parsed, true)?;
    let outcome = outcome?;
    report.rounds_used = outcome.rounds_used;
    report.validation = outcome.reports;
    report.unit_records = outcome.records;
    report.summary = outcome.summary;
    report.dictionary = outcome.dictionary;
    report.warnings.extend(outcome.warnings);

    let full_text = reassemble(&parsed.units, &parsed.cap_map, &parsed.env_map, &parsed.merged)?;
    let tex = layout.tex();
    copy_project_files(&doc.root, &tex, &layout.root)?;
    let written = unmerge(&full_text, &parsed.merged, &tex)?;
    if config.inject_preamble {
        let main = tex.join(&doc.main_file);
        let text = fs::read_to_string(&main).map_err(|e| WorkflowError::io(&main, e))?;
        let (injected, warning) = inject_language_preamble(&text, &config.target_language, &config.preamble);
        report.warnings.extend(warning);
        if injected != text {
            fs::write(&main, injected).map_err(|e| WorkflowError::io(&main, e))?;
        }
    }
    report.output_files = written.iter().map(|p| layout.relative(p)).collect();

    if config.compile {
        compile_and_score(doc, config, layout, report)?;
    }
    Ok(())
}

/// Copies every project file into `dest`, skipping hidden entries and the
/// output tree itself.
fn copy_project_files(root: &Path, dest: &Path, out_dir: &Path) -> Result<(), WorkflowError> {
    let skip = out_dir.canonicalize().ok();
    let walker = walkdir::WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        let hidden = e.depth() > 0 && e.file_name().to_string_lossy().starts_with('.');
        let inside_out = skip.as_ref().is_some_and(|s| e.path().canonicalize().is_ok_and(|p| p.starts_with(s)));
        !hidden && !inside_out
    });
    for entry in walker {
        let entry = entry.map_err(|e| WorkflowError::Io { path: root.to_path_buf(), message: e.to_string() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let target = dest.join(rel);
        if let Some(parent) = target.parent() {
            create_dir(parent)?;
        }
        fs::copy(entry.path(), &target).map_err(|e| WorkflowError::io(&target, e))?;
    }
    create_dir(dest)
}

fn list_files(dir: &Path) -> BTreeSet<PathBuf> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect()
}

/// Compiles `tex/`, moves the log and PDF into `logs/` and `pdf/`, removes
/// other engine by-products, and records the FC-score.
fn compile_and_score(
    doc: &Document,
    config: &RunConfig,
    layout: &OutputLayout,
    report: &mut Report,
) -> Result<(), WorkflowError> {
    let tex = layout.tex();
    let engine = config.engine();
    let opts = CompileOptions {
        engine,
        program: config.engine_program.clone(),
        timeout: Duration::from_secs(config.compile_timeout_secs),
        passes: config.compile_passes,
        log_parser: LogParser::new(&config.log_patterns).map_err(|e| WorkflowError::Usage(e.to_string()))?,
    };
    let before = list_files(&tex);
    let compiled = compile(&tex, &doc.main_file, &opts);
    let stem = Path::new(&doc.main_file).with_extension("");
    let mut moved_log = None;
    let mut moved_pdf = None;
    for path in list_files(&tex).difference(&before) {
        let is = |ext: &str| path == &tex.join(stem.with_extension(ext));
        let dest = if is("log") {
            Some(layout.logs().join(stem.with_extension("log")))
        } else if is("pdf") {
            Some(layout.pdf().join(stem.with_extension("pdf")))
        } else {
            None
        };
        match dest {
            Some(dest) => {
                if let Some(parent) = dest.parent() {
                    create_dir(parent)?;
                }
                fs::rename(path, &dest).map_err(|e| WorkflowError::io(&dest, e))?;
                if is("log") {
                    moved_log = Some(layout.relative(&dest));
                } else {
                    moved_pdf = Some(layout.relative(&dest));
                }
            }
            None => fs::remove_file(path).map_err(|e| WorkflowError::io(path, e))?,
        }
    }
    match compiled {
        Ok(r) => {
            report.fc_score = Some(fc_score(&config.fc_score, r.error_count, r.warning_count, r.success));
            report.compile = Some(CompileSummary {
                engine: r.engine,
                success: r.success,
                error_count: r.error_count,
                warning_count: r.warning_count,
                log: moved_log,
                pdf: moved_pdf.filter(|_| r.success),
            });
        }
        Err(e @ (GenerateError::EngineNotFound(_) | GenerateError::EngineTimeout { .. })) => {
            report.warnings.push(Warning::new(WarningKind::Compile, format!("compilation skipped: {e}")));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
