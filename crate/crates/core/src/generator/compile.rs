use super::GenerateError;
use crate::evaluator::{CompileReport, Engine, LogParser};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub engine: Engine,
    /// Executable to run instead of looking up the engine name on PATH.
    pub program: Option<PathBuf>,
    /// Wall-clock cap per pass.
    pub timeout: Duration,
    pub passes: u32,
    pub log_parser: LogParser,
}

impl CompileOptions {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine,
            program: None,
            timeout: Duration::from_secs(300),
            passes: 2,
            log_parser: LogParser::default(),
        }
    }
}

pub fn find_on_path(program: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|dir| dir.join(program)).find(|p| p.is_file())
}

/// Runs the engine over `main_file` inside `dir`. A failed compile is
/// reported through the returned counts, not as an error.
pub fn compile(dir: &Path, main_file: &str, opts: &CompileOptions) -> Result<CompileReport, GenerateError> {
    let name = opts.engine.program();
    let program = match &opts.program {
        Some(p) if p.is_file() => p.clone(),
        Some(p) => return Err(GenerateError::EngineNotFound(p.display().to_string())),
        None => find_on_path(name).ok_or_else(|| GenerateError::EngineNotFound(name.to_string()))?,
    };

    let started = Instant::now();
    let mut exit_ok = false;
    for _ in 0..opts.passes.max(1) {
        let mut child = Command::new(&program)
            .arg("-interaction=nonstopmode")
            .arg(main_file)
            .current_dir(dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| GenerateError::io(&program, e))?;
        let deadline = Instant::now() + opts.timeout;
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| GenerateError::io(&program, e))? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(GenerateError::EngineTimeout { engine: name.to_string(), secs: opts.timeout.as_secs() });
            }
            thread::sleep(Duration::from_millis(20));
        };
        exit_ok = status.success();
    }

    let stem = Path::new(main_file).with_extension("");
    let log_path = dir.join(stem.with_extension("log"));
    let pdf_path = dir.join(stem.with_extension("pdf"));
    let log_text = fs::read(&log_path).map(|b| String::from_utf8_lossy(&b).into_owned()).unwrap_or_default();
    let counts = opts.log_parser.parse(&log_text);
    Ok(CompileReport {
        engine: opts.engine,
        success: exit_ok && counts.compiled && pdf_path.is_file(),
        error_count: counts.error_count,
        warning_count: counts.warning_count,
        log_path,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use std::os::unix::fs::PermissionsExt;

    fn stub(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("fake-tex");
        fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn opts(program: PathBuf) -> CompileOptions {
        CompileOptions { program: Some(program), ..CompileOptions::new(Engine::Pdflatex) }
    }

    #[test]
    fn missing_engine_fails_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let o = opts(dir.path().join("nope"));
        assert!(matches!(compile(dir.path(), "main.tex", &o), Err(GenerateError::EngineNotFound(_))));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn stub_success_and_failure() {
        let bin = tempfile::tempdir().unwrap();
        let work = tempfile::tempdir().unwrap();
        let good = stub(
            bin.path(),
            "printf 'LaTeX Warning: x\\nOutput written on main.pdf (1 page).\\n' > main.log; touch main.pdf",
        );
        let r = compile(work.path(), "main.tex", &opts(good)).unwrap();
        assert!(r.success);
        assert_eq!((r.error_count, r.warning_count), (0, 1));

        let bad = stub(bin.path(), "printf '! Undefined control sequence.\\n' > main.log; exit 1");
        let r = compile(work.path(), "main.tex", &opts(bad)).unwrap();
        assert!(!r.success);
        assert_eq!(r.error_count, 1);
    }

    #[test]
    fn hung_engine_times_out() {
        let bin = tempfile::tempdir().unwrap();
        let work = tempfile::tempdir().unwrap();
        let slow = stub(bin.path(), "sleep 5");
        let o = CompileOptions { timeout: Duration::from_millis(200), ..opts(slow) };
        assert!(matches!(compile(work.path(), "main.tex", &o), Err(GenerateError::EngineTimeout { .. })));
    }
}
