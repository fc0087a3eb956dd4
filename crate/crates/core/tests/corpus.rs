use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use texlate::config::{MockMode, RunConfig};
use texlate::parser::{count_tokens, parse_project, PlaceholderKind, ProjectSource, ANY_TOKEN};
use texlate::workflow::{build_client, parse_document, translate_document, Document, Resources, RunStatus};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn projects() -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(corpus_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

fn echo_config(out: &Path) -> RunConfig {
    let mut config = RunConfig::default();
    config.mock.mode = Some(MockMode::Echo);
    config.inject_preamble = false;
    config.compile = false;
    config.out_dir = out.to_path_buf();
    config
}

#[test]
fn corpus_has_at_least_ten_projects() {
    assert!(projects().len() >= 10);
}

#[test]
fn placeholder_counts_match_maps() {
    for dir in projects() {
        let doc = Document::resolve(&dir, None).unwrap();
        let parsed = parse_project(&ProjectSource::load(&dir, &doc.main_file).unwrap()).unwrap();
        let counts = count_tokens(&parsed.substituted_text);
        let env_tokens = counts.get(&PlaceholderKind::Env).copied().unwrap_or(0);
        // CAP tokens sit inside ENV blocks once environments are extracted
        let cap_tokens = count_tokens(&parsed.env_map.restore(&parsed.substituted_text))
            .get(&PlaceholderKind::Cap)
            .copied()
            .unwrap_or(0);
        assert_eq!(env_tokens, parsed.env_map.len(), "{}", dir.display());
        assert_eq!(cap_tokens, parsed.cap_map.len(), "{}", dir.display());
        let begins = counts.get(&PlaceholderKind::FileBegin).copied().unwrap_or(0);
        assert_eq!(begins, parsed.merged.file_boundaries.len(), "{}", dir.display());
        assert_eq!(parsed.restore(), parsed.merged.text, "{}", dir.display());
    }
}

#[test]
fn echo_run_reproduces_every_file() {
    let out = tempfile::tempdir().unwrap();
    let config = echo_config(out.path());
    let resources = Resources::load(&config).unwrap();
    for dir in projects() {
        let doc = Document::resolve(&dir, None).unwrap();
        let llm = build_client(&config, &doc.doc_id).unwrap();
        let report = translate_document(&doc, &config, &resources, &llm, out.path()).unwrap();
        assert_eq!(report.status, RunStatus::Ok);
        let produced = tree(&out.path().join(&doc.doc_id).join("tex"));
        assert_eq!(produced, tree(&dir), "{}", dir.display());
        for (path, bytes) in &produced {
            let text = String::from_utf8_lossy(bytes);
            assert!(!ANY_TOKEN.is_match(&text), "token left in {path}");
        }
        assert!(out.path().join(&doc.doc_id).join("report.json").is_file());
    }
}

#[test]
fn parse_counts_for_basic_fixture() {
    let out = tempfile::tempdir().unwrap();
    let doc = Document::resolve(&corpus_dir().join("basic"), None).unwrap();
    let report = parse_document(&doc, &RunConfig::default(), out.path()).unwrap();
    assert_eq!((report.placeholders.env, report.placeholders.cap), (1, 1));
    // preamble, front matter, two sections, closing
    assert_eq!(report.units.sections, 5);
    assert_eq!(report.units.total, 7);
    for name in ["cap_map.json", "env_map.json", "file_map.json", "units.json"] {
        assert!(out.path().join("basic/maps").join(name).is_file(), "{name}");
    }
}

#[test]
fn empty_main_is_one_empty_unit() {
    let out = tempfile::tempdir().unwrap();
    let doc = Document::resolve(&corpus_dir().join("empty_main"), None).unwrap();
    let report = parse_document(&doc, &RunConfig::default(), out.path()).unwrap();
    assert_eq!(report.units.total, 1);
    assert_eq!(report.units.to_translate, 0);
}

#[test]
fn cycle_is_reported_and_report_written() {
    let out = tempfile::tempdir().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cycle");
    let doc = Document::resolve(&dir, None).unwrap();
    let err = parse_document(&doc, &RunConfig::default(), out.path()).unwrap_err();
    assert!(err.to_string().contains("cycle"), "{err}");
    let report = fs::read_to_string(out.path().join("cycle/report.json")).unwrap();
    assert!(report.contains("\"status\": \"failed\""));
}

#[test]
fn missing_include_keeps_directive_and_warns() {
    let out = tempfile::tempdir().unwrap();
    let doc = Document::resolve(&corpus_dir().join("missing_include"), None).unwrap();
    let report = parse_document(&doc, &RunConfig::default(), out.path()).unwrap();
    assert!(report.warnings.iter().any(|w| w.message.contains("absent")));
    assert_eq!(report.placeholders.file, 1);
}
