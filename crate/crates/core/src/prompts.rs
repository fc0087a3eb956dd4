//! Agent prompt templates. The bundled set is compiled in; a directory with
//! the same six file names overrides it.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;

const FILES: [&str; 6] = [
    "translator.txt",
    "corrector.txt",
    "filter.txt",
    "terminology.txt",
    "summarizer.txt",
    "validator.txt",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub translator: String,
    pub corrector: String,
    pub filter: String,
    pub terminology: String,
    pub summarizer: String,
    pub validator: String,
}

impl PromptSet {
    pub fn bundled() -> Self {
        Self {
            translator: include_str!("../prompts/translator.txt").to_string(),
            corrector: include_str!("../prompts/corrector.txt").to_string(),
            filter: include_str!("../prompts/filter.txt").to_string(),
            terminology: include_str!("../prompts/terminology.txt").to_string(),
            summarizer: include_str!("../prompts/summarizer.txt").to_string(),
            validator: include_str!("../prompts/validator.txt").to_string(),
        }
    }

    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", dir.join(name).display())))
        };
        let [translator, corrector, filter, terminology, summarizer, validator] = FILES.map(read);
        Ok(Self {
            translator: translator?,
            corrector: corrector?,
            filter: filter?,
            terminology: terminology?,
            summarizer: summarizer?,
            validator: validator?,
        })
    }

    /// Substitutes `{tgt_language}` in every template.
    pub fn for_language(&self, target_language: &str) -> Self {
        let name = language_name(target_language);
        let r = |t: &str| t.replace("{tgt_language}", &name);
        Self {
            translator: r(&self.translator),
            corrector: r(&self.corrector),
            filter: r(&self.filter),
            terminology: r(&self.terminology),
            summarizer: r(&self.summarizer),
            validator: r(&self.validator),
        }
    }
}

/// English display name for a language tag; unknown tags pass through.
pub fn language_name(tag: &str) -> String {
    let base = tag.split(['-', '_']).next().unwrap_or(tag).to_ascii_lowercase();
    let name = match base.as_str() {
        "en" => "English",
        "zh" => "Chinese",
        "ja" => "Japanese",
        "ko" => "Korean",
        "de" => "German",
        "fr" => "French",
        "es" => "Spanish",
        "it" => "Italian",
        "pt" => "Portuguese",
        "ru" => "Russian",
        "ar" => "Arabic",
        "vi" => "Vietnamese",
        _ => return tag.to_string(),
    };
    name.to_string()
}

/// Sampling settings for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_new_tokens: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_are_parameterized() {
        let p = PromptSet::bundled().for_language("zh");
        assert!(p.translator.contains("from English to Chinese"));
        assert!(p.terminology.starts_with("You are an en-Chinese bilingual expert."));
        assert!(p.terminology.contains("\"<English Term>\" - \"<Chinese Translation>\""));
        for t in [&p.translator, &p.corrector, &p.filter, &p.terminology, &p.summarizer, &p.validator] {
            assert!(!t.contains("{tgt_language}"));
        }
        assert!(p.filter.contains("Only output:"));
        assert!(p.summarizer.contains("no more than 300 words"));
    }

    #[test]
    fn load_dir_round_trips_bundled() {
        let dir = tempfile::tempdir().unwrap();
        let b = PromptSet::bundled();
        for (name, text) in FILES.iter().zip([
            &b.translator,
            &b.corrector,
            &b.filter,
            &b.terminology,
            &b.summarizer,
            &b.validator,
        ]) {
            fs::write(dir.path().join(name), text).unwrap();
        }
        assert_eq!(PromptSet::load_dir(dir.path()).unwrap(), b);
        fs::remove_file(dir.path().join("filter.txt")).unwrap();
        assert!(PromptSet::load_dir(dir.path()).is_err());
    }

    #[test]
    fn language_names() {
        assert_eq!(language_name("ja"), "Japanese");
        assert_eq!(language_name("zh-CN"), "Chinese");
        assert_eq!(language_name("Klingon"), "Klingon");
    }
}
