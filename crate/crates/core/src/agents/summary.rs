use super::AgentContext;
use crate::diag::{Warning, WarningKind};
use crate::llm::Agent;
use serde::{Deserialize, Serialize};

pub const SUMMARY_WORD_LIMIT: usize = 300;

/// Rolling summary of the sections seen so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    /// Number of updates applied.
    pub version: usize,
}

/// Folds `new_section_source` into `prev`. On failure the previous summary
/// is kept.
pub fn update_summary(prev: &Summary, new_section_source: &str, ctx: &AgentContext<'_>) -> (Summary, Vec<Warning>) {
    let user = format!("prev_summary:\n{}\n\nnew_section:\n{new_section_source}", prev.text);
    let req = ctx.request(Agent::Summarizer, ctx.prompts.summarizer.clone(), user);
    match ctx.llm.chat(&req) {
        Ok(reply) => {
            let text = reply.trim().to_string();
            let mut warnings = Vec::new();
            let words = text.split_whitespace().count();
            if words > SUMMARY_WORD_LIMIT {
                warnings.push(Warning::new(
                    WarningKind::SummaryTooLong,
                    format!("summary v{} has {words} words (limit {SUMMARY_WORD_LIMIT})", prev.version + 1),
                ));
            }
            (Summary { text, version: prev.version + 1 }, warnings)
        }
        Err(e) => (
            prev.clone(),
            vec![Warning::new(WarningKind::SummaryFailed, format!("summary update failed: {e}"))],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::PipelineConfig;
    use crate::llm::{FaultInjectingBackend, LlmClient, RetryPolicy, ScriptedBackend};
    use crate::prompts::PromptSet;

    fn run(llm: &LlmClient, prev: &Summary) -> (Summary, Vec<Warning>) {
        let prompts = PromptSet::bundled();
        let config = PipelineConfig::default();
        let ctx = AgentContext::new(llm, &prompts, &config);
        update_summary(prev, "\\section{Intro} We study X.", &ctx)
    }

    #[test]
    fn initial_state_is_empty_v0() {
        assert_eq!(Summary::default(), Summary { text: String::new(), version: 0 });
    }

    #[test]
    fn scripted_reply_replaces_text() {
        let llm = LlmClient::new(Box::new(ScriptedBackend::new(vec!["Summary v1.".into()])));
        let (s, w) = run(&llm, &Summary::default());
        assert_eq!(s, Summary { text: "Summary v1.".into(), version: 1 });
        assert!(w.is_empty());
        let sent = &llm.transcript()[0].user_message;
        assert!(sent.starts_with("prev_summary:\n\n\nnew_section:\n\\section{Intro}"));
    }

    #[test]
    fn failure_keeps_previous() {
        let backend = FaultInjectingBackend::new(Box::new(ScriptedBackend::new(vec![])), 100);
        let retry = RetryPolicy { max_retries: 1, initial_backoff_ms: 0, max_backoff_ms: 0, multiplier: 1.0 };
        let llm = LlmClient::new(Box::new(backend)).with_retry(retry);
        let prev = Summary { text: "old".into(), version: 4 };
        let (s, w) = run(&llm, &prev);
        assert_eq!(s, prev);
        assert_eq!(w[0].kind, WarningKind::SummaryFailed);
    }

    #[test]
    fn long_summary_warns_without_truncating() {
        let long = vec!["word"; 301].join(" ");
        let llm = LlmClient::new(Box::new(ScriptedBackend::new(vec![long.clone()])));
        let (s, w) = run(&llm, &Summary::default());
        assert_eq!(s.text, long);
        assert_eq!(w[0].kind, WarningKind::SummaryTooLong);
    }
}
