//! Translate every marked unit, then validate and repair in rounds.

use super::summary::{update_summary, Summary};
use super::terms::{extract_terms, TermDictionary};
use super::validator::{validate_translations, ErrorReport, Finding};
use super::{retranslate_unit, translate_unit, AgentContext};
use crate::diag::{Warning, WarningKind};
use crate::parser::{Granularity, TranslationUnit, UnitStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("max_validation_rounds must be at least 1")]
    InvalidConfig,
    #[error("all {0} units marked for translation failed")]
    AllUnitsFailed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub id: usize,
    pub granularity: Granularity,
    pub status: UnitStatus,
    /// Translator plus corrector calls spent on the unit.
    pub attempts: u32,
    pub findings: Vec<(u32, Finding)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub summary: Summary,
    pub dictionary: TermDictionary,
    pub rounds_used: u32,
    pub reports: Vec<ErrorReport>,
    pub records: Vec<UnitRecord>,
    /// Section unit ids in the order the summary absorbed them.
    pub summary_updates: Vec<usize>,
    /// Dictionary size after each unit's term extraction.
    pub dictionary_sizes: Vec<usize>,
    pub warnings: Vec<Warning>,
}

/// Runs the translate → validate → revise loop over `units` (already
/// enumerated and filtered). Units that still have findings after the last
/// round are marked FAILED and fall back to their source text.
pub fn run_pipeline(units: &mut [TranslationUnit], ctx: &AgentContext<'_>) -> Result<PipelineOutcome, PipelineError> {
    let max_rounds = ctx.config.max_validation_rounds;
    if max_rounds == 0 {
        return Err(PipelineError::InvalidConfig);
    }
    let targets: Vec<usize> = units.iter().filter(|u| u.needs_translation).map(|u| u.id).collect();
    let mut summary = Summary::default();
    let mut dictionary = TermDictionary::new();
    let mut warnings = Vec::new();
    let mut attempts: BTreeMap<usize, u32> = BTreeMap::new();
    let mut summary_updates = Vec::new();
    let mut dictionary_sizes = Vec::new();

    for &id in &targets {
        *attempts.entry(id).or_insert(0) += 1;
        match translate_unit(&units[id], &summary, &dictionary, ctx) {
            Ok(text) => {
                warnings.extend(extract_terms(&units[id].source_text, &text, &mut dictionary, ctx));
                dictionary_sizes.push(dictionary.len());
                units[id].translated_text = Some(text);
                units[id].status = UnitStatus::Translated;
            }
            Err(e) => {
                warnings.push(Warning::new(WarningKind::TranslationFailed, format!("unit {id}: {e}")));
                units[id].status = UnitStatus::Failed;
            }
        }
        if units[id].granularity == Granularity::SectionContext {
            let (next, w) = update_summary(&summary, &units[id].source_text, ctx);
            summary = next;
            warnings.extend(w);
            summary_updates.push(id);
        }
    }

    let mut round = 1;
    let mut pending: Vec<usize> =
        targets.iter().copied().filter(|&id| units[id].status == UnitStatus::Translated).collect();
    let mut reports = Vec::new();
    loop {
        let (report, w) = validate_translations(units, &pending, round, ctx);
        warnings.extend(w);
        let flagged = report.flagged_units();
        for &id in &pending {
            if !flagged.contains(&id) {
                units[id].status = UnitStatus::Validated;
            }
        }
        reports.push(report);
        if flagged.is_empty() {
            break;
        }
        if round == max_rounds {
            for &id in &flagged {
                units[id].status = UnitStatus::Failed;
                warnings.push(Warning::new(
                    WarningKind::TranslationFailed,
                    format!("unit {id}: findings remain after {max_rounds} rounds; source text kept"),
                ));
            }
            break;
        }
        round += 1;
        let report = reports.last().unwrap();
        for &id in &flagged {
            let findings: Vec<&Finding> = report.for_unit(id).collect();
            let prev = units[id].translated_text.clone().unwrap_or_default();
            *attempts.entry(id).or_insert(0) += 1;
            match retranslate_unit(&units[id], &prev, &findings, ctx) {
                Ok(text) => units[id].translated_text = Some(text),
                Err(e) => warnings.push(Warning::new(
                    WarningKind::TranslationFailed,
                    format!("unit {id}: correction failed in round {round}: {e}"),
                )),
            }
        }
        pending = flagged;
    }

    let failed = targets.iter().filter(|&&id| units[id].status == UnitStatus::Failed).count();
    if !targets.is_empty() && failed == targets.len() {
        return Err(PipelineError::AllUnitsFailed(failed));
    }

    let records = units
        .iter()
        .map(|u| UnitRecord {
            id: u.id,
            granularity: u.granularity,
            status: u.status,
            attempts: attempts.get(&u.id).copied().unwrap_or(0),
            findings: reports
                .iter()
                .flat_map(|r| r.for_unit(u.id).map(move |f| (r.round, f.clone())))
                .collect(),
        })
        .collect();

    Ok(PipelineOutcome {
        summary,
        dictionary,
        rounds_used: round,
        reports,
        records,
        summary_updates,
        dictionary_sizes,
        warnings,
    })
}
