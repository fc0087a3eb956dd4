use super::Agent;
use serde::{Deserialize, Serialize};

/// USD per million tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prices {
    pub prompt_per_mtok: f64,
    pub completion_per_mtok: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallUsage {
    pub agent: Agent,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub calls: usize,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}

/// Per-call usage records with running totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub calls: Vec<CallUsage>,
    pub totals: UsageTotals,
}

impl UsageLedger {
    pub fn record(&mut self, agent: Agent, prompt_tokens: u64, completion_tokens: u64, prices: &Prices) {
        let cost = (prompt_tokens as f64 * prices.prompt_per_mtok
            + completion_tokens as f64 * prices.completion_per_mtok)
            / 1e6;
        self.calls.push(CallUsage { agent, prompt_tokens, completion_tokens, cost });
        self.totals.calls += 1;
        self.totals.prompt_tokens += prompt_tokens;
        self.totals.completion_tokens += completion_tokens;
        self.totals.cost += cost;
    }

    /// Totals recomputed from the per-call records.
    pub fn recomputed(&self) -> UsageTotals {
        self.calls.iter().fold(UsageTotals::default(), |mut t, c| {
            t.calls += 1;
            t.prompt_tokens += c.prompt_tokens;
            t.completion_tokens += c.completion_tokens;
            t.cost += c.cost;
            t
        })
    }

    pub fn is_consistent(&self) -> bool {
        let r = self.recomputed();
        r.calls == self.totals.calls
            && r.prompt_tokens == self.totals.prompt_tokens
            && r.completion_tokens == self.totals.completion_tokens
            && (r.cost - self.totals.cost).abs() <= 1e-9 * r.cost.max(1.0)
    }
}
