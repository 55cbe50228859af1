use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::PathBuf;
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{estimate_tokens, CompletionRequest, CompletionResponse, LlmBackend, LlmError};

/// USD per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPrice {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl TokenPrice {
    pub fn cost(&self, prompt_tokens: u64, output_tokens: u64) -> f64 {
        (prompt_tokens as f64 * self.input_per_million + output_tokens as f64 * self.output_per_million)
            / 1_000_000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: BTreeMap<String, TokenPrice>,
    /// Used for model ids missing from `models`.
    pub fallback: TokenPrice,
}

impl Default for PriceTable {
    fn default() -> Self {
        let gpt35 = TokenPrice {
            input_per_million: 0.5,
            output_per_million: 1.5,
        };
        let mut models = BTreeMap::new();
        models.insert("gpt-3.5-turbo-0125".to_string(), gpt35);
        models.insert(
            "gpt-4o".to_string(),
            TokenPrice {
                input_per_million: 2.5,
                output_per_million: 10.0,
            },
        );
        PriceTable {
            models,
            fallback: gpt35,
        }
    }
}

impl PriceTable {
    pub fn price(&self, model: &str) -> TokenPrice {
        self.models.get(model).copied().unwrap_or(self.fallback)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_cost_usd: Option<f64>,
    pub max_total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRow {
    pub timestamp: DateTime<Utc>,
    pub model: String,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub cost_usd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub cost_usd: f64,
}

#[derive(Default)]
struct Ledger {
    totals: UsageTotals,
    rows: Vec<UsageRow>,
    reserved_tokens: u64,
    reserved_cost: f64,
}

/// Adds usage accounting and a spending ceiling to any backend.
///
/// Before each call the worst case (estimated prompt tokens plus the full
/// output allowance) is reserved; the call is refused with
/// [`LlmError::BudgetExceeded`] if that reservation would cross the ceiling.
pub struct Metered<B> {
    inner: B,
    prices: PriceTable,
    budget: Budget,
    ledger_file: Option<PathBuf>,
    ledger: Mutex<Ledger>,
}

impl<B: LlmBackend> Metered<B> {
    pub fn new(inner: B, prices: PriceTable, budget: Budget) -> Self {
        Metered {
            inner,
            prices,
            budget,
            ledger_file: None,
            ledger: Mutex::new(Ledger::default()),
        }
    }

    /// Append one CSV row per call to `path`.
    pub fn with_ledger_file(mut self, path: PathBuf) -> Self {
        self.ledger_file = Some(path);
        self
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn totals(&self) -> UsageTotals {
        self.ledger.lock().expect("ledger poisoned").totals
    }

    pub fn rows(&self) -> Vec<UsageRow> {
        self.ledger.lock().expect("ledger poisoned").rows.clone()
    }

    fn append_row(&self, row: &UsageRow) {
        let Some(path) = &self.ledger_file else { return };
        let fresh = !path.exists();
        let file = match OpenOptions::new().create(true).append(true).open(path) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("cannot open usage ledger {}: {e}", path.display());
                return;
            }
        };
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let mut write = || -> csv::Result<()> {
            if fresh {
                w.write_record(["timestamp", "model", "prompt_tokens", "output_tokens", "cost_usd"])?;
            }
            w.write_record([
                row.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
                row.model.clone(),
                row.prompt_tokens.to_string(),
                row.output_tokens.to_string(),
                format!("{:.6}", row.cost_usd),
            ])?;
            w.flush()?;
            Ok(())
        };
        if let Err(e) = write() {
            log::warn!("cannot write usage ledger {}: {e}", path.display());
        }
    }
}

impl<B: LlmBackend> LlmBackend for Metered<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let price = self.prices.price(&request.model_id);
        let est_prompt = estimate_tokens(&request.prompt_text());
        let worst_tokens = est_prompt + request.max_output_tokens as u64;
        let worst_cost = price.cost(est_prompt, request.max_output_tokens as u64);
        {
            let mut l = self.ledger.lock().expect("ledger poisoned");
            let spent_tokens = l.totals.prompt_tokens + l.totals.output_tokens + l.reserved_tokens;
            let spent_cost = l.totals.cost_usd + l.reserved_cost;
            if let Some(max) = self.budget.max_total_tokens {
                if spent_tokens + worst_tokens > max {
                    return Err(LlmError::BudgetExceeded(format!(
                        "{} tokens used or reserved, call may need {worst_tokens}, ceiling {max}",
                        spent_tokens
                    )));
                }
            }
            if let Some(max) = self.budget.max_cost_usd {
                if spent_cost + worst_cost > max {
                    return Err(LlmError::BudgetExceeded(format!(
                        "${spent_cost:.4} used or reserved, call may cost ${worst_cost:.4}, ceiling ${max:.4}"
                    )));
                }
            }
            l.reserved_tokens += worst_tokens;
            l.reserved_cost += worst_cost;
        }
        let result = self.inner.complete(request);
        let mut l = self.ledger.lock().expect("ledger poisoned");
        l.reserved_tokens -= worst_tokens;
        l.reserved_cost = (l.reserved_cost - worst_cost).max(0.0);
        let resp = result?;
        let row = UsageRow {
            timestamp: Utc::now(),
            model: request.model_id.clone(),
            prompt_tokens: resp.prompt_tokens,
            output_tokens: resp.output_tokens,
            cost_usd: price.cost(resp.prompt_tokens, resp.output_tokens),
        };
        l.totals.calls += 1;
        l.totals.prompt_tokens += row.prompt_tokens;
        l.totals.output_tokens += row.output_tokens;
        l.totals.cost_usd += row.cost_usd;
        l.rows.push(row.clone());
        drop(l);
        self.append_row(&row);
        Ok(resp)
    }
}
