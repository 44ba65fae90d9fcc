//! Turns simulation runs into policy-comparison tables, shadow-price and
//! allocation breakdowns, and the CSV/JSONL artifacts the CLI writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimResult;

/// Within-capacity versus overloaded assignment counts for one mediator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationCount {
    pub mediator: String,
    /// Assignments that left the mediator at or below capacity.
    pub within: u64,
    /// Assignments that left the mediator above capacity.
    pub overloaded: u64,
}

/// Per-run record persisted to `raw/runs.jsonl`; carries everything the
/// report tables need so they can be rebuilt without re-simulating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub run_length_days: u32,
    pub agreement_rate: f64,
    pub ocdm: f64,
    pub gini: f64,
    pub assigned: u64,
    pub unassignable: u64,
    pub concluded: u64,
    pub resolved: u64,
    pub zero_concluded: bool,
    pub shadow_price_sums: BTreeMap<String, f64>,
    pub shadow_solves: u64,
    /// Populated only when the run kept its case log.
    pub allocation: Vec<AllocationCount>,
}

impl From<&SimResult> for RunSummary {
    fn from(r: &SimResult) -> Self {
        let caps: BTreeMap<&str, u32> = r
            .mediator_ids
            .iter()
            .map(String::as_str)
            .zip(r.capacities.iter().copied())
            .collect();
        let mut alloc: BTreeMap<&str, (u64, u64)> = r
            .mediator_ids
            .iter()
            .map(|id| (id.as_str(), (0, 0)))
            .collect();
        for e in &r.case_log {
            if let Some(id) = e.mediator.as_deref() {
                let slot = alloc.entry(id).or_insert((0, 0));
                if e.load_after > caps.get(id).copied().unwrap_or(u32::MAX) {
                    slot.1 += 1;
                } else {
                    slot.0 += 1;
                }
            }
        }
        RunSummary {
            policy: r.policy_label.clone(),
            lambda: r.lambda,
            seed: r.seed,
            run_length_days: r.run_length_days,
            agreement_rate: r.agreement_rate,
            ocdm: r.ocdm,
            gini: r.gini,
            assigned: r.assigned,
            unassignable: r.unassignable,
            concluded: r.concluded,
            resolved: r.resolved,
            zero_concluded: r.zero_concluded,
            shadow_price_sums: r.shadow_prices.sums.clone(),
            shadow_solves: r.shadow_prices.solves,
            allocation: r
                .mediator_ids
                .iter()
                .map(|id| {
                    let (within, overloaded) = alloc[id.as_str()];
                    AllocationCount {
                        mediator: id.clone(),
                        within,
                        overloaded,
                    }
                })
                .collect(),
        }
    }
}

/// Mean with a normal-approximation 95% interval half-width
/// (`1.96 * sd / sqrt(n)`); `None` below two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: Option<f64>,
}

impl MeanCi {
    pub fn from_samples(xs: &[f64]) -> MeanCi {
        let n = xs.len();
        if n == 0 {
            return MeanCi {
                mean: f64::NAN,
                half_width: None,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MeanCi {
                mean,
                half_width: None,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        MeanCi {
            mean,
            half_width: Some(1.96 * (var / n as f64).sqrt()),
        }
    }
}

/// One aggregated policy arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    pub lambda: Option<f64>,
    pub seeds: usize,
    /// Runs where nothing concluded; excluded from the agreement stats.
    pub zero_concluded_runs: usize,
    pub agreement: MeanCi,
    pub ocdm: MeanCi,
    pub gini: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ComparisonTable {
    pub rows: Vec<PolicyRow>,
}

fn group_key(s: &RunSummary) -> (String, Option<u64>) {
    (s.policy.clone(), s.lambda.map(f64::to_bits))
}

fn groups(summaries: &[RunSummary]) -> Vec<((String, Option<u64>), Vec<&RunSummary>)> {
    let mut out: Vec<((String, Option<u64>), Vec<&RunSummary>)> = Vec::new();
    for s in summaries {
        let key = group_key(s);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(s),
            None => out.push((key, vec![s])),
        }
    }
    out
}

/// Aggregates per-run summaries into one row per `(policy, lambda)` arm, in
/// first-appearance order.
pub fn aggregate(summaries: &[RunSummary]) -> ComparisonTable {
    let rows = groups(summaries)
        .into_iter()
        .map(|((policy, lambda_bits), members)| {
            let with_data: Vec<f64> = members
                .iter()
                .filter(|s| !s.zero_concluded)
                .map(|s| s.agreement_rate)
                .collect();
            PolicyRow {
                policy,
                lambda: lambda_bits.map(f64::from_bits),
                seeds: members.len(),
                zero_concluded_runs: members.iter().filter(|s| s.zero_concluded).count(),
                agreement: MeanCi::from_samples(&with_data),
                ocdm: MeanCi::from_samples(
                    &members.iter().map(|s| s.ocdm).collect::<Vec<_>>(),
                ),
                gini: MeanCi::from_samples(
                    &members.iter().map(|s| s.gini).collect::<Vec<_>>(),
                ),
            }
        })
        .collect();
    ComparisonTable { rows }
}

/// Mean shadow price per mediator per QP solve, one row per
/// `(policy, lambda, mediator)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowPriceRow {
    pub policy: String,
    pub lambda: Option<f64>,
    pub mediator: String,
    pub mean_price: f64,
    pub solves: u64,
}

pub fn shadow_price_report(summaries: &[RunSummary]) -> Vec<ShadowPriceRow> {
    let mut rows = Vec::new();
    for ((policy, lambda_bits), members) in groups(summaries) {
        let solves: u64 = members.iter().map(|s| s.shadow_solves).sum();
        if solves == 0 {
            continue;
        }
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for s in &members {
            for (id, v) in &s.shadow_price_sums {
                *sums.entry(id.as_str()).or_insert(0.0) += v;
            }
        }
        for (id, total) in sums {
            rows.push(ShadowPriceRow {
                policy: policy.clone(),
                lambda: lambda_bits.map(f64::from_bits),
                mediator: id.to_string(),
                mean_price: total / solves as f64,
                solves,
            });
        }
    }
    rows
}

/// Assignment counts split by whether they pushed the mediator over
/// capacity, one row per `(policy, lambda, mediator)`, summed over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationRow {
    pub policy: String,
    pub lambda: Option<f64>,
    pub mediator: String,
    pub within: u64,
    pub overloaded: u64,
}

pub fn allocation_report(summaries: &[RunSummary]) -> Vec<AllocationRow> {
    let mut rows = Vec::new();
    for ((policy, lambda_bits), members) in groups(summaries) {
        let mut order: Vec<&str> = Vec::new();
        let mut totals: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for s in &members {
            for a in &s.allocation {
                let slot = totals.entry(a.mediator.as_str()).or_insert_with(|| {
                    order.push(a.mediator.as_str());
                    (0, 0)
                });
                slot.0 += a.within;
                slot.1 += a.overloaded;
            }
        }
        for id in order {
            let (within, overloaded) = totals[id];
            rows.push(AllocationRow {
                policy: policy.clone(),
                lambda: lambda_bits.map(f64::from_bits),
                mediator: id.to_string(),
                within,
                overloaded,
            });
        }
    }
    rows
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Value(format!("{}: {e}", path.display()))
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Version comment leading every emitted table.
pub const TABLE_SCHEMA_LINE: &str = "#schema:v1";
/// Version header object leading `runs.jsonl`.
pub const RUNS_SCHEMA: &str = "medassign-runs-v1";

/// CSV writer into an in-memory buffer so the schema line can lead the file.
fn csv_to_file(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let body = w
        .into_inner()
        .map_err(|e| io_err(path, e))
        .and_then(|v| String::from_utf8(v).map_err(|e| io_err(path, e)))?;
    fs::write(path, format!("{TABLE_SCHEMA_LINE}\n{body}")).map_err(|e| io_err(path, e))
}

pub fn write_comparison_csv(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "policy",
        "lambda",
        "seeds",
        "zero_concluded_runs",
        "agreement_mean",
        "agreement_ci95",
        "ocdm_mean",
        "ocdm_ci95",
        "gini_mean",
        "gini_ci95",
    ])
    .map_err(|e| io_err(path, e))?;
    for r in &table.rows {
        w.write_record([
            r.policy.clone(),
            opt_f64(r.lambda),
            r.seeds.to_string(),
            r.zero_concluded_runs.to_string(),
            r.agreement.mean.to_string(),
            opt_f64(r.agreement.half_width),
            r.ocdm.mean.to_string(),
            opt_f64(r.ocdm.half_width),
            r.gini.mean.to_string(),
            opt_f64(r.gini.half_width),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    csv_to_file(path, w)
}

pub fn write_shadow_price_csv(path: &Path, rows: &[ShadowPriceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["policy", "lambda", "mediator", "mean_price", "solves"])
        .map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            opt_f64(r.lambda),
            r.mediator.clone(),
            r.mean_price.to_string(),
            r.solves.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    csv_to_file(path, w)
}

pub fn write_allocation_csv(path: &Path, rows: &[AllocationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["policy", "lambda", "mediator", "within_capacity", "overloaded"])
        .map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            opt_f64(r.lambda),
            r.mediator.clone(),
            r.within.to_string(),
            r.overloaded.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    csv_to_file(path, w)
}

/// Version header, then one summary per line in input order.
pub fn write_run_summaries_jsonl(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    writeln!(f, "{{\"schema\":\"{RUNS_SCHEMA}\"}}").map_err(|e| io_err(path, e))?;
    for s in summaries {
        let line = serde_json::to_string(s).map_err(|e| io_err(path, e))?;
        writeln!(f, "{line}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn read_run_summaries_jsonl(path: &Path) -> Result<Vec<RunSummary>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, first)) => {
            let header: serde_json::Value =
                serde_json::from_str(first).map_err(|e| io_err(path, format!("line 1: {e}")))?;
            if header.get("schema").and_then(|v| v.as_str()) != Some(RUNS_SCHEMA) {
                return Err(io_err(
                    path,
                    format!("missing or unsupported schema header (want {RUNS_SCHEMA:?})"),
                ));
            }
        }
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}
