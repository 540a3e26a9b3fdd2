use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{action_distribution, compute_sr, compute_swr, strategy_acceptance, ActionShares, StrategyCell};
use super::{Outcome, Transcript};
use crate::profiles::{DecisionStyle, Openness};

pub const REPORT_FILES: [&str; 4] = ["transcripts.jsonl", "report.json", "report.csv", "run-meta.json"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitRow {
    pub group: String,
    pub episodes: usize,
    pub sr: Option<f64>,
    pub swr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub variant: String,
    pub episodes: usize,
    pub errored: usize,
    pub accepted_in_budget: usize,
    pub accepted_out_of_budget: usize,
    pub sr: Option<f64>,
    pub swr: Option<f64>,
    /// Openness groups, then decision styles, then "Overall".
    pub per_trait: Vec<TraitRow>,
    pub action_distribution: BTreeMap<Openness, ActionShares>,
    pub strategy_acceptance: Vec<StrategyCell>,
}

/// Settings and provenance of one run, written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// False when a live backend was involved.
    pub deterministic: bool,
    pub max_turns: u32,
    pub memory_k: usize,
    pub episodes: usize,
    pub errored: usize,
    pub config: serde_json::Value,
}

fn row(group: &str, ts: &[&Transcript]) -> TraitRow {
    let owned: Vec<Transcript> = ts.iter().map(|t| (*t).clone()).collect();
    TraitRow {
        group: group.to_string(),
        episodes: owned.iter().filter(|t| !t.errored()).count(),
        sr: compute_sr(&owned).ok(),
        swr: compute_swr(&owned),
    }
}

pub fn build_report(variant: &str, ts: &[Transcript]) -> Report {
    let done: Vec<&Transcript> = ts.iter().filter(|t| !t.errored()).collect();
    let count = |o: Outcome| done.iter().filter(|t| t.outcome == o).count();
    let mut per_trait = Vec::new();
    for o in Openness::ALL {
        let group: Vec<&Transcript> = done.iter().copied().filter(|t| t.seeker_openness == Some(o)).collect();
        per_trait.push(row(o.label(), &group));
    }
    for s in DecisionStyle::ALL {
        let group: Vec<&Transcript> = done.iter().copied().filter(|t| t.seeker_style == Some(s)).collect();
        per_trait.push(row(s.label(), &group));
    }
    per_trait.push(row("Overall", &done));
    Report {
        variant: variant.to_string(),
        episodes: done.len(),
        errored: ts.len() - done.len(),
        accepted_in_budget: count(Outcome::AcceptedInBudget),
        accepted_out_of_budget: count(Outcome::AcceptedOutOfBudget),
        sr: compute_sr(ts).ok(),
        swr: compute_swr(ts),
        per_trait,
        action_distribution: action_distribution(ts),
        strategy_acceptance: strategy_acceptance(ts),
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn csv(reports: &[Report]) -> String {
    let mut out = String::from("variant");
    if let Some(first) = reports.first() {
        for r in &first.per_trait {
            out.push_str(&format!(",{0} SR,{0} SWR", r.group));
        }
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.variant);
        for t in &r.per_trait {
            out.push_str(&format!(",{},{}", cell(t.sr), cell(t.swr)));
        }
        out.push('\n');
    }
    out
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

/// Writes the four run files into `out_dir`, creating it if needed.
pub fn write_report(
    out_dir: &Path,
    reports: &[Report],
    transcripts: &[Transcript],
    meta: &RunMeta,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| out_dir.join(f)).collect();
    let mut w = BufWriter::new(fs::File::create(&paths[0])?);
    for t in transcripts {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    fs::write(&paths[1], pretty(&serde_json::json!({ "reports": reports })))?;
    fs::write(&paths[2], csv(reports))?;
    fs::write(&paths[3], pretty(meta))?;
    Ok(paths)
}
