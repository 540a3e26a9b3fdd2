use std::fs;
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use convsales::bench;
use convsales::catalog::{read_snapshot, PriceRange, SkipReason};
use convsales::config::RunConfig;
use convsales::eval::Outcome;
use convsales::gateway::{prompts, write_fixtures, FixtureKey, FixtureRecord, NullBackend};
use convsales::pipeline::{self, PipelineError};
use convsales::profiles::{load_profiles, DecisionStyle, Openness};
use serde_json::json;

const USERS: [&str; 4] = ["u1", "u2", "u3", "u4"];

fn meta_line(id: &str, title: &str, path: &[&str], price: Option<f64>) -> String {
    let mut v = json!({
        "parent_asin": id,
        "title": title,
        "description": [format!("{title}, made to last.")],
        "features": ["machine washable"],
        "categories": path,
        "average_rating": 4.3,
        "rating_number": 5875,
    });
    if let Some(p) = price {
        v["price"] = json!(p);
    }
    v.to_string()
}

fn review_line(user: &str, item: &str, ts: i64) -> String {
    json!({"user_id": user, "parent_asin": item, "rating": 5, "title": "Nice", "text": "Fits well and feels soft.", "timestamp": ts}).to_string()
}

/// Four items, one incomplete item, and 20 review lines: 16 usable, one
/// from a user who falls out of the 2-core, two for unknown or incomplete
/// items and one corrupt line.
fn write_raw(dir: &Path) {
    let meta = [
        meta_line("B0C4FQHKJ2", "WEESO Long Sleeve Shirt", &["Clothing", "Tops"], Some(23.99)),
        meta_line("B0TOP00002", "Relaxed Linen Shirt", &["Clothing", "Tops"], Some(31.92)),
        meta_line("B0SHOE0001", "Canvas Sneaker", &["Clothing", "Shoes"], Some(45.0)),
        meta_line("B0SHOE0002", "Leather Loafer", &["Clothing", "Shoes"], Some(60.0)),
        meta_line("B0NOPRICE1", "Mystery Hat", &["Clothing", "Hats"], None),
    ];
    let mut reviews = Vec::new();
    for u in USERS {
        reviews.push(review_line(u, "B0SHOE0001", 1));
        reviews.push(review_line(u, "B0SHOE0002", 2));
        reviews.push(review_line(u, "B0TOP00002", 3));
        reviews.push(review_line(u, "B0C4FQHKJ2", 4));
    }
    reviews.push(review_line("u5", "B0C4FQHKJ2", 5));
    reviews.push(review_line("u1", "B0NOPRICE1", 6));
    reviews.push(review_line("u2", "B0UNKNOWN9", 7));
    reviews.insert(9, "{\"user_id\": \"u9\", \"parent_asin\": ".to_string());
    assert_eq!(reviews.len(), 20);
    fs::write(dir.join("meta.jsonl"), meta.join("\n")).unwrap();
    fs::write(dir.join("reviews.jsonl"), reviews.join("\n")).unwrap();
}

fn write_config(dir: &Path, extra: &str) -> RunConfig {
    let text = format!(
        r#"domain = "clothing"
seed = 3
workers = 2

[paths]
catalog = "data/catalog.json"
profiles = "data/profiles.jsonl"
index = "data/index.json"
fixtures = "fixtures.jsonl"
raw_reviews = "reviews.jsonl"
raw_metadata = "meta.jsonl"
out = "out"

[ingest]
k_core = 2
max_malformed_fraction = 0.1
{extra}
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    RunConfig::load(&path).unwrap()
}

fn profile_fixtures(dir: &Path, skip_openness_of: Option<&str>) {
    let openness = ["Active", "Less Active", "Passive", "Active"];
    let styles = ["Rational", "Rational", "Dependent", "Intuitive"];
    let mut records = Vec::new();
    let mut add = |template: &str, user: &str, text: String| {
        records.push(FixtureRecord { key: FixtureKey::new(template, user, 0), text });
    };
    for (n, u) in USERS.iter().enumerate() {
        add(prompts::PROFILE_PREFERENCE, u, json!({"general preference": "Prefers sturdy casual shoes."}).to_string());
        add(
            prompts::PROFILE_PURCHASE,
            u,
            json!({
                "analysis": {
                    "B0C4FQHKJ2": {"purchase reason": "Layering.", "decision making style": styles[n]},
                    "B0TOP00002": {"purchase reason": "Summer.", "decision making style": styles[n]}
                },
                "overall decision making style": styles[n],
                "target needs": "soft long sleeve shirt"
            })
            .to_string(),
        );
        if skip_openness_of != Some(u) {
            add(prompts::PROFILE_OPENNESS, u, json!({"dialogue_openness": openness[n]}).to_string());
        }
    }
    write_fixtures(&dir.join("fixtures.jsonl"), &records).unwrap();
}

#[test]
fn ingest_filters_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "");
    let s = pipeline::cmd_ingest(&cfg).unwrap();
    assert_eq!(s.stats.review_lines, 20);
    assert_eq!(s.stats.malformed_reviews, 1);
    assert_eq!(s.stats.incomplete_items, 1);
    assert_eq!(s.stats.orphan_interactions, 2);
    assert_eq!((s.stats.items, s.stats.interactions), (4, 17));
    assert_eq!((s.stats.core_items, s.stats.core_interactions), (4, 16));
    let (items, interactions) = read_snapshot(&s.snapshot).unwrap();
    assert_eq!(items.len(), 4);
    assert!(interactions.iter().all(|x| x.user_id != "u5"));
    let first = (fs::read(&s.snapshot).unwrap(), fs::read(s.index.as_ref().unwrap()).unwrap());
    pipeline::cmd_ingest(&cfg).unwrap();
    let second = (fs::read(&s.snapshot).unwrap(), fs::read(s.index.as_ref().unwrap()).unwrap());
    assert!(first == second);
}

#[test]
fn ingest_reports_missing_and_corrupt_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let e = pipeline::cmd_ingest(&cfg).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
    write_raw(dir.path());
    let strict = write_config(dir.path(), "").clone();
    let mut strict = strict;
    strict.ingest.max_malformed_fraction = 0.0;
    let e = pipeline::cmd_ingest(&strict).unwrap_err();
    assert_eq!(e.exit_code(), 1, "{e}");
}

#[test]
fn profiles_for_every_user_with_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "");
    pipeline::cmd_ingest(&cfg).unwrap();
    profile_fixtures(dir.path(), None);
    let s = pipeline::cmd_profiles(&cfg).unwrap();
    assert_eq!((s.built, s.written), (4, 4));
    let profiles = load_profiles(&s.path).unwrap();
    let ids: Vec<&str> = profiles.iter().map(|p| p.user_id.as_str()).collect();
    assert_eq!(ids, USERS);
    let u2 = &profiles[1];
    assert_eq!(u2.dialogue_openness, Openness::Neutral);
    assert_eq!(u2.decision_style, DecisionStyle::Rational);
    assert_eq!(u2.target_category_path, vec!["Clothing", "Tops"]);
    assert_eq!(u2.budget, PriceRange::new(23.99, 31.92));
    // oldest target first
    assert_eq!(u2.target_item_ids, vec!["B0TOP00002", "B0C4FQHKJ2"]);
    assert!(profiles.iter().all(|p| p.validate().is_ok()));
}

#[test]
fn a_missing_fixture_skips_only_that_user() {
    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "");
    pipeline::cmd_ingest(&cfg).unwrap();
    profile_fixtures(dir.path(), Some("u3"));
    let s = pipeline::cmd_profiles(&cfg).unwrap();
    assert_eq!(s.written, 3);
    assert_eq!(s.skipped.len(), 1);
    assert_eq!((s.skipped[0].user_id.as_str(), s.skipped[0].reason), ("u3", SkipReason::ProfileInference));
    let log = fs::read_to_string(dir.path().join("data/profiles.skipped.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.contains("u3"));
}

#[test]
fn cohort_sampling_is_seeded_and_distinct() {
    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "[profiles]\nsample_per_trait = 1\n");
    pipeline::cmd_ingest(&cfg).unwrap();
    profile_fixtures(dir.path(), None);
    let s = pipeline::cmd_profiles(&cfg).unwrap();
    let first = fs::read(&s.path).unwrap();
    let profiles = load_profiles(&s.path).unwrap();
    let mut ids: Vec<&str> = profiles.iter().map(|p| p.user_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), profiles.len());
    for o in Openness::ALL {
        assert!(profiles.iter().any(|p| p.dialogue_openness == o));
    }
    pipeline::cmd_profiles(&cfg).unwrap();
    assert_eq!(fs::read(&s.path).unwrap(), first);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let files = bench::write_benchmark(dir.path(), bench::SEED).unwrap();
    let (_, memory_cfg) = files.configs.iter().find(|(n, _)| n == "csi-memory").unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let mut cfg = RunConfig::load(memory_cfg).unwrap();
        cfg.workers = workers;
        cfg.paths.out = dir.path().join(format!("w{workers}"));
        let s = pipeline::cmd_eval(&cfg).unwrap();
        assert_eq!(s.report.errored, 0);
        // the worker count is part of the config, so only the hash may differ
        let mut ts = s.transcripts;
        for t in &mut ts {
            t.config_hash.clear();
        }
        outputs.push(ts);
    }
    assert!(outputs[0] == outputs[1]);
}

fn chat(cfg: &RunConfig, budget: Option<PriceRange>, input: &str) -> (convsales::eval::Transcript, String) {
    let mut out = Vec::new();
    let t = pipeline::cmd_chat(cfg, Arc::new(NullBackend), budget, &mut Cursor::new(input.as_bytes()), &mut out).unwrap();
    (t, String::from_utf8(out).unwrap())
}

#[test]
fn chat_sessions_end_on_stop_eof_or_failure() {
    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "");
    pipeline::cmd_ingest(&cfg).unwrap();

    let (t, _) = chat(&cfg, Some(PriceRange::new(20.0, 23.0)), "STOP B0C4FQHKJ2\n");
    assert_eq!(t.outcome, Outcome::AcceptedOutOfBudget);
    assert_eq!(t.accepted_item_id.as_deref(), Some("B0C4FQHKJ2"));
    let (t, _) = chat(&cfg, Some(PriceRange::new(20.0, 23.99)), "STOP B0C4FQHKJ2\n");
    assert_eq!(t.outcome, Outcome::AcceptedInBudget);

    let (t, out) = chat(&cfg, None, "STOP B0NOTREAL\n");
    assert_eq!(t.outcome, Outcome::NoPurchase);
    assert!(out.contains("No item with id"));

    let (t, _) = chat(&cfg, None, "");
    assert_eq!((t.outcome, t.turns.len(), t.error.clone()), (Outcome::NoPurchase, 0, None));
    let saved = fs::read_to_string(dir.path().join("out/chat-transcript.jsonl")).unwrap();
    assert_eq!(saved.lines().count(), 1);

    let (t, out) = chat(&cfg, None, "I want a soft shirt. My expected price range is: [$20, $25].\n");
    assert!(t.errored());
    assert_eq!(t.outcome, Outcome::NoPurchase);
    assert!(out.contains("recommender failed"));
}

#[test]
fn chat_demo_replays_against_recorded_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let files = bench::write_benchmark(dir.path(), bench::SEED).unwrap();
    let (_, csi) = files.configs.iter().find(|(n, _)| n == "csi").unwrap();
    let cfg = RunConfig::load(csi).unwrap();
    let script = fs::read_to_string(dir.path().join("chat-demo.txt")).unwrap();
    let backend = pipeline::make_backend(&cfg).unwrap();
    let mut out = Vec::new();
    let t = pipeline::cmd_chat(&cfg, backend, None, &mut Cursor::new(script.as_bytes()), &mut out).unwrap();
    assert!(!t.errored(), "{:?}", t.error);
    assert!(t.outcome.is_accepted());
    assert!(t.turn_count >= 2);
}

#[test]
fn usage_and_data_errors_map_to_exit_codes() {
    assert_eq!(pipeline::variant_arg("gpt").unwrap_err().exit_code(), 2);
    assert!(pipeline::parse_budget("30,20").is_none());
    assert_eq!(pipeline::parse_budget("$20, 30.5"), Some(PriceRange::new(20.0, 30.5)));

    let dir = tempfile::tempdir().unwrap();
    write_raw(dir.path());
    let cfg = write_config(dir.path(), "");
    let e = pipeline::cmd_eval(&cfg).unwrap_err();
    assert!(matches!(e, PipelineError::MissingInput(_)), "{e}");
    assert_eq!(e.exit_code(), 2);
    pipeline::cmd_ingest(&cfg).unwrap();
    fs::write(dir.path().join("data/profiles.jsonl"), "not json\n").unwrap();
    fs::write(dir.path().join("fixtures.jsonl"), "").unwrap();
    let e = pipeline::cmd_eval(&cfg).unwrap_err();
    assert_eq!(e.exit_code(), 1, "{e}");
}
