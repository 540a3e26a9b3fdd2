use std::collections::HashSet;
use std::sync::Arc;

use convsales::bench;
use convsales::config::{MemoryMode, RunConfig};
use convsales::dialogue::Strategy;
use convsales::eval::Outcome;
use convsales::index::HashEmbedder;
use convsales::memory::{MemoryStore, ValueMode};
use convsales::pipeline;
use proptest::prelude::*;

proptest! {
    #[test]
    fn shorter_retrievals_are_prefixes(
        texts in proptest::collection::vec("[a-d]{1,3}( [a-d]{1,3}){0,3}", 1..40),
        query in "[a-d]{1,3}( [a-d]{1,3}){0,2}",
        k1 in 1usize..10,
        extra in 0usize..10,
    ) {
        let store = MemoryStore::online(Arc::new(HashEmbedder::new(16)), ValueMode::Strategy);
        for (i, t) in texts.iter().enumerate() {
            store.insert(t, Strategy::ALL[i % 5], Some("dropped"), &format!("e{i}")).unwrap();
        }
        prop_assert!(store.snapshot().iter().all(|e| e.utterance.is_none()));
        let short = store.retrieve(&query, k1).unwrap();
        let long = store.retrieve(&query, k1 + extra).unwrap();
        prop_assert_eq!(short.len(), k1.min(texts.len()));
        let ids = |v: &[Arc<convsales::memory::MemoryEntry>]| v.iter().map(|e| e.source_episode_id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(&ids(&long)[..short.len()], &ids(&short)[..]);
    }
}

#[test]
fn online_memory_grows_only_from_out_of_budget_sales() {
    let dir = tempfile::tempdir().unwrap();
    let files = bench::write_benchmark(dir.path(), bench::SEED).unwrap();
    let (_, csi) = files.configs.iter().find(|(n, _)| n == "csi-memory").unwrap();
    let mut cfg = RunConfig::load(csi).unwrap();
    cfg.memory.mode = MemoryMode::Online;
    cfg.memory.path = None;
    cfg.memory.sync_every = 4;
    cfg.run_name = Some("csi-memory".into());
    cfg.paths.out = dir.path().join("online");
    let s = pipeline::cmd_eval(&cfg).unwrap();
    let saved = MemoryStore::offline(Arc::new(HashEmbedder::default()), ValueMode::Utterance, &cfg.paths.out.join("memory.jsonl")).unwrap();
    let oob: HashSet<&str> = s
        .transcripts
        .iter()
        .filter(|t| t.outcome == Outcome::AcceptedOutOfBudget)
        .map(|t| t.episode_id.as_str())
        .collect();
    assert!(!saved.is_empty() && saved.len() <= oob.len());
    assert!(saved.snapshot().iter().all(|e| oob.contains(e.source_episode_id.as_str()) && e.utterance.is_some()));
}
