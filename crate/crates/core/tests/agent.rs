mod common;

use std::collections::HashSet;
use std::sync::Arc;

use common::{shirt_world, World};
use convsales::agent::tools::{
    apply_category_reply, pick_candidate, retrieve_in_budget, Retrieval, RELAX,
};
use convsales::agent::{AgentParams, ChatCrsAgent, ContextualProfile, CsiAgent, ReactAgent};
use convsales::bench;
use convsales::dialogue::{Action, SeekerResponse, Strategy, Turn};
use convsales::gateway::{prompts, FixtureKey, Gateway, ScriptedBackend};
use convsales::index::{item_text, Embedder};
use proptest::prelude::*;
use serde_json::json;

fn gateway(entries: Vec<(&str, u32, String)>) -> Gateway {
    let backend = ScriptedBackend::from_entries(
        entries.into_iter().map(|(t, n, s)| (FixtureKey::new(t, "d", n), s)),
    );
    let mut g = Gateway::new(Arc::new(backend));
    g.json_retries = 0;
    g
}

fn plan(action: &str, profile: serde_json::Value) -> String {
    json!({"Thoughts": "thinking", "Profile": profile, "Action": action}).to_string()
}

fn seeker(text: &str) -> Turn {
    Turn::Seeker(SeekerResponse::says(text))
}

/// Brute-force nearest ids to `query` among items passing `keep`.
fn oracle(w: &World, query: &str, k: usize, keep: impl Fn(&convsales::catalog::Item) -> bool) -> Vec<String> {
    let q = w.embedder.embed(query).unwrap();
    let mut all: Vec<(f64, String)> = w
        .catalog
        .items()
        .iter()
        .filter(|i| keep(i))
        .map(|i| (q.squared_distance(&w.embedder.embed(&item_text(i)).unwrap()), i.id.clone()))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, id)| id).collect()
}

#[test]
fn planner_reads_the_stated_price_range() {
    let w = shirt_world();
    let g = gateway(vec![
        (
            prompts::AGENT_PLAN,
            1,
            plan(
                "Preference Probing",
                json!({"Preference": "soft cotton", "Category Path": [], "Personality": "",
                       "Expected Price Range": [29.99, 31.92], "Selected Item ID": ""}),
            ),
        ),
        (prompts::AGENT_PROBE, 1, "Which fabric do you prefer?".into()),
    ]);
    let mut agent = CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None);
    let convo = vec![seeker("I want something soft. My expected price range is: [$29.99, $31.92].")];
    let (turn, record) = agent.next_turn(&convo).unwrap();
    assert_eq!(turn.action, Action::PreferenceProbing);
    assert_eq!(turn.utterance, "Which fabric do you prefer?");
    assert!(record.is_none() && turn.is_well_formed());
    assert_eq!(agent.profile().price_min, 29.99);
    assert_eq!(agent.profile().price_max, Some(31.92));
}

#[test]
fn missing_minimum_price_defaults_to_zero() {
    let p = ContextualProfile::from_json(&json!({"Expected Price Range": [null, 40]}), &ContextualProfile::default()).unwrap();
    assert_eq!((p.price_min, p.price_max), (0.0, Some(40.0)));
    let p = ContextualProfile::from_json(&json!({"Expected Price Range": ["", "$31.92"]}), &ContextualProfile::default()).unwrap();
    assert_eq!((p.price_min, p.price_max), (0.0, Some(31.92)));
}

#[test]
fn csi_persuades_toward_the_nearest_pricier_item() {
    let w = shirt_world();
    let sentence = "Shoppers love <\"Soft Cotton Crew Pullover\"> (B097FFSP2R) at $54.50 over <\"Soft Cotton Crew Shirt\"> (B0SHIRT001) at $18.75.";
    let g = gateway(vec![
        (
            prompts::AGENT_PLAN,
            1,
            plan(
                "Persuasion",
                json!({"Preference": "soft breathable cotton", "Category Path": ["Clothing", "Tops"],
                       "Personality": "trusts other buyers", "Expected Price Range": [17.75, 18.75],
                       "Selected Item ID": "B0SHIRT001"}),
            ),
        ),
        (prompts::AGENT_PERSUADE, 1, json!({"strategy": "Social Proof", "sentence": sentence}).to_string()),
    ]);
    let mut agent = CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None);
    let (turn, record) = agent.next_turn(&[seeker("I need a soft shirt. [$17.75, $18.75]")]).unwrap();
    assert_eq!(turn.action, Action::Persuasion);
    assert_eq!(turn.strategy, Some(Strategy::SocialProof));
    assert_eq!(turn.candidate_item_id.as_deref(), Some("B097FFSP2R"));
    assert_eq!(turn.utterance, sentence);
    assert!(turn.is_well_formed());
    assert!(w.catalog.get("B097FFSP2R").unwrap().price > 18.75);
    let record = record.unwrap();
    assert_eq!(record.strategy, Strategy::SocialProof);
    assert!(record.memory_text.contains("trusts other buyers"));
}

#[test]
fn unknown_strategy_falls_back_to_a_logical_comparison() {
    let w = shirt_world();
    let g = gateway(vec![
        (
            prompts::AGENT_PLAN,
            1,
            plan("Persuasion", json!({"Preference": "soft cotton", "Expected Price Range": [0, 18.75], "Selected Item ID": "B0SHIRT001"})),
        ),
        (prompts::AGENT_PERSUADE, 1, json!({"strategy": "Flattery", "sentence": "You deserve it."}).to_string()),
    ]);
    let mut agent = CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None);
    let (turn, _) = agent.next_turn(&[seeker("hi")]).unwrap();
    assert_eq!(turn.strategy, Some(Strategy::LogicalAppeal));
    assert!(turn.utterance.contains("(B0SHIRT001)") && turn.utterance.contains("(B097FFSP2R)"));
    assert!(turn.utterance.contains("$18.75") && turn.utterance.contains("$54.50"));
}

#[test]
fn impossible_action_triggers_one_replan() {
    let w = shirt_world();
    let g = gateway(vec![
        (prompts::AGENT_PLAN, 1, plan("Persuasion", json!({"Preference": "soft cotton"}))),
        (prompts::AGENT_REPLAN, 1, plan("Category Search", json!({"Preference": "soft cotton"}))),
    ]);
    let mut agent = CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None);
    let (turn, _) = agent.next_turn(&[seeker("I want something soft.")]).unwrap();
    assert_eq!(turn.action, Action::CategoryNarrowing);
    assert!(turn.utterance.contains("Clothing"));
}

#[test]
fn malformed_plan_falls_back_to_probing_with_the_old_profile() {
    let w = shirt_world();
    let g = gateway(vec![
        (prompts::AGENT_PLAN, 1, "I think we should ask more questions.".into()),
        (prompts::AGENT_PROBE, 1, "What do you like?".into()),
    ]);
    let mut agent = CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None);
    let (turn, _) = agent.next_turn(&[seeker("hello")]).unwrap();
    assert_eq!(turn.action, Action::PreferenceProbing);
    assert_eq!(agent.profile(), &ContextualProfile::default());
}

#[test]
fn category_replies_extend_only_along_the_tree() {
    let w = shirt_world();
    let path = apply_category_reply(&w.tree, &[], "I need Clothing > Tops products");
    assert_eq!(path, vec!["Clothing", "Tops"]);
    let start = vec!["Clothing".to_string()];
    assert_eq!(apply_category_reply(&w.tree, &start, "I need Clothing > Hats products"), start);
}

#[test]
fn suggestions_match_a_brute_force_scan_on_200_items() {
    let w = World::new(bench::generate(bench::SEED).items);
    assert_eq!(w.catalog.len(), 200);
    let queries = ["soft cotton tee", "waterproof leather boots", "denim with stretch", "warm wool coat"];
    let paths: [&[&str]; 3] = [&[], &["Tops"], &["Footwear", "Boots"]];
    for query in queries {
        for path in paths {
            for max in [20.0, 45.0, 500.0] {
                let path: Vec<String> = path.iter().map(|s| s.to_string()).collect();
                let under: HashSet<String> = if path.is_empty() {
                    w.catalog.items().iter().map(|i| i.id.clone()).collect()
                } else {
                    w.tree.items_under(&path).unwrap().into_iter().collect()
                };
                let got = retrieve_in_budget(
                    &w.tools(),
                    &Retrieval { query, path: &path, max_price: Some(max), exclude: &HashSet::new(), k: 3 },
                )
                .unwrap();
                let want = oracle(&w, query, 3, |i| under.contains(&i.id) && i.price <= max);
                assert_eq!(got, want, "{query} {path:?} {max}");
            }
        }
    }
}

#[test]
fn suggestion_turn_shows_only_in_budget_items_or_asks_to_relax() {
    let w = shirt_world();
    let suggest = |max: f64| {
        let g = gateway(vec![(
            prompts::AGENT_PLAN,
            1,
            plan("Suggestion", json!({"Preference": "soft cotton crew", "Expected Price Range": [0, max]})),
        )]);
        CsiAgent::new(w.tools(), g, "d", AgentParams::default(), None).next_turn(&[seeker("hi")]).unwrap().0
    };
    let turn = suggest(60.0);
    assert_eq!(turn.shown_item_ids.len(), 3);
    assert!(turn.shown_item_ids.iter().all(|id| w.catalog.get(id).unwrap().price <= 60.0));
    assert!(turn.utterance.contains("<\"Soft Cotton Crew Shirt\"> (B0SHIRT001)"));
    let turn = suggest(5.0);
    assert!(turn.shown_item_ids.is_empty());
    assert_eq!(turn.utterance, RELAX);
}

#[test]
fn candidate_is_the_nearest_item_over_budget() {
    let w = shirt_world();
    assert_eq!(pick_candidate(&w.tools(), "B0SHIRT001", 18.75, 20).unwrap().as_deref(), Some("B097FFSP2R"));
    assert_eq!(pick_candidate(&w.tools(), "B0SHIRT001", 100.0, 20).unwrap(), None);
    assert!(pick_candidate(&w.tools(), "NOPE", 18.75, 20).is_err());
    // with the pullover affordable the nearer of boot and sneaker wins
    let got = pick_candidate(&w.tools(), "B0SHIRT001", 60.0, 20).unwrap();
    let shirt = w.index.vector("B0SHIRT001").unwrap();
    let d = |id: &str| shirt.squared_distance(w.index.vector(id).unwrap());
    let want = if (d("B0BOOT0001"), "B0BOOT0001") < (d("B0SNEAK001"), "B0SNEAK001") { "B0BOOT0001" } else { "B0SNEAK001" };
    assert_eq!(got.as_deref(), Some(want));
}

#[test]
fn chatcrs_recommends_and_persuades_in_one_turn() {
    let w = shirt_world();
    let sentence = "Consider <\"Soft Cotton Crew Shirt\"> (B0SHIRT001) at $18.75, or step up to <\"Soft Cotton Crew Pullover\"> (B097FFSP2R) at $54.50.";
    let g = gateway(vec![(prompts::CHATCRS, 1, json!({"strategy": "Logical Appeal", "sentence": sentence}).to_string())]);
    let convo = vec![seeker("I want a soft cotton crew shirt. My expected price range is: [$10.00, $20.00].")];
    let mut agent = ChatCrsAgent::new(w.tools(), g.clone(), "d", AgentParams::default());
    let turn = agent.next_turn(&convo).unwrap();
    assert_eq!(turn.action, Action::Persuasion);
    assert_eq!(turn.strategy, Some(Strategy::LogicalAppeal));
    let query = convsales::agent::seeker_text(&convo);
    let inside = oracle(&w, &query, 1, |i| i.price <= 20.0);
    let outside = oracle(&w, &query, 1, |i| i.price > 20.0);
    assert_eq!(turn.shown_item_ids, vec![inside[0].clone(), outside[0].clone()]);
    assert_eq!(turn.candidate_item_id.as_ref(), Some(&outside[0]));
    assert!(turn.is_well_formed());

    // no stated budget: nothing counts as over budget, so recommend only
    let mut agent = ChatCrsAgent::new(w.tools(), g, "d", AgentParams::default());
    let turn = agent.next_turn(&[seeker("I want a soft cotton crew shirt.")]).unwrap();
    assert_eq!(turn.action, Action::ItemSuggestion);
    assert_eq!(turn.shown_item_ids.len(), 1);
    assert!(turn.is_well_formed());
}

#[test]
fn react_probes_then_suggests_then_persuades() {
    let w = shirt_world();
    let react = |action: &str, extra: serde_json::Value| {
        let mut v = json!({"Thoughts": "t", "Action": action});
        v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
        v.to_string()
    };
    let g = gateway(vec![
        (prompts::REACT_PLAN, 1, react("Preference Probing", json!({}))),
        (prompts::AGENT_PROBE, 1, "What do you need it for?".into()),
        (prompts::REACT_PLAN, 2, react("Suggestion", json!({"Expected Price Range": [17.75, 18.75]}))),
        (
            prompts::REACT_PLAN,
            3,
            react("Persuasion", json!({"Expected Price Range": [17.75, 18.75], "Selected Item ID": "B0SHIRT001"})),
        ),
        (prompts::AGENT_PERSUADE, 3, json!({"strategy": "Evidence-Based Approach", "sentence": "Lab tests favor it."}).to_string()),
    ]);
    let mut agent = ReactAgent::new(w.tools(), g, "d", AgentParams::default());
    let mut convo = vec![seeker("I want a soft cotton crew shirt. My expected price range is: [$17.75, $18.75].")];
    let t1 = agent.next_turn(&convo).unwrap();
    assert_eq!(t1.action, Action::PreferenceProbing);
    convo.push(Turn::Recommender(t1));
    convo.push(seeker("Something breathable."));
    let t2 = agent.next_turn(&convo).unwrap();
    assert_eq!(t2.action, Action::ItemSuggestion);
    assert!(t2.shown_item_ids.iter().all(|id| w.catalog.get(id).unwrap().price <= 18.75));
    convo.push(Turn::Recommender(t2));
    convo.push(seeker("Tell me more."));
    let t3 = agent.next_turn(&convo).unwrap();
    assert_eq!(t3.action, Action::Persuasion);
    assert_eq!(t3.strategy, Some(Strategy::EvidenceBased));
    assert_eq!(t3.candidate_item_id.as_deref(), Some("B097FFSP2R"));
    assert!(t3.utterance.contains("(B0SHIRT001)") && t3.utterance.contains("$54.50"));
}

proptest! {
    #[test]
    fn planned_profiles_stay_valid(
        path in proptest::collection::vec(prop_oneof!["Clothing", "Tops", "Shoes", "Hats", ""], 0..4),
        lo in proptest::option::of(-50.0f64..200.0),
        hi in proptest::option::of(-50.0f64..200.0),
        selected in prop_oneof!["B0SHIRT001", "B0NOPE0000", ""],
    ) {
        let w = shirt_world();
        let v = json!({"Category Path": path, "Expected Price Range": [lo, hi], "Selected Item ID": selected});
        let mut p = ContextualProfile::from_json(&v, &ContextualProfile::default()).unwrap();
        p.sanitize(&w.tree, &w.catalog);
        prop_assert!(w.tree.contains(&p.category_path) || p.category_path.is_empty());
        prop_assert_eq!(w.tree.valid_prefix(&p.category_path), p.category_path.clone());
        if let Some(max) = p.price_max {
            prop_assert!(p.price_min <= max);
        }
        if let Some(id) = &p.selected_item_id {
            prop_assert!(w.catalog.get(id).is_some());
        }
    }
}
