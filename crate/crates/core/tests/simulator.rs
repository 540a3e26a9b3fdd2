mod common;

use std::collections::HashSet;
use std::sync::Arc;

use common::{item, profile};
use convsales::catalog::Catalog;
use convsales::dialogue::{Action, AgentTurn, Strategy, Turn};
use convsales::gateway::{prompts, FixtureKey, Gateway, ScriptedBackend};
use convsales::profiles::{DecisionStyle, Openness};
use convsales::simulator::{
    keyword_fraction, need_keywords, rule_open, rule_respond, RuleParams, Seeker, SeekerMode,
};
use proptest::prelude::*;

const VOCAB: [&str; 12] = [
    "soft", "breathable", "cotton", "relaxed", "warm", "wool", "stretch", "denim", "waterproof",
    "leather", "lightweight", "hooded",
];

fn persuade(id: &str, strategy: Strategy) -> AgentTurn {
    let mut t = AgentTurn::new("", Action::Persuasion, "Consider this one instead.");
    t.strategy = Some(strategy);
    t.candidate_item_id = Some(id.into());
    t.shown_item_ids = vec![id.into()];
    t
}

fn ten_keyword_world() -> (Catalog, String) {
    let needs = "soft breathable cotton relaxed warm wool stretch denim waterproof leather";
    // the pullover carries 7 of the 10 need keywords
    let pullover = item(
        "B097FFSP2R",
        &["Clothing", "Tops"],
        54.50,
        "Soft Cotton Pullover",
        "breathable relaxed warm wool stretch knit",
    );
    (Catalog::new(vec![pullover]).unwrap(), needs.to_string())
}

#[test]
fn dependent_seeker_accepts_matched_strategy_at_seventy_percent() {
    let (catalog, needs) = ten_keyword_world();
    let p = profile("u1", Openness::Neutral, DecisionStyle::Dependent, &needs, (17.75, 18.75));
    let kw = need_keywords(&p, &[]);
    assert_eq!(kw.len(), 10);
    assert_eq!(keyword_fraction(&kw, catalog.get("B097FFSP2R").unwrap()), 0.7);
    let params = RuleParams { theta_out: 0.5, ..RuleParams::default() };
    let r = rule_respond(&p, &kw, &catalog, &[], &persuade("B097FFSP2R", Strategy::SocialProof), &params);
    assert!(r.terminal);
    assert_eq!(r.accepted_item_id.as_deref(), Some("B097FFSP2R"));
}

#[test]
fn rational_seeker_declines_social_proof_even_on_full_match() {
    let pullover = item("P", &["Clothing", "Tops"], 54.50, "Soft Cotton Pullover", "breathable relaxed");
    let catalog = Catalog::new(vec![pullover]).unwrap();
    let p = profile("u1", Openness::Neutral, DecisionStyle::Rational, "soft breathable cotton relaxed", (10.0, 20.0));
    let kw = need_keywords(&p, &[]);
    assert_eq!(keyword_fraction(&kw, catalog.get("P").unwrap()), 1.0);
    let r = rule_respond(&p, &kw, &catalog, &[], &persuade("P", Strategy::SocialProof), &RuleParams::default());
    assert!(!r.terminal);
    assert_eq!(r.accepted_item_id, None);
    let r = rule_respond(&p, &kw, &catalog, &[], &persuade("P", Strategy::EvidenceBased), &RuleParams::default());
    assert_eq!(r.accepted_item_id.as_deref(), Some("P"));
}

#[test]
fn opening_states_the_dollar_range() {
    let p = profile("u", Openness::Active, DecisionStyle::Intuitive, "soft cotton", (29.99, 31.92));
    let o = rule_open(&p, &need_keywords(&p, &[]));
    assert!(o.utterance.contains("[$29.99, $31.92]"));
    assert!(!o.terminal);
}

#[test]
fn prompted_seeker_parses_stop_and_item_id() {
    let weeso = item("B0C4FQHKJ2", &["Clothing", "Tops"], 23.99, "WEESO Long Sleeve Shirt", "soft cotton shirt");
    let catalog = Catalog::new(vec![weeso]).unwrap();
    let p = profile("u", Openness::Passive, DecisionStyle::Dependent, "soft cotton shirt", (20.0, 25.0));
    let backend = ScriptedBackend::from_entries([
        (FixtureKey::new(prompts::SEEKER, "d1", 0), "I need a soft shirt. My expected price range is: [$20.00, $25.00].".to_string()),
        (
            FixtureKey::new(prompts::SEEKER, "d1", 1),
            "Great, I'll take <\"WEESO Long Sleeve Shirt\"> (B0C4FQHKJ2). STOP".to_string(),
        ),
        (FixtureKey::new(prompts::SEEKER, "d2", 1), "Can you tell me more about the fabric?".to_string()),
    ]);
    let gateway = Gateway::new(Arc::new(backend));
    let seeker = |d: &str| {
        Seeker::new(&p, &catalog, SeekerMode::Llm { gateway: gateway.clone(), dialogue_id: d.into() })
    };
    let open = seeker("d1").open_dialogue().unwrap();
    assert!(!open.terminal);
    let convo = vec![Turn::Seeker(open)];
    let mut pitch = AgentTurn::new("", Action::ItemSuggestion, "Here is <\"WEESO Long Sleeve Shirt\"> (B0C4FQHKJ2).");
    pitch.shown_item_ids = vec!["B0C4FQHKJ2".into()];
    let r = seeker("d1").respond(&convo, &pitch).unwrap();
    assert!(r.terminal);
    assert_eq!(r.accepted_item_id.as_deref(), Some("B0C4FQHKJ2"));
    assert!(!r.utterance.contains("STOP"));
    let r = seeker("d2").respond(&convo, &pitch).unwrap();
    assert!(!r.terminal);
    assert_eq!(r.accepted_item_id, None);
    // a missing fixture names its key
    let err = seeker("d3").respond(&convo, &pitch).unwrap_err().to_string();
    assert!(err.contains("d3"), "{err}");
}

fn words(mask: u16) -> String {
    VOCAB.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, w)| *w).collect::<Vec<_>>().join(" ")
}

fn style_of(n: u8) -> DecisionStyle {
    DecisionStyle::ALL[n as usize % 3]
}

fn strategy_of(n: u8) -> Strategy {
    Strategy::ALL[n as usize % 5]
}

proptest! {
    #[test]
    fn rule_mode_is_pure_and_never_buys_a_weak_in_budget_item(
        need_mask in 1u16..4096,
        item_masks in proptest::collection::vec(0u16..4096, 1..5),
        prices in proptest::collection::vec(5.0f64..60.0, 5),
        style in 0u8..3,
        strategy in 0u8..5,
        persuading in any::<bool>(),
        theta_in in 0.1f64..0.9,
    ) {
        let items: Vec<_> = item_masks
            .iter()
            .enumerate()
            .map(|(i, m)| item(&format!("I{i}"), &["Clothing", "Tops"], prices[i], "Plain Item", &format!("basic {}", words(*m))))
            .collect();
        let catalog = Catalog::new(items).unwrap();
        let p = profile("u", Openness::Neutral, style_of(style), &words(need_mask), (10.0, 30.0));
        let kw = need_keywords(&p, &[]);
        let ids: Vec<String> = catalog.items().iter().map(|i| i.id.clone()).collect();
        let turn = if persuading {
            let mut t = persuade(&ids[0], strategy_of(strategy));
            t.shown_item_ids = ids.clone();
            t
        } else {
            let mut t = AgentTurn::new("", Action::ItemSuggestion, "Here are some items.");
            t.shown_item_ids = ids.clone();
            t
        };
        let params = RuleParams { theta_in, ..RuleParams::default() };
        let a = rule_respond(&p, &kw, &catalog, &[], &turn, &params);
        let b = rule_respond(&p, &kw, &catalog, &[], &turn, &params);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.terminal, a.accepted_item_id.is_some());
        if let Some(id) = &a.accepted_item_id {
            let it = catalog.get(id).unwrap();
            if it.price <= p.budget.max {
                prop_assert!(keyword_fraction(&kw, it) >= theta_in);
            }
        }
    }

    #[test]
    fn out_of_budget_acceptance_is_monotone_in_match(
        need_mask in 1u16..4096,
        low_mask in 0u16..4096,
        extra in 0u16..4096,
        style in 0u8..3,
        strategy in 0u8..5,
    ) {
        let high_mask = low_mask | extra;
        let catalog = Catalog::new(vec![
            item("LOW", &["Clothing", "Tops"], 50.0, "Plain Item", &format!("basic {}", words(low_mask))),
            item("HIGH", &["Clothing", "Tops"], 50.0, "Plain Item", &format!("basic {}", words(high_mask))),
        ]).unwrap();
        let p = profile("u", Openness::Neutral, style_of(style), &words(need_mask), (10.0, 30.0));
        let kw = need_keywords(&p, &[]);
        let params = RuleParams::default();
        let low = rule_respond(&p, &kw, &catalog, &[], &persuade("LOW", strategy_of(strategy)), &params);
        let high = rule_respond(&p, &kw, &catalog, &[], &persuade("HIGH", strategy_of(strategy)), &params);
        prop_assert!(keyword_fraction(&kw, catalog.get("HIGH").unwrap()) >= keyword_fraction(&kw, catalog.get("LOW").unwrap()));
        if low.terminal {
            prop_assert!(high.terminal);
        }
    }

    #[test]
    fn talkative_seekers_reveal_at_least_as_much(need_mask in 1u16..4096, probes in 1usize..6) {
        let catalog = Catalog::new(vec![item("X", &["Clothing", "Tops"], 20.0, "Plain Item", "basic")]).unwrap();
        let revealed = |o: Openness| {
            let p = profile("u", o, DecisionStyle::Rational, &words(need_mask), (10.0, 30.0));
            let kw = need_keywords(&p, &[]);
            let mut convo = vec![Turn::Seeker(rule_open(&p, &kw))];
            let mut counts = Vec::new();
            for _ in 0..probes {
                let q = AgentTurn::new("", Action::PreferenceProbing, "What else do you like?");
                let r = rule_respond(&p, &kw, &catalog, &convo, &q, &RuleParams::default());
                convo.push(Turn::Recommender(q));
                convo.push(Turn::Seeker(r));
                let said: HashSet<String> = convo
                    .iter()
                    .filter(|t| matches!(t, Turn::Seeker(_)))
                    .flat_map(|t| convsales::text::tokens(t.text()))
                    .collect();
                counts.push(kw.iter().filter(|k| said.contains(*k)).count());
            }
            counts
        };
        let (a, n, p) = (revealed(Openness::Active), revealed(Openness::Neutral), revealed(Openness::Passive));
        for t in 0..probes {
            prop_assert!(a[t] >= n[t] && n[t] >= p[t], "turn {}: {} {} {}", t, a[t], n[t], p[t]);
        }
    }
}
