use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use super::{keyword_fraction, strategy_matches, RuleParams};
use crate::catalog::{Catalog, Item};
use crate::dialogue::{mention, Action, AgentTurn, SeekerResponse, Turn};
use crate::profiles::{DecisionStyle, Openness, UserProfile};
use crate::text::{self, join_words};

/// What a seeker of each style says about how they decide: a habit sentence
/// volunteered by talkative seekers, and the unmet wish named when a
/// persuasion attempt misses their style.
pub fn style_cue(style: DecisionStyle) -> (&'static str, &'static str) {
    match style {
        DecisionStyle::Rational => (
            "I usually want a clear comparison of the details before I buy.",
            "a clear comparison of the details",
        ),
        DecisionStyle::Dependent => (
            "I usually check what other buyers think before I buy.",
            "to know what other buyers think",
        ),
        DecisionStyle::Intuitive => (
            "I usually buy what feels right to me.",
            "it to feel right for me",
        ),
    }
}

static LEVELS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(\d+)\s+(?:path\s+)?levels?").unwrap());

/// Depth asked for in a category question, e.g. "answer with 2 levels".
pub fn requested_levels(question: &str) -> Option<usize> {
    LEVELS.captures(question).and_then(|c| c[1].parse().ok())
}

pub fn category_reply(path: &[String], levels: usize) -> String {
    let n = levels.clamp(1, path.len().max(1)).min(path.len());
    format!("I need {} products", path[..n].join(" > "))
}

fn revealed(keywords: &[String], conversation: &[Turn]) -> HashSet<String> {
    let said: HashSet<String> = conversation
        .iter()
        .filter_map(|t| match t {
            Turn::Seeker(s) => Some(text::tokens(&s.utterance)),
            Turn::Recommender(_) => None,
        })
        .flatten()
        .collect();
    keywords.iter().filter(|k| said.contains(*k)).cloned().collect()
}

fn unseen(keywords: &[String], conversation: &[Turn]) -> Vec<String> {
    let seen = revealed(keywords, conversation);
    keywords.iter().filter(|k| !seen.contains(*k)).cloned().collect()
}

fn missing(keywords: &[String], item: &Item) -> Vec<String> {
    let words = super::item_words(item);
    keywords.iter().filter(|k| !words.contains(k)).cloned().collect()
}

/// Up to `r` keywords to volunteer: unseen ones lacking from `item` first,
/// then any other unseen ones, then already-said ones the item lacks.
fn to_reveal(
    keywords: &[String],
    conversation: &[Turn],
    item: Option<&Item>,
    r: usize,
) -> Vec<String> {
    let fresh = unseen(keywords, conversation);
    let lacking = item.map(|i| missing(keywords, i)).unwrap_or_default();
    let mut out: Vec<String> = Vec::new();
    let ordered = fresh
        .iter()
        .filter(|k| lacking.contains(k))
        .chain(fresh.iter())
        .chain(lacking.iter());
    for k in ordered {
        if out.len() == r {
            break;
        }
        if !out.contains(k) {
            out.push(k.clone());
        }
    }
    out
}

pub fn rule_open(profile: &UserProfile, keywords: &[String]) -> SeekerResponse {
    let want = keywords.first().map_or("new", String::as_str);
    SeekerResponse::says(format!(
        "I want something {want}. My expected price range is: {}.",
        profile.budget.display_dollars()
    ))
}

fn buy(item: &Item) -> SeekerResponse {
    SeekerResponse::accepts(
        format!("I have decided to purchase {}. Thank you!", mention(item)),
        &item.id,
    )
}

fn need_sentence(words: &[String]) -> String {
    if words.is_empty() {
        "Could you show me something else?".to_string()
    } else {
        format!("I need something {}.", join_words(words))
    }
}

/// Deterministic reply to one recommender turn.
pub fn rule_respond(
    profile: &UserProfile,
    keywords: &[String],
    catalog: &Catalog,
    conversation: &[Turn],
    system: &AgentTurn,
    params: &RuleParams,
) -> SeekerResponse {
    let r = params.reveal(profile.dialogue_openness);
    let max = profile.budget.max;
    let shown: Vec<&Item> = system
        .shown_item_ids
        .iter()
        .filter(|id| Some(id.as_str()) != system.candidate_item_id.as_deref())
        .filter_map(|id| catalog.get(id))
        .collect();
    let fits = |item: &Item| keyword_fraction(keywords, item) >= params.theta_in && item.price <= max;

    match system.action {
        Action::PreferenceProbing => {
            let next: Vec<String> = unseen(keywords, conversation).into_iter().take(r).collect();
            let mut reply = if next.is_empty() {
                "That's all I need.".to_string()
            } else {
                format!("I prefer {}.", join_words(&next))
            };
            if profile.dialogue_openness == Openness::Active {
                reply.push(' ');
                reply.push_str(style_cue(profile.decision_style).0);
            }
            SeekerResponse::says(reply)
        }
        Action::CategoryNarrowing => {
            let levels = requested_levels(&system.utterance)
                .unwrap_or(profile.target_category_path.len());
            SeekerResponse::says(category_reply(&profile.target_category_path, levels))
        }
        Action::ItemSuggestion => {
            if let Some(item) = shown.iter().find(|i| fits(i)) {
                return buy(item);
            }
            suggestion_decline(keywords, conversation, &shown, r, max, params)
        }
        Action::Persuasion => {
            let candidate = system.candidate_item_id.as_deref().and_then(|id| catalog.get(id));
            let Some(candidate) = candidate else {
                if let Some(item) = shown.iter().find(|i| fits(i)) {
                    return buy(item);
                }
                return suggestion_decline(keywords, conversation, &shown, r, max, params);
            };
            let f = keyword_fraction(keywords, candidate);
            let persuaded = if candidate.price <= max {
                f >= params.theta_in
            } else {
                match system.strategy {
                    Some(s) if strategy_matches(profile.decision_style, s) => f >= params.theta_out,
                    Some(crate::dialogue::Strategy::Framing) => {
                        f >= params.theta_out + params.framing_margin
                    }
                    _ => false,
                }
            };
            if persuaded {
                return buy(candidate);
            }
            if let Some(item) = shown.iter().find(|i| fits(i)) {
                return buy(item);
            }
            if f < params.theta_out {
                let words = to_reveal(keywords, conversation, Some(candidate), r.max(1));
                SeekerResponse::says(format!(
                    "{} doesn't match what I need. {}",
                    mention(candidate),
                    need_sentence(&words)
                ))
            } else {
                SeekerResponse::says(format!(
                    "{} sounds good, but I need {}.",
                    mention(candidate),
                    style_cue(profile.decision_style).1
                ))
            }
        }
    }
}

fn suggestion_decline(
    keywords: &[String],
    conversation: &[Turn],
    shown: &[&Item],
    r: usize,
    max: f64,
    params: &RuleParams,
) -> SeekerResponse {
    let best = shown.iter().copied().fold(None::<(&Item, f64)>, |acc, item| {
        let f = keyword_fraction(keywords, item);
        match acc {
            Some((_, bf)) if bf >= f => acc,
            _ => Some((item, f)),
        }
    });
    match best {
        None => SeekerResponse::says(need_sentence(&to_reveal(keywords, conversation, None, r))),
        Some((item, f)) if f >= params.theta_in && item.price > max => SeekerResponse::says(
            format!("{} is over my budget of ${max:.2}.", mention(item)),
        ),
        Some((item, f)) if f >= params.theta_interest => {
            let words = to_reveal(keywords, conversation, Some(item), r);
            SeekerResponse::says(format!(
                "I would like more information about {}. {}",
                mention(item),
                need_sentence(&words)
            ))
        }
        Some((item, _)) => {
            let words = to_reveal(keywords, conversation, Some(item), r);
            SeekerResponse::says(format!(
                "None of these fit my needs. {}",
                need_sentence(&words)
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::item;
    use crate::dialogue::Strategy;
    use crate::profiles::tests::profile;
    use crate::simulator::need_keywords;

    fn catalog() -> Catalog {
        let mut a = item("A", &["Clothing", "Tops"], 17.95);
        a.title = "Cotton Crew Top".into();
        a.description = "soft cotton".into();
        let mut b = item("B", &["Clothing", "Tops"], 21.99);
        b.title = "V Neck Tee".into();
        b.description = "soft breathable cotton relaxed".into();
        let mut c = item("C", &["Clothing", "Tops"], 12.0);
        c.title = "Plain Tank".into();
        c.description = "polyester".into();
        Catalog::new(vec![a, b, c]).unwrap()
    }

    fn seeker(o: Openness, s: DecisionStyle) -> (UserProfile, Vec<String>) {
        let mut p = profile("u", o, s);
        p.target_needs = "soft breathable cotton relaxed tee".into();
        let kw = need_keywords(&p, &[]);
        (p, kw)
    }

    fn probe() -> AgentTurn {
        AgentTurn::new("", Action::PreferenceProbing, "What fabric do you like?")
    }

    fn persuade(strategy: Strategy) -> AgentTurn {
        let mut t = AgentTurn::new("", Action::Persuasion, "Consider B");
        t.strategy = Some(strategy);
        t.candidate_item_id = Some("B".into());
        t.shown_item_ids = vec!["B".into()];
        t
    }

    #[test]
    fn opening_states_range() {
        let (mut p, kw) = seeker(Openness::Active, DecisionStyle::Rational);
        p.budget = crate::catalog::PriceRange::new(29.99, 31.92);
        let o = rule_open(&p, &kw);
        assert_eq!(o.utterance, "I want something soft. My expected price range is: [$29.99, $31.92].");
        assert!(!o.terminal);
    }

    #[test]
    fn passive_reveals_one_keyword() {
        let (p, kw) = seeker(Openness::Passive, DecisionStyle::Rational);
        let convo = vec![Turn::Seeker(rule_open(&p, &kw))];
        let r = rule_respond(&p, &kw, &catalog(), &convo, &probe(), &RuleParams::default());
        assert_eq!(r.utterance, "I prefer breathable.");
    }

    #[test]
    fn active_reveals_three_plus_cue() {
        let (p, kw) = seeker(Openness::Active, DecisionStyle::Dependent);
        let convo = vec![Turn::Seeker(rule_open(&p, &kw))];
        let r = rule_respond(&p, &kw, &catalog(), &convo, &probe(), &RuleParams::default());
        assert_eq!(
            r.utterance,
            "I prefer breathable, cotton and relaxed. I usually check what other buyers think before I buy."
        );
        let cue_words = text::keywords(&r.utterance, &[]);
        assert_eq!(cue_words, vec!["breathable", "cotton", "relaxed"]);
    }

    #[test]
    fn category_question_depth() {
        let (p, kw) = seeker(Openness::Neutral, DecisionStyle::Rational);
        let q = AgentTurn::new("", Action::CategoryNarrowing, "Which one: Shoes, Tops? Answer with 1 level.");
        let r = rule_respond(&p, &kw, &catalog(), &[], &q, &RuleParams::default());
        assert_eq!(r.utterance, "I need Clothing products");
        let q = AgentTurn::new("", Action::CategoryNarrowing, "Please answer with 2 levels of the path.");
        let r = rule_respond(&p, &kw, &catalog(), &[], &q, &RuleParams::default());
        assert_eq!(r.utterance, "I need Clothing > Tops products");
    }

    #[test]
    fn style_gates_out_of_budget_acceptance() {
        let cat = catalog();
        let params = RuleParams::default();
        let (p, kw) = seeker(Openness::Neutral, DecisionStyle::Rational);
        let r = rule_respond(&p, &kw, &cat, &[], &persuade(Strategy::SocialProof), &params);
        assert!(!r.terminal);
        assert!(r.utterance.contains("comparison of the details"));
        let (p, kw) = seeker(Openness::Neutral, DecisionStyle::Dependent);
        let r = rule_respond(&p, &kw, &cat, &[], &persuade(Strategy::SocialProof), &params);
        assert_eq!(r.accepted_item_id.as_deref(), Some("B"));
        assert!(r.terminal);
    }

    #[test]
    fn dependent_accepts_at_seventy_percent() {
        // B carries 4 of the 5 keywords: 0.8 >= 0.5
        let (mut p, _) = seeker(Openness::Neutral, DecisionStyle::Dependent);
        p.target_needs = "soft breathable cotton relaxed wool".into();
        let kw = need_keywords(&p, &[]);
        let cat = catalog();
        let f = keyword_fraction(&kw, cat.get("B").unwrap());
        assert_eq!(f, 0.8);
        let r = rule_respond(&p, &kw, &cat, &[], &persuade(Strategy::SocialProof), &RuleParams::default());
        assert!(r.terminal);
    }

    #[test]
    fn suggestion_accepts_first_fitting_in_budget_item() {
        let (p, kw) = seeker(Openness::Neutral, DecisionStyle::Rational);
        let mut s = AgentTurn::new("", Action::ItemSuggestion, "Here");
        s.shown_item_ids = vec!["C".into(), "A".into()];
        let params = RuleParams { theta_in: 0.4, ..RuleParams::default() };
        let r = rule_respond(&p, &kw, &catalog(), &[], &s, &params);
        assert_eq!(r.accepted_item_id.as_deref(), Some("A"));
        let r = rule_respond(&p, &kw, &catalog(), &[], &s, &RuleParams::default());
        assert!(!r.terminal);
        assert!(r.utterance.starts_with("I would like more information about <\"Cotton Crew Top\"> (A)."));
    }

    #[test]
    fn framing_needs_margin() {
        let cat = catalog();
        let (p, kw) = seeker(Openness::Neutral, DecisionStyle::Intuitive);
        // B carries all five keywords: 1.0 >= 0.5 + 0.2
        let r = rule_respond(&p, &kw, &cat, &[], &persuade(Strategy::Framing), &RuleParams::default());
        assert!(r.terminal);
        let strict = RuleParams { framing_margin: 0.6, ..RuleParams::default() };
        let r = rule_respond(&p, &kw, &cat, &[], &persuade(Strategy::Framing), &strict);
        assert!(!r.terminal);
        assert!(r.utterance.contains("feel right"));
    }
}
