//! Reference synthetic benchmark: a small clothing catalog, a cohort of
//! rule-mode seekers spread evenly over the six traits, a seed memory of
//! matched-strategy exemplars, and recorded fixtures for every run so the
//! whole suite replays offline with the scripted backend.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{ContextualProfile, Variant};
use crate::catalog::{write_snapshot, Item, PriceRange};
use crate::config::RunConfig;
use crate::dialogue::Strategy;
use crate::gateway::{write_fixtures, ChatBackend, FixtureRecord, RecordingBackend};
use crate::index::HashEmbedder;
use crate::memory::{MemoryStore, ValueMode};
use crate::pipeline::{run_with_backend, EvalSummary, PipelineError};
use crate::profiles::{save_profiles, DecisionStyle, Openness, UserProfile};
use crate::standin::{exemplar_sentence, StandInModel};
use crate::text;

pub const ITEMS: usize = 200;
pub const USERS: usize = 30;
pub const EXEMPLARS: usize = 50;
pub const SEED: u64 = 7;

const TAXONOMY: [(&str, [&str; 3], f64); 4] = [
    ("Tops", ["Tees", "Shirts", "Sweaters"], 18.0),
    ("Bottoms", ["Jeans", "Chinos", "Shorts"], 26.0),
    ("Outerwear", ["Jackets", "Coats", "Vests"], 45.0),
    ("Footwear", ["Sneakers", "Boots", "Sandals"], 38.0),
];

const MATERIALS: [&str; 8] = ["cotton", "linen", "wool", "denim", "fleece", "leather", "nylon", "canvas"];
const TRAITS: [&str; 12] = [
    "breathable", "stretchy", "lightweight", "warm", "slim", "relaxed", "durable", "soft",
    "cropped", "quilted", "ribbed", "washable",
];
const COLORS: [&str; 6] = ["black", "navy", "olive", "grey", "white", "burgundy"];
const PREMIUM: [&str; 6] = ["merino", "organic", "waterproof", "insulated", "handcrafted", "reinforced"];

/// One seed of the generator.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub items: Vec<Item>,
    pub profiles: Vec<UserProfile>,
    /// `(profile_text, strategy, utterance)` records for the memory file.
    pub exemplars: Vec<(String, Strategy, String)>,
}

fn item_id(rng: &mut ChaCha8Rng) -> String {
    const CHARS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ0123456789";
    let tail: String = (0..8).map(|_| *CHARS.choose(rng).unwrap() as char).collect();
    format!("B0{tail}")
}

fn title_case(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or(String::new(), |f| f.to_uppercase().collect::<String>() + c.as_str())
}

fn make_item(rng: &mut ChaCha8Rng, slot: usize) -> Item {
    let (root, leaves, base) = TAXONOMY[slot % 4];
    let leaf = leaves[(slot / 4) % 3];
    let material = *MATERIALS.choose(rng).unwrap();
    let traits: Vec<&str> = TRAITS.choose_multiple(rng, 3).copied().collect();
    let color = *COLORS.choose(rng).unwrap();
    let premium: Vec<&str> = if rng.random_bool(0.35) {
        let n = rng.random_range(1..=2);
        PREMIUM.choose_multiple(rng, n).copied().collect()
    } else {
        Vec::new()
    };
    let price = base * rng.random_range(0.8..1.25) + 22.0 * premium.len() as f64;
    let noun = leaf.trim_end_matches('s');
    let mut title = vec![title_case(color), title_case(material), title_case(traits[0])];
    title.extend(premium.iter().map(|p| title_case(p)));
    title.push(noun.to_string());
    let mut description = format!("A {} and {} {} in {material}.", traits[1], traits[2], noun.to_lowercase());
    if !premium.is_empty() {
        description.push_str(&format!(" Made {}.", text::join_words(&premium.iter().map(|p| p.to_string()).collect::<Vec<_>>())));
    }
    let mut features = vec![format!("{material} fabric"), format!("{color} colorway")];
    features.extend(premium.iter().map(|p| format!("{p} finish")));
    Item {
        id: item_id(rng),
        title: title.join(" "),
        description,
        features,
        price: (price * 100.0).round() / 100.0,
        category_path: vec![root.to_string(), leaf.to_string()],
        avg_rating: (rng.random_range(3.6..4.9_f64) * 10.0).round() / 10.0,
        rating_count: rng.random_range(20..6000),
        reviews: Vec::new(),
    }
}

pub fn catalog(seed: u64, n: usize) -> Vec<Item> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<Item> = (0..n).map(|i| make_item(&mut rng, i)).collect();
    items.sort_by(|a, b| a.id.cmp(&b.id));
    items.dedup_by(|a, b| a.id == b.id);
    items
}

/// Root category a seeker of this style tends to shop in; every fifth
/// seeker shops for footwear instead.
fn root_for(i: usize, style: DecisionStyle) -> &'static str {
    if i % 5 == 4 {
        return "Footwear";
    }
    match style {
        DecisionStyle::Rational => "Tops",
        DecisionStyle::Dependent => "Bottoms",
        DecisionStyle::Intuitive => "Outerwear",
    }
}

fn make_profile(rng: &mut ChaCha8Rng, items: &[Item], i: usize, prefix: &str) -> UserProfile {
    // each block of ten shifts the pairing, so thirty seekers give ten per
    // trait value and cover every openness and style combination
    let openness = Openness::ALL[i % 3];
    let style = DecisionStyle::ALL[(i % 3 + i / 10) % 3];
    let root = root_for(i, style);
    let leaves = TAXONOMY.iter().find(|t| t.0 == root).unwrap().1;
    let leaf = leaves[rng.random_range(0..3)];
    let mut pool: Vec<&Item> = items
        .iter()
        .filter(|it| it.category_path[1] == leaf && it.features.len() == 2)
        .collect();
    pool.shuffle(rng);
    let targets: Vec<&Item> = pool.into_iter().take(2).collect();
    let noun = leaf.trim_end_matches('s').to_lowercase();
    let words: Vec<String> = targets
        .iter()
        .flat_map(|t| text::keywords(&format!("{} {}", t.title, t.description), &[]))
        .filter(|w| *w != noun)
        .collect();
    let mut needs: Vec<String> = Vec::new();
    for w in words {
        if needs.len() == 5 {
            break;
        }
        if !needs.contains(&w) {
            needs.push(w);
        }
    }
    let (lo, hi) = targets.iter().fold((f64::MAX, 0.0_f64), |(lo, hi), t| (lo.min(t.price), hi.max(t.price)));
    UserProfile {
        user_id: format!("{prefix}{i:03}"),
        general_preference: format!("I generally prefer {} clothing.", needs.first().cloned().unwrap_or_default()),
        dialogue_openness: openness,
        decision_style: style,
        target_category_path: vec![root.to_string(), leaf.to_string()],
        target_needs: needs.join(" "),
        reason_to_purchase: format!("Looking for {} {}.", needs.join(", "), leaf.to_lowercase()),
        budget: PriceRange::new(lo, hi),
        target_item_ids: targets.iter().map(|t| t.id.clone()).collect(),
    }
}

pub fn cohort(seed: u64, items: &[Item], n: usize, prefix: &str) -> Vec<UserProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n).map(|i| make_profile(&mut rng, items, i, prefix)).collect()
}

fn matched(style: DecisionStyle) -> Strategy {
    match style {
        DecisionStyle::Rational => Strategy::LogicalAppeal,
        DecisionStyle::Dependent => Strategy::SocialProof,
        DecisionStyle::Intuitive => Strategy::EmotionalAppeal,
    }
}

/// Persuasions that worked on other seekers drawn from a different seed,
/// keyed the way the agent describes a seeker.
pub fn exemplars(seed: u64, items: &[Item], n: usize) -> Vec<(String, Strategy, String)> {
    let others = cohort(seed.wrapping_add(1000), items, n * 2, "m");
    others
        .iter()
        .filter_map(|p| {
            let needs = text::keywords(&p.target_needs, &[]);
            let selected = items.iter().find(|i| i.id == p.target_item_ids[0])?;
            let candidate = items
                .iter()
                .filter(|i| i.category_path == p.target_category_path && i.price > p.budget.max)
                .max_by_key(|i| needs.iter().filter(|w| crate::simulator::item_words(i).contains(w)).count())?;
            let strategy = matched(p.decision_style);
            let profile = ContextualProfile {
                preference: needs.join(", "),
                category_path: p.target_category_path.clone(),
                ..Default::default()
            };
            let utterance = exemplar_sentence(strategy, &needs, selected, candidate);
            Some((profile.memory_text(), strategy, utterance))
        })
        .take(n)
        .collect()
}

pub fn generate(seed: u64) -> Benchmark {
    let items = catalog(seed, ITEMS);
    let profiles = cohort(seed, &items, USERS, "u");
    let exemplars = exemplars(seed, &items, EXEMPLARS);
    Benchmark {
        items,
        profiles,
        exemplars,
    }
}

/// Runs the suite compares: the three variants without memory and CSI
/// with offline utterance memory.
pub const RUNS: [(&str, Variant, bool); 4] = [
    ("csi", Variant::Csi, false),
    ("csi-no-profile", Variant::CsiNoProfile, false),
    ("chatcrs", Variant::ChatCrs, false),
    ("csi-memory", Variant::Csi, true),
];

fn config_text(seed: u64, name: &str, variant: Variant, memory: bool) -> String {
    let mut s = format!(
        "domain = \"clothing\"\nseed = {seed}\nrun_name = \"{name}\"\nvariant = \"{}\"\n\n\
         [paths]\ncatalog = \"catalog.json\"\nprofiles = \"profiles.jsonl\"\nfixtures = \"fixtures.jsonl\"\nout = \"runs/{name}\"\n",
        variant.name()
    );
    if memory {
        s.push_str("\n[memory]\nmode = \"offline\"\nvalue = \"utterance\"\npath = \"memory.jsonl\"\n");
    }
    s
}

/// Seeker lines for the chat demo: the opening, every need at once, the
/// category, and a purchase of the first target item.
pub fn demo_script(p: &UserProfile) -> String {
    let needs = text::keywords(&p.target_needs, &[]);
    format!(
        "I want something {}. My expected price range is: {}.\nI prefer {}.\nI need {} products\nSTOP {}\n",
        needs.first().map_or("new", String::as_str),
        p.budget.display_dollars(),
        text::join_words(&needs),
        p.target_category_path.join(" > "),
        p.target_item_ids[0]
    )
}

#[derive(Debug, Clone)]
pub struct BenchFiles {
    pub dir: PathBuf,
    /// `(run name, config path)` in [`RUNS`] order.
    pub configs: Vec<(String, PathBuf)>,
    pub fixtures: PathBuf,
}

/// Writes the benchmark into `dir`: catalog snapshot, profiles, memory,
/// one config per run, and fixtures recorded from the stand-in model.
pub fn write_benchmark(dir: &Path, seed: u64) -> Result<BenchFiles, PipelineError> {
    fs::create_dir_all(dir)?;
    let b = generate(seed);
    write_snapshot(&dir.join("catalog.json"), &b.items, &[], None)?;
    save_profiles(&dir.join("profiles.jsonl"), &b.profiles)?;
    let memory = MemoryStore::online(Arc::new(HashEmbedder::default()), ValueMode::Utterance);
    for (i, (profile_text, strategy, utterance)) in b.exemplars.iter().enumerate() {
        memory.insert(profile_text, *strategy, Some(utterance), &format!("seed:m{i:03}"))?;
    }
    memory.save(&dir.join("memory.jsonl"))?;

    let mut configs = Vec::new();
    let mut records: Vec<FixtureRecord> = Vec::new();
    for (name, variant, with_memory) in RUNS {
        let path = dir.join(format!("{name}.toml"));
        fs::write(&path, config_text(seed, name, variant, with_memory))?;
        let cfg = RunConfig::load(&path)?;
        let recorder = Arc::new(RecordingBackend::new(StandInModel));
        let backend: Arc<dyn ChatBackend> = recorder.clone();
        run_with_backend(&cfg, backend)?;
        records.extend(recorder.records());
        configs.push((name.to_string(), path));
    }
    // a short scripted chat against the CSI config, replayable with `chat`
    let demo = demo_script(&b.profiles[0]);
    fs::write(dir.join("chat-demo.txt"), &demo)?;
    let cfg = RunConfig::load(&configs[0].1)?;
    let recorder = Arc::new(RecordingBackend::new(StandInModel));
    let backend: Arc<dyn ChatBackend> = recorder.clone();
    crate::pipeline::cmd_chat(&cfg, backend, None, &mut demo.as_bytes(), &mut std::io::sink())?;
    records.extend(recorder.records());

    let fixtures = dir.join("fixtures.jsonl");
    write_fixtures(&fixtures, &records)?;
    // the recording runs wrote reports too; replays overwrite them
    let _ = fs::remove_dir_all(dir.join("runs"));
    Ok(BenchFiles {
        dir: dir.to_path_buf(),
        configs,
        fixtures,
    })
}

/// Replays every run of a written benchmark from its fixtures.
pub fn replay(files: &BenchFiles) -> Result<Vec<(String, EvalSummary)>, PipelineError> {
    files
        .configs
        .iter()
        .map(|(name, path)| {
            let cfg = RunConfig::load(path)?;
            Ok((name.clone(), crate::pipeline::cmd_eval(&cfg)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_seeded() {
        let a = generate(SEED);
        let b = generate(SEED);
        assert_eq!(a.items, b.items);
        assert_eq!(a.profiles, b.profiles);
        assert_eq!(a.items.len(), ITEMS);
        assert_eq!(a.profiles.len(), USERS);
        assert_ne!(catalog(SEED + 1, 10), catalog(SEED, 10));
    }

    #[test]
    fn cohort_is_uniform_and_valid() {
        let b = generate(SEED);
        for o in Openness::ALL {
            assert_eq!(b.profiles.iter().filter(|p| p.dialogue_openness == o).count(), 10);
        }
        for s in DecisionStyle::ALL {
            assert_eq!(b.profiles.iter().filter(|p| p.decision_style == s).count(), 10);
        }
        for p in &b.profiles {
            p.validate().unwrap();
            assert!(text::keywords(&p.target_needs, &[]).len() >= 4, "{}", p.target_needs);
        }
    }

    #[test]
    fn exemplars_use_matched_strategies() {
        let b = generate(SEED);
        assert_eq!(b.exemplars.len(), EXEMPLARS);
        assert!(b.exemplars.iter().all(|e| e.0.starts_with("Preference: ") && e.1 != Strategy::Framing));
    }
}
