use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DecisionStyle, Openness, UserProfile};

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Line<P> {
    schema_version: u32,
    #[serde(flatten)]
    profile: P,
}

pub fn save_profiles(path: &Path, profiles: &[UserProfile]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for p in profiles {
        let line = Line {
            schema_version: PROFILE_SCHEMA_VERSION,
            profile: p,
        };
        writeln!(w, "{}", serde_json::to_string(&line).map_err(std::io::Error::other)?)?;
    }
    w.flush()
}

pub fn load_profiles(path: &Path) -> Result<Vec<UserProfile>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (n, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line: Line<UserProfile> = serde_json::from_str(l)
            .map_err(|e| format!("{} line {}: {e}", path.display(), n + 1))?;
        if line.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(format!(
                "{} line {}: schema version {} (expected {PROFILE_SCHEMA_VERSION})",
                path.display(),
                n + 1,
                line.schema_version
            ));
        }
        line.profile
            .validate()
            .map_err(|e| format!("{} line {}: {e}", path.display(), n + 1))?;
        out.push(line.profile);
    }
    Ok(out)
}

enum Trait {
    Open(Openness),
    Style(DecisionStyle),
}

impl Trait {
    fn holds(&self, p: &UserProfile) -> bool {
        match self {
            Trait::Open(o) => p.dialogue_openness == *o,
            Trait::Style(s) => p.decision_style == *s,
        }
    }
}

/// Draws up to `per_trait` users for each openness value and then each
/// decision style. Every draw comes from users not yet chosen, so a user is
/// never picked twice. The input is sorted by id first, which makes the result
/// independent of input order.
pub fn sample_cohort(profiles: &[UserProfile], per_trait: usize, seed: u64) -> Vec<UserProfile> {
    assert!(per_trait >= 1, "per_trait must be at least 1");
    let mut pool: Vec<&UserProfile> = profiles.iter().collect();
    pool.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    pool.dedup_by(|a, b| a.user_id == b.user_id);
    let traits = Openness::ALL
        .into_iter()
        .map(Trait::Open)
        .chain(DecisionStyle::ALL.into_iter().map(Trait::Style));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    for t in traits {
        let mut candidates: Vec<&UserProfile> = pool
            .iter()
            .copied()
            .filter(|p| t.holds(p) && !chosen.contains(p.user_id.as_str()))
            .collect();
        candidates.shuffle(&mut rng);
        for p in candidates.into_iter().take(per_trait) {
            chosen.insert(&p.user_id);
            out.push(p.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::tests::profile;

    fn population(n: usize) -> Vec<UserProfile> {
        (0..n)
            .map(|i| {
                profile(
                    &format!("u{i:04}"),
                    Openness::ALL[i % 3],
                    DecisionStyle::ALL[(i / 3) % 3],
                )
            })
            .collect()
    }

    #[test]
    fn uniform_population_fills_every_openness() {
        let pop = population(600);
        let c = sample_cohort(&pop, 150, 7);
        for o in Openness::ALL {
            assert!(c.iter().filter(|p| p.dialogue_openness == o).count() >= 150);
        }
        for s in DecisionStyle::ALL {
            assert!(c.iter().filter(|p| p.decision_style == s).count() >= 150);
        }
        let ids: HashSet<_> = c.iter().map(|p| &p.user_id).collect();
        assert_eq!(ids.len(), c.len());
    }

    #[test]
    fn seeded_and_order_free() {
        let pop = population(60);
        let a = sample_cohort(&pop, 5, 42);
        let mut rev = pop.clone();
        rev.reverse();
        assert_eq!(a, sample_cohort(&rev, 5, 42));
        assert_ne!(a, sample_cohort(&pop, 5, 43));
    }

    #[test]
    fn small_population_covers_available_traits() {
        let pop = population(6);
        let c = sample_cohort(&pop, 1, 1);
        assert!(c.len() <= 6);
        for o in Openness::ALL {
            assert!(c.iter().any(|p| p.dialogue_openness == o));
        }
        assert_eq!(sample_cohort(&pop, 10, 1).len(), 6);
    }

    #[test]
    fn persistence_roundtrip_and_version_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        let pop = population(3);
        save_profiles(&p, &pop).unwrap();
        assert_eq!(load_profiles(&p).unwrap(), pop);
        let text = fs::read_to_string(&p).unwrap().replace("\"schema_version\":1", "\"schema_version\":9");
        fs::write(&p, text).unwrap();
        assert!(load_profiles(&p).unwrap_err().contains("schema version"));
    }
}
