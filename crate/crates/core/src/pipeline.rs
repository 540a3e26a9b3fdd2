//! The commands behind the CLI: ingest, profiles, eval and chat.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::agent::{Agent, Toolbox, Variant};
use crate::catalog::{
    build_histories, ingest, k_core_filter, read_snapshot, write_snapshot, Catalog, CatalogError,
    IngestStats, Interaction, Item, PriceRange, SkippedUser,
};
use crate::config::{BackendKind, ConfigError, EmbedderKind, MemoryMode, RunConfig, SimulatorKind};
use crate::dialogue::{mention, SeekerResponse, Turn};
use crate::eval::{
    build_report, classify, run_eval, write_report, EvalError, EvalSetup, Outcome, Report, RunMeta,
    SeekerSetting, Transcript,
};
use crate::gateway::{
    ChatBackend, Gateway, GatewayError, LiveBackend, LiveSettings, NullBackend, ScriptedBackend,
};
use crate::index::{read_index, write_index, Embedder, HashEmbedder, HttpEmbedder, IndexError, VectorIndex};
use crate::memory::{MemoryError, MemoryStore};
use crate::profiles::{build_profiles, load_profiles, sample_cohort, save_profiles, ProfileBuilder, ProfileError, UserProfile};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("profile building stopped: {0}")]
    Profiles(#[from] ProfileError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl PipelineError {
    /// 2 for usage and configuration problems, 1 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) | PipelineError::MissingInput(_) => 2,
            PipelineError::Catalog(CatalogError::Io { source, .. })
                if source.kind() == io::ErrorKind::NotFound =>
            {
                2
            }
            _ => 1,
        }
    }
}

fn existing(cfg: &RunConfig, p: &Path) -> Result<PathBuf, PipelineError> {
    let path = cfg.resolve(p);
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingInput(path))
    }
}

pub fn make_embedder(cfg: &RunConfig) -> Arc<dyn Embedder> {
    let e = &cfg.embedder;
    match e.kind {
        EmbedderKind::Hash => Arc::new(HashEmbedder::new(e.dim.max(1))),
        EmbedderKind::Http => {
            let key = std::env::var(&cfg.gateway.api_key_env).ok();
            Arc::new(HttpEmbedder::new(&e.base_url, &e.model, key, e.dim))
        }
    }
}

/// The chat backend the config asks for. Live needs its API key in the
/// configured environment variable; scripted needs the fixture file.
pub fn make_backend(cfg: &RunConfig) -> Result<Arc<dyn ChatBackend>, PipelineError> {
    let g = &cfg.gateway;
    Ok(match g.backend {
        BackendKind::Null => Arc::new(NullBackend),
        BackendKind::Scripted => {
            let p = cfg
                .paths
                .fixtures
                .as_ref()
                .ok_or_else(|| PipelineError::Usage("scripted backend needs paths.fixtures".into()))?;
            Arc::new(ScriptedBackend::from_file(&existing(cfg, p)?)?)
        }
        BackendKind::Live => {
            let key = std::env::var(&g.api_key_env).ok().filter(|k| !k.trim().is_empty());
            let Some(key) = key else {
                return Err(PipelineError::Usage(format!(
                    "live backend needs an API key in ${}",
                    g.api_key_env
                )));
            };
            Arc::new(LiveBackend::new(LiveSettings {
                base_url: g.base_url.clone(),
                model: g.model.clone(),
                api_key: Some(key),
                requests_per_minute: g.requests_per_minute,
                timeout_secs: g.timeout_secs,
            }))
        }
    })
}

pub fn make_gateway(cfg: &RunConfig, backend: Arc<dyn ChatBackend>) -> Gateway {
    let mut gw = Gateway::new(backend);
    gw.temperature = cfg.gateway.temperature;
    gw.max_tokens = cfg.gateway.max_tokens;
    gw.json_retries = cfg.gateway.json_retries;
    gw
}

// ---- ingest ----

#[derive(Debug, Clone)]
pub struct IngestSummary {
    pub stats: IngestStats,
    pub snapshot: PathBuf,
    pub index: Option<PathBuf>,
}

/// Raw corpora to a k-core filtered catalog snapshot, plus the item index
/// when `paths.index` is set.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary, PipelineError> {
    let need = |p: &Option<PathBuf>, name: &str| -> Result<PathBuf, PipelineError> {
        let p = p
            .as_ref()
            .ok_or_else(|| PipelineError::Usage(format!("ingest needs paths.{name}")))?;
        existing(cfg, p)
    };
    let reviews = need(&cfg.paths.raw_reviews, "raw_reviews")?;
    let metadata = need(&cfg.paths.raw_metadata, "raw_metadata")?;
    let raw = ingest(&reviews, &metadata, &cfg.ingest.fields, cfg.ingest.max_malformed_fraction)?;
    let kept: Vec<Interaction> = k_core_filter(&raw.interactions, cfg.ingest.k_core);
    let used: HashSet<&str> = kept.iter().map(|x| x.item_id.as_str()).collect();
    let items: Vec<Item> = raw.items.iter().filter(|i| used.contains(i.id.as_str())).cloned().collect();
    let mut stats = raw.stats.clone();
    stats.core_items = items.len();
    stats.core_interactions = kept.len();
    let snapshot = cfg.resolve(&cfg.paths.catalog);
    if let Some(dir) = snapshot.parent() {
        fs::create_dir_all(dir)?;
    }
    write_snapshot(&snapshot, &items, &kept, Some(&stats))?;
    let index = match &cfg.paths.index {
        Some(p) => {
            let path = cfg.resolve(p);
            let catalog = Catalog::new(items)?;
            write_index(&path, &VectorIndex::from_catalog(&catalog, make_embedder(cfg).as_ref())?)?;
            Some(path)
        }
        None => None,
    };
    Ok(IngestSummary { stats, snapshot, index })
}

// ---- profiles ----

#[derive(Debug, Clone)]
pub struct ProfilesSummary {
    pub built: usize,
    pub written: usize,
    pub skipped: Vec<SkippedUser>,
    pub path: PathBuf,
}

fn skip_log_path(profiles: &Path) -> PathBuf {
    let mut name = profiles.file_stem().unwrap_or_default().to_os_string();
    name.push(".skipped.jsonl");
    profiles.with_file_name(name)
}

/// Profiles for every user with a usable history. On a fatal gateway error
/// the profiles built so far are still written before the error returns.
pub fn cmd_profiles(cfg: &RunConfig) -> Result<ProfilesSummary, PipelineError> {
    let (items, interactions) = read_snapshot(&existing(cfg, &cfg.paths.catalog)?)?;
    let catalog = Catalog::new(items)?;
    let (histories, mut skipped) = build_histories(&catalog, &interactions);
    let gateway = make_gateway(cfg, make_backend(cfg)?);
    let builder = ProfileBuilder::new(gateway);
    let (profiles, more_skipped, fatal) = build_profiles(&builder, &histories, cfg.workers);
    skipped.extend(more_skipped);
    let built = profiles.len();
    let profiles = match cfg.profiles.sample_per_trait {
        Some(n) if n > 0 => sample_cohort(&profiles, n, cfg.seed),
        _ => profiles,
    };
    let path = cfg.resolve(&cfg.paths.profiles);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    save_profiles(&path, &profiles)?;
    let mut log = String::new();
    for s in &skipped {
        log.push_str(&serde_json::to_string(s).expect("skip records serialize"));
        log.push('\n');
    }
    fs::write(skip_log_path(&path), log)?;
    if let Some(e) = fatal {
        return Err(e.into());
    }
    Ok(ProfilesSummary {
        built,
        written: profiles.len(),
        skipped,
        path,
    })
}

// ---- eval ----

/// Catalog, category tree and index for a run.
pub struct World {
    pub catalog: Catalog,
    pub tree: crate::catalog::CategoryTree,
    pub index: VectorIndex,
    pub embedder: Arc<dyn Embedder>,
}

impl World {
    pub fn load(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let (items, _) = read_snapshot(&existing(cfg, &cfg.paths.catalog)?)?;
        let catalog = Catalog::new(items)?;
        let embedder = make_embedder(cfg);
        let index = match &cfg.paths.index {
            Some(p) if cfg.resolve(p).exists() => {
                let index = read_index(&cfg.resolve(p))?;
                if index.len() != catalog.len() || index.dim() != embedder.dim() {
                    return Err(PipelineError::Data(format!(
                        "index {} does not match the catalog ({} vectors of dim {}, expected {} of dim {})",
                        p.display(),
                        index.len(),
                        index.dim(),
                        catalog.len(),
                        embedder.dim()
                    )));
                }
                index
            }
            _ => VectorIndex::from_catalog(&catalog, embedder.as_ref())?,
        };
        Ok(Self {
            tree: catalog.tree(),
            catalog,
            index,
            embedder,
        })
    }

    pub fn tools(&self) -> Toolbox<'_> {
        Toolbox {
            catalog: &self.catalog,
            index: &self.index,
            embedder: self.embedder.as_ref(),
            tree: &self.tree,
        }
    }
}

pub fn make_memory(cfg: &RunConfig, embedder: Arc<dyn Embedder>) -> Result<Option<MemoryStore>, PipelineError> {
    let m = &cfg.memory;
    Ok(match m.mode {
        MemoryMode::Off => None,
        MemoryMode::Offline => {
            let p = m.path.as_ref().expect("checked at load");
            Some(MemoryStore::offline(embedder, m.value, &existing(cfg, p)?)?)
        }
        MemoryMode::Online => {
            let mut store = MemoryStore::online(embedder, m.value);
            if let Some(p) = &m.path {
                store.preload(&existing(cfg, p)?)?;
            }
            Some(store)
        }
    })
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub report: Report,
    pub files: Vec<PathBuf>,
    pub transcripts: Vec<Transcript>,
}

/// A full evaluation run with the given chat backend, writing the report
/// files into `paths.out`.
pub fn run_with_backend(cfg: &RunConfig, backend: Arc<dyn ChatBackend>) -> Result<EvalSummary, PipelineError> {
    let world = World::load(cfg)?;
    let profiles: Vec<UserProfile> =
        load_profiles(&existing(cfg, &cfg.paths.profiles)?).map_err(PipelineError::Data)?;
    let deterministic = backend.deterministic();
    let gateway = make_gateway(cfg, backend);
    let memory = make_memory(cfg, Arc::clone(&world.embedder))?;
    let config_hash = cfg.hash();
    let setup = EvalSetup {
        tools: world.tools(),
        gateway,
        variant: cfg.variant,
        agent: cfg.agent.clone(),
        seeker: match cfg.simulator.mode {
            SimulatorKind::Rule => SeekerSetting::Rule(cfg.simulator.rule.clone()),
            SimulatorKind::Llm => SeekerSetting::Llm,
        },
        memory: memory.as_ref(),
        max_turns: cfg.max_turns,
        workers: cfg.workers,
        memory_sync_every: cfg.memory.sync_every,
        run_label: cfg.run_label(),
        config_hash: config_hash.clone(),
    };
    let transcripts = run_eval(&setup, &profiles)?;
    let report = build_report(cfg.variant.name(), &transcripts);
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_hash,
        deterministic,
        max_turns: cfg.max_turns,
        memory_k: cfg.agent.memory_k,
        episodes: report.episodes,
        errored: report.errored,
        config: cfg.to_json(),
    };
    let out = cfg.resolve(&cfg.paths.out);
    let mut files = write_report(&out, std::slice::from_ref(&report), &transcripts, &meta)?;
    if let Some(m) = memory.as_ref().filter(|m| !m.is_frozen()) {
        let p = out.join("memory.jsonl");
        m.save(&p)?;
        files.push(p);
    }
    Ok(EvalSummary {
        report,
        files,
        transcripts,
    })
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalSummary, PipelineError> {
    run_with_backend(cfg, make_backend(cfg)?)
}

// ---- chat ----

/// Interactive session with a human in the seeker role. Each line typed is
/// one seeker turn; `STOP <item id>` buys the item and end of input leaves
/// without buying. The transcript is saved under `paths.out` and returned.
pub fn cmd_chat(
    cfg: &RunConfig,
    backend: Arc<dyn ChatBackend>,
    budget: Option<PriceRange>,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> Result<Transcript, PipelineError> {
    let world = World::load(cfg)?;
    let memory = make_memory(cfg, Arc::clone(&world.embedder))?;
    let episode_id = format!("{}:chat", cfg.run_label());
    let mut agent = Agent::new(
        cfg.variant,
        world.tools(),
        make_gateway(cfg, backend),
        &episode_id,
        cfg.agent.clone(),
        memory.as_ref(),
    );
    let mut t = Transcript {
        episode_id,
        user_id: "human".into(),
        agent_variant: cfg.variant.name().to_string(),
        seeker_openness: None,
        seeker_style: None,
        turns: Vec::new(),
        outcome: Outcome::NoPurchase,
        accepted_item_id: None,
        turn_count: 0,
        error: None,
        config_hash: cfg.hash(),
    };
    writeln!(output, "You are the seeker. Type STOP <item id> to buy, or end input to leave.")?;
    loop {
        write!(output, "seeker> ")?;
        output.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(output)?;
            break;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix("STOP").map(str::trim) {
            match world.catalog.get(id) {
                Some(item) => {
                    let said = format!("I have decided to purchase {}.", mention(item));
                    t.turns.push(Turn::Seeker(SeekerResponse::accepts(said, &item.id)));
                    t.accepted_item_id = Some(item.id.clone());
                    let budget = budget.or_else(|| crate::agent::tools::extract_price_range(&t.turns));
                    t.outcome = match budget {
                        Some(b) => classify(item.price, &b),
                        None => Outcome::AcceptedInBudget,
                    };
                    writeln!(output, "Purchased {} ({:?}).", mention(item), t.outcome)?;
                    break;
                }
                None => {
                    writeln!(output, "No item with id {id:?}; keep chatting or try again.")?;
                    continue;
                }
            }
        }
        t.turns.push(Turn::Seeker(SeekerResponse::says(line)));
        if t.turn_count >= cfg.max_turns {
            writeln!(output, "Turn limit reached.")?;
            break;
        }
        match agent.next_turn(&t.turns) {
            Ok((turn, _)) => {
                let label = match turn.strategy {
                    Some(s) => format!("{} | {}", turn.action.label(), s.label()),
                    None => turn.action.label().to_string(),
                };
                writeln!(output, "[{label}] {}", turn.utterance)?;
                t.turns.push(Turn::Recommender(turn));
                t.turn_count += 1;
            }
            Err(e) => {
                writeln!(output, "The recommender failed: {e}. Ending the session.")?;
                t.error = Some(e.to_string());
                break;
            }
        }
    }
    let out = cfg.resolve(&cfg.paths.out);
    fs::create_dir_all(&out)?;
    let mut text = serde_json::to_string(&t).expect("transcripts serialize");
    text.push('\n');
    fs::write(out.join("chat-transcript.jsonl"), text)?;
    Ok(t)
}

/// Parses `MIN,MAX`.
pub fn parse_budget(s: &str) -> Option<PriceRange> {
    let (a, b) = s.split_once(',')?;
    let a: f64 = a.trim().trim_start_matches('$').parse().ok()?;
    let b: f64 = b.trim().trim_start_matches('$').parse().ok()?;
    (a.is_finite() && b.is_finite() && a <= b).then(|| PriceRange::new(a, b))
}

pub fn variant_arg(s: &str) -> Result<Variant, PipelineError> {
    Variant::parse(s).ok_or_else(|| {
        PipelineError::Usage(format!("unknown variant {s:?}; expected csi, csi-no-profile or chatcrs"))
    })
}
