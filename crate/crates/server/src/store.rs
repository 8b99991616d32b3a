//! Loaded packs and live sessions. Each session is a [`GameState`] in memory
//! backed by its event log on disk; the log is written before the in-memory
//! state moves.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{DateTime, Utc};
use inoculate_core::engine::{
    apply_action, new_session_with_id, replay_session, Action, FeedbackEvent, GameState,
};
use inoculate_core::pack::{default_pack, parse_pack, validate_pack, ScenarioPack};
use serde::Serialize;
use tokio::sync::Mutex;

use crate::error::ApiError;
use crate::logfile::{pack_hash, read_log, LogHeader, LogWriter};

#[derive(Debug, Clone, Serialize)]
pub struct PackInfo {
    pub pack_id: String,
    pub version: String,
    pub pack_hash: String,
    pub start_scene: String,
    pub scenes: usize,
    pub sim_presets: Vec<String>,
}

#[derive(Debug)]
pub struct LoadedPack {
    pub pack: ScenarioPack,
    pub hash: String,
}

/// Packs keyed by id. Only packs that validate without errors are admitted.
#[derive(Debug, Default)]
pub struct PackRegistry {
    packs: BTreeMap<String, Arc<LoadedPack>>,
}

impl PackRegistry {
    pub fn with_default() -> Self {
        let mut r = PackRegistry::default();
        r.insert(default_pack()).expect("default pack is playable");
        r
    }

    pub fn insert(&mut self, pack: ScenarioPack) -> anyhow::Result<()> {
        let report = validate_pack(&pack);
        if !report.is_playable() {
            let first = &report.errors[0];
            anyhow::bail!("pack `{}` has {} error(s), first: {first}", pack.pack_id, report.errors.len());
        }
        if self.packs.contains_key(&pack.pack_id) {
            anyhow::bail!("duplicate pack id `{}`", pack.pack_id);
        }
        let hash = pack_hash(&pack);
        self.packs.insert(pack.pack_id.clone(), Arc::new(LoadedPack { pack, hash }));
        Ok(())
    }

    /// Loads a pack file. A file whose id is `default` replaces the built-in.
    pub fn load_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let raw = std::fs::read(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let pack = parse_pack(&raw).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        if pack.pack_id == "default" {
            self.packs.remove("default");
        }
        self.insert(pack)
    }

    pub fn get(&self, pack_id: &str) -> Option<Arc<LoadedPack>> {
        self.packs.get(pack_id).cloned()
    }

    pub fn len(&self) -> usize {
        self.packs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packs.is_empty()
    }

    pub fn infos(&self) -> Vec<PackInfo> {
        self.packs
            .values()
            .map(|p| PackInfo {
                pack_id: p.pack.pack_id.clone(),
                version: p.pack.version.clone(),
                pack_hash: p.hash.clone(),
                start_scene: p.pack.start_scene.clone(),
                scenes: p.pack.scenes.len(),
                sim_presets: p.pack.sim_presets.iter().map(|s| s.name.clone()).collect(),
            })
            .collect()
    }
}

#[derive(Debug)]
pub struct Session {
    pub header: LogHeader,
    pub pack: Arc<LoadedPack>,
    pub state: GameState,
    log: LogWriter,
}

impl Session {
    /// Applies an action if `expected_ordinal` matches, appending the event
    /// to the log before updating the in-memory state.
    pub fn act(&mut self, expected_ordinal: u64, action: Action) -> Result<FeedbackEvent, ApiError> {
        let next = self.state.next_ordinal();
        if expected_ordinal != next {
            return Err(ApiError::new(
                axum::http::StatusCode::CONFLICT,
                "CONFLICT",
                format!("expected ordinal {expected_ordinal} but the session is at {next}"),
            )
            .with_field("expected_ordinal"));
        }
        let (state, feedback) = apply_action(&self.state, &self.pack.pack, action, now_ms())?;
        let event = state.event_log.last().expect("accepted action is logged");
        self.log.append(event).map_err(ApiError::internal)?;
        self.state = state;
        Ok(feedback)
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct RecoveryReport {
    pub restored: usize,
    pub truncated: Vec<String>,
    pub skipped: Vec<(String, String)>,
}

/// All sessions, one log file each under `dir`.
#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// Opens `dir` (created if missing) and rebuilds every session found in
    /// it by replaying its log.
    pub fn open(dir: &Path, packs: &PackRegistry) -> anyhow::Result<(Self, RecoveryReport)> {
        std::fs::create_dir_all(dir)?;
        let mut report = RecoveryReport::default();
        let mut sessions = HashMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "log"))
            .collect();
        paths.sort();
        for path in paths {
            let name = path.display().to_string();
            match restore(&path, packs) {
                Ok((session, torn)) => {
                    if torn {
                        tracing::warn!(file = %name, "dropped torn tail record");
                        report.truncated.push(name);
                    }
                    sessions.insert(session.header.session_id.clone(), Arc::new(Mutex::new(session)));
                    report.restored += 1;
                }
                Err(e) => {
                    tracing::warn!(file = %name, error = %e, "session not restored");
                    report.skipped.push((name, e.to_string()));
                }
            }
        }
        Ok((
            SessionStore {
                dir: dir.to_owned(),
                sessions: RwLock::new(sessions),
            },
            report,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, session_id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().unwrap().get(session_id).cloned()
    }

    pub fn create(&self, pack: Arc<LoadedPack>, seed: u64) -> Result<Arc<Mutex<Session>>, ApiError> {
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let state = new_session_with_id(&pack.pack, seed, session_id.clone())?;
        let created_at: DateTime<Utc> = Utc::now();
        let header = LogHeader::new(session_id.clone(), &pack.pack, seed, created_at);
        let path = self.dir.join(format!("{session_id}.log"));
        let log = LogWriter::create(&path, &header).map_err(ApiError::internal)?;
        let session = Arc::new(Mutex::new(Session {
            header,
            pack,
            state,
            log,
        }));
        self.sessions.write().unwrap().insert(session_id, session.clone());
        Ok(session)
    }
}

fn restore(path: &Path, packs: &PackRegistry) -> anyhow::Result<(Session, bool)> {
    let loaded = read_log(path)?;
    let header = loaded.header;
    let pack = packs
        .get(&header.pack_id)
        .ok_or_else(|| anyhow::anyhow!("pack `{}` is not loaded", header.pack_id))?;
    if pack.hash != header.pack_hash {
        anyhow::bail!("pack `{}` content differs from the one the log was written against", header.pack_id);
    }
    let state = replay_session(&pack.pack, header.seed, header.session_id.clone(), &loaded.events)?;
    let log = LogWriter::reopen(path, loaded.valid_len)?;
    Ok((
        Session {
            header,
            pack,
            state,
            log,
        },
        loaded.torn,
    ))
}
