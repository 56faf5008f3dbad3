//! In-memory sessions with optional file-backed persistence.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use conceptpref::envs::{EnvSpec, Environment};
use conceptpref::runner::{resume_session, start_session, Session, SessionConfig, SessionState};
use conceptpref::Result;

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct Store {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    envs: Mutex<HashMap<String, Arc<Environment>>>,
    persist_dir: Option<PathBuf>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Sessions are written to `dir` on every mutation and reloaded from it here.
    pub fn persistent(dir: impl Into<PathBuf>) -> Result<Self> {
        let store = Self { persist_dir: Some(dir.into()), ..Self::default() };
        let dir = store.persist_dir.clone().unwrap_or_default();
        std::fs::create_dir_all(&dir)?;
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else { continue };
            let state: SessionState = serde_json::from_slice(&std::fs::read(&path)?)?;
            let session = store.resume(state)?;
            store.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(store)
    }

    pub fn environment(&self, spec: &EnvSpec) -> Result<Arc<Environment>> {
        let key = serde_json::to_string(spec)?;
        if let Some(env) = self.envs.lock().unwrap().get(&key) {
            return Ok(Arc::clone(env));
        }
        let env = Arc::new(Environment::generate(spec)?);
        Ok(Arc::clone(self.envs.lock().unwrap().entry(key).or_insert(env)))
    }

    pub fn start(&self, cfg: SessionConfig, instruction: Option<String>) -> Result<Session> {
        start_session(cfg.clone(), self.environment(&cfg.env)?, instruction)
    }

    fn resume(&self, state: SessionState) -> Result<Session> {
        let env = self.environment(&state.config.env)?;
        resume_session(state, env)
    }

    pub fn insert(&self, id: String, session: Session) -> Result<SessionHandle> {
        self.save(&id, &session)?;
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().unwrap().insert(id, Arc::clone(&handle));
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the session through a temp file so a crash never leaves a torn file.
    pub fn save(&self, id: &str, session: &Session) -> Result<()> {
        let Some(dir) = &self.persist_dir else { return Ok(()) };
        write_atomic(&dir.join(format!("{id}.json")), &serde_json::to_vec(session.state())?)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
