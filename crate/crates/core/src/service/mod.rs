//! HTTP JSON API for live debates.
//!
//! | method | path                        | success |
//! |--------|-----------------------------|---------|
//! | POST   | `/api/debates`              | 201     |
//! | GET    | `/api/debates/{id}`         | 200     |
//! | POST   | `/api/debates/{id}/turns`   | 200     |
//! | POST   | `/api/debates/{id}/rating`  | 204     |
//! | GET    | `/api/health`               | 200     |
//!
//! Sessions live in memory. Every change to a transcript is appended to
//! `transcripts.jsonl` in the data directory before the response goes out,
//! and the log is replayed on startup. Ratings go to `ratings.csv`.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{Mutex, RwLock};

use crate::generation::{BackendSpec, GenerationError, GeneratorBackend};
use crate::orchestrator::DebateTranscript;

mod api;

pub use api::router;

pub const TRANSCRIPT_LOG: &str = "transcripts.jsonl";
pub const RATINGS_FILE: &str = "ratings.csv";
pub const MAX_TURNS_LIMIT: usize = 15;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("backend {name}: {source}")]
    Backend { name: String, source: GenerationError },
    #[error("transcript log line {line}: {source}")]
    Log { line: usize, source: serde_json::Error },
}

/// ```toml
/// port = 8080
/// data_dir = "data"
/// default_backend = "ngram"
///
/// [backends.ngram]
/// kind = "ngram"
/// path = "model.json"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Backend used when a request names none; the first registered one otherwise.
    #[serde(default)]
    pub default_backend: Option<String>,
    /// Allowed CORS origin; any origin when unset.
    #[serde(default)]
    pub cors_origin: Option<String>,
    #[serde(default)]
    pub backends: BTreeMap<String, BackendSpec>,
}

fn default_port() -> u16 {
    8080
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: default_port(),
            data_dir: default_data_dir(),
            default_backend: None,
            cors_origin: None,
            backends: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

pub(crate) type Session = Arc<Mutex<DebateTranscript>>;

/// Shared server state: registered backends and live sessions.
pub struct AppState {
    backends: HashMap<String, Arc<dyn GeneratorBackend>>,
    default_backend: String,
    sessions: RwLock<HashMap<String, Session>>,
    log: StdMutex<File>,
    ratings_path: PathBuf,
    ratings_lock: StdMutex<()>,
    cors_origin: Option<String>,
}

impl AppState {
    /// Builds every configured backend and replays the transcript log.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let mut backends = HashMap::new();
        for (name, spec) in &config.backends {
            let b = spec.build().map_err(|source| ServiceError::Backend { name: name.clone(), source })?;
            backends.insert(name.clone(), b);
        }
        let default = match &config.default_backend {
            Some(d) => d.clone(),
            None => config.backends.keys().next().cloned().unwrap_or_default(),
        };
        let mut state = Self::new(&config.data_dir, backends, &default)?;
        state.cors_origin = config.cors_origin.clone();
        Ok(state)
    }

    pub fn new(
        data_dir: &Path,
        backends: HashMap<String, Arc<dyn GeneratorBackend>>,
        default_backend: &str,
    ) -> Result<Self, ServiceError> {
        if backends.is_empty() {
            return Err(ServiceError::Config("no backends registered".into()));
        }
        if !backends.contains_key(default_backend) {
            return Err(ServiceError::Config(format!("default backend {default_backend:?} is not registered")));
        }
        fs::create_dir_all(data_dir)?;
        let log_path = data_dir.join(TRANSCRIPT_LOG);
        let sessions = replay_log(&log_path)?
            .into_iter()
            .map(|(id, t)| (id, Arc::new(Mutex::new(t))))
            .collect();
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok(AppState {
            backends,
            default_backend: default_backend.to_string(),
            sessions: RwLock::new(sessions),
            log: StdMutex::new(log),
            ratings_path: data_dir.join(RATINGS_FILE),
            ratings_lock: StdMutex::new(()),
            cors_origin: None,
        })
    }

    pub fn backend_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.backends.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    pub fn ratings_path(&self) -> &Path {
        &self.ratings_path
    }

    pub async fn debate(&self, id: &str) -> Option<DebateTranscript> {
        let session = self.sessions.read().await.get(id).cloned()?;
        let t = session.lock().await.clone();
        Some(t)
    }

    pub async fn debate_count(&self) -> usize {
        self.sessions.read().await.len()
    }

    pub(crate) fn backend(&self, name: Option<&str>) -> Option<(String, Arc<dyn GeneratorBackend>)> {
        let name = name.unwrap_or(&self.default_backend);
        self.backends.get(name).map(|b| (name.to_string(), Arc::clone(b)))
    }

    pub(crate) async fn session(&self, id: &str) -> Option<Session> {
        self.sessions.read().await.get(id).cloned()
    }

    pub(crate) async fn insert(&self, t: DebateTranscript) -> std::io::Result<()> {
        self.append_log(&t)?;
        self.sessions.write().await.insert(t.debate_id.clone(), Arc::new(Mutex::new(t)));
        Ok(())
    }

    pub(crate) fn append_log(&self, t: &DebateTranscript) -> std::io::Result<()> {
        let mut line = t.to_json();
        line.push('\n');
        let mut log = self.log.lock().unwrap_or_else(|p| p.into_inner());
        log.write_all(line.as_bytes())?;
        log.flush()
    }
}

/// Latest snapshot of every debate in the log. A torn final line (crash
/// mid-write) is ignored and cut off so that later appends start clean.
fn replay_log(path: &Path) -> Result<HashMap<String, DebateTranscript>, ServiceError> {
    let mut out = HashMap::new();
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    let mut complete = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let torn = !line.ends_with('\n');
        if !line.trim().is_empty() {
            match serde_json::from_str::<DebateTranscript>(line) {
                Ok(t) => {
                    out.insert(t.debate_id.clone(), t);
                }
                Err(_) if torn => break,
                Err(source) => return Err(ServiceError::Log { line: i + 1, source }),
            }
        }
        complete += line.len();
    }
    if complete < text.len() {
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    } else if !text.is_empty() && !text.ends_with('\n') {
        OpenOptions::new().append(true).open(path)?.write_all(b"\n")?;
    }
    Ok(out)
}

/// Binds `0.0.0.0:<port>` and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(&config)?);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", config.port)).await?;
    axum::serve(listener, router(state)).await?;
    Ok(())
}
