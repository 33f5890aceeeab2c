//! Local HTTP API over the notebooks below one root directory.
//!
//! Every request names its notebook with `?nb=<path relative to the root>`.
//! Responses carrying notebook state include its SHA-256 as `hash` and as the
//! `ETag` header. Mutations accept `If-Match`; without it the hash this
//! service last saw for the file is used, so edits made elsewhere since the
//! last read are refused with 409 instead of being overwritten.

mod api;
mod error;
mod paths;

use std::collections::HashMap;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::http::{header, HeaderValue, Method};
use axum::Router;
use modelcard_core::card::{load_template, CONFIG_FILE_NAME};
use modelcard_core::codeview::KB_FILE_NAME;
use modelcard_core::notebook::content_hash;
use modelcard_core::{parse_notebook, serialize_notebook, CardTemplate, KnowledgeBase, Notebook};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    pub notebook_root: PathBuf,
    /// Directory of built panel assets served under `/panel/`.
    pub panel_dir: Option<PathBuf>,
    /// Template config used when the root has no `modelcard.config.json`.
    pub config_path: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("notebook root {path}: {source}")]
    Root { path: PathBuf, source: std::io::Error },
    #[error("panel directory {0} does not exist")]
    PanelDir(PathBuf),
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

struct Inner {
    root: PathBuf,
    config_path: Option<PathBuf>,
    locks: Mutex<HashMap<PathBuf, Arc<tokio::sync::Mutex<()>>>>,
    seen: Mutex<HashMap<PathBuf, String>>,
}

pub(crate) struct Loaded {
    pub notebook: Notebook,
    pub hash: String,
}

impl AppState {
    pub fn new(options: &ServiceOptions) -> Result<Self, ServiceError> {
        let root = options
            .notebook_root
            .canonicalize()
            .map_err(|source| ServiceError::Root { path: options.notebook_root.clone(), source })?;
        Ok(AppState(Arc::new(Inner {
            root,
            config_path: options.config_path.clone(),
            locks: Mutex::default(),
            seen: Mutex::default(),
        })))
    }

    pub fn root(&self) -> &Path {
        &self.0.root
    }

    pub(crate) fn template(&self) -> Result<CardTemplate, ApiError> {
        let local = self.0.root.join(CONFIG_FILE_NAME);
        let path = if local.is_file() { Some(local) } else { self.0.config_path.clone() };
        let bytes = match &path {
            Some(p) => {
                Some(std::fs::read(p).map_err(|e| ApiError::internal("config", format!("{}: {e}", p.display())))?)
            }
            None => None,
        };
        load_template(bytes.as_deref()).map_err(|e| ApiError::internal("config_schema", e.to_string()))
    }

    pub(crate) fn knowledge_base(&self) -> Result<KnowledgeBase, ApiError> {
        let path = self.0.root.join(KB_FILE_NAME);
        if !path.is_file() {
            return Ok(KnowledgeBase::default_kb());
        }
        let bytes = std::fs::read(&path)?;
        KnowledgeBase::from_json(&bytes).map_err(|e| ApiError::internal("knowledge_base", e.to_string()))
    }

    pub(crate) fn resolve(&self, raw: &str) -> Result<PathBuf, ApiError> {
        paths::resolve_existing(&self.0.root, raw)
    }

    pub(crate) fn resolve_output(&self, raw: &str) -> Result<PathBuf, ApiError> {
        paths::resolve_new(&self.0.root, raw)
    }

    fn lock_for(&self, path: &Path) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.0.locks.lock().expect("lock table");
        locks.entry(path.to_owned()).or_default().clone()
    }

    fn remember(&self, path: &Path, hash: &str) {
        self.0.seen.lock().expect("hash table").insert(path.to_owned(), hash.to_owned());
    }

    fn last_seen(&self, path: &Path) -> Option<String> {
        self.0.seen.lock().expect("hash table").get(path).cloned()
    }

    fn read(path: &Path) -> Result<(Notebook, String), ApiError> {
        let bytes = std::fs::read(path)?;
        let hash = content_hash(&bytes);
        let nb = parse_notebook(&bytes).map_err(|e| ApiError::unprocessable("invalid_notebook", e.to_string()))?;
        Ok((nb, hash))
    }

    pub(crate) fn load(&self, raw: &str) -> Result<Loaded, ApiError> {
        let path = self.resolve(raw)?;
        let (notebook, hash) = Self::read(&path)?;
        self.remember(&path, &hash);
        Ok(Loaded { notebook, hash })
    }

    /// Applies `edit` under the notebook's write lock and persists the result
    /// atomically. Returns the edit's value and the file hash afterwards.
    pub(crate) async fn mutate<T>(
        &self,
        raw: &str,
        if_match: Option<String>,
        edit: impl FnOnce(&Notebook) -> Result<(Notebook, T), ApiError>,
    ) -> Result<(T, String), ApiError> {
        let path = self.resolve(raw)?;
        let lock = self.lock_for(&path);
        let _guard = lock.lock().await;
        let (nb, current) = Self::read(&path)?;
        if let Some(expected) = if_match.or_else(|| self.last_seen(&path)) {
            if expected != current {
                return Err(ApiError::conflict(format!("`{raw}` changed since version {expected}; reload and retry")));
            }
        }
        let (next, value) = edit(&nb)?;
        let hash = if next == nb {
            current
        } else {
            let bytes = serialize_notebook(&next);
            write_atomic(&path, &bytes)?;
            tracing::debug!(path = %path.display(), "notebook written");
            content_hash(&bytes)
        };
        self.remember(&path, &hash);
        Ok((value, hash))
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
    let dir = path.parent().ok_or_else(|| ApiError::internal("io", "path has no parent"))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ApiError::from(e.error))?;
    Ok(())
}

fn is_loopback_origin(origin: &HeaderValue) -> bool {
    let Ok(origin) = origin.to_str() else { return false };
    let Some(rest) = origin.strip_prefix("http://").or_else(|| origin.strip_prefix("https://")) else {
        return false;
    };
    let host = if rest.starts_with('[') {
        rest.split_inclusive(']').next().unwrap_or("")
    } else {
        rest.split(':').next().unwrap_or("")
    };
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

pub fn router(options: &ServiceOptions) -> Result<Router, ServiceError> {
    let state = AppState::new(options)?;
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin, _| is_loopback_origin(origin)))
        .allow_methods([Method::GET, Method::PUT, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::IF_MATCH])
        .expose_headers([header::ETAG]);
    let mut app = api::routes().with_state(state);
    app = match &options.panel_dir {
        Some(dir) if dir.is_dir() => app.nest_service("/panel", tower_http::services::ServeDir::new(dir)),
        Some(dir) => return Err(ServiceError::PanelDir(dir.clone())),
        None => app.merge(api::panel_placeholder()),
    };
    Ok(app.layer(cors))
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>()).await
}
