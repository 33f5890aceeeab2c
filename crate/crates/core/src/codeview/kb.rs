//! API knowledge base: which library calls indicate which pipeline stage.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::stage::Stage;

pub const KB_FILE_NAME: &str = "stage-kb.json";

const DEFAULT_KB: &str = include_str!("../../data/stage-kb.json");

/// Module families whose matches only count when a cell has no other match.
const PLOTTING_MODULES: [&str; 3] = ["matplotlib", "seaborn", "plotly"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KbError {
    #[error("knowledge base is not valid JSON: {0}")]
    Json(String),
    #[error("entry {index}: unknown stage `{stage}`")]
    UnknownStage { index: usize, stage: String },
    #[error("entry {index}: `*` may only appear at the end of a callable pattern")]
    BadWildcard { index: usize },
    #[error("entry {index} duplicates an earlier entry")]
    Duplicate { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KbEntry {
    /// Dotted module prefix; empty matches any receiver.
    pub module: String,
    /// Exact name, or a prefix followed by `*`.
    pub callable: String,
    pub stage: Stage,
}

impl KbEntry {
    /// `qualified` is a dotted call name such as `sklearn.metrics.f1_score`
    /// or `model.fit`.
    pub fn matches(&self, qualified: &str) -> bool {
        let (path, name) = match qualified.rsplit_once('.') {
            Some((p, n)) => (p, n),
            None => ("", qualified),
        };
        let module_ok = self.module.is_empty()
            || path == self.module
            || path.strip_prefix(self.module.as_str()).is_some_and(|rest| rest.starts_with('.'));
        if !module_ok {
            return false;
        }
        match self.callable.strip_suffix('*') {
            Some(prefix) => name.starts_with(prefix),
            None => name == self.callable,
        }
    }

    pub fn is_plotting(&self) -> bool {
        let head = self.module.split('.').next().unwrap_or("");
        PLOTTING_MODULES.contains(&head)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: Vec<KbEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    module: String,
    callable: String,
    stage: String,
}

impl KnowledgeBase {
    /// The bundled table covering scikit-learn, numpy, pandas and matplotlib.
    pub fn default_kb() -> Self {
        KnowledgeBase::from_json(DEFAULT_KB.as_bytes()).expect("bundled knowledge base is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, KbError> {
        let raw: Vec<RawEntry> = serde_json::from_slice(bytes).map_err(|e| KbError::Json(e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.len());
        for (index, r) in raw.into_iter().enumerate() {
            let stage = r.stage.parse().map_err(|_| KbError::UnknownStage { index, stage: r.stage.clone() })?;
            if r.callable.trim_end_matches('*').contains('*') {
                return Err(KbError::BadWildcard { index });
            }
            entries.push(KbEntry { module: r.module, callable: r.callable, stage });
        }
        KnowledgeBase::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<KbEntry>) -> Result<Self, KbError> {
        let mut seen = HashSet::new();
        for (index, e) in entries.iter().enumerate() {
            if !seen.insert(e) {
                return Err(KbError::Duplicate { index });
            }
        }
        Ok(KnowledgeBase { entries })
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn with_entry(&self, entry: KbEntry) -> Result<Self, KbError> {
        let mut entries = self.entries.clone();
        entries.push(entry);
        KnowledgeBase::from_entries(entries)
    }

    /// Every entry matching `qualified`, in table order.
    pub fn lookup<'a>(&'a self, qualified: &'a str) -> impl Iterator<Item = &'a KbEntry> + 'a {
        self.entries.iter().filter(move |e| e.matches(qualified))
    }
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        KnowledgeBase::default_kb()
    }
}
