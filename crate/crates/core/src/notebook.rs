//! Lossless in-memory model of nbformat-4 notebooks.
//!
//! Parsing keeps every field the file carries: unknown top-level keys, unknown
//! cell keys (attachments, for instance) and all metadata travel through
//! [`parse_notebook`] / [`serialize_notebook`] untouched. Serialization is
//! canonical: keys sorted, two-space indentation, `source` written as a list
//! of lines, trailing newline.
//!
//! Cells always have an id. When the file provides one it is used verbatim;
//! otherwise an id is synthesized from a hash of the cell's kind, ordinal and
//! source, so re-parsing an unchanged file reproduces the same ids. Synthesized
//! ids are not written back until the notebook is edited through one of the
//! editing primitives, at which point all ids are persisted and the minor
//! format version is raised to 5 (the first version that allows cell ids).

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Reserved cell- and notebook-level metadata key owned by this crate.
pub const MODEL_CARD_KEY: &str = "model_card";

const MIN_MINOR_WITH_IDS: u64 = 5;
const SYNTH_ID_LEN: usize = 12;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NotebookError {
    #[error("notebook is not valid UTF-8: {0}")]
    InvalidUtf8(String),
    #[error("malformed notebook JSON: {0}")]
    MalformedJson(String),
    #[error("unsupported notebook format {major} (only nbformat 4 is supported)")]
    UnsupportedFormat { major: u64 },
    #[error("notebook has no `cells` array")]
    MissingCellsArray,
    #[error("cell {index} is malformed: {reason}")]
    MalformedCell { index: usize, reason: String },
    #[error("duplicate cell id `{0}`")]
    DuplicateCellId(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EditError {
    #[error("unknown cell id `{0}`")]
    UnknownCellId(String),
    #[error("index {index} out of bounds for notebook with {len} cells")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("cell id `{0}` already exists")]
    DuplicateCellId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(String);

impl CellId {
    pub fn new(id: impl Into<String>) -> Self {
        CellId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn is_unassigned(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CellId {
    fn from(s: &str) -> Self {
        CellId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
    Raw,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Code => "code",
            CellKind::Markdown => "markdown",
            CellKind::Raw => "raw",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "code" => Some(CellKind::Code),
            "markdown" => Some(CellKind::Markdown),
            "raw" => Some(CellKind::Raw),
            _ => None,
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a cell's id came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdOrigin {
    /// Read from (or to be written to) the file's `id` field.
    Persisted,
    /// Derived from content; not written on serialization.
    Synthesized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub id_origin: IdOrigin,
    pub kind: CellKind,
    pub source: String,
    pub metadata: Map<String, Value>,
    /// Only meaningful for code cells; always empty otherwise.
    pub outputs: Vec<Value>,
    pub execution_count: Option<i64>,
    /// Cell keys this crate does not model (e.g. `attachments`).
    pub extra: Map<String, Value>,
}

impl Cell {
    /// A fresh cell without an id; one is assigned when it is inserted.
    pub fn new(kind: CellKind, source: impl Into<String>) -> Self {
        Cell {
            id: CellId(String::new()),
            id_origin: IdOrigin::Persisted,
            kind,
            source: source.into(),
            metadata: Map::new(),
            outputs: Vec::new(),
            execution_count: None,
            extra: Map::new(),
        }
    }

    pub fn markdown(source: impl Into<String>) -> Self {
        Cell::new(CellKind::Markdown, source)
    }

    pub fn code(source: impl Into<String>) -> Self {
        Cell::new(CellKind::Code, source)
    }

    pub fn is_code(&self) -> bool {
        self.kind == CellKind::Code
    }

    /// The reserved `model_card` metadata map, if present.
    pub fn model_card(&self) -> Option<&Map<String, Value>> {
        self.metadata.get(MODEL_CARD_KEY).and_then(Value::as_object)
    }

    pub fn model_card_str(&self, key: &str) -> Option<&str> {
        self.model_card()?.get(key)?.as_str()
    }

    /// Mutable access to the `model_card` map, creating it (or replacing a
    /// non-object value) as needed.
    pub fn model_card_mut(&mut self) -> &mut Map<String, Value> {
        let entry = self.metadata.entry(MODEL_CARD_KEY.to_owned()).or_insert_with(|| Value::Object(Map::new()));
        if !entry.is_object() {
            *entry = Value::Object(Map::new());
        }
        entry.as_object_mut().expect("model_card is an object")
    }

    /// Removes `key` from the `model_card` map, dropping the map when it
    /// becomes empty.
    pub fn remove_model_card_key(&mut self, key: &str) {
        let now_empty = match self.metadata.get_mut(MODEL_CARD_KEY).and_then(Value::as_object_mut) {
            Some(map) => {
                map.remove(key);
                map.is_empty()
            }
            None => false,
        };
        if now_empty {
            self.metadata.remove(MODEL_CARD_KEY);
        }
    }

    /// Source split into lines, each keeping its trailing newline.
    pub fn source_lines(&self) -> Vec<&str> {
        split_lines(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notebook {
    format_major: u64,
    format_minor: u64,
    metadata: Map<String, Value>,
    cells: Vec<Cell>,
    extra: Map<String, Value>,
}

impl Default for Notebook {
    fn default() -> Self {
        Notebook::empty()
    }
}

impl Notebook {
    /// An nbformat 4.5 notebook with no cells and no metadata.
    pub fn empty() -> Self {
        Notebook {
            format_major: 4,
            format_minor: MIN_MINOR_WITH_IDS,
            metadata: Map::new(),
            cells: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn format_major(&self) -> u64 {
        self.format_major
    }

    pub fn format_minor(&self) -> u64 {
        self.format_minor
    }

    pub fn metadata(&self) -> &Map<String, Value> {
        &self.metadata
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn find_cell(&self, id: &CellId) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.id == id)
    }

    pub fn position(&self, id: &CellId) -> Option<usize> {
        self.cells.iter().position(|c| &c.id == id)
    }

    pub fn code_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_code())
    }

    /// Returns a notebook where the cell with `cell.id` is replaced by `cell`.
    /// Replacing a cell with an identical value returns an unchanged copy.
    pub fn replace_cell(&self, cell: Cell) -> Result<Notebook, EditError> {
        let idx = self.position(&cell.id).ok_or_else(|| EditError::UnknownCellId(cell.id.to_string()))?;
        let current = &self.cells[idx];
        if same_content(current, &cell) {
            return Ok(self.clone());
        }
        let mut next = self.edited();
        let mut cell = cell;
        cell.id_origin = IdOrigin::Persisted;
        normalize_cell(&mut cell);
        next.cells[idx] = cell;
        Ok(next)
    }

    /// Inserts `cell` at `index` (0..=len). A cell without an id receives a
    /// deterministic one. Returns the new notebook and the inserted cell's id.
    pub fn insert_cell_at(&self, index: usize, cell: Cell) -> Result<(Notebook, CellId), EditError> {
        if index > self.cells.len() {
            return Err(EditError::IndexOutOfBounds { index, len: self.cells.len() });
        }
        let mut cell = cell;
        if cell.id.is_unassigned() {
            let taken: HashSet<&str> = self.cells.iter().map(|c| c.id.as_str()).collect();
            cell.id = fresh_id(&cell, index, &taken);
        } else if self.find_cell(&cell.id).is_some() {
            return Err(EditError::DuplicateCellId(cell.id.to_string()));
        }
        cell.id_origin = IdOrigin::Persisted;
        normalize_cell(&mut cell);
        let id = cell.id.clone();
        let mut next = self.edited();
        next.cells.insert(index, cell);
        Ok((next, id))
    }

    pub fn push_cell(&self, cell: Cell) -> Result<(Notebook, CellId), EditError> {
        self.insert_cell_at(self.cells.len(), cell)
    }

    pub fn delete_cell(&self, id: &CellId) -> Result<Notebook, EditError> {
        let idx = self.position(id).ok_or_else(|| EditError::UnknownCellId(id.to_string()))?;
        let mut next = self.edited();
        next.cells.remove(idx);
        Ok(next)
    }

    /// Returns a notebook with `metadata` as its top-level metadata map.
    pub fn with_metadata(&self, metadata: Map<String, Value>) -> Notebook {
        if metadata == self.metadata {
            return self.clone();
        }
        let mut next = self.edited();
        next.metadata = metadata;
        next
    }

    /// Copy prepared for an edit: all ids become persisted and the format is
    /// raised to a version that allows them.
    fn edited(&self) -> Notebook {
        let mut next = self.clone();
        for cell in &mut next.cells {
            cell.id_origin = IdOrigin::Persisted;
        }
        next.format_minor = next.format_minor.max(MIN_MINOR_WITH_IDS);
        next
    }
}

fn same_content(a: &Cell, b: &Cell) -> bool {
    a.kind == b.kind
        && a.source == b.source
        && a.metadata == b.metadata
        && a.extra == b.extra
        && a.execution_count == b.execution_count
        && (a.outputs == b.outputs || !a.is_code())
}

fn normalize_cell(cell: &mut Cell) {
    if !cell.is_code() {
        cell.outputs.clear();
        cell.execution_count = None;
    }
}

/// Lowercase hex SHA-256 of a file's bytes, used as its version tag.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn synthesize_id(kind: CellKind, ordinal: usize, source: &str, salt: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(ordinal.to_string().as_bytes());
    hasher.update([0u8]);
    hasher.update(source.as_bytes());
    if salt > 0 {
        hasher.update([0u8]);
        hasher.update(salt.to_string().as_bytes());
    }
    let digest = hasher.finalize();
    let mut id = hex::encode(digest);
    id.truncate(SYNTH_ID_LEN);
    id
}

fn fresh_id(cell: &Cell, ordinal: usize, taken: &HashSet<&str>) -> CellId {
    (0..)
        .map(|salt| synthesize_id(cell.kind, ordinal, &cell.source, salt))
        .find(|id| !taken.contains(id.as_str()))
        .map(CellId)
        .expect("unbounded salt search")
}

/// Splits text into lines that keep their `\n` terminator.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

pub fn parse_notebook(bytes: &[u8]) -> Result<Notebook, NotebookError> {
    let text = std::str::from_utf8(bytes).map_err(|e| NotebookError::InvalidUtf8(e.to_string()))?;
    let value: Value = serde_json::from_str(text).map_err(|e| NotebookError::MalformedJson(e.to_string()))?;
    let Value::Object(mut top) = value else {
        return Err(NotebookError::MalformedJson("top-level value is not an object".into()));
    };

    let major = top
        .remove("nbformat")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| NotebookError::MalformedJson("missing integer `nbformat`".into()))?;
    if major != 4 {
        return Err(NotebookError::UnsupportedFormat { major });
    }
    let minor = match top.remove("nbformat_minor") {
        None => 0,
        Some(v) => {
            v.as_u64().ok_or_else(|| NotebookError::MalformedJson("`nbformat_minor` is not an integer".into()))?
        }
    };
    let metadata = match top.remove("metadata") {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(NotebookError::MalformedJson("`metadata` is not an object".into())),
    };
    let raw_cells = match top.remove("cells") {
        Some(Value::Array(cells)) => cells,
        _ => return Err(NotebookError::MissingCellsArray),
    };

    let mut cells = Vec::with_capacity(raw_cells.len());
    for (index, raw) in raw_cells.into_iter().enumerate() {
        cells.push(parse_cell(index, raw)?);
    }
    let mut seen = HashSet::new();
    for cell in &cells {
        if !seen.insert(cell.id.as_str()) {
            return Err(NotebookError::DuplicateCellId(cell.id.to_string()));
        }
    }

    Ok(Notebook { format_major: major, format_minor: minor, metadata, cells, extra: top })
}

fn parse_cell(index: usize, raw: Value) -> Result<Cell, NotebookError> {
    let malformed = |reason: &str| NotebookError::MalformedCell { index, reason: reason.to_owned() };
    let Value::Object(mut obj) = raw else {
        return Err(malformed("cell is not an object"));
    };
    let kind = match obj.remove("cell_type") {
        Some(Value::String(s)) => CellKind::parse(&s).ok_or_else(|| malformed(&format!("unknown cell_type `{s}`")))?,
        _ => return Err(malformed("missing string `cell_type`")),
    };
    let source = match obj.remove("source") {
        None => String::new(),
        Some(Value::String(s)) => s,
        Some(Value::Array(parts)) => {
            let mut s = String::new();
            for part in parts {
                match part {
                    Value::String(p) => s.push_str(&p),
                    _ => return Err(malformed("`source` list contains a non-string")),
                }
            }
            s
        }
        Some(_) => return Err(malformed("`source` is neither a string nor a list of strings")),
    };
    let metadata = match obj.remove("metadata") {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(malformed("`metadata` is not an object")),
    };
    let outputs = match obj.remove("outputs") {
        None => Vec::new(),
        Some(Value::Array(outs)) if kind == CellKind::Code => outs,
        Some(Value::Array(_)) => return Err(malformed("non-code cell has `outputs`")),
        Some(_) => return Err(malformed("`outputs` is not a list")),
    };
    let execution_count = match obj.remove("execution_count") {
        None | Some(Value::Null) => None,
        Some(v) if kind == CellKind::Code => {
            Some(v.as_i64().ok_or_else(|| malformed("`execution_count` is not an integer"))?)
        }
        Some(_) => return Err(malformed("non-code cell has `execution_count`")),
    };
    let (id, id_origin) = match obj.remove("id") {
        Some(Value::String(s)) if !s.is_empty() => (CellId(s), IdOrigin::Persisted),
        Some(_) => return Err(malformed("`id` is not a non-empty string")),
        None => (CellId(synthesize_id(kind, index, &source, 0)), IdOrigin::Synthesized),
    };
    Ok(Cell { id, id_origin, kind, source, metadata, outputs, execution_count, extra: obj })
}

/// Canonical bytes for `nb`. Deterministic: equal notebooks give equal bytes.
pub fn serialize_notebook(nb: &Notebook) -> Vec<u8> {
    let mut top = Map::new();
    for (k, v) in &nb.extra {
        top.insert(k.clone(), v.clone());
    }
    top.insert("cells".into(), Value::Array(nb.cells.iter().map(cell_to_value).collect()));
    top.insert("metadata".into(), Value::Object(nb.metadata.clone()));
    top.insert("nbformat".into(), Value::from(nb.format_major));
    top.insert("nbformat_minor".into(), Value::from(nb.format_minor));

    let value = canonicalize(Value::Object(top));
    let mut out = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(b"  ");
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    out
}

fn cell_to_value(cell: &Cell) -> Value {
    let mut obj = cell.extra.clone();
    obj.insert("cell_type".into(), Value::from(cell.kind.as_str()));
    if cell.id_origin == IdOrigin::Persisted {
        obj.insert("id".into(), Value::from(cell.id.as_str()));
    }
    obj.insert("metadata".into(), Value::Object(cell.metadata.clone()));
    obj.insert("source".into(), Value::Array(split_lines(&cell.source).into_iter().map(Value::from).collect()));
    if cell.is_code() {
        obj.insert("execution_count".into(), cell.execution_count.map_or(Value::Null, Value::from));
        obj.insert("outputs".into(), Value::Array(cell.outputs.clone()));
    }
    Value::Object(obj)
}

/// Rebuilds every object with lexicographically sorted keys, independent of
/// whether serde_json is preserving insertion order.
fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_CELLS: &str = r##"{
 "cells": [
  {"cell_type": "markdown", "metadata": {}, "source": ["# Title\n", "intro"]},
  {"cell_type": "code", "execution_count": 3, "metadata": {"tags": ["x"]}, "outputs": [{"output_type": "stream", "name": "stdout", "text": ["hi\n"]}], "source": "print('hi')\n"},
  {"cell_type": "code", "execution_count": null, "metadata": {}, "outputs": [], "source": []}
 ],
 "metadata": {"kernelspec": {"name": "python3", "display_name": "Python 3"}, "custom": {"z": 1, "a": [1.5, null]}},
 "nbformat": 4,
 "nbformat_minor": 4
}"##;

    #[test]
    fn empty_notebook_parses() {
        let nb = parse_notebook(br#"{"cells": [], "metadata": {}, "nbformat": 4, "nbformat_minor": 5}"#).unwrap();
        assert!(nb.is_empty());
        assert_eq!(nb.format_minor(), 5);
    }

    #[test]
    fn three_cell_fixture_fields() {
        let nb = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let kinds: Vec<_> = nb.cells().iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [CellKind::Markdown, CellKind::Code, CellKind::Code]);
        let md = &nb.cells()[0];
        assert_eq!(md.source, "# Title\nintro");
        assert_eq!(md.id_origin, IdOrigin::Synthesized);
        assert_eq!(md.id.as_str().len(), 12);
        let code = &nb.cells()[1];
        assert_eq!(code.source, "print('hi')\n");
        assert_eq!(code.execution_count, Some(3));
        assert_eq!(code.outputs.len(), 1);
        assert_eq!(code.metadata["tags"], serde_json::json!(["x"]));
        let empty = &nb.cells()[2];
        assert_eq!(empty.source, "");
        assert_eq!(empty.execution_count, None);
        assert_eq!(nb.metadata()["custom"]["a"], serde_json::json!([1.5, null]));
    }

    #[test]
    fn rejects_other_major_versions() {
        let err = parse_notebook(br#"{"cells": [], "metadata": {}, "nbformat": 3, "nbformat_minor": 0}"#).unwrap_err();
        assert_eq!(err, NotebookError::UnsupportedFormat { major: 3 });
    }

    #[test]
    fn error_paths() {
        assert!(matches!(parse_notebook(b"{not json"), Err(NotebookError::MalformedJson(_))));
        assert!(matches!(parse_notebook(b"\xff\xfe"), Err(NotebookError::InvalidUtf8(_))));
        assert_eq!(
            parse_notebook(br#"{"metadata": {}, "nbformat": 4, "nbformat_minor": 5}"#),
            Err(NotebookError::MissingCellsArray)
        );
        let dup = br#"{"cells": [{"cell_type":"raw","id":"a","metadata":{},"source":""},{"cell_type":"raw","id":"a","metadata":{},"source":""}], "metadata": {}, "nbformat": 4, "nbformat_minor": 5}"#;
        assert_eq!(parse_notebook(dup), Err(NotebookError::DuplicateCellId("a".into())));
        let bad_kind = br#"{"cells": [{"cell_type":"heading","metadata":{},"source":""}], "metadata": {}, "nbformat": 4, "nbformat_minor": 5}"#;
        assert!(matches!(parse_notebook(bad_kind), Err(NotebookError::MalformedCell { index: 0, .. })));
    }

    #[test]
    fn ids_are_stable_across_parses() {
        let a = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let b = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let ids_a: Vec<_> = a.cells().iter().map(|c| c.id.clone()).collect();
        let ids_b: Vec<_> = b.cells().iter().map(|c| c.id.clone()).collect();
        assert_eq!(ids_a, ids_b);
        // Same content at different ordinals must not collide.
        assert_ne!(synthesize_id(CellKind::Code, 0, "x", 0), synthesize_id(CellKind::Code, 1, "x", 0));
    }

    #[test]
    fn serialization_is_canonical_and_round_trips() {
        let nb = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let bytes = serialize_notebook(&nb);
        assert_eq!(bytes, serialize_notebook(&nb));
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.ends_with("}\n"));
        assert!(!text.contains("\"id\""), "synthesized ids are not written");
        assert!(text.contains("\"source\": [\n        \"# Title\\n\",\n        \"intro\"\n      ]"));
        let again = parse_notebook(&bytes).unwrap();
        assert_eq!(again, nb);
    }

    #[test]
    fn empty_notebook_canonical_form() {
        let bytes = serialize_notebook(&Notebook::empty());
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\n  \"cells\": [],\n  \"metadata\": {},\n  \"nbformat\": 4,\n  \"nbformat_minor\": 5\n}\n"
        );
    }

    #[test]
    fn unknown_keys_survive() {
        let src = br#"{"cells": [{"cell_type":"markdown","metadata":{},"source":"x","attachments":{"a.png":{"image/png":"AAA"}}}], "metadata": {"zz": {"deep": [1, 2]}}, "nbformat": 4, "nbformat_minor": 4, "toplevel_extra": true}"#;
        let nb = parse_notebook(src).unwrap();
        let out: Value = serde_json::from_slice(&serialize_notebook(&nb)).unwrap();
        assert_eq!(out["toplevel_extra"], Value::Bool(true));
        assert_eq!(out["metadata"]["zz"]["deep"], serde_json::json!([1, 2]));
        assert_eq!(out["cells"][0]["attachments"]["a.png"]["image/png"], "AAA");
    }

    #[test]
    fn delete_only_cell() {
        let nb = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let mut cur = nb.clone();
        for id in nb.cells().iter().map(|c| c.id.clone()) {
            cur = cur.delete_cell(&id).unwrap();
        }
        assert!(cur.is_empty());
        assert_eq!(cur.delete_cell(&CellId::from("nope")), Err(EditError::UnknownCellId("nope".into())));
    }

    #[test]
    fn insert_at_front_persists_ids() {
        let nb = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let old_ids: Vec<_> = nb.cells().iter().map(|c| c.id.clone()).collect();
        let (next, id) = nb.insert_cell_at(0, Cell::markdown("first")).unwrap();
        assert_eq!(next.cells()[0].id, id);
        assert_eq!(next.format_minor(), 5);
        let reparsed = parse_notebook(&serialize_notebook(&next)).unwrap();
        assert_eq!(reparsed, next);
        let new_ids: Vec<_> = reparsed.cells()[1..].iter().map(|c| c.id.clone()).collect();
        assert_eq!(new_ids, old_ids, "existing ids survive the shift");
        assert_eq!(nb.insert_cell_at(9, Cell::code("")).unwrap_err(), EditError::IndexOutOfBounds { index: 9, len: 3 });
    }

    #[test]
    fn replace_with_identical_content_is_noop() {
        let nb = parse_notebook(THREE_CELLS.as_bytes()).unwrap();
        let before = serialize_notebook(&nb);
        let same = nb.replace_cell(nb.cells()[1].clone()).unwrap();
        assert_eq!(serialize_notebook(&same), before);

        let mut changed = nb.cells()[1].clone();
        changed.source.push_str("x = 1\n");
        let next = nb.replace_cell(changed).unwrap();
        assert_eq!(next.cells()[1].source, "print('hi')\nx = 1\n");
        assert_eq!(next.cells()[1].id, nb.cells()[1].id);
    }
}
