//! Model-card sections embedded in tagged markdown cells.
//!
//! A markdown cell belongs to the card when its first line is a marker
//! comment, `<!-- model-card-section: <slug> -->`. The marker is invisible in
//! rendered markdown. Cells written by [`upsert_section`] carry the marker,
//! then a `## <title>` line, then the section body.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::notebook::{Cell, CellId, CellKind, EditError, Notebook};

pub const MARKER_PREFIX: &str = "<!-- model-card-section: ";
pub const MARKER_SUFFIX: &str = " -->";
pub const EMPTY_SECTION_PLACEHOLDER: &str = "<!-- TODO: complete this section -->";
pub const CONFIG_FILE_NAME: &str = "modelcard.config.json";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigSchemaError {
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config must be a JSON array of section objects")]
    NotAnArray,
    #[error("section {index}: {reason}")]
    InvalidSection { index: usize, reason: String },
    #[error("section {index}: missing `title`")]
    MissingTitle { index: usize },
    #[error("section {index}: missing `id` and title `{title}` yields no usable slug")]
    MissingId { index: usize, title: String },
    #[error("section {index}: `{id}` is not a valid slug (lowercase letters, digits, hyphens)")]
    BadSlug { index: usize, id: String },
    #[error("duplicate section id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CardError {
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error(transparent)]
    Edit(#[from] EditError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardSectionSpec {
    pub id: String,
    pub title: String,
    pub description: String,
    pub examples: Vec<String>,
    pub required: bool,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardTemplate {
    pub sections: Vec<CardSectionSpec>,
}

const DEFAULT_SECTIONS: [(&str, &str); 9] = [
    (
        "Model Details",
        "Basic facts about the model: who built it, when, which version, what kind of model it is, \
         its license, and whom to contact with questions.",
    ),
    (
        "Intended Use",
        "The use cases and users the model was built for, plus nearby uses it was not designed for \
         and should not be applied to.",
    ),
    (
        "Factors",
        "Groups, instruments, and environments (demographic, phenotypic, technical) that may change \
         how well the model performs.",
    ),
    (
        "Metrics",
        "Which performance measures are reported, why they were chosen, and how they and any \
         thresholds or uncertainty estimates are computed.",
    ),
    ("Evaluation Data", "The datasets used for evaluation, why they were chosen, and how they were preprocessed."),
    (
        "Training Data",
        "The data the model was trained on. If it cannot be shared, describe at least its \
         distribution over the relevant groups.",
    ),
    ("Quantitative Analyses", "Results broken down by each factor listed above and by their intersections."),
    ("Ethical Considerations", "Sensitive data, risks to people, harms you foresee, and what was done to reduce them."),
    ("Caveats and Recommendations", "Anything else a user should know that the other sections do not cover."),
];

const ETHICS_EXAMPLE: &str = "https://github.com/salesforce/ctrl/blob/master/ModelCard.pdf";

impl CardTemplate {
    pub fn default_template() -> Self {
        let sections = DEFAULT_SECTIONS
            .iter()
            .enumerate()
            .map(|(i, (title, description))| {
                let id = slugify(title);
                let examples =
                    if id == "ethical-considerations" { vec![ETHICS_EXAMPLE.to_owned()] } else { Vec::new() };
                CardSectionSpec {
                    id,
                    title: (*title).to_owned(),
                    description: (*description).to_owned(),
                    examples,
                    required: true,
                    order: i as u32,
                }
            })
            .collect();
        CardTemplate { sections }
    }

    pub fn section(&self, id: &str) -> Option<&CardSectionSpec> {
        self.sections.iter().find(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.section(id).is_some()
    }
}

impl Default for CardTemplate {
    fn default() -> Self {
        CardTemplate::default_template()
    }
}

/// Lowercases and collapses every run of non-alphanumerics into one hyphen.
pub fn slugify(title: &str) -> String {
    let mut slug = String::with_capacity(title.len());
    let mut pending_hyphen = false;
    for ch in title.chars() {
        if ch.is_ascii_alphanumeric() {
            if pending_hyphen && !slug.is_empty() {
                slug.push('-');
            }
            pending_hyphen = false;
            slug.push(ch.to_ascii_lowercase());
        } else {
            pending_hyphen = true;
        }
    }
    slug
}

pub fn is_valid_slug(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    id: Option<String>,
    title: Option<String>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    examples: Vec<String>,
    #[serde(default = "default_required")]
    required: bool,
}

fn default_required() -> bool {
    true
}

/// Loads a template from `modelcard.config.json` bytes. `None`, blank input
/// and `[]` all give the default nine-section template.
pub fn load_template(config: Option<&[u8]>) -> Result<CardTemplate, ConfigSchemaError> {
    let Some(bytes) = config else {
        return Ok(CardTemplate::default_template());
    };
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(CardTemplate::default_template());
    }
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| ConfigSchemaError::Json(e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(ConfigSchemaError::NotAnArray);
    };
    if items.is_empty() {
        return Ok(CardTemplate::default_template());
    }

    let mut sections = Vec::with_capacity(items.len());
    let mut seen = HashSet::new();
    for (index, item) in items.into_iter().enumerate() {
        let raw: RawSection = serde_json::from_value(item)
            .map_err(|e| ConfigSchemaError::InvalidSection { index, reason: e.to_string() })?;
        let title = match raw.title {
            Some(t) if !t.trim().is_empty() => t,
            _ => return Err(ConfigSchemaError::MissingTitle { index }),
        };
        let id = match raw.id {
            Some(id) if is_valid_slug(&id) => id,
            Some(id) => return Err(ConfigSchemaError::BadSlug { index, id }),
            None => {
                let slug = slugify(&title);
                if slug.is_empty() {
                    return Err(ConfigSchemaError::MissingId { index, title });
                }
                slug
            }
        };
        if !seen.insert(id.clone()) {
            return Err(ConfigSchemaError::DuplicateId(id));
        }
        sections.push(CardSectionSpec {
            id,
            title,
            description: raw.description,
            examples: raw.examples,
            required: raw.required,
            order: index as u32,
        });
    }
    Ok(CardTemplate { sections })
}

pub fn marker_line(section_id: &str) -> String {
    format!("{MARKER_PREFIX}{section_id}{MARKER_SUFFIX}")
}

/// What the first line of a markdown cell says about card membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkerLine {
    /// Not a card cell.
    None,
    Valid(String),
    /// Looks like a marker but does not follow the grammar.
    Malformed(String),
}

pub fn classify_marker(first_line: &str) -> MarkerLine {
    let line = first_line.strip_suffix('\n').unwrap_or(first_line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if let Some(rest) = line.strip_prefix(MARKER_PREFIX) {
        if let Some(slug) = rest.strip_suffix(MARKER_SUFFIX) {
            if is_valid_slug(slug) {
                return MarkerLine::Valid(slug.to_owned());
            }
        }
        return MarkerLine::Malformed(line.to_owned());
    }
    if line.trim_start().starts_with("<!--") && line.contains("model-card-section") {
        return MarkerLine::Malformed(line.to_owned());
    }
    MarkerLine::None
}

/// Marker classification of a cell; non-markdown cells are never markers.
pub fn cell_marker(cell: &Cell) -> MarkerLine {
    if cell.kind != CellKind::Markdown {
        return MarkerLine::None;
    }
    let first = cell.source.split('\n').next().unwrap_or("");
    classify_marker(first)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardEntry {
    pub section_id: String,
    pub content: String,
    pub cell_id: Option<CellId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrphanReason {
    UnknownSection,
    DuplicateMarker,
    MalformedMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanCell {
    pub cell_id: CellId,
    pub section_id: Option<String>,
    pub reason: OrphanReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardDocument {
    /// In template order.
    pub entries: Vec<CardEntry>,
    pub orphans: Vec<OrphanCell>,
}

impl CardDocument {
    pub fn entry(&self, section_id: &str) -> Option<&CardEntry> {
        self.entries.iter().find(|e| e.section_id == section_id)
    }

    pub fn is_filled(&self, section_id: &str) -> bool {
        self.entry(section_id).is_some_and(|e| !e.content.trim().is_empty())
    }
}

/// Splits a marked cell's source into its body, dropping the marker line and
/// a directly following `## ` title line.
pub fn section_body(source: &str) -> &str {
    let rest = match source.find('\n') {
        Some(i) => &source[i + 1..],
        None => "",
    };
    if rest.starts_with("## ") {
        match rest.find('\n') {
            Some(i) => &rest[i + 1..],
            None => "",
        }
    } else {
        rest
    }
}

pub fn extract_card(nb: &Notebook, tpl: &CardTemplate) -> CardDocument {
    let mut found: HashMap<String, CardEntry> = HashMap::new();
    let mut orphans = Vec::new();
    for cell in nb.cells() {
        match cell_marker(cell) {
            MarkerLine::None => {}
            MarkerLine::Malformed(line) => orphans.push(OrphanCell {
                cell_id: cell.id.clone(),
                section_id: None,
                reason: OrphanReason::MalformedMarker,
                detail: format!("marker line does not match the grammar: {line}"),
            }),
            MarkerLine::Valid(slug) if !tpl.contains(&slug) => orphans.push(OrphanCell {
                cell_id: cell.id.clone(),
                section_id: Some(slug.clone()),
                reason: OrphanReason::UnknownSection,
                detail: format!("section `{slug}` is not in the template"),
            }),
            MarkerLine::Valid(slug) => {
                if let Some(first) = found.get(&slug) {
                    let first_id = first.cell_id.clone().map(|c| c.to_string()).unwrap_or_default();
                    orphans.push(OrphanCell {
                        cell_id: cell.id.clone(),
                        section_id: Some(slug.clone()),
                        reason: OrphanReason::DuplicateMarker,
                        detail: format!("section `{slug}` is already bound to cell {first_id}"),
                    });
                } else {
                    let content = section_body(&cell.source).to_owned();
                    found.insert(slug.clone(), CardEntry { section_id: slug, content, cell_id: Some(cell.id.clone()) });
                }
            }
        }
    }
    let entries = tpl.sections.iter().filter_map(|s| found.remove(&s.id)).collect();
    CardDocument { entries, orphans }
}

fn section_source(spec: &CardSectionSpec, content: &str) -> String {
    let mut src = marker_line(&spec.id);
    src.push('\n');
    src.push_str("## ");
    src.push_str(&spec.title);
    if !content.is_empty() {
        src.push('\n');
        src.push_str(content);
    }
    src
}

/// Writes `content` into the cell bound to `section_id`, appending a new
/// marked cell at the end of the notebook when none exists. Returns the
/// notebook unchanged when the cell already holds exactly this content.
pub fn upsert_section(
    nb: &Notebook,
    tpl: &CardTemplate,
    section_id: &str,
    content: &str,
) -> Result<(Notebook, CellId), CardError> {
    let spec = tpl.section(section_id).ok_or_else(|| CardError::UnknownSection(section_id.to_owned()))?;
    let source = section_source(spec, content);

    let existing = nb.cells().iter().find(|c| cell_marker(c) == MarkerLine::Valid(section_id.to_owned()));
    match existing {
        Some(cell) => {
            let mut updated = cell.clone();
            updated.source = source;
            let next = nb.replace_cell(updated)?;
            Ok((next, cell.id.clone()))
        }
        None => Ok(nb.push_cell(Cell::markdown(source))?),
    }
}

/// Required sections whose entry is missing or whitespace-only, in template
/// order.
pub fn completion_check(card: &CardDocument, tpl: &CardTemplate) -> Vec<String> {
    tpl.sections.iter().filter(|s| s.required && !card.is_filled(&s.id)).map(|s| s.id.clone()).collect()
}

/// Renders the card as standalone markdown: one `## <title>` per template
/// section, bodies verbatim, gaps marked with a placeholder comment.
pub fn export_card(card: &CardDocument, tpl: &CardTemplate) -> Vec<u8> {
    let mut blocks = Vec::with_capacity(tpl.sections.len());
    for spec in &tpl.sections {
        let body = card
            .entry(&spec.id)
            .map(|e| e.content.trim_end_matches(['\n', '\r']))
            .filter(|b| !b.trim().is_empty())
            .unwrap_or(EMPTY_SECTION_PLACEHOLDER);
        blocks.push(format!("## {}\n\n{}\n", spec.title, body));
    }
    blocks.join("\n").into_bytes()
}
