//! Trace link integrity and the stage/section navigation index.
//!
//! Stage links live in `metadata.model_card.stage` and are mirrored by a
//! `# ml-stage:` comment. Navigation follows the metadata; disagreement with
//! the comment is reported by [`check_trace_integrity`].

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::card::{cell_marker, CardTemplate, MarkerLine};
use crate::codeview::{parse_stage_comment, Stage, StageSource};
use crate::notebook::{CellId, CellKind, Notebook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceIssueKind {
    DanglingLink,
    CommentMetadataMismatch,
    StaleMarker,
    DuplicateSectionMarker,
}

impl TraceIssueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceIssueKind::DanglingLink => "dangling_link",
            TraceIssueKind::CommentMetadataMismatch => "comment_metadata_mismatch",
            TraceIssueKind::StaleMarker => "stale_marker",
            TraceIssueKind::DuplicateSectionMarker => "duplicate_section_marker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceIssue {
    pub kind: TraceIssueKind,
    pub cell_id: Option<CellId>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEntry {
    pub cell_id: CellId,
    pub position: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NavigationIndex {
    pub stages: BTreeMap<Stage, Vec<NavEntry>>,
    pub sections: BTreeMap<String, CellId>,
}

fn position(ordinal: usize, count: usize) -> f64 {
    ordinal as f64 / count.saturating_sub(1).max(1) as f64
}

pub fn build_navigation(nb: &Notebook) -> NavigationIndex {
    let n = nb.len();
    let mut index = NavigationIndex::default();
    for (i, cell) in nb.cells().iter().enumerate() {
        if cell.is_code() {
            if let Some(stage) = cell.model_card_str("stage").and_then(|s| s.parse::<Stage>().ok()) {
                index
                    .stages
                    .entry(stage)
                    .or_default()
                    .push(NavEntry { cell_id: cell.id.clone(), position: position(i, n) });
            }
        } else if cell.kind == CellKind::Markdown {
            if let MarkerLine::Valid(slug) = cell_marker(cell) {
                index.sections.entry(slug).or_insert_with(|| cell.id.clone());
            }
        }
    }
    index
}

pub fn check_trace_integrity(nb: &Notebook, tpl: &CardTemplate) -> Vec<TraceIssue> {
    let mut issues = Vec::new();
    let mut push = |kind, cell: &CellId, detail: String| {
        issues.push(TraceIssue { kind, cell_id: Some(cell.clone()), detail });
    };
    let mut seen_slugs = HashSet::new();
    for cell in nb.cells() {
        let id = &cell.id;
        let meta_stage = cell.model_card().and_then(|m| m.get("stage"));
        let meta_source = cell.model_card().and_then(|m| m.get("stage_source"));

        if !cell.is_code() {
            if meta_stage.is_some() {
                push(TraceIssueKind::DanglingLink, id, format!("stage metadata on a {} cell", cell.kind.as_str()));
            }
            if cell.kind == CellKind::Markdown {
                match cell_marker(cell) {
                    MarkerLine::None => {}
                    MarkerLine::Malformed(line) => {
                        push(TraceIssueKind::StaleMarker, id, format!("malformed section marker `{line}`"))
                    }
                    MarkerLine::Valid(slug) => {
                        if !tpl.contains(&slug) {
                            push(TraceIssueKind::StaleMarker, id, format!("section `{slug}` is not in the template"));
                        } else if !seen_slugs.insert(slug.clone()) {
                            push(
                                TraceIssueKind::DuplicateSectionMarker,
                                id,
                                format!("section `{slug}` is already marked by an earlier cell"),
                            );
                        }
                    }
                }
            }
            continue;
        }

        let meta: Option<Result<Stage, String>> = meta_stage.map(|v| match v.as_str() {
            Some(s) => s.parse().map_err(|_| s.to_owned()),
            None => Err(v.to_string()),
        });
        if let Some(Err(raw)) = &meta {
            push(TraceIssueKind::DanglingLink, id, format!("metadata names unknown stage `{raw}`"));
        }
        if let Some(v) = meta_source {
            if v.as_str().and_then(|s| s.parse::<StageSource>().ok()).is_none() {
                push(TraceIssueKind::DanglingLink, id, format!("unknown stage_source {v}"));
            }
        }
        let comment = parse_stage_comment(&cell.source);
        if let Some(Err(raw)) = &comment {
            push(TraceIssueKind::DanglingLink, id, format!("stage comment names unknown stage `{raw}`"));
        }
        let detail = match (&meta, &comment) {
            (Some(Ok(m)), Some(Ok(c))) if m != c => Some(format!("comment says {c}, metadata says {m}")),
            (Some(Ok(m)), None) => Some(format!("metadata says {m} but the cell has no stage comment")),
            (None, Some(Ok(c))) => Some(format!("comment says {c} but the cell has no stage metadata")),
            _ => None,
        };
        if let Some(d) = detail {
            push(TraceIssueKind::CommentMetadataMismatch, id, d);
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::upsert_section;
    use crate::codeview::write_stage_comment;
    use crate::notebook::Cell;

    fn five_cells() -> Notebook {
        (0..5).fold(Notebook::empty(), |nb, i| nb.push_cell(Cell::code(format!("x{i} = {i}"))).unwrap().0)
    }

    #[test]
    fn positions() {
        let nb = five_cells();
        let ids: Vec<_> = nb.cells().iter().map(|c| c.id.clone()).collect();
        let nb = write_stage_comment(&nb, &ids[1], Stage::ModelTraining, StageSource::Manual).unwrap();
        let nb = write_stage_comment(&nb, &ids[3], Stage::ModelTraining, StageSource::AutoKb).unwrap();
        let nav = build_navigation(&nb);
        assert_eq!(
            nav.stages[&Stage::ModelTraining],
            [
                NavEntry { cell_id: ids[1].clone(), position: 0.25 },
                NavEntry { cell_id: ids[3].clone(), position: 0.75 }
            ]
        );
        assert!(build_navigation(&five_cells()).stages.is_empty());

        let one = Notebook::empty().push_cell(Cell::code("x = 1")).unwrap().0;
        let id = one.cells()[0].id.clone();
        let one = write_stage_comment(&one, &id, Stage::Preprocessing, StageSource::Manual).unwrap();
        assert_eq!(build_navigation(&one).stages[&Stage::Preprocessing][0].position, 0.0);
    }

    #[test]
    fn written_notebook_is_clean() {
        let tpl = CardTemplate::default_template();
        let nb = five_cells();
        let id = nb.cells()[2].id.clone();
        let nb = write_stage_comment(&nb, &id, Stage::DataCleaning, StageSource::Manual).unwrap();
        let (nb, _) = upsert_section(&nb, &tpl, "metrics", "F1").unwrap();
        assert_eq!(check_trace_integrity(&nb, &tpl), []);
        assert!(build_navigation(&nb).sections.contains_key("metrics"));
    }

    #[test]
    fn each_kind() {
        let tpl = CardTemplate::default_template();
        let mut cell = Cell::code("# ml-stage: model_training\nfit()");
        cell.model_card_mut().insert("stage".into(), "model_evaluation".into());
        let nb = Notebook::empty()
            .push_cell(cell)
            .unwrap()
            .0
            .push_cell(Cell::code("# ml-stage: bogus"))
            .unwrap()
            .0
            .push_cell(Cell::markdown("<!-- model-card-section: no-such-section -->\nx"))
            .unwrap()
            .0
            .push_cell(Cell::markdown("<!-- model-card-section: metrics -->\na"))
            .unwrap()
            .0
            .push_cell(Cell::markdown("<!-- model-card-section: metrics -->\nb"))
            .unwrap()
            .0;
        let kinds: Vec<_> = check_trace_integrity(&nb, &tpl).into_iter().map(|i| i.kind).collect();
        assert_eq!(
            kinds,
            [
                TraceIssueKind::CommentMetadataMismatch,
                TraceIssueKind::DanglingLink,
                TraceIssueKind::StaleMarker,
                TraceIssueKind::DuplicateSectionMarker
            ]
        );
    }
}
