use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::notebook::{CellId, EditError, Notebook};

use super::graph::graph_from;
use super::imports::{cell_imports, qualify};
use super::kb::KnowledgeBase;
use super::stage::{Stage, StageSource};

pub const STAGE_COMMENT_PREFIX: &str = "# ml-stage:";

const STAGE_KEY: &str = "stage";
const STAGE_SOURCE_KEY: &str = "stage_source";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StageError {
    #[error("no cell with id `{0}`")]
    UnknownCellId(CellId),
    #[error("cell `{0}` is not a code cell")]
    NotACodeCell(CellId),
    #[error(transparent)]
    Edit(#[from] EditError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageAssignment {
    pub cell_id: CellId,
    pub stage: Option<Stage>,
    pub source: Option<StageSource>,
    /// Qualified calls that matched the chosen stage.
    pub matched_calls: Vec<String>,
}

/// One assignment per code cell, in document order.
///
/// Manual entries in `prior` are kept verbatim. Other cells take the latest
/// pipeline stage among their non-plotting knowledge-base matches, falling back
/// to plotting matches. Cells still unassigned inherit a stage when every
/// staged dependency predecessor agrees on one.
pub fn detect_stages(nb: &Notebook, kb: &KnowledgeBase, prior: &[StageAssignment]) -> Vec<StageAssignment> {
    let analyses = super::analyze(nb);
    let graph = graph_from(&analyses);
    let manual: HashMap<&CellId, &StageAssignment> =
        prior.iter().filter(|a| a.source == Some(StageSource::Manual)).map(|a| (&a.cell_id, a)).collect();

    let mut bindings = BTreeMap::new();
    let mut out: Vec<StageAssignment> = Vec::with_capacity(analyses.len());
    for a in &analyses {
        for b in cell_imports(a) {
            bindings.insert(b.local, b.target);
        }
        let id = &a.cell.id;
        if let Some(m) = manual.get(id) {
            out.push((*m).clone());
            continue;
        }
        let mut best: Option<(Stage, BTreeSet<String>)> = None;
        let mut plot: Option<(Stage, BTreeSet<String>)> = None;
        for chain in a.facts.iter().flat_map(|f| f.calls()) {
            let q = qualify(chain, &bindings);
            for e in kb.lookup(&q) {
                let slot = if e.is_plotting() { &mut plot } else { &mut best };
                match slot {
                    Some((s, calls)) if *s == e.stage => {
                        calls.insert(q.clone());
                    }
                    Some((s, _)) if *s > e.stage => {}
                    _ => *slot = Some((e.stage, BTreeSet::from([q.clone()]))),
                }
            }
        }
        let assignment = match best.or(plot) {
            Some((stage, calls)) => StageAssignment {
                cell_id: id.clone(),
                stage: Some(stage),
                source: Some(StageSource::AutoKb),
                matched_calls: calls.into_iter().collect(),
            },
            None => StageAssignment { cell_id: id.clone(), stage: None, source: None, matched_calls: Vec::new() },
        };
        out.push(assignment);
    }

    let index: HashMap<CellId, usize> = out.iter().enumerate().map(|(i, a)| (a.cell_id.clone(), i)).collect();
    for i in 0..out.len() {
        if out[i].stage.is_some() {
            continue;
        }
        let staged: BTreeSet<Stage> =
            graph.predecessors(&out[i].cell_id).filter_map(|p| index.get(p).and_then(|&j| out[j].stage)).collect();
        if staged.len() == 1 {
            out[i].stage = staged.into_iter().next();
            out[i].source = Some(StageSource::AutoPropagated);
        }
    }
    out
}

/// Detection using the notebook's own stored manual assignments as priors.
pub fn detect_notebook_stages(nb: &Notebook, kb: &KnowledgeBase) -> Vec<StageAssignment> {
    detect_stages(nb, kb, &assignments_from_metadata(nb))
}

/// Stored assignments of code cells whose metadata names a known stage and source.
pub fn assignments_from_metadata(nb: &Notebook) -> Vec<StageAssignment> {
    nb.code_cells()
        .filter_map(|c| {
            let stage = c.model_card_str(STAGE_KEY)?.parse().ok()?;
            let source = c.model_card_str(STAGE_SOURCE_KEY)?.parse().ok()?;
            Some(StageAssignment {
                cell_id: c.id.clone(),
                stage: Some(stage),
                source: Some(source),
                matched_calls: vec![],
            })
        })
        .collect()
}

pub fn stage_comment(stage: Stage) -> String {
    format!("{STAGE_COMMENT_PREFIX} {stage}")
}

/// The value of the first stage comment line, trimmed. Unknown values are
/// returned as `Err` with the raw text.
pub fn parse_stage_comment(source: &str) -> Option<Result<Stage, String>> {
    source.lines().find_map(|l| {
        let rest = l.trim_start().strip_prefix(STAGE_COMMENT_PREFIX)?;
        let v = rest.trim();
        Some(v.parse().map_err(|_| v.to_owned()))
    })
}

fn without_stage_comments(source: &str) -> Vec<&str> {
    source.lines().filter(|l| !l.trim_start().starts_with(STAGE_COMMENT_PREFIX)).collect()
}

fn join(lines: &[&str], trailing_newline: bool) -> String {
    let mut s = lines.join("\n");
    if trailing_newline && !s.is_empty() {
        s.push('\n');
    }
    s
}

/// Sets the stage comment and metadata of a code cell. The comment goes on the
/// first line, or the second when the first is a cell magic.
pub fn write_stage_comment(
    nb: &Notebook,
    cell_id: &CellId,
    stage: Stage,
    source: StageSource,
) -> Result<Notebook, StageError> {
    let mut cell = nb.find_cell(cell_id).ok_or_else(|| StageError::UnknownCellId(cell_id.clone()))?.clone();
    if !cell.is_code() {
        return Err(StageError::NotACodeCell(cell_id.clone()));
    }
    let mut lines = without_stage_comments(&cell.source);
    let comment = stage_comment(stage);
    let at = usize::from(lines.first().is_some_and(|l| l.starts_with("%%")));
    lines.insert(at, &comment);
    cell.source = join(&lines, cell.source.ends_with('\n'));
    let meta = cell.model_card_mut();
    meta.insert(STAGE_KEY.into(), Value::String(stage.as_str().into()));
    meta.insert(STAGE_SOURCE_KEY.into(), Value::String(source.as_str().into()));
    Ok(nb.replace_cell(cell)?)
}

pub fn clear_stage(nb: &Notebook, cell_id: &CellId) -> Result<Notebook, StageError> {
    let mut cell = nb.find_cell(cell_id).ok_or_else(|| StageError::UnknownCellId(cell_id.clone()))?.clone();
    if !cell.is_code() {
        return Err(StageError::NotACodeCell(cell_id.clone()));
    }
    let lines = without_stage_comments(&cell.source);
    cell.source = join(&lines, cell.source.ends_with('\n'));
    cell.remove_model_card_key(STAGE_KEY);
    cell.remove_model_card_key(STAGE_SOURCE_KEY);
    Ok(nb.replace_cell(cell)?)
}

/// Writes every assignment. Cells without a stage are cleared unless they hold
/// a manual assignment.
pub fn apply_assignments(nb: &Notebook, assignments: &[StageAssignment]) -> Result<Notebook, StageError> {
    let mut out = nb.clone();
    for a in assignments {
        out = match (a.stage, a.source) {
            (Some(stage), Some(source)) => write_stage_comment(&out, &a.cell_id, stage, source)?,
            _ => {
                let cell = out.find_cell(&a.cell_id).ok_or_else(|| StageError::UnknownCellId(a.cell_id.clone()))?;
                if cell.model_card_str(STAGE_SOURCE_KEY) == Some(StageSource::Manual.as_str()) {
                    continue;
                }
                clear_stage(&out, &a.cell_id)?
            }
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notebook::Cell;

    fn notebook(cells: &[&str]) -> Notebook {
        cells.iter().fold(Notebook::empty(), |nb, src| nb.push_cell(Cell::code(*src)).unwrap().0)
    }

    fn stages(nb: &Notebook) -> Vec<Option<Stage>> {
        detect_notebook_stages(nb, &KnowledgeBase::default_kb()).into_iter().map(|a| a.stage).collect()
    }

    #[test]
    fn latest_stage_wins_and_plotting_is_fallback() {
        let nb = notebook(&[
            "import pandas as pd\nimport matplotlib.pyplot as plt\ndf = pd.read_csv('x.csv')\ndf = df.dropna()",
            "plt.plot(df['a'])",
            "plt.plot(df['a'])\ndf2 = df.fillna(0)",
        ]);
        assert_eq!(stages(&nb), [Some(Stage::DataCleaning), Some(Stage::ModelEvaluation), Some(Stage::DataCleaning)]);
    }

    #[test]
    fn propagation_requires_agreement() {
        let nb = notebook(&["import pandas as pd\na = pd.read_csv('a')", "b = a.dropna()", "c = a + 1", "d = a + b"]);
        let got = detect_notebook_stages(&nb, &KnowledgeBase::default_kb());
        assert_eq!(got[2].stage, Some(Stage::DataCollection));
        assert_eq!(got[2].source, Some(StageSource::AutoPropagated));
        assert_eq!(got[3].stage, None);
    }

    #[test]
    fn manual_is_preserved() {
        let nb = notebook(&["import pandas as pd\na = pd.read_csv('a')"]);
        let id = nb.cells()[0].id.clone();
        let nb = write_stage_comment(&nb, &id, Stage::ModelTraining, StageSource::Manual).unwrap();
        let got = detect_notebook_stages(&nb, &KnowledgeBase::default_kb());
        assert_eq!(got[0].stage, Some(Stage::ModelTraining));
        assert_eq!(got[0].source, Some(StageSource::Manual));
    }

    #[test]
    fn comment_placement_and_replacement() {
        let nb = notebook(&["%%time\nx = 1\n# ml-stage: data_cleaning\n"]);
        let id = nb.cells()[0].id.clone();
        let nb = write_stage_comment(&nb, &id, Stage::ModelTraining, StageSource::AutoKb).unwrap();
        assert_eq!(nb.cells()[0].source, "%%time\n# ml-stage: model_training\nx = 1\n");
        let again = write_stage_comment(&nb, &id, Stage::ModelTraining, StageSource::AutoKb).unwrap();
        assert_eq!(again, nb);
        let cleared = clear_stage(&nb, &id).unwrap();
        assert_eq!(cleared.cells()[0].source, "%%time\nx = 1\n");
        assert!(cleared.cells()[0].model_card_str("stage").is_none());
    }

    #[test]
    fn errors() {
        let nb = Notebook::empty().push_cell(Cell::markdown("hi")).unwrap().0;
        let id = nb.cells()[0].id.clone();
        assert_eq!(
            write_stage_comment(&nb, &id, Stage::ModelTraining, StageSource::Manual),
            Err(StageError::NotACodeCell(id))
        );
        let missing = CellId::new("nope");
        assert_eq!(clear_stage(&nb, &missing), Err(StageError::UnknownCellId(missing)));
    }

    #[test]
    fn parse_comment() {
        assert_eq!(parse_stage_comment("x\n# ml-stage: model_training"), Some(Ok(Stage::ModelTraining)));
        assert_eq!(parse_stage_comment("# ml-stage: training"), Some(Err("training".into())));
        assert_eq!(parse_stage_comment("x = 1"), None);
    }
}
