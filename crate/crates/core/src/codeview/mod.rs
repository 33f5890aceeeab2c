//! Static view over the code cells of a notebook: imports, def/use edges and
//! pipeline stage annotations.

mod detect;
mod facts;
mod graph;
mod imports;
mod kb;
mod lexer;
mod stage;

pub use detect::{
    apply_assignments, assignments_from_metadata, clear_stage, detect_notebook_stages, detect_stages,
    parse_stage_comment, stage_comment, write_stage_comment, StageAssignment, StageError, STAGE_COMMENT_PREFIX,
};
pub use facts::{analyze_source, CellFacts, FlowEvent, ImportBinding};
pub use graph::{build_dependency_graph, DependencyEdge, DependencyGraph};
pub use imports::{qualify, scan_imports, AliasTable};
pub use kb::{KbEntry, KbError, KnowledgeBase, KB_FILE_NAME};
pub use lexer::LexError;
pub use stage::{Stage, StageSource, UnknownStage};

use crate::notebook::{Cell, Notebook};

pub(crate) struct CodeAnalysis<'a> {
    pub cell: &'a Cell,
    /// `None` when the cell does not tokenize.
    pub facts: Option<CellFacts>,
}

pub(crate) fn analyze(nb: &Notebook) -> Vec<CodeAnalysis<'_>> {
    nb.code_cells().map(|cell| CodeAnalysis { cell, facts: analyze_source(&cell.source).ok() }).collect()
}
