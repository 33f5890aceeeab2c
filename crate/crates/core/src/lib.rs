//! Model-card documentation embedded in Jupyter notebooks: lossless notebook
//! I/O, tagged card sections, pipeline stage detection, trace checks and a
//! documentation checklist.

pub mod card;
pub mod codeview;
pub mod notebook;
pub mod rubric;
pub mod trace;

pub use card::{
    completion_check, export_card, extract_card, load_template, upsert_section, CardDocument, CardEntry, CardError,
    CardSectionSpec, CardTemplate, ConfigSchemaError, OrphanCell, OrphanReason,
};
pub use codeview::{
    build_dependency_graph, detect_notebook_stages, detect_stages, scan_imports, write_stage_comment, AliasTable,
    DependencyEdge, DependencyGraph, KnowledgeBase, Stage, StageAssignment, StageError, StageSource,
};
pub use notebook::{parse_notebook, serialize_notebook, Cell, CellId, CellKind, EditError, Notebook, NotebookError};
pub use rubric::{assess, assess_corpus, completion_vs_rubric, AnswerValue, ManualAnswers, RubricReport};
pub use trace::{build_navigation, check_trace_integrity, NavigationIndex, TraceIssue, TraceIssueKind};
