use std::collections::BTreeMap;

use crate::notebook::{CellId, Notebook};

use super::facts::{parse_import, ImportBinding};
use super::lexer::lex;
use super::CodeAnalysis;

/// Import aliases in effect at the end of each code cell, accumulated in
/// document order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    snapshots: Vec<(CellId, BTreeMap<String, String>)>,
}

impl AliasTable {
    pub fn at_end_of(&self, cell: &CellId) -> Option<&BTreeMap<String, String>> {
        self.snapshots.iter().find(|(id, _)| id == cell).map(|(_, m)| m)
    }

    /// Bindings after the last code cell.
    pub fn final_bindings(&self) -> BTreeMap<String, String> {
        self.snapshots.last().map(|(_, m)| m.clone()).unwrap_or_default()
    }

    pub fn resolve(&self, cell: &CellId, local: &str) -> Option<&str> {
        self.at_end_of(cell)?.get(local).map(String::as_str)
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellId> {
        self.snapshots.iter().map(|(id, _)| id)
    }
}

/// Module-scope imports of one cell. Cells that fail to tokenize as a whole
/// fall back to reading unindented physical import lines one at a time, so a
/// broken line elsewhere does not hide the cell's imports.
pub(crate) fn cell_imports(analysis: &CodeAnalysis<'_>) -> Vec<ImportBinding> {
    match &analysis.facts {
        Some(f) => f.imports().cloned().collect(),
        None => analysis
            .cell
            .source
            .lines()
            .filter(|l| l.starts_with("import ") || l.starts_with("from "))
            .filter_map(|l| lex(l).ok())
            .flat_map(|lines| lines.into_iter().flat_map(|ll| parse_import(&ll.tokens)))
            .collect(),
    }
}

pub fn scan_imports(nb: &Notebook) -> AliasTable {
    let mut running = BTreeMap::new();
    let mut snapshots = Vec::new();
    for analysis in super::analyze(nb) {
        for b in cell_imports(&analysis) {
            running.insert(b.local, b.target);
        }
        snapshots.push((analysis.cell.id.clone(), running.clone()));
    }
    AliasTable { snapshots }
}

/// Qualifies a call chain against the current bindings: the head is replaced
/// by what it was imported as, unbound heads are kept as written.
pub fn qualify(chain: &[String], bindings: &BTreeMap<String, String>) -> String {
    let Some((head, rest)) = chain.split_first() else { return String::new() };
    let mut out = bindings.get(head).cloned().unwrap_or_else(|| head.clone());
    for part in rest {
        out.push('.');
        out.push_str(part);
    }
    out
}
