use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::notebook::{CellId, Notebook};

use super::CodeAnalysis;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: CellId,
    pub to: CellId,
    pub variable: String,
}

/// Cross-cell def/use edges between code cells.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: Vec<CellId>,
    /// Sorted by target cell position, then variable name.
    pub edges: Vec<DependencyEdge>,
}

impl DependencyGraph {
    pub fn predecessors<'a>(&'a self, cell: &'a CellId) -> impl Iterator<Item = &'a CellId> + 'a {
        self.edges.iter().filter(move |e| &e.to == cell).map(|e| &e.from)
    }
}

pub fn build_dependency_graph(nb: &Notebook) -> DependencyGraph {
    graph_from(&super::analyze(nb))
}

pub(crate) fn graph_from(analyses: &[CodeAnalysis<'_>]) -> DependencyGraph {
    let mut last_def: HashMap<&str, &CellId> = HashMap::new();
    let mut nodes = Vec::with_capacity(analyses.len());
    let mut edges = Vec::new();
    for a in analyses {
        let id = &a.cell.id;
        nodes.push(id.clone());
        let Some(facts) = &a.facts else { continue };
        let mut uses: Vec<&str> = facts.uses.iter().map(String::as_str).collect();
        uses.sort_unstable();
        for var in uses {
            if let Some(from) = last_def.get(var) {
                edges.push(DependencyEdge { from: (*from).clone(), to: id.clone(), variable: var.to_owned() });
            }
        }
        for def in &facts.defs {
            last_def.insert(def, id);
        }
    }
    DependencyGraph { nodes, edges }
}
