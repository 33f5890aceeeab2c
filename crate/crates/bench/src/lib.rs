//! Synthetic inputs for the engine benchmarks.

use modelcard_core::{parse_notebook, serialize_notebook, CardTemplate, Notebook};

const CODE: [&str; 6] = [
    "import pandas as pd\nimport matplotlib.pyplot as plt\nfrom sklearn.ensemble import RandomForestClassifier",
    "raw{i} = pd.read_csv(\"part{i}.csv\")",
    "clean{i} = raw{i}.dropna().drop_duplicates()",
    "X{i} = pd.get_dummies(clean{i})\nmodel{i} = RandomForestClassifier()\nmodel{i}.fit(X{i}, clean{i}[\"y\"])",
    "pred{i} = model{i}.predict(X{i})\nplt.hist(pred{i})",
    "summary{i} = f\"{{len(raw{i})}} rows\"",
];

/// A notebook of `cells` cells: mostly code following a small pipeline, with
/// markdown every seventh cell. The first nine markdown cells hold the card.
pub fn synthetic_notebook(cells: usize) -> Notebook {
    let tpl = CardTemplate::default_template();
    let mut out = Vec::with_capacity(cells);
    for n in 0..cells {
        let round = n / CODE.len();
        let cell = if n % 7 == 6 {
            let source = match tpl.sections.get(n / 7) {
                Some(section) => format!(
                    "<!-- model-card-section: {} -->\n## {}\n\nNotes for round {round}.",
                    section.id, section.title
                ),
                None => format!("### Round {round}\n\nObservations."),
            };
            serde_json::json!({"cell_type": "markdown", "id": format!("m{n}"), "metadata": {}, "source": source})
        } else {
            let source = CODE[n % CODE.len()].replace("{i}", &round.to_string());
            serde_json::json!({
                "cell_type": "code", "id": format!("c{n}"), "metadata": {},
                "execution_count": null, "outputs": [], "source": source,
            })
        };
        out.push(cell);
    }
    let doc = serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": out});
    parse_notebook(&serde_json::to_vec(&doc).expect("json")).expect("synthetic notebook parses")
}

/// Serialized form of [`synthetic_notebook`].
pub fn synthetic_notebook_bytes(cells: usize) -> Vec<u8> {
    serialize_notebook(&synthetic_notebook(cells))
}

/// A markdown card of roughly `sections` headed sections.
pub fn synthetic_card(sections: usize) -> String {
    let mut s = String::new();
    for i in 0..sections {
        s.push_str(&format!(
            "## Section {i}\n\nVersion {i}.0 released 2024-01-0{}. Accuracy 0.9{i}. \
             Download the [training data](https://example.org/data/{i}.zip).\n\n```python\n!pip install x\n```\n\n",
            i % 9 + 1
        ));
    }
    s
}
