//! Frozen hand labels for `stage_oracle.ipynb`. Cell `cNN` is the NNth cell;
//! `c00` is markdown, the rest are code.

use modelcard_core::codeview::Stage::{self, *};
use modelcard_core::codeview::StageSource::{self, *};

pub type Expected = (&'static str, Option<Stage>, Option<StageSource>, &'static [&'static str]);

pub const STAGES: [Expected; 14] = [
    ("c01", None, None, &[]),
    ("c02", Some(DataCollection), Some(AutoKb), &["pandas.read_csv"]),
    // Propagation: the only staged predecessor is c02.
    ("c03", Some(DataCollection), Some(AutoPropagated), &[]),
    ("c04", Some(DataCleaning), Some(AutoKb), &["clean.drop_duplicates", "raw.dropna"]),
    // Plotting calls only.
    ("c05", Some(ModelEvaluation), Some(AutoKb), &["matplotlib.pyplot.hist", "matplotlib.pyplot.show"]),
    // Tie-break: plotting loses to any other match.
    ("c06", Some(DataCleaning), Some(AutoKb), &[".fillna"]),
    ("c07", Some(Preprocessing), Some(AutoKb), &["pandas.get_dummies"]),
    (
        "c08",
        Some(Preprocessing),
        Some(AutoKb),
        &[
            "scaler.fit_transform",
            "scaler.transform",
            "sklearn.model_selection.train_test_split",
            "sklearn.preprocessing.StandardScaler",
        ],
    ),
    // Tie-break: tuning and training both match, the later stage wins.
    ("c09", Some(ModelTraining), Some(AutoKb), &["grid.fit", "sklearn.ensemble.RandomForestClassifier"]),
    // Propagation from c09.
    ("c10", Some(ModelTraining), Some(AutoPropagated), &[]),
    (
        "c11",
        Some(ModelEvaluation),
        Some(AutoKb),
        &["best.predict", "sklearn.metrics.accuracy_score", "sklearn.metrics.f1_score"],
    ),
    // Predecessors disagree (c02, c08, c11), so nothing is inherited.
    ("c12", None, None, &[]),
    ("c13", Some(ModelEvaluation), Some(AutoKb), &["sklearn.metrics.f1_score"]),
    ("c14", None, None, &[]),
];

pub const EDGES: [(&str, &str, &str); 31] = [
    ("c01", "c02", "pd"),
    ("c02", "c03", "raw"),
    ("c02", "c04", "raw"),
    ("c04", "c05", "clean"),
    ("c01", "c05", "plt"),
    ("c04", "c06", "clean"),
    ("c01", "c06", "plt"),
    ("c06", "c07", "clean"),
    ("c01", "c07", "pd"),
    ("c01", "c08", "StandardScaler"),
    ("c07", "c08", "X"),
    ("c01", "c08", "train_test_split"),
    ("c07", "c08", "y"),
    ("c01", "c09", "GridSearchCV"),
    ("c01", "c09", "RandomForestClassifier"),
    ("c08", "c09", "X_train"),
    ("c08", "c09", "y_train"),
    ("c09", "c10", "grid"),
    ("c08", "c11", "X_test"),
    ("c01", "c11", "accuracy_score"),
    ("c10", "c11", "best"),
    ("c01", "c11", "f1_score"),
    ("c08", "c11", "y_test"),
    ("c01", "c12", "pd"),
    ("c11", "c12", "pred"),
    ("c02", "c12", "raw"),
    ("c08", "c12", "y_test"),
    ("c01", "c13", "f1_score"),
    ("c01", "c13", "plt"),
    ("c11", "c13", "pred"),
    ("c08", "c13", "y_test"),
];
