use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// ML pipeline stage of a code cell. Ordering follows the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DataCollection,
    DataCleaning,
    Preprocessing,
    HyperparameterTuning,
    ModelTraining,
    ModelEvaluation,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::DataCollection,
        Stage::DataCleaning,
        Stage::Preprocessing,
        Stage::HyperparameterTuning,
        Stage::ModelTraining,
        Stage::ModelEvaluation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::DataCollection => "data_collection",
            Stage::DataCleaning => "data_cleaning",
            Stage::Preprocessing => "preprocessing",
            Stage::HyperparameterTuning => "hyperparameter_tuning",
            Stage::ModelTraining => "model_training",
            Stage::ModelEvaluation => "model_evaluation",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown stage `{0}`")]
pub struct UnknownStage(pub String);

impl FromStr for Stage {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| UnknownStage(s.to_owned()))
    }
}

/// How a cell's stage was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageSource {
    AutoKb,
    AutoPropagated,
    Manual,
}

impl StageSource {
    pub fn as_str(self) -> &'static str {
        match self {
            StageSource::AutoKb => "auto_kb",
            StageSource::AutoPropagated => "auto_propagated",
            StageSource::Manual => "manual",
        }
    }
}

impl FromStr for StageSource {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto_kb" => Ok(StageSource::AutoKb),
            "auto_propagated" => Ok(StageSource::AutoPropagated),
            "manual" => Ok(StageSource::Manual),
            other => Err(UnknownStage(other.to_owned())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_stages_in_pipeline_order() {
        assert_eq!(Stage::ALL.len(), 6);
        assert!(Stage::ALL.windows(2).all(|w| w[0] < w[1]));
        for st in Stage::ALL {
            assert_eq!(st.as_str().parse::<Stage>().unwrap(), st);
            assert_eq!(serde_json::to_value(st).unwrap(), st.as_str());
        }
        assert!("training".parse::<Stage>().is_err());
    }
}
