use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CrosswalkPrediction, InferenceError, Result};

pub const PREDICTION_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionFile {
    version: u64,
    predictions: Vec<CrosswalkPrediction>,
}

pub fn predictions_to_string(preds: &[CrosswalkPrediction]) -> String {
    let file = PredictionFile {
        version: PREDICTION_VERSION,
        predictions: preds.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("prediction serialization cannot fail");
    s.push('\n');
    s
}

pub fn predictions_from_str(text: &str) -> Result<Vec<CrosswalkPrediction>> {
    let file: PredictionFile = serde_json::from_str(text).map_err(|e| InferenceError::Parse(e.to_string()))?;
    if file.version != PREDICTION_VERSION {
        return Err(InferenceError::Parse(format!(
            "unsupported version {} (expected {PREDICTION_VERSION})",
            file.version
        )));
    }
    Ok(file.predictions)
}

pub fn save_predictions(path: impl AsRef<Path>, preds: &[CrosswalkPrediction]) -> Result<()> {
    fs::write(path, predictions_to_string(preds))?;
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<CrosswalkPrediction>> {
    predictions_from_str(&fs::read_to_string(path)?)
}
