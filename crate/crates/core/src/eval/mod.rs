//! Evaluation: boundary distance, precision/recall at distance thresholds,
//! per-scene IoU, and the ablation runner that sweeps candidate policies,
//! corruptions and oracle-channel injections over a seeded scene stream.

mod ablation;
mod metrics;

use thiserror::Error;

use crate::featuremaps::FeatureMapError;
use crate::inference::InferenceError;
use crate::scene::SceneError;

pub use ablation::{
    benchmark_corruption, calibrate_lambda, evaluate_scene, prepare_maps, report_table, run_ablation,
    scene_corruption, table2_suite, AblationSpec, Calibration, Dataset, MetricsReport, SceneRecord,
    ANGLE_TOLERANCE_DEG, HELD_OUT_OFFSET, LAMBDA_GRID,
};
pub use metrics::{
    crosswalk_distance, polygon_distance, polygon_set_iou, precision_recall, scene_iou, PrCounts,
    PrecisionRecall, BOUNDARY_SAMPLE_STEP, TAUS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction on road {pred} compared with ground truth on road {gt}")]
    RoadMismatch { pred: String, gt: String },
    #[error("duplicate spec name '{0}'")]
    DuplicateName(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    FeatureMaps(#[from] FeatureMapError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
