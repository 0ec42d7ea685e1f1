//! Crosswalk drawing at road intersections.
//!
//! Given a coarse map (intersection polygon plus road centerlines) and three
//! bird's-eye-view feature maps (crosswalk segmentation, an inverse distance
//! transform peaking on crosswalk boundaries, and a boundary-angle field),
//! [`inference::infer_scene`] draws one crosswalk polygon per road by exact
//! maximization of a boundary/segmentation energy over position pairs and a
//! small set of angle hypotheses.
//!
//! The rest of the crate supplies what is needed to exercise that end to end
//! without a learned model: a synthetic scene generator ([`scene`]), an oracle
//! renderer and corruption models for the feature maps ([`featuremaps`]), the
//! multi-task training losses ([`losses`]), and metrics plus an ablation
//! runner ([`eval`]).

pub mod cli;
pub mod eval;
pub mod featuremaps;
pub mod geometry;
pub mod inference;
pub mod losses;
pub mod rng;
pub mod scene;
