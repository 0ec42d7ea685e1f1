use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{scene_iou, PrCounts, TAUS};
use super::{EvalError, Result};
use crate::featuremaps::{corrupt, render_oracle, Channel, CorruptionConfig, FeatureMaps};
use crate::geometry::folded_difference;
use crate::inference::{infer_scene_with_policy, perpendicular_angle, CandidatePolicy, CrosswalkPrediction, EnergyConfig};
use crate::rng::{self, DOMAIN_CORRUPT};
use crate::scene::{generate_scene, GeneratorConfig, Range, Scene};

/// Tolerance for the angle-accuracy statistic, degrees.
pub const ANGLE_TOLERANCE_DEG: f64 = 5.0;

/// Values of `lambda_i` tried by [`calibrate_lambda`].
pub const LAMBDA_GRID: [f64; 9] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];

/// Scene indices used for calibration start here, disjoint from evaluation
/// indices.
pub const HELD_OUT_OFFSET: u64 = 1 << 40;

/// One experiment row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSpec {
    pub name: String,
    #[serde(default)]
    pub candidate_policy: CandidatePolicy,
    /// Channels replaced by their clean oracle after corruption.
    #[serde(default)]
    pub oracle_injection: Vec<Channel>,
    #[serde(default)]
    pub corruption: CorruptionConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
}

/// The seeded scene stream an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub generator: GeneratorConfig,
    pub first_index: u64,
    pub n_scenes: usize,
}

impl Dataset {
    pub fn new(generator: GeneratorConfig, n_scenes: usize) -> Self {
        Self {
            generator,
            first_index: 0,
            n_scenes,
        }
    }

    /// Same generator, disjoint index range.
    pub fn held_out(&self, n_scenes: usize) -> Self {
        Self {
            generator: self.generator.clone(),
            first_index: self.first_index + HELD_OUT_OFFSET,
            n_scenes,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> {
        self.first_index..self.first_index + self.n_scenes as u64
    }
}

/// Corruption settings for scene `index`: the configured seed is mixed with
/// the dataset seed and the index.
pub fn scene_corruption(cfg: &CorruptionConfig, dataset_seed: u64, index: u64) -> CorruptionConfig {
    let base = rng::derive_seed(dataset_seed, cfg.seed, DOMAIN_CORRUPT);
    CorruptionConfig {
        seed: rng::derive_seed(base, index, DOMAIN_CORRUPT),
        ..*cfg
    }
}

/// The degradation used for the benchmark experiments: blurred, eroded maps
/// with large holes and a jittered angle field.
pub fn benchmark_corruption() -> CorruptionConfig {
    CorruptionConfig {
        blur_sigma: 2.0,
        noise_sigma: 0.0,
        hole_rate: 0.15,
        hole_size: Range::new(50.0, 200.0),
        erosion: 2.0,
        angle_jitter: 10.0,
        seed: 0,
    }
}

/// The eight ablation rows: the full method, three restricted angle
/// searches, and four oracle injections.
pub fn table2_suite(corruption: CorruptionConfig, energy: EnergyConfig) -> Vec<AblationSpec> {
    let row = |name: &str, policy, inject: &[Channel]| AblationSpec {
        name: name.to_string(),
        candidate_policy: policy,
        oracle_injection: inject.to_vec(),
        corruption,
        energy: energy.clone(),
    };
    use CandidatePolicy::*;
    vec![
        row("Ours", Full, &[]),
        row("No Ang Search", NoOffsets, &[]),
        row("No Cent Ang", NoCenterline, &[]),
        row("No Pred Ang", PerpendicularOnly, &[]),
        row("GT DT", Full, &[Channel::Dt]),
        row("GT Seg", Full, &[Channel::Seg]),
        row("GT Ang", Full, &[Channel::Angle]),
        row("GT DT+S+A", Full, &[Channel::Dt, Channel::Seg, Channel::Angle]),
    ]
}

/// Scores for one scene under one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub index: u64,
    pub iou: f64,
    pub counts: PrCounts,
    /// Ground-truth crosswalks scored for angle accuracy.
    pub n_angles: usize,
    /// Of those, how many had the angle mode (or the perpendicular when no
    /// mode exists) within tolerance.
    pub angle_ok_before: usize,
    /// Of those, how many had the searched angle within tolerance.
    pub angle_ok_after: usize,
}

/// Scores predictions against the scene's ground truth.
pub fn evaluate_scene(scene: &Scene, index: u64, preds: &[CrosswalkPrediction]) -> Result<SceneRecord> {
    let counts = PrCounts::from_scene(preds, &scene.crosswalks)?;
    let iou = scene_iou(preds, &scene.crosswalks, &scene.grid);
    let tol = ANGLE_TOLERANCE_DEG.to_radians() + 1e-12;
    let (mut n, mut before, mut after) = (0, 0, 0);
    for gt in &scene.crosswalks {
        let (Some(p), Some(road)) = (preds.iter().find(|p| p.road_id == gt.road_id), scene.road(&gt.road_id)) else {
            continue;
        };
        n += 1;
        let mode = p.angle_mode.unwrap_or_else(|| perpendicular_angle(&road.centerline));
        before += (folded_difference(mode, gt.beta).abs() <= tol) as usize;
        after += (folded_difference(p.beta, gt.beta).abs() <= tol) as usize;
    }
    Ok(SceneRecord {
        index,
        iou,
        counts,
        n_angles: n,
        angle_ok_before: before,
        angle_ok_after: after,
    })
}

/// Aggregated metrics for one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub taus: [f64; 4],
    pub precision_at: [f64; 4],
    pub recall_at: [f64; 4],
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    /// Mean of per-scene IoU.
    pub mean_iou: f64,
    pub angle_within_5deg_before: f64,
    pub angle_within_5deg_after: f64,
    pub per_scene: Vec<SceneRecord>,
}

impl MetricsReport {
    /// Pools counts over scenes, then divides. Empty angle sets report 1.0.
    pub fn aggregate(name: &str, per_scene: Vec<SceneRecord>) -> Self {
        let mut counts = PrCounts::default();
        let (mut n, mut before, mut after) = (0, 0, 0);
        let mut iou_sum = 0.0;
        for r in &per_scene {
            counts.add(&r.counts);
            n += r.n_angles;
            before += r.angle_ok_before;
            after += r.angle_ok_after;
            iou_sum += r.iou;
        }
        let pr = counts.rates();
        let frac = |k: usize| if n == 0 { 1.0 } else { k as f64 / n as f64 };
        Self {
            name: name.to_string(),
            taus: TAUS,
            precision_at: pr.precision_at,
            recall_at: pr.recall_at,
            precision_undefined: pr.precision_undefined,
            recall_undefined: pr.recall_undefined,
            mean_iou: if per_scene.is_empty() {
                1.0
            } else {
                iou_sum / per_scene.len() as f64
            },
            angle_within_5deg_before: frac(before),
            angle_within_5deg_after: frac(after),
            per_scene,
        }
    }
}

/// Feature maps a spec sees for one scene: clean oracle, corrupted, then the
/// selected channels restored.
pub fn prepare_maps(clean: &FeatureMaps, corrupted: &FeatureMaps, inject: &[Channel]) -> FeatureMaps {
    let mut maps = corrupted.clone();
    for ch in inject {
        maps.inject(clean, *ch);
    }
    maps
}

fn run_scene(specs: &[AblationSpec], dataset: &Dataset, index: u64) -> Result<Vec<SceneRecord>> {
    let scene = generate_scene(&dataset.generator, index)?;
    let clean = render_oracle(&scene);
    let mut cache: Vec<(CorruptionConfig, FeatureMaps)> = Vec::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let ccfg = scene_corruption(&spec.corruption, dataset.generator.seed, index);
        if !cache.iter().any(|(c, _)| *c == ccfg) {
            let maps = corrupt(&clean, &ccfg)?;
            cache.push((ccfg, maps));
        }
        let corrupted = &cache.iter().find(|(c, _)| *c == ccfg).unwrap().1;
        let preds = if spec.oracle_injection.is_empty() {
            infer_scene_with_policy(scene.coarse_map(), corrupted, &spec.energy, spec.candidate_policy)?
        } else {
            let maps = prepare_maps(&clean, corrupted, &spec.oracle_injection);
            infer_scene_with_policy(scene.coarse_map(), &maps, &spec.energy, spec.candidate_policy)?
        };
        out.push(evaluate_scene(&scene, index, &preds)?);
    }
    Ok(out)
}

/// Runs every spec on every scene of `dataset` and aggregates one report per
/// spec, in spec order. Scenes are processed on `jobs` worker threads; the
/// output does not depend on `jobs`.
pub fn run_ablation(specs: &[AblationSpec], dataset: &Dataset, jobs: usize) -> Result<Vec<MetricsReport>> {
    let mut names = HashSet::new();
    for s in specs {
        if !names.insert(s.name.as_str()) {
            return Err(EvalError::DuplicateName(s.name.clone()));
        }
        s.energy.validate()?;
        s.corruption.validate()?;
    }
    let indices: Vec<u64> = dataset.indices().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(e.to_string()))?;
    let per_scene: Vec<Vec<SceneRecord>> =
        pool.install(|| indices.par_iter().map(|&i| run_scene(specs, dataset, i)).collect::<Result<_>>())?;
    let mut columns: Vec<Vec<SceneRecord>> = vec![Vec::with_capacity(indices.len()); specs.len()];
    for row in per_scene {
        for (k, r) in row.into_iter().enumerate() {
            columns[k].push(r);
        }
    }
    Ok(specs
        .iter()
        .zip(columns)
        .map(|(s, recs)| MetricsReport::aggregate(&s.name, recs))
        .collect())
}

/// Outcome of a `lambda_i` grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda_i: f64,
    /// `(lambda_i, mean IoU)` for every grid value.
    pub scores: Vec<(f64, f64)>,
}

/// Picks the `lambda_i` from `grid` with the highest mean IoU on
/// `held_out` (first one on ties), all other settings taken from `base`.
pub fn calibrate_lambda(base: &AblationSpec, held_out: &Dataset, grid: &[f64], jobs: usize) -> Result<Calibration> {
    let specs: Vec<AblationSpec> = grid
        .iter()
        .map(|&l| AblationSpec {
            name: format!("lambda={l}"),
            energy: EnergyConfig {
                lambda_i: l,
                ..base.energy.clone()
            },
            ..base.clone()
        })
        .collect();
    let reports = run_ablation(&specs, held_out, jobs)?;
    let scores: Vec<(f64, f64)> = grid.iter().cloned().zip(reports.iter().map(|r| r.mean_iou)).collect();
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.1 > best.1 {
            best = *s;
        }
    }
    Ok(Calibration {
        lambda_i: best.0,
        scores,
    })
}

/// Comma-separated table, one row per report.
pub fn report_table(reports: &[MetricsReport]) -> String {
    let mut s = String::from("name,P@20,P@40,P@60,P@80,R@20,R@40,R@60,R@80,mIoU,angle5_before,angle5_after\n");
    for r in reports {
        let name = if r.name.contains([',', '"']) {
            format!("\"{}\"", r.name.replace('"', "\"\""))
        } else {
            r.name.clone()
        };
        s.push_str(&name);
        for v in r.precision_at.iter().chain(&r.recall_at) {
            write!(s, ",{v:.4}").unwrap();
        }
        writeln!(
            s,
            ",{:.4},{:.4},{:.4}",
            r.mean_iou, r.angle_within_5deg_before, r.angle_within_5deg_after
        )
        .unwrap();
    }
    s
}
