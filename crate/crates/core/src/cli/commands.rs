use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;

use super::config::{load_corruption, RunConfig};
use super::{Cli, Command, Common, Failure};
use crate::eval::{
    calibrate_lambda, evaluate_scene, report_table, run_ablation, scene_corruption, table2_suite, AblationSpec,
    Dataset, MetricsReport, LAMBDA_GRID,
};
use crate::featuremaps::{
    corrupt, export_pgm, read_channels, render_oracle, write_grids, FeatureMaps, Grid, CHANNEL_NAMES,
    DT_THRESHOLD_PX,
};
use crate::geometry::{GridSpec, Point2, DEFAULT_RESOLUTION};
use crate::inference::{infer_scene_with_policy, load_predictions, save_predictions, InferenceError};
use crate::losses::total_loss;
use crate::scene::{generate_scene, load_scene, save_scene};

pub(super) fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = base_config(&cli.common)?;
    match &cli.command {
        Command::Infer { lambda_i, policy, .. } => {
            if let Some(l) = lambda_i {
                cfg.energy.lambda_i = *l;
            }
            if let Some(p) = policy {
                cfg.candidate_policy = *p;
            }
        }
        Command::Corrupt { corruption, .. } | Command::Ablate { corruption, .. } => {
            if let Some(p) = corruption {
                cfg.corruption = load_corruption(p)?;
            }
            if let Command::Ablate { lambda_i: Some(l), .. } = &cli.command {
                cfg.energy.lambda_i = *l;
            }
        }
        Command::Loss { lambda_align: Some(l), .. } => cfg.loss.lambda_align = *l,
        _ => {}
    }
    cfg.validate()?;
    eprintln!(
        "crosswalk {} seed={} config=sha256:{}",
        env!("CARGO_PKG_VERSION"),
        cfg.seed,
        cfg.digest()
    );

    match cli.command {
        Command::Gen { count, out } => gen(&cfg, count, &out)?,
        Command::Render { scene, out } => render(&cfg, &scene, &out)?,
        Command::Corrupt { maps, out, .. } => corrupt_maps(&cfg, &maps, &out)?,
        Command::Infer { scene, maps, out, .. } => infer(&cfg, &scene, &maps, &out)?,
        Command::Loss { pred, gt, out, .. } => loss(&cfg, &pred, &gt, out.as_deref())?,
        Command::Eval { scene, preds, out } => eval(&cfg, &scene, &preds, out.as_deref())?,
        Command::Ablate {
            suite,
            scenes,
            calibrate,
            out,
            ..
        } => ablate(cfg, &suite, scenes, calibrate, out.as_deref())?,
        Command::ExportPgm {
            maps,
            channel,
            scale,
            out,
        } => {
            let Some(k) = CHANNEL_NAMES.iter().position(|c| *c == channel) else {
                return Err(Failure::Usage(format!(
                    "unknown channel '{channel}', expected one of {}",
                    CHANNEL_NAMES.join(", ")
                )));
            };
            let scale = scale.unwrap_or(if k == 1 { DT_THRESHOLD_PX as f64 } else { 1.0 });
            export(&maps, k, scale, &out)?;
        }
    }
    Ok(())
}

fn base_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    cfg.generator.seed = cfg.seed;
    Ok(cfg)
}

/// Applies `f` to every item on `jobs` threads; results keep item order and
/// the reported error is the first one in item order.
fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> anyhow::Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> anyhow::Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<anyhow::Result<R>> =
        pool.install(|| items.par_iter().enumerate().map(|(k, t)| f(k, t)).collect());
    results.into_iter().collect()
}

/// Input files: `path` itself, or the files with extension `ext` directly
/// inside it, sorted by name.
fn inputs(path: &Path, ext: &str) -> anyhow::Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).with_context(|| format!("reading {}", path.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == ext) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no .{ext} files in {}", path.display());
    }
    Ok(files)
}

/// Where the file paired with `input` lives: `other` itself in single-file
/// mode, `other/<stem>.<ext>` in directory mode.
fn paired(input: &Path, other: &Path, dir_mode: bool, ext: &str) -> PathBuf {
    if dir_mode {
        let stem = input.file_stem().unwrap_or_default();
        other.join(Path::new(stem).with_extension(ext))
    } else {
        other.to_path_buf()
    }
}

fn prepare_out(out: &Path, dir_mode: bool) -> anyhow::Result<()> {
    if dir_mode {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    }
    Ok(())
}

fn read_maps(path: &Path, spec: Option<&GridSpec>) -> anyhow::Result<FeatureMaps> {
    let (w, h, channels) = read_channels(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = match spec {
        Some(s) => {
            if (w, h) != (s.width_px, s.height_px) {
                return Err(InferenceError::GridMismatch {
                    maps_w: w,
                    maps_h: h,
                    grid_w: s.width_px,
                    grid_h: s.height_px,
                })
                .with_context(|| path.display().to_string());
            }
            *s
        }
        None => GridSpec::new(Point2::new(0.0, 0.0), DEFAULT_RESOLUTION, w, h)?,
    };
    FeatureMaps::from_channels(spec, channels).with_context(|| path.display().to_string())
}

fn gen(cfg: &RunConfig, count: usize, out: &Path) -> anyhow::Result<()> {
    prepare_out(out, true)?;
    let indices: Vec<u64> = (0..count as u64).collect();
    par_map(cfg.jobs, &indices, |_, &i| {
        let scene = generate_scene(&cfg.generator, i)?;
        let path = out.join(format!("scene_{i:05}.json"));
        save_scene(&path, &scene).with_context(|| path.display().to_string())
    })?;
    Ok(())
}

fn render(cfg: &RunConfig, scene: &Path, out: &Path) -> anyhow::Result<()> {
    let dir_mode = scene.is_dir();
    let files = inputs(scene, "json")?;
    prepare_out(out, dir_mode)?;
    par_map(cfg.jobs, &files, |_, f| {
        let s = load_scene(f).with_context(|| f.display().to_string())?;
        let dest = paired(f, out, dir_mode, "cwg");
        write_grids(&dest, &render_oracle(&s)).with_context(|| dest.display().to_string())
    })?;
    Ok(())
}

fn corrupt_maps(cfg: &RunConfig, maps: &Path, out: &Path) -> anyhow::Result<()> {
    let dir_mode = maps.is_dir();
    let files = inputs(maps, "cwg")?;
    prepare_out(out, dir_mode)?;
    par_map(cfg.jobs, &files, |k, f| {
        let m = read_maps(f, None)?;
        let c = corrupt(&m, &scene_corruption(&cfg.corruption, cfg.seed, k as u64))?;
        let dest = paired(f, out, dir_mode, "cwg");
        write_grids(&dest, &c).with_context(|| dest.display().to_string())
    })?;
    Ok(())
}

fn infer(cfg: &RunConfig, scene: &Path, maps: &Path, out: &Path) -> anyhow::Result<()> {
    let dir_mode = scene.is_dir();
    let files = inputs(scene, "json")?;
    prepare_out(out, dir_mode)?;
    par_map(cfg.jobs, &files, |_, f| {
        let s = load_scene(f).with_context(|| f.display().to_string())?;
        let m = read_maps(&paired(f, maps, dir_mode, "cwg"), Some(&s.grid))?;
        let preds = infer_scene_with_policy(s.coarse_map(), &m, &cfg.energy, cfg.candidate_policy)
            .with_context(|| f.display().to_string())?;
        let dest = paired(f, out, dir_mode, "json");
        save_predictions(&dest, &preds).with_context(|| dest.display().to_string())
    })?;
    Ok(())
}

fn loss(cfg: &RunConfig, pred: &Path, gt: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let p = read_maps(pred, None)?;
    let g = read_maps(gt, None)?;
    let report = total_loss(&p, &g, &cfg.loss)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(out, &text)
}

fn eval(cfg: &RunConfig, scene: &Path, preds: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let dir_mode = scene.is_dir();
    let files = inputs(scene, "json")?;
    let records = par_map(cfg.jobs, &files, |k, f| {
        let s = load_scene(f).with_context(|| f.display().to_string())?;
        let pf = paired(f, preds, dir_mode, "json");
        let p = load_predictions(&pf).with_context(|| pf.display().to_string())?;
        evaluate_scene(&s, k as u64, &p).with_context(|| f.display().to_string())
    })?;
    emit(out, &report_table(&[MetricsReport::aggregate("eval", records)]))
}

fn ablate(mut cfg: RunConfig, suite: &str, scenes: usize, calibrate: bool, out: Option<&Path>) -> Result<(), Failure> {
    if cfg.specs.is_empty() && suite != "table2" {
        return Err(Failure::Usage(format!("unknown suite '{suite}', expected table2")));
    }
    let dataset = Dataset::new(cfg.generator.clone(), scenes);
    if calibrate {
        let base = AblationSpec {
            name: "calibration".into(),
            candidate_policy: cfg.candidate_policy,
            oracle_injection: Vec::new(),
            corruption: cfg.corruption,
            energy: cfg.energy.clone(),
        };
        let cal = calibrate_lambda(&base, &dataset.held_out(scenes), &LAMBDA_GRID, cfg.jobs).map_err(anyhow::Error::from)?;
        eprintln!("calibrated lambda_i={}", cal.lambda_i);
        cfg.energy.lambda_i = cal.lambda_i;
    }
    let specs = if cfg.specs.is_empty() {
        table2_suite(cfg.corruption, cfg.energy.clone())
    } else {
        cfg.specs.clone()
    };
    let reports = run_ablation(&specs, &dataset, cfg.jobs).map_err(anyhow::Error::from)?;
    emit(out, &report_table(&reports))?;
    Ok(())
}

fn export(maps: &Path, channel: usize, scale: f64, out: &Path) -> anyhow::Result<()> {
    let m = read_maps(maps, None)?;
    let grid: &Grid = m.channels()[channel];
    export_pgm(grid, out, scale).with_context(|| out.display().to_string())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| p.display().to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
