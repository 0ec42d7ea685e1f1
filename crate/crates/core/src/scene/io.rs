use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CrosswalkGT, Result, RoadCenterline, Scene, SceneError};
use crate::geometry::{GridSpec, Polygon};

pub const SCENE_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u64,
    grid: GridSpec,
    intersection: Polygon,
    roads: Vec<RoadCenterline>,
    crosswalks: Vec<CrosswalkGT>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u64>,
}

fn parse_error(e: serde_json::Error, field: String) -> SceneError {
    SceneError::ParseError {
        line: e.line(),
        field,
        message: e.to_string(),
    }
}

/// Pretty-printed scene document. Floats use the shortest representation
/// that parses back to the identical value.
pub fn scene_to_string(scene: &Scene) -> String {
    let file = SceneFile {
        version: SCENE_VERSION,
        grid: scene.grid,
        intersection: scene.intersection.clone(),
        roads: scene.roads.clone(),
        crosswalks: scene.crosswalks.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("scene serialization cannot fail");
    s.push('\n');
    s
}

pub fn scene_from_str(text: &str) -> Result<Scene> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| parse_error(e, "version".into()))?;
    match probe.version {
        Some(SCENE_VERSION) => {}
        Some(found) => {
            return Err(SceneError::SchemaVersionMismatch {
                found,
                expected: SCENE_VERSION,
            })
        }
        None => {
            return Err(SceneError::ParseError {
                line: 1,
                field: "version".into(),
                message: "missing field `version`".into(),
            })
        }
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        parse_error(e.into_inner(), field)
    })?;
    let scene = Scene {
        grid: file.grid,
        intersection: file.intersection,
        roads: file.roads,
        crosswalks: file.crosswalks,
    };
    scene.validate().map_err(|(field, message)| SceneError::ParseError {
        line: locate_line(text, &field),
        field,
        message,
    })?;
    Ok(scene)
}

/// Best-effort source line for a field path like `crosswalks[1].road_id`:
/// the line of the n-th occurrence of the leaf key inside the named array.
fn locate_line(text: &str, field: &str) -> usize {
    let leaf = field.rsplit('.').next().unwrap_or(field);
    let key = leaf.split('[').next().unwrap_or(leaf);
    let index = field
        .split('[')
        .nth(1)
        .and_then(|s| s.split(']').next())
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    let section = field.split(['[', '.']).next().unwrap_or("");
    let start = text.find(&format!("\"{section}\"")).unwrap_or(0);
    let needle = format!("\"{key}\"");
    let mut pos = start;
    for _ in 0..=index {
        match text[pos..].find(&needle) {
            Some(off) => pos += off + 1,
            None => return text[..start].lines().count().max(1),
        }
    }
    text[..pos].lines().count()
}

pub fn save_scene(path: impl AsRef<Path>, scene: &Scene) -> Result<()> {
    fs::write(path, scene_to_string(scene))?;
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let text = fs::read_to_string(path)?;
    scene_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, GeneratorConfig};

    #[test]
    fn round_trip_is_exact() {
        let cfg = GeneratorConfig {
            seed: 99,
            ..Default::default()
        };
        for i in 0..5 {
            let scene = generate_scene(&cfg, i).unwrap();
            let text = scene_to_string(&scene);
            let back = scene_from_str(&text).unwrap();
            assert_eq!(back, scene);
            assert_eq!(scene_to_string(&back), text);
        }
    }

    #[test]
    fn unknown_version_rejected() {
        let scene = generate_scene(&GeneratorConfig::default(), 0).unwrap();
        let text = scene_to_string(&scene).replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(
            scene_from_str(&text),
            Err(SceneError::SchemaVersionMismatch { found: 7, .. })
        ));
    }

    #[test]
    fn dangling_road_reference_is_parse_error() {
        let cfg = GeneratorConfig {
            p_no_crosswalk: 0.0,
            ..Default::default()
        };
        let scene = generate_scene(&cfg, 0).unwrap();
        let text = scene_to_string(&scene).replace("\"road_id\": \"r1\"", "\"road_id\": \"r77\"");
        match scene_from_str(&text) {
            Err(SceneError::ParseError { field, line, .. }) => {
                assert_eq!(field, "crosswalks[1].road_id");
                assert!(text.lines().nth(line - 1).unwrap().contains("r77"));
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn malformed_field_reports_path() {
        let scene = generate_scene(&GeneratorConfig::default(), 0).unwrap();
        let text = scene_to_string(&scene).replacen("\"width_px\": ", "\"width_px\": -", 1);
        match scene_from_str(&text) {
            Err(SceneError::ParseError { field, .. }) => assert_eq!(field, "grid.width_px"),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }
}
