use super::{GeometryError, Grid, GridSpec, Polygon, Result, Segment};

const CENTER_EPS: f64 = 1e-9;

fn mark_range(mask: &mut Grid, row: usize, g: &GridSpec, x0: f64, x1: f64, value: f32) {
    let c0 = ((x0 - CENTER_EPS - g.origin.x) / g.resolution).ceil().max(0.0);
    let c1 = ((x1 + CENTER_EPS - g.origin.x) / g.resolution)
        .floor()
        .min(g.width_px as f64 - 1.0);
    if c0 > c1 {
        return;
    }
    for c in c0 as usize..=c1 as usize {
        mask.set(row, c, value);
    }
}

/// Binary mask of the pixels whose centre lies inside `poly`, boundary
/// included.
///
/// Scanline fill: for each pixel row, crossings found with the half-open edge
/// rule bound the interior spans, and points exactly on an edge (including
/// vertex apexes the half-open rule skips) are added back explicitly.
pub fn rasterize_polygon(poly: &Polygon, g: &GridSpec) -> Result<Grid> {
    let area = poly.area();
    if area < g.pixel_area() {
        return Err(GeometryError::DegeneratePolygon { area });
    }
    let mut mask = Grid::zeros(*g);
    fill_polygon(&mut mask, poly, 1.0);
    Ok(mask)
}

/// Writes `value` into every pixel of `grid` covered by `poly` (same
/// membership rule as [`rasterize_polygon`]), touching only the rows the
/// polygon spans.
pub fn fill_polygon(grid: &mut Grid, poly: &Polygon, value: f32) {
    let g = grid.spec;
    let (min, max) = poly.bbox();
    let Some(((r0, r1), _)) = g.index_window(min, max) else {
        return;
    };
    let v = poly.vertices();
    let n = v.len();
    let mut crossings: Vec<f64> = Vec::with_capacity(8);
    for row in r0..=r1 {
        let y = g.origin.y + row as f64 * g.resolution;
        crossings.clear();
        let mut j = n - 1;
        for i in 0..n {
            let a = v[i];
            let b = v[j];
            j = i;
            if a.y == b.y {
                if a.y == y {
                    mark_range(grid, row, &g, a.x.min(b.x), a.x.max(b.x), value);
                }
                continue;
            }
            if y < a.y.min(b.y) || y > a.y.max(b.y) {
                continue;
            }
            let x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            mark_range(grid, row, &g, x, x, value);
            if (a.y > y) != (b.y > y) {
                crossings.push(x);
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in crossings.chunks_exact(2) {
            mark_range(grid, row, &g, pair[0], pair[1], value);
        }
    }
}

/// Exact Euclidean distance (meters) from every pixel centre to the nearest
/// segment. Quadratic cost; meant as a reference for tests.
///
/// `segments` must be nonempty.
pub fn brute_force_distance_field(segments: &[Segment], g: &GridSpec) -> Grid {
    assert!(!segments.is_empty(), "distance field needs at least one segment");
    let mut out = Grid::zeros(*g);
    for row in 0..g.height_px {
        for col in 0..g.width_px {
            let p = g.pixel_to_world(row, col);
            let d = segments
                .iter()
                .map(|s| s.distance_to(p))
                .fold(f64::INFINITY, f64::min);
            out.set(row, col, d as f32);
        }
    }
    out
}
