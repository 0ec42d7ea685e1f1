use super::{GridSpec, Point2, Polygon};

/// Sample points along the line through `center` with direction
/// `(cos angle, sin angle)`, spaced `step` apart and anchored at `center`
/// (offsets `k * step` for integer `k`). Only points inside `corridor`
/// (boundary included) and inside the grid extent are kept; the result is
/// ordered by `k`.
pub fn sample_slice(center: Point2, angle: f64, corridor: &Polygon, g: &GridSpec, step: f64) -> Vec<Point2> {
    assert!(step > 0.0, "slice step must be positive");
    let dir = Point2::from_angle(angle);
    let crossings = corridor.line_crossings(center, dir);
    if crossings.is_empty() {
        return Vec::new();
    }

    // Inside intervals between consecutive crossings, plus isolated touch
    // points. A midpoint test decides each gap.
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for w in crossings.windows(2) {
        let mid = center + dir * (0.5 * (w[0] + w[1]));
        if corridor.contains(mid) {
            match intervals.last_mut() {
                Some(last) if last.1 >= w[0] => last.1 = w[1],
                _ => intervals.push((w[0], w[1])),
            }
        }
    }
    for &u in &crossings {
        if !intervals.iter().any(|&(a, b)| u >= a && u <= b) {
            intervals.push((u, u));
        }
    }
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    const EPS: f64 = 1e-9;
    let mut out = Vec::new();
    let mut last_k: Option<i64> = None;
    for (a, b) in intervals {
        let k0 = ((a - EPS) / step).ceil() as i64;
        let k1 = ((b + EPS) / step).floor() as i64;
        for k in k0..=k1 {
            if last_k.is_some_and(|l| k <= l) {
                continue;
            }
            last_k = Some(k);
            let p = center + dir * (k as f64 * step);
            if g.contains(p) {
                out.push(p);
            }
        }
    }
    out
}
