use super::{GeometryError, Point2, Polygon, Polyline, Result, Segment};

/// Quadrilateral bounded by two parallel boundary lines crossing `cl` at
/// arclengths `s1` and `s2` with world-frame direction `beta`, each extended
/// `half_width` to either side of the centerline.
///
/// Vertex layout (counter-clockwise): `[c1 - h·b, c2 - h·b, c2 + h·b, c1 + h·b]`
/// where `c1 = cl(s1)`, `c2 = cl(s2)` and `b` is the boundary direction
/// oriented to the left of `c2 - c1`. Edges 3→0 and 1→2 are the two
/// boundaries; see [`crosswalk_boundaries`].
pub fn crosswalk_polygon(cl: &Polyline, s1: f64, s2: f64, beta: f64, half_width: f64) -> Result<Polygon> {
    if !(s1 < s2) {
        return Err(GeometryError::InvalidInterval { s1, s2 });
    }
    let len = cl.length();
    if s1 < 0.0 || s2 > len + 1e-9 {
        return Err(GeometryError::InvalidInterval { s1, s2 });
    }
    if !(half_width > 0.0) {
        return Err(GeometryError::InvalidPolygon(format!("half width {half_width}")));
    }
    let c1 = cl.point_at(s1);
    let c2 = cl.point_at(s2);
    let along = c2 - c1;
    let mut b = Point2::from_angle(beta);
    let side = along.cross(b);
    if side == 0.0 {
        return Err(GeometryError::DegeneratePolygon { area: 0.0 });
    }
    if side < 0.0 {
        b = -b;
    }
    let off = b * half_width;
    Polygon::new(vec![c1 - off, c2 - off, c2 + off, c1 + off])
}

/// The two boundary segments `(through s1, through s2)` of a polygon built
/// by [`crosswalk_polygon`]; `None` for other shapes.
pub fn crosswalk_boundaries(poly: &Polygon) -> Option<[Segment; 2]> {
    let v = poly.vertices();
    if v.len() != 4 {
        return None;
    }
    Some([Segment::new(v[0], v[3]), Segment::new(v[1], v[2])])
}
