use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2, Polygon, Result, Segment};

/// An open polyline parameterized by arclength from its first vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    vertices: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = GeometryError;

    fn try_from(v: Vec<Point2>) -> Result<Self> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(p: Polyline) -> Self {
        p.vertices
    }
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(GeometryError::InvalidPolyline(format!(
                "{} vertices, need at least 2",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::InvalidPolyline("non-finite vertex".into()));
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for w in vertices.windows(2) {
            let d = w[0].distance(w[1]);
            if d == 0.0 {
                return Err(GeometryError::InvalidPolyline("repeated vertex".into()));
            }
            cumulative.push(cumulative.last().unwrap() + d);
        }
        Ok(Self {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    /// Arclength at which each vertex sits.
    pub fn vertex_arclengths(&self) -> &[f64] {
        &self.cumulative
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let i = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.vertices.len() - 2),
            Err(i) => (i - 1).min(self.vertices.len() - 2),
        };
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        (i, (s - self.cumulative[i]) / seg_len)
    }

    /// Point at arclength `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        let (i, t) = self.locate(s);
        let a = self.vertices[i];
        let b = self.vertices[i + 1];
        a + (b - a) * t
    }

    /// Unit tangent at arclength `s`.
    pub fn tangent_at(&self, s: f64) -> Point2 {
        let (i, _) = self.locate(s);
        (self.vertices[i + 1] - self.vertices[i]).normalized()
    }

    /// Unit vector from the first to the last vertex.
    pub fn mean_direction(&self) -> Point2 {
        let d = *self.vertices.last().unwrap() - self.vertices[0];
        if d.norm() == 0.0 {
            self.tangent_at(0.0)
        } else {
            d.normalized()
        }
    }

    /// Sub-polyline covering arclengths `[s0, s1]` (clamped).
    pub fn slice(&self, s0: f64, s1: f64) -> Vec<Point2> {
        let s0 = s0.clamp(0.0, self.length());
        let s1 = s1.clamp(0.0, self.length());
        let mut pts = vec![self.point_at(s0)];
        for (v, &c) in self.vertices.iter().zip(&self.cumulative) {
            if c > s0 && c < s1 {
                pts.push(*v);
            }
        }
        pts.push(self.point_at(s1));
        pts
    }

    /// Band of half-width `half_width` around the sub-polyline `[s0, s1]`,
    /// with mitered joins and flat ends.
    pub fn corridor(&self, s0: f64, s1: f64, half_width: f64) -> Result<Polygon> {
        let mut pts = self.slice(s0, s1);
        pts.dedup_by(|a, b| a.distance(*b) < 1e-12);
        if pts.len() < 2 {
            return Err(GeometryError::InvalidInterval { s1: s0, s2: s1 });
        }
        let normals: Vec<Point2> = pts.windows(2).map(|w| (w[1] - w[0]).normalized().perp()).collect();
        let mut left = Vec::with_capacity(pts.len());
        let mut right = Vec::with_capacity(pts.len());
        for (k, p) in pts.iter().enumerate() {
            let n = if k == 0 {
                normals[0]
            } else if k == pts.len() - 1 {
                normals[k - 1]
            } else {
                let m = (normals[k - 1] + normals[k]).normalized();
                m * (1.0 / m.dot(normals[k]).max(0.2))
            };
            left.push(*p + n * half_width);
            right.push(*p - n * half_width);
        }
        right.reverse();
        right.extend(left);
        Polygon::new(right)
    }
}
