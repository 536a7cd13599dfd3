//! Planar convex hulls and the distance/containment predicates built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{DirectionalFrame, PlanePoint, Vec2};

/// Relative cross-product threshold below which three points count as collinear.
pub const COLLINEAR_EPS: f64 = 1e-12;

/// A convex polygon with counter-clockwise vertices and no three collinear.
///
/// Zero, one and two vertices represent the empty set, a point and a segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", from = "Vec<[f64; 2]>")]
pub struct ConvexPolygon {
    vertices: Vec<PlanePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonKind {
    Empty,
    Point,
    Segment,
    Polygon,
}

impl ConvexPolygon {
    pub fn vertices(&self) -> &[PlanePoint] {
        &self.vertices
    }

    pub fn kind(&self) -> PolygonKind {
        match self.vertices.len() {
            0 => PolygonKind::Empty,
            1 => PolygonKind::Point,
            2 => PolygonKind::Segment,
            _ => PolygonKind::Polygon,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; zero for degenerate hulls.
    pub fn area(&self) -> f64 {
        hull_area(self)
    }

    pub fn diameter(&self) -> f64 {
        hull_diameter(self)
    }

    /// Area centroid for proper polygons, vertex mean otherwise.
    pub fn centroid(&self) -> Option<PlanePoint> {
        let v = &self.vertices;
        match v.len() {
            0 => None,
            1 | 2 => Some(vertex_mean(v)),
            n => {
                let mut a2 = 0.0;
                let mut c = Vec2::ZERO;
                for i in 0..n {
                    let (p, q) = (v[i] - v[0], v[(i + 1) % n] - v[0]);
                    let w = p.cross(q);
                    a2 += w;
                    c += (p + q) * w;
                }
                if a2.abs() < f64::MIN_POSITIVE {
                    return Some(vertex_mean(v));
                }
                Some(v[0] + c / (3.0 * a2))
            }
        }
    }

    /// Is `p` inside the polygon or on its boundary (up to `tol`)?
    pub fn contains_point(&self, p: PlanePoint, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0].dist(p) <= tol,
            2 => segment_distance(p, self.vertices[0], self.vertices[1]) <= tol,
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let e = b - a;
                // signed distance to the left of edge a->b
                e.cross(p - a) / e.norm() >= -tol
            }),
        }
    }

    /// Euclidean distance from `p` to the polygon region (zero inside).
    pub fn distance_to(&self, p: PlanePoint) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 => f64::INFINITY,
            1 => v[0].dist(p),
            2 => segment_distance(p, v[0], v[1]),
            n => {
                if self.contains_point(p, 0.0) {
                    return 0.0;
                }
                (0..n)
                    .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// The pair of vertices realizing the diameter.
    pub fn diameter_pair(&self) -> Option<(PlanePoint, PlanePoint)> {
        let v = &self.vertices;
        match v.len() {
            0 => None,
            1 => Some((v[0], v[0])),
            2 => Some((v[0], v[1])),
            _ => {
                let (i, j) = calipers(v);
                Some((v[i], v[j]))
            }
        }
    }
}

impl From<ConvexPolygon> for Vec<[f64; 2]> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices.iter().map(|v| [v.x, v.y]).collect()
    }
}

impl From<Vec<[f64; 2]>> for ConvexPolygon {
    /// Re-hulls the vertex list, so any point list yields a valid polygon.
    fn from(v: Vec<[f64; 2]>) -> Self {
        let pts: Vec<Vec2> = v.into_iter().map(|[x, y]| Vec2::new(x, y)).collect();
        convex_hull(&pts)
    }
}

fn vertex_mean(v: &[Vec2]) -> Vec2 {
    v.iter().fold(Vec2::ZERO, |acc, p| acc + *p) / v.len() as f64
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let len2 = e.norm_sq();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(e) / len2).clamp(0.0, 1.0);
    p.dist(a + e * t)
}

/// Indices (into `points`) of the hull vertices, counter-clockwise starting
/// from the lowest-leftmost point. Duplicates map to their first occurrence.
pub fn convex_hull_indices(points: &[PlanePoint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(i.cmp(&j))
    });
    idx.dedup_by(|j, i| points[*i] == points[*j]);
    if idx.len() <= 1 {
        return idx;
    }
    let (mut lo, mut hi) = (points[idx[0]], points[idx[0]]);
    for &i in &idx {
        let p = points[i];
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    // scale is the coordinate magnitude, so clusters spread only by rounding
    // (e.g. φ_n of a rigid translation) collapse to a point
    let scale =
        lo.x.abs()
            .max(lo.y.abs())
            .max(hi.x.abs())
            .max(hi.y.abs())
            .max(f64::MIN_POSITIVE);
    if (hi - lo).norm() <= COLLINEAR_EPS * scale {
        return vec![idx[0]];
    }
    if idx.len() == 2 {
        return idx;
    }
    let eps = COLLINEAR_EPS * scale * (hi - lo).norm();

    let turn_ok = |chain: &[usize], p: usize| {
        let n = chain.len();
        let (o, a) = (points[chain[n - 2]], points[chain[n - 1]]);
        (a - o).cross(points[p] - o) > eps
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        while hull.len() >= 2 && !turn_ok(&hull, i) {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len && !turn_ok(&hull, i) {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() == 2 && points[hull[0]] == points[hull[1]] {
        hull.pop();
    }
    hull
}

/// Convex hull by Andrew's monotone chain. Collinear inputs give a segment,
/// a single distinct point gives a point, no input gives the empty polygon.
pub fn convex_hull(points: &[PlanePoint]) -> ConvexPolygon {
    debug_assert!(points.iter().all(|p| p.is_finite()));
    ConvexPolygon {
        vertices: convex_hull_indices(points)
            .into_iter()
            .map(|i| points[i])
            .collect(),
    }
}

pub fn hull_area(p: &ConvexPolygon) -> f64 {
    let v = &p.vertices;
    if v.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..v.len() {
        s += (v[i] - v[0]).cross(v[(i + 1) % v.len()] - v[0]);
    }
    0.5 * s.abs()
}

/// Maximum vertex distance, via rotating calipers.
pub fn hull_diameter(p: &ConvexPolygon) -> f64 {
    p.diameter_pair().map_or(0.0, |(a, b)| a.dist(b))
}

// Antipodal pair scan over a strictly convex CCW polygon with ≥ 3 vertices.
fn calipers(v: &[Vec2]) -> (usize, usize) {
    let n = v.len();
    let area = |i: usize, j: usize, k: usize| (v[j] - v[i]).cross(v[k] - v[i]).abs();
    let mut best = (0, 0, 0.0_f64);
    let mut j = 1;
    for i in 0..n {
        let i2 = (i + 1) % n;
        while area(i, i2, (j + 1) % n) > area(i, i2, j) {
            j = (j + 1) % n;
        }
        for (a, b) in [(i, j), (i2, j)] {
            let d = v[a].dist(v[b]);
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    (best.0, best.1)
}

/// True iff every vertex of `q`, pulled toward `q`'s centroid by `margin`,
/// lies in `p`.
pub fn contains(p: &ConvexPolygon, q: &ConvexPolygon, margin: f64) -> bool {
    let Some(c) = q.centroid() else {
        return true;
    };
    let scale = p
        .vertices
        .iter()
        .chain(&q.vertices)
        .map(|v| v.x.abs().max(v.y.abs()))
        .fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    q.vertices.iter().all(|&v| {
        let d = v - c;
        let len = d.norm();
        let shrunk = if len <= margin {
            c
        } else {
            v - d * (margin / len)
        };
        p.contains_point(shrunk, tol)
    })
}

/// `z ∈ C_v[a,b]`, i.e. `a⟨z,v⟩ ≤ ⟨z,v^⊥⟩ ≤ b⟨z,v⟩`.
pub fn cone_membership(frame: &DirectionalFrame, z: PlanePoint) -> bool {
    let s = z.dot(frame.v);
    let t = z.dot(frame.v_perp);
    frame.a * s <= t && t <= frame.b * s
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[PlanePoint], b: &[PlanePoint]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty set"));
    }
    Ok(directed(a, b).max(directed(b, a)))
}

// max over a of the nearest-neighbour distance into b, scanning b sorted by x
// outward from the query abscissa and stopping once |dx| exceeds the best hit.
fn directed(a: &[PlanePoint], b: &[PlanePoint]) -> f64 {
    let mut sorted = b.to_vec();
    sorted.sort_by(|p, q| p.x.total_cmp(&q.x));
    let mut worst = 0.0_f64;
    for &p in a {
        let start = sorted.partition_point(|q| q.x < p.x);
        let mut best = f64::INFINITY;
        for q in sorted[start..].iter() {
            if q.x - p.x >= best {
                break;
            }
            best = best.min(p.dist(*q));
        }
        for q in sorted[..start].iter().rev() {
            if p.x - q.x >= best {
                break;
            }
            best = best.min(p.dist(*q));
        }
        worst = worst.max(best);
    }
    worst
}

/// Hausdorff distance between two convex regions (not just their vertex sets).
///
/// The farthest point of one convex set from another is always a vertex, so
/// checking vertices against the other region suffices.
pub fn polygon_hausdorff(p: &ConvexPolygon, q: &ConvexPolygon) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty polygon"));
    }
    let one = |a: &ConvexPolygon, b: &ConvexPolygon| {
        a.vertices
            .iter()
            .map(|v| b.distance_to(*v))
            .fold(0.0, f64::max)
    };
    Ok(one(p, q).max(one(q, p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn diamond(r: f64) -> ConvexPolygon {
        convex_hull(&[v(r, 0.0), v(0.0, r), v(-r, 0.0), v(0.0, -r)])
    }

    #[test]
    fn square_with_interior_point() {
        let h = convex_hull(&[
            v(0.0, 0.0),
            v(1.0, 0.0),
            v(0.0, 1.0),
            v(1.0, 1.0),
            v(0.5, 0.5),
        ]);
        assert_eq!(
            h.vertices(),
            &[v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)]
        );
        assert_eq!(h.area(), 1.0);
        assert!((h.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_hulls() {
        let seg = convex_hull(&[v(0.0, 0.0), v(1.0, 1.0), v(2.0, 2.0)]);
        assert_eq!(seg.kind(), PolygonKind::Segment);
        assert_eq!(seg.vertices(), &[v(0.0, 0.0), v(2.0, 2.0)]);
        assert_eq!(seg.area(), 0.0);
        let pt = convex_hull(&[v(0.3, 0.3), v(0.3, 0.3)]);
        assert_eq!(pt.kind(), PolygonKind::Point);
        assert_eq!(pt.diameter(), 0.0);
        assert_eq!(convex_hull(&[]).kind(), PolygonKind::Empty);
    }

    #[test]
    fn triangle_area() {
        assert_eq!(
            convex_hull(&[v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)]).area(),
            0.5
        );
    }

    #[test]
    fn collinear_edge_points_dropped() {
        let h = convex_hull(&[
            v(0.0, 0.0),
            v(0.5, 0.0),
            v(1.0, 0.0),
            v(1.0, 1.0),
            v(0.0, 1.0),
        ]);
        assert_eq!(h.vertices().len(), 4);
    }

    #[test]
    fn containment() {
        let square = convex_hull(&[v(-1.0, -1.0), v(1.0, -1.0), v(1.0, 1.0), v(-1.0, 1.0)]);
        assert!(contains(&square, &diamond(1.0), 0.0));
        assert!(contains(&square, &square, 0.0));
        assert!(!contains(&diamond(0.5), &diamond(1.0), 0.1));
        assert!(contains(&diamond(0.5), &diamond(0.55), 0.1));
        assert!(!contains(&diamond(1.0), &square, 0.0));
        assert!(contains(&square, &ConvexPolygon::default(), 0.0));
    }

    #[test]
    fn cones() {
        let f = DirectionalFrame::new(v(1.0, 0.0), 0.0, -1.0, 1.0).unwrap();
        assert!(cone_membership(&f, v(1.0, 0.5)));
        assert!(!cone_membership(&f, v(1.0, 2.0)));
        let ray = DirectionalFrame::new(v(0.0, 1.0), 0.0, 0.0, 0.0).unwrap();
        assert!(cone_membership(&ray, v(0.0, 3.0)));
        assert!(cone_membership(&ray, v(0.0, -3.0)));
        assert!(!cone_membership(&ray, v(0.1, 3.0)));
    }

    #[test]
    fn hausdorff_examples() {
        let a = [v(0.0, 0.0), v(1.0, 2.0)];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(
            hausdorff_distance(&[v(0.0, 0.0)], &[v(3.0, 4.0)]).unwrap(),
            5.0
        );
        assert!(hausdorff_distance(&[], &a).is_err());
    }

    #[test]
    fn polygon_hausdorff_of_nested_diamonds() {
        let d = polygon_hausdorff(&diamond(1.0), &diamond(0.5)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(
            polygon_hausdorff(&diamond(1.0), &diamond(1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn centroid_of_square() {
        let sq = convex_hull(&[v(0.0, 0.0), v(2.0, 0.0), v(2.0, 2.0), v(0.0, 2.0)]);
        assert!((sq.centroid().unwrap() - v(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn json_is_vertex_array() {
        let h = convex_hull(&[v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)]);
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, "[[0.0,0.0],[1.0,0.0],[0.0,1.0]]");
        let back: ConvexPolygon = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}
