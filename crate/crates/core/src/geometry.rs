//! Polygon primitives and arbitrary-polygon IoU.
//!
//! Localization regions are simple polygons with any number of vertices.
//! Intersection area is computed by triangulating both polygons (ear
//! clipping) and summing convex triangle-triangle clips, which stays robust
//! for concave shapes and treats shared-edge contact as zero-area overlap.

use crate::error::{Error, Result};

/// Coincidence tolerance for vertex deduplication and orientation tests, in px.
pub const COINCIDENCE_EPS: f64 = 1e-9;

/// Below this absolute signed area (px²) a ring is considered degenerate.
const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned bounding box; fast-reject pre-filter for IoU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAlignedBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl AxisAlignedBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersects(&self, other: &AxisAlignedBox) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    /// `[x, y, w, h]` form used by COCO-style `bbox` fields.
    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }
}

/// Ordered planar vertex list in pixel coordinates.
///
/// Construction only checks vertex count and finiteness; winding and
/// simplicity are established by [`normalize_polygon`].
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon);
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Polygon { vertices })
    }

    /// Builds from a flat `[x1, y1, x2, y2, ...]` coordinate list.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() < 6 || coords.len() % 2 != 0 {
            return Err(Error::Geometry {
                message: format!(
                    "segmentation ring needs an even number of at least 6 coordinates, got {}",
                    coords.len()
                ),
                context: None,
            });
        }
        Polygon::new(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    fn signed_area(&self) -> f64 {
        signed_area_of(&self.vertices)
    }

    /// True when any two non-adjacent edges cross, touch, or overlap, or an
    /// adjacent edge folds back over its predecessor (a spike).
    pub fn is_self_intersecting(&self) -> bool {
        let vs = &self.vertices;
        let n = vs.len();
        for i in 0..n {
            let a0 = vs[i];
            let a1 = vs[(i + 1) % n];
            // Spike: next edge doubles back along this one.
            let a2 = vs[(i + 2) % n];
            if orient(a0, a1, a2).abs() <= COINCIDENCE_EPS {
                let dot = (a1.x - a0.x) * (a2.x - a1.x) + (a1.y - a0.y) * (a2.y - a1.y);
                if dot < 0.0 {
                    return true;
                }
            }
            for j in (i + 2)..n {
                // Skip the wrap-around adjacency between last and first edge.
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_conflict(a0, a1, vs[j], vs[(j + 1) % n]) {
                    return true;
                }
            }
        }
        false
    }
}

/// Result of [`normalize_polygon`]: deduplicated counter-clockwise ring plus
/// a simplicity report. Self-intersection is reported, never repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPolygon {
    pub polygon: Polygon,
    pub self_intersecting: bool,
}

/// Removes consecutive duplicate vertices (within [`COINCIDENCE_EPS`],
/// including a repeated closing vertex) and enforces counter-clockwise order.
pub fn normalize_polygon(p: &Polygon) -> Result<NormalizedPolygon> {
    let mut vs: Vec<Point> = Vec::with_capacity(p.vertices.len());
    for &v in &p.vertices {
        if let Some(&last) = vs.last() {
            if coincident(last, v) {
                continue;
            }
        }
        vs.push(v);
    }
    while vs.len() >= 2 && coincident(vs[0], *vs.last().unwrap()) {
        vs.pop();
    }
    if vs.len() < 3 {
        return Err(Error::DegeneratePolygon);
    }
    if all_collinear(&vs) {
        // No interior, orientation undefined.
        return Err(Error::DegeneratePolygon);
    }

    let polygon = Polygon { vertices: vs };
    let self_intersecting = polygon.is_self_intersecting();

    let sa = polygon.signed_area();
    if !self_intersecting && sa.abs() < DEGENERATE_AREA_EPS {
        // Zero-width sliver below floating-point resolution.
        return Err(Error::DegeneratePolygon);
    }
    let mut polygon = polygon;
    if sa < 0.0 {
        // Reverse winding while keeping the original starting vertex.
        // A self-crossing ring can have zero signed area (a bow-tie does);
        // its winding is left alone and the flag carries the information.
        polygon.vertices[1..].reverse();
    }
    Ok(NormalizedPolygon { polygon, self_intersecting })
}

/// Absolute shoelace area in px². Returns 0 for fully collinear rings.
pub fn polygon_area(p: &Polygon) -> f64 {
    p.signed_area().abs()
}

/// Tight min/max box over the vertices.
pub fn bounding_box(p: &Polygon) -> AxisAlignedBox {
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for v in &p.vertices {
        x_min = x_min.min(v.x);
        y_min = y_min.min(v.y);
        x_max = x_max.max(v.x);
        y_max = y_max.max(v.y);
    }
    AxisAlignedBox { x_min, y_min, x_max, y_max }
}

/// Area of the geometric intersection of two simple polygons, in px².
///
/// Zero when disjoint; shared-edge contact counts as zero-area intersection.
pub fn polygon_intersection_area(a: &Polygon, b: &Polygon) -> Result<f64> {
    if a.is_self_intersecting() || b.is_self_intersecting() {
        return Err(Error::NonSimplePolygon);
    }
    if !bounding_box(a).intersects(&bounding_box(b)) {
        return Ok(0.0);
    }
    let tris_a = triangulate(&a.vertices)?;
    let tris_b = triangulate(&b.vertices)?;
    let mut total = 0.0;
    for ta in &tris_a {
        for tb in &tris_b {
            total += triangle_clip_area(ta, tb);
        }
    }
    Ok(total)
}

/// Intersection over union for two simple polygons with positive area.
pub fn iou(a: &Polygon, b: &Polygon) -> Result<f64> {
    let area_a = polygon_area(a);
    let area_b = polygon_area(b);
    if area_a + area_b < DEGENERATE_AREA_EPS {
        return Err(Error::DegeneratePair);
    }
    let inter = polygon_intersection_area(a, b)?;
    let union = area_a + area_b - inter;
    if union < DEGENERATE_AREA_EPS {
        return Err(Error::DegeneratePair);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

fn coincident(a: Point, b: Point) -> bool {
    (a.x - b.x).abs() <= COINCIDENCE_EPS && (a.y - b.y).abs() <= COINCIDENCE_EPS
}

fn all_collinear(vs: &[Point]) -> bool {
    let a = vs[0];
    let b = vs[1];
    vs[2..].iter().all(|&p| orient(a, b, p).abs() <= COINCIDENCE_EPS)
}

fn signed_area_of(vs: &[Point]) -> f64 {
    let n = vs.len();
    let mut sum = 0.0;
    for i in 0..n {
        let p = vs[i];
        let q = vs[(i + 1) % n];
        sum += p.x * q.y - q.x * p.y;
    }
    sum / 2.0
}

/// Cross product (q − p) × (r − p): positive when r lies left of p→q.
fn orient(p: Point, q: Point, r: Point) -> f64 {
    (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) - COINCIDENCE_EPS
        && p.x <= a.x.max(b.x) + COINCIDENCE_EPS
        && p.y >= a.y.min(b.y) - COINCIDENCE_EPS
        && p.y <= a.y.max(b.y) + COINCIDENCE_EPS
}

/// True when two non-adjacent edges properly cross, touch, or overlap.
fn segments_conflict(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);

    let eps = COINCIDENCE_EPS;
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    // Endpoint contact or collinear overlap between non-adjacent edges.
    (d1.abs() <= eps && on_segment(a0, b0, b1))
        || (d2.abs() <= eps && on_segment(a1, b0, b1))
        || (d3.abs() <= eps && on_segment(b0, a0, a1))
        || (d4.abs() <= eps && on_segment(b1, a0, a1))
}

/// Ear-clipping triangulation of a simple ring; tolerates either winding.
fn triangulate(vertices: &[Point]) -> Result<Vec<[Point; 3]>> {
    let mut idx: Vec<usize> = (0..vertices.len()).collect();
    if signed_area_of(vertices) < 0.0 {
        idx.reverse();
    }
    let v = |i: usize| vertices[i];

    let mut triangles = Vec::with_capacity(vertices.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let ip = idx[(k + n - 1) % n];
            let ic = idx[k];
            let inx = idx[(k + 1) % n];
            let cross = orient(v(ip), v(ic), v(inx));
            if cross < -COINCIDENCE_EPS {
                continue; // reflex vertex
            }
            if cross <= COINCIDENCE_EPS {
                // Collinear sliver: removing it leaves the enclosed area unchanged.
                idx.remove(k);
                clipped = true;
                break;
            }
            let tri = [v(ip), v(ic), v(inx)];
            let blocked = idx
                .iter()
                .filter(|&&i| i != ip && i != ic && i != inx)
                .any(|&i| point_in_or_on_triangle(v(i), &tri));
            if !blocked {
                triangles.push(tri);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::TriangulationFailed);
        }
    }
    let last = [v(idx[0]), v(idx[1]), v(idx[2])];
    if orient(last[0], last[1], last[2]) > COINCIDENCE_EPS {
        triangles.push(last);
    }
    Ok(triangles)
}

fn point_in_or_on_triangle(p: Point, tri: &[Point; 3]) -> bool {
    orient(tri[0], tri[1], p) >= -COINCIDENCE_EPS
        && orient(tri[1], tri[2], p) >= -COINCIDENCE_EPS
        && orient(tri[2], tri[0], p) >= -COINCIDENCE_EPS
}

/// Area of the intersection of two CCW triangles via Sutherland–Hodgman.
fn triangle_clip_area(subject: &[Point; 3], clip: &[Point; 3]) -> f64 {
    // Triangle-triangle intersection has at most 6 vertices.
    let mut out: Vec<Point> = subject.to_vec();
    let mut input: Vec<Point> = Vec::with_capacity(8);
    for e in 0..3 {
        let c1 = clip[e];
        let c2 = clip[(e + 1) % 3];
        std::mem::swap(&mut input, &mut out);
        out.clear();
        if input.is_empty() {
            return 0.0;
        }
        let mut prev = *input.last().unwrap();
        let mut d_prev = orient(c1, c2, prev);
        for &p in &input {
            let d_p = orient(c1, c2, p);
            if (d_prev >= 0.0) != (d_p >= 0.0) {
                let t = d_prev / (d_prev - d_p);
                out.push(Point::new(prev.x + t * (p.x - prev.x), prev.y + t * (p.y - prev.y)));
            }
            if d_p >= 0.0 {
                out.push(p);
            }
            prev = p;
            d_prev = d_p;
        }
    }
    signed_area_of(&out).abs()
}
