use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::point::{BBox, Point};
use super::segment::ArcSegment;
use crate::error::{Error, Result};

/// Relative closure tolerance (in units of the shape's diameter).
pub const CLOSURE_TOL: f64 = 1e-12;
/// Relative distance below which a query point counts as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-11;

/// A closed, simple, positively oriented chain of arcs and straight segments.
///
/// Area and perimeter are computed once on demand; the caches are
/// `OnceLock`s, so concurrent first reads may both compute but store the
/// same value.
#[derive(Debug, Serialize, Deserialize)]
#[serde(try_from = "ShapeJson", into = "ShapeJson")]
pub struct ArcShape {
    segments: Vec<ArcSegment>,
    area: OnceLock<f64>,
    perimeter: OnceLock<f64>,
    bbox: OnceLock<BBox>,
}

impl Clone for ArcShape {
    fn clone(&self) -> Self {
        Self::from_parts(self.segments.clone())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeJson {
    segments: Vec<ArcSegment>,
}

impl TryFrom<ShapeJson> for ArcShape {
    type Error = Error;
    fn try_from(j: ShapeJson) -> Result<Self> {
        ArcShape::new(j.segments.into_iter().map(|s| s.normalized()).collect())
    }
}

impl From<ArcShape> for ShapeJson {
    fn from(s: ArcShape) -> Self {
        ShapeJson {
            segments: s.segments,
        }
    }
}

/// Result of a point-location query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Outside,
    OnBoundary,
}

/// A maximal run of boundary with constant curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureRun {
    pub s_start: f64,
    pub s_end: f64,
    pub curvature: f64,
}

impl ArcShape {
    /// Validate and wrap a segment chain.
    pub fn new(segments: Vec<ArcSegment>) -> Result<Self> {
        let shape = Self::from_parts(segments);
        shape.validate()?;
        Ok(shape)
    }

    fn from_parts(segments: Vec<ArcSegment>) -> Self {
        Self {
            segments,
            area: OnceLock::new(),
            perimeter: OnceLock::new(),
            bbox: OnceLock::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let segs = &self.segments;
        if segs.len() < 2 {
            return Err(Error::InvalidShape("fewer than two segments".into()));
        }
        for (i, s) in segs.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.curvature.is_finite()) {
                return Err(Error::InvalidShape(format!("segment {i} is not finite")));
            }
            if s.start == s.end {
                return Err(Error::InvalidShape(format!("segment {i} has zero length")));
            }
            if !s.is_line() && !(s.sweep.abs() > 0.0 && s.sweep.abs() < TAU) {
                return Err(Error::InvalidShape(format!(
                    "segment {i} has angular extent {} outside (0, 2pi)",
                    s.sweep
                )));
            }
            if !s.is_line() && s.sweep.signum() != s.curvature.signum() {
                return Err(Error::InvalidShape(format!(
                    "segment {i}: sweep and curvature disagree in sign"
                )));
            }
        }
        let diam = self.diameter();
        for i in 0..segs.len() {
            let j = (i + 1) % segs.len();
            let gap = segs[i].end.dist(segs[j].start);
            if gap > CLOSURE_TOL * diam {
                return Err(Error::InvalidShape(format!(
                    "not closed: gap {gap:e} between segments {i} and {j}"
                )));
            }
        }
        self.check_simple(diam)?;
        let a = self.signed_area();
        if !(a > 0.0) {
            return Err(Error::InvalidShape(format!(
                "boundary is not positively oriented (signed area {a})"
            )));
        }
        Ok(())
    }

    /// Reject chains where two segments meet anywhere other than at a shared
    /// endpoint of neighbours.
    fn check_simple(&self, diam: f64) -> Result<()> {
        let segs = &self.segments;
        let n = segs.len();
        let tol = 1e-9 * diam;
        let boxes: Vec<BBox> = segs.iter().map(|s| s.bbox().inflate(tol)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| boxes[a].min.x.total_cmp(&boxes[b].min.x));
        for (oi, &i) in order.iter().enumerate() {
            for &j in &order[oi + 1..] {
                if boxes[j].min.x > boxes[i].max.x {
                    break;
                }
                if !boxes[i].overlaps(&boxes[j]) {
                    continue;
                }
                let (a, b) = (i.min(j), i.max(j));
                let adjacent_fwd = b == a + 1;
                let adjacent_wrap = a == 0 && b == n - 1;
                for p in segment_intersections(&segs[a], &segs[b], tol) {
                    let shared = (adjacent_fwd && p.dist(segs[a].end) <= 1e3 * tol)
                        || (adjacent_wrap && p.dist(segs[a].start) <= 1e3 * tol)
                        || (n == 2 && p.dist(segs[a].end).min(p.dist(segs[a].start)) <= 1e3 * tol);
                    if !shared {
                        return Err(Error::InvalidShape(format!(
                            "segments {a} and {b} intersect at ({}, {})",
                            p.x, p.y
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[ArcSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn signed_area(&self) -> f64 {
        // Compensated sum; the individual Green terms can cancel heavily.
        let mut sum = 0.0;
        let mut c = 0.0;
        for s in &self.segments {
            let y = s.green() - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        sum
    }

    /// Enclosed area, exact up to round-off.
    pub fn area(&self) -> f64 {
        *self.area.get_or_init(|| self.signed_area())
    }

    pub fn perimeter(&self) -> f64 {
        *self
            .perimeter
            .get_or_init(|| self.segments.iter().map(ArcSegment::length).sum())
    }

    pub fn bbox(&self) -> BBox {
        *self.bbox.get_or_init(|| {
            self.segments
                .iter()
                .fold(BBox::empty(), |b, s| b.union(s.bbox()))
        })
    }

    /// Length scale used for relative tolerances (bounding-box diagonal).
    pub fn diameter(&self) -> f64 {
        self.bbox().diagonal()
    }

    /// Radius of the disk with the same area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area() / std::f64::consts::PI).sqrt()
    }

    /// Winding-number point location with exact arc handling.
    pub fn locate(&self, p: Point) -> Location {
        let tol = BOUNDARY_TOL * self.diameter();
        if self.segments.iter().any(|s| s.distance(p) <= tol) {
            return Location::OnBoundary;
        }
        if self.winding_number(p) != 0 {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Point containment. Points on the boundary (within tolerance) are
    /// reported as an error rather than guessed.
    pub fn contains(&self, p: Point) -> Result<bool> {
        match self.locate(p) {
            Location::Inside => Ok(true),
            Location::Outside => Ok(false),
            Location::OnBoundary => Err(Error::Precondition(format!(
                "point ({}, {}) lies on the boundary",
                p.x, p.y
            ))),
        }
    }

    /// Winding number without the boundary-proximity check.
    pub fn winding_number(&self, p: Point) -> i32 {
        if !self.bbox().inflate(0.0).overlaps(&BBox { min: p, max: p }) {
            return 0;
        }
        let total: f64 = self.segments.iter().map(|s| s.winding_angle(p)).sum();
        (total / TAU).round() as i32
    }

    pub(crate) fn contains_fast(&self, p: Point) -> bool {
        self.winding_number(p) != 0
    }

    /// Piecewise-constant curvature along the boundary, starting at the
    /// first segment. Tangent-continuous neighbours of equal curvature are
    /// merged, including across the wrap-around.
    pub fn curvature_profile(&self) -> Vec<CurvatureRun> {
        let segs = &self.segments;
        let n = segs.len();
        let same = |a: &ArcSegment, b: &ArcSegment| {
            let k_eq = (a.curvature - b.curvature).abs()
                <= 1e-9 * (1.0 + a.curvature.abs().max(b.curvature.abs()));
            let t_eq = a.end_tangent().dist(b.start_tangent()) <= 1e-7;
            k_eq && t_eq
        };
        let mut runs: Vec<CurvatureRun> = Vec::new();
        let mut s = 0.0;
        for (i, seg) in segs.iter().enumerate() {
            let l = seg.length();
            if i > 0 && same(&segs[i - 1], seg) {
                runs.last_mut().unwrap().s_end = s + l;
            } else {
                runs.push(CurvatureRun {
                    s_start: s,
                    s_end: s + l,
                    curvature: seg.curvature,
                });
            }
            s += l;
        }
        if runs.len() > 1 && same(&segs[n - 1], &segs[0]) {
            // The last run continues into the first; fold it over the seam.
            let last = runs.pop().unwrap();
            runs[0].s_start = last.s_start - s;
        }
        runs
    }

    pub fn translate(&self, v: Point) -> Self {
        Self::from_parts(self.segments.iter().map(|s| s.translate(v)).collect())
    }

    pub fn rotate(&self, theta: f64) -> Self {
        Self::from_parts(self.segments.iter().map(|s| s.rotate(theta)).collect())
    }

    /// Dilation about the origin.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self::from_parts(self.segments.iter().map(|s| s.scale(factor)).collect())
    }

    /// Mirror image across the x-axis, re-oriented positively.
    pub fn reflect_x(&self) -> Self {
        Self::from_parts(
            self.segments
                .iter()
                .rev()
                .map(|s| s.reflect_x().reversed())
                .collect(),
        )
    }

    /// Mirror image across the y-axis, re-oriented positively.
    pub fn reflect_y(&self) -> Self {
        Self::from_parts(
            self.segments
                .iter()
                .rev()
                .map(|s| s.reflect_y().reversed())
                .collect(),
        )
    }

    /// Rescale about the origin so that the area equals `target`.
    pub fn with_area(&self, target: f64) -> Self {
        self.scale((target / self.area()).sqrt())
    }

    /// SVG path data using native arc commands, in the shape's own
    /// (y-up) coordinates.
    pub fn svg_path(&self) -> String {
        let mut d = String::new();
        let p0 = self.segments[0].start;
        let _ = write!(d, "M {} {}", fmt(p0.x), fmt(p0.y));
        for s in &self.segments {
            if s.is_line() {
                let _ = write!(d, " L {} {}", fmt(s.end.x), fmt(s.end.y));
            } else {
                let r = s.radius();
                let large = (s.sweep.abs() > std::f64::consts::PI) as u8;
                let sweep = (s.sweep > 0.0) as u8;
                let _ = write!(
                    d,
                    " A {} {} 0 {} {} {} {}",
                    fmt(r),
                    fmt(r),
                    large,
                    sweep,
                    fmt(s.end.x),
                    fmt(s.end.y)
                );
            }
        }
        d.push_str(" Z");
        d
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shape serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidShape(e.to_string()))
    }
}

fn fmt(x: f64) -> String {
    format!("{:.12e}", x)
        .parse::<f64>()
        .map(|v| v.to_string())
        .unwrap_or_else(|_| x.to_string())
}

/// All intersection points of two segments (tangencies included).
pub(crate) fn segment_intersections(a: &ArcSegment, b: &ArcSegment, tol: f64) -> Vec<Point> {
    if a.is_line() && b.is_line() {
        let d1 = a.chord();
        let d2 = b.chord();
        let den = d1.cross(d2);
        let w = b.start - a.start;
        if den.abs() <= 1e-15 * d1.norm() * d2.norm() {
            // Parallel: report overlap endpoints if collinear.
            if w.cross(d1).abs() > tol * d1.norm() {
                return vec![];
            }
            let mut out = vec![];
            for p in [b.start, b.end] {
                if a.distance(p) <= tol {
                    out.push(p);
                }
            }
            for p in [a.start, a.end] {
                if b.distance(p) <= tol {
                    out.push(p);
                }
            }
            return out;
        }
        let t = w.cross(d2) / den;
        let u = w.cross(d1) / den;
        let (la, lb) = (d1.norm(), d2.norm());
        if t * la >= -tol && (t - 1.0) * la <= tol && u * lb >= -tol && (u - 1.0) * lb <= tol {
            return vec![a.start + d1 * t];
        }
        return vec![];
    }
    let (line_or_arc, arc) = if b.is_line() { (b, a) } else { (a, b) };
    if !line_or_arc.is_line() && line_or_arc.on_circle(arc.center(), arc.radius(), tol) {
        // Same supporting circle: overlapping pieces count as intersecting
        // at the overlap endpoints.
        let mut out = vec![];
        for p in [line_or_arc.start, line_or_arc.end] {
            if arc.param_of(p, tol).is_some() {
                out.push(p);
            }
        }
        for p in [arc.start, arc.end] {
            if line_or_arc.param_of(p, tol).is_some() {
                out.push(p);
            }
        }
        if out.is_empty() {
            return out;
        }
        // Interior overlap is a genuine violation; signal it with a midpoint.
        let m = line_or_arc.midpoint();
        if arc.param_of(m, tol).is_some() {
            out.push(m);
        }
        return out;
    }
    let hits = line_or_arc.circle_hits(arc.center(), arc.radius(), tol);
    hits.into_iter()
        .map(|t| line_or_arc.point_at(t))
        .filter(|&p| arc.param_of(p, tol).is_some() && arc.distance(p) <= 10.0 * tol)
        .collect()
}
