//! Exact overlap of an arc shape with a disk.
//!
//! The boundary of `E ∩ B` consists of the pieces of `∂E` inside `B` and
//! the arcs of `∂B` inside `E`. Both are circular arcs or straight pieces,
//! so Green's theorem gives the area in closed form once the crossings of
//! `∂E` with `∂B` are known.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::point::Point;
use super::shape::ArcShape;

/// An angular interval `[start, end]` on a circle, `start` in `[0, 2pi)`,
/// `end > start` and possibly beyond `2pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngularInterval {
    pub start: f64,
    pub end: f64,
}

impl AngularInterval {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Portion of a circle inside a shape.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleTrace {
    pub intervals: Vec<AngularInterval>,
    /// Set when a crossing turned out to be a tangency; the neighbouring
    /// intervals were merged across it.
    pub degenerate_contact: bool,
}

impl CircleTrace {
    /// Total angle covered.
    pub fn total_angle(&self) -> f64 {
        self.intervals.iter().map(AngularInterval::width).sum()
    }
}

struct Split {
    /// Green sum over the pieces of the shape boundary inside the disk,
    /// including coincident pieces of matching orientation.
    inner_boundary: f64,
    /// Sorted crossing angles in [0, 2pi).
    angles: Vec<f64>,
    /// Angular spans (start, width) where the shape boundary runs along the
    /// circle; `true` when it runs counterclockwise, like the circle.
    covered: Vec<(f64, f64, bool)>,
}

fn norm_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn in_span(a: f64, start: f64, width: f64) -> bool {
    (a - start).rem_euclid(TAU) < width
}

fn tolerance(shape: &ArcShape, radius: f64) -> f64 {
    1e-12 * shape.diameter().max(radius)
}

fn split(shape: &ArcShape, c: Point, r: f64) -> Split {
    let tol = tolerance(shape, r);
    let mut inner_boundary = 0.0;
    let mut angles = Vec::new();
    let mut covered = Vec::new();
    let ang = |p: Point| norm_angle((p - c).angle());
    for seg in shape.segments() {
        if seg.on_circle(c, r, tol) {
            let (a0, a1) = (ang(seg.start), ang(seg.end));
            angles.push(a0);
            angles.push(a1);
            if seg.curvature > 0.0 {
                inner_boundary += seg.green();
                covered.push((a0, seg.sweep, true));
            } else {
                covered.push((a1, -seg.sweep, false));
            }
            continue;
        }
        let hits = seg.circle_hits(c, r, tol);
        let mut ts = Vec::with_capacity(hits.len() + 2);
        ts.push(0.0);
        for &t in &hits {
            angles.push(ang(seg.point_at(t)));
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
        ts.push(1.0);
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let m = seg.point_at(0.5 * (t0 + t1));
            if m.dist(c) < r {
                inner_boundary += if t0 == 0.0 && t1 == 1.0 {
                    seg.green()
                } else {
                    seg.sub(t0, t1).green()
                };
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    let eps = tol / r;
    angles.dedup_by(|a, b| (*a - *b).abs() <= eps);
    if angles.len() > 1 && angles[0] + TAU - angles[angles.len() - 1] <= eps {
        angles.pop();
    }
    Split {
        inner_boundary,
        angles,
        covered,
    }
}

/// Green contribution of the counterclockwise arc of circle `c`, `r` from
/// angle `a0` to `a1 > a0`.
fn circle_arc_green(c: Point, r: f64, a0: f64, a1: f64) -> f64 {
    let (s0, c0) = a0.sin_cos();
    let (s1, c1) = a1.sin_cos();
    0.5 * (r * r * (a1 - a0) + r * (c.x * (s1 - s0) - c.y * (c1 - c0)))
}

/// Arcs of the circle between consecutive crossings, with their status:
/// `Some(true)` inside the shape, `Some(false)` outside, `None` when the
/// shape boundary runs along it.
fn circle_arcs(shape: &ArcShape, c: Point, r: f64, sp: &Split) -> Vec<(f64, f64, Option<bool>)> {
    let n = sp.angles.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a0 = sp.angles[i];
        let a1 = if i + 1 < n { sp.angles[i + 1] } else { sp.angles[0] + TAU };
        let mid = 0.5 * (a0 + a1);
        let status = match sp.covered.iter().find(|&&(s, w, _)| in_span(mid, s, w)) {
            Some(&(_, _, ccw)) => {
                if ccw {
                    None
                } else {
                    Some(false)
                }
            }
            None => Some(shape.contains_fast(c + Point::polar(mid) * r)),
        };
        out.push((a0, a1, status));
    }
    out
}

/// `|E ∩ B(center, radius)|`, exact up to round-off.
pub fn disk_intersection_area(shape: &ArcShape, center: Point, radius: f64) -> f64 {
    assert!(radius > 0.0, "radius must be positive");
    let sp = split(shape, center, radius);
    if sp.angles.is_empty() {
        let on_circle = center + Point::new(radius, 0.0);
        return if shape.segments()[0].start.dist(center) < radius {
            shape.area()
        } else if shape.contains_fast(on_circle) {
            PI * radius * radius
        } else {
            0.0
        };
    }
    let mut total = sp.inner_boundary;
    for (a0, a1, status) in circle_arcs(shape, center, radius, &sp) {
        if status == Some(true) {
            total += circle_arc_green(center, radius, a0, a1);
        }
    }
    total.clamp(0.0, shape.area().min(PI * radius * radius))
}

/// Angular intervals of `∂B(center, radius)` lying inside the shape.
/// Pieces where the shape boundary runs along the circle with the same
/// orientation count as inside.
pub fn circle_boundary_trace(shape: &ArcShape, center: Point, radius: f64) -> CircleTrace {
    assert!(radius > 0.0, "radius must be positive");
    let sp = split(shape, center, radius);
    if sp.angles.is_empty() {
        let inside = shape.contains_fast(center + Point::new(radius, 0.0));
        return CircleTrace {
            intervals: if inside {
                vec![AngularInterval { start: 0.0, end: TAU }]
            } else {
                vec![]
            },
            degenerate_contact: false,
        };
    }
    let arcs = circle_arcs(shape, center, radius, &sp);
    let inside: Vec<bool> = arcs.iter().map(|a| a.2.unwrap_or(true)).collect();
    let n = arcs.len();
    // A crossing with the same status on both sides is a tangency.
    let degenerate_contact = (0..n).any(|i| inside[i] == inside[(i + 1) % n]);
    if inside.iter().all(|&b| b) {
        return CircleTrace {
            intervals: vec![AngularInterval { start: 0.0, end: TAU }],
            degenerate_contact,
        };
    }
    // Start merging right after an outside arc so no run wraps the seam.
    let first_out = inside.iter().position(|&b| !b).unwrap();
    let mut intervals: Vec<AngularInterval> = Vec::new();
    let mut open: Option<AngularInterval> = None;
    for k in 1..=n {
        let i = (first_out + k) % n;
        // Arcs after the wrap are shifted by a full turn to stay ordered.
        let shift = if first_out + k >= n { TAU } else { 0.0 };
        let (a0, a1) = (arcs[i].0 + shift, arcs[i].1 + shift);
        if inside[i] {
            open = Some(match open {
                Some(iv) => AngularInterval { start: iv.start, end: a1 },
                None => AngularInterval { start: a0, end: a1 },
            });
        } else if let Some(iv) = open.take() {
            intervals.push(iv);
        }
    }
    if let Some(iv) = open {
        intervals.push(iv);
    }
    for iv in &mut intervals {
        let s = norm_angle(iv.start);
        iv.end += s - iv.start;
        iv.start = s;
    }
    intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
    CircleTrace {
        intervals,
        degenerate_contact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2d::segment::ArcSegment;
    use approx::assert_relative_eq;

    fn disk(c: Point, r: f64) -> ArcShape {
        ArcShape::new(
            (0..4)
                .map(|i| ArcSegment::from_center(c, r, i as f64 * PI / 2.0, PI / 2.0))
                .collect(),
        )
        .unwrap()
    }

    fn lens(d: f64) -> f64 {
        2.0 * (d / 2.0).acos() - 0.5 * d * (4.0 - d * d).sqrt()
    }

    #[test]
    fn trivial_disk_cases() {
        let e = disk(Point::ORIGIN, 1.0);
        assert_relative_eq!(disk_intersection_area(&e, Point::ORIGIN, 1.0), PI, max_relative = 1e-14);
        assert_eq!(disk_intersection_area(&e, Point::new(3.0, 0.0), 1.0), 0.0);
        assert_relative_eq!(disk_intersection_area(&e, Point::new(0.1, 0.0), 0.5), PI / 4.0, max_relative = 1e-14);
        assert_relative_eq!(disk_intersection_area(&e, Point::ORIGIN, 2.0), PI, max_relative = 1e-14);
    }

    #[test]
    fn lens_areas() {
        let e = disk(Point::ORIGIN, 1.0);
        for d in [0.0001, 0.3, 1.0, 1.7, 1.9999] {
            let got = disk_intersection_area(&e, Point::new(d * 0.6, d * 0.8), 1.0);
            assert_relative_eq!(got, lens(d), epsilon = 1e-14, max_relative = 1e-12);
        }
        assert_relative_eq!(lens(1.0), 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn opposite_coincident_arc_is_excluded() {
        // Unit square minus nothing, but a shape whose concave arc lies on the
        // query circle: the crescent between r=1 and a bigger outer arc.
        let outer = ArcSegment::from_center(Point::ORIGIN, 2.0, 0.0, PI);
        let l1 = ArcSegment::line(Point::new(-2.0, 0.0), Point::new(-1.0, 0.0));
        let inner = ArcSegment::from_center(Point::ORIGIN, 1.0, 0.0, PI).reversed();
        let l2 = ArcSegment::line(Point::new(1.0, 0.0), Point::new(2.0, 0.0));
        let e = ArcShape::new(vec![outer, l1, inner, l2]).unwrap();
        assert_relative_eq!(e.area(), 1.5 * PI, max_relative = 1e-14);
        assert_relative_eq!(disk_intersection_area(&e, Point::ORIGIN, 1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(disk_intersection_area(&e, Point::ORIGIN, 2.0), 1.5 * PI, max_relative = 1e-14);
        assert_relative_eq!(disk_intersection_area(&e, Point::ORIGIN, 1.5), 0.5 * PI * 1.25, max_relative = 1e-14);
    }

    #[test]
    fn traces() {
        let e = disk(Point::ORIGIN, 1.0);
        let t = circle_boundary_trace(&e, Point::ORIGIN, 0.5);
        assert_eq!(t.intervals, vec![AngularInterval { start: 0.0, end: TAU }]);
        assert!(circle_boundary_trace(&e, Point::ORIGIN, 2.0).intervals.is_empty());
        // Circle of radius 1 about (1,0): the part inside is the arc of
        // half-width 2pi/3 about angle pi.
        let t = circle_boundary_trace(&e, Point::new(1.0, 0.0), 1.0);
        assert_eq!(t.intervals.len(), 1);
        assert_relative_eq!(t.intervals[0].start, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.total_angle(), 2.0 * PI / 3.0, epsilon = 1e-12);
        // Interval straddling angle 0.
        let t = circle_boundary_trace(&e, Point::new(-1.0, 0.0), 1.0);
        assert_eq!(t.intervals.len(), 1);
        assert_relative_eq!(t.intervals[0].start, 5.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.intervals[0].end, 7.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn tangency_is_flagged() {
        let e = disk(Point::ORIGIN, 1.0);
        let t = circle_boundary_trace(&e, Point::new(2.0, 0.0), 1.0);
        assert!(t.intervals.is_empty());
        assert!(t.degenerate_contact);
    }
}
