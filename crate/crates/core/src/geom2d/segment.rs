use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::point::{BBox, Point};

/// Curvatures below this magnitude are treated as straight lines when
/// deciding between the line and circle code paths.
const FLAT: f64 = 1e-14;

/// One boundary piece: a straight segment or a circular arc.
///
/// An arc is stored as its endpoints, its signed curvature (positive when
/// turning left) and its signed sweep, i.e. the total turning angle of the
/// tangent along the piece. Curvature and chord alone cannot tell a minor
/// arc from its major complement, so the sweep is kept explicitly; it is
/// optional in JSON and defaults to the minor arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSegment {
    pub start: Point,
    pub end: Point,
    pub curvature: f64,
    #[serde(default = "nan", skip_serializing_if = "is_nan")]
    pub sweep: f64,
}

fn nan() -> f64 {
    f64::NAN
}

fn is_nan(x: &f64) -> bool {
    x.is_nan()
}

/// sin(x)/x, stable near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// (1 - cos x)/x, stable near zero.
fn versinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x / 2.0 - x * x * x / 24.0
    } else {
        (1.0 - x.cos()) / x
    }
}

/// (x - sin x)/x^2, stable near zero.
fn excess(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        (x - x.sin()) / (x * x)
    }
}

impl ArcSegment {
    pub fn line(start: Point, end: Point) -> Self {
        Self {
            start,
            end,
            curvature: 0.0,
            sweep: 0.0,
        }
    }

    /// The minor arc (|sweep| <= pi) from `start` to `end` with the given
    /// signed curvature. Falls back to a half circle when the chord is
    /// longer than the diameter by round-off.
    pub fn arc(start: Point, end: Point, curvature: f64) -> Self {
        if curvature == 0.0 {
            return Self::line(start, end);
        }
        let half = 0.5 * start.dist(end) * curvature.abs();
        let sweep = 2.0 * half.min(1.0).asin() * curvature.signum();
        Self {
            start,
            end,
            curvature,
            sweep,
        }
    }

    pub fn arc_with_sweep(start: Point, end: Point, curvature: f64, sweep: f64) -> Self {
        if curvature == 0.0 {
            return Self::line(start, end);
        }
        Self {
            start,
            end,
            curvature,
            sweep,
        }
    }

    /// Arc of the circle `center`, `radius` starting at polar angle `from`
    /// and turning by `sweep` (positive = counterclockwise).
    pub fn from_center(center: Point, radius: f64, from: f64, sweep: f64) -> Self {
        Self {
            start: center + Point::polar(from) * radius,
            end: center + Point::polar(from + sweep) * radius,
            curvature: sweep.signum() / radius,
            sweep,
        }
    }

    /// Fill in a missing sweep (JSON input without one) by the minor-arc rule.
    pub(crate) fn normalized(self) -> Self {
        if self.curvature == 0.0 {
            Self::line(self.start, self.end)
        } else if self.sweep.is_nan() {
            Self::arc(self.start, self.end, self.curvature)
        } else {
            self
        }
    }

    pub fn is_line(&self) -> bool {
        self.curvature.abs() < FLAT
    }

    pub fn chord(&self) -> Point {
        self.end - self.start
    }

    pub fn length(&self) -> f64 {
        if self.is_line() {
            self.chord().norm()
        } else {
            (self.sweep / self.curvature).abs()
        }
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.curvature.abs()
    }

    /// Unit tangent at the start of the segment.
    pub fn start_tangent(&self) -> Point {
        let c = self.chord();
        let dir = c / c.norm();
        dir.rotate(-0.5 * self.sweep)
    }

    pub fn end_tangent(&self) -> Point {
        let c = self.chord();
        let dir = c / c.norm();
        dir.rotate(0.5 * self.sweep)
    }

    /// Center of the supporting circle. Meaningless for straight segments.
    pub fn center(&self) -> Point {
        let t = self.start_tangent();
        self.start + t.perp() / self.curvature
    }

    /// Point at arclength fraction `t` in [0, 1].
    pub fn point_at(&self, t: f64) -> Point {
        if self.is_line() {
            return self.start.lerp(self.end, t);
        }
        let t0 = self.start_tangent();
        let s = t * self.length();
        let phi = t * self.sweep;
        self.start + t0 * (s * sinc(phi)) + t0.perp() * (s * versinc(phi))
    }

    pub fn midpoint(&self) -> Point {
        self.point_at(0.5)
    }

    /// The piece between arclength fractions `t0 < t1`.
    pub fn sub(&self, t0: f64, t1: f64) -> Self {
        let start = if t0 == 0.0 { self.start } else { self.point_at(t0) };
        let end = if t1 == 1.0 { self.end } else { self.point_at(t1) };
        if self.is_line() {
            Self::line(start, end)
        } else {
            Self::arc_with_sweep(start, end, self.curvature, (t1 - t0) * self.sweep)
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            curvature: -self.curvature,
            sweep: -self.sweep,
        }
    }

    /// Contribution to the signed area (1/2) * closed integral of x dy - y dx.
    pub fn green(&self) -> f64 {
        let tri = 0.5 * self.start.cross(self.end);
        if self.is_line() {
            return tri;
        }
        // Circular-segment term (theta - sin theta) / (2 kappa^2), written
        // through the length so that it stays accurate for small sweeps.
        let l = self.length();
        tri + 0.5 * l * l * excess(self.sweep)
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty();
        b.include(self.start);
        b.include(self.end);
        if !self.is_line() {
            let c = self.center();
            let r = self.radius();
            for q in 0..4 {
                let dir = Point::polar(q as f64 * 0.5 * PI);
                if let Some(t) = self.param_of_direction(dir) {
                    if t > 0.0 && t < 1.0 {
                        b.include(c + dir * r);
                    }
                }
            }
        }
        b
    }

    /// Arclength fraction of the arc point whose direction from the center
    /// is `dir`, if that direction is covered by the arc.
    fn param_of_direction(&self, dir: Point) -> Option<f64> {
        let rel = self.angle_from_start(dir);
        let t = rel / self.sweep.abs();
        (t <= 1.0).then_some(t)
    }

    /// Angle in [0, 2pi) from the start direction to `dir`, measured in the
    /// traversal direction of the arc.
    fn angle_from_start(&self, dir: Point) -> f64 {
        let c = self.center();
        let d0 = self.start - c;
        let mut a = d0.cross(dir).atan2(d0.dot(dir));
        if self.sweep < 0.0 {
            a = -a;
        }
        if a < 0.0 {
            a += TAU;
        }
        a
    }

    /// Parameter in [0, 1] of a point assumed to lie on the supporting
    /// circle (or line), clamped to the piece when it is within `tol` of an
    /// endpoint in arclength.
    pub fn param_of(&self, p: Point, tol: f64) -> Option<f64> {
        if self.is_line() {
            let c = self.chord();
            let t = (p - self.start).dot(c) / c.norm_sq();
            let l = c.norm();
            return if t * l >= -tol && (t - 1.0) * l <= tol {
                Some(t.clamp(0.0, 1.0))
            } else {
                None
            };
        }
        let c = self.center();
        let mut a = self.angle_from_start(p - c);
        let r = self.radius();
        // Wrap-around: a point just before the start reads as ~2pi.
        if (TAU - a) * r <= tol {
            a = 0.0;
        }
        let t = a / self.sweep.abs();
        if t <= 1.0 {
            Some(t)
        } else if (a - self.sweep.abs()) * r <= tol {
            Some(1.0)
        } else {
            None
        }
    }

    /// Distance from `p` to the segment.
    pub fn distance(&self, p: Point) -> f64 {
        if self.is_line() {
            let c = self.chord();
            let t = ((p - self.start).dot(c) / c.norm_sq()).clamp(0.0, 1.0);
            return p.dist(self.start + c * t);
        }
        let c = self.center();
        let a = self.angle_from_start(p - c);
        if a <= self.sweep.abs() {
            (p.dist(c) - self.radius()).abs()
        } else {
            p.dist(self.start).min(p.dist(self.end))
        }
    }

    /// Angle subtended at `p` while traversing the segment. Used by the
    /// winding-number test; `p` must not lie on the segment.
    pub fn winding_angle(&self, p: Point) -> f64 {
        let a = self.start - p;
        let b = self.end - p;
        let chord = a.cross(b).atan2(a.dot(b));
        if self.is_line() {
            return chord;
        }
        // The closed loop arc + reversed chord encloses the circular segment
        // once, positively for a left-turning arc. The segment is the part of
        // the disk on the bulge side of the chord.
        let side = self.chord().cross(p - self.start);
        let bulge = if self.curvature > 0.0 { side < 0.0 } else { side > 0.0 };
        if bulge && p.dist(self.center()) < self.radius() {
            chord + TAU * self.curvature.signum()
        } else {
            chord
        }
    }

    /// Arclength fractions in (0, 1) at which the segment crosses the circle
    /// `center`, `radius`, sorted. Endpoint hits (within `tol`) are returned
    /// as exactly 0.0 or 1.0 so callers can deduplicate them.
    pub fn circle_hits(&self, center: Point, radius: f64, tol: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(2);
        if self.is_line() {
            let d = self.chord();
            let f = self.start - center;
            let a = d.norm_sq();
            let b = 2.0 * f.dot(d);
            let c = f.norm_sq() - radius * radius;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return out;
            }
            let sq = disc.sqrt();
            // Numerically stable pair of roots.
            let q = -0.5 * (b + b.signum() * sq);
            let mut roots = if q == 0.0 {
                vec![0.0]
            } else {
                vec![q / a, c / q]
            };
            roots.sort_by(f64::total_cmp);
            let l = a.sqrt();
            for t in roots {
                if t * l >= -tol && (t - 1.0) * l <= tol {
                    out.push(snap(t, l, tol));
                }
            }
            dedup_sorted(&mut out, tol / l.max(tol));
            return out;
        }
        let c = self.center();
        let r = self.radius();
        let dv = c - center;
        let d = dv.norm();
        if d > r + radius + tol || d < (r - radius).abs() - tol || d == 0.0 {
            return out;
        }
        // Foot of the radical line along the center line, then the offset.
        let a = (radius * radius - r * r + d * d) / (2.0 * d);
        let h2 = radius * radius - a * a;
        let h = h2.max(0.0).sqrt();
        let u = dv / d;
        let base = center + u * a;
        let cands: Vec<Point> = if h <= 0.0 {
            vec![base]
        } else {
            vec![base + u.perp() * h, base - u.perp() * h]
        };
        let len = self.length();
        for p in cands {
            if let Some(t) = self.param_of(p, tol) {
                out.push(snap(t, len, tol));
            }
        }
        out.sort_by(f64::total_cmp);
        dedup_sorted(&mut out, tol / len.max(tol));
        out
    }

    pub fn translate(&self, v: Point) -> Self {
        Self {
            start: self.start + v,
            end: self.end + v,
            ..*self
        }
    }

    pub fn rotate(&self, theta: f64) -> Self {
        Self {
            start: self.start.rotate(theta),
            end: self.end.rotate(theta),
            ..*self
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            start: self.start * s,
            end: self.end * s,
            curvature: self.curvature / s,
            sweep: self.sweep,
        }
    }

    /// Mirror image across the x-axis. Reverses the turning direction.
    pub fn reflect_x(&self) -> Self {
        let f = |p: Point| Point::new(p.x, -p.y);
        Self {
            start: f(self.start),
            end: f(self.end),
            curvature: -self.curvature,
            sweep: -self.sweep,
        }
    }

    /// Mirror image across the y-axis.
    pub fn reflect_y(&self) -> Self {
        let f = |p: Point| Point::new(-p.x, p.y);
        Self {
            start: f(self.start),
            end: f(self.end),
            curvature: -self.curvature,
            sweep: -self.sweep,
        }
    }

    /// Whether the segment lies on the circle `center`, `radius`.
    pub fn on_circle(&self, center: Point, radius: f64, tol: f64) -> bool {
        !self.is_line()
            && (self.radius() - radius).abs() <= tol
            && self.center().dist(center) <= tol
    }

    /// Inscribed polyline vertices (excluding the end point) with `n` equal
    /// pieces. With `phase` in (0, 1) the interior vertices are shifted by
    /// that fraction of a piece.
    pub(crate) fn push_vertices(&self, n: usize, phase: f64, out: &mut Vec<Point>) {
        out.push(self.start);
        if self.is_line() {
            return;
        }
        let n = n.max(1);
        if phase == 0.0 {
            for i in 1..n {
                out.push(self.point_at(i as f64 / n as f64));
            }
        } else {
            for i in 0..n {
                out.push(self.point_at((i as f64 + phase) / n as f64));
            }
        }
    }

    /// Number of chords needed so that the sagitta of each is at most `s`.
    pub(crate) fn pieces_for_sagitta(&self, s: f64) -> usize {
        if self.is_line() {
            return 1;
        }
        let r = self.radius();
        let step = if s >= r {
            PI
        } else {
            2.0 * (1.0 - s / r).acos()
        };
        ((self.sweep.abs() / step).ceil() as usize).max(1)
    }
}

fn snap(t: f64, len: f64, tol: f64) -> f64 {
    if t * len <= tol {
        0.0
    } else if (1.0 - t) * len <= tol {
        1.0
    } else {
        t
    }
}

fn dedup_sorted(v: &mut Vec<f64>, eps: f64) {
    v.dedup_by(|a, b| (*a - *b).abs() <= eps);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quarter_arc_geometry() {
        let s = ArcSegment::arc(Point::new(1.0, 0.0), Point::new(0.0, 1.0), 1.0);
        assert_relative_eq!(s.sweep, PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(s.center().norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.length(), PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(s.green(), PI / 4.0, epsilon = 1e-15);
        let m = s.midpoint();
        assert_relative_eq!(m.x, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m.y, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn major_arc_center() {
        let s = ArcSegment::arc_with_sweep(
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            1.0,
            1.5 * PI,
        );
        let c = s.center();
        assert_relative_eq!(c.x, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.y, 1.0, epsilon = 1e-14);
        let b = s.bbox();
        assert_relative_eq!(b.min.x, 0.0, epsilon = 1e-14);
        assert_relative_eq!(b.max.x, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn tiny_sweep_green_matches_series() {
        // Very flat arc: the circular-segment term must stay accurate.
        let k = 1e-7;
        let s = ArcSegment::arc(Point::new(0.0, 0.0), Point::new(1.0, 0.0), k);
        let expect = k / 12.0; // L^3 kappa / 12 to leading order
        assert_relative_eq!(s.green(), expect, max_relative = 1e-6);
    }

    #[test]
    fn sub_and_reverse() {
        let s = ArcSegment::from_center(Point::new(2.0, -1.0), 3.0, 0.3, 2.0);
        let a = s.sub(0.0, 0.4);
        let b = s.sub(0.4, 1.0);
        assert_relative_eq!(a.end.dist(b.start), 0.0, epsilon = 1e-14);
        assert_relative_eq!(a.green() + b.green(), s.green(), epsilon = 1e-13);
        assert_relative_eq!(s.reversed().green(), -s.green(), epsilon = 1e-14);
    }

    #[test]
    fn circle_hits_line_and_arc() {
        let l = ArcSegment::line(Point::new(-2.0, 0.0), Point::new(2.0, 0.0));
        let h = l.circle_hits(Point::ORIGIN, 1.0, 1e-12);
        assert_eq!(h.len(), 2);
        assert_relative_eq!(h[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(h[1], 0.75, epsilon = 1e-15);

        let a = ArcSegment::from_center(Point::new(1.0, 0.0), 1.0, 0.0, TAU - 0.1);
        let h = a.circle_hits(Point::ORIGIN, 1.0, 1e-12);
        assert_eq!(h.len(), 2);
        // Intersections at angles +-2pi/3 around (1,0).
        assert_relative_eq!(h[0] * a.sweep, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(h[1] * a.sweep, 4.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn winding_of_half_disk() {
        let segs = [
            ArcSegment::from_center(Point::ORIGIN, 1.0, 0.0, PI),
            ArcSegment::line(Point::new(-1.0, 0.0), Point::new(1.0, 0.0)),
        ];
        let w = |p: Point| segs.iter().map(|s| s.winding_angle(p)).sum::<f64>() / TAU;
        assert_relative_eq!(w(Point::new(0.1, 0.5)), 1.0, epsilon = 1e-12);
        assert_relative_eq!(w(Point::new(0.1, -0.5)), 0.0, epsilon = 1e-12);
        assert_relative_eq!(w(Point::new(0.0, 1.5)), 0.0, epsilon = 1e-12);
    }
}
