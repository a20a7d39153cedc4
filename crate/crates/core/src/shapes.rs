//! Shape families, normalized to the area of the unit disk.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::{ArcSegment, ArcShape, Point};

/// Curvature bounds for the P(k) solve.
pub const H_MAX: f64 = 1e3;
pub const H_MIN: f64 = 1e-3;

/// A member of P(k): `k` outer arcs of curvature `h1` alternating with `k`
/// inner arcs of curvature `h2`, tangent to each other at `2k` junctions on
/// the unit circle.
///
/// `beta` is the angle at which the boundary crosses the unit circle at a
/// junction; `junction_angle` is the polar angle of the first junction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkParams {
    pub k: usize,
    pub h1: f64,
    pub h2: f64,
    pub beta: f64,
    pub junction_angle: f64,
    pub closure_residual: f64,
    pub tangency_residual: f64,
    pub area_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiscuitParams {
    #[serde(alias = "L")]
    pub half_length: f64,
    pub cap_radius: f64,
}

/// Doubly symmetric eight-arc shape. One quadrant of the boundary runs from
/// the positive x-axis (tangent pointing up) to the positive y-axis
/// (tangent pointing left) through a cap arc, a middle arc and a top arc.
/// The top arc's length follows from the total turning of a quarter turn;
/// the result is rescaled to area pi, so only ratios matter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskParams {
    pub cap_curvature: f64,
    pub mid_curvature: f64,
    pub top_curvature: f64,
    pub cap_length: f64,
    pub mid_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub a: f64,
}

/// Family descriptor as used in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Family {
    Disk,
    Oval {
        beta: f64,
    },
    Pk {
        k: usize,
        beta: f64,
    },
    Biscuit {
        #[serde(alias = "L")]
        half_length: f64,
    },
    Mask(MaskParams),
    Ellipse {
        a: f64,
    },
}

impl Family {
    pub fn build(&self) -> Result<ArcShape> {
        Ok(match *self {
            Family::Disk => make_disk(),
            Family::Oval { beta } => make_oval(beta)?.1,
            Family::Pk { k, beta } => make_pk(k, beta)?.1,
            Family::Biscuit { half_length } => make_biscuit(half_length)?.1,
            Family::Mask(p) => make_mask(&p)?,
            Family::Ellipse { a } => make_ellipse(a)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Disk => "disk",
            Family::Oval { .. } => "oval",
            Family::Pk { .. } => "pk",
            Family::Biscuit { .. } => "biscuit",
            Family::Mask(_) => "mask",
            Family::Ellipse { .. } => "ellipse",
        }
    }
}

/// Full circle of radius `r` about `c` as four quarter arcs.
pub fn circle(c: Point, r: f64) -> ArcShape {
    ArcShape::new(
        (0..4)
            .map(|i| ArcSegment::from_center(c, r, i as f64 * FRAC_PI_2, FRAC_PI_2))
            .collect(),
    )
    .expect("circle is valid")
}

pub fn make_disk() -> ArcShape {
    circle(Point::ORIGIN, 1.0)
}

/// Green contribution of the counterclockwise arc of circle (c, r) between
/// polar angles a0 < a1.
fn arc_green(c: Point, r: f64, a0: f64, a1: f64) -> f64 {
    0.5 * (r * r * (a1 - a0) + r * (c.x * (a1.sin() - a0.sin()) - c.y * (a1.cos() - a0.cos())))
}

/// Circle data of a P(k) boundary for crossing angle `gamma` and junction
/// polar angle `bp`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PkGeom {
    pub r1: f64,
    pub c1: Point,
    pub r2: f64,
    pub c2: Point,
    pub phi: f64,
}

pub(crate) fn pk_geom(k: usize, gamma: f64, bp: f64) -> PkGeom {
    // The outer arc is centred on the x-axis and meets the unit circle at
    // polar angle bp with normal direction phi = bp + gamma. The inner arc
    // shares that normal at the junction and is centred on the ray at angle
    // pi/k, which makes it symmetric about that ray.
    let phi = bp + gamma;
    let r1 = bp.sin() / phi.sin();
    let c1 = Point::new(bp.cos() - r1 * phi.cos(), 0.0);
    let n = Point::polar(phi);
    let u = Point::polar(PI / k as f64);
    let r2 = r1 + c1.cross(u) / n.cross(u);
    let c2 = c1 + n * (r1 - r2);
    PkGeom { r1, c1, r2, c2, phi }
}

fn pk_area(k: usize, g: &PkGeom) -> f64 {
    let kf = k as f64;
    kf * (arc_green(g.c1, g.r1, -g.phi, g.phi) + arc_green(g.c2, g.r2, g.phi, TAU / kf - g.phi))
}

/// Root of `f` in `[a, b]` (sign change assumed) by Newton steps with
/// finite-difference slopes, falling back to bisection whenever a step
/// leaves the bracket or fails to halve the residual.
fn bracketed_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SolverFailure {
            iterations: 0,
            best_residual: fa.abs().min(fb.abs()),
        });
    }
    let mut x = 0.5 * (a + b);
    let mut fx = f(x);
    let mut best = fx.abs();
    for _ in 0..200 {
        if fx == 0.0 || (b - a).abs() < tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let h = 1e-7 * (b - a).abs().max(1e-12);
        let slope = (f(x + h) - fx) / h;
        let newton = x - fx / slope;
        let mut next = if slope.is_finite() && slope != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let fnext = f(next);
        if fnext.abs() > 0.5 * fx.abs() && (next - x).abs() > tol {
            next = 0.5 * (a + b);
            x = next;
            fx = f(x);
        } else {
            x = next;
            fx = fnext;
        }
        best = best.min(fx.abs());
        if fx.abs() < 1e-15 {
            return Ok(x);
        }
    }
    if (b - a).abs() < 1e3 * tol {
        Ok(x)
    } else {
        Err(Error::SolverFailure {
            iterations: 200,
            best_residual: best,
        })
    }
}

/// Build the P(k) set with crossing angle `beta`, normalized to area pi.
pub fn make_pk(k: usize, beta: f64) -> Result<(PkParams, ArcShape)> {
    if k < 2 {
        return Err(Error::InfeasibleParameter(format!("k = {k} must be at least 2")));
    }
    let kf = k as f64;
    if !(beta > 0.0 && beta < PI / kf) {
        return Err(Error::InfeasibleParameter(format!(
            "beta = {beta} outside (0, pi/{k})"
        )));
    }
    let upper = PI / kf - beta;
    let resid = |bp: f64| pk_area(k, &pk_geom(k, beta, bp)) - PI;
    // Scan for sign changes, then keep the root whose curvatures are in the
    // admissible box. Spurious roots with a nearly flat inner arc exist
    // close to the end of the range.
    let n = 400;
    let xs: Vec<f64> = (0..=n)
        .map(|i| upper * (1e-9 + (1.0 - 2e-9) * i as f64 / n as f64))
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| resid(x)).collect();
    let mut last_err = None;
    for i in 0..n {
        if !(vs[i].is_finite() && vs[i + 1].is_finite()) || vs[i].signum() == vs[i + 1].signum() {
            continue;
        }
        let bp = match bracketed_root(resid, xs[i], xs[i + 1], 1e-15) {
            Ok(bp) => bp,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let g = pk_geom(k, beta, bp);
        let (h1, h2) = (1.0 / g.r1, 1.0 / g.r2);
        if !(h1 > 1.0 && h1 <= H_MAX && (H_MIN..1.0).contains(&h2)) {
            continue;
        }
        let shape = pk_shape(k, &g)?;
        let params = pk_params(k, beta, bp, &g, &shape);
        return Ok((params, shape));
    }
    Err(last_err.unwrap_or_else(|| {
        Error::InfeasibleParameter(format!(
            "no P({k}) set with crossing angle {beta} and curvatures in (1, {H_MAX}] x [{H_MIN}, 1)"
        ))
    }))
}

fn pk_shape(k: usize, g: &PkGeom) -> Result<ArcShape> {
    let kf = k as f64;
    let outer = ArcSegment::from_center(g.c1, g.r1, -g.phi, 2.0 * g.phi);
    let inner_sweep = TAU / kf - 2.0 * g.phi;
    let mut inner = ArcSegment::from_center(g.c2, g.r2, g.phi, inner_sweep);
    inner.start = outer.end;
    let mut segs = Vec::with_capacity(2 * k);
    for l in 0..k {
        let rot = l as f64 * TAU / kf;
        segs.push(outer.rotate(rot));
        segs.push(inner.rotate(rot));
    }
    // Share junction points exactly.
    for i in 0..segs.len() {
        let j = (i + 1) % segs.len();
        segs[i].end = segs[j].start;
    }
    ArcShape::new(segs)
}

fn pk_params(k: usize, beta: f64, bp: f64, g: &PkGeom, shape: &ArcShape) -> PkParams {
    let kf = k as f64;
    let outer_end = g.c1 + Point::polar(g.phi) * g.r1;
    let inner_start = g.c2 + Point::polar(g.phi) * g.r2;
    let inner_end = g.c2 + Point::polar(TAU / kf - g.phi) * g.r2;
    let next_outer = (g.c1 + Point::polar(-g.phi) * g.r1).rotate(TAU / kf);
    let closure = outer_end.dist(inner_start).max(inner_end.dist(next_outer));
    let segs = shape.segments();
    let tangency = (0..segs.len())
        .map(|i| segs[i].end_tangent().dist(segs[(i + 1) % segs.len()].start_tangent()))
        .fold(0.0, f64::max);
    PkParams {
        k,
        h1: 1.0 / g.r1,
        h2: 1.0 / g.r2,
        beta,
        junction_angle: bp,
        closure_residual: closure,
        tangency_residual: tangency,
        area_residual: (shape.area() - PI).abs(),
    }
}

pub fn make_oval(beta: f64) -> Result<(PkParams, ArcShape)> {
    make_pk(2, beta)
}

/// Rectangle of half-length `L` capped by two half disks, area pi.
pub fn make_biscuit(half_length: f64) -> Result<(BiscuitParams, ArcShape)> {
    if !(half_length >= 0.0 && half_length.is_finite()) {
        return Err(Error::InfeasibleParameter(format!(
            "biscuit half-length {half_length} must be non-negative"
        )));
    }
    let l = half_length;
    let rho = biscuit_radius(l);
    let params = BiscuitParams {
        half_length: l,
        cap_radius: rho,
    };
    if l == 0.0 {
        return Ok((params, circle(Point::ORIGIN, rho)));
    }
    let right = ArcSegment::from_center(Point::new(l, 0.0), rho, -FRAC_PI_2, PI);
    let left = ArcSegment::from_center(Point::new(-l, 0.0), rho, FRAC_PI_2, PI);
    let top = ArcSegment::line(right.end, left.start);
    let bottom = ArcSegment::line(left.end, right.start);
    Ok((params, ArcShape::new(vec![right, top, left, bottom])?))
}

/// Positive root of 4 L rho + pi rho^2 = pi.
pub fn biscuit_radius(l: f64) -> f64 {
    // Rationalized form of (-4L + sqrt(16L^2 + 4pi^2)) / (2pi).
    PI / (2.0 * l + (4.0 * l * l + PI * PI).sqrt())
}

/// Build a mask from its quadrant description.
pub fn make_mask(p: &MaskParams) -> Result<ArcShape> {
    let ks = [p.cap_curvature, p.mid_curvature, p.top_curvature];
    if ks.iter().any(|k| !k.is_finite()) || !(p.cap_length > 0.0 && p.mid_length > 0.0) {
        return Err(Error::InfeasibleParameter(format!("invalid mask parameters {p:?}")));
    }
    if p.top_curvature.abs() < 1e-12 {
        return Err(Error::InfeasibleParameter("top arc must be curved".into()));
    }
    let top_turn = FRAC_PI_2 - p.cap_curvature * p.cap_length - p.mid_curvature * p.mid_length;
    let top_length = top_turn / p.top_curvature;
    if !(top_length > 0.0) {
        return Err(Error::InfeasibleParameter(format!(
            "mask turning leaves top arc length {top_length}"
        )));
    }
    // Quadrant chain from (0,0) with tangent +y; shifted afterwards so that
    // it ends on the y-axis.
    let mut pos = Point::ORIGIN;
    let mut psi = FRAC_PI_2;
    let mut quad = Vec::with_capacity(3);
    for (k, l) in [(p.cap_curvature, p.cap_length), (p.mid_curvature, p.mid_length), (p.top_curvature, top_length)] {
        let t = Point::polar(psi);
        let turn = k * l;
        let seg = if k.abs() < 1e-14 {
            ArcSegment::line(pos, pos + t * l)
        } else {
            let c = pos + t.perp() / k;
            let end = c + (pos - c).rotate(turn);
            ArcSegment::arc_with_sweep(pos, end, k, turn)
        };
        pos = seg.end;
        psi += turn;
        quad.push(seg);
    }
    let shift = Point::new(-pos.x, 0.0);
    if !(shift.x > 0.0) || !(pos.y > 0.0) {
        return Err(Error::InfeasibleParameter(
            "mask quadrant does not close onto the axes".into(),
        ));
    }
    let mut q1: Vec<ArcSegment> = quad.iter().map(|s| s.translate(shift)).collect();
    q1[0].start.y = 0.0;
    q1[2].end.x = 0.0;
    let q2: Vec<ArcSegment> = q1.iter().rev().map(|s| s.reflect_y().reversed()).collect();
    let upper: Vec<ArcSegment> = q1.iter().chain(q2.iter()).copied().collect();
    let lower: Vec<ArcSegment> = upper.iter().map(|s| s.rotate(PI)).collect();
    let mut chain: Vec<ArcSegment> = upper.into_iter().chain(lower).collect();
    let n = chain.len();
    for i in 0..n {
        let j = (i + 1) % n;
        chain[i].end = chain[j].start;
    }
    // Merge the pieces that continue across a symmetry axis.
    let merged = merge_continuations(chain);
    let shape = ArcShape::new(merged)?;
    Ok(shape.with_area(PI))
}

fn merge_continuations(chain: Vec<ArcSegment>) -> Vec<ArcSegment> {
    let same = |a: &ArcSegment, b: &ArcSegment| {
        (a.curvature - b.curvature).abs() <= 1e-12 * (1.0 + a.curvature.abs())
            && a.end_tangent().dist(b.start_tangent()) <= 1e-9
    };
    let mut out: Vec<ArcSegment> = Vec::with_capacity(chain.len());
    for s in chain {
        match out.last_mut() {
            Some(last) if same(last, &s) && (last.sweep + s.sweep).abs() < TAU - 1e-9 => {
                let merged = if last.is_line() {
                    ArcSegment::line(last.start, s.end)
                } else {
                    ArcSegment::arc_with_sweep(last.start, s.end, last.curvature, last.sweep + s.sweep)
                };
                *last = merged;
            }
            _ => out.push(s),
        }
    }
    if out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if same(&last, &first) && (last.sweep + first.sweep).abs() < TAU - 1e-9 {
            out.pop();
            out[0] = if first.is_line() {
                ArcSegment::line(last.start, first.end)
            } else {
                ArcSegment::arc_with_sweep(last.start, first.end, first.curvature, last.sweep + first.sweep)
            };
        }
    }
    out
}

/// Circle through three points as an arc from `a` via `m` to `b`.
pub(crate) fn three_point_arc(a: Point, m: Point, b: Point) -> ArcSegment {
    let d = 2.0 * (a.x * (m.y - b.y) + m.x * (b.y - a.y) + b.x * (a.y - m.y));
    if d.abs() < 1e-300 {
        return ArcSegment::line(a, b);
    }
    let (a2, m2, b2) = (a.norm_sq(), m.norm_sq(), b.norm_sq());
    let c = Point::new(
        (a2 * (m.y - b.y) + m2 * (b.y - a.y) + b2 * (a.y - m.y)) / d,
        (a2 * (b.x - m.x) + m2 * (a.x - b.x) + b2 * (m.x - a.x)) / d,
    );
    let r = a.dist(c);
    let turn = (b - a).cross(m - a);
    // Left turn from a to b through m means m lies to the right of the chord.
    let sign = if turn < 0.0 { 1.0 } else { -1.0 };
    let (da, db) = (a - c, b - c);
    let mut sweep = da.cross(db).atan2(da.dot(db));
    if sign > 0.0 && sweep < 0.0 {
        sweep += TAU;
    } else if sign < 0.0 && sweep > 0.0 {
        sweep -= TAU;
    }
    ArcSegment::arc_with_sweep(a, b, sign / r, sweep)
}

/// Arc approximation of the ellipse with semi-axes `a` and `1/a` using
/// `n` arcs (a multiple of 4), each through three boundary points.
pub fn ellipse_arcs(a: f64, n: usize) -> Result<ArcShape> {
    let b = 1.0 / a;
    let pt = |t: f64| Point::new(a * t.cos(), b * t.sin());
    let n = n.max(4).div_ceil(4) * 4;
    let dt = TAU / n as f64;
    let mut segs: Vec<ArcSegment> = (0..n)
        .map(|i| {
            let t0 = i as f64 * dt;
            three_point_arc(pt(t0), pt(t0 + 0.5 * dt), pt(t0 + dt))
        })
        .collect();
    for i in 0..n {
        let j = (i + 1) % n;
        segs[i].end = segs[j].start;
    }
    ArcShape::new(segs)
}

/// Ellipse of aspect `a` and area pi. Exactly the unit disk for `a = 1`;
/// otherwise an arc approximation refined until its area is within 1e-9
/// of the ellipse area, then rescaled to area pi.
pub fn make_ellipse(a: f64) -> Result<ArcShape> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::InfeasibleParameter(format!("ellipse aspect {a} must be >= 1")));
    }
    if a == 1.0 {
        return Ok(make_disk());
    }
    let mut n = 16;
    loop {
        let s = ellipse_arcs(a, n)?;
        if (s.area() - PI).abs() < 1e-9 || n >= 1 << 14 {
            return Ok(s.with_area(PI));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn biscuit_normalization() {
        for l in [0.0, 0.3, 1.0, 2.5] {
            let (p, s) = make_biscuit(l).unwrap();
            assert_relative_eq!(4.0 * l * p.cap_radius + PI * p.cap_radius.powi(2), PI, max_relative = 1e-12);
            assert_relative_eq!(s.area(), PI, max_relative = 1e-12);
            assert_relative_eq!(s.perimeter(), 4.0 * l + TAU * p.cap_radius, max_relative = 1e-12);
        }
        let rho = (-4.0 + (16.0 + 4.0 * PI * PI).sqrt()) / (2.0 * PI);
        assert_relative_eq!(make_biscuit(1.0).unwrap().0.cap_radius, rho, max_relative = 1e-14);
    }

    #[test]
    fn oval_basic() {
        let (p, s) = make_oval(0.3).unwrap();
        assert!(p.h1 > 1.0 && p.h2 < 1.0 && p.h2 > 0.0);
        assert!(p.closure_residual < 1e-9 && p.tangency_residual < 1e-9);
        assert_relative_eq!(s.area(), PI, max_relative = 1e-9);
        assert_eq!(s.len(), 4);
        // Junctions lie on the unit circle.
        for seg in s.segments() {
            assert_relative_eq!(seg.start.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pk_feasible_examples() {
        for (k, b) in [(3, 0.25), (4, 0.2), (5, 0.1)] {
            let (p, s) = make_pk(k, b).unwrap();
            assert!(p.h1 > 1.0 && p.h2 < 1.0 && p.h2 >= H_MIN, "{p:?}");
            assert_relative_eq!(s.area(), PI, max_relative = 1e-9);
            assert_eq!(s.len(), 2 * k);
        }
        assert!(make_pk(1, 0.1).is_err());
        assert!(make_pk(2, 2.0).is_err());
    }

    #[test]
    fn small_beta_tends_to_disk() {
        let (p, _) = make_oval(1e-4).unwrap();
        assert!((p.h1 - 1.0).abs() < 1e-3 && (p.h2 - 1.0).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn mask_degenerates_to_disk() {
        let p = MaskParams {
            cap_curvature: 1.0,
            mid_curvature: 1.0,
            top_curvature: 1.0,
            cap_length: 0.4,
            mid_length: 0.5,
        };
        let s = make_mask(&p).unwrap();
        assert_relative_eq!(s.area(), PI, max_relative = 1e-12);
        assert_relative_eq!(s.perimeter(), TAU, max_relative = 1e-12);
        assert_eq!(s.curvature_profile().len(), 1);
    }

    #[test]
    fn mask_has_eight_arcs_and_symmetry() {
        let p = MaskParams {
            cap_curvature: 1.5,
            mid_curvature: 0.3,
            top_curvature: -0.5,
            cap_length: 1.2,
            mid_length: 0.5,
        };
        let s = make_mask(&p).unwrap();
        assert_eq!(s.len(), 8);
        assert_relative_eq!(s.area(), PI, max_relative = 1e-12);
        assert_relative_eq!(s.reflect_x().area(), PI, max_relative = 1e-12);
    }

    #[test]
    fn ellipse_area_and_disk_limit() {
        assert_relative_eq!(make_ellipse(1.0).unwrap().perimeter(), TAU, max_relative = 1e-15);
        let e = make_ellipse(1.1).unwrap();
        assert_relative_eq!(e.area(), PI, max_relative = 1e-12);
        let raw = ellipse_arcs(1.1, 256).unwrap();
        assert!((raw.area() - PI).abs() < 1e-6);
    }

    #[test]
    fn family_json() {
        let f: Family = serde_json::from_str(r#"{"family":"biscuit","params":{"L":1.0}}"#).unwrap();
        assert_eq!(f, Family::Biscuit { half_length: 1.0 });
        let f: Family = serde_json::from_str(r#"{"family":"disk"}"#).unwrap();
        assert_eq!(f, Family::Disk);
        assert!(serde_json::from_str::<Family>(r#"{"family":"blob","params":{}}"#).is_err());
    }
}
