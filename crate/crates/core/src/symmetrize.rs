//! Annular symmetrization about the origin.
//!
//! A star-shaped set whose trace on every circle `|x| = rho` consists of
//! `2s` arcs of equal half-width `theta(rho)` (one pair per symmetry axis)
//! is described by its [`AnnularProfile`]. Symmetrizing keeps the trace
//! length `2 s rho theta(rho)` of every circle and rearranges it into two
//! opposite arcs centred on the x-axis: `theta_2 = (s / 2) theta_s`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom2d::{circle_boundary_trace, ArcShape, BBox, Point};
use crate::isoperimetry::{asymmetry, asymmetry_with, AsymmetryOptions};
use crate::shapes::{make_pk, pk_geom, three_point_arc, PkParams};

/// Intervals per profile by default, shared among the pieces.
pub const DEFAULT_INTERVALS: usize = 2048;
/// Fraction of `[rho1, rho2]` at each end where curvature is not evaluated.
pub const ENDPOINT_MARGIN: f64 = 0.01;

/// Relative error tolerated by the profile area quadrature.
pub const AREA_RTOL: f64 = 1e-8;
/// Relative error tolerated by the profile perimeter quadrature.
pub const PERIMETER_RTOL: f64 = 1e-6;

/// `theta` on `[rho_min, rho_max]` as a Chebyshev series in `x`, where
/// `tau = pi (x + 1) / 2` and `rho = rho_min + (rho_max - rho_min)(1 - cos tau) / 2`.
///
/// The profile has square-root behaviour where the boundary is tangent to
/// a circle about the origin; in `tau` it is analytic.
#[derive(Clone, Debug, Serialize)]
pub struct ProfilePiece {
    pub rho_min: f64,
    pub rho_max: f64,
    /// Values at the Chebyshev–Lobatto nodes `x_j = cos(j pi / n)`.
    pub values: Vec<f64>,
    #[serde(skip)]
    coeffs: Vec<f64>,
    #[serde(skip)]
    d1: Vec<f64>,
    #[serde(skip)]
    d2: Vec<f64>,
}

fn cheb_coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let table: Vec<f64> = (0..2 * n).map(|i| (PI * i as f64 / n as f64).cos()).collect();
    (0..=n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    w * v * table[(j * k) % (2 * n)]
                })
                .sum();
            let c = 2.0 * s / n as f64;
            if k == 0 || k == n {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let mut d = vec![0.0; n + 1];
    if n == 0 {
        return d;
    }
    for k in (1..=n).rev() {
        let next = if k < n { d[k + 1] } else { 0.0 };
        d[k - 1] = next + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// Clenshaw–Curtis integral over `[-1, 1]` from Lobatto values.
fn clenshaw_curtis(values: &[f64]) -> f64 {
    cheb_coeffs(values)
        .iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, c)| 2.0 * c / (1.0 - (k * k) as f64))
        .sum()
}

/// Integral with an error estimate from the nested half-size rule.
fn integrate(values: &[f64], what: &str, rtol: f64) -> Result<f64> {
    let full = clenshaw_curtis(values);
    let half: Vec<f64> = values.iter().step_by(2).copied().collect();
    let coarse = clenshaw_curtis(&half);
    let err = (full - coarse).abs();
    // Halving the nodes of a spectral rule squares its error at most; the
    // difference therefore bounds the fine error generously.
    if err > rtol * full.abs().max(1e-300) {
        return Err(Error::QuadratureFailure(format!(
            "{what}: nested rules differ by {err:e} (value {full})"
        )));
    }
    Ok(full)
}

impl ProfilePiece {
    fn from_fn(rho_min: f64, rho_max: f64, intervals: usize, f: &(impl Fn(f64) -> f64 + Sync)) -> Self {
        let n = intervals.max(4).next_multiple_of(2);
        let values: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|j| {
                let x = (PI * j as f64 / n as f64).cos();
                f(Self::rho_at(rho_min, rho_max, x))
            })
            .collect();
        Self::from_values(rho_min, rho_max, values)
    }

    fn from_values(rho_min: f64, rho_max: f64, values: Vec<f64>) -> Self {
        let coeffs = cheb_coeffs(&values);
        let d1 = cheb_derivative(&coeffs);
        let d2 = cheb_derivative(&d1);
        Self {
            rho_min,
            rho_max,
            values,
            coeffs,
            d1,
            d2,
        }
    }

    fn rho_at(a: f64, b: f64, x: f64) -> f64 {
        let tau = 0.5 * PI * (x + 1.0);
        a + 0.5 * (b - a) * (1.0 - tau.cos())
    }

    fn n(&self) -> usize {
        self.values.len() - 1
    }

    fn node(&self, j: usize) -> f64 {
        (PI * j as f64 / self.n() as f64).cos()
    }

    fn x_of_rho(&self, rho: f64) -> f64 {
        let w = self.rho_max - self.rho_min;
        let c = (1.0 - 2.0 * (rho - self.rho_min) / w).clamp(-1.0, 1.0);
        2.0 * c.acos() / PI - 1.0
    }

    /// `(rho, rho_tau, rho_tautau)` at `x`.
    fn rho_derivs(&self, x: f64) -> (f64, f64, f64) {
        let tau = 0.5 * PI * (x + 1.0);
        let h = 0.5 * (self.rho_max - self.rho_min);
        let (s, c) = tau.sin_cos();
        (self.rho_min + h * (1.0 - c), h * s, h * c)
    }

    /// `(theta, theta_tau, theta_tautau)` at `x`.
    fn theta_derivs(&self, x: f64) -> (f64, f64, f64) {
        let k = 2.0 / PI;
        (
            clenshaw(&self.coeffs, x),
            k * clenshaw(&self.d1, x),
            k * k * clenshaw(&self.d2, x),
        )
    }

    fn scaled(&self, factor: f64) -> Self {
        Self::from_values(self.rho_min, self.rho_max, self.values.iter().map(|v| v * factor).collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnularProfile {
    pub rho1: f64,
    pub rho2: f64,
    pub symmetry_order: usize,
    /// Consecutive pieces covering `[rho1, rho2]`.
    pub pieces: Vec<ProfilePiece>,
}

impl AnnularProfile {
    /// Profile `theta = f(rho)` with pieces split at `breaks` (radii
    /// strictly inside `(rho1, rho2)` where `f` is not smooth).
    pub fn from_fn(
        rho1: f64,
        rho2: f64,
        symmetry_order: usize,
        breaks: &[f64],
        intervals: usize,
        f: impl Fn(f64) -> f64 + Sync,
    ) -> Result<Self> {
        if !(rho1 >= 0.0 && rho2 - rho1 > 1e-9 * rho2.max(1.0)) {
            return Err(Error::DegenerateAnnulus {
                inner: rho1,
                outer: rho2,
            });
        }
        if symmetry_order == 0 {
            return Err(Error::Precondition("symmetry order must be positive".into()));
        }
        let mut cuts = vec![rho1];
        let span = rho2 - rho1;
        let mut inner: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&b| b > rho1 + 1e-9 * span && b < rho2 - 1e-9 * span)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * span);
        cuts.extend(inner);
        cuts.push(rho2);
        let per = (intervals / (cuts.len() - 1)).max(64);
        let pieces = cuts.windows(2).map(|w| ProfilePiece::from_fn(w[0], w[1], per, &f)).collect();
        Ok(Self {
            rho1,
            rho2,
            symmetry_order,
            pieces,
        })
    }

    fn piece(&self, rho: f64) -> &ProfilePiece {
        self.pieces
            .iter()
            .find(|p| rho <= p.rho_max)
            .unwrap_or_else(|| self.pieces.last().unwrap())
    }

    pub fn theta(&self, rho: f64) -> f64 {
        let p = self.piece(rho);
        clenshaw(&p.coeffs, p.x_of_rho(rho))
    }

    /// `(theta', theta'')` with respect to `rho`.
    pub fn theta_derivatives(&self, rho: f64) -> (f64, f64) {
        let p = self.piece(rho);
        let x = p.x_of_rho(rho);
        let (_, r1, r2) = p.rho_derivs(x);
        let (_, t1, t2) = p.theta_derivs(x);
        let d1 = t1 / r1;
        (d1, (t2 - d1 * r2) / (r1 * r1))
    }

    /// Checks `theta(rho1) = pi/s`, `theta(rho2) = 0` and monotone decrease
    /// at the nodes.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let lim = PI / self.symmetry_order as f64;
        let first = self.pieces[0].values.last().copied().unwrap();
        let last = self.pieces.last().unwrap().values[0];
        if (first - lim).abs() > tol || last.abs() > tol {
            return Err(Error::InvalidShape(format!(
                "profile ends at theta = {first}, {last}; expected {lim}, 0"
            )));
        }
        for p in &self.pieces {
            // Nodes run from rho_max to rho_min, so theta must increase.
            if p.values.windows(2).any(|w| w[1] < w[0] - tol) {
                return Err(Error::InvalidShape("profile is not decreasing in rho".into()));
            }
        }
        Ok(())
    }

    /// `(rho, theta)` pairs at every node, by increasing radius.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let start = if out.is_empty() { 0 } else { 1 };
            for j in (0..=p.n()).rev().skip(start) {
                out.push((ProfilePiece::rho_at(p.rho_min, p.rho_max, p.node(j)), p.values[j]));
            }
        }
        out
    }
}

fn validate_center(shape: &ArcShape) -> Result<()> {
    match shape.contains(Point::ORIGIN) {
        Ok(true) => Ok(()),
        _ => Err(Error::InvalidCenter),
    }
}

/// Extreme distances from the origin to the boundary and the radii where
/// the trace changes analytically (segment ends, tangencies).
fn radial_extent(shape: &ArcShape) -> (f64, f64, Vec<f64>) {
    let tol = 1e-12 * shape.diameter();
    let mut radii = Vec::new();
    for s in shape.segments() {
        radii.push(s.start.norm());
        if s.is_line() {
            radii.push(s.distance(Point::ORIGIN));
            continue;
        }
        let c = s.center();
        let r = s.radius();
        if c.norm() <= tol {
            radii.push(r);
            continue;
        }
        let u = c / c.norm();
        for p in [c + u * r, c - u * r] {
            if s.param_of(p, 1e-9 * r).is_some() {
                radii.push(p.norm());
            }
        }
    }
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    (lo, hi, radii)
}

/// Profile of a P(k) set from the closed-form intersections of its arcs
/// with circles about the origin.
pub fn profile_from_pk(params: &PkParams) -> Result<AnnularProfile> {
    let k = params.k;
    let g = pk_geom(k, params.beta, params.junction_angle);
    let lim = PI / k as f64;
    let u = Point::polar(lim);
    let c1 = g.c1.x;
    // Inner circle centre is -s u.
    let s = -g.c2.dot(u);
    let rho1 = g.r2 - s;
    let rho2 = c1 + g.r1;
    if !(rho1 > 0.0) {
        return Err(Error::InvalidCenter);
    }
    if !(s > 1e-12) {
        return Err(Error::InvalidShape("inner arc centres are not beyond the origin".into()));
    }
    let (r1, r2) = (g.r1, g.r2);
    // Half-angle forms of the law of cosines, exact at the tangency radii.
    let theta = move |rho: f64| {
        if rho >= 1.0 {
            let h = (rho2 - rho) * (rho - c1 + r1) / (4.0 * rho * c1);
            2.0 * h.clamp(0.0, 1.0).sqrt().asin()
        } else {
            let h = (rho - rho1) * (rho + s + r2) / (4.0 * rho * s);
            lim - 2.0 * h.clamp(0.0, 1.0).sqrt().asin()
        }
    };
    AnnularProfile::from_fn(rho1, rho2, k, &[1.0], DEFAULT_INTERVALS, theta)
}

/// Profile of an arc shape with `s`-fold dihedral symmetry about the
/// origin, from its traces on circles: `theta = (trace angle) / (2 s)`.
pub fn profile_from_shape(shape: &ArcShape, symmetry_order: usize) -> Result<AnnularProfile> {
    validate_center(shape)?;
    let (rho1, rho2, breaks) = radial_extent(shape);
    let s = symmetry_order as f64;
    AnnularProfile::from_fn(rho1, rho2, symmetry_order, &breaks, DEFAULT_INTERVALS, |rho| {
        circle_boundary_trace(shape, Point::ORIGIN, rho).total_angle() / (2.0 * s)
    })
}

/// `theta_2 = (s / 2) theta_s`, keeping every circle's trace length.
pub fn annular_symmetrize(profile: &AnnularProfile) -> Result<AnnularProfile> {
    let s = profile.symmetry_order;
    if s < 2 {
        return Err(Error::Precondition(format!("symmetry order {s} < 2")));
    }
    let factor = s as f64 / 2.0;
    let pieces: Vec<ProfilePiece> = profile.pieces.iter().map(|p| p.scaled(factor)).collect();
    let limit = PI / 2.0;
    for p in &pieces {
        if let Some(&t) = p.values.iter().find(|&&t| t > limit + 1e-12) {
            return Err(Error::Overlap { theta: t, limit });
        }
    }
    Ok(AnnularProfile {
        rho1: profile.rho1,
        rho2: profile.rho2,
        symmetry_order: 2,
        pieces,
    })
}

/// `pi rho1^2 + int 2 s rho theta(rho) d rho`.
pub fn profile_area(profile: &AnnularProfile) -> Result<f64> {
    let s = profile.symmetry_order as f64;
    let mut total = PI * profile.rho1 * profile.rho1;
    for p in &profile.pieces {
        let vals: Vec<f64> = (0..=p.n())
            .map(|j| {
                let (rho, r1, _) = p.rho_derivs(p.node(j));
                2.0 * s * rho * p.values[j] * r1
            })
            .collect();
        total += 0.5 * PI * integrate(&vals, "profile area", AREA_RTOL)?;
    }
    Ok(total)
}

/// `2 s int sqrt(1 + rho^2 theta'^2) d rho`: the boundary length; the
/// arcs of the inner and outer circles that a degenerate profile would
/// need are not included.
pub fn profile_perimeter(profile: &AnnularProfile) -> Result<f64> {
    let s = profile.symmetry_order as f64;
    let mut total = 0.0;
    for p in &profile.pieces {
        let vals: Vec<f64> = (0..=p.n())
            .map(|j| {
                let x = p.node(j);
                let (rho, r1, _) = p.rho_derivs(x);
                let (_, t1, _) = p.theta_derivs(x);
                r1.hypot(rho * t1)
            })
            .collect();
        total += 2.0 * s * 0.5 * PI * integrate(&vals, "profile perimeter", PERIMETER_RTOL)?;
    }
    Ok(total)
}

/// Boundary curvature at radius `rho`, positive where the set is convex:
/// `-(rho^2 theta'^3 + rho theta'' + 2 theta') / (1 + (rho theta')^2)^(3/2)`.
pub fn profile_curvature(profile: &AnnularProfile, rho: f64) -> Result<f64> {
    let (a, b) = (profile.rho1, profile.rho2);
    let m = ENDPOINT_MARGIN * (b - a);
    if !(rho > a + m && rho < b - m) {
        return Err(Error::EndpointExclusion {
            rho,
            inner: a,
            outer: b,
        });
    }
    let (t1, t2) = profile.theta_derivatives(rho);
    Ok(-(rho * rho * t1.powi(3) + rho * t2 + 2.0 * t1) / (1.0 + (rho * t1).powi(2)).powf(1.5))
}

/// Curvature at `n` radii evenly spread over the admissible interior.
pub fn curvature_samples(profile: &AnnularProfile, n: usize) -> Vec<(f64, f64)> {
    let (a, b) = (profile.rho1, profile.rho2);
    let m = ENDPOINT_MARGIN * (b - a);
    (0..n)
        .map(|i| {
            let rho = a + m + (b - a - 2.0 * m) * (i as f64 + 0.5) / n as f64;
            (rho, profile_curvature(profile, rho).unwrap_or(f64::NAN))
        })
        .collect()
}

/// Boundary of the profile's set as arcs through profile points, each
/// piece split into `per_piece` arcs equally spaced in `tau`.
pub fn profile_to_shape(profile: &AnnularProfile, per_piece: usize) -> Result<ArcShape> {
    let s = profile.symmetry_order;
    let lim = PI / s as f64;
    // One half-sector, from rho2 (angle 0) down to rho1 (angle pi/s), as
    // (rho, theta) vertices and midpoints.
    let mut verts: Vec<(f64, f64)> = Vec::new();
    let mut mids: Vec<(f64, f64)> = Vec::new();
    let at = |p: &ProfilePiece, x: f64| (p.rho_derivs(x).0, clenshaw(&p.coeffs, x));
    for p in profile.pieces.iter().rev() {
        let n = per_piece.max(2);
        for i in 0..n {
            let x0 = 1.0 - 2.0 * i as f64 / n as f64;
            verts.push(at(p, x0));
            mids.push(at(p, x0 - 1.0 / n as f64));
        }
    }
    verts.push((profile.rho1, lim));
    verts[0] = (profile.rho2, 0.0);
    let point = |j: usize, (rho, th): (f64, f64)| {
        let ang = if j.is_multiple_of(2) {
            j as f64 * lim + th
        } else {
            (j + 1) as f64 * lim - th
        };
        Point::polar(ang) * rho
    };
    let mut segs = Vec::new();
    for j in 0..2 * s {
        let order: Vec<usize> = if j % 2 == 0 {
            (0..mids.len()).collect()
        } else {
            (0..mids.len()).rev().collect()
        };
        for i in order {
            let (a, b) = if j % 2 == 0 { (i, i + 1) } else { (i + 1, i) };
            segs.push(three_point_arc(point(j, verts[a]), point(j, mids[i]), point(j, verts[b])));
        }
    }
    let n = segs.len();
    for i in 0..n {
        segs[i].end = segs[(i + 1) % n].start;
    }
    ArcShape::new(segs)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizationReport {
    pub k: usize,
    pub beta: f64,
    pub area_in: f64,
    pub area_out: f64,
    pub perimeter_before: f64,
    pub perimeter_after: f64,
    /// Minimum over interior curvature samples of the output.
    pub min_curvature_after: f64,
    /// Minimum over interior curvature samples of the input profile.
    pub min_curvature_before: f64,
    pub asymmetry_before: f64,
    pub asymmetry_after: f64,
    pub centers_before: Vec<Point>,
    pub centers_after: Vec<Point>,
    /// Both asymmetry solves put the unique optimal center at the origin.
    pub centered_at_origin: bool,
}

/// Arcs per profile piece when rasterizing the symmetrized set.
pub const RASTER_ARCS: usize = 48;
const CURVATURE_SAMPLES: usize = 400;

fn only_origin(centers: &[Point]) -> bool {
    centers.len() == 1 && centers[0].norm() < 1e-4
}

/// Profile, symmetrize and measure a P(k) set.
///
/// The symmetrized set is symmetric in both axes, so its asymmetry is
/// solved over one quadrant; a unique center at the origin there is unique
/// in the plane.
pub fn symmetrize_and_report(params: &PkParams) -> Result<SymmetrizationReport> {
    let (_, shape) = make_pk(params.k, params.beta)?;
    let source = profile_from_pk(params)?;
    let sym = annular_symmetrize(&source)?;
    let min_of = |p: &AnnularProfile| {
        curvature_samples(p, CURVATURE_SAMPLES)
            .iter()
            .map(|c| c.1)
            .fold(f64::INFINITY, |m, c| if c.is_nan() { f64::NAN } else { m.min(c) })
    };
    let before = asymmetry(&shape)?;
    let raster = profile_to_shape(&sym, RASTER_ARCS)?;
    let quadrant = AsymmetryOptions {
        region: Some(BBox {
            min: Point::ORIGIN,
            max: Point::new(f64::INFINITY, f64::INFINITY),
        }),
        ..AsymmetryOptions::default()
    };
    let after = asymmetry_with(&raster, &quadrant)?;
    let centered = only_origin(&before.centers) && only_origin(&after.centers);
    Ok(SymmetrizationReport {
        k: params.k,
        beta: params.beta,
        area_in: profile_area(&source)?,
        area_out: profile_area(&sym)?,
        perimeter_before: profile_perimeter(&source)?,
        perimeter_after: profile_perimeter(&sym)?,
        min_curvature_after: min_of(&sym),
        min_curvature_before: min_of(&source),
        asymmetry_before: before.alpha,
        asymmetry_after: after.alpha,
        centers_before: before.centers,
        centers_after: after.centers,
        centered_at_origin: centered,
    })
}
