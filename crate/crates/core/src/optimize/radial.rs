use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quotient_value, OptimizationResult, TracePoint};
use crate::error::{Error, Result};
use crate::geom2d::{ArcShape, Point};
use crate::isoperimetry::{asymmetry, asymmetry_local, asymmetry_with, AsymmetryOptions};
use crate::quotients::{eval_fg_value, FgSpec, QuotientSpec, ALPHA_FLOOR};
use crate::shapes::three_point_arc;

const QUADRATURE_POINTS: usize = 4096;

/// Star-shaped set `r(theta) = 1 + u(theta)` with
/// `u = mean + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialShape {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl RadialShape {
    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::InvalidShape("cosine and sine coefficient counts differ".into()));
        }
        let s = Self { mean, cos, sin };
        s.check()?;
        Ok(s)
    }

    /// Unit disk with room for `modes` harmonics.
    pub fn disk(modes: usize) -> Self {
        Self {
            mean: 0.0,
            cos: vec![0.0; modes],
            sin: vec![0.0; modes],
        }
    }

    /// Trigonometric interpolant of the radius function `r`.
    pub fn from_fn(r: impl Fn(f64) -> f64, modes: usize) -> Result<Self> {
        let m = (8 * modes).max(256);
        let samples: Vec<f64> = (0..m).map(|i| r(TAU * i as f64 / m as f64)).collect();
        let coef = |k: usize, f: fn(f64) -> f64| {
            2.0 / m as f64
                * samples
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * f(k as f64 * TAU * i as f64 / m as f64))
                    .sum::<f64>()
        };
        let mean = samples.iter().sum::<f64>() / m as f64 - 1.0;
        Self::new(
            mean,
            (1..=modes).map(|k| coef(k, f64::cos)).collect(),
            (1..=modes).map(|k| coef(k, f64::sin)).collect(),
        )
    }

    /// Ellipse with semi-axes `a` and `1/a`.
    pub fn ellipse(a: f64, modes: usize) -> Result<Self> {
        Self::from_fn(|t| 1.0 / ((t.cos() / a).powi(2) + (a * t.sin()).powi(2)).sqrt(), modes)
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    /// `(r, r', r'')` at `theta`.
    pub fn radius_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (mut r, mut r1, mut r2) = (1.0 + self.mean, 0.0, 0.0);
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            let (s, c) = (k * theta).sin_cos();
            r += a * c + b * s;
            r1 += k * (b * c - a * s);
            r2 -= k * k * (a * c + b * s);
        }
        (r, r1, r2)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.radius_derivatives(theta).0
    }

    /// Signed curvature of the boundary at angle `theta`.
    pub fn curvature(&self, theta: f64) -> f64 {
        let (r, r1, r2) = self.radius_derivatives(theta);
        (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
    }

    /// Exact area `pi (1 + mean)^2 + (pi / 2) sum (a_k^2 + b_k^2)`.
    pub fn area(&self) -> f64 {
        let harm: f64 = self.cos.iter().chain(&self.sin).map(|c| c * c).sum();
        PI * (1.0 + self.mean).powi(2) + 0.5 * PI * harm
    }

    /// Periodic trapezoid rule, spectrally accurate for this integrand.
    pub fn perimeter(&self) -> f64 {
        let h = TAU / QUADRATURE_POINTS as f64;
        (0..QUADRATURE_POINTS)
            .map(|i| {
                let (r, r1, _) = self.radius_derivatives(i as f64 * h);
                r.hypot(r1)
            })
            .sum::<f64>()
            * h
    }

    pub fn deficit(&self) -> f64 {
        let p_ball = 2.0 * (PI * self.area()).sqrt();
        (self.perimeter() - p_ball) / p_ball
    }

    /// Max minus min boundary curvature over a fine angular sample.
    pub fn curvature_oscillation(&self) -> f64 {
        let (lo, hi) = (0..QUADRATURE_POINTS)
            .map(|i| self.curvature(TAU * i as f64 / QUADRATURE_POINTS as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(k), hi.max(k)));
        hi - lo
    }

    fn check(&self) -> Result<()> {
        if !self.mean.is_finite() || self.cos.iter().chain(&self.sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape("non-finite Fourier coefficient".into()));
        }
        let min_r = (0..QUADRATURE_POINTS)
            .map(|i| self.radius(TAU * i as f64 / QUADRATURE_POINTS as f64))
            .fold(f64::INFINITY, f64::min);
        if !(min_r > 0.0) {
            return Err(Error::InvalidShape(format!("radius function reaches {min_r}")));
        }
        Ok(())
    }

    /// Uniformly rescaled copy with area pi.
    pub fn normalized(&self) -> Result<Self> {
        self.check()?;
        let s = (PI / self.area()).sqrt();
        Ok(Self {
            mean: s * (1.0 + self.mean) - 1.0,
            cos: self.cos.iter().map(|c| s * c).collect(),
            sin: self.sin.iter().map(|c| s * c).collect(),
        })
    }

    /// Boundary as `n` arcs, each through the curve's points at both ends
    /// and the middle of its angular interval, rescaled to area pi.
    pub fn to_arc_shape(&self, n: usize) -> Result<ArcShape> {
        let n = n.max(8);
        let p = |t: f64| Point::polar(t) * self.radius(t);
        let h = TAU / n as f64;
        let pts: Vec<Point> = (0..n).map(|i| p(i as f64 * h)).collect();
        let segs = (0..n)
            .map(|i| three_point_arc(pts[i], p((i as f64 + 0.5) * h), pts[(i + 1) % n]))
            .collect();
        Ok(ArcShape::new(segs)?.with_area(PI))
    }

    /// Coefficients flattened as `[mean, cos.., sin..]`.
    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.mean).chain(self.cos.iter().copied()).chain(self.sin.iter().copied()).collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        std::iter::once("mean".to_string())
            .chain((1..=self.modes()).map(|k| format!("cos{k}")))
            .chain((1..=self.modes()).map(|k| format!("sin{k}")))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeBoundaryOptions {
    /// Arcs used to approximate the boundary for the asymmetry solve.
    pub arcs: usize,
    /// Cap on shape evaluations.
    pub budget: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Amplitude of the first `cos 2 theta` kick used when the seed
    /// violates the asymmetry constraint; doubled until it holds.
    pub kick: f64,
}

impl Default for FreeBoundaryOptions {
    fn default() -> Self {
        Self {
            arcs: 256,
            budget: 20_000,
            initial_step: 0.02,
            min_step: 1e-5,
            kick: 0.05,
        }
    }
}

#[derive(Clone)]
struct State {
    shape: RadialShape,
    value: f64,
    alpha: f64,
    center: Point,
}

fn screening() -> AsymmetryOptions {
    AsymmetryOptions {
        grid_tol: 1e-2,
        ..AsymmetryOptions::default()
    }
}

/// Pattern search over the Fourier coefficients of `u` for
/// `min { Q : alpha(E) >= alpha0 }` (penalized if the spec carries a
/// penalty anchor).
///
/// Every iterate is rescaled to area pi. Each poll perturbs every harmonic
/// `k >= 2` (the first harmonic is a translation to first order) by
/// `+-step / k` in parallel and moves to the best improving candidate;
/// asymmetry is solved locally from the current center and accepted moves
/// are re-checked with a global solve. The step halves when no candidate
/// improves. A seed below `alpha0` is pushed out by a `cos 2 theta` kick.
pub fn search_free_boundary(
    spec: &QuotientSpec,
    alpha0: f64,
    seed: &RadialShape,
    opts: &FreeBoundaryOptions,
) -> Result<OptimizationResult> {
    spec.validate()?;
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::Precondition(format!("alpha0 = {alpha0} outside (0, 1)")));
    }
    if seed.modes() < 2 {
        return Err(Error::Precondition("at least two harmonics are needed".into()));
    }
    let arcs = opts.arcs.max(8 * seed.modes());
    let mut evaluations = 0usize;

    let global = |shape: RadialShape| -> Result<State> {
        let arc_shape = shape.to_arc_shape(arcs)?;
        let a = asymmetry_with(&arc_shape, &screening())?;
        let value = if a.alpha >= alpha0 {
            quotient_value(spec, shape.deficit(), a.alpha)?
        } else {
            f64::INFINITY
        };
        Ok(State {
            shape,
            value,
            alpha: a.alpha,
            center: a.centers[0],
        })
    };

    let mut cur = global(seed.normalized()?)?;
    evaluations += 1;
    let mut amp = opts.kick;
    let mut kicks = 0;
    while cur.alpha < alpha0 {
        kicks += 1;
        if kicks > 8 {
            return Err(Error::Stuck(format!(
                "kicked seed still has alpha {} < {alpha0}",
                cur.alpha
            )));
        }
        let mut s = seed.clone();
        s.cos[1] += amp;
        cur = global(s.normalized()?)?;
        evaluations += 1;
        amp *= 2.0;
    }

    let modes = seed.modes();
    let dirs: Vec<(usize, bool, f64)> = (2..=modes)
        .flat_map(|k| [(k, true), (k, false)])
        .flat_map(|(k, c)| [(k, c, 1.0), (k, c, -1.0)])
        .collect();
    let mut step = opts.initial_step;
    let mut trace = vec![TracePoint {
        params: cur.shape.to_vec(),
        value: cur.value,
    }];
    let mut accepted = 0usize;
    let mut converged = false;
    while evaluations < opts.budget {
        if step < opts.min_step {
            converged = true;
            break;
        }
        let center = cur.center;
        let cands: Vec<Option<State>> = dirs
            .par_iter()
            .map(|&(k, is_cos, sign)| {
                let mut s = cur.shape.clone();
                let c = if is_cos { &mut s.cos[k - 1] } else { &mut s.sin[k - 1] };
                *c += sign * step / k as f64;
                let s = s.normalized().ok()?;
                let arc_shape = s.to_arc_shape(arcs).ok()?;
                let (alpha, x) = asymmetry_local(&arc_shape, center, 0.05);
                if alpha < alpha0 {
                    return None;
                }
                let value = quotient_value(spec, s.deficit(), alpha).ok()?;
                Some(State {
                    shape: s,
                    value,
                    alpha,
                    center: x,
                })
            })
            .collect();
        evaluations += dirs.len();
        let mut order: Vec<State> = cands.into_iter().flatten().filter(|c| c.value < cur.value).collect();
        order.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut moved = false;
        for cand in order {
            // The local solve can miss a better center elsewhere.
            let checked = global(cand.shape.clone())?;
            evaluations += 1;
            let next = if checked.alpha < cand.alpha - 1e-9 { checked } else { cand };
            if next.value < cur.value {
                cur = next;
                moved = true;
                break;
            }
        }
        if moved {
            accepted += 1;
            trace.push(TracePoint {
                params: cur.shape.to_vec(),
                value: cur.value,
            });
        } else {
            step *= 0.5;
        }
    }
    if accepted == 0 {
        return Err(Error::Stuck(format!(
            "no improving step from value {} (alpha {}, {} evaluations, final step {step})",
            cur.value, cur.alpha, evaluations
        )));
    }

    let shape = cur.shape.to_arc_shape(arcs)?;
    let a = asymmetry(&shape)?;
    let d = cur.shape.deficit();
    let best_value = trace.iter().map(|t| t.value).fold(f64::INFINITY, f64::min);
    Ok(OptimizationResult {
        param_names: cur.shape.param_names(),
        best_params: cur.shape.to_vec(),
        best_value,
        verified_value: quotient_value(spec, d, a.alpha)?,
        deficit: d,
        alpha: a.alpha,
        centers: a.centers,
        evaluations,
        converged,
        trace,
        curvature_oscillation: cur.shape.curvature_oscillation(),
        shape,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDiagnostic {
    pub oscillation: f64,
    /// `2 (|F(E)| |g'(alpha)| + |f'(alpha)|)`; infinite at the disk, where
    /// `F` is undefined.
    pub bound: f64,
    pub alpha: f64,
    /// Oscillation exceeds the bound by more than 10%.
    pub flagged: bool,
}

/// Compares the boundary curvature oscillation with the first-variation
/// bound for minimizers of `F_{f,g}` in the plane.
pub fn curvature_oscillation_diagnostic(shape: &RadialShape, spec: &FgSpec) -> Result<CurvatureDiagnostic> {
    let shape = shape.normalized()?;
    let oscillation = shape.curvature_oscillation();
    let arcs = shape.to_arc_shape(256.max(8 * shape.modes()))?;
    let alpha = asymmetry(&arcs)?.alpha;
    let bound = if alpha > ALPHA_FLOOR {
        let f = eval_fg_value(spec, shape.deficit(), alpha)?;
        2.0 * (f.abs() * (spec.dg)(alpha).abs() + (spec.df)(alpha).abs())
    } else {
        f64::INFINITY
    };
    Ok(CurvatureDiagnostic {
        oscillation,
        bound,
        alpha,
        flagged: oscillation > 1.1 * bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_measures() {
        let d = RadialShape::disk(4);
        assert_relative_eq!(d.area(), PI);
        assert_relative_eq!(d.perimeter(), TAU, max_relative = 1e-14);
        assert_relative_eq!(d.curvature(0.3), 1.0);
        assert!(d.deficit().abs() < 1e-14);
    }

    #[test]
    fn area_formula_matches_arcs() {
        let s = RadialShape::new(0.1, vec![0.0, 0.2, 0.05], vec![0.03, 0.0, -0.04]).unwrap();
        assert_relative_eq!(s.to_arc_shape(512).unwrap().area(), PI, max_relative = 1e-12);
        let n = s.normalized().unwrap();
        assert_relative_eq!(n.area(), PI, max_relative = 1e-14);
        let arcs = n.to_arc_shape(1024).unwrap();
        assert_relative_eq!(arcs.perimeter(), n.perimeter(), max_relative = 1e-9);
    }

    #[test]
    fn ellipse_interpolant() {
        let a: f64 = 1.1;
        let e = RadialShape::ellipse(a, 32).unwrap();
        assert_relative_eq!(e.area(), PI, max_relative = 1e-12);
        assert_relative_eq!(e.radius(0.0), a, max_relative = 1e-12);
        assert_relative_eq!(e.curvature_oscillation(), a.powi(3) - a.powi(-3), max_relative = 1e-9);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(RadialShape::new(0.0, vec![0.0, 1.5], vec![0.0, 0.0]).is_err());
        assert!(RadialShape::new(0.0, vec![0.0], vec![]).is_err());
    }

    #[test]
    fn disk_diagnostic_is_trivial() {
        let d = curvature_oscillation_diagnostic(&RadialShape::disk(4), &FgSpec::power(2)).unwrap();
        assert!(d.oscillation.abs() < 1e-12);
        assert!(!d.flagged);
    }
}
