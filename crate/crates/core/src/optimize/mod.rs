//! Derivative-free minimization of quotient functionals over parametric
//! families and over free star-shaped boundaries.

mod radial;
pub mod simplex;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::{ArcShape, BBox, Point};
use crate::isoperimetry::{asymmetry, asymmetry_with, deficit, AsymmetryOptions};
use crate::quotients::{q_m_penalized_value, q_m_value, QuotientSpec};
use crate::shapes::{make_biscuit, make_mask, make_oval, make_pk, MaskParams};

pub use radial::{
    curvature_oscillation_diagnostic, search_free_boundary, CurvatureDiagnostic, FreeBoundaryOptions,
    RadialShape,
};
use simplex::{golden_section_restarts, halton_point, merge_runs, nelder_mead, Minimum, NelderMeadOptions};

/// Parametric family searched by [`minimize_over_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SearchFamily {
    /// Parameter: crossing angle beta.
    Oval,
    /// Parameter: crossing angle beta.
    Pk { k: usize },
    /// Parameter: half-length L.
    Biscuit,
    /// Parameters: mid and top curvature, cap and mid length, with the cap
    /// curvature fixed to 1 (the shape is rescaled to area pi anyway, so
    /// one curvature is a gauge).
    Mask,
}

impl SearchFamily {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            SearchFamily::Oval | SearchFamily::Pk { .. } => &["beta"],
            SearchFamily::Biscuit => &["L"],
            SearchFamily::Mask => &["mid_curvature", "top_curvature", "cap_length", "mid_length"],
        }
    }

    pub fn default_bounds(&self) -> ParamBounds {
        match *self {
            SearchFamily::Oval => ParamBounds::new(vec![0.02], vec![PI / 2.0 - 0.02]),
            SearchFamily::Pk { k } => ParamBounds::new(vec![0.02], vec![PI / k as f64 - 0.02]),
            SearchFamily::Biscuit => ParamBounds::new(vec![0.0], vec![3.0]),
            SearchFamily::Mask => ParamBounds::new(vec![-4.0, -6.0, 0.01, 0.01], vec![4.0, 6.0, 4.0, 4.0]),
        }
    }

    pub fn build(&self, x: &[f64]) -> Result<ArcShape> {
        if x.len() != self.param_names().len() {
            return Err(Error::Precondition(format!(
                "expected {} parameters, got {}",
                self.param_names().len(),
                x.len()
            )));
        }
        match *self {
            SearchFamily::Oval => Ok(make_oval(x[0])?.1),
            SearchFamily::Pk { k } => Ok(make_pk(k, x[0])?.1),
            SearchFamily::Biscuit => Ok(make_biscuit(x[0])?.1),
            SearchFamily::Mask => make_mask(&Self::mask_params(x)),
        }
    }

    pub fn mask_params(x: &[f64]) -> MaskParams {
        MaskParams {
            cap_curvature: 1.0,
            mid_curvature: x[0],
            top_curvature: x[1],
            cap_length: x[2],
            mid_length: x[3],
        }
    }

    /// A region holding an optimal center, from the family's symmetries:
    /// every member is symmetric about the x-axis, and all but odd P(k)
    /// also about the y-axis.
    fn center_region(&self) -> BBox {
        let min_x = match *self {
            SearchFamily::Pk { k } if k % 2 == 1 => f64::NEG_INFINITY,
            _ => 0.0,
        };
        BBox {
            min: Point::new(min_x, 0.0),
            max: Point::new(f64::INFINITY, f64::INFINITY),
        }
    }

    /// Start point used as the first of the deterministic seeds.
    fn default_start(&self) -> Vec<f64> {
        match self {
            SearchFamily::Mask => vec![0.5, -0.5, 1.2, 1.2],
            _ => {
                let b = self.default_bounds();
                b.lower.iter().zip(&b.upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::Precondition(format!("bounds must have {dim} entries")));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Precondition("bounds need finite lower < upper".into()));
        }
        Ok(())
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Total objective evaluations over all restarts.
    pub budget: usize,
    /// Number of restarts (deterministic seeds).
    pub seeds: usize,
    /// Offset into the seed sequence.
    pub seed: u64,
    pub tol_x: f64,
    pub tol_f: f64,
    /// Only shapes with asymmetry inside this window are admissible.
    pub alpha_window: Option<[f64; 2]>,
    /// Grid resolution of the screening asymmetry solve used inside the
    /// optimizer; the final shape is re-solved at full resolution.
    pub screening_grid_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 20_000,
            seeds: 5,
            seed: 0,
            tol_x: 1e-6,
            tol_f: 1e-8,
            alpha_window: None,
            screening_grid_tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub param_names: Vec<String>,
    pub best_params: Vec<f64>,
    /// Minimum over the trace.
    pub best_value: f64,
    /// Value of the best shape recomputed with the full asymmetry solver.
    pub verified_value: f64,
    pub deficit: f64,
    pub alpha: f64,
    /// Optimal centers of the best shape.
    pub centers: Vec<Point>,
    pub evaluations: usize,
    pub converged: bool,
    /// Feasible evaluations in order; infeasible points are left out.
    pub trace: Vec<TracePoint>,
    /// Max minus min boundary curvature of the best shape.
    pub curvature_oscillation: f64,
    pub shape: ArcShape,
}

impl OptimizationResult {
    /// The result if the search converged, else a budget error carrying
    /// the best value.
    pub fn into_converged(self, budget: usize) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::BudgetExceeded {
                budget,
                best_value: self.best_value,
            })
        }
    }
}

pub(crate) fn quotient_value(spec: &QuotientSpec, deficit: f64, alpha: f64) -> Result<f64> {
    if spec.penalty_alpha.is_some() {
        q_m_penalized_value(spec, deficit, alpha)
    } else {
        q_m_value(spec, deficit, alpha)
    }
}

pub(crate) fn curvature_range(shape: &ArcShape) -> f64 {
    let (lo, hi) = shape
        .segments()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.curvature), hi.max(s.curvature)));
    hi - lo
}

/// Minimize the quotient of `spec` over a parametric family.
///
/// One-parameter families use golden-section search on `seeds` equal
/// sub-brackets of the box; the mask uses Nelder–Mead from `seeds`
/// deterministic starts (the family default, then Halton points of the box
/// that yield a valid shape). Infeasible parameters score `+inf`.
pub fn minimize_over_family(
    family: SearchFamily,
    spec: &QuotientSpec,
    bounds: &ParamBounds,
    opts: &SearchOptions,
) -> Result<OptimizationResult> {
    spec.validate()?;
    let dim = family.param_names().len();
    bounds.validate(dim)?;
    if opts.seeds == 0 {
        return Err(Error::Precondition("at least one seed is required".into()));
    }
    let screening = AsymmetryOptions {
        grid_tol: opts.screening_grid_tol,
        region: Some(family.center_region()),
        ..AsymmetryOptions::default()
    };
    let window = opts.alpha_window;
    let objective = |x: &[f64]| -> f64 {
        let Ok(shape) = family.build(x) else {
            return f64::INFINITY;
        };
        let Ok(a) = asymmetry_with(&shape, &screening) else {
            return f64::INFINITY;
        };
        if let Some([lo, hi]) = window {
            if a.alpha < lo || a.alpha > hi {
                return f64::INFINITY;
            }
        }
        quotient_value(spec, deficit(&shape), a.alpha).unwrap_or(f64::INFINITY)
    };

    let best: Minimum = if dim == 1 {
        golden_section_restarts(
            |t| objective(&[t]),
            bounds.lower[0],
            bounds.upper[0],
            opts.seeds,
            opts.tol_x,
            opts.budget,
        )
    } else {
        let starts = seed_points(family, bounds, opts, &objective);
        if starts.is_empty() {
            return Err(Error::InfeasibleFamily);
        }
        let per_run = opts.budget / starts.len();
        let step: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| 0.05 * (u - l)).collect();
        let nm = NelderMeadOptions {
            tol_x: opts.tol_x,
            tol_f: opts.tol_f,
            max_evals: per_run,
        };
        let runs: Vec<Minimum> = starts
            .iter()
            .map(|x0| {
                let first = nelder_mead(objective, x0, &step, &bounds.lower, &bounds.upper, &nm);
                // A fresh simplex at the converged point guards against
                // premature collapse.
                let rest = nm.max_evals.saturating_sub(first.evaluations).max(4 * (dim + 1));
                let small: Vec<f64> = step.iter().map(|s| 0.1 * s).collect();
                let second = nelder_mead(
                    objective,
                    &first.x,
                    &small,
                    &bounds.lower,
                    &bounds.upper,
                    &NelderMeadOptions { max_evals: rest, ..nm },
                );
                let converged = second.converged;
                let mut m = merge_runs(vec![first, second]);
                m.converged = converged;
                m
            })
            .collect();
        merge_runs(runs)
    };
    if !best.value.is_finite() {
        return Err(Error::InfeasibleFamily);
    }
    finish(family.build(&best.x)?, family.param_names(), best, spec)
}

fn seed_points(
    family: SearchFamily,
    bounds: &ParamBounds,
    opts: &SearchOptions,
    objective: &(impl Fn(&[f64]) -> f64 + Sync),
) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(opts.seeds);
    let d = family.default_start();
    if opts.seed == 0 && bounds.contains(&d) && objective(&d).is_finite() {
        starts.push(d);
    }
    // Candidates are screened in parallel batches; order stays
    // deterministic.
    let mut index = opts.seed;
    while starts.len() < opts.seeds && index < opts.seed + 512 {
        let batch: Vec<Vec<f64>> = (index..index + 16)
            .map(|i| halton_point(i, &bounds.lower, &bounds.upper))
            .collect();
        let ok: Vec<bool> = batch.par_iter().map(|x| objective(x).is_finite()).collect();
        for (x, good) in batch.into_iter().zip(ok) {
            if good && starts.len() < opts.seeds {
                starts.push(x);
            }
        }
        index += 16;
    }
    starts
}

fn finish(shape: ArcShape, names: &[&str], best: Minimum, spec: &QuotientSpec) -> Result<OptimizationResult> {
    let a = asymmetry(&shape)?;
    let d = deficit(&shape);
    let verified = quotient_value(spec, d, a.alpha)?;
    let trace: Vec<TracePoint> = best
        .trace
        .iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(x, v)| TracePoint {
            params: x.clone(),
            value: *v,
        })
        .collect();
    Ok(OptimizationResult {
        param_names: names.iter().map(|s| s.to_string()).collect(),
        best_params: best.x,
        best_value: best.value,
        verified_value: verified,
        deficit: d,
        alpha: a.alpha,
        centers: a.centers,
        evaluations: best.evaluations,
        converged: best.converged,
        trace,
        curvature_oscillation: curvature_range(&shape),
        shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_checked() {
        let spec = QuotientSpec::new(2);
        let bad = ParamBounds::new(vec![1.0], vec![0.5]);
        assert!(matches!(
            minimize_over_family(SearchFamily::Biscuit, &spec, &bad, &SearchOptions::default()),
            Err(Error::Precondition(_))
        ));
        let wrong_dim = ParamBounds::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(minimize_over_family(SearchFamily::Oval, &spec, &wrong_dim, &SearchOptions::default()).is_err());
    }

    #[test]
    fn infeasible_box_is_reported() {
        // Top arc turning left over: no mask exists in this box.
        let b = ParamBounds::new(vec![3.0, 0.5, 3.0, 3.0], vec![3.5, 1.0, 3.5, 3.5]);
        let r = minimize_over_family(SearchFamily::Mask, &QuotientSpec::new(2), &b, &SearchOptions::default());
        assert!(matches!(r, Err(Error::InfeasibleFamily)), "{r:?}");
    }

    #[test]
    fn mask_param_mapping() {
        let p = SearchFamily::mask_params(&[0.5, -0.5, 1.2, 1.3]);
        assert_eq!(p.cap_curvature, 1.0);
        assert_eq!(p.mid_length, 1.3);
        assert!(SearchFamily::Mask.build(&SearchFamily::Mask.default_start()).is_ok());
    }
}
