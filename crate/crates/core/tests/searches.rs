//! Family and free-boundary searches at modest budgets.

use std::f64::consts::PI;

use isoquant::optimize::{
    curvature_oscillation_diagnostic, minimize_over_family, search_free_boundary, FreeBoundaryOptions, RadialShape,
    SearchFamily, SearchOptions,
};
use isoquant::quotients::{FgSpec, QuotientSpec};
use isoquant::shapes::make_biscuit;
use isoquant::Error;

fn search(family: SearchFamily, opts: &SearchOptions) -> isoquant::optimize::OptimizationResult {
    minimize_over_family(family, &QuotientSpec::new(2), &family.default_bounds(), opts).unwrap()
}

#[test]
fn biscuit_search_finds_the_convex_optimum() {
    let r = search(SearchFamily::Biscuit, &SearchOptions::default());
    assert!(r.converged);
    assert!((r.verified_value - 0.405585).abs() < 5e-4, "{}", r.verified_value);
    // The optimal biscuit has a flat side of length about 2.
    assert!((r.best_params[0] - 1.017).abs() < 0.01, "{:?}", r.best_params);
    let (_, shape) = make_biscuit(r.best_params[0]).unwrap();
    assert!((shape.area() - PI).abs() < 1e-12);
}

#[test]
fn oval_window_minimum_sits_on_the_window_edge() {
    let opts = SearchOptions {
        alpha_window: Some([0.1, 0.5]),
        ..SearchOptions::default()
    };
    let r = search(SearchFamily::Oval, &opts);
    assert!(r.converged);
    assert!((0.1..=0.5 + 1e-3).contains(&r.alpha), "alpha = {}", r.alpha);
    assert!(r.alpha > 0.45, "alpha = {}", r.alpha);
    assert!(r.verified_value > 0.41 && r.verified_value < 0.43, "{}", r.verified_value);
}

#[test]
fn families_are_ordered() {
    let oval = search(SearchFamily::Oval, &SearchOptions::default());
    let biscuit = search(SearchFamily::Biscuit, &SearchOptions::default());
    assert!(biscuit.verified_value < oval.verified_value - 1e-3);
    // P(k) sets with k >= 3 do not beat the biscuit.
    for k in 3..=4 {
        let pk = search(SearchFamily::Pk { k }, &SearchOptions::default());
        assert!(pk.verified_value > biscuit.verified_value, "P({k}) = {}", pk.verified_value);
    }
}

#[test]
fn search_budget_exhaustion_is_an_error() {
    let opts = SearchOptions {
        budget: 6,
        seeds: 1,
        ..SearchOptions::default()
    };
    let r = search(SearchFamily::Biscuit, &opts);
    assert!(!r.converged);
    assert!(matches!(r.into_converged(6), Err(Error::BudgetExceeded { budget: 6, .. })));
}

#[test]
fn free_boundary_improves_on_its_ellipse_seed() {
    let spec = QuotientSpec::new(2);
    let seed = RadialShape::ellipse(1.6, 6).unwrap();
    let opts = FreeBoundaryOptions {
        arcs: 96,
        budget: 400,
        ..FreeBoundaryOptions::default()
    };
    let r = search_free_boundary(&spec, 0.3, &seed, &opts).unwrap();
    assert!(r.alpha >= 0.3 - 1e-3, "alpha = {}", r.alpha);
    assert!(r.trace.len() >= 2);
    let start = r.trace[0].value;
    assert!(r.best_value < start, "{} !< {}", r.best_value, start);
}

#[test]
fn free_boundary_kicks_a_disk_seed_out() {
    let opts = FreeBoundaryOptions {
        arcs: 64,
        budget: 60,
        ..FreeBoundaryOptions::default()
    };
    match search_free_boundary(&QuotientSpec::new(2), 0.1, &RadialShape::disk(4), &opts) {
        Ok(r) => assert!(r.alpha >= 0.1 - 1e-3),
        Err(e) => assert!(matches!(e, Error::BudgetExceeded { .. }), "{e}"),
    }
}

#[test]
fn curvature_diagnostic_on_ellipses() {
    let spec = FgSpec::quotient(&QuotientSpec::new(2));
    let disk = curvature_oscillation_diagnostic(&RadialShape::disk(8), &spec).unwrap();
    assert!(disk.bound.is_infinite() && !disk.flagged);
    // A strongly elongated ellipse is far from stationary for Q^(2).
    let long = curvature_oscillation_diagnostic(&RadialShape::ellipse(2.0, 16).unwrap(), &spec).unwrap();
    assert!(long.oscillation > 7.0 && long.flagged, "{long:?}");
}
