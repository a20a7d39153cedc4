//! Isoperimetric deficit and Fraenkel asymmetry.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::{disk_intersection_area, symmetric_difference_area, ArcShape, BBox, Point};

/// Constant of the asymmetry Lipschitz estimate in the plane,
/// `2^(n+2) / ((2^n - 1) omega_n)` with `n = 2`.
pub const LIPSCHITZ_CONSTANT: f64 = 16.0 / (3.0 * PI);

/// `(P(E) - P(B_E)) / P(B_E)` where `B_E` is the disk of equal area.
pub fn deficit(shape: &ArcShape) -> f64 {
    let p_ball = 2.0 * PI * shape.equivalent_radius();
    (shape.perimeter() - p_ball) / p_ball
}

/// `|E △ B(x, r_E)| / |B_E|`, evaluated exactly.
pub fn asymmetry_objective(shape: &ArcShape, x: Point) -> f64 {
    let a = shape.area();
    let r = shape.equivalent_radius();
    (2.0 * (1.0 - disk_intersection_area(shape, x, r) / a)).clamp(0.0, 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResult {
    pub alpha: f64,
    /// All global minimizers found, one per cluster, sorted
    /// lexicographically.
    pub centers: Vec<Point>,
    pub objective_evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymmetryOptions {
    /// Value resolution of the global (grid) stage.
    pub grid_tol: f64,
    /// Position tolerance of the local refinement.
    pub x_tol: f64,
    /// Minimizers within this of the best value are all reported.
    pub value_tol: f64,
    /// Minimizers closer than this (in units of r_E) are merged.
    pub cluster_dist: f64,
    /// Cap on retained cells per level.
    pub max_cells: usize,
    /// Cells along the longer side of the initial grid.
    pub initial_cells: usize,
    /// Restricts the search to this box, e.g. one quadrant of a shape
    /// symmetric in both axes. The caller vouches that it holds a minimizer.
    pub region: Option<BBox>,
}

impl Default for AsymmetryOptions {
    fn default() -> Self {
        Self {
            grid_tol: 1e-4,
            x_tol: 1e-8,
            value_tol: 1e-6,
            cluster_dist: 1e-3,
            max_cells: 100_000,
            initial_cells: 16,
            region: None,
        }
    }
}

#[derive(Clone, Copy)]
struct Cell {
    i: i64,
    j: i64,
    value: f64,
}

/// Global minimization of the translation objective.
///
/// Branch and bound on a square grid over the bounding box inflated by
/// `r_E`: the objective is Lipschitz in `x` with constant `4 / (pi r_E)`, so
/// a cell whose center value minus that bound times the half-diagonal
/// exceeds the incumbent cannot hold a minimizer. Survivors are refined
/// until the bound is below `grid_tol`, grouped into connected components,
/// and each component is polished by a compass search.
pub fn asymmetry(shape: &ArcShape) -> Result<AsymmetryResult> {
    asymmetry_with(shape, &AsymmetryOptions::default())
}

pub fn asymmetry_with(shape: &ArcShape, opts: &AsymmetryOptions) -> Result<AsymmetryResult> {
    let r = shape.equivalent_radius();
    if !(r > 0.0) {
        return Err(Error::InvalidShape("area must be positive".into()));
    }
    let lip = 4.0 / (PI * r);
    // Centers farther than r from E give the maximal value 2; restrict to
    // the box where the disk can meet E at all.
    let mut bb = shape.bbox().inflate(r);
    if let Some(reg) = opts.region {
        bb.min = Point::new(bb.min.x.max(reg.min.x), bb.min.y.max(reg.min.y));
        bb.max = Point::new(bb.max.x.min(reg.max.x), bb.max.y.min(reg.max.y));
        if !(bb.width() >= 0.0 && bb.height() >= 0.0) {
            return Err(Error::Precondition("asymmetry search region misses the shape".into()));
        }
    }
    let side = bb.width().max(bb.height()) / opts.initial_cells as f64;
    let origin = bb.min;
    let nx = (bb.width() / side).ceil().max(1.0) as i64;
    let ny = (bb.height() / side).ceil().max(1.0) as i64;

    let eval = |cells: &[(i64, i64)], h: f64| -> Vec<f64> {
        cells
            .par_iter()
            .map(|&(i, j)| {
                let c = origin + Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                asymmetry_objective(shape, c)
            })
            .collect()
    };

    let mut h = side;
    let mut coords: Vec<(i64, i64)> = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).collect();
    let mut evaluations = 0;
    let mut best = f64::INFINITY;
    let mut kept: Vec<Cell>;
    loop {
        let values = eval(&coords, h);
        evaluations += values.len();
        for &v in &values {
            best = best.min(v);
        }
        let slack = lip * h * std::f64::consts::FRAC_1_SQRT_2;
        kept = coords
            .iter()
            .zip(&values)
            .filter(|(_, &v)| v - slack <= best)
            .map(|(&(i, j), &value)| Cell { i, j, value })
            .collect();
        if slack <= opts.grid_tol || 4 * kept.len() > opts.max_cells {
            break;
        }
        h *= 0.5;
        coords = kept
            .iter()
            .flat_map(|c| {
                let (i, j) = (2 * c.i, 2 * c.j);
                [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            })
            .collect();
    }
    let slack = lip * h * std::f64::consts::FRAC_1_SQRT_2;
    let center_of = |c: &Cell| origin + Point::new((c.i as f64 + 0.5) * h, (c.j as f64 + 0.5) * h);

    // Connected components of the surviving cells (8-neighbourhood).
    let index: HashMap<(i64, i64), usize> =
        kept.iter().enumerate().map(|(k, c)| ((c.i, c.j), k)).collect();
    let mut parent: Vec<usize> = (0..kept.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, c) in kept.iter().enumerate() {
        for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            if let Some(&m) = index.get(&(c.i + di, c.j + dj)) {
                let (a, b) = (find(&mut parent, k), find(&mut parent, m));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut seeds: HashMap<usize, usize> = HashMap::new();
    for k in 0..kept.len() {
        let root = find(&mut parent, k);
        let e = seeds.entry(root).or_insert(k);
        if kept[k].value < kept[*e].value {
            *e = k;
        }
    }
    let mut seed_list: Vec<usize> = seeds.into_values().collect();
    seed_list.sort_unstable();
    // Components whose best cell cannot beat the incumbent are dropped.
    seed_list.retain(|&k| kept[k].value - slack <= best);

    let polished: Vec<(f64, Point, usize)> = seed_list
        .par_iter()
        .map(|&k| {
            let (v, x, n) = compass_search(shape, center_of(&kept[k]), kept[k].value, h, opts.x_tol);
            (v, x, n)
        })
        .collect();
    evaluations += polished.iter().map(|p| p.2).sum::<usize>();
    let best = polished.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut cands: Vec<(f64, Point)> = polished
        .iter()
        .filter(|p| p.0 <= best + opts.value_tol)
        .map(|p| (p.0, p.1))
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.x.total_cmp(&b.1.x)).then(a.1.y.total_cmp(&b.1.y)));
    let mut centers: Vec<Point> = Vec::new();
    for (_, x) in cands {
        let dup = centers.iter().any(|&c| {
            c.dist(x) < opts.cluster_dist * r || valley_connected(shape, c, x, best + opts.value_tol, &mut evaluations)
        });
        if !dup {
            centers.push(x);
        }
    }
    centers.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(AsymmetryResult {
        alpha: best,
        centers,
        objective_evaluations: evaluations,
    })
}

/// Whether the straight path between two minimizers stays at the minimal
/// level, i.e. they belong to one flat set of minimizers.
fn valley_connected(shape: &ArcShape, a: Point, b: Point, level: f64, evals: &mut usize) -> bool {
    (1..16).all(|k| {
        *evals += 1;
        asymmetry_objective(shape, a.lerp(b, k as f64 / 16.0)) <= level
    })
}

/// Options restricting the search to the closed first quadrant, valid for
/// shapes symmetric under both axis reflections.
pub fn quadrant_options() -> AsymmetryOptions {
    AsymmetryOptions {
        region: Some(BBox {
            min: Point::ORIGIN,
            max: Point::new(f64::INFINITY, f64::INFINITY),
        }),
        ..AsymmetryOptions::default()
    }
}

/// Compass search with step halving. Returns (value, point, evaluations).
fn compass_search(shape: &ArcShape, mut x: Point, mut fx: f64, step: f64, tol: f64) -> (f64, Point, usize) {
    let mut h = step;
    let mut n = 0;
    let dirs = [
        Point::new(1.0, 0.0),
        Point::new(-1.0, 0.0),
        Point::new(0.0, 1.0),
        Point::new(0.0, -1.0),
    ];
    while h > tol {
        let mut moved = false;
        for d in dirs {
            let y = x + d * h;
            let fy = asymmetry_objective(shape, y);
            n += 1;
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (fx, x, n)
}

/// Local asymmetry solve warm-started at `x0`; cheap, for use inside
/// optimizers whose accepted iterates are then re-checked globally.
pub fn asymmetry_local(shape: &ArcShape, x0: Point, step: f64) -> (f64, Point) {
    let f0 = asymmetry_objective(shape, x0);
    let (v, x, _) = compass_search(shape, x0, f0, step, 1e-8);
    (v, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    pub area: f64,
    pub perimeter: f64,
    pub deficit: f64,
    pub asymmetry: AsymmetryResult,
}

pub fn metrics(shape: &ArcShape) -> Result<ShapeMetrics> {
    Ok(ShapeMetrics {
        area: shape.area(),
        perimeter: shape.perimeter(),
        deficit: deficit(shape),
        asymmetry: asymmetry(shape)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzCheck {
    pub alpha_difference: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `|alpha(E) - alpha(F)| <= 16/(3 pi) |E △ F|` for `|E| = pi` and a
/// perturbation `F` that differs from `E` only inside a disk of radius 1/2.
pub fn asymmetry_lipschitz_bound_check(e: &ArcShape, f: &ArcShape) -> Result<LipschitzCheck> {
    if (e.area() - PI).abs() > 1e-8 * PI {
        return Err(Error::Precondition(format!("|E| = {} is not pi", e.area())));
    }
    if let Some(radius) = difference_radius(e, f) {
        if radius >= 0.5 {
            return Err(Error::Precondition(format!(
                "perturbation is not localized: it spans a disk of radius {radius}"
            )));
        }
    }
    let sd = symmetric_difference_area(e, f)?;
    let ae = asymmetry(e)?.alpha;
    let af = asymmetry(f)?.alpha;
    let lhs = (ae - af).abs();
    let bound = LIPSCHITZ_CONSTANT * sd;
    // The asymmetry solver is accurate to ~1e-6 in value.
    Ok(LipschitzCheck {
        alpha_difference: lhs,
        bound,
        holds: lhs <= bound + 2e-6,
    })
}

/// Radius of the smallest disk about the bounding-box center of the
/// boundary parts where `E` and `F` differ, or `None` if they coincide.
fn difference_radius(e: &ArcShape, f: &ArcShape) -> Option<f64> {
    let tol = 1e-9 * e.diameter().max(f.diameter());
    let mut pts = Vec::new();
    for (a, b) in [(e, f), (f, e)] {
        for seg in a.segments() {
            for k in 0..=64 {
                let p = seg.point_at(k as f64 / 64.0);
                let d = b.segments().iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min);
                if d > tol {
                    pts.push(p);
                }
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    let mut bb = BBox::empty();
    for &p in &pts {
        bb.include(p);
    }
    let c = bb.center();
    Some(pts.iter().map(|p| p.dist(c)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{circle, make_biscuit, make_disk, make_oval};
    use approx::assert_relative_eq;

    #[test]
    fn deficit_values() {
        assert_relative_eq!(deficit(&make_disk()), 0.0, epsilon = 1e-15);
        let s = (PI).sqrt();
        let sq = ArcShape::new(
            [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)]
                .iter()
                .zip([(s, 0.0), (s, s), (0.0, s), (0.0, 0.0)])
                .map(|(&a, b)| crate::geom2d::ArcSegment::line(a.into(), b.into()))
                .collect(),
        )
        .unwrap();
        assert_relative_eq!(deficit(&sq), 2.0 / PI.sqrt() - 1.0, max_relative = 1e-14);
        let (p, b) = make_biscuit(1.0).unwrap();
        let expect = (4.0 + 2.0 * PI * p.cap_radius - 2.0 * PI) / (2.0 * PI);
        assert_relative_eq!(deficit(&b), expect, max_relative = 1e-12);
    }

    #[test]
    fn disk_asymmetry_is_zero() {
        let r = asymmetry(&make_disk()).unwrap();
        assert!(r.alpha < 1e-7, "{r:?}");
        assert_eq!(r.centers.len(), 1);
        assert!(r.centers[0].norm() < 1e-6);
        let moved = circle(Point::new(5.0, 3.0), 1.0);
        let r = asymmetry(&moved).unwrap();
        assert!(r.alpha < 1e-7);
        assert!(r.centers[0].dist(Point::new(5.0, 3.0)) < 1e-6);
    }

    #[test]
    fn oval_has_single_center_at_origin() {
        let (_, s) = make_oval(0.5).unwrap();
        let r = asymmetry(&s).unwrap();
        assert!(r.alpha > 0.1);
        assert_eq!(r.centers.len(), 1, "{r:?}");
        assert!(r.centers[0].norm() < 1e-4, "{r:?}");
    }

    #[test]
    fn biscuit_flat_minimizer_set_is_one_center() {
        let (_, s) = make_biscuit(1.1).unwrap();
        let r = asymmetry(&s).unwrap();
        assert_eq!(r.centers.len(), 1, "{r:?}");
    }
}
