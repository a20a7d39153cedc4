use std::path::Path;

use isoquant::geom2d::{ArcShape, Point};
use isoquant::isoperimetry::{asymmetry_with, deficit, AsymmetryOptions};
use isoquant::optimize::{
    curvature_oscillation_diagnostic, minimize_over_family, search_free_boundary, CurvatureDiagnostic,
    FreeBoundaryOptions, OptimizationResult, RadialShape, SearchFamily, SearchOptions,
};
use isoquant::quotients::{
    default_alpha_grid, estimate_c_m, q_m_penalized_value, q_m_value, FgSpec, QuotientSpec, ALPHA_FLOOR,
};
use isoquant::shapes::{make_disk, make_pk, Family};
use isoquant::symmetrize::{
    annular_symmetrize, profile_from_pk, profile_from_shape, profile_to_shape, symmetrize_and_report,
    RASTER_ARCS,
};
use serde::Serialize;

use crate::config::{family_parameter, Flags, RunConfig};
use crate::output::{csv_string, emit, num, svg, to_json, write_text, Layer, ResumableCsv};
use crate::CliError;

const EVAL_COLUMNS: [&str; 10] = [
    "family",
    "parameter",
    "area",
    "perimeter",
    "deficit",
    "alpha",
    "center_count",
    "center_x",
    "center_y",
    "q",
];

#[derive(Serialize)]
struct EvalRecord {
    family: String,
    parameter: Option<f64>,
    area: f64,
    perimeter: f64,
    deficit: f64,
    alpha: f64,
    centers: Vec<Point>,
    /// `None` without a quotient order or at the ball.
    q: Option<f64>,
    config_sha256: String,
}

impl EvalRecord {
    fn row(&self) -> Vec<String> {
        let c = self.centers.first().copied().unwrap_or(Point::new(f64::NAN, f64::NAN));
        vec![
            self.family.clone(),
            self.parameter.map(num).unwrap_or_default(),
            num(self.area),
            num(self.perimeter),
            num(self.deficit),
            num(self.alpha),
            self.centers.len().to_string(),
            num(c.x),
            num(c.y),
            self.q.map(num).unwrap_or_default(),
        ]
    }
}

fn is_csv(path: &str) -> bool {
    Path::new(path).extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn sibling(path: &str, ext: &str) -> String {
    Path::new(path).with_extension(ext).display().to_string()
}

fn asymmetry_options(cfg: &RunConfig) -> AsymmetryOptions {
    let mut o = AsymmetryOptions::default();
    if let Some(g) = cfg.tol().grid {
        o.grid_tol = g;
    }
    o
}

fn quotient(spec: &QuotientSpec, d: f64, a: f64) -> isoquant::Result<f64> {
    if spec.penalty_alpha.is_some() {
        q_m_penalized_value(spec, d, a)
    } else {
        q_m_value(spec, d, a)
    }
}

fn evaluate(cfg: &RunConfig, family: &Family) -> Result<(EvalRecord, ArcShape), CliError> {
    let spec = cfg.spec()?;
    let shape = family.build()?;
    let a = asymmetry_with(&shape, &asymmetry_options(cfg))?;
    let d = deficit(&shape);
    let q = match &spec {
        Some(s) if a.alpha > ALPHA_FLOOR => Some(quotient(s, d, a.alpha)?),
        _ => None,
    };
    Ok((
        EvalRecord {
            family: family.name().to_string(),
            parameter: family_parameter(family),
            area: shape.area(),
            perimeter: shape.perimeter(),
            deficit: d,
            alpha: a.alpha,
            centers: a.centers,
            q,
            config_sha256: cfg.hash(),
        },
        shape,
    ))
}

fn balls(centers: &[Point], r: f64) -> Vec<Layer<'static>> {
    centers
        .iter()
        .map(|&c| Layer::Circle {
            center: c,
            radius: r,
            stroke: "#c0392b",
        })
        .collect()
}

pub fn eval(flags: &Flags) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("eval", flags)?;
    let family = cfg.shape_family()?;
    let (rec, shape) = evaluate(&cfg, &family)?;
    let json = to_json(&rec);
    let csv = csv_string(&EVAL_COLUMNS, &[rec.row()])?;
    match cfg.out.as_deref() {
        // Both records are written, side by side; the extension of `--out`
        // picks which one takes that exact path.
        Some(out) => {
            let (csv_path, json_path) = if is_csv(out) {
                (out.to_string(), sibling(out, "json"))
            } else {
                (sibling(out, "csv"), out.to_string())
            };
            write_text(&json_path, &json)?;
            write_text(&csv_path, &csv)?;
        }
        None => emit(None, &json)?,
    }
    if let Some(p) = &cfg.svg {
        let mut layers = vec![Layer::Shape {
            shape: &shape,
            stroke: "#1f3a5f",
            fill: "#cfe0f3",
        }];
        layers.extend(balls(&rec.centers, shape.equivalent_radius()));
        write_text(p, &svg(&layers, &rec.config_sha256))?;
    }
    Ok(())
}

pub fn sweep(flags: &Flags) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("sweep", flags)?;
    let grid = cfg
        .grid
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs --grid".into()))?;
    // Fail on an unsweepable family even when the grid is empty.
    cfg.family_at(grid.first().copied().unwrap_or(1.0))?;
    cfg.spec()?;

    let mut failures = Vec::new();
    let mut run = |v: f64| match cfg.family_at(v).and_then(|f| evaluate(&cfg, &f)) {
        Ok((rec, _)) => Some(rec.row()),
        Err(e) => {
            eprintln!("warning: parameter {}: {e}", num(v));
            failures.push(num(v));
            None
        }
    };
    match cfg.out.as_deref() {
        Some(path) => {
            let mut table = ResumableCsv::open(path, &EVAL_COLUMNS)?;
            for &v in &grid {
                if table.done.contains(&num(v)) {
                    continue;
                }
                if let Some(row) = run(v) {
                    table.append(&row)?;
                }
            }
        }
        None => {
            let rows: Vec<Vec<String>> = grid.iter().filter_map(|&v| run(v)).collect();
            emit(None, csv_string(&EVAL_COLUMNS, &rows)?.trim_end())?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(isoquant::Error::Precondition(format!(
            "{} grid point(s) failed: {}",
            failures.len(),
            failures.join(", ")
        ))
        .into())
    }
}

pub fn fit_coeffs(flags: &Flags) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("fit-coeffs", flags)?;
    let m = *cfg.m.get_or_insert(2);
    if m < 1 {
        return Err(CliError::Config("--m must be at least 1".into()));
    }
    let spec = cfg.spec()?.expect("order is set");
    let grid = cfg.grid.clone().unwrap_or_else(|| default_alpha_grid(m));
    let est = estimate_c_m(m, &spec.coeffs, &grid)?;
    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        estimate: &'a isoquant::quotients::CoefficientEstimate,
        config_sha256: String,
    }
    emit(
        cfg.out.as_deref(),
        &to_json(&Out {
            estimate: &est,
            config_sha256: cfg.hash(),
        }),
    )
}

pub fn symmetrize(flags: &Flags) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("symmetrize", flags)?;
    let family = cfg.shape_family()?;
    let params = match family {
        Family::Oval { beta } => make_pk(2, beta)?.0,
        Family::Pk { k, beta } => make_pk(k, beta)?.0,
        Family::Disk => {
            // The disk has no annulus to symmetrize; the profile reports why.
            profile_from_shape(&make_disk(), 2)?;
            return Err(isoquant::Error::DegenerateAnnulus { inner: 1.0, outer: 1.0 }.into());
        }
        _ => {
            return Err(CliError::Config(format!(
                "symmetrize takes an oval or pk family, not `{}`",
                family.name()
            )))
        }
    };
    let report = symmetrize_and_report(&params)?;
    let source = profile_from_pk(&params)?;
    let sym = annular_symmetrize(&source)?;
    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        report: &'a isoquant::symmetrize::SymmetrizationReport,
        config_sha256: String,
    }
    let hash = cfg.hash();
    emit(
        cfg.out.as_deref(),
        &to_json(&Out {
            report: &report,
            config_sha256: hash.clone(),
        }),
    )?;
    if let Some(p) = &cfg.profile {
        let rows: Vec<Vec<String>> = source
            .samples()
            .iter()
            .map(|&(rho, t)| vec![num(rho), num(t), num(sym.theta(rho))])
            .collect();
        write_text(p, &csv_string(&["rho", "theta_before", "theta_after"], &rows)?)?;
    }
    if let Some(p) = &cfg.svg {
        let before = make_pk(params.k, params.beta)?.1;
        let after = profile_to_shape(&sym, RASTER_ARCS)?;
        let layers = [
            Layer::Shape {
                shape: &before,
                stroke: "#1f3a5f",
                fill: "none",
            },
            Layer::Shape {
                shape: &after,
                stroke: "#c0392b",
                fill: "none",
            },
        ];
        write_text(p, &svg(&layers, &hash))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SearchOutput<'a> {
    family: String,
    param_names: &'a [String],
    best_params: &'a [f64],
    best_value: f64,
    verified_value: f64,
    deficit: f64,
    alpha: f64,
    centers: &'a [Point],
    evaluations: usize,
    converged: bool,
    curvature_oscillation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    curvature_diagnostic: Option<CurvatureDiagnostic>,
    shape: &'a ArcShape,
    config_sha256: String,
}

pub fn search(flags: &Flags) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("search", flags)?;
    cfg.m.get_or_insert(2);
    let spec = cfg.spec()?.expect("order is set");
    let name = cfg.family_name()?.to_string();
    let tol = cfg.tol();
    let budget = cfg.budget.unwrap_or(20_000);
    let (result, diagnostic) = if name == "free" {
        let alpha0 = cfg
            .alpha0
            .ok_or_else(|| CliError::Config("the free-boundary search needs --alpha0".into()))?;
        let modes = cfg.modes.unwrap_or(32);
        let seed = match cfg.params.as_ref().and_then(|p| p.a) {
            Some(a) => RadialShape::ellipse(a, modes)?,
            None => RadialShape::disk(modes),
        };
        let opts = FreeBoundaryOptions {
            budget,
            min_step: tol.x.unwrap_or(FreeBoundaryOptions::default().min_step),
            ..FreeBoundaryOptions::default()
        };
        let r = search_free_boundary(&spec, alpha0, &seed, &opts)?;
        let radial = radial_from_vec(&r.best_params)?;
        let diag = curvature_oscillation_diagnostic(&radial, &FgSpec::quotient(&spec))?;
        (r, Some(diag))
    } else {
        let family = match name.as_str() {
            "oval" => SearchFamily::Oval,
            "pk" => SearchFamily::Pk {
                k: cfg
                    .params
                    .as_ref()
                    .and_then(|p| p.k)
                    .ok_or_else(|| CliError::Config("family `pk` needs --k".into()))?,
            },
            "biscuit" => SearchFamily::Biscuit,
            "mask" => SearchFamily::Mask,
            other => return Err(CliError::Config(format!("cannot search family `{other}`"))),
        };
        let defaults = SearchOptions::default();
        let opts = SearchOptions {
            budget,
            seeds: cfg.seeds.unwrap_or(defaults.seeds),
            seed: cfg.seed.unwrap_or(defaults.seed),
            tol_x: tol.x.unwrap_or(defaults.tol_x),
            tol_f: tol.f.unwrap_or(defaults.tol_f),
            alpha_window: cfg.alpha_window,
            screening_grid_tol: tol.grid.unwrap_or(defaults.screening_grid_tol),
        };
        let bounds = cfg.bounds.clone().unwrap_or_else(|| family.default_bounds());
        (minimize_over_family(family, &spec, &bounds, &opts)?, None)
    };
    write_search_outputs(&cfg, &name, &result, diagnostic)?;
    result.into_converged(budget)?;
    Ok(())
}

fn radial_from_vec(v: &[f64]) -> Result<RadialShape, CliError> {
    let n = (v.len() - 1) / 2;
    Ok(RadialShape::new(v[0], v[1..=n].to_vec(), v[n + 1..].to_vec())?)
}

fn write_search_outputs(
    cfg: &RunConfig,
    family: &str,
    r: &OptimizationResult,
    diagnostic: Option<CurvatureDiagnostic>,
) -> Result<(), CliError> {
    let hash = cfg.hash();
    let out = SearchOutput {
        family: family.to_string(),
        param_names: &r.param_names,
        best_params: &r.best_params,
        best_value: r.best_value,
        verified_value: r.verified_value,
        deficit: r.deficit,
        alpha: r.alpha,
        centers: &r.centers,
        evaluations: r.evaluations,
        converged: r.converged,
        curvature_oscillation: r.curvature_oscillation,
        curvature_diagnostic: diagnostic,
        shape: &r.shape,
        config_sha256: hash.clone(),
    };
    emit(cfg.out.as_deref(), &to_json(&out))?;
    if let Some(p) = &cfg.trace {
        let mut header: Vec<&str> = vec!["step"];
        header.extend(r.param_names.iter().map(String::as_str));
        header.push("value");
        let rows: Vec<Vec<String>> = r
            .trace
            .iter()
            .enumerate()
            .map(|(i, t)| {
                std::iter::once(i.to_string())
                    .chain(t.params.iter().map(|&x| num(x)))
                    .chain(std::iter::once(num(t.value)))
                    .collect()
            })
            .collect();
        write_text(p, &csv_string(&header, &rows)?)?;
    }
    if let Some(p) = &cfg.svg {
        let mut layers = vec![Layer::Shape {
            shape: &r.shape,
            stroke: "#1f3a5f",
            fill: "#cfe0f3",
        }];
        layers.extend(balls(&r.centers, r.shape.equivalent_radius()));
        write_text(p, &svg(&layers, &hash))?;
    }
    Ok(())
}
