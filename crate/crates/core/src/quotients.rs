//! The functional family `F_{f,g}`, the quotient hierarchy `Q^(m)` and the
//! oval-based estimator of the coefficients `c_m = Q^(m)(B)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::ArcShape;
use crate::isoperimetry::{asymmetry, deficit};
use crate::shapes::make_oval;

/// Hall's second-order coefficient `pi / (8 (4 - pi))`.
pub const C2: f64 = PI / (8.0 * (4.0 - PI));

/// Asymmetries below this are indistinguishable from the ball for the
/// asymmetry solver.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientSpec {
    pub m: usize,
    /// `(c_1, ..., c_{m-1})`.
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_alpha: Option<f64>,
}

impl QuotientSpec {
    /// Order `m` with the default lower coefficients: `c_1 = 0`,
    /// `c_2 = pi/(8(4-pi))`, and zero beyond (no published values).
    pub fn new(m: usize) -> Self {
        let coeffs = (1..m)
            .map(|i| if i == 2 { C2 } else { 0.0 })
            .collect();
        Self {
            m,
            coeffs,
            penalty_alpha: None,
        }
    }

    pub fn with_coeffs(m: usize, coeffs: Vec<f64>) -> Result<Self> {
        let s = Self {
            m,
            coeffs,
            penalty_alpha: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_penalty(mut self, alpha_j: f64) -> Self {
        self.penalty_alpha = Some(alpha_j);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Precondition("quotient order m must be at least 1".into()));
        }
        if self.coeffs.len() != self.m - 1 {
            return Err(Error::Precondition(format!(
                "order {} needs {} coefficients, got {}",
                self.m,
                self.m - 1,
                self.coeffs.len()
            )));
        }
        if let Some(a) = self.penalty_alpha {
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::Precondition(format!("penalty alpha {a} outside (0, 2)")));
            }
        }
        Ok(())
    }

    /// Spec of order `m - 1` sharing the leading coefficients.
    pub fn lower(&self) -> Option<Self> {
        (self.m > 1).then(|| Self {
            m: self.m - 1,
            coeffs: self.coeffs[..self.m - 2].to_vec(),
            penalty_alpha: None,
        })
    }
}

/// `psi_m(alpha) = sum_{i=1}^{m-1} c_i alpha^i`.
pub fn psi(spec: &QuotientSpec, alpha: f64) -> f64 {
    // Horner on c_1 a + c_2 a^2 + ... = a (c_1 + a (c_2 + ...)).
    alpha * spec.coeffs.iter().rev().fold(0.0, |acc, &c| acc * alpha + c)
}

/// `(deficit - psi_m(alpha)) / alpha^m` from precomputed functionals.
pub fn q_m_value(spec: &QuotientSpec, deficit: f64, alpha: f64) -> Result<f64> {
    if !(alpha > ALPHA_FLOOR) {
        return Err(Error::UndefinedAtBall { alpha });
    }
    Ok((deficit - psi(spec, alpha)) / alpha.powi(spec.m as i32))
}

/// Penalized value `q_m + (alpha/alpha_j - 1)^2 / alpha`.
pub fn q_m_penalized_value(spec: &QuotientSpec, deficit: f64, alpha: f64) -> Result<f64> {
    let aj = spec
        .penalty_alpha
        .ok_or_else(|| Error::Precondition("penalized quotient needs penalty_alpha".into()))?;
    let q = q_m_value(spec, deficit, alpha)?;
    Ok(q + (alpha / aj - 1.0).powi(2) / alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientValue {
    pub value: f64,
    pub deficit: f64,
    pub alpha: f64,
}

pub fn q_m(shape: &ArcShape, spec: &QuotientSpec) -> Result<QuotientValue> {
    spec.validate()?;
    let d = deficit(shape);
    let a = asymmetry(shape)?.alpha;
    Ok(QuotientValue {
        value: q_m_value(spec, d, a)?,
        deficit: d,
        alpha: a,
    })
}

pub fn q_m_penalized(shape: &ArcShape, spec: &QuotientSpec) -> Result<QuotientValue> {
    spec.validate()?;
    let d = deficit(shape);
    let a = asymmetry(shape)?.alpha;
    Ok(QuotientValue {
        value: q_m_penalized_value(spec, d, a)?,
        deficit: d,
        alpha: a,
    })
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pair `f, g` on `[0, 2]` with their derivatives and Lipschitz bounds.
#[derive(Clone)]
pub struct FgSpec {
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub df: ScalarFn,
    pub dg: ScalarFn,
    pub lip_f: f64,
    pub lip_g: f64,
}

impl std::fmt::Debug for FgSpec {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("FgSpec")
            .field("lip_f", &self.lip_f)
            .field("lip_g", &self.lip_g)
            .finish_non_exhaustive()
    }
}

impl FgSpec {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lip_f: f64,
        lip_g: f64,
    ) -> Self {
        Self {
            f: Arc::new(f),
            g: Arc::new(g),
            df: Arc::new(df),
            dg: Arc::new(dg),
            lip_f,
            lip_g,
        }
    }

    /// `f = 0`, `g(t) = t^p`.
    pub fn power(p: i32) -> Self {
        let pf = p as f64;
        Self::new(
            |_| 0.0,
            |_| 0.0,
            move |t| t.powi(p),
            move |t| pf * t.powi(p - 1),
            0.0,
            pf * 2f64.powi(p - 1),
        )
    }

    /// The choice that turns `F_{f,g}` into `Q^(m)`: `f = -psi_m`,
    /// `g(t) = t^m`.
    pub fn quotient(spec: &QuotientSpec) -> Self {
        let c = spec.coeffs.clone();
        let c2 = c.clone();
        let m = spec.m as i32;
        let lip_f: f64 = c
            .iter()
            .enumerate()
            .map(|(i, ci)| ci.abs() * (i + 1) as f64 * 2f64.powi(i as i32))
            .sum();
        Self::new(
            move |t| -t * c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci),
            move |t| {
                -c2.iter()
                    .enumerate()
                    .map(|(i, ci)| ci * (i + 1) as f64 * t.powi(i as i32))
                    .sum::<f64>()
            },
            move |t| t.powi(m),
            move |t| m as f64 * t.powi(m - 1),
            lip_f,
            m as f64 * 2f64.powi(m - 1),
        )
    }

    /// Check `g(0) = 0` and `g > 0` on a sample of `(0, 2]`.
    pub fn validate(&self) -> Result<()> {
        if (self.g)(0.0).abs() > 1e-15 {
            return Err(Error::Precondition("g(0) must vanish".into()));
        }
        if (1..=200).any(|i| !((self.g)(i as f64 * 0.01) > 0.0)) {
            return Err(Error::Precondition("g must be positive on (0, 2]".into()));
        }
        Ok(())
    }
}

/// `(deficit + f(alpha)) / g(alpha)`.
pub fn eval_fg_value(spec: &FgSpec, deficit: f64, alpha: f64) -> Result<f64> {
    if !(alpha > ALPHA_FLOOR) {
        return Err(Error::UndefinedAtBall { alpha });
    }
    Ok((deficit + (spec.f)(alpha)) / (spec.g)(alpha))
}

pub fn eval_fg(shape: &ArcShape, spec: &FgSpec) -> Result<f64> {
    let d = deficit(shape);
    let a = asymmetry(shape)?.alpha;
    eval_fg_value(spec, d, a)
}

/// Result of extrapolating `Q^(m)` along ovals to the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub m: usize,
    pub value: f64,
    /// Richardson extrapolant (same as `value`).
    pub richardson: f64,
    /// Intercept of a quadratic least-squares fit in alpha.
    pub polyfit: f64,
    pub polyfit_stderr: f64,
    /// Differences of successive extrapolants as more grid points enter.
    pub residual_sequence: Vec<f64>,
    /// Asymmetries actually attained on the ovals.
    pub alpha_grid: Vec<f64>,
    pub betas: Vec<f64>,
    pub deficits: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Requested grid points dropped because the solver noise floor
    /// exceeds 1% of alpha^m there.
    pub dropped: Vec<f64>,
}

/// Default asymmetry grid for the coefficient estimator.
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Grid used when none is given. From `m = 3` on, the default grid loses
/// its small-alpha points to the noise-floor rule, so the grid starts
/// higher: halvings from 0.4 for `m = 3`, and five geometric points from
/// 0.4 down to just above the noise floor beyond that.
pub fn default_alpha_grid(m: usize) -> Vec<f64> {
    match m {
        0..=2 => DEFAULT_ALPHA_GRID.to_vec(),
        3 => vec![0.4, 0.2, 0.1, 0.05],
        _ => {
            let floor = (ALPHA_FLOOR / 0.01).powf(1.0 / m as f64) * 1.01;
            let ratio = (floor / 0.4).powf(0.25);
            (0..5).map(|i| 0.4 * ratio.powi(i)).collect()
        }
    }
}

/// Oval crossing angle whose asymmetry is `alpha`, with the attained
/// asymmetry and deficit. The relation is monotone in practice but this is
/// not assumed: a bracketing scan precedes the root solve.
pub fn oval_for_alpha(alpha: f64) -> Result<(f64, f64, f64)> {
    let eval = |b: f64| -> Result<(f64, f64)> {
        let (_, s) = make_oval(b)?;
        Ok((asymmetry(&s)?.alpha, deficit(&s)))
    };
    // alpha grows roughly like 0.55 beta along the family; bracket
    // geometrically around that guess.
    let guess = (alpha / 0.55).clamp(1e-4, 0.8);
    let (mut lo, mut hi) = (guess / 1.25, (guess * 1.25).min(0.9));
    let mut a_lo = eval(lo)?.0;
    while a_lo >= alpha {
        hi = lo;
        lo /= 1.5;
        if lo < 1e-6 {
            return Err(Error::InfeasibleParameter(format!("alpha {alpha} below the reachable range")));
        }
        a_lo = eval(lo)?.0;
    }
    let mut a_hi = eval(hi)?.0;
    while a_hi < alpha {
        lo = hi;
        a_lo = a_hi;
        if hi >= 0.9 {
            return Err(Error::InfeasibleParameter(format!("alpha {alpha} beyond the oval family")));
        }
        hi = (hi * 1.5).min(0.9);
        a_hi = eval(hi)?.0;
    }
    // Regula falsi (Illinois) on alpha(beta) - alpha; loose tolerance, the
    // attained alpha is what enters the fit.
    let (mut fl, mut fh) = (a_lo - alpha, a_hi - alpha);
    let mut side = 0;
    let mut b = hi;
    for _ in 0..60 {
        b = (lo * fh - hi * fl) / (fh - fl);
        let fb = eval(b)?.0 - alpha;
        if fb.abs() < 1e-4 * alpha || (hi - lo) < 1e-12 {
            break;
        }
        if fb.signum() == fh.signum() {
            hi = b;
            fh = fb;
            if side == -1 {
                fl *= 0.5;
            }
            side = -1;
        } else {
            lo = b;
            fl = fb;
            if side == 1 {
                fh *= 0.5;
            }
            side = 1;
        }
    }
    let (a, d) = eval(b)?;
    Ok((b, a, d))
}

/// Neville extrapolation of the polynomial through `(x_i, y_i)` to `x = 0`;
/// returns the diagonal (extrapolants using 2, 3, ... points).
fn neville_to_zero(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut p = y.to_vec();
    let mut diag = Vec::with_capacity(n);
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i]);
        }
        diag.push(p[0]);
    }
    diag
}

/// Least-squares quadratic fit; returns (intercept, stderr of intercept).
fn quadratic_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    // Normal equations in the monomial basis; small and well scaled enough
    // for the grids used here.
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let row = [1.0, xi, xi * xi];
        for r in 0..3 {
            aty[r] += row[r] * yi;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let inv = invert3(&ata);
    let coef: Vec<f64> = (0..3).map(|r| (0..3).map(|c| inv[r][c] * aty[c]).sum()).collect();
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - coef[0] - coef[1] * xi - coef[2] * xi * xi).powi(2))
        .sum();
    let dof = n.saturating_sub(3).max(1) as f64;
    let sigma2 = rss / dof;
    (coef[0], (sigma2 * inv[0][0]).sqrt())
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    inv
}

/// Estimate `c_m = Q^(m)(B)` by evaluating `Q^(m)` on ovals whose
/// asymmetries follow `alpha_grid` and extrapolating to `alpha = 0`.
pub fn estimate_c_m(m: usize, coeffs: &[f64], alpha_grid: &[f64]) -> Result<CoefficientEstimate> {
    let spec = QuotientSpec::with_coeffs(m, coeffs.to_vec())?;
    if alpha_grid.len() < 4 {
        return Err(Error::Precondition("alpha grid needs at least 4 points".into()));
    }
    if alpha_grid.windows(2).any(|w| !(w[1] < w[0])) || alpha_grid.iter().any(|&a| !(a > 0.0 && a <= 0.5)) {
        return Err(Error::Precondition(
            "alpha grid must be strictly decreasing within (0, 0.5]".into(),
        ));
    }
    let (kept, dropped): (Vec<f64>, Vec<f64>) = alpha_grid
        .iter()
        .partition(|&&a| ALPHA_FLOOR <= 0.01 * a.powi(m as i32));
    if kept.len() < 4 {
        return Err(Error::Precondition(format!(
            "only {} grid points survive the noise-floor rule for m = {m}",
            kept.len()
        )));
    }
    let rows: Vec<(f64, f64, f64)> = kept
        .par_iter()
        .map(|&a| oval_for_alpha(a))
        .collect::<Result<_>>()?;
    let alphas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let deficits: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let q: Vec<f64> = rows
        .iter()
        .map(|r| q_m_value(&spec, r.2, r.1))
        .collect::<Result<_>>()?;
    let diag = neville_to_zero(&alphas, &q);
    let rich = *diag.last().unwrap();
    let residual_sequence: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (fit, stderr) = quadratic_fit(&alphas, &q);
    if (rich - fit).abs() > 10.0 * stderr {
        return Err(Error::NonConvergentEstimate {
            extrapolated: rich,
            polyfit: fit,
            stderr,
        });
    }
    Ok(CoefficientEstimate {
        m,
        value: rich,
        richardson: rich,
        polyfit: fit,
        polyfit_stderr: stderr,
        residual_sequence,
        alpha_grid: alphas,
        betas: rows.iter().map(|r| r.0).collect(),
        deficits,
        q_values: q,
        dropped,
    })
}
