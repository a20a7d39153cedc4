//! Derivative-free minimizers: golden-section search and Nelder–Mead.

use rayon::prelude::*;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<(Vec<f64>, f64)>,
}

/// Golden-section search on `[a, b]` down to bracket width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64, max_evals: usize) -> Minimum {
    let mut trace = Vec::new();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    trace.push((vec![c], fc));
    trace.push((vec![d], fd));
    let mut evals = 2;
    while (b - a).abs() > tol && evals < max_evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            trace.push((vec![c], fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            trace.push((vec![d], fd));
        }
        evals += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum {
        x: vec![x],
        value,
        evaluations: evals,
        converged: (b - a).abs() <= tol,
        trace,
    }
}

/// Golden-section search run separately on `pieces` equal sub-brackets,
/// keeping the best; guards against a multimodal objective.
pub fn golden_section_restarts(
    f: impl Fn(f64) -> f64 + Sync,
    a: f64,
    b: f64,
    pieces: usize,
    tol: f64,
    max_evals: usize,
) -> Minimum {
    let w = (b - a) / pieces as f64;
    let runs: Vec<Minimum> = (0..pieces)
        .into_par_iter()
        .map(|i| golden_section(&f, a + i as f64 * w, a + (i + 1) as f64 * w, tol, max_evals / pieces))
        .collect();
    merge_runs(runs)
}

pub(crate) fn merge_runs(runs: Vec<Minimum>) -> Minimum {
    let mut best: Option<Minimum> = None;
    let mut evals = 0;
    let mut trace = Vec::new();
    let mut all_converged = true;
    for r in runs {
        evals += r.evaluations;
        all_converged &= r.converged;
        trace.extend(r.trace.iter().cloned());
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let mut b = best.expect("at least one run");
    b.evaluations = evals;
    b.trace = trace;
    b.converged = all_converged;
    b
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    /// Stop when every vertex is within this distance of the best one...
    pub tol_x: f64,
    /// ...and the values across the simplex differ by less than this.
    pub tol_f: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol_x: 1e-6,
            tol_f: 1e-8,
            max_evals: 4000,
        }
    }
}

/// Nelder–Mead inside the box `[lo, hi]` (points are clamped to the box).
/// `step` gives the initial simplex edge per coordinate.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64 + Sync,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        if p[i] > hi[i] {
            p[i] = x0[i] - step[i];
        }
        clamp(&mut p);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.par_iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut trace: Vec<(Vec<f64>, f64)> = pts.iter().cloned().zip(vals.iter().copied()).collect();
    let mut converged = false;
    while evals < opts.max_evals {
        // Order vertices (stable, so ties keep insertion order).
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let spread = vals[n] - vals[0];
        if diam < opts.tol_x && (spread < opts.tol_f || !spread.is_finite() && diam == 0.0) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect();
            clamp(&mut p);
            p
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        trace.push((xr.clone(), fr));
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            trace.push((xe.clone(), fe));
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        trace.push((xc.clone(), fc));
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = pts[0].clone();
        for p in pts.iter_mut().skip(1) {
            for j in 0..n {
                p[j] = best[j] + 0.5 * (p[j] - best[j]);
            }
        }
        let new_vals: Vec<f64> = pts[1..].par_iter().map(|p| f(p)).collect();
        evals += n;
        for (k, v) in new_vals.into_iter().enumerate() {
            vals[k + 1] = v;
            trace.push((pts[k + 1].clone(), v));
        }
    }
    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    Minimum {
        x: pts[bi].clone(),
        value: vals[bi],
        evaluations: evals,
        converged,
        trace,
    }
}

/// Radical inverse of `i` in base `b` (Halton sequence component).
pub fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Point `index` of the Halton sequence mapped into the box.
pub fn halton_point(index: u64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .enumerate()
        .map(|(d, (&l, &h))| l + (h - l) * halton(index + 1, PRIMES[d % PRIMES.len()]))
        .collect()
}
