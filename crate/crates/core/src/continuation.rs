//! AAA barycentric rational approximation of the trace on [0, T₁] and its
//! extrapolation to [T₁, T].

use crate::error::{param, Error, Result};
use crate::trace::Trace;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DEGREE: usize = 20;
const MAX_CLEANUPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalApproximant {
    pub support: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
    /// max |f − r| / max |f| over the fitted samples.
    pub max_rel_error: f64,
    pub converged: bool,
    pub stagnated: bool,
    /// Max relative error after each greedy step.
    pub error_history: Vec<f64>,
    /// All poles as (re, im).
    pub poles: Vec<[f64; 2]>,
    /// Real parts of (numerically) real poles inside the guarded interval.
    pub interval_poles: Vec<f64>,
    pub cleanups: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct AaaOptions {
    pub tol: f64,
    pub max_degree: usize,
    /// Right end of the interval that must be pole free (T·1.05 by default).
    pub guard_end: f64,
}

impl AaaOptions {
    pub fn new(t_final: f64) -> Self {
        Self { tol: DEFAULT_TOL, max_degree: DEFAULT_MAX_DEGREE, guard_end: 1.05 * t_final }
    }
}

/// Greedy AAA on the samples of `h`.
pub fn aaa_fit(h: &Trace, opts: &AaaOptions) -> Result<RationalApproximant> {
    let n = h.len();
    if n < 2 * opts.max_degree + 2 {
        return param(format!("AAA needs at least {} samples, got {n}", 2 * opts.max_degree + 2));
    }
    if !(opts.tol > 0.0) {
        return param("AAA tolerance must be positive");
    }
    let z = &h.times;
    let f = &h.values;
    let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 || f.iter().all(|v| *v == f[0]) {
        return Ok(finish(vec![z[0]], vec![f[0]], vec![1.0], 0.0, true, false, vec![0.0], opts, 0));
    }
    let mut chosen: Vec<usize> = Vec::new();
    let mut approx = vec![f.iter().sum::<f64>() / n as f64; n];
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut worse_streak = 0;
    loop {
        let (j, _) = (0..n)
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, (f[i] - approx[i]).abs()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        chosen.push(j);
        let w = weights_for(z, f, &chosen)?;
        for i in 0..n {
            approx[i] = bary(z, f, &chosen, &w, z[i]);
        }
        let err = (0..n).map(|i| (f[i] - approx[i]).abs()).fold(0.0, f64::max) / scale;
        if let Some(prev) = history.last() {
            if err >= *prev {
                worse_streak += 1;
            } else {
                worse_streak = 0;
            }
        }
        history.push(err);
        if best.as_ref().map_or(true, |b| err < b.0) {
            best = Some((err, chosen.clone(), w.clone()));
        }
        let degree = chosen.len() - 1;
        if err <= opts.tol {
            break;
        }
        if degree >= opts.max_degree || worse_streak >= 3 || chosen.len() == n {
            let (e, c, w) = best.expect("at least one step");
            let stagnated = worse_streak >= 3;
            return cleanup(z, f, c, w, e, false, stagnated, history, opts, scale);
        }
    }
    let err = *history.last().expect("nonempty");
    let w = weights_for(z, f, &chosen)?;
    cleanup(z, f, chosen, w, err, true, false, history, opts, scale)
}

#[allow(clippy::too_many_arguments)]
fn cleanup(
    z: &[f64],
    f: &[f64],
    mut chosen: Vec<usize>,
    mut w: Vec<f64>,
    mut err: f64,
    converged: bool,
    stagnated: bool,
    history: Vec<f64>,
    opts: &AaaOptions,
    scale: f64,
) -> Result<RationalApproximant> {
    let err0 = err;
    for attempt in 0..=MAX_CLEANUPS {
        if attempt > 0 && err > 10.0 * err0.max(opts.tol) {
            return Err(Error::Continuation(format!(
                "removing poles in [0, {}] degrades the fit to relative error {err:.2e}",
                opts.guard_end
            )));
        }
        let sz: Vec<f64> = chosen.iter().map(|&i| z[i]).collect();
        let sf: Vec<f64> = chosen.iter().map(|&i| f[i]).collect();
        let r = finish(sz, sf, w.clone(), err, converged, stagnated, history.clone(), opts, attempt);
        if r.interval_poles.is_empty() {
            return Ok(r);
        }
        if attempt == MAX_CLEANUPS || chosen.len() <= 1 {
            return Err(Error::Continuation(format!(
                "rational fit keeps poles in [0, {}] after {MAX_CLEANUPS} clean-ups: {:?}",
                opts.guard_end, r.interval_poles
            )));
        }
        let drop = (0..w.len())
            .min_by(|a, b| w[*a].abs().partial_cmp(&w[*b].abs()).expect("finite weights"))
            .expect("nonempty support");
        chosen.remove(drop);
        w = weights_for(z, f, &chosen)?;
        err = (0..z.len()).map(|i| (f[i] - bary(z, f, &chosen, &w, z[i])).abs()).fold(0.0, f64::max) / scale;
    }
    unreachable!("loop returns on its last attempt")
}

#[allow(clippy::too_many_arguments)]
fn finish(
    support: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    err: f64,
    converged: bool,
    stagnated: bool,
    history: Vec<f64>,
    opts: &AaaOptions,
    cleanups: usize,
) -> RationalApproximant {
    let poles = poles_of(&support, &weights);
    let lo = support.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let span = opts.guard_end - lo;
    let interval_poles = poles
        .iter()
        .filter(|p| p[1].abs() <= 1e-6 * span.max(1.0) && p[0] >= lo && p[0] <= opts.guard_end)
        .map(|p| p[0])
        .collect();
    RationalApproximant {
        degree: support.len() - 1,
        support,
        values,
        weights,
        max_rel_error: err,
        converged,
        stagnated,
        error_history: history,
        poles,
        interval_poles,
        cleanups,
    }
}

/// Weights: right singular vector of the Loewner matrix for the smallest singular value.
fn weights_for(z: &[f64], f: &[f64], chosen: &[usize]) -> Result<Vec<f64>> {
    let m = chosen.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let rows: Vec<usize> = (0..z.len()).filter(|i| !chosen.contains(i)).collect();
    let a = DMatrix::from_fn(rows.len(), m, |r, c| {
        let (i, j) = (rows[r], chosen[c]);
        (f[i] - f[j]) / (z[i] - z[j])
    });
    // the smallest right singular vector of A is the bottom eigenvector of AᵀA;
    // use the SVD of A itself for accuracy
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return singular vectors".into()))?;
    let k = (0..svd.singular_values.len())
        .min_by(|x, y| svd.singular_values[*x].partial_cmp(&svd.singular_values[*y]).expect("finite"))
        .expect("nonempty");
    Ok((0..m).map(|c| vt[(k, c)]).collect())
}

fn bary(z: &[f64], f: &[f64], chosen: &[usize], w: &[f64], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &j) in chosen.iter().enumerate() {
        let d = t - z[j];
        if d == 0.0 {
            return f[j];
        }
        num += w[k] * f[j] / d;
        den += w[k] / d;
    }
    num / den
}

/// Zeros of Σ w_k/(t − z_k), from the eigenvalues of Π Y with
/// Π = I − 1wᵀ/(wᵀ1) and Y the diagonal of shifted support points; one
/// spurious eigenvalue at 0 is discarded.
fn poles_of(support: &[f64], weights: &[f64]) -> Vec<[f64; 2]> {
    let m = support.len();
    if m < 2 {
        return vec![];
    }
    let lo = support.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // shift away from every support point
    let c = hi + 0.5 * (hi - lo).max(1.0);
    let zs: Vec<f64> = support.iter().map(|z| z - c).collect();
    let sw: f64 = weights.iter().sum();
    let wabs: f64 = weights.iter().map(|w| w.abs()).sum();
    let arrow = |y: &[f64], w: &[f64]| {
        let sum: f64 = w.iter().sum();
        let a = DMatrix::from_fn(m, m, |i, j| if i == j { y[j] } else { 0.0 } - w[j] * y[j] / sum);
        let mut ev: Vec<num_complex::Complex64> = a.complex_eigenvalues().iter().copied().collect();
        if let Some(k) = (0..m).min_by(|a, b| ev[*a].norm().partial_cmp(&ev[*b].norm()).expect("finite eigenvalues")) {
            ev.remove(k);
        }
        ev
    };
    let ev = if sw.abs() > 1e-12 * wabs {
        arrow(&zs, weights)
    } else {
        // Σw ≈ 0: work in s = 1/(t − c), where the weights become w_k/zs_k
        let y: Vec<f64> = zs.iter().map(|z| 1.0 / z).collect();
        let w: Vec<f64> = weights.iter().zip(&zs).map(|(w, z)| w / z).collect();
        arrow(&y, &w).into_iter().map(|s| s.inv()).collect()
    };
    ev.into_iter().filter(|p| p.re.is_finite() && p.im.is_finite()).map(|p| [p.re + c, p.im]).collect()
}

/// Barycentric evaluation; support points return their stored values exactly.
pub fn eval_rational(r: &RationalApproximant, t: f64) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..r.support.len() {
        let d = t - r.support[k];
        if d == 0.0 {
            return Ok(r.values[k]);
        }
        num += r.weights[k] * r.values[k] / d;
        den += r.weights[k] / d;
    }
    let v = num / den;
    if !v.is_finite() {
        return Err(Error::Numerical(format!("rational approximant has a pole at t = {t}")));
    }
    Ok(v)
}

/// h̄ = 0 on [0, T₁], h − h_r on (T₁, T].
pub fn reduced_data(h: &Trace, hr: &RationalApproximant, t_split: f64) -> Result<Trace> {
    let last = h.times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if h.is_empty() || h.times[0] > t_split || last <= t_split {
        return param(format!("reduced data needs samples on both sides of T1 = {t_split}"));
    }
    if let Some(p) = hr.poles.iter().find(|p| p[1].abs() <= 1e-6 * last.max(1.0) && p[0] >= t_split && p[0] <= last) {
        return Err(Error::Continuation(format!("rational continuation has a pole at t = {} inside [T1, T]", p[0])));
    }
    let values = h
        .times
        .iter()
        .zip(&h.values)
        .map(|(t, v)| if *t <= t_split { Ok(0.0) } else { Ok(v - eval_rational(hr, *t)?) })
        .collect::<Result<Vec<f64>>>()?;
    Trace::new(h.times.clone(), values)
}

impl RationalApproximant {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
