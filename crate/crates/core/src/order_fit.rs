//! Recovery of the order α from the small-time behaviour
//! h(t) ≈ c₀ + c₁ t^α of the boundary trace.
//!
//! For fixed α the model is linear in (c₀, c₁), so the fit scans α on a grid
//! and refines the best cell by golden-section search.

use crate::error::{param, Result};
use crate::trace::{fmt17, Trace};
use serde::{Deserialize, Serialize};

pub const MIN_SAMPLES: usize = 8;
/// Samples per window used by [`geometric_samples`].
pub const SAMPLES_PER_WINDOW: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFitResult {
    pub alpha_hat: f64,
    pub c0: f64,
    pub c1: f64,
    /// ½ Σ ω_i (c₀ + c₁ t_i^α − h_i)², trapezoid weights ω on the samples.
    pub objective: f64,
    pub t0: f64,
    pub n_samples: usize,
    /// Objective essentially flat in α (e.g. constant data).
    pub unidentifiable: bool,
}

struct Samples {
    t: Vec<f64>,
    h: Vec<f64>,
    w: Vec<f64>,
}

impl Samples {
    fn new(h: &Trace, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return param(format!("window must be positive, got {t0}"));
        }
        let (t, v): (Vec<f64>, Vec<f64>) =
            h.times.iter().zip(&h.values).filter(|(t, _)| **t > 0.0 && **t <= t0).map(|(t, v)| (*t, *v)).unzip();
        if t.len() < MIN_SAMPLES {
            return param(format!("order fit needs at least {MIN_SAMPLES} samples in (0, {t0}], got {}", t.len()));
        }
        if t[t.len() - 1] <= t[0] {
            return param("order fit samples are all at the same time");
        }
        let n = t.len();
        let w = (0..n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { t[i - 1] };
                let hi = if i + 1 == n { t[i] } else { t[i + 1] };
                0.5 * (hi - lo)
            })
            .collect();
        Ok(Self { t, h: v, w })
    }

    /// Weighted least squares for (c₀, c₁) at fixed α; returns (c₀, c₁, objective).
    fn solve(&self, alpha: f64) -> (f64, f64, f64) {
        let x: Vec<f64> = self.t.iter().map(|t| t.powf(alpha)).collect();
        let sw: f64 = self.w.iter().sum();
        let xm = self.w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
        let ym = self.w.iter().zip(&self.h).map(|(w, y)| w * y).sum::<f64>() / sw;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for i in 0..x.len() {
            let dx = x[i] - xm;
            sxx += self.w[i] * dx * dx;
            sxy += self.w[i] * dx * (self.h[i] - ym);
        }
        let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let c0 = ym - c1 * xm;
        let obj = 0.5 * (0..x.len()).map(|i| self.w[i] * (c0 + c1 * x[i] - self.h[i]).powi(2)).sum::<f64>();
        (c0, c1, obj)
    }

    /// Weighted variance about the weighted mean (unnormalised).
    fn spread(&self) -> f64 {
        let sw: f64 = self.w.iter().sum();
        let ym = self.w.iter().zip(&self.h).map(|(w, y)| w * y).sum::<f64>() / sw;
        self.w.iter().zip(&self.h).map(|(w, h)| w * (h - ym).powi(2)).sum()
    }
}

/// Least-squares fit of c₀ + c₁ t^α to the samples of `h` in (0, t0].
pub fn fit_order(h: &Trace, t0: f64) -> Result<OrderFitResult> {
    let s = Samples::new(h, t0)?;
    let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    let objs: Vec<f64> = grid.iter().map(|a| s.solve(*a).2).collect();
    let (mut best, mut lo_obj, mut hi_obj) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for (i, o) in objs.iter().enumerate() {
        if *o < lo_obj {
            lo_obj = *o;
            best = i;
        }
        hi_obj = hi_obj.max(*o);
    }
    let unidentifiable = hi_obj - lo_obj <= 1e-12 * s.spread();
    let alpha = if unidentifiable {
        grid[best]
    } else {
        golden(|a| s.solve(a).2, (grid[best] - 0.01).max(0.0), (grid[best] + 0.01).min(1.0), 1e-6)
    };
    let (mut c0, mut c1, objective) = s.solve(alpha);
    if unidentifiable {
        // flat objective: the data carry no t^α component
        c0 += c1 * s.t.iter().zip(&s.w).map(|(t, w)| w * t.powf(alpha)).sum::<f64>() / s.w.iter().sum::<f64>();
        c1 = 0.0;
    }
    Ok(OrderFitResult { alpha_hat: alpha, c0, c1, objective, t0, n_samples: s.t.len(), unidentifiable })
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > width {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// One fit per window; windows must be strictly descending.
pub fn order_window_scan(h: &Trace, windows: &[f64]) -> Result<Vec<OrderFitResult>> {
    if windows.windows(2).any(|w| !(w[1] < w[0])) {
        return param("windows must be strictly descending");
    }
    windows.iter().map(|t0| fit_order(h, *t0)).collect()
}

/// Union of {t0 · 2^{−k} : k < 32} over the windows, ascending.
pub fn geometric_samples(windows: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = windows
        .iter()
        .flat_map(|t0| (0..SAMPLES_PER_WINDOW).map(move |k| t0 * 0.5f64.powi(k as i32)))
        .collect();
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    t
}

/// Table layout: one row per window, one column per run.
pub fn table_csv(windows: &[f64], headers: &[String], columns: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("t0");
    for h in headers {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for (i, w) in windows.iter().enumerate() {
        out.push_str(&format!("{w:e}"));
        for c in columns {
            out.push(',');
            match c.get(i).copied().flatten() {
                Some(v) => out.push_str(&fmt17(v)),
                None => out.push_str("error"),
            }
        }
        out.push('\n');
    }
    out
}
