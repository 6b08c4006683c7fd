//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use subdiff::mlf::{Kernels, MittagLeffler};
use subdiff::quadrature::{integrate, QuadOptions};

pub const ALPHAS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let r = integrate(f, a, b, QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_segments: 5000 });
    assert!(r.converged, "quadrature did not converge on [{a}, {b}]");
    r.value
}

/// Max relative gap between a central difference of t ↦ E_{α,1}(−λt^α) and
/// −λ t^{α−1}E_{α,α}(−λt^α) over t ∈ {0.1, 1, 10}, λ ∈ {1, 10, 100}.
pub fn differentiation_gap(alpha: f64) -> f64 {
    let ml = MittagLeffler::new(alpha, 1.0).unwrap();
    let k = Kernels::new(alpha).unwrap();
    let mut worst = 0.0f64;
    for t in [0.1, 1.0, 10.0] {
        for lam in [1.0, 10.0, 100.0] {
            let f = |t: f64| ml.eval_real(-lam * t.powf(alpha)).unwrap();
            let h = 1e-4 * t;
            let fd = (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h);
            let exact = -lam * k.kernel_e(lam, t).unwrap();
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    worst
}

/// Max relative gap between ∫₀^∞ e^{−zt}E_{α,1}(−λt^α)dt (truncated at 200,
/// tail ≤ e^{−200z}/z) and z^{α−1}/(z^α + λ) for z ∈ {0.5, 1, 2}, λ ∈ {1, 10}.
pub fn laplace_gap(alpha: f64) -> f64 {
    let ml = MittagLeffler::new(alpha, 1.0).unwrap();
    let mut worst = 0.0f64;
    for z in [0.5f64, 1.0, 2.0] {
        for lam in [1.0, 10.0] {
            // t = u², which removes the t^α cusp at the origin
            let mut lhs = 0.0;
            let cuts = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 200f64.sqrt()];
            for w in cuts.windows(2) {
                lhs += quad(|u| 2.0 * u * (-z * u * u).exp() * ml.eval_real(-lam * u.powf(2.0 * alpha)).unwrap(), w[0], w[1]);
            }
            let tail = (-200.0 * z).exp() / z;
            let exact = z.powf(alpha - 1.0) / (z.powf(alpha) + lam);
            worst = worst.max(((lhs - exact).abs() - tail).max(0.0) / exact);
        }
    }
    worst
}

/// Max absolute gap in
/// ∫₀ᵗ (t−s)^{α−1}E_{α,α}(−λ(t−s)^α) ∂ₛ^α g ds = g(t) − g(0)E_{α,1}(−λt^α) − λ∫₀ᵗ (t−s)^{α−1}E_{α,α}(−λ(t−s)^α) g(s) ds
/// for g(t) = t (∂^α g = t^{1−α}/Γ(2−α)), α = 0.5, λ = 5, t ∈ {0.25, 0.5, 1}.
pub fn convolution_gap() -> f64 {
    let alpha = 0.5;
    let lam = 5.0;
    let e_aa = MittagLeffler::new(alpha, alpha).unwrap();
    let e_a1 = MittagLeffler::new(alpha, 1.0).unwrap();
    let g2a = statrs::function::gamma::gamma(2.0 - alpha);
    let mut worst = 0.0f64;
    for t in [0.25f64, 0.5, 1.0] {
        // u = (t − s)^α absorbs the weak singularity: (t−s)^{α−1} ds = du/α
        let umax = t.powf(alpha);
        let s_of = |u: f64| (t - u.powf(1.0 / alpha)).max(0.0);
        let lhs = quad(|u| e_aa.eval_real(-lam * u).unwrap() * s_of(u).powf(1.0 - alpha) / g2a / alpha, 0.0, umax);
        let conv = quad(|u| e_aa.eval_real(-lam * u).unwrap() * s_of(u) / alpha, 0.0, umax);
        let rhs = t - 0.0 * e_a1.eval_real(-lam * umax).unwrap() - lam * conv;
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}
