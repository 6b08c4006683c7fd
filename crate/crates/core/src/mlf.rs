//! Two-parameter Mittag-Leffler function E_{α,β}(z) and the time kernels
//! built from it.
//!
//! Branches:
//! - power series for |z| ≤ 1,
//! - algebraic asymptotic expansion −Σ z^{−k}/Γ(β−kα) on the negative real
//!   axis for z ≤ −25 whenever its smallest term is negligible,
//! - otherwise the Hankel-contour integral
//!   (1/2πiα) ∫ exp(ζ^{1/α}) ζ^{(1−β)/α} / (ζ − z) dζ
//!   over two rays at angle ±δ joined by an arc of radius 1/2, plus the
//!   residue (1/α) z^{(1−β)/α} exp(z^{1/α}) when z lies inside the sector.

use crate::error::{param, Error, Result};
use crate::gamma::rgamma;
use crate::quadrature::{integrate, QuadOptions};
use num_complex::Complex64;
use std::f64::consts::PI;

const SERIES_TERMS: usize = 250;
const ASYM_TERMS: usize = 120;
const ASYM_MIN_ABS: f64 = 25.0;
const ARC_RADIUS: f64 = 0.5;

/// Order and second parameter of a Mittag-Leffler function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlfParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlfParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return param(format!("alpha must be positive, got {alpha}"));
        }
        if alpha >= 2.0 {
            return param(format!("alpha >= 2 is not supported, got {alpha}"));
        }
        if !beta.is_finite() {
            return param("beta must be finite");
        }
        Ok(Self { alpha, beta })
    }
}

/// Evaluator with precomputed series and asymptotic coefficients.
#[derive(Clone, Debug)]
pub struct MittagLeffler {
    p: MlfParams,
    series: Vec<f64>,
    asym: Vec<f64>,
}

impl MittagLeffler {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = MlfParams::new(alpha, beta)?;
        let series = (0..SERIES_TERMS).map(|k| rgamma(alpha * k as f64 + beta)).collect();
        let asym = (0..ASYM_TERMS).map(|k| rgamma(beta - alpha * k as f64)).collect();
        Ok(Self { p, series, asym })
    }

    pub fn params(&self) -> MlfParams {
        self.p
    }

    /// E_{α,β}(z) for complex z.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {z}")));
        }
        if z.im == 0.0 {
            return self.eval_real(z.re).map(|v| Complex64::new(v, 0.0));
        }
        if z.norm() <= 1.0 {
            return Ok(self.series_c(z, 0));
        }
        Ok(self.contour(z))
    }

    /// E_{α,β}(x) for real x.
    pub fn eval_real(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {x}")));
        }
        let MlfParams { alpha, beta } = self.p;
        if alpha == 1.0 && beta == 1.0 {
            return Ok(x.exp());
        }
        if alpha == 1.0 && beta == 2.0 && x != 0.0 {
            return Ok(if x.abs() < 1.0 { x.exp_m1() / x } else { (x.exp() - 1.0) / x });
        }
        if x.abs() <= 1.0 {
            return Ok(self.series_r(x, 0));
        }
        if x <= -ASYM_MIN_ABS {
            if let Some(v) = self.asymptotic(x) {
                return Ok(v);
            }
        }
        Ok(self.contour(Complex64::new(x, 0.0)).re)
    }

    /// E_{α,β}(x) − 1/Γ(β), accurate when the difference is tiny.
    pub fn eval_tail(&self, x: f64) -> Result<f64> {
        if x.abs() <= 1.0 {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite argument {x}")));
            }
            return Ok(self.series_r(x, 1));
        }
        Ok(self.eval_real(x)? - self.series[0])
    }

    fn series_r(&self, x: f64, start: usize) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        let mut pw = x.powi(start as i32);
        for c in &self.series[start..] {
            let term = c * pw;
            // Kahan summation
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if term.abs() < 1e-17 * sum.abs() && *c != 0.0 {
                break;
            }
            pw *= x;
            if pw == 0.0 {
                break;
            }
        }
        sum
    }

    fn series_c(&self, z: Complex64, start: usize) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pw = z.powi(start as i32);
        for c in &self.series[start..] {
            let term = pw * *c;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() && *c != 0.0 {
                break;
            }
            pw *= z;
        }
        sum
    }

    fn asymptotic(&self, x: f64) -> Option<f64> {
        let inv = 1.0 / x;
        let mut pw = 1.0;
        let mut sum = 0.0;
        let mut last = f64::INFINITY;
        for c in &self.asym[1..] {
            pw *= inv;
            let term = c * pw;
            if *c != 0.0 {
                if term.abs() > last {
                    // divergence sets in: smallest-term truncation
                    break;
                }
                last = term.abs();
            }
            sum -= term;
            if last < 1e-17 * sum.abs() {
                return Some(sum);
            }
        }
        (sum != 0.0 && last <= 1e-16 * sum.abs()).then_some(sum)
    }

    fn ray_angle(&self, theta: f64) -> f64 {
        let alpha = self.p.alpha;
        let lo = 0.6 * alpha * PI;
        let hi = (alpha * PI).min(0.97 * PI);
        let margin = 0.2 * PI;
        if theta > hi {
            (theta - margin).clamp(lo, hi)
        } else if theta < lo {
            (theta + margin).clamp(lo, hi)
        } else if theta - margin >= lo {
            theta - margin
        } else if theta + margin <= hi {
            theta + margin
        } else if theta - lo > hi - theta {
            lo
        } else {
            hi
        }
    }

    fn contour(&self, z: Complex64) -> Complex64 {
        let MlfParams { alpha, beta } = self.p;
        let theta = z.arg().abs();
        let delta = self.ray_angle(theta);
        let pexp = (1.0 - beta) / alpha;
        let integrand = |r: f64, phi: f64| -> Complex64 {
            let lr = r.ln();
            let w = Complex64::from_polar(r.powf(1.0 / alpha), phi / alpha);
            let zp = Complex64::new(pexp * lr, pexp * phi).exp();
            let zeta = Complex64::from_polar(r, phi);
            w.exp() * zp / (zeta - z)
        };
        let c = (delta / alpha).cos();
        // upper limit where exp(r^{1/α} cos(δ/α)) is negligible
        let mut big = 60.0_f64;
        for _ in 0..3 {
            let r = (big / -c).powf(alpha);
            big = 60.0 + pexp.max(0.0) * r.max(1.0).ln();
        }
        let r_max = (big / -c).powf(alpha).max(2.0 * ARC_RADIUS);
        let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 2e-15, max_segments: 400 };
        let e_up = Complex64::from_polar(1.0, delta);
        let e_dn = Complex64::from_polar(1.0, -delta);
        // split the rays at |z| so the near-pole bump is resolved
        let mut cuts = vec![ARC_RADIUS];
        let zn = z.norm();
        if zn > ARC_RADIUS && zn < r_max {
            cuts.push(zn);
        }
        cuts.push(r_max);
        let mut rays = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            rays += integrate(
                |r: f64| integrand(r, delta) * e_up - integrand(r, -delta) * e_dn,
                w[0],
                w[1],
                opts,
            )
            .value;
        }
        let arc = integrate(
            |phi: f64| {
                integrand(ARC_RADIUS, phi) * Complex64::new(0.0, ARC_RADIUS) * Complex64::from_polar(1.0, phi)
            },
            -delta,
            delta,
            opts,
        )
        .value;
        let mut value = (rays + arc) / Complex64::new(0.0, 2.0 * PI * alpha);
        if theta < delta && zn > ARC_RADIUS {
            let lz = z.ln();
            value += (lz / alpha).exp().exp() * (lz * pexp).exp() / alpha;
        }
        value
    }
}

/// E_{α,β}(z), building a one-off evaluator.
pub fn eval_mlf(p: MlfParams, z: Complex64) -> Result<Complex64> {
    MittagLeffler::new(p.alpha, p.beta)?.eval(z)
}

/// Cached evaluators for the three functions used by the time kernels.
#[derive(Clone, Debug)]
pub struct Kernels {
    alpha: f64,
    e1: MittagLeffler,
    ea: MittagLeffler,
    e2: MittagLeffler,
}

impl Kernels {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            e1: MittagLeffler::new(alpha, 1.0)?,
            ea: MittagLeffler::new(alpha, alpha)?,
            e2: MittagLeffler::new(alpha, 2.0)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// E_{α,1}(−λ t^α).
    pub fn relaxation(&self, lam: f64, t: f64) -> Result<f64> {
        self.e1.eval_real(-lam * t.powf(self.alpha))
    }

    /// E_{α,1}(−λ t^α) − 1.
    pub fn relaxation_m1(&self, lam: f64, t: f64) -> Result<f64> {
        self.e1.eval_tail(-lam * t.powf(self.alpha))
    }

    /// E_{α,2}(−λ t^α).
    pub fn ramp_relaxation(&self, lam: f64, t: f64) -> Result<f64> {
        self.e2.eval_real(-lam * t.powf(self.alpha))
    }

    /// t^{α−1} E_{α,α}(−λ t^α).
    pub fn kernel_e(&self, lam: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("kernel requires t > 0, got {t}")));
        }
        if lam < 0.0 {
            return param(format!("eigenvalue must be non-negative, got {lam}"));
        }
        Ok(t.powf(self.alpha - 1.0) * self.ea.eval_real(-lam * t.powf(self.alpha))?)
    }

    /// λ⁻¹(1 − E_{α,1}(−λ(t − t_on)^α)) for t > t_on, else 0.
    pub fn step_response(&self, lam: f64, t: f64, t_on: f64) -> Result<f64> {
        if !(lam > 0.0) {
            return param(format!("step response requires lambda > 0, got {lam}"));
        }
        if t <= t_on {
            return Ok(0.0);
        }
        Ok(-self.relaxation_m1(lam, t - t_on)? / lam)
    }

    /// ∫₀ˢ of the step response with onset 0: λ⁻¹ s (1 − E_{α,2}(−λ s^α)).
    pub fn ramp_response(&self, lam: f64, s: f64) -> Result<f64> {
        if !(lam > 0.0) {
            return param(format!("ramp response requires lambda > 0, got {lam}"));
        }
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(-s * self.e2.eval_tail(-lam * s.powf(self.alpha))? / lam)
    }
}

/// t^{α−1} E_{α,α}(−λ t^α).
pub fn kernel_e(alpha: f64, lam: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel requires t > 0, got {t}")));
    }
    Kernels::new(alpha)?.kernel_e(lam, t)
}

/// Response to a unit step switched on at `t_on`.
pub fn step_response(alpha: f64, lam: f64, t: f64, t_on: f64) -> Result<f64> {
    if !(t_on >= 0.0) {
        return param(format!("onset must be non-negative, got {t_on}"));
    }
    Kernels::new(alpha)?.step_response(lam, t, t_on)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ml(a: f64, b: f64, x: f64) -> f64 {
        MittagLeffler::new(a, b).unwrap().eval_real(x).unwrap()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(ml(0.5, 1.0, 0.0), 1.0);
        assert!((ml(1.0, 1.0, 1.0) - std::f64::consts::E).abs() < 1e-15);
        let v = ml(0.5, 1.0, -1.0);
        assert!((v - 0.427_583_576_155_807_0).abs() < 2e-15, "{v:e}");
    }

    #[test]
    fn exponential_limit_via_contour() {
        // α = 1 with β ≠ 1 goes through the contour; E_{1,3}(z) = (e^z − 1 − z)/z²
        for &x in &[-3.0, -20.0, 4.0] {
            let exact = (f64::exp(x) - 1.0 - x) / (x * x);
            let v = ml(1.0, 3.0, x);
            assert!((v - exact).abs() < 1e-13 * exact.abs(), "{x}: {v} vs {exact}");
        }
    }

    #[test]
    fn erfc_identity_on_contour_branch() {
        // E_{1/2,1}(−x) = exp(x²) erfc(x); check continuity across branches
        for &x in &[1.0 + 1e-12, 3.0, 10.0, 24.999, 25.0, 80.0] {
            let a = ml(0.5, 1.0, -x);
            // erfc(x) exp(x²) ≈ asymptotic 1/(x√π)(1 − 1/(2x²) + 3/(4x⁴) − ...)
            if x >= 25.0 {
                let mut s = 0.0;
                let mut term = 1.0;
                for k in 0..12 {
                    s += term;
                    term *= -((2 * k + 1) as f64) / (2.0 * x * x);
                }
                let r = s / (x * std::f64::consts::PI.sqrt());
                assert!((a - r).abs() < 1e-13 * r, "{x}");
            } else {
                assert!(a > 0.0 && a < 1.0);
            }
        }
    }

    #[test]
    fn complex_argument_series_and_contour() {
        let m = MittagLeffler::new(1.0, 1.0).unwrap();
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-2.0, 1.5), Complex64::new(1.0, -3.0)] {
            let v = m.eval(z).unwrap();
            assert!((v - z.exp()).norm() < 1e-12 * z.exp().norm(), "{z}");
        }
    }

    #[test]
    fn errors() {
        assert!(MittagLeffler::new(0.0, 1.0).is_err());
        assert!(MittagLeffler::new(2.5, 1.0).is_err());
        let m = MittagLeffler::new(0.5, 1.0).unwrap();
        assert!(m.eval_real(f64::NAN).is_err());
        assert!(kernel_e(0.5, 1.0, 0.0).is_err());
        assert!(step_response(0.5, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!((kernel_e(1.0, 2.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((kernel_e(0.5, 0.0, 4.0).unwrap() - 0.282_094_791_773_878_14).abs() < 1e-15);
        assert_eq!(step_response(0.5, 3.0, 0.5, 0.5).unwrap(), 0.0);
        assert!((step_response(1.0, 1.0, 1.0, 0.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
