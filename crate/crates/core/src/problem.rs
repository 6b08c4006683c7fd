//! Direct-problem description: coefficients, data, order and excitation.

use crate::error::{param, Result};
use crate::gamma::rgamma;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::mlf::Kernels;
use std::fmt;
use std::sync::Arc;

/// A spatial function on [0, 1].
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// Values at uniformly spaced nodes, linearly interpolated.
    Nodal(Vec<f64>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
            Profile::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Profile {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Function(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Function(f) => f(x),
            Profile::Nodal(v) => {
                let m = v.len() - 1;
                if m == 0 {
                    return v[0];
                }
                let s = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
                let i = (s.floor() as usize).min(m - 1);
                let th = s - i as f64;
                (1.0 - th) * v[i] + th * v[i + 1]
            }
        }
    }

    /// Nodal values on `grid`.
    pub fn sample(&self, grid: &SpaceGrid) -> Vec<f64> {
        match self {
            Profile::Nodal(v) if v.len() == grid.n_nodes() => v.clone(),
            _ => grid.nodes().into_iter().map(|x| self.eval(x)).collect(),
        }
    }

    /// True when the profile is a known constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

/// Neumann datum g(t) at x = 0.
#[derive(Clone, Debug, PartialEq)]
pub enum Excitation {
    Zero,
    /// amplitude · χ_{[t_on, ∞)}
    Step { t_on: f64, amplitude: f64 },
    /// Piecewise-linear interpolant of the samples, zero before the first
    /// instant and constant after the last.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl Excitation {
    pub fn unit_step(t_on: f64) -> Self {
        Excitation::Step { t_on, amplitude: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Excitation::Zero => Ok(()),
            Excitation::Step { t_on, amplitude } => {
                if !(*t_on >= 0.0) || !amplitude.is_finite() {
                    return param("step excitation needs t_on >= 0 and a finite amplitude");
                }
                Ok(())
            }
            Excitation::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return param("tabulated excitation needs matching non-empty arrays");
                }
                if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return param("tabulated excitation times must be non-negative and increasing");
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Excitation::Zero => true,
            Excitation::Step { amplitude, .. } => *amplitude == 0.0,
            Excitation::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Excitation::Zero => 0.0,
            Excitation::Step { t_on, amplitude } => {
                if t >= *t_on {
                    *amplitude
                } else {
                    0.0
                }
            }
            Excitation::Tabulated { times, values } => {
                if t < times[0] {
                    return 0.0;
                }
                let n = times.len();
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let i = times.partition_point(|s| *s <= t) - 1;
                let th = (t - times[i]) / (times[i + 1] - times[i]);
                (1.0 - th) * values[i] + th * values[i + 1]
            }
        }
    }

    /// Jumps (at, size) and slope changes (at, change) of the datum.
    pub(crate) fn pieces(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        match self {
            Excitation::Zero => (vec![], vec![]),
            Excitation::Step { t_on, amplitude } => (vec![(*t_on, *amplitude)], vec![]),
            Excitation::Tabulated { times, values } => {
                let n = times.len();
                let mut kinks = Vec::with_capacity(n);
                let mut prev = 0.0;
                for i in 0..n {
                    let slope = if i + 1 < n {
                        (values[i + 1] - values[i]) / (times[i + 1] - times[i])
                    } else {
                        0.0
                    };
                    if slope != prev {
                        kinks.push((times[i], slope - prev));
                    }
                    prev = slope;
                }
                (vec![(times[0], values[0])], kinks)
            }
        }
    }

    /// Riemann-Liouville integral (I^α g)(t), exact for the piecewise-linear datum.
    pub fn fractional_integral(&self, alpha: f64, t: f64) -> f64 {
        let (jumps, kinks) = self.pieces();
        let r1 = rgamma(1.0 + alpha);
        let r2 = rgamma(2.0 + alpha);
        let mut s = 0.0;
        for (at, size) in jumps {
            if t > at {
                s += size * (t - at).powf(alpha) * r1;
            }
        }
        for (at, change) in kinks {
            if t > at {
                s += change * (t - at).powf(1.0 + alpha) * r2;
            }
        }
        s
    }

    /// Boundary loads for the convolution-quadrature time stepper: the
    /// discrete fractional derivative of I^α g, which is exact for constants
    /// and removes the first-order defect a pointwise sample of a jump causes.
    pub fn cq_loads(&self, alpha: f64, tg: &TimeGrid, weights: &[f64]) -> Vec<f64> {
        let n = tg.n;
        if self.is_zero() {
            return vec![0.0; n + 1];
        }
        let big: Vec<f64> = (0..=n).map(|j| self.fractional_integral(alpha, tg.time(j))).collect();
        let scale = tg.dt().powf(-alpha);
        let first = big.iter().position(|v| *v != 0.0).unwrap_or(n + 1);
        (0..=n)
            .map(|j| {
                if j < first {
                    return 0.0;
                }
                let mut acc = 0.0;
                for k in 0..=(j - first) {
                    acc += weights[k] * big[j - k];
                }
                scale * acc
            })
            .collect()
    }

    /// Σ over jumps and kinks active before `t`: equals g(t) away from jump instants.
    pub fn quasi_static(&self, t: f64) -> f64 {
        let (jumps, kinks) = self.pieces();
        let mut s = 0.0;
        for (at, size) in jumps {
            if t > at {
                s += size;
            }
        }
        for (at, change) in kinks {
            if t > at {
                s += change * (t - at);
            }
        }
        s
    }

    /// Duhamel term minus its quasi-static part quasi_static(t)/λ; decays in λ.
    pub fn duhamel_transient(&self, kern: &Kernels, lam: f64, t: f64) -> Result<f64> {
        let (jumps, kinks) = self.pieces();
        let mut s = 0.0;
        for (at, size) in jumps {
            if t > at {
                s -= size * kern.relaxation(lam, t - at)? / lam;
            }
        }
        for (at, change) in kinks {
            if t > at {
                let tau = t - at;
                s -= change * tau * kern.ramp_relaxation(lam, tau)? / lam;
            }
        }
        Ok(s)
    }

    /// Duhamel term (g ⋆ t^{α−1}E_{α,α}(−λ t^α))(t), exact for the piecewise-linear datum.
    pub fn duhamel(&self, kern: &Kernels, lam: f64, t: f64) -> Result<f64> {
        let (jumps, kinks) = self.pieces();
        let mut s = 0.0;
        for (at, size) in jumps {
            if t > at {
                s += size * kern.step_response(lam, t, at)?;
            }
        }
        for (at, change) in kinks {
            if t > at {
                s += change * kern.ramp_response(lam, t - at)?;
            }
        }
        Ok(s)
    }
}

/// The full direct problem ∂_t^α u − (a u′)′ + q u = f on (0,1) × (0,T] with
/// −a u′(0,t) = g(t), u(1,t) = 0 and u(·,0) = u₀.
#[derive(Clone, Debug)]
pub struct ProblemSetup {
    pub a: Profile,
    pub q: Profile,
    pub u0: Profile,
    pub f: Profile,
    pub alpha: f64,
    pub t_final: f64,
    pub t_split: f64,
    pub g: Excitation,
}

impl ProblemSetup {
    pub fn new(alpha: f64) -> Self {
        Self {
            a: Profile::Constant(1.0),
            q: Profile::Constant(0.0),
            u0: Profile::Constant(0.0),
            f: Profile::Constant(0.0),
            alpha,
            t_final: 1.0,
            t_split: 0.5,
            g: Excitation::Zero,
        }
    }

    /// Checks the admissibility conditions on the nodes of `grid`.
    pub fn validate(&self, grid: &SpaceGrid) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return param(format!("order must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.t_split >= 0.0 && self.t_split < self.t_final) {
            return param(format!(
                "need 0 <= T1 < T, got T1 = {}, T = {}",
                self.t_split, self.t_final
            ));
        }
        if self.a.sample(grid).iter().any(|v| !(*v > 0.0)) {
            return param("diffusion coefficient must be positive");
        }
        if self.q.sample(grid).iter().any(|v| !(*v >= 0.0)) {
            return param("potential must be non-negative");
        }
        self.g.validate()
    }

    /// Same setup with the data u₀, f, g all replaced.
    pub fn with_data(&self, u0: Profile, f: Profile, g: Excitation) -> Self {
        Self { u0, f, g, ..self.clone() }
    }
}
