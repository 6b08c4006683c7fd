//! Conjugate-gradient recovery of the potential q from the reduced data on
//! [T₁, T] and of the initial value u₀ from the trace on [0, T₁].
//!
//! Each iteration uses one adjoint solve for the gradient, one linearized
//! solve for the step length γ = −⟨r, F′d⟩/‖F′d‖², and one forward solve at
//! the new iterate. The step is halved while the objective would increase.

use crate::error::{param, Error, Result};
use crate::fem::{l2_norm, mass, stiffness, Tridiag};
use crate::fem_cq::{CqSolver, FieldHistory};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::problem::{Excitation, ProblemSetup, Profile};
use crate::trace::Trace;
use serde::{Deserialize, Serialize};

/// Inner product used to turn the derivative into a gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    /// Plain L²(Ω) Riesz representative M⁻¹b.
    L2,
    /// (M + ℓ² K) g = b with g(1) = 0.
    Sobolev { ell2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgVariant {
    FletcherReeves,
    PolakRibiere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Run all iterations and report the iterate closest to the truth.
    Oracle,
    /// Stop once the residual norm falls below `residual_tol`.
    ResidualTol,
    MaxIters,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    pub max_iters: usize,
    pub projection: bool,
    pub stop_rule: StopRule,
    pub residual_tol: f64,
    pub variant: CgVariant,
    pub metric: Metric,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            projection: true,
            stop_rule: StopRule::Oracle,
            residual_tol: 0.0,
            variant: CgVariant::FletcherReeves,
            metric: Metric::Sobolev { ell2: 1.0 },
        }
    }
}

impl CgOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return param("max_iters must be at least 1");
        }
        if let Metric::Sobolev { ell2 } = self.metric {
            if !(ell2 >= 0.0) {
                return param("Sobolev weight must be non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    /// "potential" or "initial".
    pub unknown: String,
    pub alpha: f64,
    pub nodes: Vec<f64>,
    /// Iterate at k*.
    pub reconstruction: Vec<f64>,
    pub final_iterate: Vec<f64>,
    /// ‖x_k − truth‖_{L²(Ω)} for k = 0..=iterations (empty without truth).
    pub errors: Vec<f64>,
    /// ‖F(x_k) − data‖_{L²} on the observation interval.
    pub residuals: Vec<f64>,
    pub k_star: usize,
    pub e_star: Option<f64>,
    pub r_star: f64,
    pub iterations: usize,
    pub stop_reason: String,
    pub backtracks: usize,
    pub options: CgOptions,
}

impl InversionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `x,value` rows of the reconstruction.
    pub fn reconstruction_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "value"])?;
        for (x, v) in self.nodes.iter().zip(&self.reconstruction) {
            w.write_record([crate::trace::fmt17(*x), crate::trace::fmt17(*v)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Least-squares problem F(x) ≈ data handled by the CG driver.
trait Problem {
    type State;
    fn grid(&self) -> &SpaceGrid;
    /// Forward map; returns the state and the trace on the time grid.
    fn forward(&self, x: &[f64]) -> Result<(Self::State, Vec<f64>)>;
    /// Derivative functional for weighted residuals ω_j r_j.
    fn derivative(&self, x: &[f64], st: &Self::State, weighted: &[f64]) -> Result<Vec<f64>>;
    fn linearized(&self, x: &[f64], st: &Self::State, d: &[f64]) -> Result<Vec<f64>>;
    fn project(&self, _x: &mut [f64]) {}
    /// F is affine: F(x + γd) = F(x) + γ F′d, so no forward solve is needed
    /// after a step.
    fn affine(&self) -> bool {
        false
    }
    /// State at x without the trace; only used for affine problems.
    fn forward_state(&self, x: &[f64]) -> Result<Self::State> {
        Ok(self.forward(x)?.0)
    }
    /// Riesz map for the metric, b ↦ g.
    fn riesz(&self, b: &[f64]) -> Result<Vec<f64>>;
}

struct Misfit<'a> {
    data: &'a [f64],
    weights: Vec<f64>,
}

impl Misfit<'_> {
    fn residual(&self, trace: &[f64]) -> Vec<f64> {
        trace.iter().zip(self.data).zip(&self.weights).map(|((f, d), w)| if *w > 0.0 { f - d } else { 0.0 }).collect()
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run_cg<P: Problem>(
    p: &P,
    misfit: &Misfit,
    opts: &CgOptions,
    truth: Option<&[f64]>,
    unknown: &str,
    alpha: f64,
) -> Result<InversionReport> {
    opts.validate()?;
    if opts.stop_rule == StopRule::Oracle && truth.is_none() {
        return param("oracle stopping needs the true solution");
    }
    let grid = *p.grid();
    let n = grid.n_nodes();
    if let Some(t) = truth {
        if t.len() != n {
            return param("truth has the wrong number of nodal values");
        }
    }
    let err_of = |x: &[f64]| truth.map(|t| l2_norm(&grid, &x.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<_>>()));

    let mut x = vec![0.0; n];
    p.project(&mut x);
    let (mut st, mut trace) = p.forward(&x)?;
    let mut r = misfit.residual(&trace);
    let mut j_val = 0.5 * misfit.dot(&r, &r);
    let mut errors = Vec::new();
    let mut residuals = vec![(2.0 * j_val).sqrt()];
    if let Some(e) = err_of(&x) {
        errors.push(e);
    }
    let mut best = (0usize, errors.first().copied().unwrap_or(f64::INFINITY), x.clone());
    let mut d_prev: Option<Vec<f64>> = None;
    let mut g_prev: Option<(Vec<f64>, f64)> = None;
    let mut backtracks = 0;
    let mut stop_reason = "max_iters".to_string();
    let mut iterations = 0;

    for k in 0..opts.max_iters {
        if opts.stop_rule == StopRule::ResidualTol && residuals[k] <= opts.residual_tol {
            stop_reason = "residual_tol".into();
            break;
        }
        if j_val == 0.0 {
            stop_reason = "zero_residual".into();
            break;
        }
        let weighted: Vec<f64> = r.iter().zip(&misfit.weights).map(|(r, w)| r * w).collect();
        let b = p.derivative(&x, &st, &weighted)?;
        let g = p.riesz(&b)?;
        let gnorm2 = dot(&b, &g);
        if !(gnorm2 > 0.0) {
            stop_reason = "zero_gradient".into();
            break;
        }
        let beta = match (&d_prev, &g_prev) {
            (Some(_), Some((gp, gp2))) => match opts.variant {
                CgVariant::FletcherReeves => gnorm2 / gp2,
                CgVariant::PolakRibiere => {
                    let diff: Vec<f64> = g.iter().zip(gp).map(|(a, c)| a - c).collect();
                    (dot(&b, &diff) / gp2).max(0.0)
                }
            },
            _ => 0.0,
        };
        let mut d: Vec<f64> = match &d_prev {
            Some(dp) if beta != 0.0 => g.iter().zip(dp).map(|(gi, di)| -gi + beta * di).collect(),
            _ => g.iter().map(|v| -v).collect(),
        };
        if dot(&b, &d) >= 0.0 {
            d = g.iter().map(|v| -v).collect();
        }
        let mut accepted = None;
        let mut backtracked = false;
        for steepest in [false, true] {
            if steepest {
                if d.iter().zip(&g).all(|(di, gi)| *di == -gi) {
                    break;
                }
                d = g.iter().map(|v| -v).collect();
            }
            let s = p.linearized(&x, &st, &d)?;
            let ss = misfit.dot(&s, &s);
            if !(ss > 0.0) {
                continue;
            }
            let mut gamma = -misfit.dot(&r, &s) / ss;
            for _ in 0..=30 {
                let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + gamma * di).collect();
                if opts.projection {
                    p.project(&mut xn);
                }
                let (stn, trn) = if p.affine() && !opts.projection {
                    let trn = trace.iter().zip(&s).map(|(f, sj)| f + gamma * sj).collect();
                    (p.forward_state(&xn)?, trn)
                } else {
                    p.forward(&xn)?
                };
                let rn = misfit.residual(&trn);
                let jn = 0.5 * misfit.dot(&rn, &rn);
                if jn < j_val {
                    accepted = Some((xn, stn, trn, rn, jn));
                    break;
                }
                gamma *= 0.5;
                backtracked = true;
                backtracks += 1;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((xn, stn, trn, rn, jn)) = accepted else {
            stop_reason = "no_descent".into();
            break;
        };
        x = xn;
        st = stn;
        trace = trn;
        r = rn;
        j_val = jn;
        iterations = k + 1;
        residuals.push((2.0 * j_val).sqrt());
        if let Some(e) = err_of(&x) {
            errors.push(e);
            if e < best.1 {
                best = (iterations, e, x.clone());
            }
        }
        if backtracked {
            d_prev = None;
            g_prev = None;
        } else {
            d_prev = Some(d);
            g_prev = Some((g, gnorm2));
        }
    }
    if opts.stop_rule == StopRule::ResidualTol && stop_reason == "max_iters" && residuals[iterations] <= opts.residual_tol {
        stop_reason = "residual_tol".into();
    }
    let (k_star, reconstruction) =
        if opts.stop_rule == StopRule::Oracle { (best.0, best.2) } else { (iterations, x.clone()) };
    Ok(InversionReport {
        unknown: unknown.into(),
        alpha,
        nodes: grid.nodes(),
        reconstruction,
        final_iterate: x,
        e_star: errors.get(k_star).copied(),
        r_star: residuals[k_star],
        errors,
        residuals,
        k_star,
        iterations,
        stop_reason,
        backtracks,
        options: *opts,
    })
}

/// Riesz map for nodal functionals on the full grid; the Sobolev form pins x = 1.
fn riesz_map(grid: &SpaceGrid, metric: Metric, b: &[f64], pin_right: bool) -> Result<Vec<f64>> {
    let m = grid.m;
    let op: Tridiag = match metric {
        Metric::L2 => mass(grid),
        Metric::Sobolev { ell2 } => mass(grid).add_scaled(&stiffness(grid, &vec![1.0; m + 1])?, ell2),
    };
    if pin_right || matches!(metric, Metric::Sobolev { .. }) {
        let mut g = op.drop_last().solve(&b[..m])?;
        g.push(0.0);
        Ok(g)
    } else {
        op.solve(b)
    }
}

/// Recovers a uniform time grid from trace sample times.
pub fn time_grid_of(tr: &Trace) -> Result<TimeGrid> {
    if tr.len() < 3 || tr.times[0] != 0.0 {
        return param("data must be sampled uniformly starting at t = 0");
    }
    let n = tr.len() - 1;
    let tg = TimeGrid::new(n, tr.times[n])?;
    let dt = tg.dt();
    if tr.times.iter().enumerate().any(|(j, t)| (t - j as f64 * dt).abs() > 1e-9 * dt) {
        return param("data must be sampled uniformly");
    }
    Ok(tg)
}

struct PotentialProblem<'a> {
    grid: SpaceGrid,
    tg: TimeGrid,
    alpha: f64,
    a: Vec<f64>,
    setup: &'a ProblemSetup,
    metric: Metric,
}

impl Problem for PotentialProblem<'_> {
    type State = (CqSolver, FieldHistory);

    fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    fn forward(&self, q: &[f64]) -> Result<(Self::State, Vec<f64>)> {
        let solver = CqSolver::new(self.grid, self.tg, self.alpha, &self.a, q)?;
        let u = solver.forward(self.setup)?;
        let tr = u.trace().values;
        Ok(((solver, u), tr))
    }

    fn derivative(&self, _q: &[f64], st: &Self::State, weighted: &[f64]) -> Result<Vec<f64>> {
        let v = st.0.adjoint(weighted)?;
        st.0.gradient_q_functional(&st.1, &v)
    }

    fn linearized(&self, _q: &[f64], st: &Self::State, d: &[f64]) -> Result<Vec<f64>> {
        Ok(st.0.sensitivity(&st.1, d)?.values)
    }

    fn project(&self, q: &mut [f64]) {
        q.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    fn riesz(&self, b: &[f64]) -> Result<Vec<f64>> {
        riesz_map(&self.grid, self.metric, b, false)
    }
}

/// Setup for the reduced problem: the template's a, g, T₁, T with u₀ = f = 0.
fn reduced_setup(template: &ProblemSetup, alpha: f64) -> ProblemSetup {
    let mut s = template.with_data(Profile::Constant(0.0), Profile::Constant(0.0), template.g.clone());
    s.alpha = alpha;
    s
}

fn potential_problem<'a>(
    setup: &'a ProblemSetup,
    grid: SpaceGrid,
    tg: TimeGrid,
    metric: Metric,
) -> Result<PotentialProblem<'a>> {
    setup.validate(&grid)?;
    Ok(PotentialProblem { grid, tg, alpha: setup.alpha, a: setup.a.sample(&grid), setup, metric })
}

fn split_misfit<'a>(data: &'a Trace, tg: &TimeGrid, t_lo: f64, t_hi: f64) -> Misfit<'a> {
    let j0 = tg.index_of(t_lo);
    let j1 = tg.index_of(t_hi);
    Misfit { data: &data.values, weights: tg.trapezoid_weights(j0, j1) }
}

/// J(q) = ½‖F(q) − h̄‖²_{L²(T₁,T)} with the trapezoid rule in time.
pub fn objective_q(q: &[f64], template: &ProblemSetup, grid: SpaceGrid, hbar: &Trace) -> Result<f64> {
    let tg = time_grid_of(hbar)?;
    let setup = reduced_setup(template, template.alpha);
    let p = potential_problem(&setup, grid, tg, Metric::L2)?;
    let mis = split_misfit(hbar, &tg, setup.t_split, tg.t_final);
    let (_, tr) = p.forward(q)?;
    let r = mis.residual(&tr);
    Ok(0.5 * mis.dot(&r, &r))
}

/// Derivative functional b of objective_q: ⟨J′(q), δq⟩ = bᵀδq for nodal δq.
pub fn objective_q_derivative(q: &[f64], template: &ProblemSetup, grid: SpaceGrid, hbar: &Trace) -> Result<Vec<f64>> {
    let tg = time_grid_of(hbar)?;
    let setup = reduced_setup(template, template.alpha);
    let p = potential_problem(&setup, grid, tg, Metric::L2)?;
    let mis = split_misfit(hbar, &tg, setup.t_split, tg.t_final);
    let (st, tr) = p.forward(q)?;
    let w: Vec<f64> = mis.residual(&tr).iter().zip(&mis.weights).map(|(r, w)| r * w).collect();
    p.derivative(q, &st, &w)
}

/// CG recovery of q from h̄ (zero on [0, T₁]); `alpha` is the order used in the inversion.
pub fn recover_potential(
    hbar: &Trace,
    alpha: f64,
    template: &ProblemSetup,
    grid: SpaceGrid,
    opts: &CgOptions,
    q_truth: Option<&[f64]>,
) -> Result<InversionReport> {
    let tg = time_grid_of(hbar)?;
    let setup = reduced_setup(template, alpha);
    if let Excitation::Zero = setup.g {
        return param("potential recovery needs a boundary excitation");
    }
    let p = potential_problem(&setup, grid, tg, opts.metric)?;
    let mis = split_misfit(hbar, &tg, setup.t_split, tg.t_final);
    run_cg(&p, &mis, opts, q_truth, "potential", alpha)
}

struct InitialProblem {
    grid: SpaceGrid,
    solver: CqSolver,
    metric: Metric,
}

impl Problem for InitialProblem {
    type State = ();

    fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    fn forward(&self, u0: &[f64]) -> Result<((), Vec<f64>)> {
        Ok(((), self.solver.forward_initial(u0)?.trace().values))
    }

    fn derivative(&self, _u0: &[f64], _st: &(), weighted: &[f64]) -> Result<Vec<f64>> {
        let v = self.solver.adjoint(weighted)?;
        self.solver.gradient_u0_functional(&v, weighted[0])
    }

    fn linearized(&self, _u0: &[f64], _st: &(), d: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solver.forward_initial(d)?.trace().values)
    }

    fn affine(&self) -> bool {
        true
    }

    fn forward_state(&self, _u0: &[f64]) -> Result<()> {
        Ok(())
    }

    fn riesz(&self, b: &[f64]) -> Result<Vec<f64>> {
        riesz_map(&self.grid, self.metric, b, true)
    }
}

/// CG recovery of u₀ from the trace on [0, T₁] with the potential fixed to `q_hat`
/// (f ≡ 0, no excitation on [0, T₁]).
pub fn recover_initial(
    h: &Trace,
    q_hat: &[f64],
    alpha: f64,
    template: &ProblemSetup,
    grid: SpaceGrid,
    opts: &CgOptions,
    u0_truth: Option<&[f64]>,
) -> Result<InversionReport> {
    let tg = time_grid_of(h)?;
    let solver = initial_solver(q_hat, alpha, template, grid, tg)?;
    let p = InitialProblem { grid, solver, metric: opts.metric };
    let mis = initial_misfit(h, &tg);
    let mut o = *opts;
    o.projection = false;
    run_cg(&p, &mis, &o, u0_truth, "initial", alpha)
}

/// Trapezoid weights on [0, T₁] without the t = 0 sample: there the model
/// trace is u₀(0) itself, a point functional with no L² gradient.
fn initial_misfit<'a>(h: &'a Trace, tg: &TimeGrid) -> Misfit<'a> {
    let mut weights = tg.trapezoid_weights(0, tg.n);
    weights[0] = 0.0;
    Misfit { data: &h.values, weights }
}

fn initial_solver(q: &[f64], alpha: f64, template: &ProblemSetup, grid: SpaceGrid, tg: TimeGrid) -> Result<CqSolver> {
    if q.len() != grid.n_nodes() {
        return param("potential has the wrong number of nodal values");
    }
    CqSolver::new(grid, tg, alpha, &template.a.sample(&grid), q)
}

/// J(u₀) = ½‖F(u₀) − h‖²_{L²(0,T₁)} and its derivative functional.
pub fn objective_u0(
    u0: &[f64],
    h: &Trace,
    q: &[f64],
    alpha: f64,
    template: &ProblemSetup,
    grid: SpaceGrid,
) -> Result<(f64, Vec<f64>)> {
    let tg = time_grid_of(h)?;
    let p = InitialProblem { grid, solver: initial_solver(q, alpha, template, grid, tg)?, metric: Metric::L2 };
    let mis = initial_misfit(h, &tg);
    let (_, tr) = p.forward(u0)?;
    let r = mis.residual(&tr);
    let w: Vec<f64> = r.iter().zip(&mis.weights).map(|(r, w)| r * w).collect();
    Ok((0.5 * mis.dot(&r, &r), p.derivative(u0, &(), &w)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> ProblemSetup {
        let mut s = ProblemSetup::new(0.5);
        s.g = Excitation::unit_step(0.5);
        s
    }

    #[test]
    fn zero_data_gives_zero_potential() {
        let grid = SpaceGrid::new(20).unwrap();
        let tg = TimeGrid::new(40, 1.0).unwrap();
        // F(0) is not zero, so use data generated at q = 0
        let s = template();
        let u = CqSolver::from_setup(&s, grid, tg).unwrap().forward(&s).unwrap();
        let r = recover_potential(&u.trace(), 0.5, &s, grid, &CgOptions { stop_rule: StopRule::MaxIters, ..Default::default() }, None)
            .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop_reason, "zero_residual");
        assert!(r.reconstruction.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn oracle_needs_truth() {
        let grid = SpaceGrid::new(10).unwrap();
        let h = Trace::new((0..=20).map(|j| j as f64 / 20.0).collect(), vec![0.0; 21]).unwrap();
        assert!(recover_potential(&h, 0.5, &template(), grid, &CgOptions::default(), None).is_err());
    }

    #[test]
    fn zero_trace_gives_zero_initial() {
        let grid = SpaceGrid::new(10).unwrap();
        let h = Trace::new((0..=20).map(|j| j as f64 / 40.0).collect(), vec![0.0; 21]).unwrap();
        let opts = CgOptions { stop_rule: StopRule::MaxIters, ..Default::default() };
        let r = recover_initial(&h, &[0.0; 11], 0.5, &template(), grid, &opts, None).unwrap();
        assert!(r.reconstruction.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_uniform_data_rejected() {
        let h = Trace::new(vec![0.0, 0.1, 0.3, 0.4], vec![0.0; 4]).unwrap();
        assert!(time_grid_of(&h).is_err());
    }

    #[test]
    fn u0_derivative_matches_central_difference() {
        let grid = SpaceGrid::new(20).unwrap();
        let tg = TimeGrid::new(50, 0.5).unwrap();
        let q: Vec<f64> = grid.nodes().iter().map(|x| x * (1.0 - x)).collect();
        let h = Trace::new(tg.times(), tg.times().iter().map(|t| 1.0 - t).collect()).unwrap();
        let u0: Vec<f64> = grid.nodes().iter().map(|x| (1.0 - x) * (1.0 + x)).collect();
        let d: Vec<f64> = grid.nodes().iter().map(|x| (2.0 * x).sin() * (1.0 - x)).collect();
        let s = template();
        let (_, b) = objective_u0(&u0, &h, &q, 0.5, &s, grid).unwrap();
        let eps = 1e-4;
        let shift = |e: f64| u0.iter().zip(&d).map(|(a, c)| a + e * c).collect::<Vec<_>>();
        let jp = objective_u0(&shift(eps), &h, &q, 0.5, &s, grid).unwrap().0;
        let jm = objective_u0(&shift(-eps), &h, &q, 0.5, &s, grid).unwrap().0;
        let fd = (jp - jm) / (2.0 * eps);
        let an: f64 = b.iter().zip(&d).map(|(a, c)| a * c).sum();
        assert!((fd - an).abs() < 1e-8 * fd.abs(), "{fd} {an}");
    }
}
