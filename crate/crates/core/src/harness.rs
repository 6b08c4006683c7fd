//! Reproduction driver: the two benchmark cases, data generation, the
//! two-stage pipeline per (case, α) cell, and table and figure output.

use crate::continuation::{aaa_fit, eval_rational, reduced_data, AaaOptions, RationalApproximant};
use crate::error::{param, Error, Result};
use crate::fem_cq::solve_forward;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::inversion::{recover_initial, recover_potential, CgOptions, InversionReport};
use crate::order_fit::{geometric_samples, order_window_scan, table_csv, OrderFitResult};
use crate::problem::{Excitation, ProblemSetup, Profile};
use crate::spectral::{solve_eigen, spectral_coefficients, spectral_increment, spectral_trace};
use crate::trace::{fmt17, Trace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Spectral,
    Fem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m_inverse: usize,
    pub n_inverse: usize,
    /// Eigen grid for spectral data, FEM grid for FEM data.
    pub m_data: usize,
    /// Time steps of the FEM data path (a multiple of n_inverse).
    pub n_data: usize,
    pub alphas: Vec<f64>,
    pub delta_alphas: Vec<f64>,
    pub k_modes: usize,
    pub data_source: DataSource,
    /// Order-fit windows, descending.
    pub order_windows: Vec<f64>,
    pub aaa_tol: f64,
    pub aaa_max_degree: usize,
    pub cg_q: CgOptions,
    pub cg_u0: CgOptions,
    /// Worker threads for independent cells; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m_inverse: 200,
            n_inverse: 2000,
            m_data: 400,
            n_data: 4000,
            alphas: vec![0.3, 0.5, 0.7, 0.9],
            delta_alphas: vec![0.0, 0.001, 0.005],
            k_modes: 50,
            data_source: DataSource::Spectral,
            order_windows: (3..=14).map(|k| 10f64.powi(-k)).collect(),
            aaa_tol: crate::continuation::DEFAULT_TOL,
            aaa_max_degree: crate::continuation::DEFAULT_MAX_DEGREE,
            cg_q: CgOptions::default(),
            cg_u0: CgOptions { projection: false, ..CgOptions::default() },
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_data > self.m_inverse || self.n_data > self.n_inverse) {
            return param("data must come from a finer mesh than the inversion (m_data or n_data larger)");
        }
        if self.data_source == DataSource::Fem && self.n_data % self.n_inverse != 0 {
            return param("n_data must be a multiple of n_inverse for FEM data");
        }
        if self.n_inverse % 2 != 0 {
            return param("n_inverse must be even so that T1 = T/2 is a grid point");
        }
        if 4 * self.k_modes > self.m_data {
            return param("k_modes must not exceed m_data / 4");
        }
        for a in &self.alphas {
            for d in &self.delta_alphas {
                if !(*a > 0.0 && a + d > 0.0 && a + d <= 1.0 && *a < 1.0) {
                    return param(format!("order {a} with perturbation {d} leaves (0, 1]"));
                }
            }
        }
        if self.order_windows.windows(2).any(|w| !(w[1] < w[0])) {
            return param("order windows must be descending");
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Inversion time grid on [0, 1].
    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n_inverse, 1.0)
    }
}

/// Benchmark case: a ≡ 1, f ≡ 0, g = χ_{[T₁,T]}, T = 1, T₁ = 0.5.
#[derive(Clone, Debug)]
pub struct CaseSpec {
    pub id: String,
    pub q: Profile,
    pub u0: Profile,
    pub t_final: f64,
    pub t_split: f64,
}

impl CaseSpec {
    /// q† = x(1 − x), u₀ = x²(1 − x) + cos(πx/2).
    pub fn case_i() -> Self {
        Self {
            id: "i".into(),
            q: Profile::function(|x| x * (1.0 - x)),
            u0: Profile::function(|x| x * x * (1.0 - x) + (0.5 * PI * x).cos()),
            t_final: 1.0,
            t_split: 0.5,
        }
    }

    /// q† = min(x, 1 − x), u₀ = cos(3πx/2).
    pub fn case_ii() -> Self {
        Self {
            id: "ii".into(),
            q: Profile::function(|x| x.min(1.0 - x)),
            u0: Profile::function(|x| (1.5 * PI * x).cos()),
            t_final: 1.0,
            t_split: 0.5,
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "i" | "1" => Ok(Self::case_i()),
            "ii" | "2" => Ok(Self::case_ii()),
            _ => param(format!("unknown case {id:?} (expected i or ii)")),
        }
    }

    pub fn setup(&self, alpha: f64) -> ProblemSetup {
        let mut s = ProblemSetup::new(alpha);
        s.q = self.q.clone();
        s.u0 = self.u0.clone();
        s.t_final = self.t_final;
        s.t_split = self.t_split;
        s.g = Excitation::unit_step(self.t_split);
        s
    }

    /// Warning text when u₀ does not vanish at x = 1.
    pub fn compatibility_warning(&self) -> Option<String> {
        let v = self.u0.eval(1.0);
        (v.abs() >= 1e-12).then(|| format!("case {}: u0(1) = {v:e} violates u(1, t) = 0", self.id))
    }
}

/// Exact data for one (case, α).
#[derive(Clone, Debug)]
pub struct CaseData {
    /// Observed trace on the inversion time grid over [0, T].
    pub h: Trace,
    /// h(t) − h(0) at geometric samples near t = 0.
    pub h_small: Trace,
    /// Trace without excitation (g ≡ 0), the continuation target.
    pub h_star: Trace,
    /// Trace of the excitation alone (u₀ = f = 0).
    pub h_excitation: Trace,
}

pub fn generate_data(case: &CaseSpec, alpha: f64, cfg: &RunConfig) -> Result<CaseData> {
    let setup = case.setup(alpha);
    let tg = cfg.time_grid()?;
    let times = tg.times();
    let no_g = setup.with_data(setup.u0.clone(), setup.f.clone(), Excitation::Zero);
    let g_only = setup.with_data(Profile::Constant(0.0), Profile::Constant(0.0), setup.g.clone());
    let eg = SpaceGrid::new(cfg.m_data)?;
    let eig = solve_eigen(&setup, &eg, cfg.k_modes)?;
    let sd = spectral_coefficients(&setup, &eig);
    let h_small = spectral_increment(&no_g, &eig, &sd, &geometric_samples(&cfg.order_windows))?;
    let (h, h_star, h_excitation) = match cfg.data_source {
        DataSource::Spectral => {
            let sd_g = spectral_coefficients(&g_only, &eig);
            (
                spectral_trace(&setup, &eig, &sd, &times)?.trace,
                spectral_trace(&no_g, &eig, &sd, &times)?.trace,
                spectral_trace(&g_only, &eig, &sd_g, &times)?.trace,
            )
        }
        DataSource::Fem => {
            let ftg = TimeGrid::new(cfg.n_data, case.t_final)?;
            let stride = cfg.n_data / cfg.n_inverse;
            let run = |s: &ProblemSetup| -> Result<Trace> { Ok(solve_forward(s, eg, ftg)?.trace().subsample(stride)) };
            (run(&setup)?, run(&no_g)?, run(&g_only)?)
        }
    };
    Ok(CaseData { h, h_small, h_star, h_excitation })
}

/// Fit on [0, T₁] and the reduced data.
pub fn continuation(case: &CaseSpec, data: &CaseData, cfg: &RunConfig) -> Result<(RationalApproximant, Trace)> {
    let opts = AaaOptions { tol: cfg.aaa_tol, max_degree: cfg.aaa_max_degree, guard_end: 1.05 * case.t_final };
    let hr = aaa_fit(&data.h.window(0.0, case.t_split), &opts)?;
    let hbar = reduced_data(&data.h, &hr, case.t_split)?;
    Ok((hr, hbar))
}

#[derive(Clone, Debug, Serialize)]
pub struct QRun {
    pub alpha: f64,
    pub delta_alpha: f64,
    pub degree: usize,
    pub report: InversionReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct U0Run {
    pub alpha: f64,
    pub report: InversionReport,
}

pub fn run_q_cell(case: &CaseSpec, alpha: f64, delta_alpha: f64, cfg: &RunConfig) -> Result<QRun> {
    let data = generate_data(case, alpha, cfg)?;
    let (hr, hbar) = continuation(case, &data, cfg)?;
    let grid = SpaceGrid::new(cfg.m_inverse)?;
    let truth = case.q.sample(&grid);
    let report = recover_potential(&hbar, alpha + delta_alpha, &case.setup(alpha), grid, &cfg.cg_q, Some(&truth))?;
    Ok(QRun { alpha, delta_alpha, degree: hr.degree, report })
}

/// u₀ from the trace on [0, T₁] with the potential after the last CG iteration.
pub fn run_u0_cell(case: &CaseSpec, alpha: f64, q_hat: &[f64], cfg: &RunConfig) -> Result<U0Run> {
    let data = generate_data(case, alpha, cfg)?;
    let grid = SpaceGrid::new(cfg.m_inverse)?;
    let truth = case.u0.sample(&grid);
    let h = data.h.window(0.0, case.t_split);
    let report = recover_initial(&h, q_hat, alpha, &case.setup(alpha), grid, &cfg.cg_u0, Some(&truth))?;
    Ok(U0Run { alpha, report })
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if cfg.threads > 0 {
        b = b.num_threads(cfg.threads);
    }
    b.build().map_err(|e| Error::Parameter(format!("thread pool: {e}")))
}

/// Outcome of one table cell; failures are kept as messages.
pub type Cell<T> = std::result::Result<T, String>;

pub struct Table1 {
    pub csv: String,
    pub cells: Vec<Cell<Vec<OrderFitResult>>>,
}

pub fn run_table1(cfg: &RunConfig, case: &CaseSpec) -> Result<Table1> {
    cfg.validate()?;
    let cells: Vec<Cell<Vec<OrderFitResult>>> = pool(cfg)?.install(|| {
        cfg.alphas
            .par_iter()
            .map(|&a| {
                generate_data(case, a, cfg)
                    .and_then(|d| order_window_scan(&d.h_small, &cfg.order_windows))
                    .map_err(|e| e.to_string())
            })
            .collect()
    });
    let headers: Vec<String> = cfg.alphas.iter().map(|a| format!("alpha_{a}")).collect();
    let columns: Vec<Vec<Option<f64>>> = cells
        .iter()
        .map(|c| match c {
            Ok(rows) => rows.iter().map(|r| Some(r.alpha_hat)).collect(),
            Err(_) => vec![None; cfg.order_windows.len()],
        })
        .collect();
    Ok(Table1 { csv: table_csv(&cfg.order_windows, &headers, &columns), cells })
}

pub struct Table2 {
    pub csv: String,
    /// Row-major over (α, δα).
    pub cells: Vec<Cell<QRun>>,
}

pub fn run_table2(cfg: &RunConfig, case: &CaseSpec) -> Result<Table2> {
    cfg.validate()?;
    let jobs: Vec<(f64, f64)> =
        cfg.alphas.iter().flat_map(|a| cfg.delta_alphas.iter().map(move |d| (*a, *d))).collect();
    let cells: Vec<Cell<QRun>> = pool(cfg)?
        .install(|| jobs.par_iter().map(|(a, d)| run_q_cell(case, *a, *d, cfg).map_err(|e| e.to_string())).collect());
    let mut csv = String::from("alpha");
    for d in &cfg.delta_alphas {
        write!(csv, ",e_star_da{d},k_star_da{d},r_star_da{d}").expect("string write");
    }
    csv.push('\n');
    for (i, a) in cfg.alphas.iter().enumerate() {
        write!(csv, "{a}").expect("string write");
        for j in 0..cfg.delta_alphas.len() {
            match &cells[i * cfg.delta_alphas.len() + j] {
                Ok(r) => write!(
                    csv,
                    ",{:.6e},{},{:.6e}",
                    r.report.e_star.unwrap_or(f64::NAN),
                    r.report.k_star,
                    r.report.r_star
                )
                .expect("string write"),
                Err(_) => csv.push_str(",error,error,error"),
            }
        }
        csv.push('\n');
    }
    Ok(Table2 { csv, cells })
}

pub struct Table3 {
    pub csv: String,
    pub cells: Vec<Cell<U0Run>>,
}

/// Needs the δα = 0 potential runs; runs them when `q_runs` is absent.
pub fn run_table3(cfg: &RunConfig, case: &CaseSpec, q_runs: Option<&[Cell<QRun>]>) -> Result<Table3> {
    cfg.validate()?;
    let own;
    let q_runs = match q_runs {
        Some(q) => q,
        None => {
            let c = RunConfig { delta_alphas: vec![0.0], ..cfg.clone() };
            own = run_table2(&c, case)?.cells;
            &own[..]
        }
    };
    let cells: Vec<Cell<U0Run>> = pool(cfg)?.install(|| {
        cfg.alphas
            .par_iter()
            .map(|&a| {
                let q = q_runs
                    .iter()
                    .filter_map(|c| c.as_ref().ok())
                    .find(|r| r.alpha == a && r.delta_alpha == 0.0)
                    .ok_or_else(|| format!("no potential reconstruction for alpha = {a}"))?;
                run_u0_cell(case, a, &q.report.final_iterate, cfg).map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut csv = String::from("alpha,e_star,k_star,r_star\n");
    for (a, c) in cfg.alphas.iter().zip(&cells) {
        match c {
            Ok(r) => writeln!(
                csv,
                "{a},{:.6e},{},{:.6e}",
                r.report.e_star.unwrap_or(f64::NAN),
                r.report.k_star,
                r.report.r_star
            )
            .expect("string write"),
            Err(_) => writeln!(csv, "{a},error,error,error").expect("string write"),
        }
    }
    Ok(Table3 { csv, cells })
}

/// Plot-ready continuation data on [T₁, T]: t, h*, h_r, |h* − h_r|.
pub fn continuation_figure(case: &CaseSpec, alpha: f64, cfg: &RunConfig) -> Result<String> {
    let data = generate_data(case, alpha, cfg)?;
    let (hr, _) = continuation(case, &data, cfg)?;
    let mut csv = String::from("t,h_star,h_r,error\n");
    for (t, v) in data.h_star.times.iter().zip(&data.h_star.values) {
        if *t < case.t_split {
            continue;
        }
        let r = eval_rational(&hr, *t)?;
        writeln!(csv, "{},{},{},{}", fmt17(*t), fmt17(*v), fmt17(r), fmt17((v - r).abs())).expect("string write");
    }
    Ok(csv)
}

/// k, e_k, r_k rows.
pub fn history_csv(rep: &InversionReport) -> String {
    let mut csv = String::from("k,error,residual\n");
    for (k, r) in rep.residuals.iter().enumerate() {
        let e = rep.errors.get(k).map(|e| fmt17(*e)).unwrap_or_default();
        writeln!(csv, "{k},{e},{}", fmt17(*r)).expect("string write");
    }
    csv
}

#[derive(Serialize)]
struct Bundle<'a, T: Serialize> {
    config: &'a RunConfig,
    case: &'a str,
    result: T,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn alpha_dir(out: &Path, case: &CaseSpec, alpha: f64) -> std::path::PathBuf {
    out.join(&case.id).join(format!("{alpha}"))
}

/// Runs the requested tables for one case and writes everything below
/// `out/<case>/`. Returns the number of failed cells.
pub fn reproduce(cfg: &RunConfig, case: &CaseSpec, tables: &[u32], out: &Path) -> Result<usize> {
    cfg.validate()?;
    if tables.iter().any(|t| !(1..=3).contains(t)) {
        return param("tables are numbered 1 to 3");
    }
    let mut failures = 0;
    let base = out.join(&case.id);
    write(&base.join("config.json"), &cfg.to_json()?)?;
    if let Some(w) = case.compatibility_warning() {
        write(&base.join("warnings.txt"), &(w + "\n"))?;
    }
    for &a in &cfg.alphas {
        let data = generate_data(case, a, cfg)?;
        let dir = alpha_dir(out, case, a);
        write(&dir.join("trace.csv"), &data.h.to_csv_string()?)?;
        write(&dir.join("trace_small.csv"), &data.h_small.to_csv_string()?)?;
    }
    if tables.contains(&1) {
        let t1 = run_table1(cfg, case)?;
        write(&base.join("table1.csv"), &t1.csv)?;
        for (a, c) in cfg.alphas.iter().zip(&t1.cells) {
            let dir = alpha_dir(out, case, *a);
            match c {
                Ok(rows) => write(
                    &dir.join("order_fit.json"),
                    &serde_json::to_string_pretty(&Bundle { config: cfg, case: &case.id, result: rows })?,
                )?,
                Err(e) => {
                    failures += 1;
                    write(&dir.join("order_fit.error.txt"), &(e.clone() + "\n"))?;
                }
            }
        }
    }
    let mut q_cells = None;
    if tables.contains(&2) || tables.contains(&3) {
        let c2 = if tables.contains(&2) { cfg.clone() } else { RunConfig { delta_alphas: vec![0.0], ..cfg.clone() } };
        let t2 = run_table2(&c2, case)?;
        if tables.contains(&2) {
            write(&base.join("table2.csv"), &t2.csv)?;
        }
        for c in &t2.cells {
            match c {
                Ok(r) => {
                    let dir = alpha_dir(out, case, r.alpha);
                    let tag = format!("q_da{}", r.delta_alpha);
                    write(
                        &dir.join(format!("report_{tag}.json")),
                        &serde_json::to_string_pretty(&Bundle { config: cfg, case: &case.id, result: r })?,
                    )?;
                    write(&dir.join(format!("recon_{tag}.csv")), &r.report.reconstruction_csv()?)?;
                    write(&dir.join(format!("history_{tag}.csv")), &history_csv(&r.report))?;
                }
                Err(e) => {
                    failures += 1;
                    write(&base.join("errors.txt"), &(e.clone() + "\n"))?;
                }
            }
        }
        for &a in &cfg.alphas {
            match continuation_figure(case, a, cfg) {
                Ok(csv) => write(&alpha_dir(out, case, a).join("continuation.csv"), &csv)?,
                Err(e) => write(&alpha_dir(out, case, a).join("continuation.error.txt"), &(e.to_string() + "\n"))?,
            }
        }
        q_cells = Some(t2.cells);
    }
    if tables.contains(&3) {
        let t3 = run_table3(cfg, case, q_cells.as_deref())?;
        write(&base.join("table3.csv"), &t3.csv)?;
        for (a, c) in cfg.alphas.iter().zip(&t3.cells) {
            let dir = alpha_dir(out, case, *a);
            match c {
                Ok(r) => {
                    write(
                        &dir.join("report_u0.json"),
                        &serde_json::to_string_pretty(&Bundle { config: cfg, case: &case.id, result: r })?,
                    )?;
                    write(&dir.join("recon_u0.csv"), &r.report.reconstruction_csv()?)?;
                    write(&dir.join("history_u0.csv"), &history_csv(&r.report))?;
                }
                Err(e) => {
                    failures += 1;
                    write(&dir.join("u0.error.txt"), &(e.clone() + "\n"))?;
                }
            }
        }
    }
    Ok(failures)
}

/// Two data sets with the same boundary trace 1 + E_{α,1}(−(9π²/4)t^α):
/// (a) q ≡ 0 and (b) q ≡ 2π², both with g ≡ 0.
///
/// For (b), λ₁ = π²/4 + q must equal 9π²/4 so that f = (9π²/4)cos(πx/2)
/// gives the steady state cos(πx/2); q ≡ 5π²/4 would give λ₁ = 3π²/2 and the
/// trace 3/2 + E_{α,1}(−(3π²/2)t^α)/2 instead.
pub fn counterexample(alpha: f64, variant_b: bool) -> ProblemSetup {
    let mut s = ProblemSetup::new(alpha);
    let p2 = PI * PI;
    if variant_b {
        s.q = Profile::Constant(2.0 * p2);
        s.f = Profile::function(move |x| 2.25 * p2 * (0.5 * PI * x).cos());
        s.u0 = Profile::function(|x| 2.0 * (0.5 * PI * x).cos());
    } else {
        s.f = Profile::function(move |x| p2 / 8.0 * ((0.5 * PI * x).cos() + 9.0 * (1.5 * PI * x).cos()));
        s.u0 = Profile::function(|x| 0.5 * (0.5 * PI * x).cos() + 1.5 * (1.5 * PI * x).cos());
    }
    s.g = Excitation::Zero;
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Quick end-to-end sanity checks with closed-form answers.
pub fn selftest() -> Vec<SelfCheck> {
    fn check(name: &str, r: Result<(bool, String)>) -> SelfCheck {
        match r {
            Ok((passed, detail)) => SelfCheck { name: name.into(), passed, detail },
            Err(e) => SelfCheck { name: name.into(), passed: false, detail: e.to_string() },
        }
    }
    let mut out = Vec::new();
    out.push(check(
        "mittag_leffler_exponential",
        (|| {
            let ml = crate::mlf::MittagLeffler::new(1.0, 1.0)?;
            let err = [-30.0, -5.0, -0.5, 0.5, 2.0]
                .iter()
                .map(|x| Ok((ml.eval_real(*x)? - f64::exp(*x)).abs() / f64::exp(*x)))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((err < 1e-10, format!("max relative error {err:.2e}")))
        })(),
    ));
    out.push(check(
        "counterexample_traces",
        (|| {
            let alpha = 0.5;
            let grid = SpaceGrid::new(400)?;
            let times: Vec<f64> = (0..=50).map(|j| j as f64 / 50.0).collect();
            let ml = crate::mlf::MittagLeffler::new(alpha, 1.0)?;
            let mut worst = 0.0f64;
            for b in [false, true] {
                let s = counterexample(alpha, b);
                let eig = solve_eigen(&s, &grid, 20)?;
                let tr = spectral_trace(&s, &eig, &spectral_coefficients(&s, &eig), &times)?.trace;
                for (t, v) in times.iter().zip(&tr.values) {
                    let exact = 1.0 + ml.eval_real(-2.25 * PI * PI * t.powf(alpha))?;
                    worst = worst.max((v - exact).abs());
                }
            }
            Ok((worst < 1e-6, format!("max deviation {worst:.2e}")))
        })(),
    ));
    out.push(check(
        "order_fit_model",
        (|| {
            let w = [1e-3];
            let t = geometric_samples(&w);
            let v = t.iter().map(|t| 1.0 - 2.0 * t.powf(0.6)).collect();
            let r = crate::order_fit::fit_order(&Trace::new(t, v)?, 1e-3)?;
            Ok(((r.alpha_hat - 0.6).abs() < 1e-5, format!("alpha_hat {:.6}", r.alpha_hat)))
        })(),
    ));
    out.push(check(
        "rational_fit",
        (|| {
            let t: Vec<f64> = (0..=100).map(|j| j as f64 / 200.0).collect();
            let v = t.iter().map(|t| 1.0 / (1.0 + t)).collect();
            let r = aaa_fit(&Trace::new(t, v)?, &AaaOptions::new(1.0))?;
            let e = (eval_rational(&r, 0.9)? - 1.0 / 1.9).abs();
            Ok((r.degree <= 2 && e < 1e-10, format!("degree {}, error at 0.9 {e:.2e}", r.degree)))
        })(),
    ));
    out.push(check(
        "fem_vs_spectral",
        (|| {
            let case = CaseSpec::case_i();
            let s = case.setup(0.7);
            let grid = SpaceGrid::new(100)?;
            let tg = TimeGrid::new(500, 1.0)?;
            let fem = solve_forward(&s, grid, tg)?.trace();
            let eig = solve_eigen(&s, &SpaceGrid::new(400)?, 50)?;
            let spec = spectral_trace(&s, &eig, &spectral_coefficients(&s, &eig), &fem.times)?.trace;
            let d = fem.window(0.1, 1.0).max_abs_diff(&spec.window(0.1, 1.0));
            Ok((d < 2e-2, format!("max difference on [0.1, 1] {d:.2e}")))
        })(),
    ));
    out
}
