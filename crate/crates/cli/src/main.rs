//! `subdiff` command-line driver.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use subdiff::continuation::{aaa_fit, reduced_data, AaaOptions};
use subdiff::fem_cq::solve_forward;
use subdiff::harness::{self, CaseSpec, DataSource, RunConfig};
use subdiff::inversion::{recover_initial, recover_potential, InversionReport, Metric};
use subdiff::order_fit::order_window_scan;
use subdiff::spectral::{solve_eigen, spectral_coefficients, spectral_trace};
use subdiff::{Error, Result, SpaceGrid, TimeGrid, Trace};

#[derive(Parser)]
#[command(name = "subdiff", version, about = "Order, potential and initial-value recovery for 1-D subdiffusion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boundary trace of a benchmark case.
    Forward {
        #[arg(long, default_value = "i")]
        case: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Source::Spectral)]
        solver: Source,
        /// Space intervals (eigen grid for the spectral solver).
        #[arg(long, default_value_t = 400)]
        m: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        k_modes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit h(t) ≈ c0 + c1 t^α on shrinking windows of a trace CSV.
    FitOrder {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4,1e-5,1e-6,1e-7,1e-8,1e-9,1e-10")]
        windows: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rational fit on [0, T1] and the reduced data on [0, T].
    Continue {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        t_split: f64,
        #[arg(long, default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = subdiff::continuation::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = subdiff::continuation::DEFAULT_MAX_DEGREE)]
        max_degree: usize,
        /// Approximant JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reduced-data trace CSV.
        #[arg(long)]
        reduced: Option<PathBuf>,
    },
    /// CG recovery of q from reduced data.
    InvertQ {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        inv: InvArgs,
    },
    /// CG recovery of u0 from the trace on [0, T1] with a given potential.
    InvertU0 {
        #[arg(long)]
        input: PathBuf,
        /// Report JSON of a potential run; its reconstruction is used.
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        inv: InvArgs,
    },
    /// Regenerate tables with per-cell reports and figure data.
    Reproduce {
        #[arg(long, required = true, value_parser = clap::value_parser!(u32).range(1..=3))]
        table: Vec<u32>,
        #[arg(long, default_value = "i")]
        case: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Fast closed-form checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Spectral,
    Fem,
}

#[derive(Args)]
struct InvArgs {
    /// Benchmark case supplying a, g, T1 and the truth for error tracking.
    #[arg(long, default_value = "i")]
    case: String,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Sobolev weight ℓ²; 0 selects the plain L² gradient.
    #[arg(long)]
    ell2: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// RunConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta_alphas: Option<Vec<f64>>,
    #[arg(long)]
    m_inverse: Option<usize>,
    #[arg(long)]
    n_inverse: Option<usize>,
    #[arg(long)]
    m_data: Option<usize>,
    #[arg(long)]
    n_data: Option<usize>,
    #[arg(long, value_enum)]
    data_source: Option<Source>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.alphas {
            c.alphas = v.clone();
        }
        if let Some(v) = &self.delta_alphas {
            c.delta_alphas = v.clone();
        }
        c.m_inverse = self.m_inverse.unwrap_or(c.m_inverse);
        c.n_inverse = self.n_inverse.unwrap_or(c.n_inverse);
        c.m_data = self.m_data.unwrap_or(c.m_data);
        c.n_data = self.n_data.unwrap_or(c.n_data);
        if let Some(s) = self.data_source {
            c.data_source = match s {
                Source::Spectral => DataSource::Spectral,
                Source::Fem => DataSource::Fem,
            };
        }
        if let Some(k) = self.max_iters {
            c.cg_q.max_iters = k;
            c.cg_u0.max_iters = k;
        }
        c.threads = self.threads.unwrap_or(c.threads);
        c.validate()?;
        Ok(c)
    }
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, contents)?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn read_trace(p: &Path) -> Result<Trace> {
    Trace::read_csv(std::fs::File::open(p)?)
}

fn options(inv: &InvArgs, base: subdiff::inversion::CgOptions) -> subdiff::inversion::CgOptions {
    let mut o = base;
    o.max_iters = inv.max_iters;
    if let Some(l) = inv.ell2 {
        o.metric = if l > 0.0 { Metric::Sobolev { ell2: l } } else { Metric::L2 };
    }
    o
}

fn summary(r: &InversionReport) {
    let e = r.e_star.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
    eprintln!("e*={e} k*={} r*={:.3e} iterations={} stop={}", r.k_star, r.r_star, r.iterations, r.stop_reason);
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Forward { case, alpha, solver, m, n, k_modes, out } => {
            let case = CaseSpec::from_id(&case)?;
            let setup = case.setup(alpha);
            let grid = SpaceGrid::new(m)?;
            let tg = TimeGrid::new(n, case.t_final)?;
            let tr = match solver {
                Source::Spectral => {
                    let eig = solve_eigen(&setup, &grid, k_modes)?;
                    let st = spectral_trace(&setup, &eig, &spectral_coefficients(&setup, &eig), &tg.times())?;
                    if st.truncation_warning {
                        eprintln!("warning: mode truncation estimate {:.2e}", st.tail_estimate);
                    }
                    st.trace
                }
                Source::Fem => solve_forward(&setup, grid, tg)?.trace(),
            };
            emit(out.as_deref(), &tr.to_csv_string()?)?;
        }
        Cmd::FitOrder { input, windows, out } => {
            let rows = order_window_scan(&read_trace(&input)?, &windows)?;
            let mut csv = String::from("t0,alpha_hat,c0,c1,objective,n_samples,unidentifiable\n");
            for r in rows {
                csv.push_str(&format!(
                    "{:e},{:.6},{:.10e},{:.10e},{:.6e},{},{}\n",
                    r.t0, r.alpha_hat, r.c0, r.c1, r.objective, r.n_samples, r.unidentifiable
                ));
            }
            emit(out.as_deref(), &csv)?;
        }
        Cmd::Continue { input, t_split, t_final, tol, max_degree, out, reduced } => {
            let h = read_trace(&input)?;
            let opts = AaaOptions { tol, max_degree, ..AaaOptions::new(t_final) };
            let hr = aaa_fit(&h.window(0.0, t_split), &opts)?;
            eprintln!("degree {} max relative error {:.2e}", hr.degree, hr.max_rel_error);
            if let Some(p) = reduced {
                emit(Some(&p), &reduced_data(&h, &hr, t_split)?.to_csv_string()?)?;
            }
            emit(out.as_deref(), &(hr.to_json()? + "\n"))?;
        }
        Cmd::InvertQ { input, alpha, inv } => {
            let case = CaseSpec::from_id(&inv.case)?;
            let grid = SpaceGrid::new(inv.m)?;
            let truth = case.q.sample(&grid);
            let opts = options(&inv, RunConfig::default().cg_q);
            let rep = recover_potential(&read_trace(&input)?, alpha, &case.setup(alpha), grid, &opts, Some(&truth))?;
            summary(&rep);
            emit(inv.out.as_deref(), &(rep.to_json()? + "\n"))?;
        }
        Cmd::InvertU0 { input, q, alpha, inv } => {
            let case = CaseSpec::from_id(&inv.case)?;
            let grid = SpaceGrid::new(inv.m)?;
            let q_rep: InversionReport = serde_json::from_str(&std::fs::read_to_string(q)?)?;
            if q_rep.reconstruction.len() != grid.n_nodes() {
                return Err(Error::Parameter(format!(
                    "potential has {} nodes, the grid needs {}",
                    q_rep.reconstruction.len(),
                    grid.n_nodes()
                )));
            }
            let truth = case.u0.sample(&grid);
            let opts = options(&inv, RunConfig::default().cg_u0);
            let h = read_trace(&input)?.window(0.0, case.t_split);
            let rep = recover_initial(&h, &q_rep.reconstruction, alpha, &case.setup(alpha), grid, &opts, Some(&truth))?;
            summary(&rep);
            emit(inv.out.as_deref(), &(rep.to_json()? + "\n"))?;
        }
        Cmd::Reproduce { table, case, out, cfg } => {
            let cfg = cfg.resolve()?;
            let mut failures = 0;
            for id in &case {
                let c = CaseSpec::from_id(id)?;
                if let Some(w) = c.compatibility_warning() {
                    eprintln!("warning: {w}");
                }
                let f = harness::reproduce(&cfg, &c, &table, &out)?;
                eprintln!("case {id}: {f} failed cells");
                failures += f;
            }
            return Ok(failures == 0);
        }
        Cmd::Selftest => {
            let checks = harness::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
