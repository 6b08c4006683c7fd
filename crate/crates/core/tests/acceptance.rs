//! Acceptance run: one PASS/FAIL line per criterion, plus INFO lines with the
//! measured values. Exits non-zero when any criterion fails.

mod common;

use common::{convolution_gap, differentiation_gap, laplace_gap, ALPHAS};
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};
use subdiff::continuation::{aaa_fit, eval_rational, AaaOptions};
use subdiff::fem_cq::{solve_forward, CqSolver};
use subdiff::harness::{
    counterexample, generate_data, reproduce, run_q_cell, run_u0_cell, CaseSpec, DataSource, QRun, RunConfig,
};
use subdiff::inversion::{objective_q, objective_q_derivative, objective_u0, recover_potential, CgOptions};
use subdiff::mlf::MittagLeffler;
use subdiff::order_fit::order_window_scan;
use subdiff::spectral::{solve_eigen, spectral_coefficients, spectral_trace};
use subdiff::{Excitation, ProblemSetup, Profile, SpaceGrid, TimeGrid};

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name} [{:.1} s]: {detail}", elapsed.as_secs_f64());
        if !pass {
            self.failed.push(id);
        }
    }
}

fn info(msg: impl AsRef<str>) {
    println!("INFO    {}", msg.as_ref());
}

fn cases() -> [CaseSpec; 2] {
    [CaseSpec::case_i(), CaseSpec::case_ii()]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fixed pseudo-random directions in [−½, ½]ⁿ.
fn directions(count: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = seed;
    let mut next = move || {
        s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..count).map(|_| (0..len).map(|_| next()).collect()).collect()
}

fn special_functions(rep: &mut Report) {
    let t = Instant::now();
    let d = ALPHAS.iter().map(|a| differentiation_gap(*a)).fold(0.0, f64::max);
    let l = ALPHAS.iter().map(|a| laplace_gap(*a)).fold(0.0, f64::max);
    let c = convolution_gap();
    let el = t.elapsed();
    let pass = d <= 1e-6 && l <= 1e-6 && c <= 1e-8 && el.as_secs_f64() < 10.0;
    rep.record(1, "Mittag-Leffler identities", pass, el, format!("differentiation {d:.2e}, Laplace {l:.2e}, convolution {c:.2e}"));
}

fn non_identifiability(rep: &mut Report) {
    let t = Instant::now();
    let grid = SpaceGrid::new(400).unwrap();
    let times: Vec<f64> = (0..=2000).map(|j| j as f64 / 2000.0).collect();
    let (mut to_exact, mut between) = (0.0f64, 0.0f64);
    for alpha in ALPHAS {
        let ml = MittagLeffler::new(alpha, 1.0).unwrap();
        let tr: Vec<_> = [false, true]
            .iter()
            .map(|b| {
                let s = counterexample(alpha, *b);
                let e = solve_eigen(&s, &grid, 50).unwrap();
                spectral_trace(&s, &e, &spectral_coefficients(&s, &e), &times).unwrap().trace
            })
            .collect();
        for tr in &tr {
            for (x, v) in tr.times.iter().zip(&tr.values) {
                to_exact = to_exact.max((v - 1.0 - ml.eval_real(-2.25 * PI * PI * x.powf(alpha)).unwrap()).abs());
            }
        }
        between = between.max(tr[0].max_abs_diff(&tr[1]));
    }
    let el = t.elapsed();
    let pass = to_exact <= 1e-6 && between <= 1e-8 && el.as_secs_f64() < 10.0;
    rep.record(2, "non-identifiability pair", pass, el, format!("vs closed form {to_exact:.2e}, between {between:.2e}"));
}

fn cross_validation(rep: &mut Report) {
    let t = Instant::now();
    let grid = SpaceGrid::new(200).unwrap();
    let tg = TimeGrid::new(2000, 1.0).unwrap();
    let eg = SpaceGrid::new(400).unwrap();
    let mut worst = 0.0f64;
    for case in cases() {
        let (mut row, mut away) = (vec![], vec![]);
        for alpha in ALPHAS {
            let s = case.setup(alpha);
            let fem = solve_forward(&s, grid, tg).unwrap().trace();
            let e = solve_eigen(&s, &eg, 50).unwrap();
            let spec = spectral_trace(&s, &e, &spectral_coefficients(&s, &e), &tg.times()).unwrap().trace;
            let gap = |a: f64, b: f64| fem.window(a, b).max_abs_diff(&spec.window(a, b));
            let g = gap(0.1, 1.0);
            row.push(format!("{alpha}: {g:.2e}"));
            away.push(format!("{alpha}: {:.2e}", gap(0.1, 0.4999).max(gap(0.55, 1.0))));
            worst = worst.max(g);
        }
        info(format!("FEM/CQ vs spectral on [0.1, 1], case {}: {}", case.id, row.join(", ")));
        info(format!("    same, excluding (0.5, 0.55) after the excitation jump: {}", away.join(", ")));
    }
    // successive differences isolate the time-stepping error; before T1 only the
    // initial-data response is present
    let mut orders = vec![];
    for case in cases() {
        let s = case.setup(0.5);
        let runs: Vec<Vec<f64>> =
            [500, 1000, 2000, 4000].iter().map(|n| solve_forward(&s, grid, TimeGrid::new(*n, 1.0).unwrap()).unwrap().trace().values).collect();
        for t in [0.25, 1.0] {
            let h: Vec<f64> = runs.iter().map(|v| v[(t * (v.len() - 1) as f64).round() as usize]).collect();
            let d: Vec<f64> = h.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
            let o: Vec<f64> = d.windows(2).map(|p| (p[0] / p[1]).log2()).collect();
            info(format!("temporal order, case {} alpha 0.5, t = {t}: {o:.3?}", case.id));
            if t < 0.5 {
                orders.extend(o);
            }
        }
    }
    let el = t.elapsed();
    let order_ok = orders.iter().all(|o| (0.8..=1.2).contains(o));
    let pass = worst <= 5e-3 && order_ok && el.as_secs_f64() < 60.0;
    rep.record(
        3,
        "solver cross-validation",
        pass,
        el,
        format!("max gap {worst:.2e} (tolerance 5e-3), temporal orders at t = 0.25 {orders:.3?}"),
    );
}

fn adjoint_checks(rep: &mut Report) {
    let t = Instant::now();
    let grid = SpaceGrid::new(50).unwrap();
    let tg = TimeGrid::new(500, 1.0).unwrap();
    let mut worst_q = 0.0f64;
    let mut worst_dual = 0.0f64;
    for alpha in ALPHAS {
        let mut template = ProblemSetup::new(alpha);
        template.g = Excitation::unit_step(0.5);
        template.q = Profile::function(|x| x * (1.0 - x));
        let hbar = solve_forward(&template, grid, tg).unwrap().trace();
        let q: Vec<f64> = grid.nodes().iter().map(|x| 0.5 + (PI * x).sin()).collect();
        let b = objective_q_derivative(&q, &template, grid, &hbar).unwrap();
        for d in directions(3, q.len(), 7) {
            let eps = 1e-4;
            let shift = |s: f64| q.iter().zip(&d).map(|(a, c)| a + s * eps * c).collect::<Vec<_>>();
            let fd = (objective_q(&shift(1.0), &template, grid, &hbar).unwrap()
                - objective_q(&shift(-1.0), &template, grid, &hbar).unwrap())
                / (2.0 * eps);
            let an = dot(&b, &d);
            worst_q = worst_q.max((fd - an).abs() / an.abs());
        }
        // ⟨r, F′(q)δq⟩ = ⟨b(r), δq⟩ for the exact adjoint
        let s = CaseSpec::case_ii().setup(alpha);
        let solver = CqSolver::from_setup(&s, grid, tg).unwrap();
        let u = solver.forward(&s).unwrap();
        let w = tg.trapezoid_weights(250, 500);
        let r: Vec<f64> = (0..=500).map(|j| (0.03 * j as f64).cos() * w[j]).collect();
        let bq = solver.gradient_q_functional(&u, &solver.adjoint(&r).unwrap()).unwrap();
        for dq in directions(3, grid.n_nodes(), 3) {
            let lhs = dot(&r, &solver.sensitivity(&u, &dq).unwrap().values);
            worst_dual = worst_dual.max((lhs - dot(&bq, &dq)).abs() / lhs.abs());
        }
    }
    let case = CaseSpec::case_ii();
    let s = case.setup(0.6);
    let ht = TimeGrid::new(250, 0.5).unwrap();
    let q = case.q.sample(&grid);
    let h = solve_forward(&s.with_data(s.u0.clone(), Profile::Constant(0.0), Excitation::Zero), grid, ht).unwrap().trace();
    let u0: Vec<f64> = grid.nodes().iter().map(|x| 1.0 - x * x).collect();
    let (_, b) = objective_u0(&u0, &h, &q, 0.6, &s, grid).unwrap();
    let mut worst_u = 0.0f64;
    for mut d in directions(3, u0.len(), 11) {
        *d.last_mut().unwrap() = 0.0;
        let eps = 1e-4;
        let j = |sg: f64| {
            let v: Vec<f64> = u0.iter().zip(&d).map(|(a, c)| a + sg * eps * c).collect();
            objective_u0(&v, &h, &q, 0.6, &s, grid).unwrap().0
        };
        let fd = (j(1.0) - j(-1.0)) / (2.0 * eps);
        worst_u = worst_u.max((fd - dot(&b, &d)).abs() / fd.abs());
    }
    let el = t.elapsed();
    let pass = worst_q <= 1e-3 && worst_u <= 1e-3 && worst_dual <= 1e-3 && el.as_secs_f64() < 120.0;
    rep.record(
        4,
        "adjoint and duality",
        pass,
        el,
        format!("q gradient {worst_q:.2e}, u0 gradient {worst_u:.2e}, duality {worst_dual:.2e}"),
    );
}

/// Published order-recovery values for case (i), rows 1e-3..1e-10, columns α = 0.3..0.9.
const REFERENCE_ORDER_I: [[f64; 4]; 8] = [
    [0.2488, 0.6239, 0.8641, 1.0000],
    [0.3208, 0.6256, 0.8110, 0.9647],
    [0.3631, 0.6027, 0.7626, 0.9000],
    [0.3760, 0.5747, 0.7315, 0.9000],
    [0.3737, 0.5495, 0.7000, 0.9000],
    [0.3665, 0.5306, 0.7000, 0.9000],
    [0.3570, 0.5000, 0.7000, 0.9000],
    [0.3468, 0.5000, 0.7000, 0.9000],
];
const REFERENCE_ORDER_II: [[f64; 4]; 8] = [
    [0.0008, 0.2723, 0.6274, 0.8829],
    [0.0271, 0.4126, 0.6850, 0.8980],
    [0.1214, 0.4700, 0.6969, 0.9000],
    [0.1932, 0.4897, 0.6992, 0.9000],
    [0.2398, 0.4960, 0.7000, 0.9000],
    [0.2667, 0.4980, 0.7000, 0.9000],
    [0.2813, 0.5000, 0.7000, 0.9000],
    [0.2888, 0.5000, 0.7000, 0.9000],
];

fn order_recovery(rep: &mut Report) {
    let t = Instant::now();
    let cfg = RunConfig::default();
    let mut all_have_window = true;
    let mut specific = vec![];
    for (case, reference) in cases().iter().zip([REFERENCE_ORDER_I, REFERENCE_ORDER_II]) {
        for (col, alpha) in ALPHAS.iter().enumerate() {
            let d = generate_data(case, *alpha, &cfg).unwrap();
            let rows = order_window_scan(&d.h_small, &cfg.order_windows).unwrap();
            let best = rows.iter().map(|r| (r.alpha_hat - alpha).abs()).fold(f64::INFINITY, f64::min);
            all_have_window &= best <= 5e-3;
            let cells: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.alpha_hat)).collect();
            let vs: Vec<String> = (0..8).map(|k| format!("{:+.4}", rows[k].alpha_hat - reference[k][col])).collect();
            info(format!("order case {} alpha {alpha}: best |error| {best:.1e}; windows 1e-3..1e-14: {}", case.id, cells.join(" ")));
            info(format!("    minus reference values (1e-3..1e-10): {}", vs.join(" ")));
            if case.id == "i" {
                let row = match col {
                    1 => Some(6),
                    2 => Some(4),
                    3 => Some(2),
                    _ => None,
                };
                if let Some(k) = row {
                    specific.push((rows[k].t0, *alpha, rows[k].alpha_hat, reference[k][col]));
                }
            }
        }
    }
    let specific_ok = specific.iter().all(|(_, _, got, want)| (got - want).abs() <= 5e-3);
    let el = t.elapsed();
    let pass = all_have_window && specific_ok && el.as_secs_f64() < 60.0;
    let cells: Vec<String> = specific.iter().map(|(t0, a, got, want)| format!("({t0:e}, {a}) {got:.4} vs {want:.4}")).collect();
    rep.record(
        5,
        "order recovery",
        pass,
        el,
        format!("every pair has a window within 5e-3: {all_have_window}; specific cells: {}", cells.join(", ")),
    );
}

fn continuation_check(rep: &mut Report) {
    let t = Instant::now();
    let cfg = RunConfig::default();
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut degrees = vec![];
    let eg = SpaceGrid::new(cfg.m_data).unwrap();
    let times = cfg.time_grid().unwrap().times();
    for case in cases() {
        for alpha in ALPHAS {
            let s = case.setup(alpha);
            let no_g = s.with_data(s.u0.clone(), s.f.clone(), Excitation::Zero);
            let e = solve_eigen(&s, &eg, cfg.k_modes).unwrap();
            let sd = spectral_coefficients(&s, &e);
            let h = spectral_trace(&s, &e, &sd, &times).unwrap().trace;
            let h_star = spectral_trace(&no_g, &e, &sd, &[0.75]).unwrap().trace.values[0];
            match aaa_fit(&h.window(0.0, case.t_split), &AaaOptions::new(case.t_final)) {
                Ok(hr) => {
                    let err = (eval_rational(&hr, 0.75).unwrap() - h_star).abs();
                    worst = worst.max(err);
                    pass &= hr.converged && hr.max_rel_error <= 1e-9 && hr.degree <= 20 && err <= 1e-3;
                    degrees.push(hr.degree);
                }
                Err(err) => {
                    info(format!("continuation case {} alpha {alpha}: {err}", case.id));
                    pass = false;
                }
            }
        }
    }
    let el = t.elapsed();
    pass &= el.as_secs_f64() < 10.0;
    rep.record(6, "continuation", pass, el, format!("degrees {degrees:?}, worst error at t = 0.75 {worst:.2e}"));
}

fn q_sweep(rep: &mut Report, cfg: &RunConfig) -> Vec<(String, QRun)> {
    let t = Instant::now();
    let mut pass = true;
    let mut slowest = 0.0f64;
    let mut runs = vec![];
    for case in cases() {
        for alpha in &cfg.alphas {
            for da in &cfg.delta_alphas {
                let c = Instant::now();
                let r = run_q_cell(&case, *alpha, *da, cfg);
                let secs = c.elapsed().as_secs_f64();
                slowest = slowest.max(secs);
                match r {
                    Ok(r) => {
                        let e = r.report.e_star.unwrap();
                        let ok = if *da == 0.0 {
                            e <= 5e-2 && r.report.r_star <= 1e-3 && r.report.k_star <= 200
                        } else if *da == 0.005 {
                            e <= 1.5e-1
                        } else {
                            true
                        };
                        pass &= ok;
                        info(format!(
                            "q case {} alpha {alpha} da {da}: e* {e:.3e} k* {} r* {:.3e} final error {:.3e} [{secs:.0} s]{}",
                            case.id,
                            r.report.k_star,
                            r.report.r_star,
                            r.report.errors.last().unwrap(),
                            if ok { "" } else { " out of tolerance" }
                        ));
                        runs.push((case.id.clone(), r));
                    }
                    Err(e) => {
                        pass = false;
                        info(format!("q case {} alpha {alpha} da {da}: {e}", case.id));
                    }
                }
            }
        }
    }
    let el = t.elapsed();
    pass &= slowest < 180.0 && el.as_secs_f64() < 1800.0;
    rep.record(7, "potential recovery", pass, el, format!("{} cells, slowest {slowest:.0} s", runs.len()));
    runs
}

fn u0_sweep(cfg: &RunConfig, runs: &[(String, QRun)], label: &str) -> (bool, f64, Duration) {
    let t = Instant::now();
    let mut pass = true;
    let mut worst = 0.0f64;
    for case in cases() {
        for alpha in &cfg.alphas {
            let Some((_, q)) = runs.iter().find(|(id, r)| *id == case.id && r.alpha == *alpha && r.delta_alpha == 0.0) else {
                info(format!("{label} u0 case {} alpha {alpha}: no potential reconstruction", case.id));
                pass = false;
                continue;
            };
            match run_u0_cell(&case, *alpha, &q.report.final_iterate, cfg) {
                Ok(r) => {
                    let e = r.report.e_star.unwrap();
                    let last = *r.report.errors.last().unwrap();
                    let semi = r.report.k_star > 0 && r.report.k_star < r.report.iterations && last >= 1.01 * e;
                    pass &= e <= 2.5e-2 && semi;
                    worst = worst.max(e);
                    info(format!(
                        "{label} u0 case {} alpha {alpha}: e* {e:.3e} k* {} r* {:.3e} final error {last:.3e}{}",
                        case.id,
                        r.report.k_star,
                        r.report.r_star,
                        if semi { "" } else { " (no semiconvergence)" }
                    ));
                }
                Err(e) => {
                    pass = false;
                    info(format!("{label} u0 case {} alpha {alpha}: {e}", case.id));
                }
            }
        }
    }
    (pass, worst, t.elapsed())
}

fn initial_recovery(rep: &mut Report, cfg: &RunConfig, runs: &[(String, QRun)]) {
    let (pass, worst, el) = u0_sweep(cfg, runs, "default data:");
    let pass = pass && el.as_secs_f64() < 900.0;
    rep.record(8, "initial-data recovery", pass, el, format!("worst e* {worst:.3e} (tolerance 2.5e-2)"));
    // same inversion, data from the CQ solver refined in space only
    let fem = RunConfig {
        data_source: DataSource::Fem,
        n_data: cfg.n_inverse,
        delta_alphas: vec![0.0],
        ..cfg.clone()
    };
    let mut fem_runs = vec![];
    for case in cases() {
        for alpha in &fem.alphas {
            match run_q_cell(&case, *alpha, 0.0, &fem) {
                Ok(r) => {
                    info(format!(
                        "space-refined CQ data: q case {} alpha {alpha}: e* {:.3e} r* {:.3e}",
                        case.id,
                        r.report.e_star.unwrap(),
                        r.report.r_star
                    ));
                    fem_runs.push((case.id.clone(), r));
                }
                Err(e) => info(format!("space-refined CQ data: q case {} alpha {alpha}: {e}", case.id)),
            }
        }
    }
    let (p, w, _) = u0_sweep(&fem, &fem_runs, "space-refined CQ data:");
    info(format!("space-refined CQ data: all u0 cells within 2.5e-2 with semiconvergence: {p}; worst e* {w:.3e}"));
}

fn inverse_crime(rep: &mut Report) {
    let t = Instant::now();
    let grid = SpaceGrid::new(200).unwrap();
    let tg = TimeGrid::new(2000, 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut row = vec![];
    for alpha in ALPHAS {
        let mut s = ProblemSetup::new(alpha);
        s.q = Profile::function(|x| 0.2 * (0.5 * PI * x).cos());
        s.g = Excitation::unit_step(0.5);
        let h = solve_forward(&s, grid, tg).unwrap().trace();
        let truth = s.q.sample(&grid);
        let r = recover_potential(&h, alpha, &s, grid, &CgOptions::default(), Some(&truth)).unwrap();
        let e = r.e_star.unwrap();
        worst = worst.max(e);
        row.push(format!("{alpha}: {e:.2e} (k* {})", r.k_star));
    }
    rep.record(9, "inverse-crime ceiling", worst <= 1e-3, t.elapsed(), format!("q = 0.2 cos(pi x / 2): {}", row.join(", ")));
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = vec![];
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(rep: &mut Report) {
    let t = Instant::now();
    let mut cfg = RunConfig {
        alphas: vec![0.5, 0.9],
        delta_alphas: vec![0.0, 0.005],
        m_inverse: 40,
        n_inverse: 200,
        m_data: 80,
        n_data: 400,
        k_modes: 20,
        ..RunConfig::default()
    };
    cfg.cg_q.max_iters = 5;
    cfg.cg_u0.max_iters = 5;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let trees: Vec<_> = dirs
        .iter()
        .map(|d| {
            for case in cases() {
                reproduce(&cfg, &case, &[1, 2, 3], d.path()).unwrap();
            }
            tree(d.path())
        })
        .collect();
    let same = trees[0] == trees[1];
    let bytes: usize = trees[0].iter().map(|(_, b)| b.len()).sum();
    rep.record(10, "determinism", same && !trees[0].is_empty(), t.elapsed(), format!("{} files, {bytes} bytes", trees[0].len()));
}

fn main() -> ExitCode {
    let mut rep = Report { failed: vec![] };
    let cfg = RunConfig::default();
    info(format!("default config: {}", cfg.to_json().unwrap().replace('\n', " ")));
    // ACCEPTANCE_ONLY=3,6 restricts the run; criterion 8 needs 7
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |id: u32| only.as_ref().map_or(true, |o| o.contains(&id));
    if want(1) {
        special_functions(&mut rep);
    }
    if want(2) {
        non_identifiability(&mut rep);
    }
    if want(3) {
        cross_validation(&mut rep);
    }
    if want(4) {
        adjoint_checks(&mut rep);
    }
    if want(5) {
        order_recovery(&mut rep);
    }
    if want(6) {
        continuation_check(&mut rep);
    }
    if want(7) {
        let runs = q_sweep(&mut rep, &cfg);
        if want(8) {
            initial_recovery(&mut rep, &cfg, &runs);
        }
    }
    if want(9) {
        inverse_crime(&mut rep);
    }
    if want(10) {
        determinism(&mut rep);
    }
    if rep.failed.is_empty() {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {:?}", rep.failed);
        ExitCode::FAILURE
    }
}
