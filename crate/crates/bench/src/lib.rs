//! Shared fixtures for the benchmarks.

use subdiff::harness::CaseSpec;
use subdiff::spectral::{solve_eigen, spectral_coefficients, spectral_trace};
use subdiff::{ProblemSetup, SpaceGrid, TimeGrid, Trace};

/// Case (i) setup at order `alpha`.
pub fn case_i(alpha: f64) -> ProblemSetup {
    CaseSpec::case_i().setup(alpha)
}

/// Spectral trace of case (i) on a uniform grid with `n` steps over [0, 1].
pub fn case_i_trace(alpha: f64, n: usize) -> Trace {
    let s = case_i(alpha);
    let eig = solve_eigen(&s, &SpaceGrid::new(400).expect("grid"), 50).expect("eigenpairs");
    let tg = TimeGrid::new(n, 1.0).expect("time grid");
    spectral_trace(&s, &eig, &spectral_coefficients(&s, &eig), &tg.times()).expect("trace").trace
}
