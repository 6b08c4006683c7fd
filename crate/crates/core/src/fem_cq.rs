//! Piecewise-linear Galerkin in space, backward-Euler convolution quadrature
//! in time: forward, linearized and adjoint solvers and the gradient
//! assemblies built on them.
//!
//! Step j solves
//!   (τ^{−α} M + S) u_j = F_j + τ^{−α} M [u₀ − Σ_{k=1}^{j} w_k (u_{j−k} − u₀)]
//! on the nodes 0..m−1 (u = 0 at x = 1), where S = K + M_q.
//!
//! The adjoint is the exact transpose of this scheme: with the reversed index
//! it is the same forward recursion driven by the weighted residual at x = 0,
//! so ⟨residual, sensitivity⟩ equals the gradient pairing to round-off.

use crate::error::{param, Error, Result};
use crate::fem::{add_product_functional, mass, potential_mass, stiffness, Tridiag, TridiagLu};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::problem::ProblemSetup;
use crate::trace::Trace;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Coefficients of (1 − ζ)^α.
#[derive(Clone, Debug, PartialEq)]
pub struct CqWeights {
    pub alpha: f64,
    pub w: Vec<f64>,
}

pub fn cq_weights(alpha: f64, n: usize) -> Result<CqWeights> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return param(format!("convolution quadrature needs alpha in (0, 1], got {alpha}"));
    }
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (j as f64 - 1.0 - alpha) / j as f64);
    }
    Ok(CqWeights { alpha, w })
}

impl CqWeights {
    /// β_j = Σ_{k≤j} w_k.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.w
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect()
    }
}

/// Nodal solution values for every time level, time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldHistory {
    pub grid: SpaceGrid,
    pub tg: TimeGrid,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct FieldSidecar {
    pub rows: usize,
    pub cols: usize,
    pub m: usize,
    pub n: usize,
    pub t_final: f64,
    pub layout: String,
    pub dtype: String,
}

impl FieldHistory {
    fn zeros(grid: SpaceGrid, tg: TimeGrid) -> Self {
        Self { grid, tg, data: vec![0.0; (tg.n + 1) * grid.n_nodes()] }
    }

    pub fn step(&self, j: usize) -> &[f64] {
        let c = self.grid.n_nodes();
        &self.data[j * c..(j + 1) * c]
    }

    fn step_mut(&mut self, j: usize) -> &mut [f64] {
        let c = self.grid.n_nodes();
        &mut self.data[j * c..(j + 1) * c]
    }

    /// Values at x = 0 for every time level.
    pub fn trace(&self) -> Trace {
        let c = self.grid.n_nodes();
        Trace { times: self.tg.times(), values: self.data.iter().step_by(c).copied().collect() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Raw little-endian f64 dump plus `<path>.json` describing the shape.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        let side = FieldSidecar {
            rows: self.tg.n + 1,
            cols: self.grid.n_nodes(),
            m: self.grid.m,
            n: self.tg.n,
            t_final: self.tg.t_final,
            layout: "row-major, one row per time level".into(),
            dtype: "f64-le".into(),
        };
        let mut sp = path.as_os_str().to_owned();
        sp.push(".json");
        std::fs::write(sp, serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut sp = path.as_os_str().to_owned();
        sp.push(".json");
        let side: FieldSidecar = serde_json::from_str(&std::fs::read_to_string(sp)?)?;
        let bytes = std::fs::read(path)?;
        if bytes.len() != side.rows * side.cols * 8 {
            return param("field dump size does not match its sidecar");
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { grid: SpaceGrid::new(side.m)?, tg: TimeGrid::new(side.n, side.t_final)?, data })
    }
}

/// Assembled discretization for fixed (a, q, α) on given grids.
#[derive(Clone, Debug)]
pub struct CqSolver {
    pub grid: SpaceGrid,
    pub tg: TimeGrid,
    pub alpha: f64,
    pub weights: CqWeights,
    /// Full mass matrix on all m+1 nodes.
    pub mass: Tridiag,
    /// Full K + M_q on all m+1 nodes.
    pub operator: Tridiag,
    scale: f64,
    mass_red: Tridiag,
    lu: TridiagLu,
}

impl CqSolver {
    pub fn new(grid: SpaceGrid, tg: TimeGrid, alpha: f64, a: &[f64], q: &[f64]) -> Result<Self> {
        let weights = cq_weights(alpha, tg.n)?;
        if a.iter().any(|v| !(*v > 0.0)) {
            return param("diffusion coefficient must be positive");
        }
        let mass_full = mass(&grid);
        let op = stiffness(&grid, a)?.add_scaled(&potential_mass(&grid, q)?, 1.0);
        let scale = tg.dt().powf(-alpha);
        let mass_red = mass_full.drop_last();
        let lu = mass_red.scaled(scale).add_scaled(&op.drop_last(), 1.0).factor()?;
        Ok(Self { grid, tg, alpha, weights, mass: mass_full, operator: op, scale, mass_red, lu })
    }

    pub fn from_setup(setup: &ProblemSetup, grid: SpaceGrid, tg: TimeGrid) -> Result<Self> {
        setup.validate(&grid)?;
        Self::new(grid, tg, setup.alpha, &setup.a.sample(&grid), &setup.q.sample(&grid))
    }

    /// Generic march. `load(j, rhs)` adds F_j (reduced, length m) for j ≥ 1.
    fn march<F: FnMut(usize, &mut [f64])>(&self, u0: &[f64], mut load: F) -> FieldHistory {
        let m = self.grid.m;
        let n = self.tg.n;
        let w = &self.weights.w;
        let mut out = FieldHistory::zeros(self.grid, self.tg);
        out.step_mut(0).copy_from_slice(u0);
        let u0r = &u0[..m];
        // d_j = u_j − u₀ on the reduced nodes
        let mut d = vec![0.0; (n + 1) * m];
        let mut first_nz: Option<usize> = None;
        let mut hist = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        for j in 1..=n {
            hist.iter_mut().for_each(|x| *x = 0.0);
            if let Some(f0) = first_nz {
                let kmax = j - f0;
                let mut k = 1;
                // four history levels per pass to cut load/store traffic on hist
                while k + 3 <= kmax {
                    let (w1, w2, w3, w4) = (w[k], w[k + 1], w[k + 2], w[k + 3]);
                    let d1 = &d[(j - k) * m..(j - k + 1) * m];
                    let d2 = &d[(j - k - 1) * m..(j - k) * m];
                    let d3 = &d[(j - k - 2) * m..(j - k - 1) * m];
                    let d4 = &d[(j - k - 3) * m..(j - k - 2) * m];
                    for i in 0..m {
                        hist[i] += (w1 * d1[i] + w2 * d2[i]) + (w3 * d3[i] + w4 * d4[i]);
                    }
                    k += 4;
                }
                for k in k..=kmax {
                    let wk = w[k];
                    let dk = &d[(j - k) * m..(j - k + 1) * m];
                    for (h, x) in hist.iter_mut().zip(dk) {
                        *h += wk * x;
                    }
                }
            }
            for i in 0..m {
                tmp[i] = u0r[i] - hist[i];
            }
            self.mass_red.mul_vec_into(&tmp, &mut rhs);
            rhs.iter_mut().for_each(|x| *x *= self.scale);
            load(j, &mut rhs);
            self.lu.solve_in_place(&mut rhs);
            let dj = &mut d[j * m..(j + 1) * m];
            let mut nz = false;
            for i in 0..m {
                dj[i] = rhs[i] - u0r[i];
                nz |= dj[i] != 0.0;
            }
            if nz && first_nz.is_none() {
                first_nz = Some(j);
            }
            let uj = out.step_mut(j);
            uj[..m].copy_from_slice(&rhs);
            uj[m] = 0.0;
        }
        out
    }

    /// Forward solve for the data u₀, f, g of `setup` (coefficients are the solver's).
    pub fn forward(&self, setup: &ProblemSetup) -> Result<FieldHistory> {
        let u0 = setup.u0.sample(&self.grid);
        let f = setup.f.sample(&self.grid);
        let mf = self.mass.mul_vec(&f);
        let f_zero = f.iter().all(|v| *v == 0.0);
        let g = setup.g.cq_loads(self.alpha, &self.tg, &self.weights.w);
        Ok(self.march(&u0, |j, rhs| {
            if !f_zero {
                for (r, v) in rhs.iter_mut().zip(&mf) {
                    *r += v;
                }
            }
            rhs[0] += g[j];
        }))
    }

    /// Forward solve with zero initial data and source and the given
    /// per-step boundary loads (length n+1, entry 0 unused).
    pub fn forward_boundary(&self, loads: &[f64]) -> Result<FieldHistory> {
        if loads.len() != self.tg.n + 1 {
            return param(format!("expected {} boundary loads, got {}", self.tg.n + 1, loads.len()));
        }
        let zero = vec![0.0; self.grid.n_nodes()];
        Ok(self.march(&zero, |j, rhs| rhs[0] += loads[j]))
    }

    /// Forward solve from initial data u₀ with f = 0, g = 0.
    pub fn forward_initial(&self, u0: &[f64]) -> Result<FieldHistory> {
        if u0.len() != self.grid.n_nodes() {
            return param("initial data has the wrong length");
        }
        Ok(self.march(u0, |_, _| {}))
    }

    /// Directional derivative of the trace with respect to q along `dq`.
    pub fn sensitivity(&self, u: &FieldHistory, dq: &[f64]) -> Result<Trace> {
        Ok(self.sensitivity_field(u, dq)?.trace())
    }

    pub fn sensitivity_field(&self, u: &FieldHistory, dq: &[f64]) -> Result<FieldHistory> {
        self.check_history(u)?;
        if dq.len() != self.grid.n_nodes() {
            return param(format!("perturbation has {} values, grid has {}", dq.len(), self.grid.n_nodes()));
        }
        let mdq = potential_mass(&self.grid, dq)?;
        let zero = vec![0.0; self.grid.n_nodes()];
        let m = self.grid.m;
        let mut buf = vec![0.0; m + 1];
        Ok(self.march(&zero, |j, rhs| {
            mdq.mul_vec_into(u.step(j), &mut buf);
            for i in 0..m {
                rhs[i] -= buf[i];
            }
        }))
    }

    /// Adjoint field for the functional Σ_j ω_j r_j u_j(0): `weighted[j] = ω_j r_j`.
    /// Row j of the result pairs with forward level j (row 0 is zero).
    pub fn adjoint(&self, weighted: &[f64]) -> Result<FieldHistory> {
        let n = self.tg.n;
        if weighted.len() != n + 1 {
            return param(format!("expected {} weighted residuals, got {}", n + 1, weighted.len()));
        }
        let mut loads = vec![0.0; n + 1];
        for p in 1..=n {
            loads[p] = weighted[n + 1 - p];
        }
        let rev = self.forward_boundary(&loads)?;
        let mut v = FieldHistory::zeros(self.grid, self.tg);
        for i in 1..=n {
            v.step_mut(i).copy_from_slice(rev.step(n + 1 - i));
        }
        Ok(v)
    }

    /// Nodal functional of the q-gradient: b_l = −Σ_{j≥1} ∫ φ_l u_j v_j.
    pub fn gradient_q_functional(&self, u: &FieldHistory, v: &FieldHistory) -> Result<Vec<f64>> {
        self.check_history(u)?;
        self.check_history(v)?;
        let mut b = vec![0.0; self.grid.n_nodes()];
        for j in 1..=self.tg.n {
            let vj = v.step(j);
            if vj.iter().all(|x| *x == 0.0) {
                continue;
            }
            add_product_functional(&self.grid, u.step(j), vj, -1.0, &mut b);
        }
        Ok(b)
    }

    /// L² Riesz representative of the q-gradient.
    pub fn gradient_q(&self, u: &FieldHistory, v: &FieldHistory) -> Result<Vec<f64>> {
        let b = self.gradient_q_functional(u, v)?;
        self.mass.solve(&b)
    }

    /// Nodal functional of the u₀-gradient: τ^{−α} M Σ_j β_{j−1} v_j, plus the
    /// direct dependence `w0_r0` of the t = 0 sample on u₀(0).
    pub fn gradient_u0_functional(&self, v: &FieldHistory, w0_r0: f64) -> Result<Vec<f64>> {
        self.check_history(v)?;
        let m = self.grid.m;
        let beta = self.weights.partial_sums();
        let mut acc = vec![0.0; m];
        for j in 1..=self.tg.n {
            let vj = v.step(j);
            for i in 0..m {
                acc[i] += beta[j - 1] * vj[i];
            }
        }
        let mut b = self.mass_red.mul_vec(&acc);
        b.iter_mut().for_each(|x| *x *= self.scale);
        b[0] += w0_r0;
        b.push(0.0);
        Ok(b)
    }

    /// L² Riesz representative of the u₀-gradient (zero at x = 1).
    pub fn gradient_u0(&self, v: &FieldHistory, w0_r0: f64) -> Result<Vec<f64>> {
        let b = self.gradient_u0_functional(v, w0_r0)?;
        let mut g = self.mass_red.solve(&b[..self.grid.m])?;
        g.push(0.0);
        Ok(g)
    }

    fn check_history(&self, u: &FieldHistory) -> Result<()> {
        if u.grid != self.grid || u.tg != self.tg {
            return Err(Error::Parameter("field history was computed on different grids".into()));
        }
        Ok(())
    }
}

/// Forward solve of the full direct problem.
pub fn solve_forward(setup: &ProblemSetup, grid: SpaceGrid, tg: TimeGrid) -> Result<FieldHistory> {
    CqSolver::from_setup(setup, grid, tg)?.forward(setup)
}
