//! Piecewise-linear finite elements on a uniform grid and tridiagonal
//! linear algebra.

use crate::error::{param, Error, Result};
use crate::grid::SpaceGrid;

/// Tridiagonal matrix stored by diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n.saturating_sub(1)], diag: vec![0.0; n], upper: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// self + s · other
    pub fn add_scaled(&self, other: &Tridiag, s: f64) -> Tridiag {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
        Tridiag {
            lower: zip(&self.lower, &other.lower),
            diag: zip(&self.diag, &other.diag),
            upper: zip(&self.upper, &other.upper),
        }
    }

    pub fn scaled(&self, s: f64) -> Tridiag {
        let f = |a: &[f64]| a.iter().map(|x| s * x).collect::<Vec<_>>();
        Tridiag { lower: f(&self.lower), diag: f(&self.diag), upper: f(&self.upper) }
    }

    /// Leading principal submatrix of size n − 1 (drops the last node).
    pub fn drop_last(&self) -> Tridiag {
        let n = self.dim();
        Tridiag {
            lower: self.lower[..n.saturating_sub(2)].to_vec(),
            diag: self.diag[..n - 1].to_vec(),
            upper: self.upper[..n.saturating_sub(2)].to_vec(),
        }
    }

    /// LU factorization without pivoting (the systems here are symmetric positive definite).
    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.dim();
        let mut dinv = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut prev = 1.0;
        for i in 0..n {
            let piv = if i == 0 {
                self.diag[0]
            } else {
                l[i - 1] = self.lower[i - 1] / prev;
                self.diag[i] - l[i - 1] * self.upper[i - 1]
            };
            if !(piv.abs() > 1e-300) || !piv.is_finite() {
                return Err(Error::Numerical(format!("zero pivot at row {i} of tridiagonal factorization")));
            }
            dinv[i] = 1.0 / piv;
            prev = piv;
        }
        Ok(TridiagLu { l, dinv, upper: self.upper.clone() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Factored tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct TridiagLu {
    l: Vec<f64>,
    dinv: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dinv.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        x[n - 1] *= self.dinv[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) * self.dinv[i];
        }
    }
}

/// Stiffness matrix ∫ a φ_i′ φ_j′ with a linear on each element.
pub fn stiffness(grid: &SpaceGrid, a: &[f64]) -> Result<Tridiag> {
    check_len(grid, a, "diffusion coefficient")?;
    let m = grid.m;
    let h = grid.h();
    let mut k = Tridiag::zeros(m + 1);
    for e in 0..m {
        let ae = 0.5 * (a[e] + a[e + 1]) / h;
        k.diag[e] += ae;
        k.diag[e + 1] += ae;
        k.upper[e] -= ae;
        k.lower[e] -= ae;
    }
    Ok(k)
}

/// Consistent mass matrix ∫ φ_i φ_j.
pub fn mass(grid: &SpaceGrid) -> Tridiag {
    let m = grid.m;
    let h = grid.h();
    let mut mm = Tridiag::zeros(m + 1);
    for e in 0..m {
        mm.diag[e] += h / 3.0;
        mm.diag[e + 1] += h / 3.0;
        mm.upper[e] += h / 6.0;
        mm.lower[e] += h / 6.0;
    }
    mm
}

/// Weighted mass matrix ∫ q φ_i φ_j with q linear on each element (exact).
pub fn potential_mass(grid: &SpaceGrid, q: &[f64]) -> Result<Tridiag> {
    check_len(grid, q, "potential")?;
    let m = grid.m;
    let h = grid.h();
    let mut mq = Tridiag::zeros(m + 1);
    for e in 0..m {
        let (q1, q2) = (q[e], q[e + 1]);
        mq.diag[e] += h * (q1 / 4.0 + q2 / 12.0);
        mq.diag[e + 1] += h * (q1 / 12.0 + q2 / 4.0);
        let off = h * (q1 + q2) / 12.0;
        mq.upper[e] += off;
        mq.lower[e] += off;
    }
    Ok(mq)
}

/// Nodal functional b_i = ∫ φ_i u v for piecewise-linear u, v (exact).
/// Accumulates `scale · b` into `out`.
pub fn add_product_functional(grid: &SpaceGrid, u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    let h = grid.h() * scale;
    let n = u.len().min(v.len());
    for e in 0..grid.m {
        let (u1, u2) = (u[e], if e + 1 < n { u[e + 1] } else { 0.0 });
        let (v1, v2) = (v[e], if e + 1 < n { v[e + 1] } else { 0.0 });
        let cross = (u1 * v2 + u2 * v1) / 12.0;
        out[e] += h * (u1 * v1 / 4.0 + cross + u2 * v2 / 12.0);
        out[e + 1] += h * (u1 * v1 / 12.0 + cross + u2 * v2 / 4.0);
    }
}

/// L²(0,1) inner product of two piecewise-linear functions given by nodal values.
pub fn l2_inner(grid: &SpaceGrid, u: &[f64], v: &[f64]) -> f64 {
    let h = grid.h();
    let mut s = 0.0;
    for e in 0..grid.m {
        s += h / 6.0 * (2.0 * u[e] * v[e] + u[e] * v[e + 1] + u[e + 1] * v[e] + 2.0 * u[e + 1] * v[e + 1]);
    }
    s
}

pub fn l2_norm(grid: &SpaceGrid, u: &[f64]) -> f64 {
    l2_inner(grid, u, u).max(0.0).sqrt()
}

fn check_len(grid: &SpaceGrid, v: &[f64], what: &str) -> Result<()> {
    if v.len() != grid.n_nodes() {
        return param(format!("{what} has {} nodal values, grid has {}", v.len(), grid.n_nodes()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_random_spd() {
        let n = 9;
        let mut t = Tridiag::zeros(n);
        for i in 0..n {
            t.diag[i] = 4.0 + i as f64 * 0.1;
        }
        for i in 0..n - 1 {
            t.lower[i] = -1.0 + 0.05 * i as f64;
            t.upper[i] = t.lower[i];
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = t.mul_vec(&x);
        let y = t.solve(&b).unwrap();
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_integrates_products() {
        let g = SpaceGrid::new(16).unwrap();
        let ones = vec![1.0; 17];
        assert!((l2_inner(&g, &ones, &ones) - 1.0).abs() < 1e-15);
        let x = g.nodes();
        // x is itself piecewise linear, so ∫ x² = 1/3 exactly
        let v = l2_inner(&g, &x, &x);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn potential_mass_with_unit_q_is_mass() {
        let g = SpaceGrid::new(5).unwrap();
        let mq = potential_mass(&g, &[1.0; 6]).unwrap();
        let m = mass(&g);
        for i in 0..6 {
            assert!((mq.diag[i] - m.diag[i]).abs() < 1e-16);
        }
        for i in 0..5 {
            assert!((mq.upper[i] - m.upper[i]).abs() < 1e-16);
        }
    }

    #[test]
    fn product_functional_consistent_with_potential_mass() {
        // Σ_i q_i ∫ φ_i u v = uᵀ M_q v
        let g = SpaceGrid::new(6).unwrap();
        let q: Vec<f64> = (0..7).map(|i| 0.3 + (i as f64).cos()).collect();
        let u: Vec<f64> = (0..7).map(|i| (i as f64 * 0.7).sin()).collect();
        let v: Vec<f64> = (0..7).map(|i| 1.0 + i as f64 * 0.2).collect();
        let mut b = vec![0.0; 7];
        add_product_functional(&g, &u, &v, 1.0, &mut b);
        let lhs: f64 = q.iter().zip(&b).map(|(a, c)| a * c).sum();
        let mq = potential_mass(&g, &q).unwrap();
        let rhs: f64 = u.iter().zip(mq.mul_vec(&v)).map(|(a, c)| a * c).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn zero_pivot_reported() {
        let t = Tridiag::zeros(3);
        assert!(t.factor().is_err());
    }
}
