//! Two-coordinate Gaussian targets discretized on a product grid: the
//! random-scan kernel with exact conditional draws, its Metropolis
//! counterpart with coordinate random-walk proposals, and the decomposition
//! inequality connecting their spectral gaps,
//!   Gap(exact)·inf_z Gap(conditional) ≤ Gap(MwG) ≤ Gap(exact).
//!
//! Everything is built from one joint log-density table. Conditional kernels
//! are its rows and columns: exact draws symmetrize to rank-one blocks,
//! Metropolis updates to dense banded blocks; either way the scan kernel is
//! applied slice by slice, never materialized at full n²×n² size.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lanczos::{self, SymOp};
use crate::model;

/// How a coordinate is refreshed by the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CondUpdate {
    /// Exact draw from the discrete conditional.
    ExactDraw,
    /// One Metropolis step with proposal variance c/A_mm.
    Rwm { c: f64 },
}

/// Outcome of the two-coordinate decomposition comparison.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionReport {
    pub gap_gs: f64,
    pub gap_mwg: f64,
    pub inf_conditional_gap: f64,
    pub kappa_star: f64,
    pub c: f64,
    pub grid_points: usize,
}

struct ProductGrid2 {
    n: usize,
    xs: [Vec<f64>; 2],
    deltas: [f64; 2],
    u: Vec<f64>,    // row-major: u[i*n + j], i indexes coordinate 0
    sqpi: Vec<f64>, // normalized √π on the product grid
}

impl ProductGrid2 {
    fn new(a: &DMatrix<f64>, n: usize) -> Result<Self> {
        model::check_spd(a)?;
        if a.nrows() != 2 {
            return Err(Error::Domain(format!(
                "decomposition check handles two coordinates, got {}",
                a.nrows()
            )));
        }
        if n < 9 {
            return Err(Error::Domain(format!("need at least 9 grid points per axis, got {n}")));
        }
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let sd = [(a[(1, 1)] / det).sqrt(), (a[(0, 0)] / det).sqrt()];
        let linspace = |s: f64| -> Vec<f64> {
            let d = 16.0 * s / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|k| -8.0 * s + k as f64 * d).collect();
            v[n - 1] = 8.0 * s;
            v
        };
        let xs = [linspace(sd[0]), linspace(sd[1])];
        let deltas = [xs[0][1] - xs[0][0], xs[1][1] - xs[1][0]];

        let mut u = vec![0.0; n * n];
        let mut umin = f64::INFINITY;
        for i in 0..n {
            let x = xs[0][i];
            for j in 0..n {
                let y = xs[1][j];
                let v = 0.5 * (a[(0, 0)] * x * x + 2.0 * a[(0, 1)] * x * y + a[(1, 1)] * y * y);
                u[i * n + j] = v;
                umin = umin.min(v);
            }
        }
        let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if umax - umin > 690.0 {
            return Err(Error::Construction(format!(
                "joint density spans e^{:.0} across the grid and underflows; \
                 the off-diagonal coupling is too strong for this span",
                umin - umax
            )));
        }
        let w: Vec<f64> = u.iter().map(|&v| (umin - v).exp()).collect();
        let total: f64 = w.iter().sum();
        let sqpi: Vec<f64> = w.iter().map(|&v| (v / total).sqrt()).collect();
        Ok(ProductGrid2 { n, xs, deltas, u, sqpi })
    }

    // potential along axis `axis` with the other coordinate fixed at `k`
    fn slice_u(&self, axis: usize, k: usize) -> Vec<f64> {
        let n = self.n;
        match axis {
            0 => (0..n).map(|i| self.u[i * n + k]).collect(),
            _ => self.u[k * n..k * n + n].to_vec(),
        }
    }
}

/// Symmetrized one-step Metropolis block for a fixed slice potential:
/// off-diagonal Δ·φ_σ(x_b−x_a)·e^{−|u_a−u_b|/2}, diagonal the stochastic
/// complement (which must stay nonnegative).
fn sym_rwm_block(us: &[f64], xs: &[f64], sigma: f64, delta: f64) -> Result<DMatrix<f64>> {
    let n = us.len();
    let log_norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let inv_two_sig2 = 1.0 / (2.0 * sigma * sigma);
    let mut b = DMatrix::zeros(n, n);
    for r in 0..n {
        let mut off = 0.0;
        for s in 0..n {
            if s == r {
                continue;
            }
            let z = xs[s] - xs[r];
            let log_phi = log_norm - z * z * inv_two_sig2;
            let log_acc = if us[r] >= us[s] { 0.0 } else { us[r] - us[s] };
            off += delta * (log_phi + log_acc).exp();
            b[(r, s)] = delta * (log_phi - 0.5 * (us[r] - us[s]).abs()).exp();
        }
        let diag = 1.0 - off;
        if diag < -1e-12 {
            return Err(Error::Construction(format!(
                "negative holding probability {diag:.3e} in a conditional block: \
                 spacing {delta:.3e} too coarse for proposal sigma {sigma:.3e}"
            )));
        }
        b[(r, r)] = diag.max(0.0);
    }
    Ok(b)
}

// √ of the normalized conditional pmf along a slice
fn sqrt_conditional(us: &[f64]) -> Vec<f64> {
    let umin = us.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = us.iter().map(|&v| (umin - v).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|&v| (v / total).sqrt()).collect()
}

// Symmetrized random scan with dense Metropolis blocks, applied slice-wise.
struct MwgOp2 {
    n: usize,
    blocks0: Vec<DMatrix<f64>>, // per column j, acting on index i
    blocks1: Vec<DMatrix<f64>>, // per row i, acting on index j
}

impl SymOp for MwgOp2 {
    fn dim(&self) -> usize {
        self.n * self.n
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.fill(0.0);
        let mut col_in = vec![0.0; n];
        let mut col_out = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col_in[i] = v[i * n + j];
            }
            self.blocks0[j].apply(&col_in, &mut col_out);
            for i in 0..n {
                out[i * n + j] += 0.5 * col_out[i];
            }
        }
        for i in 0..n {
            self.blocks1[i].apply(&v[i * n..i * n + n], &mut col_out);
            for j in 0..n {
                out[i * n + j] += 0.5 * col_out[j];
            }
        }
    }
}

// Symmetrized random scan with exact conditional draws: each block is the
// rank-one projector onto √(conditional), so one pass costs O(n²) total.
struct GsOp2 {
    n: usize,
    sq0: Vec<Vec<f64>>, // sq0[j][i] = √cond(i | column j)
    sq1: Vec<Vec<f64>>, // sq1[i][j] = √cond(j | row i)
}

impl SymOp for GsOp2 {
    fn dim(&self) -> usize {
        self.n * self.n
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.fill(0.0);
        for j in 0..n {
            let q = &self.sq0[j];
            let mut dot = 0.0;
            for i in 0..n {
                dot += q[i] * v[i * n + j];
            }
            for i in 0..n {
                out[i * n + j] += 0.5 * dot * q[i];
            }
        }
        for i in 0..n {
            let q = &self.sq1[i];
            let row = &v[i * n..i * n + n];
            let dot: f64 = q.iter().zip(row).map(|(a, b)| a * b).sum();
            for j in 0..n {
                out[i * n + j] += 0.5 * dot * q[j];
            }
        }
    }
}

fn second_eigenvalue_of_block(block: &DMatrix<f64>) -> Result<f64> {
    let ev = model::symmetric_eigenvalues_sorted(block);
    let n = ev.len();
    if (ev[n - 1] - 1.0).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "conditional block top eigenvalue {} should be 1",
            ev[n - 1]
        )));
    }
    Ok(ev[n - 2])
}

/// Compare the spectral gap of the Metropolis scan against the
/// exact-conditional scan and the decomposition lower bound
/// Gap(exact)·inf_z Gap(conditional), for the Gaussian ∝ exp(−x'Ax/2)
/// discretized on an n×n grid covering ±8 marginal sd per axis. Proposal
/// variances follow the curvature: σ_m² = c/A_mm.
pub fn decomposition_check_2d(a: &DMatrix<f64>, c: f64, n: usize) -> Result<DecompositionReport> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("scale multiplier c must be positive, got {c}")));
    }
    let grid = ProductGrid2::new(a, n)?;
    let sigma = [(c / a[(0, 0)]).sqrt(), (c / a[(1, 1)]).sqrt()];

    let mut blocks0 = Vec::with_capacity(n);
    let mut blocks1 = Vec::with_capacity(n);
    for k in 0..n {
        blocks0.push(sym_rwm_block(&grid.slice_u(0, k), &grid.xs[0], sigma[0], grid.deltas[0])?);
        blocks1.push(sym_rwm_block(&grid.slice_u(1, k), &grid.xs[1], sigma[1], grid.deltas[1])?);
    }
    let mut inf_conditional_gap = f64::INFINITY;
    for block in blocks0.iter().chain(blocks1.iter()) {
        inf_conditional_gap = inf_conditional_gap.min(1.0 - second_eigenvalue_of_block(block)?);
    }

    let mwg = MwgOp2 { n, blocks0, blocks1 };
    let gap_mwg = 1.0 - lanczos::top_eigenvalue_deflated(&mwg, &grid.sqpi)?;

    let gs = GsOp2 {
        n,
        sq0: (0..n).map(|j| sqrt_conditional(&grid.slice_u(0, j))).collect(),
        sq1: (0..n).map(|i| sqrt_conditional(&grid.slice_u(1, i))).collect(),
    };
    let gap_gs = 1.0 - lanczos::top_eigenvalue_deflated(&gs, &grid.sqpi)?;

    Ok(DecompositionReport {
        gap_gs,
        gap_mwg,
        inf_conditional_gap,
        kappa_star: model::kappa_star_gaussian(a)?,
        c,
        grid_points: n,
    })
}

/// Materialize the symmetrized random-scan kernel as a dense n²×n² matrix,
/// for inspection and cross-checks on small grids (n ≤ 32).
pub fn dense_random_scan(a: &DMatrix<f64>, update: CondUpdate, n: usize) -> Result<DMatrix<f64>> {
    if n > 32 {
        return Err(Error::Domain(format!("dense scan limited to 32 points per axis, got {n}")));
    }
    let grid = ProductGrid2::new(a, n)?;
    let block = |axis: usize, k: usize| -> Result<DMatrix<f64>> {
        let us = grid.slice_u(axis, k);
        match update {
            CondUpdate::ExactDraw => {
                let q = sqrt_conditional(&us);
                Ok(DMatrix::from_fn(n, n, |r, s| q[r] * q[s]))
            }
            CondUpdate::Rwm { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Domain(format!("scale multiplier c must be positive, got {c}")));
                }
                let sigma = (c / a[(axis, axis)]).sqrt();
                sym_rwm_block(&us, &grid.xs[axis], sigma, grid.deltas[axis])
            }
        }
    };
    let mut s = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        let b = block(0, j)?;
        for r in 0..n {
            for q in 0..n {
                s[(r * n + j, q * n + j)] += 0.5 * b[(r, q)];
            }
        }
    }
    for i in 0..n {
        let b = block(1, i)?;
        for r in 0..n {
            for q in 0..n {
                s[(i * n + r, i * n + q)] += 0.5 * b[(r, q)];
            }
        }
    }
    Ok(s)
}
