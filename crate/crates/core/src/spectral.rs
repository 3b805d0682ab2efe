//! Spectral-gap and conductance analysis of one-dimensional random-walk
//! Metropolis kernels, together with the closed-form lower bounds they are
//! checked against.
//!
//! The continuous kernel is discretized on a uniform grid; acceptance ratios
//! are formed in log space so that steep potentials (where the density
//! underflows long before the grid ends) stay finite. Bounds come in two
//! layers: an acceptance floor `b(c)` depending only on the proposal scale
//! multiplier, and the conductance/gap floors `k(c)` and `k(c)²/2` built
//! from it.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lanczos;
use crate::model::{self, Potential1D, Quadratic};
use crate::quad;

/// Constant 6√3 appearing in the conductance-from-acceptance bound.
pub fn k_factor() -> f64 {
    6.0 * 3f64.sqrt()
}

/// Worst-case acceptance floor for proposal variance c·Var(π):
/// (2πc)^{−1/2} e^{−9/(8c)} e^{−2.6} / 2.
pub fn b_of_c(c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("scale multiplier c must be positive, got {c}")));
    }
    Ok((2.0 * PI * c).sqrt().recip() * (-9.0 / (8.0 * c)).exp() * (-2.6f64).exp() / 2.0)
}

/// Conductance floor min{b/8, b²√c/(16·6√3)} with b = b_of_c(c).
pub fn k_of_c(c: f64) -> Result<f64> {
    let b = b_of_c(c)?;
    Ok((b / 8.0).min(b * b * c.sqrt() / (16.0 * k_factor())))
}

/// Spectral-gap floor k(c)²/2.
pub fn gap_bound(c: f64) -> Result<f64> {
    let k = k_of_c(c)?;
    Ok(k * k / 2.0)
}

/// Conductance floor from an acceptance floor `alpha0`, proposal scale
/// `sigma` and target spread: min{α₀/8, α₀²σ/(16·6√3·spread)}.
pub fn conductance_bound_a(alpha0: f64, sigma: f64, spread: f64) -> Result<f64> {
    if !(alpha0.is_finite() && alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::Domain(format!("acceptance floor must lie in (0,1], got {alpha0}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("proposal scale must be positive, got {sigma}")));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::Domain(format!("target spread must be positive, got {spread}")));
    }
    Ok((alpha0 / 8.0).min(alpha0 * alpha0 * sigma / (16.0 * k_factor() * spread)))
}

/// Sweeps needed to bring a chi-square-like divergence from `d2_init` below
/// `eps` when one sweep contracts it by (1 − C/(κ*·d)):
/// ⌈(κ*·d/C)·log(d2_init/eps)⌉.
pub fn mixing_time_bound(kappa_star: f64, d: u64, c_const: f64, d2_init: f64, eps: f64) -> Result<u64> {
    if !(kappa_star.is_finite() && kappa_star >= 1.0) {
        return Err(Error::Domain(format!("condition number must be ≥ 1, got {kappa_star}")));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(c_const.is_finite() && c_const > 0.0) {
        return Err(Error::Domain(format!("contraction constant must be positive, got {c_const}")));
    }
    if !(d2_init.is_finite() && d2_init > 0.0 && eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain("initial divergence and tolerance must be positive".into()));
    }
    if eps >= d2_init {
        return Err(Error::Domain(format!(
            "tolerance {eps} must be below the initial divergence {d2_init}"
        )));
    }
    let t = (kappa_star * d as f64 / c_const * (d2_init / eps).ln()).ceil();
    if !(t.is_finite() && t <= 9.0e18) {
        return Err(Error::Numeric(format!("mixing-time bound overflowed: {t}")));
    }
    Ok(t as u64)
}

/// Uniform grid of at least two points on [lo, hi].
#[derive(Debug, Clone)]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 points, got {n}")));
        }
        let delta = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|k| lo + k as f64 * delta).collect();
        points[n - 1] = hi;
        Ok(Grid1D { points })
    }

    /// Grid spanning mode ± 8·sd of the density exp(−u)/Z.
    pub fn for_potential<P: Potential1D + ?Sized>(pot: &P, n: usize) -> Result<Self> {
        let (mode, _, var) = model::density_moments(pot)?;
        let s = var.sqrt();
        Grid1D::new(mode - 8.0 * s, mode + 8.0 * s, n)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delta(&self) -> f64 {
        self.points[1] - self.points[0]
    }
}

/// Finite-state reversible transition kernel with its stationary law.
///
/// Construction enforces: square shape, nonnegative entries, unit row sums
/// (1e−10), strictly positive normalized stationary weights, and detailed
/// balance to 1e−10 relative (with an absolute floor well below any
/// representable flow, so that cleanly underflowed tail flows pass).
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl DiscreteKernel {
    pub fn new(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = pi.len();
        if p.nrows() != n || p.ncols() != n || n < 2 {
            return Err(Error::Construction(format!(
                "kernel shape {}x{} incompatible with {n} stationary weights",
                p.nrows(),
                p.ncols()
            )));
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = p[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Construction(format!("P[{i},{j}] = {v} invalid")));
                }
                row_sum += v;
            }
            if (row_sum - 1.0).abs() > 1e-10 {
                return Err(Error::Construction(format!("row {i} sums to {row_sum}")));
            }
        }
        let total: f64 = pi.iter().sum();
        if !pi.iter().all(|v| v.is_finite() && *v > 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::Construction(
                "stationary weights must be positive and normalized".into(),
            ));
        }
        let pi: Vec<f64> = pi.iter().map(|v| v / total).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let fij = pi[i] * p[(i, j)];
                let fji = pi[j] * p[(j, i)];
                if (fij - fji).abs() > (1e-10 * fij.max(fji)).max(1e-300) {
                    return Err(Error::Construction(format!(
                        "detailed balance fails between states {i} and {j}: {fij} vs {fji}"
                    )));
                }
            }
        }
        Ok(DiscreteKernel { p, pi })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }
}

// States whose density lies more than e^{−700} below the peak underflow; a
// convex potential keeps the surviving index set contiguous.
const LOG_DENSITY_CAP: f64 = 700.0;

/// Discretize the Metropolis random walk with N(0, σ²) proposals targeting
/// exp(−u)/Z onto `grid`. Off-diagonal mass is Δ·φ_σ(x_j−x_i)·min{1,
/// e^{u_i−u_j}}; the diagonal takes the complement and must stay nonnegative,
/// otherwise the spacing is too coarse for σ and construction fails.
pub fn discretize_rwm<P: Potential1D + ?Sized>(
    pot: &P,
    sigma: f64,
    grid: &Grid1D,
) -> Result<DiscreteKernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("proposal sigma must be positive, got {sigma}")));
    }
    let all_u: Vec<f64> = grid.points().iter().map(|&x| pot.u(x)).collect();
    if !all_u.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("potential not finite over the grid".into()));
    }
    let umin = all_u.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = all_u.iter().position(|&v| v - umin <= LOG_DENSITY_CAP).unwrap();
    let hi = all_u.iter().rposition(|&v| v - umin <= LOG_DENSITY_CAP).unwrap();
    let xs = &grid.points()[lo..=hi];
    let u = &all_u[lo..=hi];
    let n = xs.len();
    if n < 2 {
        return Err(Error::Construction("grid retains fewer than 2 usable states".into()));
    }
    let delta = grid.delta();
    let log_norm = -(sigma * (2.0 * PI).sqrt()).ln();
    let inv_two_sig2 = 1.0 / (2.0 * sigma * sigma);

    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off_sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let z = xs[j] - xs[i];
            let log_acc = if u[i] >= u[j] { 0.0 } else { u[i] - u[j] };
            let v = delta * (log_norm - z * z * inv_two_sig2 + log_acc).exp();
            p[(i, j)] = v;
            off_sum += v;
        }
        let diag = 1.0 - off_sum;
        if diag < -1e-12 {
            return Err(Error::Construction(format!(
                "negative holding probability {diag:.3e} at state {i}: spacing {delta:.3e} \
                 is too coarse for proposal sigma {sigma:.3e}; use a finer grid"
            )));
        }
        p[(i, i)] = diag.max(0.0);
    }
    let w: Vec<f64> = u.iter().map(|&v| (-(v - umin)).exp()).collect();
    let wsum: f64 = w.iter().sum();
    let pi: Vec<f64> = w.iter().map(|v| v / wsum).collect();
    DiscreteKernel::new(p, pi)
}

fn symmetrized(kernel: &DiscreteKernel, sqrt_pi: &[f64]) -> DMatrix<f64> {
    let n = kernel.dim();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = kernel.p[(i, j)] * sqrt_pi[i] / sqrt_pi[j];
        }
    }
    // detailed balance makes this symmetric up to roundoff; enforce exactly
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Spectral gap 1 − λ₂ of a reversible kernel, via the similar symmetric
/// matrix D^{1/2} P D^{−1/2}. Dense eigensolve up to 256 states, deflated
/// Lanczos above. The known top eigenpair (1, √π) is verified first.
pub fn spectral_gap(kernel: &DiscreteKernel) -> Result<f64> {
    let n = kernel.dim();
    let sqrt_pi: Vec<f64> = kernel.pi.iter().map(|v| v.sqrt()).collect();
    let s = symmetrized(kernel, &sqrt_pi);
    let mut sv = vec![0.0; n];
    lanczos::SymOp::apply(&s, &sqrt_pi, &mut sv);
    let top: f64 = sqrt_pi.iter().zip(&sv).map(|(a, b)| a * b).sum();
    if (top - 1.0).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "stationarity check failed: ⟨√π, S√π⟩ = {top}, expected 1"
        )));
    }
    let lam2 = if n <= 256 { second_eigenvalue_dense(&s)? } else { lanczos::top_eigenvalue_deflated(&s, &sqrt_pi)? };
    Ok(1.0 - lam2)
}

fn second_eigenvalue_dense(s: &DMatrix<f64>) -> Result<f64> {
    let ev = model::symmetric_eigenvalues_sorted(s);
    let n = ev.len();
    if (ev[n - 1] - 1.0).abs() > 1e-8 {
        return Err(Error::Numeric(format!("top eigenvalue {} should be 1", ev[n - 1])));
    }
    Ok(ev[n - 2])
}

#[cfg(test)]
fn spectral_gap_lanczos(kernel: &DiscreteKernel) -> Result<f64> {
    let sqrt_pi: Vec<f64> = kernel.pi.iter().map(|v| v.sqrt()).collect();
    let s = symmetrized(kernel, &sqrt_pi);
    Ok(1.0 - lanczos::top_eigenvalue_deflated(&s, &sqrt_pi)?)
}

/// Conductance estimate. `lower_bound = true` means the value is the exact
/// minimum over all cuts (feasible up to 20 states); otherwise only
/// threshold cuts in state order were searched, which upper-bounds the true
/// conductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductance {
    pub value: f64,
    pub lower_bound: bool,
}

pub fn conductance(kernel: &DiscreteKernel) -> Conductance {
    if kernel.dim() <= 20 {
        Conductance { value: exhaustive_conductance(kernel), lower_bound: true }
    } else {
        Conductance { value: threshold_conductance(kernel), lower_bound: false }
    }
}

/// Minimum flow ratio over the n−1 threshold cuts {0..k} | {k+1..n−1}.
/// Cut flows are assembled purely from sums of nonnegative terms (row
/// suffixes accumulated right to left), so deep-tail cuts whose flow is
/// hundreds of orders below the bulk never suffer cancellation.
pub fn threshold_conductance(kernel: &DiscreteKernel) -> f64 {
    let n = kernel.dim();
    let (p, pi) = (&kernel.p, &kernel.pi);
    // row_suf[i*n + k] = Σ_{j>k} π_i P_ij
    let mut row_suf = vec![0.0f64; n * n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in (1..n).rev() {
            acc += pi[i] * p[(i, j)];
            row_suf[i * n + j - 1] = acc;
        }
    }
    // suffix masses are summed directly; 1−mass would cancel once the
    // prefix holds nearly all of π
    let mut tail = vec![0.0f64; n];
    for k in (0..n - 1).rev() {
        tail[k] = tail[k + 1] + pi[k + 1];
    }
    let mut best = f64::INFINITY;
    let mut mass = 0.0;
    for k in 0..n - 1 {
        mass += pi[k];
        let mut flow = 0.0;
        for i in 0..=k {
            flow += row_suf[i * n + k];
        }
        let denom = mass.min(tail[k]);
        if denom > 0.0 {
            best = best.min(flow / denom);
        }
    }
    best
}

// Every proper subset not containing the last state, visited in Gray-code
// order so each step toggles one state in or out of the cut.
fn exhaustive_conductance(kernel: &DiscreteKernel) -> f64 {
    let n = kernel.dim();
    debug_assert!((2..=20).contains(&n));
    let (p, pi) = (&kernel.p, &kernel.pi);
    let flow_of = |i: usize, j: usize| pi[i] * p[(i, j)];

    let mut in_a = vec![false; n];
    let mut mass = 0.0f64;
    let mut flow = 0.0f64;
    let mut best = f64::INFINITY;
    let subsets: u64 = 1 << (n - 1);
    for g in 1..subsets {
        let t = g.trailing_zeros() as usize;
        if !in_a[t] {
            in_a[t] = true;
            mass += pi[t];
            for j in 0..n {
                if j == t {
                    continue;
                }
                if in_a[j] {
                    flow -= flow_of(j, t);
                } else {
                    flow += flow_of(t, j);
                }
            }
        } else {
            in_a[t] = false;
            mass -= pi[t];
            for j in 0..n {
                if j == t {
                    continue;
                }
                if in_a[j] {
                    flow += flow_of(j, t);
                } else {
                    flow -= flow_of(t, j);
                }
            }
        }
        // periodic exact restatement keeps incremental drift out of the result
        if g % 4096 == 0 {
            mass = (0..n).filter(|&i| in_a[i]).map(|i| pi[i]).sum();
            flow = exact_flow(n, &in_a, &flow_of);
        }
        let denom = mass.min(1.0 - mass);
        if denom > 0.0 && flow.max(0.0) / denom < best {
            // tail subsets carry mass and flow far below the incremental
            // roundoff, and 1−mass cancels for near-full subsets; an
            // apparent improvement is re-derived from scratch, summing each
            // side's mass directly, before it may become the minimum
            let mass_in: f64 = (0..n).filter(|&i| in_a[i]).map(|i| pi[i]).sum();
            let mass_out: f64 = (0..n).filter(|&i| !in_a[i]).map(|i| pi[i]).sum();
            let exact_denom = mass_in.min(mass_out);
            if exact_denom > 0.0 {
                best = best.min(exact_flow(n, &in_a, &flow_of) / exact_denom);
            }
        }
    }
    best
}

fn exact_flow(n: usize, in_a: &[bool], flow_of: &impl Fn(usize, usize) -> f64) -> f64 {
    (0..n)
        .filter(|&i| in_a[i])
        .map(|i| (0..n).filter(|&j| !in_a[j]).map(|j| flow_of(i, j)).sum::<f64>())
        .sum()
}

/// Mean acceptance probability of a N(0,σ²) move launched from x, with the
/// proposal truncated to |z| ≤ 8σ:
/// a(x) = ∫ φ_σ(z) · min{1, e^{u(x) − u(x+z)}} dz.
/// The integrand kinks where u(x+z) crosses u(x); both crossing points are
/// located first and the quadrature runs on the smooth pieces.
pub fn acceptance_rate<P: Potential1D + ?Sized>(pot: &P, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("proposal sigma must be positive, got {sigma}")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("start point must be finite, got {x}")));
    }
    let ux = pot.u(x);
    if !ux.is_finite() {
        return Err(Error::Domain(format!("potential not finite at {x}")));
    }
    let lim = 8.0 * sigma;
    let z_lo = -sublevel_edge(pot, x, ux, -1.0, lim);
    let z_hi = sublevel_edge(pot, x, ux, 1.0, lim);

    let log_norm = -(sigma * (2.0 * PI).sqrt()).ln();
    let inv_two_sig2 = 1.0 / (2.0 * sigma * sigma);
    let f = |z: f64| {
        let du = ux - pot.u(x + z);
        let log_acc = if du >= 0.0 { 0.0 } else { du };
        (log_norm - z * z * inv_two_sig2 + log_acc).exp()
    };

    let mut total = 0.0;
    if z_lo > -lim {
        total += quad::integrate(f, -lim, z_lo, 1e-9, 1e-13)?;
    }
    if z_hi > z_lo {
        total += quad::integrate(f, z_lo, z_hi, 1e-9, 1e-13)?;
    }
    if z_hi < lim {
        total += quad::integrate(f, z_hi, lim, 1e-9, 1e-13)?;
    }
    Ok(total)
}

// Largest t in [0, lim] with u(x + dir·t) ≤ u(x); convexity makes the
// sublevel set on each side an interval, so plain bisection applies.
fn sublevel_edge<P: Potential1D + ?Sized>(pot: &P, x: f64, ux: f64, dir: f64, lim: f64) -> f64 {
    if dir * pot.du(x) >= 0.0 {
        return 0.0;
    }
    if pot.u(x + dir * lim) - ux <= 0.0 {
        return lim;
    }
    let (mut lo, mut hi) = (0.0f64, lim);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pot.u(x + dir * mid) - ux <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum of acceptance_rate over the grid, with σ² = c·Var(π).
pub fn min_acceptance<P: Potential1D + ?Sized>(pot: &P, c: f64, grid: &Grid1D) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("scale multiplier c must be positive, got {c}")));
    }
    let sigma = (c * model::var_1d(pot)?).sqrt();
    let mut best = f64::INFINITY;
    for &x in grid.points() {
        let a = acceptance_rate(pot, sigma, x)?;
        best = best.min(a);
    }
    Ok(best)
}

/// Normalized curvature probe: returns (s, value) with s = sd(π) and
/// value = min{u(x*−s), u(x*+s)} − u(x*). The acceptance floor b(c) is valid
/// whenever value ≤ 2.6.
pub fn u1_check<P: Potential1D + ?Sized>(pot: &P) -> Result<(f64, f64)> {
    let (mode, _, var) = model::density_moments(pot)?;
    let resid = pot.du(mode).abs();
    if resid > 1e-8 {
        return Err(Error::Numeric(format!("mode residual |u'({mode})| = {resid} too large")));
    }
    let s = var.sqrt();
    let value = pot.u(mode - s).min(pot.u(mode + s)) - pot.u(mode);
    Ok((s, value))
}

/// Reject potentials whose derivative decreases anywhere along the grid.
pub fn verify_convex<P: Potential1D + ?Sized>(pot: &P, grid: &Grid1D) -> Result<()> {
    let d: Vec<f64> = grid.points().iter().map(|&x| pot.du(x)).collect();
    if !d.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("derivative not finite over the grid".into()));
    }
    let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for k in 0..d.len() - 1 {
        if d[k + 1] < d[k] - 1e-9 * scale {
            return Err(Error::Domain(format!(
                "potential is not convex: derivative decreases near x = {:.6}",
                grid.points()[k]
            )));
        }
    }
    Ok(())
}

/// A named one-dimensional test potential, convexity-verified at build time.
pub struct NamedPotential {
    pub name: &'static str,
    pub pot: Box<dyn Potential1D + Send + Sync>,
}

/// The built-in log-concave test family: Gaussian, pure quartic, mixed
/// quadratic-quartic, smoothed-exponential, four logistic conditionals with
/// a unit-Gaussian prior, and a cubed-softplus perturbation of the Gaussian.
pub fn builtin_family() -> Result<Vec<NamedPotential>> {
    fn boxed<P: Potential1D + Send + Sync + 'static>(p: P) -> Box<dyn Potential1D + Send + Sync> {
        Box::new(p)
    }
    let fam: Vec<NamedPotential> = vec![
        NamedPotential { name: "gauss", pot: boxed(Quadratic::standard()) },
        NamedPotential {
            name: "quartic",
            pot: boxed(model::FnPotential::new(|x: f64| x.powi(4), |x: f64| 4.0 * x.powi(3))),
        },
        NamedPotential {
            name: "quad_quartic",
            pot: boxed(model::FnPotential::new(
                |x: f64| 0.5 * x * x + 0.25 * x.powi(4),
                |x: f64| x + x.powi(3),
            )),
        },
        NamedPotential {
            name: "exp_linear",
            pot: boxed(model::FnPotential::new(
                |x: f64| (-x).exp() + x - 1.0,
                |x: f64| 1.0 - (-x).exp(),
            )),
        },
        NamedPotential { name: "logistic_n4_y0", pot: boxed(model::logistic_cond_potential(0, 4, 0.0)?) },
        NamedPotential { name: "logistic_n4_y2", pot: boxed(model::logistic_cond_potential(2, 4, 0.0)?) },
        NamedPotential { name: "logistic_n64_y0", pot: boxed(model::logistic_cond_potential(0, 64, 0.0)?) },
        NamedPotential {
            name: "logistic_n64_y32",
            pot: boxed(model::logistic_cond_potential(32, 64, 0.0)?),
        },
        NamedPotential {
            name: "cubic_softplus",
            pot: boxed(model::FnPotential::new(
                |x: f64| 0.5 * x * x + 0.3 * model::softplus(x).powi(3),
                |x: f64| {
                    x + 0.9 * model::softplus(x).powi(2) * model::sigmoid(x)
                },
            )),
        },
    ];
    for member in &fam {
        let grid = Grid1D::for_potential(&member.pot, 2001)?;
        verify_convex(&member.pot, &grid).map_err(|e| {
            Error::Domain(format!("family member {} failed validation: {e}", member.name))
        })?;
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss_kernel(n: usize) -> DiscreteKernel {
        let grid = Grid1D::new(-8.0, 8.0, n).unwrap();
        discretize_rwm(&Quadratic::standard(), 1.0, &grid).unwrap()
    }

    #[test]
    fn bound_constants_match_reference() {
        assert_relative_eq!(k_factor(), 10.392304845413264, max_relative = 1e-15);
        assert_relative_eq!(b_of_c(0.25).unwrap(), 0.00032916923965814897, max_relative = 1e-14);
        assert_relative_eq!(b_of_c(1.0).unwrap(), 0.00480986763591154, max_relative = 1e-14);
        assert_relative_eq!(b_of_c(2.25).unwrap(), 0.0059906771777172101, max_relative = 1e-14);
        assert_relative_eq!(b_of_c(4.0).unwrap(), 0.0055916386551033819, max_relative = 1e-14);
        assert_relative_eq!(k_of_c(0.25).unwrap(), 3.2581916965509042e-10, max_relative = 1e-13);
        assert_relative_eq!(k_of_c(1.0).unwrap(), 1.3913435842146237e-7, max_relative = 1e-13);
        assert_relative_eq!(k_of_c(4.0).unwrap(), 3.7607661767935521e-7, max_relative = 1e-13);
        assert_relative_eq!(gap_bound(1.0).unwrap(), 9.6791848466759791e-15, max_relative = 1e-13);
        // the acceptance floor peaks near c = 2.25 and vanishes in both limits
        assert!(b_of_c(2.25).unwrap() > b_of_c(2.0).unwrap());
        assert!(b_of_c(2.25).unwrap() > b_of_c(2.5).unwrap());
        // vanishes fast to the left (essential singularity), slowly (c^{−1/2})
        // to the right
        assert!(b_of_c(1e-4).unwrap() < 1e-30);
        assert!(b_of_c(1e4).unwrap() < 1e-3);
        assert!(b_of_c(1e10).unwrap() < 1e-6);
        for c in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(b_of_c(c).is_err());
            assert!(k_of_c(c).is_err());
        }
        // k never exceeds its first branch b/8
        for c in [0.1, 0.5, 1.0, 2.0, 8.0, 100.0] {
            assert!(k_of_c(c).unwrap() <= b_of_c(c).unwrap() / 8.0 + 1e-300);
        }
    }

    #[test]
    fn acceptance_conductance_bound_examples() {
        assert_relative_eq!(
            conductance_bound_a(1.0, 1.0, 1.0).unwrap(),
            0.0060140653040586017,
            max_relative = 1e-14
        );
        // joint rescaling of sigma and spread cancels exactly for powers of two
        let base = conductance_bound_a(0.3, 1.5, 2.5).unwrap();
        assert_eq!(conductance_bound_a(0.3, 3.0, 5.0).unwrap(), base);
        assert_relative_eq!(
            conductance_bound_a(0.3, 1.5e-3, 2.5e-3).unwrap(),
            base,
            max_relative = 1e-12
        );
        assert!(conductance_bound_a(1e-30, 1.0, 1.0).unwrap() < 1e-9);
        assert!(conductance_bound_a(0.0, 1.0, 1.0).is_err());
        assert!(conductance_bound_a(1.5, 1.0, 1.0).is_err());
        assert!(conductance_bound_a(0.5, 0.0, 1.0).is_err());
        assert!(conductance_bound_a(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn mixing_time_examples() {
        assert_eq!(mixing_time_bound(2.0, 10, 0.5, 1e6, 1.0).unwrap(), 553);
        assert_eq!(mixing_time_bound(1.0, 1, 1.0, std::f64::consts::E, 1.0).unwrap(), 1);
        // doubling the dimension doubles the bound up to ceiling effects
        let t1 = mixing_time_bound(2.0, 100, 0.5, 1e6, 1.0).unwrap();
        let t2 = mixing_time_bound(2.0, 200, 0.5, 1e6, 1.0).unwrap();
        assert!((t2 as f64 - 2.0 * t1 as f64).abs() <= 2.0);
        assert!(mixing_time_bound(2.0, 10, 0.5, 1.0, 1.0).is_err());
        assert!(mixing_time_bound(0.5, 10, 0.5, 1e6, 1.0).is_err());
        assert!(mixing_time_bound(2.0, 0, 0.5, 1e6, 1.0).is_err());
        assert!(mixing_time_bound(2.0, 10, 0.0, 1e6, 1.0).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = Grid1D::new(-2.0, 3.0, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.points()[0], -2.0);
        assert_eq!(g.points()[10], 3.0);
        let d = g.delta();
        for w in g.points().windows(2) {
            assert!((w[1] - w[0] - d).abs() < 1e-12 * 5.0);
        }
        let gp = Grid1D::for_potential(&Quadratic::standard(), 401).unwrap();
        assert_relative_eq!(gp.points()[0], -8.0, epsilon = 1e-7);
        assert_relative_eq!(gp.points()[400], 8.0, epsilon = 1e-7);
        assert!(Grid1D::new(1.0, 1.0, 5).is_err());
        assert!(Grid1D::new(2.0, 1.0, 5).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(f64::NAN, 1.0, 5).is_err());
    }

    #[test]
    fn gauss_gap_matches_reference() {
        // 401 states exceeds the dense cutoff, so this exercises the
        // deflated Lanczos path against an independently computed value
        let k = gauss_kernel(401);
        assert_eq!(k.dim(), 401);
        let gap = spectral_gap(&k).unwrap();
        assert_relative_eq!(gap, 0.20187078826243843, max_relative = 1e-8);
        assert_relative_eq!(
            threshold_conductance(&k),
            0.20807678508326208,
            max_relative = 1e-8
        );
        let c = conductance(&k);
        assert!(!c.lower_bound);
        assert_relative_eq!(c.value, 0.20807678508326208, max_relative = 1e-8);
    }

    #[test]
    fn refinement_changes_gap_little() {
        let g401 = spectral_gap(&gauss_kernel(401)).unwrap();
        let g801 = spectral_gap(&gauss_kernel(801)).unwrap();
        assert_relative_eq!(g801, 0.20186899715617401, max_relative = 1e-8);
        let rel = (g401 - g801).abs() / g801;
        assert!(rel < 1e-4, "grid refinement moved the gap by {rel}");
    }

    #[test]
    fn dense_and_lanczos_paths_agree() {
        let k = gauss_kernel(161);
        let dense = spectral_gap(&k).unwrap();
        let lan = spectral_gap_lanczos(&k).unwrap();
        assert!((dense - lan).abs() < 1e-9, "dense {dense} vs lanczos {lan}");
    }

    #[test]
    fn small_gauss_kernel_frozen_values() {
        let k = gauss_kernel(12);
        assert_relative_eq!(spectral_gap(&k).unwrap(), 0.1763739105162172, max_relative = 1e-8);
        let c = conductance(&k);
        assert!(c.lower_bound);
        assert_relative_eq!(c.value, 0.18133426787777449, max_relative = 1e-8);
        // the optimal cut happens to be a threshold cut here
        let t = threshold_conductance(&k);
        assert_relative_eq!(t, c.value, max_relative = 1e-12);
    }

    #[test]
    fn toy_kernel_exact_values() {
        let p = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.3, 0.7]);
        let k = DiscreteKernel::new(p, vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(spectral_gap(&k).unwrap(), 0.6, epsilon = 1e-13);
        let c = conductance(&k);
        assert!(c.lower_bound);
        assert_relative_eq!(c.value, 0.3, epsilon = 1e-14);

        // independent rows: kernel jumps straight to stationarity, gap 1
        let pi = vec![0.2, 0.3, 0.5];
        let p = DMatrix::from_fn(3, 3, |_, j| pi[j]);
        let k = DiscreteKernel::new(p, pi).unwrap();
        assert_relative_eq!(spectral_gap(&k).unwrap(), 1.0, epsilon = 1e-12);

        let k = DiscreteKernel::new(DMatrix::identity(4, 4), vec![0.25; 4]).unwrap();
        assert_relative_eq!(spectral_gap(&k).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cheeger_sandwich_on_family_kernels() {
        for member in builtin_family().unwrap() {
            let grid = Grid1D::for_potential(&member.pot, 12).unwrap();
            let sigma = model::var_1d(&member.pot).unwrap().sqrt();
            let k = discretize_rwm(&member.pot, sigma, &grid).unwrap();
            let gap = spectral_gap(&k).unwrap();
            let phi = conductance(&k);
            assert!(phi.lower_bound);
            assert!(
                phi.value * phi.value / 2.0 <= gap + 1e-12 && gap <= 2.0 * phi.value + 1e-12,
                "{}: gap {gap} outside [{}, {}]",
                member.name,
                phi.value * phi.value / 2.0,
                2.0 * phi.value
            );
        }
    }

    #[test]
    fn steep_tail_states_are_trimmed() {
        let fam = builtin_family().unwrap();
        let exp_linear = fam.iter().find(|m| m.name == "exp_linear").unwrap();
        let grid = Grid1D::for_potential(&exp_linear.pot, 401).unwrap();
        let k = discretize_rwm(&exp_linear.pot, 1.0, &grid).unwrap();
        assert!(
            (300..=360).contains(&k.dim()),
            "expected the left tail to be trimmed, got {} states",
            k.dim()
        );
        assert!(k.stationary().iter().all(|&v| v > 0.0));
        let gap = spectral_gap(&k).unwrap();
        assert!(gap > 0.0 && gap < 1.0);
    }

    #[test]
    fn holding_probabilities_stay_nonnegative_across_sigma() {
        // the lattice Gaussian sum minus its center term stays below one for
        // every σ/Δ ratio, so the diagonal guard never fires for legitimate
        // inputs; the sweep pins that down from extremely coarse to fine
        let grid = Grid1D::new(-8.0, 8.0, 101).unwrap();
        for sigma in [1e-3, 0.05, 0.16, 0.5, 2.0, 50.0] {
            let k = discretize_rwm(&Quadratic::standard(), sigma, &grid).unwrap();
            for i in 0..k.dim() {
                assert!(k.transition()[(i, i)] >= 0.0);
            }
        }
    }

    #[test]
    fn acceptance_rate_reference_values() {
        let g = Quadratic::standard();
        assert_relative_eq!(
            acceptance_rate(&g, 1.0, 0.0).unwrap(),
            0.70710678118654752,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            acceptance_rate(&g, 1.0, 8.0).unwrap(),
            0.54843662275277936,
            max_relative = 1e-8
        );
        // reference computed with a quadrature that does not isolate the
        // interior kink, so it is only good to its own 1e−6 tolerance
        let quartic = model::FnPotential::new(|x: f64| x.powi(4), |x: f64| 4.0 * x.powi(3));
        assert_relative_eq!(
            acceptance_rate(&quartic, 0.58136831701911858, 0.5).unwrap(),
            0.74870927673807546,
            max_relative = 5e-7
        );
        assert!(acceptance_rate(&g, -1.0, 0.0).is_err());
        assert!(acceptance_rate(&g, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn min_acceptance_matches_reference_and_translates() {
        let grid = Grid1D::for_potential(&Quadratic::standard(), 401).unwrap();
        let m = min_acceptance(&Quadratic::standard(), 1.0, &grid).unwrap();
        assert!((m - 0.548441).abs() < 5e-6, "min acceptance {m}");
        assert!(m >= b_of_c(1.0).unwrap());

        let shifted = Quadratic { center: 5.0, precision: 1.0 };
        let grid_s = Grid1D::for_potential(&shifted, 401).unwrap();
        let ms = min_acceptance(&shifted, 1.0, &grid_s).unwrap();
        assert_relative_eq!(ms, m, max_relative = 1e-8);
        assert!(min_acceptance(&Quadratic::standard(), 0.0, &grid).is_err());
    }

    #[test]
    fn curvature_probe_reference_values() {
        let fam = builtin_family().unwrap();
        let expect = [
            ("gauss", 0.5),
            ("quartic", 0.11423664526111591),
            ("quad_quartic", 0.28869722066199303),
            ("exp_linear", 0.55987908580087162),
            ("logistic_n4_y0", 0.49098593406270613),
            ("logistic_n4_y2", 0.52311567785764716),
            ("logistic_n64_y0", 0.46693395752910241),
            ("logistic_n64_y32", 0.50579077542086306),
            ("cubic_softplus", 0.43028997564549409),
        ];
        for (name, want) in expect {
            let member = fam.iter().find(|m| m.name == name).unwrap();
            let (s, v) = u1_check(&member.pot).unwrap();
            assert!(s > 0.0);
            assert_relative_eq!(v, want, max_relative = 1e-6);
            assert!(v <= 2.6, "{name}: curvature probe {v} exceeds 2.6");
        }
    }

    #[test]
    fn family_moments_match_reference() {
        let fam = builtin_family().unwrap();
        assert_eq!(fam.len(), 9);
        let expect = [
            ("gauss", 0.0, 1.0),
            ("quartic", 0.0, 0.33798912003364236),
            ("quad_quartic", 0.0, 0.46791991697366519),
            ("exp_linear", 0.0, 1.6449340668482264),
            ("logistic_n4_y0", -1.0425969140005579, 0.58658313867933466),
            ("logistic_n4_y2", 0.0, 0.52874262207472884),
            ("logistic_n64_y0", -3.0090878714715487, 0.26973655692910289),
            ("logistic_n64_y32", 0.0, 0.059643749876944122),
            ("cubic_softplus", -0.15795452832827084, 0.71612483692430873),
        ];
        for (name, mode, var) in expect {
            let member = fam.iter().find(|m| m.name == name).unwrap();
            let (m, _, v) = model::density_moments(&member.pot).unwrap();
            assert!((m - mode).abs() < 1e-6, "{name}: mode {m} vs {mode}");
            assert_relative_eq!(v, var, max_relative = 1e-6);
        }
    }

    #[test]
    fn convexity_check_rejects_concave_and_wavy() {
        let grid = Grid1D::new(-4.0, 4.0, 201).unwrap();
        let concave = model::FnPotential::new(|x: f64| -x * x, |x: f64| -2.0 * x);
        assert!(verify_convex(&concave, &grid).is_err());
        let wavy = model::FnPotential::new(
            |x: f64| 0.5 * x * x + 2.0 * x.sin(),
            |x: f64| x + 2.0 * x.cos(),
        );
        assert!(verify_convex(&wavy, &grid).is_err());
        assert!(verify_convex(&Quadratic::standard(), &grid).is_ok());
    }

    #[test]
    fn kernel_validation_rejects_malformed_inputs() {
        let ok = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.3, 0.7]);
        assert!(DiscreteKernel::new(ok.clone(), vec![0.5, 0.5, 0.0]).is_err());
        assert!(DiscreteKernel::new(ok.clone(), vec![0.5, 0.0]).is_err());
        assert!(DiscreteKernel::new(ok.clone(), vec![0.7, 0.5]).is_err());
        let bad_rows = DMatrix::from_row_slice(2, 2, &[0.6, 0.3, 0.3, 0.7]);
        assert!(DiscreteKernel::new(bad_rows, vec![0.5, 0.5]).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[1.1, -0.1, 0.3, 0.7]);
        assert!(DiscreteKernel::new(negative, vec![0.5, 0.5]).is_err());
        // row-stochastic but the flows are out of balance with these weights
        let skew = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4]);
        assert!(DiscreteKernel::new(skew, vec![0.5, 0.5]).is_err());
    }
}
