//! Target distributions: 1D log-concave potentials, multivariate Gaussians,
//! and the hierarchical logistic posterior, with per-coordinate conditional
//! access and curvature metadata.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quad;

/// A continuously differentiable strictly convex potential u on the real line;
/// the target density is proportional to exp(−u).
pub trait Potential1D {
    fn u(&self, x: f64) -> f64;
    fn du(&self, x: f64) -> f64;
    /// Optional starting point for minimizer searches.
    fn mode_hint(&self) -> Option<f64> {
        None
    }
}

impl<P: Potential1D + ?Sized> Potential1D for &P {
    fn u(&self, x: f64) -> f64 {
        (**self).u(x)
    }
    fn du(&self, x: f64) -> f64 {
        (**self).du(x)
    }
    fn mode_hint(&self) -> Option<f64> {
        (**self).mode_hint()
    }
}

impl Potential1D for Box<dyn Potential1D + Send + Sync> {
    fn u(&self, x: f64) -> f64 {
        (**self).u(x)
    }
    fn du(&self, x: f64) -> f64 {
        (**self).du(x)
    }
    fn mode_hint(&self) -> Option<f64> {
        (**self).mode_hint()
    }
}

/// log(1 + e^x) without overflow: max(x,0) + log1p(e^{−|x|}).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function, evaluated on the side that avoids overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// u(x) = precision·(x − center)²/2.
#[derive(Clone, Copy, Debug)]
pub struct Quadratic {
    pub center: f64,
    pub precision: f64,
}

impl Quadratic {
    pub fn standard() -> Self {
        Quadratic { center: 0.0, precision: 1.0 }
    }
}

impl Potential1D for Quadratic {
    fn u(&self, x: f64) -> f64 {
        let z = x - self.center;
        0.5 * self.precision * z * z
    }
    fn du(&self, x: f64) -> f64 {
        self.precision * (x - self.center)
    }
    fn mode_hint(&self) -> Option<f64> {
        Some(self.center)
    }
}

/// Conditional potential of one group effect in the hierarchical logistic
/// model: u(θ) = −y·θ + n·softplus(θ) + (θ − μ)²/2.
#[derive(Clone, Copy, Debug)]
pub struct LogisticCond {
    pub y: u32,
    pub n: u32,
    pub mu: f64,
}

impl Potential1D for LogisticCond {
    fn u(&self, x: f64) -> f64 {
        let z = x - self.mu;
        -(self.y as f64) * x + self.n as f64 * softplus(x) + 0.5 * z * z
    }
    fn du(&self, x: f64) -> f64 {
        -(self.y as f64) + self.n as f64 * sigmoid(x) + (x - self.mu)
    }
}

/// Validated constructor for [`LogisticCond`].
pub fn logistic_cond_potential(y: u32, n: u32, mu: f64) -> Result<LogisticCond> {
    if y > n {
        return Err(Error::Domain(format!("success count y={y} exceeds trial count n={n}")));
    }
    if !mu.is_finite() {
        return Err(Error::Domain("mu must be finite".into()));
    }
    Ok(LogisticCond { y, n, mu })
}

/// Potential built from closures; the general escape hatch for test targets.
#[derive(Clone, Copy)]
pub struct FnPotential<U, D> {
    u: U,
    du: D,
    mode_hint: Option<f64>,
}

impl<U: Fn(f64) -> f64, D: Fn(f64) -> f64> FnPotential<U, D> {
    pub fn new(u: U, du: D) -> Self {
        FnPotential { u, du, mode_hint: None }
    }
    pub fn with_mode_hint(mut self, hint: f64) -> Self {
        self.mode_hint = Some(hint);
        self
    }
}

impl<U: Fn(f64) -> f64, D: Fn(f64) -> f64> Potential1D for FnPotential<U, D> {
    fn u(&self, x: f64) -> f64 {
        (self.u)(x)
    }
    fn du(&self, x: f64) -> f64 {
        (self.du)(x)
    }
    fn mode_hint(&self) -> Option<f64> {
        self.mode_hint
    }
}

/// Locate the minimizer of a strictly convex potential by derivative
/// bisection, to |du| < 1e−10. The bracket search is capped at ±1e6.
pub fn find_mode<P: Potential1D + ?Sized>(pot: &P) -> Result<f64> {
    const CAP: f64 = 1e6;
    const DTOL: f64 = 1e-10;
    let start = pot.mode_hint().unwrap_or(0.0);
    let d0 = pot.du(start);
    if d0.abs() < DTOL {
        return Ok(start);
    }
    if !d0.is_finite() {
        return Err(Error::Domain(format!("du not finite at {start}")));
    }
    // Walk downhill in doubling steps until the derivative changes sign.
    let (mut lo, mut hi);
    let mut step = 1.0;
    if d0 > 0.0 {
        hi = start;
        lo = start - step;
        while pot.du(lo) > 0.0 {
            step *= 2.0;
            lo = start - step;
            if lo < -CAP {
                return Err(Error::Domain("minimizer not bracketed in [-1e6, 1e6]".into()));
            }
        }
    } else {
        lo = start;
        hi = start + step;
        while pot.du(hi) < 0.0 {
            step *= 2.0;
            hi = start + step;
            if hi > CAP {
                return Err(Error::Domain("minimizer not bracketed in [-1e6, 1e6]".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = pot.du(mid);
        if d.abs() < DTOL {
            return Ok(mid);
        }
        if d > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if pot.du(mid).abs() < DTOL {
        Ok(mid)
    } else {
        Err(Error::Numeric(format!("derivative bisection stalled at {mid}")))
    }
}

/// Mode, mean and variance of the density ∝ exp(−u).
///
/// The integration window [mode−R, mode+R] grows until the exponential
/// majorant bound on each tail, e^{−Δu(edge)}/|du(edge)|, is below 1e−13 of
/// the running mass estimate.
pub(crate) fn density_moments<P: Potential1D + ?Sized>(pot: &P) -> Result<(f64, f64, f64)> {
    let mode = find_mode(pot)?;
    let u0 = pot.u(mode);
    let f = |x: f64| (-(pot.u(x) - u0)).exp();

    let mut r = 1.0;
    loop {
        let (a, b) = (mode - r, mode + r);
        // crude 32-panel mass estimate for the relative cutoff
        let mut mass = 0.0;
        let h = (b - a) / 32.0;
        for i in 0..32 {
            mass += h * f(a + (i as f64 + 0.5) * h);
        }
        let dl = pot.du(a);
        let dr = pot.du(b);
        if dl < 0.0 && dr > 0.0 {
            let tail = (f(a) / dl.abs()).max(f(b) / dr);
            if tail < 1e-13 * mass {
                break;
            }
        }
        r *= 2.0;
        if r > 1e8 {
            return Err(Error::Numeric("integration window for density moments exceeded 1e8".into()));
        }
    }

    let (a, b) = (mode - r, mode + r);
    let m0 = quad::integrate(f, a, mode, 1e-10, 0.0)? + quad::integrate(f, mode, b, 1e-10, 0.0)?;
    let g1 = |x: f64| (x - mode) * f(x);
    let abs1 = 1e-12 * m0 * r;
    let m1 = (quad::integrate(g1, a, mode, 1e-10, abs1)? + quad::integrate(g1, mode, b, 1e-10, abs1)?) / m0;
    let g2 = |x: f64| (x - mode) * (x - mode) * f(x);
    let abs2 = 1e-12 * m0 * r * r;
    let m2 = (quad::integrate(g2, a, mode, 1e-10, abs2)? + quad::integrate(g2, mode, b, 1e-10, abs2)?) / m0;
    let var = m2 - m1 * m1;
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Numeric(format!("degenerate variance {var}")));
    }
    Ok((mode, mode + m1, var))
}

/// Variance of the normalized density exp(−u)/Z, to 1e−8 relative.
pub fn var_1d<P: Potential1D + ?Sized>(pot: &P) -> Result<f64> {
    density_moments(pot).map(|(_, _, v)| v)
}

/// A d-dimensional target exposing one-dimensional conditionals.
///
/// `cond_potential` receives the full state vector and ignores coordinate `m`;
/// `exact_cond` returns (mean, variance) when the conditional is Gaussian.
pub trait TargetModel: Sync {
    type Cond: Potential1D;

    fn dim(&self) -> usize;
    fn cond_potential(&self, m: usize, x: &[f64]) -> Self::Cond;
    fn exact_cond(&self, m: usize, x: &[f64]) -> Option<(f64, f64)> {
        let _ = (m, x);
        None
    }
    /// Per-coordinate curvature upper bounds, used by smoothness-scaled proposals.
    fn smoothness(&self) -> Vec<f64>;
}

/// Mean and variance of μ given the group effects: N(Σθ/(J+1), 1/(J+1)).
pub fn mu_cond_params(theta: &[f64]) -> Result<(f64, f64)> {
    if theta.is_empty() {
        return Err(Error::Domain("mu conditional needs at least one group".into()));
    }
    let jp1 = (theta.len() + 1) as f64;
    Ok((theta.iter().sum::<f64>() / jp1, 1.0 / jp1))
}

/// Curvature bound of a logistic conditional with n observations: 1 + n/4.
pub fn condition_number_logistic(n: u32) -> f64 {
    1.0 + n as f64 / 4.0
}

/// Multivariate Gaussian with density ∝ exp(−x'Ax/2).
pub struct GaussianTarget {
    a: DMatrix<f64>,
}

impl GaussianTarget {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        check_spd(&a)?;
        Ok(GaussianTarget { a })
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn cond_mean_prec(&self, m: usize, x: &[f64]) -> (f64, f64) {
        let amm = self.a[(m, m)];
        let mut cross = 0.0;
        for k in 0..x.len() {
            if k != m {
                cross += self.a[(m, k)] * x[k];
            }
        }
        (-cross / amm, amm)
    }
}

impl TargetModel for GaussianTarget {
    type Cond = Quadratic;

    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn cond_potential(&self, m: usize, x: &[f64]) -> Quadratic {
        let (center, precision) = self.cond_mean_prec(m, x);
        Quadratic { center, precision }
    }

    fn exact_cond(&self, m: usize, x: &[f64]) -> Option<(f64, f64)> {
        let (mean, prec) = self.cond_mean_prec(m, x);
        Some((mean, 1.0 / prec))
    }

    fn smoothness(&self) -> Vec<f64> {
        (0..self.a.nrows()).map(|m| self.a[(m, m)]).collect()
    }
}

/// Wrapper that hides a model's exact conditionals, forcing RWM updates on
/// every coordinate.
pub struct RwmOnly<M>(pub M);

impl<M: TargetModel> TargetModel for RwmOnly<M> {
    type Cond = M::Cond;

    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn cond_potential(&self, m: usize, x: &[f64]) -> M::Cond {
        self.0.cond_potential(m, x)
    }
    fn smoothness(&self) -> Vec<f64> {
        self.0.smoothness()
    }
}

/// A 1D potential as a sampling target.
pub struct PotentialTarget<P> {
    pot: P,
    smoothness: f64,
}

impl<P: Potential1D + Clone + Sync> PotentialTarget<P> {
    pub fn new(pot: P) -> Self {
        PotentialTarget { pot, smoothness: 1.0 }
    }
    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = l;
        self
    }
}

impl<P: Potential1D + Clone + Sync> TargetModel for PotentialTarget<P> {
    type Cond = P;

    fn dim(&self) -> usize {
        1
    }
    fn cond_potential(&self, _m: usize, _x: &[f64]) -> P {
        self.pot.clone()
    }
    fn smoothness(&self) -> Vec<f64> {
        vec![self.smoothness]
    }
}

/// Hierarchical logistic posterior. Coordinate 0 is μ, coordinates 1..=J are
/// the group effects; priors are θ_j|μ ~ N(μ,1), μ ~ N(0,1).
pub struct HierLogisticPosterior {
    n: u32,
    y: Vec<u32>,
}

/// Conditional of one coordinate of [`HierLogisticPosterior`].
#[derive(Clone, Copy, Debug)]
pub enum HierCond {
    Mu(Quadratic),
    Theta(LogisticCond),
}

impl Potential1D for HierCond {
    fn u(&self, x: f64) -> f64 {
        match self {
            HierCond::Mu(q) => q.u(x),
            HierCond::Theta(l) => l.u(x),
        }
    }
    fn du(&self, x: f64) -> f64 {
        match self {
            HierCond::Mu(q) => q.du(x),
            HierCond::Theta(l) => l.du(x),
        }
    }
    fn mode_hint(&self) -> Option<f64> {
        match self {
            HierCond::Mu(q) => q.mode_hint(),
            HierCond::Theta(l) => l.mode_hint(),
        }
    }
}

impl HierLogisticPosterior {
    pub fn new(n: u32, y: Vec<u32>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Domain("need at least one group".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| v > n) {
            return Err(Error::Domain(format!("success count {bad} exceeds n={n}")));
        }
        Ok(HierLogisticPosterior { n, y })
    }

    pub fn groups(&self) -> usize {
        self.y.len()
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn y(&self) -> &[u32] {
        &self.y
    }
}

impl TargetModel for HierLogisticPosterior {
    type Cond = HierCond;

    fn dim(&self) -> usize {
        self.y.len() + 1
    }

    fn cond_potential(&self, m: usize, x: &[f64]) -> HierCond {
        if m == 0 {
            let (mean, var) = mu_cond_params(&x[1..]).expect("J >= 1 by construction");
            HierCond::Mu(Quadratic { center: mean, precision: 1.0 / var })
        } else {
            HierCond::Theta(LogisticCond { y: self.y[m - 1], n: self.n, mu: x[0] })
        }
    }

    fn exact_cond(&self, m: usize, x: &[f64]) -> Option<(f64, f64)> {
        if m == 0 {
            mu_cond_params(&x[1..]).ok()
        } else {
            None
        }
    }

    fn smoothness(&self) -> Vec<f64> {
        let mut l = vec![(self.y.len() + 1) as f64];
        l.resize(self.y.len() + 1, condition_number_logistic(self.n));
        l
    }
}

/// κ* of a Gaussian precision matrix: 1/λ_min(D^{−1/2} A D^{−1/2}), D = diag(A).
pub fn kappa_star_gaussian(a: &DMatrix<f64>) -> Result<f64> {
    check_spd(a)?;
    let n = a.nrows();
    let dinv: Vec<f64> = (0..n).map(|i| 1.0 / a[(i, i)].sqrt()).collect();
    let mut b = a.clone();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] *= dinv[i] * dinv[j];
        }
    }
    let lam_min = symmetric_eigenvalues_sorted(&b)[0];
    if lam_min <= 0.0 {
        return Err(Error::Domain("precision matrix not positive definite".into()));
    }
    Ok(1.0 / lam_min)
}

pub(crate) fn check_spd(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Domain("precision matrix must be square and nonempty".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!("matrix not symmetric at ({i},{j})")));
            }
        }
    }
    if symmetric_eigenvalues_sorted(a)[0] <= 0.0 {
        return Err(Error::Domain("matrix not positive definite".into()));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues_sorted(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are real"));
    ev
}

/// Draw a synthetic dataset: θ_j ~ N(μ*, 1), y_j ~ Binomial(n, sigmoid(θ_j)),
/// by n Bernoulli draws per group. Deterministic given the seed.
pub fn sample_dataset(j: usize, n: u32, mu_star: f64, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..j)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let p = sigmoid(mu_star + z);
            (0..n).filter(|_| rng.random::<f64>() < p).count() as u32
        })
        .collect()
}
