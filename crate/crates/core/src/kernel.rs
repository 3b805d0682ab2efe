//! Coordinate-update kernels: one-dimensional random-walk Metropolis, exact
//! Gaussian conditional draws, the approximate-Gibbs inner loop, and the
//! random-scan composition that drives a full chain.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::adapt::rm_update;
use crate::error::{Error, Result};
use crate::model::{Potential1D, TargetModel};

/// Bounds on any realized proposal variance; Robbins–Monro clamps to this box.
pub const VAR_FLOOR: f64 = 1e-12;
pub const VAR_CEIL: f64 = 1e12;

/// Per-coordinate proposal scale rule.
#[derive(Clone, Debug)]
pub enum ProposalPolicy {
    /// σ_m given directly.
    FixedSigma { sigma: Vec<f64> },
    /// σ_m² = c·v̂_m with v̂ estimated marginal variances.
    PilotVariance { c: f64, vhat: Vec<f64> },
    /// log σ_m² adapted toward acceptance rate 0.4; `t` counts updates per
    /// coordinate; frozen policies ignore further observations.
    RobbinsMonro { log_var: Vec<f64>, t: Vec<u64>, frozen: bool },
    /// σ_m² = 25/L_m where L_m bounds the conditional curvature.
    SmoothnessScaled { l: Vec<f64> },
}

fn check_var_box(var: f64, what: &str) -> Result<()> {
    if !(var.is_finite() && var > VAR_FLOOR && var < VAR_CEIL) {
        return Err(Error::Construction(format!(
            "{what} variance {var:e} outside ({VAR_FLOOR:e}, {VAR_CEIL:e})"
        )));
    }
    Ok(())
}

impl ProposalPolicy {
    pub fn fixed_sigma(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::Construction("empty proposal vector".into()));
        }
        for s in &sigma {
            check_var_box(s * s, "proposal")?;
        }
        Ok(ProposalPolicy::FixedSigma { sigma })
    }

    pub fn pilot(c: f64, vhat: Vec<f64>) -> Result<Self> {
        if vhat.is_empty() {
            return Err(Error::Construction("empty pilot variance vector".into()));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Construction(format!("pilot scale c={c} must be positive")));
        }
        for v in &vhat {
            check_var_box(c * v, "pilot proposal")?;
        }
        Ok(ProposalPolicy::PilotVariance { c, vhat })
    }

    pub fn robbins_monro(init_var: Vec<f64>) -> Result<Self> {
        if init_var.is_empty() {
            return Err(Error::Construction("empty initial variance vector".into()));
        }
        for v in &init_var {
            check_var_box(*v, "initial adaptive")?;
        }
        let d = init_var.len();
        Ok(ProposalPolicy::RobbinsMonro {
            log_var: init_var.iter().map(|v| v.ln()).collect(),
            t: vec![0; d],
            frozen: false,
        })
    }

    pub fn smoothness_scaled(l: &[f64]) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::Construction("empty smoothness vector".into()));
        }
        for li in l {
            check_var_box(25.0 / li, "smoothness-scaled proposal")?;
        }
        Ok(ProposalPolicy::SmoothnessScaled { l: l.to_vec() })
    }

    pub fn dim(&self) -> usize {
        match self {
            ProposalPolicy::FixedSigma { sigma } => sigma.len(),
            ProposalPolicy::PilotVariance { vhat, .. } => vhat.len(),
            ProposalPolicy::RobbinsMonro { log_var, .. } => log_var.len(),
            ProposalPolicy::SmoothnessScaled { l } => l.len(),
        }
    }

    /// Proposal standard deviation for coordinate `m`.
    pub fn sigma(&self, m: usize) -> f64 {
        match self {
            ProposalPolicy::FixedSigma { sigma } => sigma[m],
            ProposalPolicy::PilotVariance { c, vhat } => (c * vhat[m]).sqrt(),
            ProposalPolicy::RobbinsMonro { log_var, .. } => (0.5 * log_var[m]).exp(),
            ProposalPolicy::SmoothnessScaled { l } => (25.0 / l[m]).sqrt(),
        }
    }

    /// Snapshot of every coordinate's current σ.
    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.dim()).map(|m| self.sigma(m)).collect()
    }

    /// Feed one acceptance indicator into the adaptation state. No-op for
    /// non-adaptive variants and frozen policies.
    pub fn observe(&mut self, m: usize, accepted: bool) {
        if let ProposalPolicy::RobbinsMonro { log_var, t, frozen } = self {
            if !*frozen {
                t[m] += 1;
                log_var[m] = rm_update(log_var[m], accepted, t[m]);
            }
        }
    }

    /// Stop adaptation permanently; the sampling phase must leave the target
    /// invariant, which a changing proposal would not.
    pub fn freeze(&mut self) {
        if let ProposalPolicy::RobbinsMonro { frozen, .. } = self {
            *frozen = true;
        }
    }
}

/// Accept/reject decision for a log acceptance ratio: true with probability
/// min{1, exp(log_ratio)}. −∞ always rejects; NaN is an error.
pub fn mh_accept<R: Rng>(log_ratio: f64, rng: &mut R) -> Result<bool> {
    if log_ratio.is_nan() {
        return Err(Error::Numeric("acceptance log-ratio is NaN".into()));
    }
    if log_ratio >= 0.0 {
        return Ok(true);
    }
    Ok(rng.random::<f64>() < log_ratio.exp())
}

/// One random-walk Metropolis update on the line: propose y = x + σξ, accept
/// via `mh_accept(u(x) − u(y))`. Returns the new position and the indicator.
pub fn rwm_step<P: Potential1D + ?Sized, R: Rng>(
    x: f64,
    pot: &P,
    sigma: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("proposal sigma must be positive, got {sigma}")));
    }
    let xi: f64 = rng.sample(StandardNormal);
    let y = x + sigma * xi;
    // u(y) = +∞ (overflow far in a tail) gives −∞ and a clean rejection
    let accepted = mh_accept(pot.u(x) - pot.u(y), rng)?;
    Ok(if accepted { (y, true) } else { (x, false) })
}

/// Chain position plus its private random stream.
pub struct ChainState {
    pub x: Vec<f64>,
    pub step_count: u64,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(dim: usize, seed: u64) -> Self {
        ChainState { x: vec![0.0; dim], step_count: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn with_x(x: Vec<f64>, seed: u64) -> Result<Self> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("state must be nonempty and finite".into()));
        }
        Ok(ChainState { x, step_count: 0, rng: ChaCha8Rng::seed_from_u64(seed) })
    }
}

/// One random-scan update: pick m uniformly; draw exactly from the conditional
/// when the model provides one, otherwise one RWM step at the policy's σ_m.
/// Returns (m, None) for an exact draw, (m, Some(accepted)) for RWM.
pub fn random_scan_step<M: TargetModel>(
    state: &mut ChainState,
    model: &M,
    policy: &mut ProposalPolicy,
) -> Result<(usize, Option<bool>)> {
    let d = model.dim();
    let m = state.rng.random_range(0..d);
    state.step_count += 1;
    if let Some((mean, var)) = model.exact_cond(m, &state.x) {
        let xi: f64 = state.rng.sample(StandardNormal);
        state.x[m] = mean + var.sqrt() * xi;
        Ok((m, None))
    } else {
        let pot = model.cond_potential(m, &state.x);
        let (xm, accepted) = rwm_step(state.x[m], &pot, policy.sigma(m), &mut state.rng)?;
        state.x[m] = xm;
        policy.observe(m, accepted);
        Ok((m, Some(accepted)))
    }
}

/// `inner_steps` consecutive RWM updates of coordinate `m` against its
/// conditional potential (which depends only on the other coordinates, so it
/// is fetched once). Returns the number of accepted inner moves.
pub fn approx_gibbs_update<M: TargetModel>(
    state: &mut ChainState,
    model: &M,
    m: usize,
    inner_steps: usize,
    policy: &mut ProposalPolicy,
) -> Result<u64> {
    if inner_steps == 0 {
        return Err(Error::Domain("inner_steps must be at least 1".into()));
    }
    if m >= model.dim() {
        return Err(Error::Domain(format!("coordinate {m} out of range for dim {}", model.dim())));
    }
    let pot = model.cond_potential(m, &state.x);
    let mut accepts = 0u64;
    for _ in 0..inner_steps {
        let (xm, accepted) = rwm_step(state.x[m], &pot, policy.sigma(m), &mut state.rng)?;
        state.x[m] = xm;
        policy.observe(m, accepted);
        if accepted {
            accepts += 1;
        }
    }
    state.step_count += 1;
    Ok(accepts)
}

/// Execution plan for [`run_chain`]: sweep counts, the inner-loop depth, and
/// the seed. One sweep = d coordinate picks; one state row is stored per
/// post-burn-in sweep.
#[derive(Clone, Copy, Debug)]
pub struct ChainConfig {
    pub burnin: usize,
    pub sweeps: usize,
    /// RWM updates per non-exact coordinate pick: 1 is plain
    /// Metropolis-within-Gibbs, ≥ 2 the approximate-Gibbs surrogate.
    pub inner_steps: usize,
    pub seed: u64,
}

/// Stored sweeps plus sampling-phase acceptance accounting.
pub struct ChainTrace {
    samples: Vec<f64>,
    dim: usize,
    /// Accepted / attempted RWM proposals per coordinate, post-burn-in only.
    pub accept_counts: Vec<u64>,
    pub proposal_counts: Vec<u64>,
    /// Proposal σ per coordinate at the end of the run.
    pub final_sigmas: Vec<f64>,
}

impl ChainTrace {
    /// Number of stored sweeps.
    pub fn len(&self) -> usize {
        if self.dim == 0 { 0 } else { self.samples.len() / self.dim }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        self.samples.iter().skip(m).step_by(self.dim).copied().collect()
    }

    pub fn acceptance_rate(&self, m: usize) -> f64 {
        self.accept_counts[m] as f64 / self.proposal_counts[m].max(1) as f64
    }

    /// CSV rows `iter,coord_0,…,coord_{d-1}`, iterations numbered from 0.
    pub fn write_trace_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "iter")?;
        for m in 0..self.dim {
            write!(w, ",coord_{m}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{i}")?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// CSV rows `coord,accepts,proposals,rate`.
    pub fn write_acceptance_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "coord,accepts,proposals,rate")?;
        for m in 0..self.dim {
            writeln!(
                w,
                "{m},{},{},{}",
                self.accept_counts[m],
                self.proposal_counts[m],
                self.acceptance_rate(m)
            )?;
        }
        Ok(())
    }
}

/// Run burnin + sweeps random-scan sweeps from the origin. Robbins–Monro
/// adaptation is frozen when burn-in ends, so the stored phase is time
/// homogeneous; acceptance counters likewise cover only the stored phase.
pub fn run_chain<M: TargetModel>(
    model: &M,
    mut policy: ProposalPolicy,
    cfg: ChainConfig,
) -> Result<ChainTrace> {
    let d = model.dim();
    if d == 0 {
        return Err(Error::Construction("model has zero dimensions".into()));
    }
    if policy.dim() != d {
        return Err(Error::Construction(format!(
            "policy covers {} coordinates, model has {d}",
            policy.dim()
        )));
    }
    if cfg.sweeps == 0 || cfg.inner_steps == 0 {
        return Err(Error::Domain("sweeps and inner_steps must be at least 1".into()));
    }
    let mut state = ChainState::new(d, cfg.seed);
    let mut accepts = vec![0u64; d];
    let mut proposals = vec![0u64; d];
    let mut samples = Vec::with_capacity(cfg.sweeps.saturating_mul(d));
    for sweep in 0..cfg.burnin + cfg.sweeps {
        if sweep == cfg.burnin {
            policy.freeze();
        }
        let counting = sweep >= cfg.burnin;
        for _ in 0..d {
            let m = state.rng.random_range(0..d);
            if let Some((mean, var)) = model.exact_cond(m, &state.x) {
                let xi: f64 = state.rng.sample(StandardNormal);
                state.x[m] = mean + var.sqrt() * xi;
                state.step_count += 1;
            } else {
                let acc = approx_gibbs_update(&mut state, model, m, cfg.inner_steps, &mut policy)?;
                if counting {
                    accepts[m] += acc;
                    proposals[m] += cfg.inner_steps as u64;
                }
            }
            if !state.x[m].is_finite() {
                return Err(Error::Divergence { coord: m, sweep });
            }
        }
        if counting {
            samples.extend_from_slice(&state.x);
        }
    }
    Ok(ChainTrace {
        samples,
        dim: d,
        accept_counts: accepts,
        proposal_counts: proposals,
        final_sigmas: policy.sigmas(),
    })
}
