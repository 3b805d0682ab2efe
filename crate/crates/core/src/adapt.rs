//! Proposal-variance calibration: the Robbins–Monro log-variance recursion
//! and pilot-run estimation of marginal posterior variances.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::kernel::{run_chain, ChainConfig, ProposalPolicy, VAR_CEIL, VAR_FLOOR};
use crate::model::TargetModel;

/// Acceptance rate the adaptation drives toward.
pub const TARGET_RATE: f64 = 0.4;
/// Step-size exponent; any value in (1/2, 1] gives a convergent recursion.
pub const STEP_EXPONENT: f64 = 0.7;

/// One Robbins–Monro update of a log proposal variance:
/// log σ² + t^{−0.7}·(1{accepted} − 0.4), clamped to the admissible box.
pub fn rm_update(log_var: f64, accepted: bool, t: u64) -> f64 {
    assert!(t >= 1, "update counter starts at 1");
    let gamma = (t as f64).powf(-STEP_EXPONENT);
    let indicator = if accepted { 1.0 } else { 0.0 };
    (log_var + gamma * (indicator - TARGET_RATE)).clamp(VAR_FLOOR.ln(), VAR_CEIL.ln())
}

/// Empirical marginal variances from a pilot run.
#[derive(Clone, Debug)]
pub struct PilotEstimate {
    pub vhat: Vec<f64>,
    pub pilot_iters: usize,
    pub seed: u64,
}

impl PilotEstimate {
    /// CSV rows `coord,variance`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "coord,variance")?;
        for (m, v) in self.vhat.iter().enumerate() {
            writeln!(w, "{m},{v}")?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Vec<f64>> {
        let mut lines = text.lines();
        match lines.next() {
            Some("coord,variance") => {}
            other => return Err(Error::Parse(format!("bad pilot header {other:?}"))),
        }
        let mut vhat = Vec::new();
        for (i, line) in lines.enumerate() {
            let (coord, var) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("pilot row {i} has no comma")))?;
            let c: usize = coord.parse().map_err(|e| Error::Parse(format!("row {i}: {e}")))?;
            if c != i {
                return Err(Error::Parse(format!("pilot rows out of order at {i}")));
            }
            let v: f64 = var.parse().map_err(|e| Error::Parse(format!("row {i}: {e}")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parse(format!("pilot variance {v} not positive")));
            }
            vhat.push(v);
        }
        if vhat.is_empty() {
            return Err(Error::Parse("pilot file has no rows".into()));
        }
        Ok(vhat)
    }
}

/// Estimate marginal posterior variances from an approximate-Gibbs run
/// (20 inner RWM steps per pick, smoothness-scaled σ). The first half of the
/// run is discarded as warm-up; variances come from the second half.
pub fn pilot_variance<M: TargetModel>(
    model: &M,
    pilot_iters: usize,
    seed: u64,
) -> Result<PilotEstimate> {
    if pilot_iters < 100 {
        return Err(Error::Domain(format!("pilot needs at least 100 sweeps, got {pilot_iters}")));
    }
    let policy = ProposalPolicy::smoothness_scaled(&model.smoothness())?;
    let burnin = pilot_iters / 2;
    let cfg = ChainConfig { burnin, sweeps: pilot_iters - burnin, inner_steps: 20, seed };
    let trace = run_chain(model, policy, cfg)?;
    let n = trace.len() as f64;
    let mut vhat = Vec::with_capacity(trace.dim());
    for m in 0..trace.dim() {
        let xs = trace.column(m);
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        if !(var.is_finite() && var > 0.0) {
            return Err(Error::Numeric(format!("zero variance in pilot coordinate {m}")));
        }
        vhat.push(var);
    }
    Ok(PilotEstimate { vhat, pilot_iters, seed })
}
