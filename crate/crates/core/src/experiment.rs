//! Replicated mixing study on the hierarchical logistic model: synthetic
//! datasets, scheme scheduling, IAT aggregation, CSV persistence, slope
//! analysis, and plot emission.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::adapt::pilot_variance;
use crate::diagnostics::max_iat;
use crate::error::{Error, Result};
use crate::kernel::{run_chain, ChainConfig, ProposalPolicy};
use crate::model::{sample_dataset, HierLogisticPosterior, TargetModel};

/// Update schemes for the study. GS20/GS100 are the approximate-Gibbs
/// benchmark (20 or 100 inner RWM steps per coordinate pick); the MWG
/// schemes do a single Metropolis step per pick under the three proposal
/// tunings. MWG_FIXED5 is a deliberately mis-tuned negative control: σ = 5
/// on every group coordinate, ignoring how smoothness grows with n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Gs20,
    Gs100,
    MwgPilot,
    MwgRm,
    MwgSmooth,
    MwgFixed5,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Gs20,
        Scheme::Gs100,
        Scheme::MwgPilot,
        Scheme::MwgRm,
        Scheme::MwgSmooth,
        Scheme::MwgFixed5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gs20 => "GS20",
            Scheme::Gs100 => "GS100",
            Scheme::MwgPilot => "MWG_PILOT",
            Scheme::MwgRm => "MWG_RM",
            Scheme::MwgSmooth => "MWG_SMOOTH",
            Scheme::MwgFixed5 => "MWG_FIXED5",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme {s:?}")))
    }
}

/// Study protocol: dataset sizes, replication count, chain lengths, and the
/// scheme roster. The default is the full 100-replication protocol;
/// [`ExperimentConfig::desk_scale`] shrinks it to 20.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_values: Vec<u32>,
    pub replications: usize,
    pub j: usize,
    pub burnin: usize,
    pub sweeps: usize,
    pub mu_star: f64,
    pub schemes: Vec<Scheme>,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_values: vec![32, 64, 128, 256, 512],
            replications: 100,
            j: 20,
            burnin: 1000,
            sweeps: 4000,
            mu_star: 1.0,
            schemes: vec![Scheme::Gs20, Scheme::MwgPilot, Scheme::MwgRm, Scheme::MwgSmooth],
            base_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn desk_scale() -> Self {
        ExperimentConfig { replications: 20, ..ExperimentConfig::default() }
    }

    /// Parse flat `key=value` text, one pair per line; `#` starts a comment
    /// line. Keys are the field names (`n_values`, `replications`, `J`,
    /// `burnin`, `sweeps`, `mu_star`, `schemes`, `base_seed`); lists are
    /// comma-separated; absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got {raw:?}", idx + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_values" => {
                    cfg.n_values =
                        value.split(',').map(|v| parse_field(key, v.trim())).collect::<Result<_>>()?
                }
                "replications" => cfg.replications = parse_field(key, value)?,
                "J" => cfg.j = parse_field(key, value)?,
                "burnin" => cfg.burnin = parse_field(key, value)?,
                "sweeps" => cfg.sweeps = parse_field(key, value)?,
                "mu_star" => cfg.mu_star = parse_field(key, value)?,
                "schemes" => {
                    cfg.schemes =
                        value.split(',').map(|v| v.trim().parse()).collect::<Result<_>>()?
                }
                "base_seed" => cfg.base_seed = parse_field(key, value)?,
                _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Domain("n_values must be a non-empty list of positive sizes".into()));
        }
        if self.replications == 0 || self.j == 0 || self.sweeps == 0 {
            return Err(Error::Domain("replications, J, and sweeps must be at least 1".into()));
        }
        if !self.mu_star.is_finite() {
            return Err(Error::Domain("mu_star must be finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Domain("schemes must be non-empty".into()));
        }
        let mut dedup = self.schemes.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != self.schemes.len() {
            return Err(Error::Domain("duplicate scheme in config".into()));
        }
        Ok(())
    }
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    let mut h = 0;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

const STREAM_DATASET: u64 = 1;
const STREAM_CHAIN: u64 = 2;
const STREAM_PILOT: u64 = 3;

/// Seed of the dataset for (n, replication). Independent of the scheme, so
/// every scheme sees the same data for a given cell.
pub fn dataset_seed(base_seed: u64, n: u32, replication: usize) -> u64 {
    mix(&[base_seed, STREAM_DATASET, n as u64, replication as u64])
}

fn stream_seed(base_seed: u64, stream: u64, scheme: Scheme, n: u32, replication: usize) -> u64 {
    mix(&[base_seed, stream, scheme as u64, n as u64, replication as u64])
}

pub(crate) fn chain_seed(base_seed: u64, scheme: Scheme, n: u32, replication: usize) -> u64 {
    stream_seed(base_seed, STREAM_CHAIN, scheme, n, replication)
}

/// One (scheme, dataset) chain outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub n: u32,
    pub replication: usize,
    pub max_iat: f64,
    pub wall_ms: u64,
    pub seed: u64,
}

/// Proposal policy and inner-loop depth for a scheme on a given dataset.
/// MWG_PILOT runs its own 2000-sweep calibration chain here, seeded from a
/// stream other schemes never touch.
pub(crate) fn scheme_policy(
    scheme: Scheme,
    model: &HierLogisticPosterior,
    base_seed: u64,
    n: u32,
    replication: usize,
) -> Result<(ProposalPolicy, usize)> {
    let l = model.smoothness();
    Ok(match scheme {
        Scheme::Gs20 => (ProposalPolicy::smoothness_scaled(&l)?, 20),
        Scheme::Gs100 => (ProposalPolicy::smoothness_scaled(&l)?, 100),
        Scheme::MwgPilot => {
            let pilot_seed = stream_seed(base_seed, STREAM_PILOT, scheme, n, replication);
            let est = pilot_variance(model, 2000, pilot_seed)?;
            (ProposalPolicy::pilot(1.0, est.vhat)?, 1)
        }
        Scheme::MwgRm => {
            let init: Vec<f64> = l.iter().map(|li| 25.0 / li).collect();
            (ProposalPolicy::robbins_monro(init)?, 1)
        }
        Scheme::MwgSmooth => (ProposalPolicy::smoothness_scaled(&l)?, 1),
        Scheme::MwgFixed5 => (ProposalPolicy::fixed_sigma(vec![5.0; model.dim()])?, 1),
    })
}

fn run_one(cfg: &ExperimentConfig, scheme: Scheme, n: u32, replication: usize) -> Result<ResultRow> {
    let y = sample_dataset(cfg.j, n, cfg.mu_star, dataset_seed(cfg.base_seed, n, replication));
    let model = HierLogisticPosterior::new(n, y)?;
    let start = Instant::now();
    let (policy, inner_steps) = scheme_policy(scheme, &model, cfg.base_seed, n, replication)?;
    let seed = chain_seed(cfg.base_seed, scheme, n, replication);
    let chain = ChainConfig { burnin: cfg.burnin, sweeps: cfg.sweeps, inner_steps, seed };
    let trace = run_chain(&model, policy, chain)?;
    let report = max_iat(&trace)?;
    if !(report.max_iat.is_finite() && report.max_iat > 0.0) {
        return Err(Error::Numeric(format!(
            "non-positive IAT {} for {scheme} n={n} replication {replication}",
            report.max_iat
        )));
    }
    Ok(ResultRow {
        scheme,
        n,
        replication,
        max_iat: report.max_iat,
        wall_ms: start.elapsed().as_millis() as u64,
        seed,
    })
}

/// Run every (scheme, n, replication) cell of the config in parallel. The
/// dataset of a cell is shared by all schemes. A diverged chain drops its
/// row with a note on stderr instead of aborting the run; any other error
/// aborts. Rows come back sorted by (scheme, n, replication), so the table
/// is deterministic up to the wall-time column.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &scheme in &cfg.schemes {
        for &n in &cfg.n_values {
            for replication in 0..cfg.replications {
                jobs.push((scheme, n, replication));
            }
        }
    }
    let rows: Vec<Option<ResultRow>> = jobs
        .par_iter()
        .map(|&(scheme, n, replication)| match run_one(cfg, scheme, n, replication) {
            Ok(row) => Ok(Some(row)),
            Err(Error::Divergence { coord, sweep }) => {
                eprintln!(
                    "{scheme} n={n} replication {replication}: coordinate {coord} diverged at sweep {sweep}; row dropped"
                );
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.scheme, a.n, a.replication).cmp(&(b.scheme, b.n, b.replication)));
    Ok(rows)
}

/// Quartiles of max IAT over the replications of one (scheme, n) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub n: u32,
    pub median_max_iat: f64,
    pub q25: f64,
    pub q75: f64,
    pub count: usize,
}

// Linear interpolation between order statistics; p = 1/2 is the usual median.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(Scheme, u32), Vec<f64>> = BTreeMap::new();
    for row in rows {
        cells.entry((row.scheme, row.n)).or_default().push(row.max_iat);
    }
    cells
        .into_iter()
        .map(|((scheme, n), mut v)| {
            v.sort_by(f64::total_cmp);
            SummaryRow {
                scheme,
                n,
                median_max_iat: quantile(&v, 0.5),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
                count: v.len(),
            }
        })
        .collect()
}

/// Least-squares slope of log median max-IAT against log n for one scheme.
/// Near zero means the scheme's cost per effective sample is flat in n.
pub fn fit_loglog_slope(rows: &[ResultRow], scheme: Scheme) -> Result<f64> {
    let pts: Vec<(f64, f64)> = summarize(rows)
        .into_iter()
        .filter(|s| s.scheme == scheme)
        .map(|s| ((s.n as f64).ln(), s.median_max_iat.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain(format!(
            "slope needs at least two dataset sizes for {scheme}, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("dataset sizes span no range".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    Ok(sxy / sxx)
}

pub const RESULTS_HEADER: &str = "scheme,n,replication,max_iat,wall_ms,seed";

pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: &mut W) -> io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.scheme, r.n, r.replication, r.max_iat, r.wall_ms, r.seed)?;
    }
    Ok(())
}

pub fn read_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == RESULTS_HEADER => {}
        other => return Err(Error::Parse(format!("bad results header: {other:?}"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("row {}: expected 6 fields, got {}", idx + 2, f.len())));
        }
        rows.push(ResultRow {
            scheme: f[0].parse()?,
            n: parse_field("n", f[1])?,
            replication: parse_field("replication", f[2])?,
            max_iat: parse_field("max_iat", f[3])?,
            wall_ms: parse_field("wall_ms", f[4])?,
            seed: parse_field("seed", f[5])?,
        });
    }
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: &mut W) -> io::Result<()> {
    writeln!(w, "scheme,n,median_max_iat,q25,q75,count")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.scheme, r.n, r.median_max_iat, r.q25, r.q75, r.count)?;
    }
    Ok(())
}

/// Synthetic dataset file: one `group,y,n` row per group.
pub fn write_dataset_csv<W: Write>(y: &[u32], n: u32, w: &mut W) -> io::Result<()> {
    writeln!(w, "group,y,n")?;
    for (g, yj) in y.iter().enumerate() {
        writeln!(w, "{g},{yj},{n}")?;
    }
    Ok(())
}

/// Read a dataset file back as (successes per group, trials per group).
pub fn read_dataset_csv(text: &str) -> Result<(Vec<u32>, u32)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == "group,y,n" => {}
        other => return Err(Error::Parse(format!("bad dataset header: {other:?}"))),
    }
    let mut y = Vec::new();
    let mut n = None;
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("row {}: expected 3 fields, got {}", idx + 2, f.len())));
        }
        let group: usize = parse_field("group", f[0])?;
        if group != y.len() {
            return Err(Error::Parse(format!("row {}: group {} out of order", idx + 2, group)));
        }
        y.push(parse_field("y", f[1])?);
        let row_n: u32 = parse_field("n", f[2])?;
        match n {
            None => n = Some(row_n),
            Some(v) if v == row_n => {}
            Some(v) => {
                return Err(Error::Parse(format!("row {}: trials {} disagree with {}", idx + 2, row_n, v)))
            }
        }
    }
    match n {
        Some(n) if !y.is_empty() => Ok((y, n)),
        _ => Err(Error::Parse("dataset file has no rows".into())),
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 460.0;
const PLOT_TOP: f64 = 25.0;
const PLOT_BOTTOM: f64 = 385.0;

/// Render the median max-IAT of each scheme against n, both axes on log
/// scale, as a self-contained SVG string. A pure function of the rows, so
/// repeated renders are byte-identical.
pub fn render_plot(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Domain("no rows to plot".into()));
    }
    let summary = summarize(rows);
    let mut schemes: Vec<Scheme> = summary.iter().map(|s| s.scheme).collect();
    schemes.dedup();

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &summary {
        let x = (s.n as f64).log10();
        let y = s.median_max_iat.log10();
        if !y.is_finite() {
            return Err(Error::Numeric(format!("median {} not plottable on log axis", s.median_max_iat)));
        }
        (x0, x1) = (x0.min(x), x1.max(x));
        (y0, y1) = (y0.min(y), y1.max(y));
    }
    if x1 - x0 < 0.1 {
        (x0, x1) = (x0 - 0.1, x1 + 0.1);
    }
    let pad = 0.08 * (y1 - y0).max(0.5);
    (y0, y1) = (y0 - pad, y1 + pad);

    let map_x = |v: f64| PLOT_LEFT + (v - x0) / (x1 - x0) * (PLOT_RIGHT - PLOT_LEFT);
    let map_y = |v: f64| PLOT_BOTTOM - (v - y0) / (y1 - y0) * (PLOT_BOTTOM - PLOT_TOP);

    let mut svg = String::new();
    svg.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" viewBox=\"0 0 640 440\" font-family=\"sans-serif\" font-size=\"12\">\n",
    );
    svg.push_str("<rect x=\"0\" y=\"0\" width=\"640\" height=\"440\" fill=\"#ffffff\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{PLOT_LEFT}\" y=\"{PLOT_TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>\n",
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    ));

    // one x tick per dataset size present
    let mut ns: Vec<u32> = summary.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let px = map_x((n as f64).log10());
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{PLOT_BOTTOM}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#333333\"/>\n",
            PLOT_BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{n}</text>\n",
            PLOT_BOTTOM + 19.0
        ));
    }

    // y ticks at the powers of ten inside the range, or the endpoints if the
    // range stays within one decade
    let mut y_ticks: Vec<(f64, String)> = (y0.ceil() as i64..=y1.floor() as i64)
        .map(|k| (k as f64, format_decade(k)))
        .collect();
    if y_ticks.len() < 2 {
        y_ticks = vec![
            (y0, format!("{:.3}", 10f64.powf(y0))),
            (y1, format!("{:.3}", 10f64.powf(y1))),
        ];
    }
    for (v, label) in &y_ticks {
        let py = map_y(*v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{PLOT_LEFT}\" y2=\"{py:.2}\" stroke=\"#333333\"/>\n",
            PLOT_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{PLOT_LEFT}\" y1=\"{py:.2}\" x2=\"{PLOT_RIGHT}\" y2=\"{py:.2}\" stroke=\"#e0e0e0\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>\n",
            PLOT_LEFT - 9.0,
            py + 4.0
        ));
    }

    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"425\" text-anchor=\"middle\">observations per group n</text>\n",
        0.5 * (PLOT_LEFT + PLOT_RIGHT)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">median max IAT</text>\n",
        0.5 * (PLOT_TOP + PLOT_BOTTOM),
        0.5 * (PLOT_TOP + PLOT_BOTTOM)
    ));

    for (i, &scheme) in schemes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = summary
            .iter()
            .filter(|s| s.scheme == scheme)
            .map(|s| (map_x((s.n as f64).log10()), map_y(s.median_max_iat.log10())))
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for (x, y) in &pts {
            svg.push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>\n"));
        }
        let ly = PLOT_TOP + 14.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"478\" y1=\"{ly:.2}\" x2=\"502\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        svg.push_str(&format!("<circle cx=\"490\" cy=\"{ly:.2}\" r=\"3\" fill=\"{color}\"/>\n"));
        svg.push_str(&format!("<text x=\"508\" y=\"{:.2}\">{scheme}</text>\n", ly + 4.0));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_decade(k: i64) -> String {
    match k {
        -3..=-1 => format!("{}", 10f64.powi(k as i32)),
        0..=3 => format!("{}", 10i64.pow(k as u32)),
        _ => format!("1e{k}"),
    }
}

pub fn emit_plot(rows: &[ResultRow], path: &Path) -> Result<()> {
    let svg = render_plot(rows)?;
    fs::write(path, svg)?;
    Ok(())
}
