//! Command-line front end: theory checks, single chains, the replicated
//! mixing study, plotting, and kernel analysis for named potentials.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::decomp2d::decomposition_check_2d;
use crate::diagnostics::max_iat;
use crate::error::{Error, Result};
use crate::experiment::{
    self, emit_plot, fit_loglog_slope, read_results_csv, run_experiment, summarize,
    write_dataset_csv, write_results_csv, write_summary_csv, ExperimentConfig, Scheme,
};
use crate::kernel::{run_chain, ChainConfig};
use crate::model::{sample_dataset, var_1d, HierLogisticPosterior};
use crate::spectral::{
    b_of_c, builtin_family, conductance, discretize_rwm, k_factor, k_of_c, min_acceptance,
    spectral_gap, threshold_conductance, u1_check, verify_convex, Grid1D,
};

#[derive(Parser)]
#[command(
    name = "mwg",
    about = "Random-scan Gibbs and Metropolis-within-Gibbs sampling toolkit",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the theory checks and write a pass/fail report CSV.
    Verify(VerifyArgs),
    /// Run one chain on the hierarchical model and export its trace.
    Sample(SampleArgs),
    /// Run the replicated mixing study.
    Experiment(ExperimentArgs),
    /// Render a results CSV to an SVG plot.
    Plot(PlotArgs),
    /// Analyze the discretized RWM kernel of a named potential.
    Spectral(SpectralArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Proposal-variance multipliers (σ² = c·Var), comma-separated.
    #[arg(
        long = "c",
        value_name = "LIST",
        default_value = "0.25,1,4",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    c: Vec<f64>,
    /// Grid points for the kernel discretizations.
    #[arg(long, value_name = "N", default_value_t = 401)]
    grid: usize,
    /// Directory for the report CSV.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Suppress per-check lines on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SampleArgs {
    /// Flat key=value config: n, J, mu_star, scheme, burnin, sweeps, base_seed.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for trace, acceptance, and dataset CSVs.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the config's base_seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value config; see the library's ExperimentConfig keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for results, summary, and plot files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the config's base_seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by the experiment subcommand.
    results: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SpectralArgs {
    /// Built-in potential name; a bad name lists the family.
    potential: String,
    #[arg(
        long = "c",
        value_name = "LIST",
        default_value = "1",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    c: Vec<f64>,
    #[arg(long, value_name = "N", default_value_t = 401)]
    grid: usize,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

/// Parse argv and dispatch. Exit codes: 0 success, 1 a failed check or
/// runtime error, 2 usage errors.
pub fn run(args: impl Iterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Sample(args) => cmd_sample(args).map(|()| 0),
        Command::Experiment(args) => cmd_experiment(args).map(|()| 0),
        Command::Plot(args) => cmd_plot(args).map(|()| 0),
        Command::Spectral(args) => cmd_spectral(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn check_c_list(cs: &[f64]) -> Result<()> {
    if cs.is_empty() {
        return Err(Error::Domain("at least one c value is required".into()));
    }
    for &c in cs {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("c values must be positive, got {c}")));
        }
    }
    Ok(())
}

struct CheckRow {
    check: &'static str,
    potential: &'static str,
    c: String,
    value: f64,
    bound: f64,
    pass: bool,
}

impl CheckRow {
    fn print(&self) {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let mut name = self.check.to_string();
        if !self.potential.is_empty() {
            name.push_str(&format!(" {}", self.potential));
        }
        if !self.c.is_empty() {
            name.push_str(&format!(" c={}", self.c));
        }
        println!("{tag} {name}: value {:.6e} bound {:.6e}", self.value, self.bound);
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    check_c_list(&args.c)?;
    fs::create_dir_all(&args.out)?;
    let mut rows: Vec<CheckRow> = Vec::new();

    // closed-form constants against independently recomputed references
    let kf = k_factor();
    rows.push(CheckRow {
        check: "k_factor",
        potential: "",
        c: String::new(),
        value: kf,
        bound: 10.392304845413264,
        pass: (kf - 10.392304845413264).abs() <= 1e-12,
    });
    let b1 = b_of_c(1.0)?;
    rows.push(CheckRow {
        check: "b_of_c",
        potential: "",
        c: "1".into(),
        value: b1,
        bound: 4.810e-3,
        pass: (b1 - 4.810e-3).abs() <= 1e-6,
    });
    let k1 = k_of_c(1.0)?;
    rows.push(CheckRow {
        check: "k_of_c",
        potential: "",
        c: "1".into(),
        value: k1,
        bound: 1.391e-7,
        pass: (k1 - 1.391e-7).abs() <= 1e-10,
    });

    for member in &builtin_family()? {
        let grid = Grid1D::for_potential(&member.pot, args.grid)?;
        let convex = verify_convex(&member.pot, &grid).is_ok();
        rows.push(CheckRow {
            check: "convex",
            potential: member.name,
            c: String::new(),
            value: convex.into(),
            bound: 1.0,
            pass: convex,
        });

        let (_, u1) = u1_check(&member.pot)?;
        rows.push(CheckRow {
            check: "curvature_probe",
            potential: member.name,
            c: String::new(),
            value: u1,
            bound: 2.6,
            pass: u1 <= 2.6,
        });
        if member.name == "gauss" {
            rows.push(CheckRow {
                check: "curvature_probe_exact",
                potential: member.name,
                c: String::new(),
                value: u1,
                bound: 0.5,
                pass: (u1 - 0.5).abs() <= 1e-8,
            });
        }

        let var = var_1d(&member.pot)?;
        let small_grid = Grid1D::for_potential(&member.pot, 12)?;
        for &c in &args.c {
            let c_str = format!("{c}");
            let floor = b_of_c(c)?;
            let minacc = min_acceptance(&member.pot, c, &grid)?;
            rows.push(CheckRow {
                check: "acceptance_floor",
                potential: member.name,
                c: c_str.clone(),
                value: minacc,
                bound: floor,
                pass: minacc >= floor,
            });

            let sigma = (c * var).sqrt();
            let kernel = discretize_rwm(&member.pot, sigma, &grid)?;
            let kc = k_of_c(c)?;
            let phi = threshold_conductance(&kernel);
            rows.push(CheckRow {
                check: "conductance_floor",
                potential: member.name,
                c: c_str.clone(),
                value: phi,
                bound: kc,
                pass: phi > kc,
            });

            // two-sided conductance-gap comparison on a kernel small enough
            // for the exact minimum over all cuts
            let small = discretize_rwm(&member.pot, sigma, &small_grid)?;
            let gap = spectral_gap(&small)?;
            let cut = conductance(&small);
            rows.push(CheckRow {
                check: "cheeger_lower",
                potential: member.name,
                c: c_str.clone(),
                value: gap,
                bound: 0.5 * cut.value * cut.value,
                pass: gap >= 0.5 * cut.value * cut.value - 1e-12,
            });
            rows.push(CheckRow {
                check: "cheeger_upper",
                potential: member.name,
                c: c_str,
                value: gap,
                bound: 2.0 * cut.value,
                pass: gap <= 2.0 * cut.value + 1e-12,
            });
        }
    }

    let identity = DMatrix::identity(2, 2);
    let coupled = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    for (label, a) in [("gauss2d_identity", identity), ("gauss2d_coupled", coupled)] {
        let report = decomposition_check_2d(&a, 1.0, 81)?;
        let exact = 1.0 / (2.0 * report.kappa_star);
        rows.push(CheckRow {
            check: "gs_gap_exact",
            potential: label,
            c: "1".into(),
            value: report.gap_gs,
            bound: exact,
            pass: (report.gap_gs - exact).abs() <= 0.05 * exact,
        });
        let product = report.inf_conditional_gap * report.gap_gs;
        rows.push(CheckRow {
            check: "decomp_lower",
            potential: label,
            c: "1".into(),
            value: report.gap_mwg,
            bound: product,
            pass: report.gap_mwg >= product - 1e-3,
        });
        rows.push(CheckRow {
            check: "decomp_upper",
            potential: label,
            c: "1".into(),
            value: report.gap_mwg,
            bound: report.gap_gs,
            pass: report.gap_mwg <= report.gap_gs + 1e-3,
        });
    }

    let mut csv = String::from("check,potential,c,value,bound,pass\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.check, row.potential, row.c, row.value, row.bound, row.pass
        ));
    }
    fs::write(args.out.join("verify_report.csv"), csv)?;

    let failures = rows.iter().filter(|r| !r.pass).count();
    if !args.quiet {
        for row in &rows {
            row.print();
        }
        println!("{} checks, {failures} failed", rows.len());
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

/// Single-chain settings, a thin slice of the experiment protocol.
struct SampleConfig {
    n: u32,
    j: usize,
    mu_star: f64,
    scheme: Scheme,
    burnin: usize,
    sweeps: usize,
    base_seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n: 64,
            j: 20,
            mu_star: 1.0,
            scheme: Scheme::MwgSmooth,
            burnin: 1000,
            sweeps: 4000,
            base_seed: 1,
        }
    }
}

impl SampleConfig {
    fn parse(text: &str) -> Result<Self> {
        fn field<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
        }
        let mut cfg = SampleConfig::default();
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
                "n" => cfg.n = field(key, value)?,
                "J" => cfg.j = field(key, value)?,
                "mu_star" => cfg.mu_star = field(key, value)?,
                "scheme" => cfg.scheme = value.parse()?,
                "burnin" => cfg.burnin = field(key, value)?,
                "sweeps" => cfg.sweeps = field(key, value)?,
                "base_seed" => cfg.base_seed = field(key, value)?,
                _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
            }
        }
        if cfg.n == 0 || cfg.j == 0 || cfg.sweeps == 0 {
            return Err(Error::Domain("n, J, and sweeps must be at least 1".into()));
        }
        if !cfg.mu_star.is_finite() {
            return Err(Error::Domain("mu_star must be finite".into()));
        }
        Ok(cfg)
    }
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => SampleConfig::parse(&fs::read_to_string(path)?)?,
        None => SampleConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    fs::create_dir_all(&args.out)?;

    // replication 0 of the experiment's seed streams, so a sampled chain can
    // be compared against the corresponding study cell
    let y = sample_dataset(cfg.j, cfg.n, cfg.mu_star, experiment::dataset_seed(cfg.base_seed, cfg.n, 0));
    let model = HierLogisticPosterior::new(cfg.n, y.clone())?;
    let (policy, inner_steps) =
        experiment::scheme_policy(cfg.scheme, &model, cfg.base_seed, cfg.n, 0)?;
    let chain = ChainConfig {
        burnin: cfg.burnin,
        sweeps: cfg.sweeps,
        inner_steps,
        seed: experiment::chain_seed(cfg.base_seed, cfg.scheme, cfg.n, 0),
    };
    let trace = run_chain(&model, policy, chain)?;

    let mut w = BufWriter::new(fs::File::create(args.out.join("dataset.csv"))?);
    write_dataset_csv(&y, cfg.n, &mut w)?;
    let mut w = BufWriter::new(fs::File::create(args.out.join("trace.csv"))?);
    trace.write_trace_csv(&mut w)?;
    let mut w = BufWriter::new(fs::File::create(args.out.join("acceptance.csv"))?);
    trace.write_acceptance_csv(&mut w)?;

    if !args.quiet {
        let report = max_iat(&trace)?;
        println!(
            "{} on J={} groups, n={} observations: {} sweeps stored, max IAT {:.3}",
            cfg.scheme,
            cfg.j,
            cfg.n,
            trace.len(),
            report.max_iat
        );
        println!("wrote dataset.csv, trace.csv, acceptance.csv under {}", args.out.display());
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::desk_scale(),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    fs::create_dir_all(&args.out)?;

    let rows = run_experiment(&cfg)?;
    let mut w = BufWriter::new(fs::File::create(args.out.join("results.csv"))?);
    write_results_csv(&rows, &mut w)?;
    let summary = summarize(&rows);
    let mut w = BufWriter::new(fs::File::create(args.out.join("summary.csv"))?);
    write_summary_csv(&summary, &mut w)?;
    emit_plot(&rows, &args.out.join("plot.svg"))?;

    if !args.quiet {
        for s in &summary {
            println!(
                "{} n={}: median max IAT {:.2} (quartiles {:.2}..{:.2}, {} replications)",
                s.scheme, s.n, s.median_max_iat, s.q25, s.q75, s.count
            );
        }
        if cfg.n_values.len() >= 2 {
            for &scheme in &cfg.schemes {
                if let Ok(slope) = fit_loglog_slope(&rows, scheme) {
                    println!("{scheme}: log-log slope {slope:.3}");
                }
            }
        }
        println!("wrote results.csv, summary.csv, plot.svg under {}", args.out.display());
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let rows = read_results_csv(&fs::read_to_string(&args.results)?)?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("plot.svg");
    emit_plot(&rows, &path)?;
    if !args.quiet {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_spectral(args: SpectralArgs) -> Result<()> {
    check_c_list(&args.c)?;
    let family = builtin_family()?;
    let member = family.iter().find(|m| m.name == args.potential).ok_or_else(|| {
        let names: Vec<&str> = family.iter().map(|m| m.name).collect();
        Error::Domain(format!("unknown potential {:?}; built-ins: {}", args.potential, names.join(", ")))
    })?;
    fs::create_dir_all(&args.out)?;

    let grid = Grid1D::for_potential(&member.pot, args.grid)?;
    let var = var_1d(&member.pot)?;
    let mut csv = String::from("potential,c,grid,sigma,gap,conductance,exact_min,min_acceptance,b_c,k_c\n");
    for &c in &args.c {
        let sigma = (c * var).sqrt();
        let kernel = discretize_rwm(&member.pot, sigma, &grid)?;
        let gap = spectral_gap(&kernel)?;
        let cut = conductance(&kernel);
        let minacc = min_acceptance(&member.pot, c, &grid)?;
        csv.push_str(&format!(
            "{},{c},{},{sigma},{gap},{},{},{minacc},{},{}\n",
            member.name,
            kernel.dim(),
            cut.value,
            cut.lower_bound,
            b_of_c(c)?,
            k_of_c(c)?
        ));
        if !args.quiet {
            println!(
                "{} c={c}: {} states, gap {gap:.6}, conductance {:.6}, min acceptance {minacc:.6}",
                member.name,
                kernel.dim(),
                cut.value
            );
        }
    }
    fs::write(args.out.join("spectral.csv"), csv)?;
    if !args.quiet {
        println!("wrote spectral.csv under {}", args.out.display());
    }
    Ok(())
}
