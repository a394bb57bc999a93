//! Command-line workflows: simulate grouped count probabilities, generate
//! classical fakes, bin patterns, compare distributions, run randomized
//! permutation tests, fit decoherence parameters, and evaluate the exact
//! small-network oracle.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4
//! numerical-validity error.

mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use gbs_core::counts::{generate_fakes, ingest_patterns, permutation_test};
use gbs_core::csvio::{
    read_counts_csv, read_gcp_csv, write_counts_csv, write_gcp_csv, write_permtest_csv,
    write_report_csv, Metadata,
};
use gbs_core::input::SigmaOrdering;
use gbs_core::network::Permutation;
use gbs_core::observables::GcpEstimate;
use gbs_core::oracle::{exact_gcp, exact_pattern_probability, OutputCovariance};
use gbs_core::rng::{stream_rng, StreamLabel};
use gbs_core::simulate::{run_gcp, run_moments, SimulationSpec};
use gbs_core::statistics::{chi_square, fit_decoherence, FitGrid, FitOptions};
use gbs_core::{bin_patterns, ErrorClass};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const ORACLE_CAP: usize = 12;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Numeric(m) => write!(f, "numerical validity: {m}"),
        }
    }
}

impl From<gbs_core::Error> for CliError {
    fn from(e: gbs_core::Error) -> Self {
        let msg = e.to_string();
        match e.class() {
            ErrorClass::Parameter => CliError::Config(msg),
            ErrorClass::Data => CliError::Data(msg),
            ErrorClass::Numerical => CliError::Numeric(msg),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PatternFormat {
    Text,
    Packed,
}

#[derive(Parser)]
#[command(
    name = "gbs",
    version,
    about = "Phase-space simulation and statistical validation of threshold-detector bosonic networks"
)]
struct Cli {
    /// Run configuration file (flat `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (0 = library default); overrides the config value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config value.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate grouped count probabilities and write gcp.csv.
    Simulate {
        /// Instead of a GCP, sweep the three orderings over the given
        /// correlation orders (comma separated) and write moments.csv.
        #[arg(long, value_name = "ORDERS")]
        moments_study: Option<String>,
    },
    /// Generate classical fake patterns from a thermal or squashed model.
    Fake {
        /// Number of fake patterns.
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: PatternFormat,
    },
    /// Bin a pattern file on the configured lattice and write counts.csv.
    Bin {
        #[arg(long)]
        patterns: PathBuf,
        /// Apply one uniform random bit permutation drawn from this seed.
        #[arg(long)]
        perm_seed: Option<u64>,
    },
    /// Compare a theory gcp.csv against a counts.csv and write report.csv.
    Compare {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        counts: PathBuf,
    },
    /// Randomized permutation trials of patterns against the configured model.
    Permtest {
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long, default_value = "10")]
        trials: usize,
    },
    /// Fit the transmission correction and thermalization fraction to total
    /// counts.
    Fit {
        /// Pattern file to bin into total counts.
        #[arg(long, conflicts_with = "counts")]
        patterns: Option<PathBuf>,
        /// Pre-binned one-dimensional counts.csv.
        #[arg(long)]
        counts: Option<PathBuf>,
        /// t search range as lo:hi:steps.
        #[arg(long, default_value = "0.98:1.02:5")]
        t_range: String,
        /// epsilon search range as lo:hi:steps.
        #[arg(long, default_value = "0:0.1:11")]
        eps_range: String,
    },
    /// Exact small-network reference: full GCP lattice, or one pattern
    /// probability with --pattern.
    Oracle {
        /// A pattern like 0101 to evaluate instead of the full lattice.
        #[arg(long)]
        pattern: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            return Err(CliError::Config(
                "--config is required for this command".into(),
            ))
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn apply_thread_cap(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn base_metadata(cfg: &RunConfig, command: &str) -> Metadata {
    let mut meta = Metadata::new();
    meta.push("generator", format!("gbs {}", env!("CARGO_PKG_VERSION")));
    meta.push("command", command);
    meta.push("model", cfg.describe_model());
    if let Some(p) = &cfg.matrix_path {
        meta.push("matrix", p.display());
    }
    meta.push("seed", cfg.seed);
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    meta.push("timestamp", now);
    meta
}

fn write_out(dir: &Path, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn parse_range(what: &str, v: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "{what} expects lo:hi:steps, got {v:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: bad number {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: bad number {:?}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: bad step count {:?}", parts[2])))?;
    Ok((lo, hi, steps))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { moments_study } => {
            let cfg = load_config(&cli)?;
            apply_thread_cap(cfg.threads);
            match moments_study {
                None => cmd_simulate(&cfg),
                Some(orders) => cmd_moments_study(&cfg, orders),
            }
        }
        Command::Fake { count, format } => {
            let cfg = load_config(&cli)?;
            apply_thread_cap(cfg.threads);
            cmd_fake(&cfg, *count, *format)
        }
        Command::Bin {
            patterns,
            perm_seed,
        } => {
            let cfg = load_config(&cli)?;
            apply_thread_cap(cfg.threads);
            cmd_bin(&cfg, patterns, *perm_seed)
        }
        Command::Compare { theory, counts } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_compare(theory, counts, &out)
        }
        Command::Permtest { patterns, trials } => {
            let cfg = load_config(&cli)?;
            apply_thread_cap(cfg.threads);
            cmd_permtest(&cfg, patterns, *trials)
        }
        Command::Fit {
            patterns,
            counts,
            t_range,
            eps_range,
        } => {
            let cfg = load_config(&cli)?;
            apply_thread_cap(cfg.threads);
            cmd_fit(
                &cfg,
                patterns.as_deref(),
                counts.as_deref(),
                t_range,
                eps_range,
            )
        }
        Command::Oracle { pattern } => {
            let cfg = load_config(&cli)?;
            cmd_oracle(&cfg, pattern.as_deref())
        }
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.model()?;
    let matrix = cfg.matrix()?;
    let spec = cfg.binning(matrix.n_outputs())?;
    let sizes = cfg.sizes()?;
    let estimate = run_gcp(&model, &matrix, &spec, sizes, cfg.seed)?;
    let mut meta = base_metadata(cfg, "simulate");
    meta.push("n_s", sizes.n_s);
    meta.push("e_s", sizes.total());
    let path = write_out(
        &cfg.out,
        "gcp.csv",
        write_gcp_csv(&estimate, &meta).as_bytes(),
    )?;
    println!(
        "wrote {} ({} bins, e_s = {}, clamped trajectories = {})",
        path.display(),
        estimate.len(),
        sizes.total(),
        estimate.clamped()
    );
    Ok(())
}

fn cmd_moments_study(cfg: &RunConfig, orders: &str) -> Result<(), CliError> {
    let orders: Vec<usize> = orders
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad correlation order {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if orders.is_empty() {
        return Err(CliError::Config("no correlation orders given".into()));
    }
    let matrix = cfg.matrix()?;
    for &n in &orders {
        if n == 0 || n > matrix.n_outputs() {
            return Err(CliError::Config(format!(
                "order {n} out of range for {} outputs",
                matrix.n_outputs()
            )));
        }
    }
    let sizes = cfg.sizes()?;
    let order_sets: Vec<Vec<(usize, u32)>> = orders
        .iter()
        .map(|&n| (0..n).map(|m| (m, 1)).collect())
        .collect();
    let mut columns = Vec::new();
    for sigma in [
        SigmaOrdering::Normal,
        SigmaOrdering::Symmetric,
        SigmaOrdering::AntiNormal,
    ] {
        let model = cfg.model()?.with_sigma(sigma)?;
        columns.push(run_moments(&model, &matrix, &order_sets, sizes, cfg.seed)?);
    }
    use std::fmt::Write as _;
    let mut meta = base_metadata(cfg, "simulate --moments-study");
    meta.push("e_s", sizes.total());
    let mut body = meta.comment_block();
    let _ = writeln!(
        body,
        "order,mean_normal,error_normal,mean_symmetric,error_symmetric,mean_antinormal,error_antinormal"
    );
    for (i, &n) in orders.iter().enumerate() {
        let _ = write!(body, "{n}");
        for col in &columns {
            let _ = write!(body, ",{},{}", col[i].mean, col[i].std_error);
        }
        let _ = writeln!(body);
    }
    let path = write_out(&cfg.out, "moments.csv", body.as_bytes())?;
    println!(
        "wrote {} ({} orders x 3 orderings)",
        path.display(),
        orders.len()
    );
    Ok(())
}

fn cmd_fake(cfg: &RunConfig, count: usize, format: PatternFormat) -> Result<(), CliError> {
    let model = cfg.model()?;
    let matrix = cfg.matrix()?;
    let patterns = generate_fakes(&model, &matrix, count, cfg.seed)?;
    let (name, bytes) = match format {
        PatternFormat::Text => {
            let mut meta = Metadata::new();
            meta.push("generator", format!("gbs {}", env!("CARGO_PKG_VERSION")));
            meta.push("command", "fake");
            meta.push("model", cfg.describe_model());
            meta.push("seed", cfg.seed);
            let mut buf = meta.comment_block().into_bytes();
            patterns
                .write_text(&mut buf)
                .map_err(|e| CliError::Data(e.to_string()))?;
            ("patterns.txt", buf)
        }
        PatternFormat::Packed => {
            let mut buf = Vec::new();
            patterns
                .write_packed(&mut buf)
                .map_err(|e| CliError::Data(e.to_string()))?;
            ("patterns.gbsp", buf)
        }
    };
    let path = write_out(&cfg.out, name, &bytes)?;
    println!(
        "wrote {} ({} patterns x {} modes)",
        path.display(),
        patterns.n_samples(),
        patterns.n_modes()
    );
    Ok(())
}

fn cmd_bin(cfg: &RunConfig, patterns: &Path, perm_seed: Option<u64>) -> Result<(), CliError> {
    let ps = ingest_patterns(patterns)?;
    let spec = cfg.binning(ps.n_modes())?;
    let perm = perm_seed.map(|s| {
        let mut rng = stream_rng(s, StreamLabel::Permutation, 0, 0);
        Permutation::random(ps.n_modes(), &mut rng)
    });
    let counts = bin_patterns(&ps, &spec, perm.as_ref())?;
    let mut meta = base_metadata(cfg, "bin");
    meta.push("patterns", patterns.display());
    if let Some(s) = perm_seed {
        meta.push("perm_seed", s);
    }
    let path = write_out(
        &cfg.out,
        "counts.csv",
        write_counts_csv(&counts, &meta).as_bytes(),
    )?;
    println!(
        "wrote {} ({} bins, {} samples)",
        path.display(),
        counts.counts.len(),
        counts.n_samples
    );
    Ok(())
}

fn cmd_compare(theory: &Path, counts: &Path, out: &Path) -> Result<(), CliError> {
    let (gcp, _) = read_gcp_csv(&read_to_string(theory)?)?;
    let (binned, _) = read_counts_csv(&read_to_string(counts)?)?;
    let report = chi_square(&gcp, &binned)?;
    let mut meta = Metadata::new();
    meta.push("generator", format!("gbs {}", env!("CARGO_PKG_VERSION")));
    meta.push("command", "compare");
    meta.push("theory", theory.display());
    meta.push("counts", counts.display());
    let path = write_out(
        out,
        "report.csv",
        write_report_csv(&report, &meta).as_bytes(),
    )?;
    println!(
        "chi2 = {:.6}, k = {}, chi2/k = {:.6}, Z = {:.3}",
        report.chi2, report.k, report.chi2_over_k, report.z
    );
    if report.k_below_wh_validity {
        println!(
            "note: only {} valid bins; the Z approximation wants k >= 10",
            report.k
        );
    }
    if report.z_extreme {
        println!("note: Z > 6 — the distributions are incompatible at any ordinary level");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_permtest(cfg: &RunConfig, patterns: &Path, trials: usize) -> Result<(), CliError> {
    let ps = ingest_patterns(patterns)?;
    let model = cfg.model()?;
    let matrix = cfg.matrix()?;
    if matrix.n_outputs() != ps.n_modes() {
        return Err(CliError::Data(format!(
            "pattern width {} does not match the network's {} outputs",
            ps.n_modes(),
            matrix.n_outputs()
        )));
    }
    let spec = cfg.binning(ps.n_modes())?;
    let sizes = cfg.sizes()?;
    let theory = SimulationSpec {
        model: &model,
        matrix: &matrix,
        sizes,
        seed: cfg.seed,
    };
    let outcome = permutation_test(&theory, &ps, &spec, trials, cfg.seed)?;
    let rows: Vec<(usize, &gbs_core::ComparisonReport)> = outcome
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| (i, &t.report))
        .collect();
    let mut meta = base_metadata(cfg, "permtest");
    meta.push("patterns", patterns.display());
    meta.push("trials", trials);
    let path = write_out(
        &cfg.out,
        "permtest.csv",
        write_permtest_csv(&rows, outcome.mean_z, &meta).as_bytes(),
    )?;
    for (i, t) in outcome.trials.iter().enumerate() {
        println!(
            "trial {i}: chi2/k = {:.4}, k = {}, Z = {:.3}",
            t.report.chi2_over_k, t.report.k, t.report.z
        );
    }
    println!("mean Z over {trials} trials = {:.3}", outcome.mean_z);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_fit(
    cfg: &RunConfig,
    patterns: Option<&Path>,
    counts: Option<&Path>,
    t_range: &str,
    eps_range: &str,
) -> Result<(), CliError> {
    let matrix = cfg.matrix()?;
    let binned = match (patterns, counts) {
        (Some(p), None) => {
            let ps = ingest_patterns(p)?;
            let spec =
                gbs_core::observables::BinningSpec::full(ps.n_modes()).map_err(CliError::from)?;
            bin_patterns(&ps, &spec, None)?
        }
        (None, Some(c)) => read_counts_csv(&read_to_string(c)?)?.0,
        _ => {
            return Err(CliError::Config(
                "fit needs exactly one of --patterns or --counts".into(),
            ))
        }
    };
    let base = cfg.model()?;
    let grid = FitGrid {
        t: parse_range("--t-range", t_range)?,
        epsilon: parse_range("--eps-range", eps_range)?,
    };
    let opts = FitOptions::new(cfg.sizes()?, cfg.seed);
    let fit = fit_decoherence(&binned, &base, &matrix, &grid, &opts)?;
    use std::fmt::Write as _;
    let mut body = base_metadata(cfg, "fit").comment_block();
    let _ = writeln!(
        body,
        "t,epsilon,chi2,k,chi2_over_k,Z,z_corner_1,z_corner_2,z_corner_3,z_corner_4,resolution,on_grid_edge"
    );
    let _ = writeln!(
        body,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        fit.t,
        fit.epsilon,
        fit.chi2,
        fit.k,
        fit.chi2_over_k,
        fit.z,
        fit.corner_z[0],
        fit.corner_z[1],
        fit.corner_z[2],
        fit.corner_z[3],
        fit.resolution,
        fit.on_grid_edge
    );
    let path = write_out(&cfg.out, "fit.csv", body.as_bytes())?;
    println!(
        "best fit: t = {:.4}, epsilon = {:.4} (chi2/k = {:.4}, Z = {:.3}, corner Z {:?})",
        fit.t, fit.epsilon, fit.chi2_over_k, fit.z, fit.corner_z
    );
    if fit.on_grid_edge {
        println!("note: optimum sits on the grid edge; widen the search ranges");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig, pattern: Option<&str>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let matrix = cfg.matrix()?;
    let cov = OutputCovariance::from_model(&model, &matrix)?;
    match pattern {
        Some(bits) => {
            let pattern: Vec<bool> = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(CliError::Config(format!("bad pattern character {other:?}"))),
                })
                .collect::<Result<_, _>>()?;
            let p = exact_pattern_probability(&cov, &pattern, ORACLE_CAP)?;
            println!("P({bits}) = {p}");
        }
        None => {
            let spec = cfg.binning(matrix.n_outputs())?;
            let values = exact_gcp(&cov, &spec, ORACLE_CAP)?;
            let errors = vec![0.0; values.len()];
            let estimate = GcpEstimate::new(spec.dims(), values, errors, 1, 0);
            let meta = base_metadata(cfg, "oracle");
            let path = write_out(
                &cfg.out,
                "oracle_gcp.csv",
                write_gcp_csv(&estimate, &meta).as_bytes(),
            )?;
            println!("wrote {} ({} exact bins)", path.display(), estimate.len());
        }
    }
    Ok(())
}
