//! Command-line front end.
//!
//! Exit codes: 0 on success (warnings included), 2 for bad input, 3 when a
//! numerical cross-check fails.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::report::{evaluate, ChannelReport, ReportDocument};
use crate::state::{repair, CovarianceMatrix};
use crate::synth::{
    make_class_state, misaligned_s_class, phase_error_surface, simulate, sweep, Axis, ClassSpec,
    EntanglementClass, OffsetGrid, SweepOptions, M_CLASS_RATIO,
};
use crate::tomography::{bootstrap, reconstruct_records, BootstrapOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gausschan", version, about = "Characterize two-mode Gaussian channels from covariance matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every channel quantity of a covariance matrix.
    Analyze(AnalyzeArgs),
    /// Reconstruct a covariance matrix from five-setting homodyne samples.
    Estimate(EstimateArgs),
    /// Write a synthetic five-setting dataset for a class state.
    Simulate(SimulateArgs),
    /// Tabulate E_N, Q_L and F against squeezing for several purities.
    Sweep(SweepArgs),
    /// Percent error of the reconstructed log-negativity under phase offsets.
    ErrorSurface(SurfaceArgs),
    /// Check a channel for complete positivity and optionally apply it.
    Channel(ChannelArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print an aligned table to standard output.
    #[arg(long)]
    pub pretty: bool,
    /// Detection bandwidth used to express the key rate in kbit/s.
    #[arg(long, default_value_t = 50.0)]
    pub bandwidth_khz: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Covariance matrix (JSON or bare 4x4 CSV).
    #[arg(long)]
    pub cm: PathBuf,
    /// Shift an unphysical matrix by the smallest identity multiple first.
    #[arg(long)]
    pub repair: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Directory with s1.csv..s5.csv and vacuum.csv.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Entanglement class: v, m or s.
    #[arg(long)]
    pub class: EntanglementClass,
    #[arg(long)]
    pub sqz_db: f64,
    #[arg(long)]
    pub antisqz_db: f64,
    #[arg(long, default_value_t = 0.87)]
    pub eta: f64,
    /// Target purity; 1 keeps the state as produced.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// M-class squeezing of the second beam relative to the first.
    #[arg(long, default_value_t = M_CLASS_RATIO)]
    pub m_ratio: f64,
    /// Samples per setting.
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub gain_alice: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gain_bob: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "v,m,s")]
    pub classes: Vec<EntanglementClass>,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.2")]
    pub purities: Vec<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub r_max: f64,
    #[arg(long, default_value_t = 60)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = M_CLASS_RATIO)]
    pub m_ratio: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Axes as `phi=MIN:MAX:STEP,theta=...,xi=V,alpha=V`; unlisted axes are 0.
    #[arg(long)]
    pub grid: Option<String>,
    /// Reference state; defaults to a misaligned pure S-class state.
    #[arg(long)]
    pub cm: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    pub sqz_db: f64,
    /// Orientation error of the second squeezer in the default state.
    #[arg(long, default_value_t = 30.0)]
    pub tilt_deg: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Channel JSON with X and Y.
    #[arg(long)]
    pub channel: PathBuf,
    /// Covariance matrix to transform.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Where to write the transformed matrix (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `phi=-10:10:0.5,theta=0,...`.
pub fn parse_grid(spec: &str) -> Result<OffsetGrid> {
    let mut grid = OffsetGrid::zero();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("grid axis '{part}' is not NAME=RANGE")))?;
        let nums = range
            .split(':')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("grid value '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let axis = match nums[..] {
            [v] => Axis::fixed(v),
            [min, max, step] => Axis { min, max, step },
            _ => return Err(Error::Parse(format!("grid range '{range}' is not V or MIN:MAX:STEP"))),
        };
        axis.values()?;
        match name.trim() {
            "phi" => grid.phi = axis,
            "theta" => grid.theta = axis,
            "xi" => grid.xi = axis,
            "alpha" => grid.alpha = axis,
            other => return Err(Error::Parse(format!("unknown grid axis '{other}'"))),
        }
    }
    Ok(grid)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(doc: &ReportDocument, out: &OutputArgs) -> Result<()> {
    if out.pretty {
        print!("{}", doc.to_table());
    }
    if out.out.is_some() || !out.pretty {
        emit_json(doc, out.out.as_deref())?;
    }
    Ok(())
}

fn check_bandwidth(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth {b} kHz must be positive")));
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<ReportDocument> {
    check_bandwidth(args.output.bandwidth_khz)?;
    let original = io::read_cm(&args.cm)?;
    let physical = crate::state::is_physical(&original);
    let (g, delta) = if args.repair {
        let r = repair(&original);
        (r.repaired, Some(r.delta))
    } else {
        (original, None)
    };
    let ev = evaluate(&g)?;
    let mut doc = ReportDocument::new(
        args.cm.display().to_string(),
        &g,
        ChannelReport::from_evaluation(&ev, args.output.bandwidth_khz),
        physical,
    );
    doc.repaired_delta = delta;
    if let Some(d) = delta.filter(|d| *d > 0.0) {
        doc.warnings.push(format!("input repaired by adding {d:.6e} times the identity"));
    }
    doc.warnings.extend(ev.warnings);
    emit_report(&doc, &args.output)?;
    Ok(doc)
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<ReportDocument> {
    check_bandwidth(args.output.bandwidth_khz)?;
    let (data, meta) = io::read_dataset(&args.samples)?;
    let rec = reconstruct_records(&data.records, Some(&data.vacuum))?;
    let ev = evaluate(&rec.cm)?;
    let boot = bootstrap(
        &data.records,
        Some(&data.vacuum),
        &BootstrapOptions { blocks: args.blocks, confidence: args.confidence },
    )?;
    let mut report = ChannelReport::from_evaluation(&ev, args.output.bandwidth_khz);
    report.intervals = Some(boot.quantities);
    let mut doc = ReportDocument::new(args.samples.display().to_string(), &rec.cm, report, ev.physical);
    doc.seed = meta.as_ref().and_then(|m| m.seed);
    if rec.basis_inconsistent {
        doc.warnings.push(format!(
            "basis inconsistency: redundancy residual {:.3e} exceeds {} standard errors ({:.3e})",
            rec.residual,
            crate::tomography::RESIDUAL_SIGMAS,
            rec.residual_se
        ));
    }
    doc.warnings.extend(ev.warnings);
    doc.warnings.extend(boot.warnings.iter().cloned());
    doc.tomography = Some(serde_json::json!({
        "reconstruction": rec,
        "bootstrap": boot,
        "ground_truth": meta.and_then(|m| m.ground_truth),
    }));

    eprintln!("reconstructed covariance matrix:");
    for row in rec.cm.rows() {
        eprintln!("  {}", row.map(|v| format!("{v:>10.5}")).join(" "));
    }
    eprintln!("redundancy residual: {:.3e} (standard error {:.3e})", rec.residual, rec.residual_se);
    emit_report(&doc, &args.output)?;
    Ok(doc)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<io::Metadata> {
    let spec = ClassSpec::new(args.class, args.sqz_db, args.antisqz_db, args.eta, args.mu, args.m_ratio)?;
    let g = make_class_state(&spec)?;
    let gains = (args.gain_alice, args.gain_bob);
    let data = simulate(&g, args.samples, args.seed, gains)?;
    io::write_dataset(&args.out, &data, Some(args.seed), Some(gains), Some(spec), Some(&g))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let opts = SweepOptions { eta: args.eta, m_ratio: args.m_ratio, r_max: args.r_max, steps: args.steps };
    let (rows, crossings) = sweep(&args.classes, &args.purities, &opts)?;
    io::write_atomic(&args.out, &io::sweep_to_csv(&rows)?)?;
    print!("{}", io::crossing_table(&crossings));
    Ok(())
}

pub fn cmd_error_surface(args: &SurfaceArgs) -> Result<()> {
    let grid = match &args.grid {
        Some(s) => parse_grid(s)?,
        None => OffsetGrid::default(),
    };
    let g = match &args.cm {
        Some(p) => io::read_cm(p)?,
        None => misaligned_s_class(args.sqz_db, args.tilt_deg)?,
    };
    let pts = phase_error_surface(&g, &grid)?;
    io::write_atomic(&args.out, &io::surface_to_csv(&pts)?)
}

#[derive(Debug, Serialize)]
struct ChannelOutput {
    completely_positive: bool,
    margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<[[f64; 4]; 4]>,
}

pub fn cmd_channel(args: &ChannelArgs) -> Result<()> {
    let ch = io::read_channel(&args.channel)?;
    let cp = ch.is_completely_positive();
    let applied: Option<CovarianceMatrix> = args.apply.as_deref().map(io::read_cm).transpose()?.map(|g| ch.apply(&g));
    if let (Some(g), Some(out)) = (&applied, &args.out) {
        io::write_cm(out, g)?;
    }
    emit_json(
        &ChannelOutput {
            completely_positive: cp.completely_positive,
            margin: cp.margin,
            output: applied.filter(|_| args.out.is_none()).map(|g| g.rows()),
        },
        None,
    )
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_internal() {
        EXIT_INTERNAL
    } else {
        EXIT_INPUT
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|_| ()),
        Command::Estimate(a) => cmd_estimate(a).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ErrorSurface(a) => cmd_error_surface(a),
        Command::Channel(a) => cmd_channel(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
