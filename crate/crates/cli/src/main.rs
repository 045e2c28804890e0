//! Command-line front end: closed-form DoF values, Monte-Carlo sweeps with
//! CSV output, and the library's self-check suite.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failure, 2 on usage
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;

use ifofdm_core::dof::{self, DofQuery};
use ifofdm_core::sim::{
    emit_csv, run_sweep, run_validation, ExperimentConfig, Scheme, SnrGrid, TapProfile,
};

#[derive(Parser)]
#[command(
    name = "ifofdm",
    about = "Link-level simulator for K-user interference channels with inter-symbol interference",
    version,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form sum degrees-of-freedom values
    Dof(DofArgs),
    /// Run a seeded Monte-Carlo sweep and write a CSV
    Sweep(SweepArgs),
    /// Run the built-in invariant suite
    Validate(ValidateArgs),
}

#[derive(Args)]
struct DofArgs {
    /// Number of users K
    #[arg(long)]
    k: usize,
    /// Desired-link tap count L_D (per-user override via --lkk)
    #[arg(long)]
    ld: usize,
    /// Interfering-link tap count L_I
    #[arg(long)]
    li: usize,
    /// Per-user desired tap counts (comma list overriding a symmetric --ld)
    #[arg(long, value_delimiter = ',')]
    lkk: Option<Vec<usize>>,
    /// Also print the TDMA-OFDM baseline DoF for this many symbols per frame
    #[arg(long)]
    m_tdma: Option<usize>,
    /// Also print the circulant-structured multi-antenna DoF for this many antennas
    #[arg(long)]
    antennas: Option<usize>,
    /// Also print the symmetric-network form
    #[arg(long)]
    symmetric: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Schemes to sweep (comma list of if-ofdm, if-ofdm-csit, tdma-ofdm)
    #[arg(long, value_delimiter = ',', required = true)]
    scheme: Vec<String>,
    /// User counts (comma list)
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Desired-link tap count L_D
    #[arg(long)]
    ld: usize,
    /// Interfering-link tap count L_I
    #[arg(long)]
    li: usize,
    /// SNR grid in dB as start:stop:step
    #[arg(long)]
    snr: String,
    /// Channel draws per grid point
    #[arg(long)]
    trials: usize,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Tap decay rate of the channel sampler
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Subblocks per frame
    #[arg(long, default_value_t = 64)]
    b: usize,
    /// OFDM symbols per frame of the TDMA baseline
    #[arg(long, default_value_t = 64)]
    m_tdma: usize,
    /// Use per-subblock guard intervals instead of successive cancellation
    #[arg(long)]
    guard_variant: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Seed for the randomized checks
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_snr(spec: &str) -> anyhow::Result<SnrGrid> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--snr expects start:stop:step, got '{spec}'");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().with_context(|| format!("bad SNR component '{p}'")))
        .collect::<anyhow::Result<_>>()?;
    Ok(SnrGrid::new(nums[0], nums[1], nums[2])?)
}

fn fmt_rational(value: Rational64) -> String {
    let decimal = *value.numer() as f64 / *value.denom() as f64;
    format!("{value} (= {decimal:.6})")
}

fn run_dof(args: &DofArgs) -> anyhow::Result<()> {
    let desired = match &args.lkk {
        Some(list) => {
            if list.len() != args.k {
                bail!("--lkk lists {} users but --k is {}", list.len(), args.k);
            }
            list.clone()
        }
        None => vec![args.ld; args.k],
    };
    let query = DofQuery::new(desired, args.li)?;
    println!("{}", fmt_rational(dof::sum_dof_no_csit(&query)));
    if args.symmetric {
        let value = dof::sum_dof_symmetric(args.k, args.ld, args.li)?;
        println!("symmetric: {}", fmt_rational(value));
    }
    if let Some(m) = args.m_tdma {
        let value = dof::tdma_ofdm_dof(m, args.ld, args.li)?;
        println!("tdma-ofdm: {}", fmt_rational(value));
    }
    if let Some(antennas) = args.antennas {
        let value = dof::mimo_circulant_dof(args.k, antennas)?;
        println!("mimo-circulant: {}", fmt_rational(value));
    }
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs) -> anyhow::Result<()> {
    let schemes: Vec<Scheme> = args
        .scheme
        .iter()
        .map(|s| s.parse::<Scheme>())
        .collect::<Result<_, _>>()?;
    let snr = parse_snr(&args.snr)?;
    let mut cfg = ExperimentConfig::new(
        schemes,
        args.k.clone(),
        TapProfile::Symmetric {
            l_d: args.ld,
            l_i: args.li,
        },
        snr,
        args.trials,
        args.seed,
    );
    cfg.beta = args.beta;
    cfg.subblocks = args.b;
    cfg.tdma_symbols = args.m_tdma;
    cfg.guard_variant = args.guard_variant;
    cfg.output = Some(args.out.clone());

    let result = run_sweep(&cfg)?;
    emit_csv(&result, &args.out)?;
    eprintln!("wrote {} rows to {}", result.rows.len(), args.out.display());
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> bool {
    let report = run_validation(args.seed);
    for check in &report.checks {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!("check {}: {status} ({})", check.name, check.detail);
    }
    let passed = report.all_passed();
    println!(
        "validation {}: {} of {} checks passed",
        if passed { "passed" } else { "failed" },
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    passed
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Dof(args) => match run_dof(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        },
        Command::Sweep(args) => match run_sweep_cmd(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        },
        Command::Validate(args) => {
            if run_validate(args) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
