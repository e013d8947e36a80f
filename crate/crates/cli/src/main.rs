use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use afdm::channel::DopplerDistribution;
use afdm::harness::config::{parse_f64_list, parse_keyword_list, parse_usize_list};
use afdm::harness::records::write_csv;
use afdm::harness::{
    q_profile, run_experiment, ChannelKind, ConfigOverrides, Constellation, EstimatorKind,
    ExperimentConfig, ExperimentKind, ResultSet,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afdm", version, about = "Seeded AFDM Monte Carlo experiments with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimator MSE against CPP length.
    MseVsL(RunArgs),
    /// Estimator MSE against SNR.
    MseVsSnr(RunArgs),
    /// Joint and stepwise estimators on the same observations.
    JointVsStepwise(RunArgs),
    /// Plain and mirror-mapped carrier-to-interference ratio against offset.
    CirSweep(RunArgs),
    /// Bit error rate of mirror-mapped and null-guard AFDM.
    Ber(RunArgs),
    /// Oracle-equivalence checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Debug)]
struct F64List(Vec<f64>);

#[derive(Clone, Debug)]
struct UsizeList(Vec<usize>);

fn f64_list(s: &str) -> Result<F64List, String> {
    parse_f64_list(s).map(F64List).map_err(|e| e.to_string())
}

fn usize_list(s: &str) -> Result<UsizeList, String> {
    parse_usize_list(s).map(UsizeList).map_err(|e| e.to_string())
}

#[derive(Clone, Debug)]
struct ChannelList(Vec<ChannelKind>);

#[derive(Clone, Debug)]
struct EstimatorList(Vec<EstimatorKind>);

fn channels(s: &str) -> Result<ChannelList, String> {
    parse_keyword_list(s).map(ChannelList).map_err(|e| e.to_string())
}

fn estimators(s: &str) -> Result<EstimatorList, String> {
    parse_keyword_list(s).map(EstimatorList).map_err(|e| e.to_string())
}

fn constellation(s: &str) -> Result<Constellation, String> {
    s.parse().map_err(|e: afdm::Error| e.to_string())
}

fn doppler(s: &str) -> Result<DopplerDistribution, String> {
    match s {
        "continuous" => Ok(DopplerDistribution::Continuous),
        "integer" => Ok(DopplerDistribution::Integer),
        other => Err(format!("unknown Doppler model '{other}', expected continuous or integer")),
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Key-value (TOML) file with ExperimentConfig fields; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// CSV destination (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Subcarriers per symbol.
    #[arg(long)]
    n: Option<usize>,
    /// First chirp parameter (default: (2*max_doppler+1)/(2n)).
    #[arg(long)]
    c1: Option<f64>,
    /// Second chirp parameter (default: 1/(2n)).
    #[arg(long)]
    c2: Option<f64>,
    /// CPP lengths: list `5,20,60` or range `start:step:stop`.
    #[arg(long, value_parser = usize_list, value_name = "LIST")]
    l: Option<UsizeList>,
    /// SNR points in dB: list or range; `inf` is noiseless.
    #[arg(long, value_parser = f64_list, value_name = "LIST")]
    snr: Option<F64List>,
    /// Channels: awgn, doubly (comma-separated).
    #[arg(long, value_parser = channels, value_name = "LIST")]
    channel: Option<ChannelList>,
    /// Estimators: joint, stepwise (comma-separated).
    #[arg(long, value_parser = estimators, value_name = "LIST")]
    estimator: Option<EstimatorList>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    max_delay: Option<usize>,
    #[arg(long)]
    max_doppler: Option<f64>,
    /// Path Doppler model: continuous or integer.
    #[arg(long, value_parser = doppler)]
    doppler: Option<DopplerDistribution>,
    /// MSE runs: pinned offsets. CIR sweep: offset grid.
    #[arg(long, value_parser = f64_list, value_name = "LIST")]
    eps: Option<F64List>,
    /// Half-width of the uniform offset distribution.
    #[arg(long)]
    eps_spread: Option<f64>,
    /// Frequency grid step of the joint estimator (default: 1/(64n)).
    #[arg(long)]
    eps_grid_step: Option<f64>,
    /// Trials per point (BER: minimum frames per point).
    #[arg(long)]
    trials: Option<usize>,
    /// Bootstrap resamples for standard errors.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// BER: residual offset of the fixed-residual schemes.
    #[arg(long)]
    eps_residual: Option<f64>,
    /// BER: offset seen by the estimator in the estimated scheme.
    #[arg(long)]
    eps_offset: Option<f64>,
    #[arg(long, value_parser = constellation)]
    constellation: Option<Constellation>,
    /// BER: bit errors to collect per scheme before stopping.
    #[arg(long)]
    min_bit_errors: Option<u64>,
    /// BER: frame cap per point.
    #[arg(long)]
    max_trials: Option<usize>,
    /// CIR sweep: also write Q_{m,0} for the first offset to this CSV file.
    #[arg(long, value_name = "FILE")]
    q_out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: None,
            n: self.n,
            c1: self.c1,
            c2: self.c2,
            l: self.l.as_ref().map(|v| v.0.clone()),
            snr_db: self.snr.as_ref().map(|v| v.0.clone()),
            channels: self.channel.as_ref().map(|v| v.0.clone()),
            estimators: self.estimator.as_ref().map(|v| v.0.clone()),
            paths: self.paths,
            max_delay: self.max_delay,
            max_doppler: self.max_doppler,
            doppler: self.doppler,
            eps: self.eps.as_ref().map(|v| v.0.clone()),
            eps_spread: self.eps_spread,
            eps_grid_step: self.eps_grid_step,
            trials: self.trials,
            seed: self.seed,
            bootstrap: self.bootstrap,
            eps_residual: self.eps_residual,
            eps_offset: self.eps_offset,
            constellation: self.constellation,
            min_bit_errors: self.min_bit_errors,
            max_trials: self.max_trials,
        }
    }
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// CSV destination (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn summarize(cfg: &ExperimentConfig, results: &ResultSet) {
    match results {
        ResultSet::Mse(records) => {
            for r in records {
                eprintln!(
                    "  {:<7} {:<8} L={:<3} snr={:>5} dB  {:<18} {:.4e} ± {:.1e}",
                    r.channel, r.estimator, r.l, r.snr_db, r.metric, r.value, r.std_err
                );
            }
        }
        ResultSet::Cir(records) => {
            for r in records {
                eprintln!(
                    "  eps={:<5} plain={:>8.3} dB  mirror={:>8.3} dB",
                    r.eps, r.cir_plain_db, r.cir_mm_db
                );
            }
        }
        ResultSet::Ber(records) => {
            eprintln!(
                "  bits per frame: mirror {} (N/2-1), null-guard {} (N/2); rates are per bit",
                cfg.n / 2 - 1,
                cfg.n / 2
            );
            for r in records {
                eprintln!(
                    "  {:<16} L={:<3} snr={:>5} dB  ber={:.3e} ({} / {} bits, {} frames)",
                    r.scheme, r.l, r.snr_db, r.ber, r.bit_errors, r.bits, r.frames
                );
            }
        }
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> afdm::Result<()> {
    let cfg = ExperimentConfig::load(kind, args.config.as_deref(), &args.overrides())?;
    let start = Instant::now();
    let results = run_experiment(&cfg)?;
    let mut out = open_output(args.out.as_deref())?;
    results.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.q_out {
        if kind == ExperimentKind::CirSweep {
            let params = cfg.params(cfg.l[0])?;
            write_csv(BufWriter::new(File::create(path)?), &q_profile(cfg.eps[0], &params))?;
        } else {
            eprintln!("warning: --q-out only applies to cir-sweep; ignored");
        }
    }
    eprintln!(
        "{kind}: {} records, seed {}, {:.1} s",
        results.len(),
        cfg.seed,
        start.elapsed().as_secs_f64()
    );
    summarize(&cfg, &results);
    Ok(())
}

fn selftest(args: &SelftestArgs) -> afdm::Result<bool> {
    let checks = afdm::selftest::run_all()?;
    let mut out = open_output(args.out.as_deref())?;
    write_csv(&mut out, &checks)?;
    out.flush()?;
    for c in &checks {
        eprintln!(
            "{} {} (max error {:.2e}, tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.check,
            c.max_error,
            c.tolerance
        );
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::MseVsL(a) => run(ExperimentKind::MseVsL, a).map(|_| true),
        Command::MseVsSnr(a) => run(ExperimentKind::MseVsSnr, a).map(|_| true),
        Command::JointVsStepwise(a) => run(ExperimentKind::JointVsStepwise, a).map(|_| true),
        Command::CirSweep(a) => run(ExperimentKind::CirSweep, a).map(|_| true),
        Command::Ber(a) => run(ExperimentKind::Ber, a).map(|_| true),
        Command::Selftest(a) => selftest(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(afdm::Error::InvalidConfig(fields)) => {
            eprintln!("error: invalid configuration");
            for f in fields {
                eprintln!("  {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
