use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use onebit_wss::acquisition::BitDepth;
use onebit_wss::harness::{noise_profile, run_sweep, sense_frame, ExperimentConfig};
use onebit_wss::iq::{read_iq, storage_precision, write_iq, IqMeta};
use onebit_wss::signal_model::{draw_support, synthesize_frame, SupportSet};
use onebit_wss::Error;

/// Compressive wideband spectrum sensing from 1-bit multicoset samples.
#[derive(Parser)]
#[command(name = "onebit-wss", version)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, env = "ONEBIT_WSS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sense one synthetic frame and print the detected channels.
    Sense(SenseArgs),
    /// Run a Monte Carlo sweep and write its metrics as CSV.
    Sweep(SweepArgs),
    /// Write the per-channel 1-bit distortion power of one frame as CSV.
    NoiseProfile(ProfileArgs),
    /// Sense a frame read from an IQ file.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Scenario {
    /// Experiment config (TOML); the first value of each sweep axis is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of cosets.
    #[arg(long)]
    p: Option<usize>,
    /// Quantizer depth: an integer or "none".
    #[arg(long)]
    bits: Option<BitDepth>,
}

#[derive(Args)]
struct SenseArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Number of occupied channels.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Also write the Nyquist-rate frame as an IQ file.
    #[arg(long)]
    export_iq: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's `out`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// IQ file; its `.meta` sidecar must sit next to it.
    input: PathBuf,
    #[command(flatten)]
    scenario: Scenario,
}

/// Bad input rather than a failed run; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: Error) -> anyhow::Error {
    match e {
        Error::Config(_) | Error::Parameter(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(usage),
        None => Ok(ExperimentConfig::default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_detection(
    out: &mut impl Write,
    pattern: &[usize],
    truth: Option<&SupportSet>,
    support: &SupportSet,
    k_hat: usize,
    eigenvalues: &[f64],
) -> io::Result<()> {
    writeln!(out, "pattern: {pattern:?}")?;
    if let Some(t) = truth {
        writeln!(out, "truth: {t}")?;
    }
    writeln!(out, "estimate: {support}")?;
    writeln!(out, "k_hat: {k_hat}")?;
    let eigs: Vec<String> = eigenvalues.iter().map(|v| format!("{v:.6e}")).collect();
    writeln!(out, "eigenvalues: {}", eigs.join(" "))
}

fn sense(args: SenseArgs) -> Result<()> {
    let cfg = load_config(args.scenario.config.as_deref())?;
    let p = args.scenario.p.unwrap_or(cfg.p[0]);
    let bits = args.scenario.bits.unwrap_or(cfg.bits[0]);
    let k = args.k.unwrap_or(cfg.k[0]);
    let scenario = cfg.base.clone().with_snr_db(args.snr_db.unwrap_or(cfg.snr_db[0]));
    let seed = args.scenario.seed;

    let truth = draw_support(scenario.channels, k, seed).map_err(usage)?;
    let frame = synthesize_frame::<f64>(&scenario, &truth, seed).map_err(usage)?;
    if let Some(path) = &args.export_iq {
        write_iq(path, &frame.samples, &IqMeta::for_config(&scenario))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    // Detect on exactly what an IQ file would hold, so replay agrees.
    let stored = storage_precision(&frame.samples);
    let (pattern, det) = sense_frame(&stored, &scenario, p, bits, seed, &cfg.pipeline).map_err(usage)?;
    let mut out = io::stdout().lock();
    print_detection(&mut out, pattern.offsets(), Some(&truth), &det.support, det.model.k_hat, &det.model.eigenvalues)?;
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let cfg = load_config(args.scenario.config.as_deref())?;
    let (samples, meta) = read_iq::<f64>(&args.input).map_err(usage)?;
    let mut scenario = cfg.base.clone();
    scenario.channels = meta.channels;
    scenario.frame_len = meta.frame_len;
    scenario.bandwidth_hz = meta.sample_rate_hz;
    scenario.subcarriers = scenario.subcarriers.min(meta.frame_len);
    let p = args.scenario.p.unwrap_or(cfg.p[0]);
    let bits = args.scenario.bits.unwrap_or(cfg.bits[0]);
    let (pattern, det) = sense_frame(&samples, &scenario, p, bits, args.scenario.seed, &cfg.pipeline).map_err(usage)?;
    let mut out = io::stdout().lock();
    print_detection(&mut out, pattern.offsets(), None, &det.support, det.model.k_hat, &det.model.eigenvalues)?;
    Ok(())
}

fn sweep(args: SweepArgs, threads: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(usage)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.validate().map_err(usage)?;
    let report = run_sweep(&cfg).map_err(usage)?;
    for f in &report.failures {
        eprintln!(
            "warning: cell p={} snr_db={} bits={} K={}: {}",
            f.cell.p, f.cell.snr_db, f.cell.bits, f.cell.k, f.error
        );
    }
    let dest = args.out.or(cfg.out);
    let mut out = output(dest.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let k = args.k.unwrap_or(cfg.k[0]);
    let scenario = cfg.base.clone().with_snr_db(args.snr_db.unwrap_or(cfg.snr_db[0]));
    let prof = noise_profile(&scenario, k, args.seed).map_err(usage)?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "channel,occupied,quantization_power,white_power")?;
    for (i, (q, w)) in prof.quantization.iter().zip(&prof.white).enumerate() {
        writeln!(out, "{},{},{q},{w}", i + 1, u8::from(prof.occupied.contains(i + 1)))?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Sense(a) => sense(a),
        Command::Sweep(a) => sweep(a, cli.threads),
        Command::NoiseProfile(a) => profile(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
