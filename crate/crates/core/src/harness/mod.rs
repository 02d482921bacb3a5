//! Monte Carlo experiments: single trials, parameter sweeps, CSV output and
//! the per-channel quantization-noise profile.

mod config;
mod noise_profile;

use std::io::Write;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;

use crate::acquisition::{draw_pattern, multicoset_sample, BitDepth, CosetPattern, QuantizerSpec};
use crate::pipeline::{Detection, SensingPipeline};
use crate::seed;
use crate::signal_model::{draw_support, synthesize_frame, SpectrumConfig, SupportSet};
use crate::{Error, Real, Result};

pub use config::{ExperimentConfig, DEFAULT_TRIALS};
pub use noise_profile::{noise_profile, NoiseProfile};

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p: usize,
    pub snr_db: f64,
    pub bits: BitDepth,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub truth: SupportSet,
    pub estimate: SupportSet,
    pub k_hat: usize,
    /// Support recovery stopped on a rank-deficient selection.
    pub partial: bool,
}

impl TrialOutcome {
    /// `|S ∩ Ŝ| / |S|`, taken as 1 when nothing is occupied.
    pub fn hit_fraction(&self) -> f64 {
        if self.truth.is_empty() {
            1.0
        } else {
            self.truth.intersection_len(&self.estimate) as f64 / self.truth.len() as f64
        }
    }

    /// `|Ŝ ∖ S| / (L − |S|)`, taken as 0 when every channel is occupied.
    pub fn false_alarm_fraction(&self) -> f64 {
        let vacant = self.truth.channels() - self.truth.len();
        if vacant == 0 {
            0.0
        } else {
            self.estimate.difference_len(&self.truth) as f64 / vacant as f64
        }
    }
}

/// Coset sampling, quantization and detection of one Nyquist-rate frame.
/// The coset pattern is drawn from `seed`.
pub fn sense_frame<T: Real>(
    samples: &[Complex<T>],
    cfg: &SpectrumConfig,
    p: usize,
    bits: BitDepth,
    seed: u64,
    pipeline: &SensingPipeline,
) -> Result<(CosetPattern, Detection<T>)> {
    let pattern = draw_pattern(cfg.channels, p, seed)?;
    let coset = multicoset_sample(samples, &pattern, cfg.frame_len)?;
    let quantized = QuantizerSpec::new(bits).apply(&coset)?;
    let detection = pipeline.sense(&quantized)?;
    Ok((pattern, detection))
}

/// Draws a support of size `cell.k`, synthesizes the frame at `cell.snr_db`
/// and runs the detector on it.
pub fn run_trial<T: Real>(
    cfg: &SpectrumConfig,
    cell: &Cell,
    trial_seed: u64,
    pipeline: &SensingPipeline,
) -> Result<TrialOutcome> {
    let scenario = cfg.clone().with_snr_db(cell.snr_db);
    let truth = draw_support(scenario.channels, cell.k, trial_seed)?;
    let frame = synthesize_frame::<T>(&scenario, &truth, trial_seed)?;
    let (_, detection) = sense_frame(&frame.samples, &scenario, cell.p, cell.bits, trial_seed, pipeline)?;
    Ok(TrialOutcome {
        truth,
        k_hat: detection.model.k_hat,
        estimate: detection.support,
        partial: detection.partial,
    })
}

/// Seed of trial `trial`. It does not depend on the cell, so every cell sees
/// the same supports, patterns and noise draws.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    seed::mix(master_seed, trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub p: usize,
    pub snr_db: f64,
    pub bits: BitDepth,
    pub k: usize,
    /// Successful trials the averages are taken over.
    pub trials: usize,
    pub pd: f64,
    pub pf: f64,
    pub mean_k_hat: f64,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: &str = "p,snr_db,bits,K,trials,pd,pf,mean_k_hat,wall_time_s";

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.p, self.snr_db, self.bits, self.k, self.trials, self.pd, self.pf, self.mean_k_hat, self.wall_time_s
        )
    }
}

#[derive(Debug)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SweepReport {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(out, "{}", row.csv_line())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Cells in output order: bits, then SNR, then K, with p varying fastest.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(cfg.cells());
    for &bits in &cfg.bits {
        for &snr_db in &cfg.snr_db {
            for &k in &cfg.k {
                for &p in &cfg.p {
                    out.push(Cell { p, snr_db, bits, k });
                }
            }
        }
    }
    out
}

/// Aggregates one cell's outcomes in trial order. Failed trials are left
/// out of the averages; the first failure is returned alongside.
pub fn aggregate(cell: &Cell, outcomes: Vec<Result<TrialOutcome>>, wall_time_s: f64) -> (Option<MetricsRow>, Option<Error>) {
    let mut n = 0usize;
    let (mut pd, mut pf, mut kh) = (0.0, 0.0, 0.0);
    let mut first_error = None;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                n += 1;
                pd += o.hit_fraction();
                pf += o.false_alarm_fraction();
                kh += o.k_hat as f64;
            }
            Err(e) if first_error.is_none() => {
                first_error = Some(Error::Trial {
                    trial,
                    source: Box::new(e),
                });
            }
            Err(_) => {}
        }
    }
    let row = (n > 0).then(|| MetricsRow {
        p: cell.p,
        snr_db: cell.snr_db,
        bits: cell.bits,
        k: cell.k,
        trials: n,
        pd: pd / n as f64,
        pf: pf / n as f64,
        mean_k_hat: kh / n as f64,
        wall_time_s,
    });
    (row, first_error)
}

fn run_cells(cfg: &ExperimentConfig) -> SweepReport {
    let mut report = SweepReport::default();
    for cell in cells(cfg) {
        let start = Instant::now();
        let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial::<f64>(&cfg.base, &cell, trial_seed(cfg.master_seed, t), &cfg.pipeline))
            .collect();
        let elapsed = if cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
        let (row, error) = aggregate(&cell, outcomes, elapsed);
        report.rows.extend(row);
        if let Some(error) = error {
            report.failures.push(CellFailure { cell, error });
        }
    }
    report
}

/// Runs every cell of the sweep. Trials within a cell run in parallel;
/// results are combined in trial order, so the report does not depend on
/// the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    match cfg.threads {
        None => Ok(run_cells(cfg)),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
            Ok(pool.install(|| run_cells(cfg)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
            channels = 16
            frame_len = 64
            subcarriers = 64
            p = [6, 10]
            snr_db = [10.0]
            bits = [1]
            k = [2]
            trials = 12
            master_seed = 5
            "#,
        )
        .unwrap()
    }

    #[test]
    fn outcome_fractions() {
        let truth = SupportSet::new(10, [1, 2, 3, 4]).unwrap();
        let o = TrialOutcome {
            truth: truth.clone(),
            estimate: SupportSet::new(10, [1, 2, 9]).unwrap(),
            k_hat: 3,
            partial: false,
        };
        assert_eq!(o.hit_fraction(), 0.5);
        assert!((o.false_alarm_fraction() - 1.0 / 6.0).abs() < 1e-15);
        let empty = TrialOutcome {
            truth: SupportSet::empty(10),
            estimate: SupportSet::empty(10),
            k_hat: 0,
            partial: false,
        };
        assert_eq!(empty.hit_fraction(), 1.0);
        assert_eq!(empty.false_alarm_fraction(), 0.0);
    }

    #[test]
    fn single_trial_hit_fraction_is_quantized() {
        let mut cfg = small();
        cfg.trials = 1;
        cfg.k = vec![4];
        cfg.p = vec![8];
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!([0.0, 0.25, 0.5, 0.75, 1.0].contains(&report.rows[0].pd));
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let mut one = small();
        one.threads = Some(1);
        let mut four = small();
        four.threads = Some(4);
        let a = run_sweep(&one).unwrap().to_csv_string();
        let b = run_sweep(&four).unwrap().to_csv_string();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 3);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn metrics_are_bounded() {
        for row in run_sweep(&small()).unwrap().rows {
            assert!((0.0..=1.0).contains(&row.pd) && (0.0..=1.0).contains(&row.pf));
            assert_eq!(row.wall_time_s, 0.0);
        }
    }

    #[test]
    fn failures_are_recorded_per_cell() {
        let cell = Cell {
            p: 4,
            snr_db: 0.0,
            bits: BitDepth::ONE_BIT,
            k: 2,
        };
        let good = TrialOutcome {
            truth: SupportSet::new(8, [1, 2]).unwrap(),
            estimate: SupportSet::new(8, [1, 2]).unwrap(),
            k_hat: 2,
            partial: false,
        };
        let outcomes = vec![Ok(good), Err(Error::UndefinedGain)];
        let (row, err) = aggregate(&cell, outcomes, 0.0);
        let row = row.unwrap();
        assert_eq!((row.trials, row.pd, row.pf), (1, 1.0, 0.0));
        assert!(matches!(err, Some(Error::Trial { trial: 1, .. })));
    }

    #[test]
    fn near_oracle_regime_recovers_exactly() {
        let cfg = SpectrumConfig::default();
        let cell = Cell {
            p: 40,
            snr_db: 20.0,
            bits: BitDepth::UNQUANTIZED,
            k: 4,
        };
        let pipeline = SensingPipeline::default();
        let exact = (0..20)
            .filter(|&t| {
                let o = run_trial::<f64>(&cfg, &cell, trial_seed(1, t), &pipeline).unwrap();
                o.estimate == o.truth
            })
            .count();
        assert_eq!(exact, 20);
    }
}
