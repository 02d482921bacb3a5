//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line regardless of output capture; exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use onebit_wss::acquisition::{bussgang_gain_slices, draw_pattern, multicoset_sample, quantize_1bit_slice, BitDepth};
use onebit_wss::covariance_subspace::{
    build_measurement_matrix, eigendecompose, sample_covariance, signal_subspace, OrderEstimator,
};
use onebit_wss::harness::{noise_profile, run_sweep, run_trial, trial_seed, Cell, ExperimentConfig, MetricsRow};
use onebit_wss::pipeline::SensingPipeline;
use onebit_wss::seed;
use onebit_wss::signal_model::{draw_support, synthesize_frame, SpectrumConfig};
use onebit_wss::support_recovery::somp;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> Verdict;

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn sweep(text: &str) -> Vec<MetricsRow> {
    let cfg = ExperimentConfig::from_toml_str(text).expect("valid sweep config");
    let report = run_sweep(&cfg).expect("sweep runs");
    assert!(report.failures.is_empty(), "trial failures: {:?}", report.failures);
    report.rows
}

fn find(rows: &[MetricsRow], p: usize, snr: f64, bits: BitDepth, k: usize) -> &MetricsRow {
    rows.iter()
        .find(|r| r.p == p && r.snr_db == snr && r.bits == bits && r.k == k)
        .expect("cell present")
}

fn rank_law() -> Verdict {
    let cfg = SpectrumConfig {
        frame_len: 2000,
        ..SpectrumConfig::default()
    }
    .noiseless();
    let worst = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let support = draw_support(40, 4, s).unwrap();
            let frame = synthesize_frame::<f64>(&cfg, &support, s).unwrap();
            let pattern = draw_pattern(40, 20, s).unwrap();
            let y = multicoset_sample(&frame.samples, &pattern, cfg.frame_len).unwrap();
            let model = eigendecompose(&sample_covariance(&y)).unwrap();
            model.eigenvalues[4] / model.eigenvalues[0]
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        worst < 1e-6,
        format!("largest λ5/λ1 over 50 seeds = {worst:.2e} (need < 1e-6)"),
    )
}

fn detection_p20() -> Verdict {
    let rows = sweep(
        r#"
        p = [20]
        snr_db = [5.0]
        bits = [1]
        k = [2, 4, 8]
        trials = 1000
        master_seed = 3
        "#,
    );
    let pass = rows.iter().all(|r| r.pd >= 0.95 && r.pf <= 0.05);
    let detail = rows
        .iter()
        .map(|r| format!("K={} pd={:.4} pf={:.4}", r.k, r.pd, r.pf))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(pass, format!("{detail} (need pd ≥ 0.95, pf ≤ 0.05)"))
}

fn quantization_gap() -> Verdict {
    let rows = sweep(
        r#"
        p = [8, 12, 16, 20, 24]
        snr_db = [0.0, 5.0]
        bits = [1, 4, "none"]
        k = [4]
        trials = 1000
        master_seed = 4
        "#,
    );
    let four = BitDepth::bits(4).unwrap();
    let mut gap_a: f64 = 0.0;
    let mut gap_b: f64 = 0.0;
    let mut detail = Vec::new();
    for p in [8, 12, 16, 20, 24] {
        let reference = find(&rows, p, 0.0, BitDepth::UNQUANTIZED, 4).pd;
        let a = find(&rows, p, 0.0, four, 4).pd;
        let b = find(&rows, p, 5.0, BitDepth::ONE_BIT, 4).pd;
        gap_a = gap_a.max((a - reference).abs());
        if p >= 16 {
            gap_b = gap_b.max((b - reference).abs());
        }
        detail.push(format!("p={p}: none@0={reference:.3} 4b@0={a:.3} 1b@5={b:.3}"));
    }
    verdict(
        gap_a <= 0.03 && gap_b <= 0.05,
        format!(
            "max |4-bit − none| = {gap_a:.3} (≤ 0.03), max |1-bit@5dB − none@0dB| for p ≥ 16 = {gap_b:.3} (≤ 0.05); {}",
            detail.join(", ")
        ),
    )
}

fn false_alarm_peak() -> Verdict {
    let ps: Vec<usize> = (2..=40).step_by(2).collect();
    let text = format!(
        "p = {ps:?}\nsnr_db = [5.0]\nbits = [1]\nk = [4]\ntrials = 1000\nmaster_seed = 5\n"
    );
    let rows = sweep(&text);
    let pf: Vec<f64> = ps.iter().map(|&p| find(&rows, p, 5.0, BitDepth::ONE_BIT, 4).pf).collect();
    let (arg, max) = pf
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let interior = arg > 0 && arg < ps.len() - 1;
    let curve = ps
        .iter()
        .zip(&pf)
        .map(|(p, v)| format!("{p}:{v:.4}"))
        .collect::<Vec<_>>()
        .join(" ");
    verdict(
        interior && max > 0.0,
        format!("pf peaks at p={} ({max:.4}) on p ∈ [2, 40]; curve {curve}", ps[arg]),
    )
}

fn noise_concentration() -> Verdict {
    let cfg = SpectrumConfig::default().with_snr_db(10.0);
    let per_seed: Vec<(f64, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let prof = noise_profile(&cfg, 4, s).unwrap();
            (prof.mean_over(true), prof.mean_over(false), prof.vacant_cv())
        })
        .collect();
    let n = per_seed.len() as f64;
    let occupied = per_seed.iter().map(|t| t.0).sum::<f64>() / n;
    let vacant = per_seed.iter().map(|t| t.1).sum::<f64>() / n;
    let cv = per_seed.iter().map(|t| t.2).sum::<f64>() / n;
    let ratio = occupied / vacant;
    verdict(
        ratio > 1.5 && cv < 0.2,
        format!("K=4, 10 dB, 100 seeds: occupied/vacant = {ratio:.3} (> 1.5), vacant CV = {cv:.3} (< 0.2)"),
    )
}

fn bussgang() -> Verdict {
    let mut rng = seed::stream(6, 0);
    let h = 0.5f64.sqrt();
    let y: Vec<Complex64> = (0..100_000)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(h * re, h * im)
        })
        .collect();
    let q = quantize_1bit_slice(&y);
    let gain = bussgang_gain_slices(&y, &q).unwrap();
    let target = (2.0 / PI).sqrt();
    let rel = (gain / target - 1.0).abs();
    verdict(
        rel < 0.02,
        format!("B̂ = {gain:.5}, √(2/π) = {target:.5}, relative error {rel:.2e} (< 2e-2)"),
    )
}

/// Best size-`k` column subset of `dict` by least-squares residual of `u`.
fn exhaustive_support(dict: &DMatrix<Complex64>, u: &DMatrix<Complex64>, k: usize) -> Vec<usize> {
    let l = dict.ncols();
    let mut best = (f64::INFINITY, Vec::new());
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let cols = DMatrix::from_fn(dict.nrows(), k, |i, j| dict[(i, subset[j])]);
        let coeffs = cols.clone().svd(true, true).solve(u, 1e-12).unwrap();
        let residual = (u - &cols * coeffs).norm();
        if residual < best.0 {
            best = (residual, subset.iter().map(|c| c + 1).collect());
        }
        // Next combination in lexicographic order.
        let mut i = k;
        while i > 0 && subset[i - 1] == l - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    best.1
}

fn oracle_equivalence() -> Verdict {
    let (l, p, k) = (8, 6, 2);
    let cfg = SpectrumConfig {
        channels: l,
        frame_len: 200,
        subcarriers: 200,
        ..SpectrumConfig::default()
    }
    .noiseless();
    let agree = (0..100u64)
        .filter(|&s| {
            let support = draw_support(l, k, s).unwrap();
            let frame = synthesize_frame::<f64>(&cfg, &support, s).unwrap();
            let pattern = draw_pattern(l, p, s).unwrap();
            let y = multicoset_sample(&frame.samples, &pattern, cfg.frame_len).unwrap();
            let model = eigendecompose(&sample_covariance(&y)).unwrap();
            let u = signal_subspace(&model, k).unwrap();
            let greedy = somp(&build_measurement_matrix(&pattern).conj(), &u, k).unwrap();

            // Dictionary rebuilt from the offsets: conjugate steering vectors
            // exp(+j2π·j·c_i/L).
            let offsets = pattern.offsets();
            let dict = DMatrix::from_fn(p, l, |i, j| {
                Complex64::from_polar(1.0, 2.0 * PI * (j * offsets[i]) as f64 / l as f64)
            });
            let un = DMatrix::from_fn(p, k, |i, j| u[(i, j)]);
            greedy.support.to_vec() == exhaustive_support(&dict, &un, k)
        })
        .count();
    verdict(agree >= 99, format!("SOMP = exhaustive search on {agree}/100 seeds (need ≥ 99)"))
}

fn eft_sanity() -> Verdict {
    let pipeline = SensingPipeline {
        order: OrderEstimator {
            p_false: 1e-3,
            ..OrderEstimator::default()
        },
        ..SensingPipeline::default()
    };
    let base = SpectrumConfig::default();
    let zero_rate = |bits: BitDepth| {
        let cell = Cell {
            p: 20,
            snr_db: 0.0,
            bits,
            k: 0,
        };
        let hits = (0..1000)
            .into_par_iter()
            .filter(|&t| run_trial::<f64>(&base, &cell, trial_seed(8, t), &pipeline).unwrap().k_hat == 0)
            .count();
        hits as f64 / 1000.0
    };
    let noise_unq = zero_rate(BitDepth::UNQUANTIZED);
    let noise_1b = zero_rate(BitDepth::ONE_BIT);
    let cell = Cell {
        p: 20,
        snr_db: f64::INFINITY,
        bits: BitDepth::UNQUANTIZED,
        k: 4,
    };
    let exact = (0..1000)
        .into_par_iter()
        .filter(|&t| run_trial::<f64>(&base, &cell, trial_seed(9, t), &pipeline).unwrap().k_hat == 4)
        .count();
    verdict(
        noise_unq >= 0.99 && noise_1b >= 0.99 && exact == 1000,
        format!(
            "noise only: K̂=0 in {:.1}% (unquantized), {:.1}% (1-bit), need ≥ 99%; noiseless K=4: K̂=4 in {exact}/1000",
            100.0 * noise_unq,
            100.0 * noise_1b
        ),
    )
}

fn determinism() -> Verdict {
    let text = r#"
        channels = 20
        frame_len = 100
        subcarriers = 50
        p = [6, 10]
        snr_db = [0.0, 5.0]
        bits = [1, 3]
        k = [3]
        trials = 50
        master_seed = 77
        "#;
    let mut a = ExperimentConfig::from_toml_str(text).unwrap();
    a.threads = Some(1);
    let mut b = a.clone();
    b.threads = Some(4);
    let first = run_sweep(&a).unwrap().to_csv_string();
    let second = run_sweep(&a).unwrap().to_csv_string();
    let threaded = run_sweep(&b).unwrap().to_csv_string();
    verdict(
        first == second && first == threaded,
        format!(
            "{} CSV bytes; repeat identical: {}; 1 vs 4 threads identical: {}",
            first.len(),
            first == second,
            first == threaded
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("rank law of the noiseless covariance", rank_law),
        ("detection at p=20, 1-bit, 5 dB", detection_p20),
        ("quantization gap versus p", quantization_gap),
        ("interior false-alarm peak", false_alarm_peak),
        ("distortion concentrates in occupied channels", noise_concentration),
        ("Bussgang gain of CN(0,1)", bussgang),
        ("SOMP matches exhaustive search", oracle_equivalence),
        ("EFT order estimation", eft_sanity),
        ("sweep determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
