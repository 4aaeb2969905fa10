//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use acs_core::designs::{acs_from_initial, partition_into_networks, Condition, SrsSample};
use acs_core::efficiency::{
    acs_mean_variance, decompose_sum_of_squares, feasible_region, fpc_variance_condition, kappa_values, strictly_less,
    superiority_condition, variance_ratio,
};
use acs_core::estimators::{estimate_acs, estimate_srs};
use acs_core::harness::{
    run_experiment, sweep_condition_to_adapt, sweep_dispersion, sweep_hit_level, sweep_spread, ExperimentConfig,
    SweepResult, TrendReport, PAPER_SPREADS,
};
use acs_core::io::ExperimentOutputs;
use acs_core::population::{generate_count_field, variance_to_mean_ratio, DispersionSpec, Family};
use common::*;
use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn decomposition_identity() -> Outcome {
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (w, h) = random_dims(&mut rng, 30);
        let frame = random_frame(&mut rng, w, h);
        let c = rng.random_range(0..5) as f64;
        let p = partition_into_networks(&frame, Condition::new(c));
        let d = match decompose_sum_of_squares(&frame, &p) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("decomposition failed: {e}")),
        };
        let gap = (d.total_ss - d.within_ss - d.between_ss).abs();
        if d.total_ss > 0.0 {
            worst = worst.max(gap / d.total_ss);
        } else if gap > 0.0 {
            return outcome(false, format!("zero total with gap {gap}"));
        }
    }
    outcome(worst <= 1e-9, format!("1000 frames, worst relative gap {worst:.2e}"))
}

fn exhaustive_unbiasedness() -> Outcome {
    let mut rng = rng(102);
    let (mut worst_mean, mut worst_var, mut samples) = (0.0f64, 0.0f64, 0usize);
    let frames = 24;
    for _ in 0..frames {
        let frame = small_varied_frame(&mut rng, 12);
        let n = frame.len();
        let c = rng.random_range(0..3) as f64;
        let mu = frame.mean();
        let d = decompose_sum_of_squares(&frame, &partition_into_networks(&frame, Condition::new(c))).unwrap();
        for k in 2..n {
            let (mut acs, mut srs) = (Vec::new(), Vec::new());
            for idx in (0..n).combinations(k) {
                let s = acs_from_initial(&frame, idx.clone(), Condition::new(c)).unwrap();
                acs.push(estimate_acs(&s, n).unwrap().mean_estimate);
                srs.push(
                    estimate_srs(&SrsSample::from_indices(&frame, idx), n)
                        .unwrap()
                        .mean_estimate,
                );
            }
            samples += acs.len();
            let (acs_mean, acs_var) = mean_var(&acs);
            let (srs_mean, _) = mean_var(&srs);
            worst_mean = worst_mean
                .max((acs_mean - mu).abs() / mu)
                .max((srs_mean - mu).abs() / mu);
            let closed = acs_mean_variance(&d, k).unwrap();
            let gap = (closed - acs_var).abs();
            if gap > 0.0 {
                worst_var = worst_var.max(gap / closed.abs().max(acs_var.abs()));
            }
        }
    }
    outcome(
        worst_mean <= 1e-12 && worst_var <= 1e-10,
        format!(
            "{frames} frames, {samples} samples; worst mean error {worst_mean:.2e}, worst variance error {worst_var:.2e}"
        ),
    )
}

/// The four forms of the ACS superiority condition for one tuple.
fn superiority_forms(frame: &acs_core::GridFrame, c: f64, n1: usize, m: usize) -> Option<[bool; 4]> {
    let d = decompose_sum_of_squares(frame, &partition_into_networks(frame, Condition::new(c))).ok()?;
    if !(d.sigma2 > 0.0 && d.within_ss > 0.0 && m < d.population) {
        return None;
    }
    let ratio = strictly_less(variance_ratio(&d, n1, m).ok()?, 1.0);
    let sides = superiority_condition(&d, n1, m).ok()?.superior;
    let fpc = fpc_variance_condition(&d, n1, m).ok()?;
    let region = feasible_region(d.population, kappa_values(&d, n1, m).ok()?.kappa1)
        .ok()?
        .contains(m);
    Some([ratio, sides, fpc, region])
}

fn chain_equivalence() -> Outcome {
    let mut rng = rng(103);
    let (mut tuples, mut superior, mut disagreements) = (0, 0, Vec::new());
    while tuples < 1000 {
        let (w, h) = random_dims(&mut rng, 20);
        let frame = random_frame(&mut rng, w, h);
        let n = frame.len();
        if n < 3 {
            continue;
        }
        let c = rng.random_range(0..3) as f64;
        let n1 = rng.random_range(1..n);
        let m = rng.random_range(1..n);
        let Some(forms) = superiority_forms(&frame, c, n1, m) else {
            continue;
        };
        tuples += 1;
        if forms.iter().all(|&f| f == forms[0]) {
            superior += forms[0] as usize;
        } else {
            disagreements.push(format!("{w}x{h} n1={n1} m={m}: {forms:?}"));
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "{tuples} tuples, {superior} superior, {} disagreements {}",
            disagreements.len(),
            disagreements.iter().take(3).join("; ")
        ),
    )
}

fn observations() -> Outcome {
    let mut rng = rng(104);
    let (mut equal, mut larger, mut failures) = (0, 0, 0);
    while equal + larger < 1000 {
        let (w, h) = random_dims(&mut rng, 20);
        let frame = random_frame(&mut rng, w, h);
        let n = frame.len();
        if n < 3 {
            continue;
        }
        let c = rng.random_range(0..3) as f64;
        let Ok(d) = decompose_sum_of_squares(&frame, &partition_into_networks(&frame, Condition::new(c))) else {
            continue;
        };
        if d.within_ss <= 0.0 {
            continue;
        }
        let (n1, m) = if equal <= larger {
            equal += 1;
            let k = rng.random_range(1..n);
            (k, k)
        } else {
            larger += 1;
            let m = rng.random_range(1..n - 1);
            (rng.random_range(m + 1..n), m)
        };
        let s = superiority_condition(&d, n1, m).unwrap();
        let lhs_ok = if n1 == m { s.lhs == 0.0 } else { s.lhs < 0.0 };
        if !(s.superior && lhs_ok) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{equal} equal-size and {larger} larger-n1 instances, {failures} violations"),
    )
}

fn average_trends(runs: &[SweepResult]) -> TrendReport {
    let trends: Vec<TrendReport> = runs.iter().map(|r| r.trend.clone()).collect();
    TrendReport::average(&trends).unwrap()
}

fn fmt_series(t: &TrendReport) -> String {
    t.values
        .iter()
        .zip(&t.relative_precision)
        .map(|(v, r)| match r {
            Some(r) => format!("{v}:{r:.3}"),
            None => format!("{v}:NA"),
        })
        .join(" ")
}

fn table_reproduction() -> Outcome {
    let tables = 20;
    let runs: Vec<SweepResult> = (0..tables)
        .into_par_iter()
        .map(|i| sweep_spread(&ExperimentConfig::paper_default(5000 + i), &PAPER_SPREADS).unwrap())
        .collect();
    let avg = average_trends(&runs);
    let rp = |sd: f64| {
        let i = avg.values.iter().position(|&v| v == sd).unwrap();
        avg.relative_precision[i].unwrap_or(f64::NAN)
    };
    let tight = rp(2.0 / 3.0);
    let checks = [
        (1.5..=3.0).contains(&tight),
        tight > rp(3.0),
        (1.1..=2.0).contains(&rp(2.0)),
        (1.1..=2.0).contains(&rp(3.0)),
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "{tables} tables; mean relative efficiency by spread {} (band checks {checks:?})",
            fmt_series(&avg)
        ),
    )
}

fn trend_runs(
    seeds: u64,
    base_seed: u64,
    make: impl Fn(u64) -> ExperimentConfig + Sync,
    run: impl Fn(&ExperimentConfig) -> SweepResult + Sync,
) -> TrendReport {
    let runs: Vec<SweepResult> = (0..seeds).into_par_iter().map(|s| run(&make(base_seed + s))).collect();
    average_trends(&runs)
}

const TREND_SEEDS: u64 = 50;

fn counts_config(mean: f64, vmr: f64, condition: f64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::counts(DispersionSpec::for_vmr(mean, vmr), 20, 20, seed);
    cfg.condition = condition;
    cfg
}

fn trend_dispersion() -> Outcome {
    let t = trend_runs(
        TREND_SEEDS,
        7000,
        |s| counts_config(2.0, 1.0, 2.0, s),
        |cfg| sweep_dispersion(cfg, &[1.0, 2.0, 4.0, 8.0]).unwrap(),
    );
    outcome(
        t.verdict.is_nondecreasing(),
        format!("mean 2, C 2, {TREND_SEEDS} seeds: {} ({:?})", fmt_series(&t), t.verdict),
    )
}

fn trend_condition() -> Outcome {
    let t = trend_runs(
        TREND_SEEDS,
        8000,
        |s| counts_config(2.0, 4.0, 1.0, s),
        |cfg| sweep_condition_to_adapt(cfg, &[1.0, 2.0, 3.0]).unwrap(),
    );
    outcome(
        t.verdict.is_nonincreasing(),
        format!(
            "negative binomial mean 2, VMR 4, {TREND_SEEDS} seeds: {} ({:?})",
            fmt_series(&t),
            t.verdict
        ),
    )
}

fn trend_hit_level() -> Outcome {
    let t = trend_runs(
        TREND_SEEDS,
        9000,
        |s| counts_config(2.0, 4.0, 0.0, s),
        |cfg| sweep_hit_level(cfg, &[0.1, 0.5, 2.0]).unwrap(),
    );
    let excluded: usize = t.excluded.iter().sum();
    outcome(
        t.verdict.is_nonincreasing(),
        format!(
            "VMR 4, C 0, {TREND_SEEDS} seeds: {} ({:?}, {excluded} degenerate replicates excluded)",
            fmt_series(&t),
            t.verdict
        ),
    )
}

fn calibration() -> Outcome {
    let side = 1000;
    let cases = [
        (DispersionSpec::new(Family::Poisson, 2.0, 1.0), 1.0),
        (DispersionSpec::new(Family::NegativeBinomial, 2.0, 4.0), 4.0),
        (DispersionSpec::new(Family::NegativeBinomial, 2.0, 2.0), 2.0),
        (DispersionSpec::new(Family::NegativeBinomial, 0.5, 8.0), 8.0),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (spec, target)) in cases.iter().enumerate() {
        let frame = generate_count_field(spec, side, side, (300 + i as u64).into()).unwrap();
        let vmr = variance_to_mean_ratio(&frame).unwrap();
        let ok = (vmr / target - 1.0).abs() <= 0.05;
        pass &= ok;
        parts.push(format!(
            "{} mean {} target {target}: {vmr:.4}",
            spec.family.name(),
            spec.target_mean
        ));
    }
    let constant = generate_count_field(
        &DispersionSpec::new(Family::UniformConstant, 3.0, 0.0),
        20,
        20,
        1.into(),
    )
    .and_then(|f| variance_to_mean_ratio(&f));
    let constant_ok = matches!(constant, Ok(v) if v == 0.0);
    pass &= constant_ok;
    parts.push(format!("constant: {constant:?}"));
    outcome(pass, format!("10^6 cells each; {}", parts.join("; ")))
}

fn experiment_csvs(config: &ExperimentConfig) -> (Vec<u8>, Vec<u8>) {
    let out = ExperimentOutputs::new(run_experiment(config).unwrap());
    (out.replicates_csv().unwrap(), out.summary_csv().unwrap())
}

fn determinism() -> Outcome {
    let config = ExperimentConfig::paper_default(42);
    let first = experiment_csvs(&config);
    let second = experiment_csvs(&config);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| experiment_csvs(&config));
    let dir = tempfile::tempdir().unwrap();
    let mut on_disk = Vec::new();
    for (i, (reps, summary)) in [&first, &second].into_iter().enumerate() {
        let r = dir.path().join(format!("run{i}/replicates.csv"));
        let s = dir.path().join(format!("run{i}/summary.csv"));
        acs_core::io::write_atomic(&r, reps).unwrap();
        acs_core::io::write_atomic(&s, summary).unwrap();
        on_disk.push((std::fs::read(r).unwrap(), std::fs::read(s).unwrap()));
    }
    let rows = first.1.iter().filter(|&&b| b == b'\n').count() - 1;
    outcome(
        first == second && first == serial && on_disk[0] == on_disk[1] && rows == 5,
        format!(
            "paper-default config, seed 42: replicates.csv {} bytes, summary.csv {rows} rows; repeat and single-thread runs identical",
            first.0.len()
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        (
            "1",
            "decomposition identity",
            decomposition_identity,
            Duration::from_secs(10),
        ),
        (
            "2",
            "exhaustive unbiasedness",
            exhaustive_unbiasedness,
            Duration::from_secs(60),
        ),
        (
            "3",
            "superiority chain equivalence",
            chain_equivalence,
            Duration::from_secs(30),
        ),
        (
            "4",
            "equal and larger initial size observations",
            observations,
            Duration::MAX,
        ),
        ("5", "spread table reproduction", table_reproduction, Duration::MAX),
        (
            "6a",
            "relative precision rises with VMR",
            trend_dispersion,
            Duration::from_secs(100),
        ),
        (
            "6b",
            "relative precision falls with condition to adapt",
            trend_condition,
            Duration::from_secs(100),
        ),
        (
            "6c",
            "relative precision falls with hit level",
            trend_hit_level,
            Duration::from_secs(100),
        ),
        ("7", "dispersion calibration", calibration, Duration::MAX),
        ("8", "determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = o.pass && in_time;
        failed += !pass as usize;
        let timing = if in_time {
            String::new()
        } else {
            format!(" [over time limit {limit:?}]")
        };
        println!(
            "{} [{id}] {name}: {} ({:.2}s){timing}",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
