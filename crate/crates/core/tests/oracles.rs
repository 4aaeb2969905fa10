//! Independent oracles: exhaustive enumeration over every possible sample
//! and closed-form values recomputed outside the library.

mod common;

use acs_core::designs::{acs_from_initial, partition_into_networks, Condition, SrsSample};
use acs_core::efficiency::{
    acs_mean_variance, decompose_sum_of_squares, srs_variance_fpc, superiority_condition, variance_ratio,
};
use acs_core::estimators::{estimate_acs, estimate_srs};
use acs_core::GridFrame;
use common::*;
use itertools::Itertools;

#[test]
fn srs_enumeration_on_four_cells() {
    let frame = GridFrame::new(4, 1, vec![0, 1, 2, 3]).unwrap();
    let (mut means, mut vars) = (Vec::new(), Vec::new());
    for idx in (0..4).combinations(2) {
        let r = estimate_srs(&SrsSample::from_indices(&frame, idx), 4).unwrap();
        means.push(r.mean_estimate);
        vars.push(r.variance_of_mean);
    }
    assert_eq!(means.len(), 6);
    let (mean, spread) = mean_var(&means);
    assert!((mean - 1.5).abs() < 1e-15);
    let avg_var = vars.iter().sum::<f64>() / 6.0;
    assert!((avg_var - 5.0 / 12.0).abs() < 1e-15);
    // the estimator's expectation is also the true sampling variance
    assert!((spread - 5.0 / 12.0).abs() < 1e-15);
}

#[test]
fn acs_enumeration_on_two_by_two() {
    let frame = GridFrame::new(2, 2, vec![2, 2, 0, 0]).unwrap();
    let mut means = Vec::new();
    for idx in (0..4).combinations(2) {
        let s = acs_from_initial(&frame, idx, Condition::new(0.0)).unwrap();
        means.push(estimate_acs(&s, 4).unwrap().mean_estimate);
    }
    let (mean, var) = mean_var(&means);
    assert!((mean - 1.0).abs() < 1e-15);
    let p = partition_into_networks(&frame, Condition::new(0.0));
    let d = decompose_sum_of_squares(&frame, &p).unwrap();
    assert!(rel_close(acs_mean_variance(&d, 2).unwrap(), var, 1e-12));
}

#[test]
fn enumeration_on_random_small_frames() {
    let mut rng = rng(11);
    for _ in 0..25 {
        let frame = small_varied_frame(&mut rng, 10);
        let n = frame.len();
        let c = [0.0, 1.0, 3.0][rand::Rng::random_range(&mut rng, 0..3)];
        let w = oracle_unit_means(&frame, c);
        let mu = frame.mean();
        let p = partition_into_networks(&frame, Condition::new(c));
        let d = decompose_sum_of_squares(&frame, &p).unwrap();
        for n1 in 2..n {
            let (mut acs, mut acs_var_est, mut srs, mut srs_var_est) = (vec![], vec![], vec![], vec![]);
            for idx in (0..n).combinations(n1) {
                let oracle_mu = idx.iter().map(|&i| w[i]).sum::<f64>() / n1 as f64;
                let s = acs_from_initial(&frame, idx.clone(), Condition::new(c)).unwrap();
                let a = estimate_acs(&s, n).unwrap();
                assert!(rel_close(a.mean_estimate, oracle_mu, 1e-12));
                acs.push(a.mean_estimate);
                acs_var_est.push(a.variance_of_mean);
                let r = estimate_srs(&SrsSample::from_indices(&frame, idx), n).unwrap();
                srs.push(r.mean_estimate);
                srs_var_est.push(r.variance_of_mean);
            }
            let (acs_mean, acs_var) = mean_var(&acs);
            let (srs_mean, srs_var) = mean_var(&srs);
            assert!(rel_close(acs_mean, mu, 1e-12), "{acs_mean} vs {mu}");
            assert!(rel_close(srs_mean, mu, 1e-12));
            assert!(rel_close(acs_mean_variance(&d, n1).unwrap(), acs_var, 1e-10));
            assert!(rel_close(srs_variance_fpc(&d, n1), srs_var, 1e-10));
            // both variance estimators are design-unbiased
            assert!(rel_close(mean_var(&acs_var_est).0, acs_var, 1e-10));
            assert!(rel_close(mean_var(&srs_var_est).0, srs_var, 1e-10));
        }
    }
}

#[test]
fn ratio_matches_independent_variances() {
    let mut rng = rng(12);
    for _ in 0..200 {
        let (w, h) = random_dims(&mut rng, 12);
        let frame = random_frame(&mut rng, w.max(2), h);
        let n = frame.len();
        let (total, within, _) = oracle_sums_of_squares(&frame, 0.0);
        if total == 0.0 || n < 3 {
            continue;
        }
        let d = decompose_sum_of_squares(&frame, &partition_into_networks(&frame, Condition::new(0.0))).unwrap();
        let n1 = rand::Rng::random_range(&mut rng, 1..n);
        let m = rand::Rng::random_range(&mut rng, 1..n);
        let nf = n as f64;
        let var_acs = (nf - n1 as f64) / (n1 as f64 * nf * (nf - 1.0)) * (total - within);
        let var_srs = (1.0 / m as f64 - 1.0 / nf) * total / (nf - 1.0);
        assert!(rel_close(variance_ratio(&d, n1, m).unwrap(), var_acs / var_srs, 1e-9));
        let sup = superiority_condition(&d, n1, m).unwrap();
        if n1 == m {
            assert_eq!(sup.lhs, 0.0);
        }
    }
}

#[test]
fn all_singleton_partition_matches_srs() {
    let mut rng = rng(13);
    for _ in 0..100 {
        let (w, h) = random_dims(&mut rng, 10);
        let frame = random_frame(&mut rng, w.max(2), h);
        let p = partition_into_networks(&frame, Condition::new(f64::from(u32::MAX)));
        let d = decompose_sum_of_squares(&frame, &p).unwrap();
        assert_eq!(d.within_ss, 0.0);
        let n1 = (frame.len() / 2).max(1);
        assert!(rel_close(
            acs_mean_variance(&d, n1).unwrap(),
            srs_variance_fpc(&d, n1),
            1e-12
        ));
    }
}

#[test]
fn partition_matches_union_find() {
    let mut rng = rng(14);
    for _ in 0..300 {
        let (w, h) = random_dims(&mut rng, 15);
        let frame = random_frame(&mut rng, w, h);
        let c = rand::Rng::random_range(&mut rng, 0..4) as f64;
        let labels = oracle_networks(&frame, c);
        let p = partition_into_networks(&frame, Condition::new(c));
        for i in 0..frame.len() {
            for j in 0..frame.len() {
                let same = p.network_of(i).contains(j);
                assert_eq!(same, labels[i] == labels[j], "cells {i}, {j}");
            }
        }
        let (total, within, between) = oracle_sums_of_squares(&frame, c);
        let d = decompose_sum_of_squares(&frame, &p).unwrap();
        assert!(rel_close(d.total_ss, total, 1e-12));
        assert!(rel_close(d.within_ss, within, 1e-12));
        assert!(rel_close(d.between_ss, between, 1e-12));
    }
}
