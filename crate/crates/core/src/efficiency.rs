//! Population-level efficiency of ACS relative to SRS.
//!
//! Everything here is computed from the full frame and its network
//! partition, not from a sample. The central quantities are the within- and
//! between-network sums of squares, from which follow the theoretical
//! variance ratio, the variance of the ACS mean, and the `kappa` ratios that
//! define the region of `(kappa1, m)` where ACS beats SRS.
//!
//! Two SRS variance conventions appear and are kept apart by name:
//! `srs_variance_fpc` carries the finite population correction,
//! `srs_variance_no_fpc` (`sigma^2 / m`) does not and is the one used for
//! `kappa1`.

use serde::{Deserialize, Serialize};

use crate::designs::NetworkPartition;
use crate::error::{Error, Result};
use crate::population::GridFrame;

/// Relative tolerance of the internal sum-of-squares identity check.
pub const DECOMPOSITION_RTOL: f64 = 1e-9;

/// Relative gap below which the two sides of a superiority inequality count
/// as equal. Integer-valued frames produce exact ties, and each algebraic
/// form of the condition rounds them differently.
pub const TIE_RTOL: f64 = 1e-12;

/// `a < b` with differences inside [`TIE_RTOL`] treated as equality.
pub fn strictly_less(a: f64, b: f64) -> bool {
    b - a > TIE_RTOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub total_ss: f64,
    pub within_ss: f64,
    pub between_ss: f64,
    pub mean: f64,
    /// Population variance with divisor `N - 1`.
    pub sigma2: f64,
    pub population: usize,
}

/// Splits the total sum of squares into within- and between-network parts,
/// each by direct summation over cells.
pub fn decompose_sum_of_squares(frame: &GridFrame, partition: &NetworkPartition) -> Result<DecompositionReport> {
    partition.validate(frame)?;
    let n = frame.len();
    let mu = frame.mean();
    let w = partition.unit_means();
    let (mut total, mut within, mut between) = (0.0, 0.0, 0.0);
    for (i, &wi) in w.iter().enumerate() {
        let y = frame.value(i);
        total += (y - mu).powi(2);
        within += (y - wi).powi(2);
        between += (wi - mu).powi(2);
    }
    let gap = (total - within - between).abs();
    if gap > DECOMPOSITION_RTOL * total.max(f64::MIN_POSITIVE) && gap > f64::EPSILON {
        return Err(Error::InternalConsistency(format!(
            "total {total} != within {within} + between {between}"
        )));
    }
    let sigma2 = if n > 1 { total / (n - 1) as f64 } else { 0.0 };
    Ok(DecompositionReport {
        total_ss: total,
        within_ss: within,
        between_ss: between,
        mean: mu,
        sigma2,
        population: n,
    })
}

fn check_sizes(n1: usize, m: usize, n: usize) -> Result<()> {
    if n1 == 0 || m == 0 {
        return Err(Error::spec("sample sizes must be at least 1"));
    }
    if n1 > n {
        return Err(Error::Size {
            requested: n1,
            available: n,
        });
    }
    if m >= n {
        return Err(Error::spec(format!(
            "SRS size m = {m} must be below N = {n}; at m = N the SRS variance is zero"
        )));
    }
    Ok(())
}

fn require_variation(d: &DecompositionReport) -> Result<()> {
    if d.total_ss <= 0.0 {
        return Err(Error::DegeneratePopulation("every cell has the same count".into()));
    }
    Ok(())
}

/// Theoretical `Var(ACS) / Var(SRS)` for initial size `n1` against SRS size
/// `m`: `(m/n1) (N-n1)/(N-m) (1 - within/total)`.
pub fn variance_ratio(d: &DecompositionReport, n1: usize, m: usize) -> Result<f64> {
    let n = d.population;
    check_sizes(n1, m, n)?;
    require_variation(d)?;
    let (n, n1, m) = (n as f64, n1 as f64, m as f64);
    Ok((m / n1) * ((n - n1) / (n - m)) * (1.0 - d.within_ss / d.total_ss))
}

/// `Var(mu_tilde) = (N - n1) / (n1 N (N - 1)) * (total - within)`.
pub fn acs_mean_variance(d: &DecompositionReport, n1: usize) -> Result<f64> {
    let n = d.population;
    if n < 2 {
        return Err(Error::spec("population needs at least 2 units"));
    }
    if n1 == 0 || n1 > n {
        return Err(Error::Size {
            requested: n1,
            available: n,
        });
    }
    let (nf, n1f) = (n as f64, n1 as f64);
    Ok(((nf - n1f) / (n1f * nf * (nf - 1.0)) * (d.total_ss - d.within_ss)).max(0.0))
}

/// `(1 - m/N) sigma^2 / m`.
pub fn srs_variance_fpc(d: &DecompositionReport, m: usize) -> f64 {
    let (n, m) = (d.population as f64, m as f64);
    (1.0 / m - 1.0 / n) * d.sigma2
}

/// `sigma^2 / m`.
pub fn srs_variance_no_fpc(d: &DecompositionReport, m: usize) -> f64 {
    d.sigma2 / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperiorityCheck {
    /// `(1/n1 - 1/m) sigma^2`.
    pub lhs: f64,
    /// `(N - n1)/(n1 N) * within / (N - 1)`.
    pub rhs: f64,
    pub superior: bool,
}

/// Direct form of the condition for ACS to have lower variance than SRS.
pub fn superiority_condition(d: &DecompositionReport, n1: usize, m: usize) -> Result<SuperiorityCheck> {
    let n = d.population;
    check_sizes(n1, m, n)?;
    require_variation(d)?;
    let (nf, n1f, mf) = (n as f64, n1 as f64, m as f64);
    let lhs = if n1 == m {
        0.0
    } else {
        (1.0 / n1f - 1.0 / mf) * d.sigma2
    };
    let rhs = (nf - n1f) / (n1f * nf) * d.within_ss / (nf - 1.0);
    Ok(SuperiorityCheck {
        lhs,
        rhs,
        superior: strictly_less(lhs, rhs),
    })
}

/// `(1/m - 1/N) sigma^2 > Var(mu_tilde)`: the same condition written as a
/// bound on the ACS variance by the finite-population-corrected SRS variance.
pub fn fpc_variance_condition(d: &DecompositionReport, n1: usize, m: usize) -> Result<bool> {
    check_sizes(n1, m, d.population)?;
    require_variation(d)?;
    Ok(strictly_less(acs_mean_variance(d, n1)?, srs_variance_fpc(d, m)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaValues {
    /// `Var(mu_tilde) / sigma^2`.
    pub kappa: f64,
    /// `Var(mu_tilde) / (sigma^2 / m) = m * kappa`.
    pub kappa1: f64,
}

pub fn kappa_values(d: &DecompositionReport, n1: usize, m: usize) -> Result<KappaValues> {
    if d.sigma2 <= 0.0 {
        return Err(Error::DegeneratePopulation("population variance is zero".into()));
    }
    if m == 0 {
        return Err(Error::spec("SRS size m must be at least 1"));
    }
    let kappa = acs_mean_variance(d, n1)? / d.sigma2;
    Ok(KappaValues {
        kappa,
        kappa1: m as f64 * kappa,
    })
}

/// SRS sizes for which ACS is superior at a given `kappa1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub population: usize,
    pub kappa1: f64,
    /// `N (1 - kappa1)`; the boundary line in `(kappa1, m)` space.
    pub m_bound: f64,
    /// Largest feasible integer `m`, or `None` when the region is empty.
    pub max_feasible_m: Option<usize>,
}

impl FeasibleRegion {
    /// `m < N (1 - kappa1)` (with the tie rule of [`strictly_less`]) and `m < N`.
    pub fn contains(&self, m: usize) -> bool {
        self.max_feasible_m.is_some_and(|hi| (1..=hi).contains(&m))
    }

    pub fn feasible_m(&self) -> std::ops::RangeInclusive<usize> {
        match self.max_feasible_m {
            Some(hi) => 1..=hi,
            #[allow(clippy::reversed_empty_ranges)]
            None => 1..=0,
        }
    }

    /// SRS sizes above the population are never attainable.
    pub fn is_possible(&self, m: usize) -> bool {
        m <= self.population
    }
}

/// Integer `m` with `1 <= m < N (1 - kappa1)` and `m < N`.
pub fn feasible_region(population: usize, kappa1: f64) -> Result<FeasibleRegion> {
    if population == 0 {
        return Err(Error::spec("population must have at least one unit"));
    }
    if !(kappa1.is_finite() && kappa1 >= 0.0) {
        return Err(Error::spec(format!("kappa1 must be finite and >= 0, got {kappa1}")));
    }
    let n = population as f64;
    let m_bound = n * (1.0 - kappa1);
    let hi = if strictly_less(1.0, m_bound) {
        let mut hi = (m_bound.ceil() as usize).min(population);
        while hi > 0 && !strictly_less(hi as f64, m_bound) {
            hi -= 1;
        }
        hi.min(population - 1)
    } else {
        0
    };
    Ok(FeasibleRegion {
        population,
        kappa1,
        m_bound,
        max_feasible_m: (hi >= 1).then_some(hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub population: usize,
    pub n1: usize,
    pub m: usize,
    pub condition: f64,
    pub networks: usize,
    pub total_ss: f64,
    pub within_ss: f64,
    pub between_ss: f64,
    pub sigma2: f64,
    pub ratio: f64,
    pub var_mu_tilde: f64,
    /// `sigma^2 / m`, no finite population correction.
    pub var_ybar_m: f64,
    /// `(1/m - 1/N) sigma^2`.
    pub var_ybar_m_fpc: f64,
    pub kappa: f64,
    pub kappa1: f64,
    pub feasible_m_bound: f64,
    pub superiority_lhs: f64,
    pub superiority_rhs: f64,
    pub fpc_condition: bool,
    pub acs_superior: bool,
}

impl EfficiencyReport {
    pub const CSV_HEADER: [&'static str; 20] = [
        "population",
        "n1",
        "m",
        "condition",
        "networks",
        "total_ss",
        "within_ss",
        "between_ss",
        "sigma2",
        "ratio",
        "var_mu_tilde",
        "var_ybar_m",
        "var_ybar_m_fpc",
        "kappa",
        "kappa1",
        "feasible_m_bound",
        "superiority_lhs",
        "superiority_rhs",
        "fpc_condition",
        "acs_superior",
    ];
}

/// All efficiency quantities for one frame, partition and pair of sizes.
pub fn efficiency_report(
    frame: &GridFrame,
    partition: &NetworkPartition,
    n1: usize,
    m: usize,
) -> Result<EfficiencyReport> {
    let d = decompose_sum_of_squares(frame, partition)?;
    let ratio = variance_ratio(&d, n1, m)?;
    let sup = superiority_condition(&d, n1, m)?;
    let k = kappa_values(&d, n1, m)?;
    let region = feasible_region(d.population, k.kappa1)?;
    Ok(EfficiencyReport {
        population: d.population,
        n1,
        m,
        condition: partition.condition.threshold,
        networks: partition.len(),
        total_ss: d.total_ss,
        within_ss: d.within_ss,
        between_ss: d.between_ss,
        sigma2: d.sigma2,
        ratio,
        var_mu_tilde: acs_mean_variance(&d, n1)?,
        var_ybar_m: srs_variance_no_fpc(&d, m),
        var_ybar_m_fpc: srs_variance_fpc(&d, m),
        kappa: k.kappa,
        kappa1: k.kappa1,
        feasible_m_bound: region.m_bound,
        superiority_lhs: sup.lhs,
        superiority_rhs: sup.rhs,
        fpc_condition: fpc_variance_condition(&d, n1, m)?,
        acs_superior: strictly_less(ratio, 1.0),
    })
}
