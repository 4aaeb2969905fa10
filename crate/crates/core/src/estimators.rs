//! Point and variance estimators for SRS, ACS and traditional cluster
//! sampling.

use serde::{Deserialize, Serialize};

use crate::designs::{AcsSample, ClusterSample, SrsSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Srs,
    Acs,
    Cluster,
}

impl Design {
    pub fn as_str(self) -> &'static str {
        match self {
            Design::Srs => "srs",
            Design::Acs => "acs",
            Design::Cluster => "cluster",
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub design: Design,
    /// Initial (or only) sample size: m, n1, or number of sampled clusters.
    pub sample_size: usize,
    /// Distinct units observed; equals `sample_size` for SRS.
    pub final_effort: usize,
    pub mean_estimate: f64,
    pub total_estimate: f64,
    pub variance_of_mean: f64,
    pub variance_of_total: f64,
}

impl EstimateReport {
    fn scaled(design: Design, sample_size: usize, final_effort: usize, mean: f64, var_mean: f64, scale: f64) -> Self {
        Self {
            design,
            sample_size,
            final_effort,
            mean_estimate: mean,
            total_estimate: scale * mean,
            variance_of_mean: var_mean,
            variance_of_total: scale * scale * var_mean,
        }
    }
}

/// Sample mean and the without-replacement variance of that mean,
/// `(1 - n/N) * sum((v - mean)^2) / (n (n - 1))`.
fn mean_and_fpc_variance(values: &[f64], population: usize, what: &'static str) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::DegreesOfFreedom {
            what,
            required: 2,
            got: n,
        });
    }
    if n > population {
        return Err(Error::Size {
            requested: n,
            available: population,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let fpc = 1.0 - nf / population as f64;
    Ok((mean, (fpc * ss / (nf * (nf - 1.0))).max(0.0)))
}

/// SRS mean per unit with the finite-population-corrected variance.
pub fn estimate_srs(sample: &SrsSample, population: usize) -> Result<EstimateReport> {
    let y: Vec<f64> = sample.y_values.iter().map(|&v| v as f64).collect();
    let (mean, var) = mean_and_fpc_variance(&y, population, "SRS variance")?;
    Ok(EstimateReport::scaled(
        Design::Srs,
        sample.m(),
        sample.m(),
        mean,
        var,
        population as f64,
    ))
}

/// Modified Hansen-Hurwitz estimator: the mean of the network means `w`
/// over the initial units, one term per initial unit even when several land
/// in the same network.
pub fn estimate_acs(sample: &AcsSample, population: usize) -> Result<EstimateReport> {
    let w = sample.network_means();
    let (mean, var) = mean_and_fpc_variance(&w, population, "ACS variance")?;
    Ok(EstimateReport::scaled(
        Design::Acs,
        sample.n1(),
        sample.final_effort,
        mean,
        var,
        population as f64,
    ))
}

/// Sampled clusters with the population-level bookkeeping cluster
/// estimators need.
///
/// `n_clusters` is the number of clusters in the population; elsewhere in
/// the crate `N` means the number of units, which here is `total_units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterData {
    pub n_clusters: usize,
    pub total_units: usize,
    /// Unit values `Y_ij` of each sampled cluster.
    pub clusters: Vec<Vec<f64>>,
}

impl ClusterData {
    pub fn new(n_clusters: usize, total_units: usize, clusters: Vec<Vec<f64>>) -> Self {
        Self {
            n_clusters,
            total_units,
            clusters,
        }
    }

    /// Mean number of units per cluster, `M_0 / N_cl`.
    pub fn mean_cluster_size(&self) -> f64 {
        self.total_units as f64 / self.n_clusters as f64
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn cluster_totals(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn cluster_means(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// Sum of the sampled cluster totals.
    pub fn grand_total(&self) -> f64 {
        self.cluster_totals().iter().sum()
    }
}

impl From<&ClusterSample> for ClusterData {
    fn from(sample: &ClusterSample) -> Self {
        Self::new(
            sample.n_clusters,
            sample.total_units,
            sample
                .clusters
                .iter()
                .map(|c| c.y_values.iter().map(|&v| v as f64).collect())
                .collect(),
        )
    }
}

/// Traditional cluster estimator: per-unit mean from the average of sampled
/// cluster means, `V[Y_hat] = M_0^2 / (n (n-1)) * sum((ybar_i - ybarbar)^2)`
/// and `V[mean] = V[Y_hat] / M_0^2`.
pub fn estimate_cluster(data: &ClusterData) -> Result<EstimateReport> {
    let n = data.clusters.len();
    if n < 2 {
        return Err(Error::DegreesOfFreedom {
            what: "cluster variance",
            required: 2,
            got: n,
        });
    }
    if n > data.n_clusters {
        return Err(Error::Size {
            requested: n,
            available: data.n_clusters,
        });
    }
    if let Some(i) = data.clusters.iter().position(Vec::is_empty) {
        return Err(Error::Structural(format!("sampled cluster {i} has no units")));
    }
    let means = data.cluster_means();
    let nf = n as f64;
    let grand = means.iter().sum::<f64>() / nf;
    let ss: f64 = means.iter().map(|m| (m - grand).powi(2)).sum();
    let m0 = data.total_units as f64;
    let var_total = m0 * m0 / (nf * (nf - 1.0)) * ss;
    let effort = data.cluster_sizes().iter().sum();
    Ok(EstimateReport {
        design: Design::Cluster,
        sample_size: n,
        final_effort: effort,
        mean_estimate: grand,
        total_estimate: m0 * grand,
        variance_of_mean: var_total / (m0 * m0),
        variance_of_total: var_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{acs_from_initial, Condition};
    use crate::population::GridFrame;

    fn srs(values: &[u64]) -> SrsSample {
        SrsSample {
            unit_indices: (0..values.len()).collect(),
            y_values: values.to_vec(),
        }
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        let r = estimate_srs(&srs(&[4, 4, 4]), 10).unwrap();
        assert_eq!(r.mean_estimate, 4.0);
        assert_eq!(r.variance_of_mean, 0.0);
        assert_eq!(r.total_estimate, 40.0);
    }

    #[test]
    fn census_has_zero_variance() {
        let r = estimate_srs(&srs(&[1, 5, 9, 2]), 4).unwrap();
        assert_eq!(r.variance_of_mean, 0.0);
    }

    #[test]
    fn srs_hand_value() {
        // mean 2, ss 8, fpc 1 - 3/6
        let r = estimate_srs(&srs(&[0, 2, 4]), 6).unwrap();
        assert_eq!(r.mean_estimate, 2.0);
        assert!((r.variance_of_mean - 0.5 * 8.0 / 6.0).abs() < 1e-15);
        assert!((r.variance_of_total - 36.0 * r.variance_of_mean).abs() < 1e-12);
    }

    #[test]
    fn too_small_samples() {
        assert!(matches!(
            estimate_srs(&srs(&[3]), 10),
            Err(Error::DegreesOfFreedom { .. })
        ));
        let frame = GridFrame::new(2, 1, vec![1, 0]).unwrap();
        let acs = acs_from_initial(&frame, vec![0], Condition::new(0.0)).unwrap();
        assert!(matches!(estimate_acs(&acs, 2), Err(Error::DegreesOfFreedom { .. })));
    }

    #[test]
    fn acs_zero_frame() {
        let frame = GridFrame::zeros(4, 4).unwrap();
        let acs = acs_from_initial(&frame, vec![1, 5, 9], Condition::new(0.0)).unwrap();
        let r = estimate_acs(&acs, 16).unwrap();
        assert_eq!(r.mean_estimate, 0.0);
        assert_eq!(r.variance_of_mean, 0.0);
        assert_eq!(r.final_effort, 3);
    }

    #[test]
    fn acs_duplicate_network_terms_count_twice() {
        // cells 0 and 1 form one network with w = 2
        let frame = GridFrame::new(2, 2, vec![2, 2, 0, 0]).unwrap();
        let acs = acs_from_initial(&frame, vec![0, 1], Condition::new(0.0)).unwrap();
        let r = estimate_acs(&acs, 4).unwrap();
        assert_eq!(r.mean_estimate, 2.0);
        assert_eq!(r.variance_of_mean, 0.0);
        let acs = acs_from_initial(&frame, vec![0, 2, 3], Condition::new(0.0)).unwrap();
        let r = estimate_acs(&acs, 4).unwrap();
        assert!((r.mean_estimate - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cluster_hand_value() {
        let data = ClusterData::new(10, 100, vec![vec![1.0, 1.0], vec![3.0, 2.0, 4.0]]);
        let r = estimate_cluster(&data).unwrap();
        assert_eq!(r.mean_estimate, 2.0);
        assert_eq!(r.variance_of_total, 10_000.0);
        assert_eq!(r.variance_of_mean, 1.0);
        assert_eq!(r.total_estimate, 200.0);
    }

    #[test]
    fn equal_cluster_means() {
        let data = ClusterData::new(4, 40, vec![vec![2.0, 2.0], vec![1.0, 3.0]]);
        assert_eq!(estimate_cluster(&data).unwrap().variance_of_total, 0.0);
        let one = ClusterData::new(4, 40, vec![vec![2.0]]);
        assert!(matches!(estimate_cluster(&one), Err(Error::DegreesOfFreedom { .. })));
    }

    #[test]
    fn cluster_identities() {
        let data = ClusterData::new(5, 12, vec![vec![1.0, 2.0, 3.0], vec![4.0], vec![0.0, 0.0]]);
        assert_eq!(data.cluster_totals(), vec![6.0, 4.0, 0.0]);
        assert_eq!(data.cluster_means(), vec![2.0, 4.0, 0.0]);
        assert_eq!(data.grand_total(), 10.0);
        assert_eq!(data.mean_cluster_size(), 2.4);
    }
}
