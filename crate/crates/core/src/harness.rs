//! Replicated ACS-versus-SRS experiments and parameter sweeps.
//!
//! Within a replicate both designs share their initial units: one random
//! permutation of the frame is drawn, ACS expands from its first `n1` cells
//! and SRS observes its first `m`. Each replicate owns the RNG stream
//! `(seed, Design, point, replicate)`, so replicates run in parallel and the
//! result does not depend on scheduling. Summary statistics are summed in
//! sorted order, which makes them invariant to replicate order as well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{draw_paired, Condition, Neighborhood};
use crate::error::{Error, Result};
use crate::estimators::{estimate_acs, estimate_srs, EstimateReport};
use crate::population::{
    draw_centers, generate_count_field, scatter_points, variance_to_mean_ratio, ClusterField, ClusterSpec,
    DispersionSpec, Family, GridFrame,
};
use crate::rng::{RngSeed, StreamKind};

/// Spread levels of the clustered-population study.
pub const PAPER_SPREADS: [f64; 5] = [2.0 / 3.0, 1.0, 1.5, 2.0, 3.0];

/// Independent per-cell counts on a `width x height` frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountFieldSpec {
    pub family: Family,
    pub target_mean: f64,
    pub target_vmr: f64,
    pub width: usize,
    pub height: usize,
}

impl CountFieldSpec {
    pub fn new(dispersion: DispersionSpec, width: usize, height: usize) -> Self {
        Self {
            family: dispersion.family,
            target_mean: dispersion.target_mean,
            target_vmr: dispersion.target_vmr,
            width,
            height,
        }
    }

    pub fn dispersion(&self) -> DispersionSpec {
        DispersionSpec::new(self.family, self.target_mean, self.target_vmr)
    }

    fn set_dispersion(&mut self, d: DispersionSpec) {
        self.family = d.family;
        self.target_mean = d.target_mean;
        self.target_vmr = d.target_vmr;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PopulationSpec {
    Clustered(ClusterSpec),
    Counts(CountFieldSpec),
}

impl PopulationSpec {
    pub fn size(&self) -> usize {
        match self {
            PopulationSpec::Clustered(spec) => spec.width * spec.height,
            PopulationSpec::Counts(spec) => spec.width * spec.height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checked = match self {
            PopulationSpec::Clustered(spec) => spec.validate(),
            PopulationSpec::Counts(spec) => {
                if spec.width == 0 || spec.height == 0 {
                    return Err(Error::config("population.width", "frame dimensions must be positive"));
                }
                spec.dispersion().validate()
            }
        };
        checked.map_err(|e| match e {
            Error::Specification(msg) => Error::config("population", msg),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub spreads: Vec<f64>,
    pub conditions: Vec<f64>,
    pub vmrs: Vec<f64>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub population: PopulationSpec,
    pub n1: usize,
    /// SRS comparison size; equal to `n1` in the standard comparison.
    pub m: usize,
    /// Condition to adapt: cells with count above this value trigger expansion.
    pub condition: f64,
    pub neighborhood: Neighborhood,
    pub replicates: usize,
    pub seed: u64,
    /// Draw a fresh population for every replicate instead of one per sweep point.
    pub regenerate_population: bool,
    /// Use the same cluster centers for every spread level.
    pub share_centers: bool,
    pub sweeps: SweepAxes,
}

impl ExperimentConfig {
    /// 20x20 frame, 5 clusters of 50 points, `n1 = m = 10`, `C = 0`,
    /// 100 replicates, all five spread levels.
    pub fn paper_default(seed: u64) -> Self {
        Self {
            population: PopulationSpec::Clustered(ClusterSpec::paper_default(1.0)),
            n1: 10,
            m: 10,
            condition: 0.0,
            neighborhood: Neighborhood::Rook,
            replicates: 100,
            seed,
            regenerate_population: false,
            share_centers: false,
            sweeps: SweepAxes {
                spreads: PAPER_SPREADS.to_vec(),
                ..SweepAxes::default()
            },
        }
    }

    pub fn counts(spec: DispersionSpec, width: usize, height: usize, seed: u64) -> Self {
        Self {
            population: PopulationSpec::Counts(CountFieldSpec::new(spec, width, height)),
            n1: 10,
            m: 10,
            condition: 0.0,
            neighborhood: Neighborhood::Rook,
            replicates: 100,
            seed,
            regenerate_population: false,
            share_centers: false,
            sweeps: SweepAxes::default(),
        }
    }

    pub fn condition(&self) -> Condition {
        Condition::new(self.condition).with_neighborhood(self.neighborhood)
    }

    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        let n = self.population.size();
        if self.replicates == 0 {
            return Err(Error::config("design.replicates", "must be at least 1"));
        }
        if self.replicates > u32::MAX as usize {
            return Err(Error::config("design.replicates", "too many replicates"));
        }
        for (key, size) in [("design.n1", self.n1), ("design.m", self.m)] {
            if size < 2 {
                return Err(Error::config(
                    key,
                    format!("must be at least 2 for a variance estimate, got {size}"),
                ));
            }
            if size > n {
                return Err(Error::config(key, format!("{size} exceeds the {n} cells in the frame")));
            }
        }
        if !(self.condition.is_finite() && self.condition >= 0.0) {
            return Err(Error::config("design.condition", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: RngSeed,
    pub population_total: u64,
    pub acs: EstimateReport,
    pub srs: EstimateReport,
}

impl ReplicateRecord {
    /// Either design estimated a zero variance.
    pub fn is_degenerate(&self) -> bool {
        !(self.acs.variance_of_total > 0.0 && self.srs.variance_of_total > 0.0)
    }
}

/// Across-replicate averages on the population-total scale.
///
/// Spreads use divisor R (number of replicates), so a single replicate
/// reports a spread of 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub mu_avg: f64,
    pub mu_spread: f64,
    pub var_avg: f64,
    pub var_spread: f64,
}

fn sorted_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

fn mean_and_spread(values: Vec<f64>) -> (f64, f64) {
    let n = values.len() as f64;
    let avg = sorted_sum(values.clone()) / n;
    let spread = sorted_sum(values.into_iter().map(|v| (v - avg).powi(2)).collect()) / n;
    (avg, spread)
}

impl DesignSummary {
    pub fn from_reports<'a>(reports: impl Iterator<Item = &'a EstimateReport> + Clone) -> Self {
        let (mu_avg, mu_spread) = mean_and_spread(reports.clone().map(|r| r.total_estimate).collect());
        let (var_avg, var_spread) = mean_and_spread(reports.map(|r| r.variance_of_total).collect());
        Self {
            mu_avg,
            mu_spread,
            var_avg,
            var_spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Sweep axis value this run belongs to, if any.
    pub axis_value: Option<f64>,
    pub records: Vec<ReplicateRecord>,
    pub acs: DesignSummary,
    pub srs: DesignSummary,
    /// `Var(SRS) / Var(ACS)` from variance estimates averaged over the
    /// included replicates. `None` when no replicate is usable.
    pub relative_precision: Option<f64>,
    /// Mean of per-replicate variance ratios over the included replicates.
    pub mean_of_ratios: Option<f64>,
    pub included: usize,
    pub excluded: usize,
    /// Average realized population total across replicates.
    pub population_total: f64,
    /// VMR of the population (of the first replicate's population when
    /// populations are regenerated). `None` for an all-zero frame.
    pub population_vmr: Option<f64>,
}

impl ExperimentResult {
    pub fn replicates(&self) -> usize {
        self.records.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.relative_precision.is_none()
    }
}

fn cluster_field(
    spec: &ClusterSpec,
    share_centers: bool,
    seed: RngSeed,
    centers_seed: RngSeed,
) -> Result<ClusterField> {
    let mut rng = seed.rng();
    let centers = if share_centers {
        draw_centers(spec, &mut centers_seed.rng())?
    } else {
        draw_centers(spec, &mut rng)?
    };
    scatter_points(spec, &centers, &mut rng)
}

fn population_seeds(config: &ExperimentConfig, point: u32, replicate: u32) -> (RngSeed, RngSeed) {
    let base = RngSeed::from_seed(config.seed);
    let rep = if config.regenerate_population { replicate + 1 } else { 0 };
    (
        base.derive(StreamKind::Population, point, rep),
        base.derive(StreamKind::Centers, 0, rep),
    )
}

/// Point field behind the population at `point`, for clustered populations.
pub fn cluster_field_for(config: &ExperimentConfig, point: u32, replicate: u32) -> Result<Option<ClusterField>> {
    match &config.population {
        PopulationSpec::Clustered(spec) => {
            let (seed, centers) = population_seeds(config, point, replicate);
            cluster_field(spec, config.share_centers, seed, centers).map(Some)
        }
        PopulationSpec::Counts(_) => Ok(None),
    }
}

/// Population used at sweep point `point` for replicate `replicate`.
pub fn population_for(config: &ExperimentConfig, point: u32, replicate: u32) -> Result<GridFrame> {
    match &config.population {
        PopulationSpec::Clustered(spec) => {
            let (seed, centers) = population_seeds(config, point, replicate);
            cluster_field(spec, config.share_centers, seed, centers)?.bin(spec.width, spec.height)
        }
        PopulationSpec::Counts(spec) => {
            let (seed, _) = population_seeds(config, point, replicate);
            generate_count_field(&spec.dispersion(), spec.width, spec.height, seed)
        }
    }
}

fn run_replicate(
    config: &ExperimentConfig,
    frame: &GridFrame,
    point: u32,
    replicate: usize,
) -> Result<ReplicateRecord> {
    let seed = RngSeed::from_seed(config.seed).derive(StreamKind::Design, point, replicate as u32);
    let n = frame.len();
    let (acs, srs) = draw_paired(frame, config.n1, config.m, config.condition(), seed)?;
    Ok(ReplicateRecord {
        replicate,
        seed,
        population_total: frame.total(),
        acs: estimate_acs(&acs, n)?,
        srs: estimate_srs(&srs, n)?,
    })
}

fn run_point(config: &ExperimentConfig, point: u32, axis_value: Option<f64>) -> Result<ExperimentResult> {
    config.validate()?;
    let fixed = if config.regenerate_population {
        None
    } else {
        Some(population_for(config, point, 0)?)
    };
    let records = (0..config.replicates)
        .into_par_iter()
        .map(|r| match &fixed {
            Some(frame) => run_replicate(config, frame, point, r),
            None => run_replicate(config, &population_for(config, point, r as u32)?, point, r),
        })
        .collect::<Result<Vec<_>>>()?;

    let vmr_frame = match fixed {
        Some(frame) => frame,
        None => population_for(config, point, 0)?,
    };
    let population_vmr = variance_to_mean_ratio(&vmr_frame).ok();
    Ok(ExperimentResult::from_records(axis_value, records, population_vmr))
}

impl ExperimentResult {
    /// Aggregates replicate records. Sums are taken over sorted values, so
    /// the result does not depend on record order beyond `records` itself.
    pub fn from_records(axis_value: Option<f64>, records: Vec<ReplicateRecord>, population_vmr: Option<f64>) -> Self {
        let usable: Vec<&ReplicateRecord> = records.iter().filter(|r| !r.is_degenerate()).collect();
        let included = usable.len();
        let (relative_precision, mean_of_ratios) = if included == 0 {
            (None, None)
        } else {
            let srs = sorted_sum(usable.iter().map(|r| r.srs.variance_of_total).collect());
            let acs = sorted_sum(usable.iter().map(|r| r.acs.variance_of_total).collect());
            let ratios = sorted_sum(
                usable
                    .iter()
                    .map(|r| r.srs.variance_of_total / r.acs.variance_of_total)
                    .collect(),
            );
            (Some(srs / acs), Some(ratios / included as f64))
        };
        let population_total =
            sorted_sum(records.iter().map(|r| r.population_total as f64).collect()) / records.len().max(1) as f64;
        Self {
            axis_value,
            acs: DesignSummary::from_reports(records.iter().map(|r| &r.acs)),
            srs: DesignSummary::from_reports(records.iter().map(|r| &r.srs)),
            relative_precision,
            mean_of_ratios,
            included,
            excluded: records.len() - included,
            population_total,
            population_vmr,
            records,
        }
    }
}

/// Runs `config.replicates` paired ACS/SRS draws on the configured population.
pub fn run_replicated_comparison(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_point(config, 0, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Flat,
    Nondecreasing,
    Nonincreasing,
    Mixed,
    /// Some point had no usable replicates.
    Undetermined,
}

impl Monotonicity {
    pub fn of(series: &[Option<f64>]) -> Self {
        let Some(values) = series.iter().copied().collect::<Option<Vec<f64>>>() else {
            return Monotonicity::Undetermined;
        };
        let up = values.windows(2).all(|w| w[1] >= w[0]);
        let down = values.windows(2).all(|w| w[1] <= w[0]);
        match (up, down) {
            (true, true) => Monotonicity::Flat,
            (true, false) => Monotonicity::Nondecreasing,
            (false, true) => Monotonicity::Nonincreasing,
            (false, false) => Monotonicity::Mixed,
        }
    }

    pub fn is_nondecreasing(self) -> bool {
        matches!(self, Monotonicity::Flat | Monotonicity::Nondecreasing)
    }

    pub fn is_nonincreasing(self) -> bool {
        matches!(self, Monotonicity::Flat | Monotonicity::Nonincreasing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub axis: String,
    pub values: Vec<f64>,
    pub relative_precision: Vec<Option<f64>>,
    pub included: Vec<usize>,
    pub excluded: Vec<usize>,
    pub verdict: Monotonicity,
}

impl TrendReport {
    pub fn new(
        axis: impl Into<String>,
        values: Vec<f64>,
        relative_precision: Vec<Option<f64>>,
        included: Vec<usize>,
        excluded: Vec<usize>,
    ) -> Self {
        let verdict = Monotonicity::of(&relative_precision);
        Self {
            axis: axis.into(),
            values,
            relative_precision,
            included,
            excluded,
            verdict,
        }
    }

    fn from_results(axis: &str, values: &[f64], results: &[ExperimentResult]) -> Self {
        Self::new(
            axis,
            values.to_vec(),
            results.iter().map(|r| r.relative_precision).collect(),
            results.iter().map(|r| r.included).collect(),
            results.iter().map(|r| r.excluded).collect(),
        )
    }

    /// Point-wise average of several runs of the same sweep. A point's
    /// average covers only the runs where it was defined.
    pub fn average(reports: &[TrendReport]) -> Result<TrendReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::spec("cannot average an empty set of trends"))?;
        if reports.iter().any(|r| r.axis != first.axis || r.values != first.values) {
            return Err(Error::Structural("trend reports cover different axes".into()));
        }
        let k = first.values.len();
        let mut rp = Vec::with_capacity(k);
        for i in 0..k {
            let defined: Vec<f64> = reports.iter().filter_map(|r| r.relative_precision[i]).collect();
            rp.push((!defined.is_empty()).then(|| sorted_sum(defined.clone()) / defined.len() as f64));
        }
        let sum_at = |f: fn(&TrendReport) -> &Vec<usize>, i: usize| reports.iter().map(|r| f(r)[i]).sum();
        Ok(TrendReport::new(
            first.axis.clone(),
            first.values.clone(),
            rp,
            (0..k).map(|i| sum_at(|r| &r.included, i)).collect(),
            (0..k).map(|i| sum_at(|r| &r.excluded, i)).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub trend: TrendReport,
    pub results: Vec<ExperimentResult>,
}

/// One row of a Table-2 style summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: Option<f64>,
    pub realized_total: f64,
    pub mu_acs_avg: f64,
    pub var_acs_avg: f64,
    pub mu_srs_avg: f64,
    pub var_srs_avg: f64,
    pub relative_efficiency: Option<f64>,
    pub mean_of_ratios: Option<f64>,
    pub mu_acs_spread: f64,
    pub var_acs_spread: f64,
    pub mu_srs_spread: f64,
    pub var_srs_spread: f64,
    pub included: usize,
    pub excluded: usize,
}

impl SweepResult {
    pub fn table(&self) -> Vec<SummaryRow> {
        self.results
            .iter()
            .map(|r| SummaryRow {
                axis: self.trend.axis.clone(),
                value: r.axis_value,
                realized_total: r.population_total,
                mu_acs_avg: r.acs.mu_avg,
                var_acs_avg: r.acs.var_avg,
                mu_srs_avg: r.srs.mu_avg,
                var_srs_avg: r.srs.var_avg,
                relative_efficiency: r.relative_precision,
                mean_of_ratios: r.mean_of_ratios,
                mu_acs_spread: r.acs.mu_spread,
                var_acs_spread: r.acs.var_spread,
                mu_srs_spread: r.srs.mu_spread,
                var_srs_spread: r.srs.var_spread,
                included: r.included,
                excluded: r.excluded,
            })
            .collect()
    }
}

fn check_axis(key: &str, values: &[f64], min: f64, strictly_positive: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(key, "sweep axis is empty"));
    }
    if values.len() >= 1 << 24 {
        return Err(Error::config(key, "sweep axis is too long"));
    }
    for &v in values {
        if !v.is_finite() || v < min || (strictly_positive && v <= 0.0) {
            return Err(Error::config(key, format!("value {v} is outside the sweep domain")));
        }
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config(key, "values must be ascending"));
    }
    Ok(())
}

/// Runs one point per axis value. With `same_draws`, every point reuses the
/// population and design streams of point 0, for axes that do not change
/// the population.
fn sweep(
    config: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    same_draws: bool,
    mut adjust: impl FnMut(&mut ExperimentConfig, f64) -> Result<()>,
) -> Result<SweepResult> {
    let mut results = Vec::with_capacity(values.len());
    for (point, &v) in values.iter().enumerate() {
        let mut cfg = config.clone();
        adjust(&mut cfg, v)?;
        let point = if same_draws { 0 } else { point as u32 };
        results.push(run_point(&cfg, point, Some(v))?);
    }
    Ok(SweepResult {
        trend: TrendReport::from_results(axis, values, &results),
        results,
    })
}

/// Relative precision across cluster spreads (bivariate normal SD).
pub fn sweep_spread(config: &ExperimentConfig, spreads: &[f64]) -> Result<SweepResult> {
    check_axis("sweep.spreads", spreads, 0.0, true)?;
    sweep(config, "spread_sd", spreads, false, |cfg, sd| {
        match &mut cfg.population {
            PopulationSpec::Clustered(spec) => {
                spec.spread_sd = sd;
                Ok(())
            }
            PopulationSpec::Counts(_) => Err(Error::config(
                "population.kind",
                "spread sweeps need a clustered population",
            )),
        }
    })
}

/// Relative precision across conditions to adapt.
pub fn sweep_condition_to_adapt(config: &ExperimentConfig, conditions: &[f64]) -> Result<SweepResult> {
    check_axis("sweep.conditions", conditions, 0.0, false)?;
    sweep(config, "condition", conditions, true, |cfg, c| {
        cfg.condition = c;
        Ok(())
    })
}

fn counts_spec<'a>(cfg: &'a mut ExperimentConfig, sweep_name: &str) -> Result<&'a mut CountFieldSpec> {
    match &mut cfg.population {
        PopulationSpec::Counts(spec) => Ok(spec),
        PopulationSpec::Clustered(_) => Err(Error::config(
            "population.kind",
            format!("{sweep_name} sweeps need a count-field population"),
        )),
    }
}

/// Relative precision across target VMR at the configured mean.
pub fn sweep_dispersion(config: &ExperimentConfig, vmrs: &[f64]) -> Result<SweepResult> {
    check_axis("sweep.vmrs", vmrs, 1.0, true)?;
    sweep(config, "vmr", vmrs, false, |cfg, vmr| {
        let spec = counts_spec(cfg, "dispersion")?;
        spec.set_dispersion(DispersionSpec::for_vmr(spec.target_mean, vmr));
        Ok(())
    })
}

/// Relative precision across hit levels (target mean) at the configured VMR.
pub fn sweep_hit_level(config: &ExperimentConfig, means: &[f64]) -> Result<SweepResult> {
    check_axis("sweep.means", means, 0.0, true)?;
    sweep(config, "mean", means, false, |cfg, mean| {
        let spec = counts_spec(cfg, "hit-level")?;
        spec.set_dispersion(DispersionSpec::for_vmr(mean, spec.target_vmr));
        Ok(())
    })
}

impl SweepResult {
    /// A run without a sweep axis, labelled `none`.
    pub fn single(result: ExperimentResult) -> Self {
        let trend = TrendReport::new(
            "none",
            Vec::new(),
            vec![result.relative_precision],
            vec![result.included],
            vec![result.excluded],
        );
        Self {
            trend,
            results: vec![result],
        }
    }
}

/// Runs every non-empty sweep axis in the order spreads, conditions, VMRs,
/// means; without any axis, a single comparison.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let axes = &config.sweeps;
    let mut out = Vec::new();
    if !axes.spreads.is_empty() {
        out.push(sweep_spread(config, &axes.spreads)?);
    }
    if !axes.conditions.is_empty() {
        out.push(sweep_condition_to_adapt(config, &axes.conditions)?);
    }
    if !axes.vmrs.is_empty() {
        out.push(sweep_dispersion(config, &axes.vmrs)?);
    }
    if !axes.means.is_empty() {
        out.push(sweep_hit_level(config, &axes.means)?);
    }
    if out.is_empty() {
        out.push(SweepResult::single(run_replicated_comparison(config)?));
    }
    Ok(out)
}
