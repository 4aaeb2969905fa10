//! Reading and writing populations, samples, estimates and experiment
//! results.
//!
//! Every writer goes through [`write_atomic`], which writes a temporary file
//! next to the target and renames it into place. Floats are rendered with
//! Rust's shortest round-trip formatting; undefined values are written `NA`.
//!
//! CSV layouts (fixed column order):
//!
//! | file | columns |
//! |------|---------|
//! | population | `x,y,count` |
//! | estimates | `design,n_or_n1,final_effort,mean,total,var_mean,var_total,seed` |
//! | replicates | `axis,value,replicate,` + estimate columns |
//! | summary | [`SUMMARY_HEADER`] |
//! | efficiency | [`EfficiencyReport::CSV_HEADER`] |
//!
//! Seeds are written `seed:stream`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::designs::AcsSample;
use crate::efficiency::EfficiencyReport;
use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::harness::{PopulationSpec, SummaryRow, SweepResult, TrendReport};
use crate::population::GridFrame;
use crate::rng::RngSeed;

pub const ESTIMATE_HEADER: [&str; 8] = [
    "design",
    "n_or_n1",
    "final_effort",
    "mean",
    "total",
    "var_mean",
    "var_total",
    "seed",
];

pub const SUMMARY_HEADER: [&str; 15] = [
    "axis",
    "value",
    "realized_total",
    "mu_acs_avg",
    "var_acs_avg",
    "mu_srs_avg",
    "var_srs_avg",
    "relative_efficiency",
    "mean_of_ratios",
    "mu_acs_spread",
    "var_acs_spread",
    "mu_srs_spread",
    "var_srs_spread",
    "included",
    "excluded",
];

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

pub fn fmt_seed(seed: RngSeed) -> String {
    format!("{}:{}", seed.seed, seed.stream_id)
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::format("<csv>", e);
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::format("<csv>", e))
}

/// Population file: the frame plus how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationFile {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
    #[serde(default)]
    pub seed: Option<RngSeed>,
    #[serde(default)]
    pub spec: Option<PopulationSpec>,
}

impl PopulationFile {
    pub fn new(frame: &GridFrame, seed: Option<RngSeed>, spec: Option<PopulationSpec>) -> Self {
        Self {
            width: frame.width(),
            height: frame.height(),
            counts: frame.counts().to_vec(),
            seed,
            spec,
        }
    }

    pub fn frame(&self) -> Result<GridFrame> {
        GridFrame::new(self.width, self.height, self.counts.clone())
    }
}

pub fn frame_to_csv(frame: &GridFrame) -> Result<Vec<u8>> {
    csv_bytes(
        &["x", "y", "count"],
        (0..frame.len()).map(|i| {
            let (x, y) = frame.coords(i);
            [x.to_string(), y.to_string(), frame.count(i).to_string()]
        }),
    )
}

/// Parses `x,y,count` rows. Every cell of the bounding frame must appear
/// exactly once.
pub fn frame_from_csv(text: &str, origin: &Path) -> Result<GridFrame> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::format(origin, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "count"] {
        return Err(Error::format(origin, "expected header x,y,count"));
    }
    let mut cells = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(origin, e))?;
        let field = |i: usize| -> Result<u64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::format(origin, format!("row {}: bad value in column {}", line + 2, i + 1)))
        };
        cells.push((field(0)? as usize, field(1)? as usize, field(2)?));
    }
    let width = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let height = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if width == 0 || cells.len() != width * height {
        return Err(Error::format(
            origin,
            format!("{} rows do not cover a {width}x{height} frame", cells.len()),
        ));
    }
    let mut counts = vec![None; width * height];
    for (x, y, c) in cells {
        let slot = &mut counts[y * width + x];
        if slot.replace(c).is_some() {
            return Err(Error::format(origin, format!("cell ({x}, {y}) listed twice")));
        }
    }
    GridFrame::new(width, height, counts.into_iter().map(|c| c.unwrap_or(0)).collect())
}

pub fn population_json(file: &PopulationFile) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(file).map_err(|e| Error::format("<json>", e))
}

/// Loads a population from `.csv` or `.json`.
pub fn load_population(path: &Path) -> Result<PopulationFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(PopulationFile::new(&frame_from_csv(&text, path)?, None, None)),
        _ => {
            let file: PopulationFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
            file.frame()?;
            Ok(file)
        }
    }
}

fn estimate_fields(r: &EstimateReport, seed: Option<RngSeed>) -> [String; 8] {
    [
        r.design.to_string(),
        r.sample_size.to_string(),
        r.final_effort.to_string(),
        fmt_f64(r.mean_estimate),
        fmt_f64(r.total_estimate),
        fmt_f64(r.variance_of_mean),
        fmt_f64(r.variance_of_total),
        seed.map(fmt_seed).unwrap_or_default(),
    ]
}

pub fn estimates_csv(rows: &[(EstimateReport, Option<RngSeed>)]) -> Result<Vec<u8>> {
    csv_bytes(&ESTIMATE_HEADER, rows.iter().map(|(r, s)| estimate_fields(r, *s)))
}

/// Audit record of one ACS draw, including the edge units that the
/// estimator ignores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcsAudit<'a> {
    pub seed: RngSeed,
    pub condition: f64,
    pub neighborhood: u8,
    pub initial_indices: &'a [usize],
    pub networks: Vec<NetworkAudit>,
    pub final_effort: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkAudit {
    pub initial_index: usize,
    pub members: Vec<usize>,
    pub y_total: u64,
    pub w: f64,
    pub edges: Vec<usize>,
    pub edge_y: Vec<u64>,
}

pub fn acs_audit<'a>(sample: &'a AcsSample, frame: &GridFrame, seed: RngSeed) -> AcsAudit<'a> {
    AcsAudit {
        seed,
        condition: sample.condition.threshold,
        neighborhood: sample.condition.neighborhood.degree(),
        initial_indices: &sample.initial_indices,
        networks: sample
            .initial_indices
            .iter()
            .zip(&sample.expansions)
            .map(|(&i, e)| NetworkAudit {
                initial_index: i,
                members: e.network.unit_indices.clone(),
                y_total: e.network.y_total,
                w: e.network.mean(),
                edges: e.edge_units.clone(),
                edge_y: e.edge_units.iter().map(|&u| frame.count(u)).collect(),
            })
            .collect(),
        final_effort: sample.final_effort,
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::format("<json>", e))?;
    v.push(b'\n');
    Ok(v)
}

pub fn efficiency_csv(r: &EfficiencyReport) -> Result<Vec<u8>> {
    let row = vec![
        r.population.to_string(),
        r.n1.to_string(),
        r.m.to_string(),
        fmt_f64(r.condition),
        r.networks.to_string(),
        fmt_f64(r.total_ss),
        fmt_f64(r.within_ss),
        fmt_f64(r.between_ss),
        fmt_f64(r.sigma2),
        fmt_f64(r.ratio),
        fmt_f64(r.var_mu_tilde),
        fmt_f64(r.var_ybar_m),
        fmt_f64(r.var_ybar_m_fpc),
        fmt_f64(r.kappa),
        fmt_f64(r.kappa1),
        fmt_f64(r.feasible_m_bound),
        fmt_f64(r.superiority_lhs),
        fmt_f64(r.superiority_rhs),
        r.fpc_condition.to_string(),
        r.acs_superior.to_string(),
    ];
    csv_bytes(&EfficiencyReport::CSV_HEADER, [row])
}

/// Everything an experiment run produced, one entry per sweep (a run
/// without sweeps is a single entry on axis `none`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutputs {
    pub sweeps: Vec<SweepResult>,
}

impl ExperimentOutputs {
    pub fn new(sweeps: Vec<SweepResult>) -> Self {
        Self { sweeps }
    }

    pub fn replicates_csv(&self) -> Result<Vec<u8>> {
        let mut header = vec!["axis", "value", "replicate"];
        header.extend(ESTIMATE_HEADER);
        let mut rows = Vec::new();
        for sweep in &self.sweeps {
            for result in &sweep.results {
                for rec in &result.records {
                    for est in [&rec.acs, &rec.srs] {
                        let mut row = vec![
                            sweep.trend.axis.clone(),
                            fmt_opt(result.axis_value),
                            rec.replicate.to_string(),
                        ];
                        row.extend(estimate_fields(est, Some(rec.seed)));
                        rows.push(row);
                    }
                }
            }
        }
        csv_bytes(&header, rows)
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.sweeps.iter().flat_map(SweepResult::table).collect()
    }

    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(
            &SUMMARY_HEADER,
            self.summary_rows().into_iter().map(|r| {
                vec![
                    r.axis,
                    fmt_opt(r.value),
                    fmt_f64(r.realized_total),
                    fmt_f64(r.mu_acs_avg),
                    fmt_f64(r.var_acs_avg),
                    fmt_f64(r.mu_srs_avg),
                    fmt_f64(r.var_srs_avg),
                    fmt_opt(r.relative_efficiency),
                    fmt_opt(r.mean_of_ratios),
                    fmt_f64(r.mu_acs_spread),
                    fmt_f64(r.var_acs_spread),
                    fmt_f64(r.mu_srs_spread),
                    fmt_f64(r.var_srs_spread),
                    r.included.to_string(),
                    r.excluded.to_string(),
                ]
            }),
        )
    }

    pub fn trends(&self) -> Vec<&TrendReport> {
        self.sweeps.iter().map(|s| &s.trend).collect()
    }
}
