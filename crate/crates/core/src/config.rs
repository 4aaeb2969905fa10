//! Experiment configuration files (TOML).
//!
//! ```toml
//! schema_version = 1
//!
//! [population]
//! kind = "clustered"          # or "counts"
//! n_centers = 5
//! points_per_center = 50
//! spread_sd = 1.0
//! width = 20
//! height = 20
//!
//! [design]
//! n1 = 10
//! m = 10                      # defaults to n1
//! condition = 0.0
//! neighborhood = 4            # 4 or 8
//! replicates = 100
//! seed = 42
//!
//! [sweep]
//! spreads = [0.6666666666666666, 1.0, 1.5, 2.0, 3.0]
//!
//! [output]
//! formats = ["csv", "json"]
//! ```
//!
//! A count-field population uses `kind = "counts"` with `family`,
//! `target_mean`, `target_vmr`, `width` and `height`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::designs::Neighborhood;
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, PopulationSpec, SweepAxes};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub n1: usize,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub condition: f64,
    #[serde(default = "default_neighborhood")]
    pub neighborhood: u8,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub regenerate_population: bool,
    #[serde(default)]
    pub share_centers: bool,
}

fn default_neighborhood() -> u8 {
    4
}

fn default_replicates() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub population: PopulationSpec,
    pub design: DesignSection,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(
                if key == "." { "<document>".to_string() } else { key },
                e.inner().to_string(),
            )
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.output.formats.is_empty() {
            return Err(Error::config(
                "output.formats",
                "at least one output format is required",
            ));
        }
        Neighborhood::from_degree(self.design.neighborhood)
            .map_err(|e| Error::config("design.neighborhood", e.to_string()))?;
        self.experiment().validate()
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let d = &self.design;
        ExperimentConfig {
            population: self.population.clone(),
            n1: d.n1,
            m: d.m.unwrap_or(d.n1),
            condition: d.condition,
            neighborhood: Neighborhood::from_degree(d.neighborhood).unwrap_or_default(),
            replicates: d.replicates,
            seed: d.seed,
            regenerate_population: d.regenerate_population,
            share_centers: d.share_centers,
            sweeps: self.sweep.clone(),
        }
    }

    pub fn from_experiment(config: &ExperimentConfig, formats: Vec<OutputFormat>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            population: config.population.clone(),
            design: DesignSection {
                n1: config.n1,
                m: Some(config.m),
                condition: config.condition,
                neighborhood: config.neighborhood.degree(),
                replicates: config.replicates,
                seed: config.seed,
                regenerate_population: config.regenerate_population,
                share_centers: config.share_centers,
            },
            sweep: config.sweeps.clone(),
            output: OutputSection { formats },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = r#"
schema_version = 1

[population]
kind = "clustered"
n_centers = 5
points_per_center = 50
spread_sd = 1.0
width = 20
height = 20

[design]
n1 = 10
condition = 0.0
replicates = 100
seed = 42

[sweep]
spreads = [0.6666666666666666, 1.0, 1.5, 2.0, 3.0]
"#;

    #[test]
    fn parses_paper_config() {
        let cfg = ConfigFile::parse(PAPER).unwrap();
        let exp = cfg.experiment();
        assert_eq!(exp.m, 10);
        assert_eq!(exp.neighborhood, Neighborhood::Rook);
        assert_eq!(exp.sweeps.spreads.len(), 5);
        assert!(cfg.wants(OutputFormat::Csv) && !cfg.wants(OutputFormat::Svg));
        let again = ConfigFile::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn counts_population() {
        let text = PAPER.replace(
            "kind = \"clustered\"\nn_centers = 5\npoints_per_center = 50\nspread_sd = 1.0\n",
            "kind = \"counts\"\nfamily = \"negative-binomial\"\ntarget_mean = 2.0\ntarget_vmr = 4.0\n",
        );
        let cfg = ConfigFile::parse(&text).unwrap();
        assert!(matches!(cfg.population, PopulationSpec::Counts(_)));
    }

    fn key_of(text: &str) -> String {
        match ConfigFile::parse(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(&PAPER.replace("n1 = 10", "n1 = \"ten\"")), "design.n1");
        assert_eq!(key_of(&PAPER.replace("n1 = 10", "n1 = 1")), "design.n1");
        assert!(key_of(&PAPER.replace("seed = 42", "seed = 42\nbogus = 1")).starts_with("design"));
        assert_eq!(
            key_of(&PAPER.replace("schema_version = 1", "schema_version = 2")),
            "schema_version"
        );
        assert_eq!(
            key_of(&PAPER.replace("condition = 0.0", "neighborhood = 6")),
            "design.neighborhood"
        );
        assert!(key_of(&PAPER.replace("spread_sd = 1.0", "spread_sd = -1.0")).contains("population"));
        assert_eq!(key_of(&format!("{PAPER}\n[output]\nformats = []\n")), "output.formats");
    }
}
