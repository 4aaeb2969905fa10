use std::path::{Path, PathBuf};

use acs_core::config::{ConfigFile, OutputFormat};
use acs_core::designs::{draw_cluster_sample, draw_paired, partition_into_networks, ClusterPartitionSpec, Condition};
use acs_core::efficiency::{efficiency_report, feasible_region};
use acs_core::estimators::{estimate_acs, estimate_cluster, estimate_srs, ClusterData};
use acs_core::harness::{cluster_field_for, run_experiment, CountFieldSpec, ExperimentConfig, PopulationSpec};
use acs_core::io::{self, ExperimentOutputs, PopulationFile};
use acs_core::population::{generate_clustered_frame, generate_count_field, ClusterSpec, DispersionSpec};
use acs_core::{svg, Error, GridFrame, Neighborhood, Result, RngSeed};
use serde::Serialize;

use crate::{DesignArg, EfficiencyArgs, ExperimentArgs, FormatArg, GenerateArgs, SampleArgs};

pub struct Context {
    pub out: PathBuf,
    pub verbose: u8,
}

impl Context {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        io::write_atomic(&path, bytes)?;
        if self.verbose > 0 {
            eprintln!("wrote {}", path.display());
        }
        Ok(path)
    }
}

pub fn generate(ctx: &Context, a: &GenerateArgs) -> Result<()> {
    let (width, height) = a.grid;
    let seed = RngSeed::from_seed(a.seed);
    if let Some(family) = a.family {
        if a.svg {
            return Err(Error::Specification(
                "--svg plots a point field; count-field populations have none".into(),
            ));
        }
        let dispersion = DispersionSpec::new(family, a.mean, a.vmr);
        let frame = generate_count_field(&dispersion, width, height, seed)?;
        let spec = PopulationSpec::Counts(CountFieldSpec::new(dispersion, width, height));
        return write_population(ctx, a, &a.name, &frame, seed, spec);
    }
    for (k, &sd) in a.sd.iter().enumerate() {
        let spec = ClusterSpec {
            n_centers: a.centers,
            points_per_center: a.points,
            spread_sd: sd,
            width,
            height,
        };
        let (frame, field) = generate_clustered_frame(&spec, seed)?;
        let name = if a.sd.len() == 1 {
            a.name.clone()
        } else {
            format!("{}_sd{}", a.name, k + 1)
        };
        write_population(ctx, a, &name, &frame, seed, PopulationSpec::Clustered(spec))?;
        if a.svg {
            let title = format!("spread sd = {sd:.3}, {} points in frame", field.in_frame_count());
            ctx.write(
                &format!("{name}.svg"),
                svg::cluster_scatter(&field, width, height, &title).as_bytes(),
            )?;
        }
        println!("{name}: {width}x{height}, sd {sd}, total {}", frame.total());
    }
    Ok(())
}

fn write_population(
    ctx: &Context,
    a: &GenerateArgs,
    name: &str,
    frame: &GridFrame,
    seed: RngSeed,
    spec: PopulationSpec,
) -> Result<()> {
    if a.formats.contains(&FormatArg::Csv) {
        ctx.write(&format!("{name}.csv"), &io::frame_to_csv(frame)?)?;
    }
    if a.formats.contains(&FormatArg::Json) {
        let file = PopulationFile::new(frame, Some(seed), Some(spec));
        ctx.write(&format!("{name}.json"), &io::to_json(&file)?)?;
    }
    Ok(())
}

fn load_frame(path: &Path) -> Result<GridFrame> {
    io::load_population(path)?.frame()
}

fn condition(threshold: f64, degree: u8) -> Result<Condition> {
    if !threshold.is_finite() {
        return Err(Error::Specification(format!(
            "condition must be finite, got {threshold}"
        )));
    }
    Ok(Condition::new(threshold).with_neighborhood(Neighborhood::from_degree(degree)?))
}

#[derive(Serialize)]
struct SrsRecord<'a> {
    seed: RngSeed,
    unit_indices: &'a [usize],
    y_values: &'a [u64],
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Result<()> {
    let frame = load_frame(&a.population)?;
    let seed = RngSeed::from_seed(a.seed);
    if a.design == DesignArg::Cluster {
        let sample = draw_cluster_sample(&frame, &block_spec(&frame, a)?, seed)?;
        ctx.write("cluster_sample.json", &io::to_json(&sample)?)?;
        println!(
            "cluster: {} clusters, {} cells",
            sample.clusters.len(),
            ClusterData::from(&sample).cluster_sizes().iter().sum::<usize>()
        );
        return Ok(());
    }
    let m = a.m.unwrap_or(a.n1);
    let (acs, srs) = draw_paired(&frame, a.n1, m, condition(a.condition, a.neighborhood)?, seed)?;
    if matches!(a.design, DesignArg::Acs | DesignArg::Both) {
        ctx.write("acs_sample.json", &io::to_json(&io::acs_audit(&acs, &frame, seed))?)?;
        println!("acs: n1 {}, final effort {}", acs.n1(), acs.final_effort);
    }
    if matches!(a.design, DesignArg::Srs | DesignArg::Both) {
        let record = SrsRecord {
            seed,
            unit_indices: &srs.unit_indices,
            y_values: &srs.y_values,
        };
        ctx.write("srs_sample.json", &io::to_json(&record)?)?;
        println!("srs: m {}", srs.m());
    }
    Ok(())
}

fn block_spec(frame: &GridFrame, a: &SampleArgs) -> Result<ClusterPartitionSpec> {
    ClusterPartitionSpec::blocks(frame, a.block.0, a.block.1, a.clusters)
}

pub fn estimate(ctx: &Context, a: &SampleArgs) -> Result<()> {
    let frame = load_frame(&a.population)?;
    let n = frame.len();
    let seed = RngSeed::from_seed(a.seed);
    let mut rows = Vec::new();
    if a.design == DesignArg::Cluster {
        let sample = draw_cluster_sample(&frame, &block_spec(&frame, a)?, seed)?;
        rows.push((estimate_cluster(&ClusterData::from(&sample))?, Some(seed)));
    } else {
        let m = a.m.unwrap_or(a.n1);
        let (acs, srs) = draw_paired(&frame, a.n1, m, condition(a.condition, a.neighborhood)?, seed)?;
        if matches!(a.design, DesignArg::Acs | DesignArg::Both) {
            rows.push((estimate_acs(&acs, n)?, Some(seed)));
        }
        if matches!(a.design, DesignArg::Srs | DesignArg::Both) {
            rows.push((estimate_srs(&srs, n)?, Some(seed)));
        }
    }
    let csv = io::estimates_csv(&rows)?;
    ctx.write("estimates.csv", &csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

pub fn efficiency(ctx: &Context, a: &EfficiencyArgs) -> Result<()> {
    let frame = load_frame(&a.population)?;
    let m = if a.equal_sizes { a.n1 } else { a.m.unwrap_or(a.n1) };
    let partition = partition_into_networks(&frame, condition(a.condition, a.neighborhood)?);
    let report = efficiency_report(&frame, &partition, a.n1, m)?;
    ctx.write("efficiency.json", &io::to_json(&report)?)?;
    ctx.write("efficiency.csv", &io::efficiency_csv(&report)?)?;
    if a.svg {
        let region = feasible_region(report.population, report.kappa1)?;
        ctx.write("feasible_region.svg", svg::feasible_region(&region, m).as_bytes())?;
    }
    println!(
        "N {} networks {} | within {} between {} | ratio {} | lhs {} rhs {} | kappa1 {} | acs superior: {}",
        report.population,
        report.networks,
        report.within_ss,
        report.between_ss,
        report.ratio,
        report.superiority_lhs,
        report.superiority_rhs,
        report.kappa1,
        report.acs_superior
    );
    Ok(())
}

pub fn experiment(ctx: &Context, a: &ExperimentArgs) -> Result<()> {
    let mut file = ConfigFile::load(&a.config)?;
    if let Some(seed) = a.seed {
        file.design.seed = seed;
    }
    if let Some(r) = a.replicates {
        file.design.replicates = r;
    }
    let config = file.experiment();
    config.validate()?;
    let outputs = ExperimentOutputs::new(run_experiment(&config)?);
    if file.wants(OutputFormat::Csv) {
        ctx.write("replicates.csv", &outputs.replicates_csv()?)?;
        ctx.write("summary.csv", &outputs.summary_csv()?)?;
    }
    if file.wants(OutputFormat::Json) {
        ctx.write("trends.json", &io::to_json(&outputs.trends())?)?;
    }
    if file.wants(OutputFormat::Svg) {
        write_experiment_svgs(ctx, &config, &outputs)?;
    }
    for row in outputs.summary_rows() {
        println!(
            "{} {}: relative efficiency {} ({} included, {} excluded)",
            row.axis,
            io::fmt_opt(row.value),
            io::fmt_opt(row.relative_efficiency),
            row.included,
            row.excluded
        );
    }
    Ok(())
}

fn write_experiment_svgs(ctx: &Context, config: &ExperimentConfig, outputs: &ExperimentOutputs) -> Result<()> {
    for sweep in &outputs.sweeps {
        let axis = &sweep.trend.axis;
        if !sweep.trend.values.is_empty() {
            ctx.write(&format!("trend_{axis}.svg"), svg::trend_plot(&sweep.trend).as_bytes())?;
        }
        if axis != "spread_sd" {
            continue;
        }
        for (point, &sd) in sweep.trend.values.iter().enumerate() {
            let PopulationSpec::Clustered(spec) = &config.population else {
                continue;
            };
            let mut cfg = config.clone();
            cfg.population = PopulationSpec::Clustered(ClusterSpec { spread_sd: sd, ..*spec });
            if let Some(field) = cluster_field_for(&cfg, point as u32, 0)? {
                let title = format!("spread sd = {sd:.3}");
                let plot = svg::cluster_scatter(&field, spec.width, spec.height, &title);
                ctx.write(&format!("population_sd{}.svg", point + 1), plot.as_bytes())?;
            }
        }
    }
    Ok(())
}
