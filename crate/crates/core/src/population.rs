//! Synthetic spatial populations on a rectangular grid of unit cells.
//!
//! Two generators are provided: clustered point fields (isotropic bivariate
//! normal scatter around uniformly placed centers, binned to cells) and
//! direct count fields whose per-cell distribution is chosen to hit a target
//! mean and variance-to-mean ratio.

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_distr::{Binomial, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Rectangular frame of `width * height` cells holding nonnegative counts.
///
/// Cells are addressed by zero-based `(x, y)` and stored row-major, so the
/// linear index of `(x, y)` is `y * width + x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFrame")]
pub struct GridFrame {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

#[derive(Deserialize)]
struct RawFrame {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

impl TryFrom<RawFrame> for GridFrame {
    type Error = Error;

    fn try_from(raw: RawFrame) -> Result<Self> {
        GridFrame::new(raw.width, raw.height, raw.counts)
    }
}

impl GridFrame {
    pub fn new(width: usize, height: usize, counts: Vec<u64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::spec(format!(
                "frame must have positive dimensions, got {width}x{height}"
            )));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::spec("frame dimensions overflow"))?;
        if counts.len() != n {
            return Err(Error::Structural(format!(
                "{width}x{height} frame needs {n} counts, got {}",
                counts.len()
            )));
        }
        Ok(Self { width, height, counts })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width.saturating_mul(height)])
    }

    /// Builds a frame by evaluating `f(x, y)` for every cell.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u64) -> Result<Self> {
        let counts = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, counts)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Population size N.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.counts[self.index(x, y)]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn value(&self, index: usize) -> f64 {
        self.counts[index] as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.len() as f64
    }

    /// Sum of squared deviations from the mean over all cells.
    pub fn sum_of_squares(&self) -> f64 {
        let mu = self.mean();
        self.counts.iter().map(|&c| (c as f64 - mu).powi(2)).sum()
    }
}

/// Clustered point-field parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub n_centers: usize,
    pub points_per_center: usize,
    pub spread_sd: f64,
    pub width: usize,
    pub height: usize,
}

impl ClusterSpec {
    pub fn paper_default(spread_sd: f64) -> Self {
        Self {
            n_centers: 5,
            points_per_center: 50,
            spread_sd,
            width: 20,
            height: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread_sd.is_finite() && self.spread_sd > 0.0) {
            return Err(Error::spec(format!(
                "spread_sd must be positive and finite, got {}",
                self.spread_sd
            )));
        }
        if self.n_centers == 0 {
            return Err(Error::spec("n_centers must be at least 1"));
        }
        if self.points_per_center == 0 {
            return Err(Error::spec("points_per_center must be at least 1"));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::spec(format!(
                "cluster frames need at least 2x2 cells, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPoint {
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    pub in_frame: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterField {
    pub centers: Vec<(f64, f64)>,
    pub points: Vec<ClusterPoint>,
}

impl ClusterField {
    pub fn in_frame_count(&self) -> usize {
        self.points.iter().filter(|p| p.in_frame).count()
    }
}

/// Cluster centers uniform on `[1, width - 1] x [1, height - 1]`.
pub fn draw_centers<R: Rng + ?Sized>(spec: &ClusterSpec, rng: &mut R) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let xs = Uniform::new_inclusive(1.0, spec.width as f64 - 1.0).map_err(|e| Error::spec(e.to_string()))?;
    let ys = Uniform::new_inclusive(1.0, spec.height as f64 - 1.0).map_err(|e| Error::spec(e.to_string()))?;
    Ok((0..spec.n_centers).map(|_| (xs.sample(rng), ys.sample(rng))).collect())
}

/// Scatters `points_per_center` isotropic normal points around each center.
pub fn scatter_points<R: Rng + ?Sized>(
    spec: &ClusterSpec,
    centers: &[(f64, f64)],
    rng: &mut R,
) -> Result<ClusterField> {
    spec.validate()?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut points = Vec::with_capacity(centers.len() * spec.points_per_center);
    for (cluster, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..spec.points_per_center {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let (x, y) = (cx + spec.spread_sd * dx, cy + spec.spread_sd * dy);
            let in_frame = (0.0..w).contains(&x) && (0.0..h).contains(&y);
            points.push(ClusterPoint {
                x,
                y,
                cluster,
                in_frame,
            });
        }
    }
    Ok(ClusterField {
        centers: centers.to_vec(),
        points,
    })
}

/// Draws centers and points for one clustered population.
///
/// Out-of-frame points are kept (flagged) so that plots show the full
/// scatter; binning drops them.
pub fn generate_cluster_points(spec: &ClusterSpec, seed: RngSeed) -> Result<ClusterField> {
    let mut rng = seed.rng();
    let centers = draw_centers(spec, &mut rng)?;
    scatter_points(spec, &centers, &mut rng)
}

/// Counts points per cell using half-open cells `[i, i+1) x [j, j+1)`.
pub fn bin_points_to_frame<I>(points: I, width: usize, height: usize) -> Result<GridFrame>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut frame = GridFrame::zeros(width, height)?;
    for (x, y) in points {
        if !(x >= 0.0 && y >= 0.0) {
            continue;
        }
        let (cx, cy) = (x.floor(), y.floor());
        if cx < width as f64 && cy < height as f64 {
            let idx = frame.index(cx as usize, cy as usize);
            frame.counts[idx] += 1;
        }
    }
    Ok(frame)
}

impl ClusterField {
    pub fn bin(&self, width: usize, height: usize) -> Result<GridFrame> {
        bin_points_to_frame(self.points.iter().map(|p| (p.x, p.y)), width, height)
    }
}

/// Generates and bins a clustered population in one step.
pub fn generate_clustered_frame(spec: &ClusterSpec, seed: RngSeed) -> Result<(GridFrame, ClusterField)> {
    let field = generate_cluster_points(spec, seed)?;
    let frame = field.bin(spec.width, spec.height)?;
    Ok((frame, field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformConstant,
    Binomial,
    Poisson,
    NegativeBinomial,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::UniformConstant => "uniform-constant",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
            Family::NegativeBinomial => "negative-binomial",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-constant" | "uniform" | "constant" => Ok(Family::UniformConstant),
            "binomial" => Ok(Family::Binomial),
            "poisson" => Ok(Family::Poisson),
            "negative-binomial" | "negbin" => Ok(Family::NegativeBinomial),
            other => Err(Error::spec(format!("unknown count family `{other}`"))),
        }
    }
}

/// Per-cell count distribution described by its mean and VMR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    pub family: Family,
    pub target_mean: f64,
    pub target_vmr: f64,
}

const VMR_EPS: f64 = 1e-12;

/// Distribution a [`DispersionSpec`] resolves to.
#[derive(Debug, Clone, Copy)]
enum CountLaw {
    Constant(u64),
    Binomial(Binomial),
    Poisson(Poisson<f64>),
    /// Gamma-mixed Poisson.
    NegativeBinomial(Gamma<f64>),
    Zero,
}

impl DispersionSpec {
    pub fn new(family: Family, target_mean: f64, target_vmr: f64) -> Self {
        Self {
            family,
            target_mean,
            target_vmr,
        }
    }

    /// Picks the family implied by `vmr` (0, below 1, 1, above 1).
    pub fn for_vmr(target_mean: f64, target_vmr: f64) -> Self {
        let family = if target_vmr == 0.0 {
            Family::UniformConstant
        } else if target_vmr < 1.0 {
            Family::Binomial
        } else if (target_vmr - 1.0).abs() <= VMR_EPS {
            Family::Poisson
        } else {
            Family::NegativeBinomial
        };
        Self::new(family, target_mean, target_vmr)
    }

    /// Negative-binomial `(p, r)` matching the target mean and VMR.
    pub fn negative_binomial_params(&self) -> (f64, f64) {
        let p = 1.0 / self.target_vmr;
        (p, self.target_mean * p / (1.0 - p))
    }

    pub fn validate(&self) -> Result<()> {
        self.law().map(|_| ())
    }

    fn law(&self) -> Result<CountLaw> {
        let (mean, vmr) = (self.target_mean, self.target_vmr);
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::spec(format!("target_mean must be finite and >= 0, got {mean}")));
        }
        if !(vmr.is_finite() && vmr >= 0.0) {
            return Err(Error::spec(format!("target_vmr must be finite and >= 0, got {vmr}")));
        }
        let fam = self.family.name();
        match self.family {
            Family::UniformConstant => {
                if vmr != 0.0 {
                    return Err(Error::spec(format!("{fam} requires target_vmr = 0, got {vmr}")));
                }
                if mean.fract() != 0.0 {
                    return Err(Error::spec(format!("{fam} requires an integer mean, got {mean}")));
                }
                Ok(CountLaw::Constant(mean as u64))
            }
            Family::Binomial => {
                if !(vmr > 0.0 && vmr < 1.0) {
                    return Err(Error::spec(format!("{fam} requires 0 < target_vmr < 1, got {vmr}")));
                }
                // VMR = 1 - q, mean = trials * q
                let q = 1.0 - vmr;
                let trials = mean / q;
                let rounded = trials.round();
                if (trials - rounded).abs() > 1e-9 * trials.max(1.0) {
                    return Err(Error::spec(format!(
                        "{fam} with mean {mean} and VMR {vmr} needs {trials} trials; choose values giving a whole number"
                    )));
                }
                if rounded == 0.0 {
                    return Ok(CountLaw::Zero);
                }
                Binomial::new(rounded as u64, q)
                    .map(CountLaw::Binomial)
                    .map_err(|e| Error::spec(format!("{fam}: {e}")))
            }
            Family::Poisson => {
                if (vmr - 1.0).abs() > VMR_EPS {
                    return Err(Error::spec(format!("{fam} requires target_vmr = 1, got {vmr}")));
                }
                if mean == 0.0 {
                    return Ok(CountLaw::Zero);
                }
                Poisson::new(mean)
                    .map(CountLaw::Poisson)
                    .map_err(|e| Error::spec(format!("{fam}: {e}")))
            }
            Family::NegativeBinomial => {
                if vmr <= 1.0 + VMR_EPS {
                    return Err(Error::spec(format!("{fam} requires target_vmr > 1, got {vmr}")));
                }
                if mean == 0.0 {
                    return Ok(CountLaw::Zero);
                }
                let (p, r) = self.negative_binomial_params();
                Gamma::new(r, (1.0 - p) / p)
                    .map(CountLaw::NegativeBinomial)
                    .map_err(|e| Error::spec(format!("{fam}: {e}")))
            }
        }
    }
}

impl CountLaw {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            CountLaw::Constant(c) => *c,
            CountLaw::Zero => 0,
            CountLaw::Binomial(b) => b.sample(rng),
            CountLaw::Poisson(p) => p.sample(rng) as u64,
            CountLaw::NegativeBinomial(gamma) => {
                let lambda = gamma.sample(rng);
                match Poisson::new(lambda) {
                    Ok(p) => p.sample(rng) as u64,
                    Err(_) => 0,
                }
            }
        }
    }
}

/// Independent per-cell counts from the family in `spec`.
pub fn generate_count_field(spec: &DispersionSpec, width: usize, height: usize, seed: RngSeed) -> Result<GridFrame> {
    let law = spec.law()?;
    let mut rng = seed.rng();
    GridFrame::from_fn(width, height, |_, _| law.draw(&mut rng))
}

/// Population variance (divisor N) of the cell counts over their mean.
pub fn variance_to_mean_ratio(frame: &GridFrame) -> Result<f64> {
    if frame.total() == 0 {
        return Err(Error::UndefinedVmr);
    }
    let variance = frame.sum_of_squares() / frame.len() as f64;
    Ok(variance / frame.mean())
}
