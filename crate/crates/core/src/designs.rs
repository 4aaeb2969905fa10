//! Simple random sampling, adaptive cluster sampling and the network
//! structure both rely on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::GridFrame;
use crate::rng::RngSeed;

/// Which cells count as adjacent during network expansion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    /// Up, down, left, right.
    #[default]
    Rook,
    /// Rook plus the four diagonals.
    Queen,
}

impl Neighborhood {
    pub fn from_degree(degree: u8) -> Result<Self> {
        match degree {
            4 => Ok(Neighborhood::Rook),
            8 => Ok(Neighborhood::Queen),
            d => Err(Error::spec(format!("neighborhood must be 4 or 8, got {d}"))),
        }
    }

    pub fn degree(self) -> u8 {
        match self {
            Neighborhood::Rook => 4,
            Neighborhood::Queen => 8,
        }
    }

    fn offsets(self) -> &'static [(isize, isize)] {
        const ROOK: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const QUEEN: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];
        match self {
            Neighborhood::Rook => &ROOK,
            Neighborhood::Queen => &QUEEN,
        }
    }

    /// In-frame neighbors of `index`. Frame edges truncate; no wraparound.
    pub fn neighbors(self, frame: &GridFrame, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = frame.coords(index);
        let (w, h) = (frame.width() as isize, frame.height() as isize);
        self.offsets().iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            (0 <= nx && nx < w && 0 <= ny && ny < h).then(|| frame.index(nx as usize, ny as usize))
        })
    }
}

/// The condition to adapt: a unit qualifies when its count is strictly
/// greater than `threshold`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub threshold: f64,
    #[serde(default)]
    pub neighborhood: Neighborhood,
}

impl Condition {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            neighborhood: Neighborhood::Rook,
        }
    }

    pub fn with_neighborhood(mut self, neighborhood: Neighborhood) -> Self {
        self.neighborhood = neighborhood;
        self
    }

    pub fn qualifies(&self, count: u64) -> bool {
        count as f64 > self.threshold
    }
}

impl From<f64> for Condition {
    fn from(threshold: f64) -> Self {
        Self::new(threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrsSample {
    pub unit_indices: Vec<usize>,
    pub y_values: Vec<u64>,
}

impl SrsSample {
    pub fn from_indices(frame: &GridFrame, unit_indices: Vec<usize>) -> Self {
        let y_values = unit_indices.iter().map(|&i| frame.count(i)).collect();
        Self { unit_indices, y_values }
    }

    pub fn m(&self) -> usize {
        self.unit_indices.len()
    }
}

/// A network `B_k` with its size, y-total and mean `w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Sorted ascending.
    pub unit_indices: Vec<usize>,
    pub y_total: u64,
}

impl Network {
    fn from_units(frame: &GridFrame, mut units: Vec<usize>) -> Self {
        units.sort_unstable();
        let y_total = units.iter().map(|&i| frame.count(i)).sum();
        Self {
            unit_indices: units,
            y_total,
        }
    }

    pub fn size(&self) -> usize {
        self.unit_indices.len()
    }

    pub fn mean(&self) -> f64 {
        self.y_total as f64 / self.size() as f64
    }

    pub fn contains(&self, index: usize) -> bool {
        self.unit_indices.binary_search(&index).is_ok()
    }
}

/// Result of expanding from one initial unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub network: Network,
    /// Non-qualifying cells adjacent to the network; sorted ascending.
    pub edge_units: Vec<usize>,
}

/// Flood-fills the network containing `start`.
///
/// A start cell that does not satisfy the condition is its own network with
/// no edge units. Otherwise every qualifying cell reachable through
/// qualifying neighbors joins the network and every non-qualifying neighbor
/// is recorded as an edge unit.
pub fn expand_network(frame: &GridFrame, start: usize, condition: Condition) -> Result<Expansion> {
    if start >= frame.len() {
        return Err(Error::spec(format!(
            "start index {start} outside a frame of {} cells",
            frame.len()
        )));
    }
    if !condition.qualifies(frame.count(start)) {
        return Ok(Expansion {
            network: Network::from_units(frame, vec![start]),
            edge_units: Vec::new(),
        });
    }
    let mut seen = vec![false; frame.len()];
    let mut members = Vec::new();
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(cell) = queue.pop_front() {
        members.push(cell);
        for nb in condition.neighborhood.neighbors(frame, cell) {
            if seen[nb] {
                continue;
            }
            if condition.qualifies(frame.count(nb)) {
                seen[nb] = true;
                queue.push_back(nb);
            } else {
                edges.insert(nb);
            }
        }
    }
    Ok(Expansion {
        network: Network::from_units(frame, members),
        edge_units: edges.into_iter().collect(),
    })
}

pub(crate) fn check_sample_size(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::DegreesOfFreedom {
            what: "a sample",
            required: 1,
            got: 0,
        });
    }
    if m > n {
        return Err(Error::Size {
            requested: m,
            available: n,
        });
    }
    Ok(())
}

/// First `m` cells of a uniformly random permutation of the frame.
///
/// Any prefix of the returned order is itself a simple random sample, which
/// is how ACS and SRS share their initial units in the harness.
pub fn random_order<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_sample_size(m, n)?;
    let mut all: Vec<usize> = (0..n).collect();
    let (chosen, _) = all.partial_shuffle(rng, m);
    Ok(chosen.to_vec())
}

/// Simple random sample of `m` distinct cells, without replacement.
pub fn draw_srs(frame: &GridFrame, m: usize, seed: RngSeed) -> Result<SrsSample> {
    let indices = random_order(frame.len(), m, &mut seed.rng())?;
    Ok(SrsSample::from_indices(frame, indices))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsSample {
    pub initial_indices: Vec<usize>,
    /// One expansion per initial unit, in draw order.
    pub expansions: Vec<Expansion>,
    /// Distinct cells visited: every network member plus every edge unit.
    pub final_effort: usize,
    pub condition: Condition,
}

impl AcsSample {
    pub fn n1(&self) -> usize {
        self.initial_indices.len()
    }

    /// Network means `w`, one per initial unit.
    pub fn network_means(&self) -> Vec<f64> {
        self.expansions.iter().map(|e| e.network.mean()).collect()
    }

    pub fn networks(&self) -> impl Iterator<Item = &Network> {
        self.expansions.iter().map(|e| &e.network)
    }
}

/// Expands an ACS sample from an already chosen set of initial units.
pub fn acs_from_initial(frame: &GridFrame, initial: Vec<usize>, condition: Condition) -> Result<AcsSample> {
    check_sample_size(initial.len(), frame.len())?;
    let mut cache: BTreeMap<usize, usize> = BTreeMap::new();
    let mut expansions: Vec<Expansion> = Vec::with_capacity(initial.len());
    let mut visited = BTreeSet::new();
    for &start in &initial {
        // A start already swept into an earlier network reuses that expansion.
        if let Some(&k) = cache.get(&start) {
            expansions.push(expansions[k].clone());
            continue;
        }
        let exp = expand_network(frame, start, condition)?;
        let k = expansions.len();
        for &u in &exp.network.unit_indices {
            cache.insert(u, k);
        }
        visited.extend(exp.network.unit_indices.iter().copied());
        visited.extend(exp.edge_units.iter().copied());
        expansions.push(exp);
    }
    Ok(AcsSample {
        final_effort: visited.len(),
        initial_indices: initial,
        expansions,
        condition,
    })
}

/// Initial SRS of `n1` cells followed by network expansion from each.
pub fn draw_acs(frame: &GridFrame, n1: usize, condition: Condition, seed: RngSeed) -> Result<AcsSample> {
    let initial = random_order(frame.len(), n1, &mut seed.rng())?;
    acs_from_initial(frame, initial, condition)
}

/// ACS and SRS drawn from one random order: ACS expands the first `n1`
/// cells, SRS takes the first `m`. The smaller initial set is a subset of
/// the larger.
pub fn draw_paired(
    frame: &GridFrame,
    n1: usize,
    m: usize,
    condition: Condition,
    seed: RngSeed,
) -> Result<(AcsSample, SrsSample)> {
    let order = random_order(frame.len(), n1.max(m), &mut seed.rng())?;
    let acs = acs_from_initial(frame, order[..n1].to_vec(), condition)?;
    Ok((acs, SrsSample::from_indices(frame, order[..m].to_vec())))
}

/// Every cell assigned to exactly one network under a condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPartition {
    pub condition: Condition,
    pub networks: Vec<Network>,
    /// `unit_to_network[i]` is the label `k(i)` of the network holding cell `i`.
    pub unit_to_network: Vec<usize>,
}

impl NetworkPartition {
    /// K.
    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn network_of(&self, index: usize) -> &Network {
        &self.networks[self.unit_to_network[index]]
    }

    /// `w_{k(i)}` for each cell.
    pub fn unit_means(&self) -> Vec<f64> {
        self.unit_to_network.iter().map(|&k| self.networks[k].mean()).collect()
    }

    /// Checks disjointness, coverage and label consistency against `frame`.
    pub fn validate(&self, frame: &GridFrame) -> Result<()> {
        let n = frame.len();
        if self.unit_to_network.len() != n {
            return Err(Error::Structural(format!(
                "partition labels {} cells, frame has {n}",
                self.unit_to_network.len()
            )));
        }
        let mut covered = 0usize;
        for (k, net) in self.networks.iter().enumerate() {
            if net.unit_indices.is_empty() {
                return Err(Error::Structural(format!("network {k} is empty")));
            }
            let mut y_total = 0u64;
            for &u in &net.unit_indices {
                if u >= n || self.unit_to_network[u] != k {
                    return Err(Error::Structural(format!(
                        "cell {u} listed in network {k} but labelled otherwise"
                    )));
                }
                y_total += frame.count(u);
            }
            if y_total != net.y_total {
                return Err(Error::Structural(format!(
                    "network {k} records y-total {} but the frame sums to {y_total}",
                    net.y_total
                )));
            }
            covered += net.size();
        }
        if covered != n {
            return Err(Error::Structural(format!(
                "networks cover {covered} cells, frame has {n}"
            )));
        }
        Ok(())
    }
}

/// Connected components of qualifying cells plus singletons for the rest.
///
/// Networks are labelled in order of their smallest cell index, so the
/// result depends only on the frame and the condition.
pub fn partition_into_networks(frame: &GridFrame, condition: Condition) -> NetworkPartition {
    const UNSET: usize = usize::MAX;
    let n = frame.len();
    let mut label = vec![UNSET; n];
    let mut networks = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != UNSET {
            continue;
        }
        let k = networks.len();
        label[start] = k;
        let mut members = vec![start];
        if condition.qualifies(frame.count(start)) {
            stack.push(start);
            while let Some(cell) = stack.pop() {
                for nb in condition.neighborhood.neighbors(frame, cell) {
                    if label[nb] == UNSET && condition.qualifies(frame.count(nb)) {
                        label[nb] = k;
                        members.push(nb);
                        stack.push(nb);
                    }
                }
            }
        }
        networks.push(Network::from_units(frame, members));
    }
    NetworkPartition {
        condition,
        networks,
        unit_to_network: label,
    }
}

/// Fixed cluster structure for traditional cluster sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartitionSpec {
    /// Cluster id of every cell; ids must be `0..n_clusters` with none unused.
    pub cluster_assignment: Vec<usize>,
    /// Number of clusters to sample.
    pub n_cl: usize,
}

impl ClusterPartitionSpec {
    pub fn new(cluster_assignment: Vec<usize>, n_cl: usize) -> Self {
        Self {
            cluster_assignment,
            n_cl,
        }
    }

    /// Every cell its own cluster.
    pub fn singletons(n: usize, n_cl: usize) -> Self {
        Self::new((0..n).collect(), n_cl)
    }

    /// Equal rectangular blocks of `block_w x block_h` cells.
    pub fn blocks(frame: &GridFrame, block_w: usize, block_h: usize, n_cl: usize) -> Result<Self> {
        if block_w == 0
            || block_h == 0
            || !frame.width().is_multiple_of(block_w)
            || !frame.height().is_multiple_of(block_h)
        {
            return Err(Error::spec(format!(
                "{block_w}x{block_h} blocks do not tile a {}x{} frame",
                frame.width(),
                frame.height()
            )));
        }
        let per_row = frame.width() / block_w;
        let assignment = (0..frame.len())
            .map(|i| {
                let (x, y) = frame.coords(i);
                (y / block_h) * per_row + x / block_w
            })
            .collect();
        Ok(Self::new(assignment, n_cl))
    }

    /// Member cells of each cluster, indexed by cluster id.
    pub fn clusters(&self) -> Result<Vec<Vec<usize>>> {
        let n_clusters = self.cluster_assignment.iter().max().map_or(0, |&m| m + 1);
        let mut members = vec![Vec::new(); n_clusters];
        for (cell, &c) in self.cluster_assignment.iter().enumerate() {
            members[c].push(cell);
        }
        if let Some(id) = members.iter().position(Vec::is_empty) {
            return Err(Error::spec(format!("cluster id {id} has no cells")));
        }
        Ok(members)
    }
}

/// One sampled cluster with the counts of all its cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCluster {
    pub cluster_id: usize,
    pub unit_indices: Vec<usize>,
    pub y_values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSample {
    pub clusters: Vec<SampledCluster>,
    /// Number of clusters in the population.
    pub n_clusters: usize,
    /// Total units in the population, `M_0`.
    pub total_units: usize,
}

/// SRS without replacement over cluster ids; every cell of a chosen cluster
/// is observed.
pub fn draw_cluster_sample(frame: &GridFrame, spec: &ClusterPartitionSpec, seed: RngSeed) -> Result<ClusterSample> {
    if spec.cluster_assignment.len() != frame.len() {
        return Err(Error::Structural(format!(
            "cluster assignment covers {} cells, frame has {}",
            spec.cluster_assignment.len(),
            frame.len()
        )));
    }
    let members = spec.clusters()?;
    let ids = random_order(members.len(), spec.n_cl, &mut seed.rng())?;
    let clusters = ids
        .into_iter()
        .map(|id| {
            let unit_indices = members[id].clone();
            let y_values = unit_indices.iter().map(|&i| frame.count(i)).collect();
            SampledCluster {
                cluster_id: id,
                unit_indices,
                y_values,
            }
        })
        .collect();
    Ok(ClusterSample {
        clusters,
        n_clusters: members.len(),
        total_units: frame.len(),
    })
}
