#![allow(dead_code)]

use acs_core::GridFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Patchy frame: mostly zeros with a few hot spots whose neighbours are
/// likely to be occupied too.
pub fn random_frame(rng: &mut ChaCha8Rng, width: usize, height: usize) -> GridFrame {
    let n = width * height;
    let mut counts = vec![0u64; n];
    let spots = rng.random_range(1..=(n / 4).max(1));
    for _ in 0..spots {
        let (cx, cy) = (rng.random_range(0..width), rng.random_range(0..height));
        let radius = rng.random_range(0..=2usize);
        for y in cy.saturating_sub(radius)..=(cy + radius).min(height - 1) {
            for x in cx.saturating_sub(radius)..=(cx + radius).min(width - 1) {
                if rng.random_bool(0.6) {
                    counts[y * width + x] += rng.random_range(1..=6);
                }
            }
        }
    }
    GridFrame::new(width, height, counts).unwrap()
}

pub fn random_dims(rng: &mut ChaCha8Rng, max_side: usize) -> (usize, usize) {
    (rng.random_range(1..=max_side), rng.random_range(1..=max_side))
}

/// Frame with at most `max_cells` cells and at least two distinct counts.
pub fn small_varied_frame(rng: &mut ChaCha8Rng, max_cells: usize) -> GridFrame {
    loop {
        let width = rng.random_range(1..=max_cells.min(6));
        let height = rng.random_range(1..=max_cells / width);
        if width * height < 3 {
            continue;
        }
        let counts: Vec<u64> = (0..width * height)
            .map(|_| {
                if rng.random_bool(0.5) {
                    0
                } else {
                    rng.random_range(1..=9)
                }
            })
            .collect();
        if counts.iter().any(|&c| c != counts[0]) {
            return GridFrame::new(width, height, counts).unwrap();
        }
    }
}

/// Network label of every cell, via union-find over rook-adjacent
/// qualifying cells. Non-qualifying cells are their own network.
pub fn oracle_networks(frame: &GridFrame, threshold: f64) -> Vec<usize> {
    let (w, h) = (frame.width(), frame.height());
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let hot = |i: usize| frame.count(i) as f64 > threshold;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !hot(i) {
                continue;
            }
            for j in [(x + 1 < w).then(|| i + 1), (y + 1 < h).then(|| i + w)]
                .into_iter()
                .flatten()
            {
                if hot(j) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    (0..w * h).map(|i| find(&mut parent, i)).collect()
}

/// Network mean `w_i` of every cell under the oracle partition.
pub fn oracle_unit_means(frame: &GridFrame, threshold: f64) -> Vec<f64> {
    let labels = oracle_networks(frame, threshold);
    let n = labels.len();
    let mut sum = vec![0.0; n];
    let mut size = vec![0usize; n];
    for (i, &l) in labels.iter().enumerate() {
        sum[l] += frame.value(i);
        size[l] += 1;
    }
    labels.iter().map(|&l| sum[l] / size[l] as f64).collect()
}

/// Total, within-network and between-network sums of squares.
pub fn oracle_sums_of_squares(frame: &GridFrame, threshold: f64) -> (f64, f64, f64) {
    let w = oracle_unit_means(frame, threshold);
    let y: Vec<f64> = (0..frame.len()).map(|i| frame.value(i)).collect();
    let mu = y.iter().sum::<f64>() / y.len() as f64;
    let total = y.iter().map(|v| (v - mu).powi(2)).sum();
    let within = y.iter().zip(&w).map(|(v, w)| (v - w).powi(2)).sum();
    let between = w.iter().map(|w| (w - mu).powi(2)).sum();
    (total, within, between)
}

pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) || (a - b).abs() <= 1e-300
}

/// Mean and divisor-`K` variance of a list.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    (mean, values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k)
}
