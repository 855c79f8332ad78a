#![allow(dead_code)]

use exemplar_core::{Dissimilarity, Element, EvaluationBatch, GroundSet, Precision, SquaredEuclidean};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub sets: Vec<Vec<Vec<f64>>>,
}

impl Instance {
    pub fn ground(&self, precision: Precision) -> GroundSet {
        GroundSet::build(&self.points, None, precision, &SquaredEuclidean).unwrap()
    }

    pub fn batch(&self) -> EvaluationBatch {
        EvaluationBatch::new(self.points[0].len(), &self.sets).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform [0,1) data; sets mix ground vectors and fresh points, with
/// cardinalities in `1..=k_max` so the packed layout has blanks.
pub fn random_instance(rng: &mut ChaCha8Rng, n_max: usize, d_max: usize, l_max: usize, k_max: usize) -> Instance {
    let n = rng.gen_range(1..=n_max);
    let d = rng.gen_range(1..=d_max);
    let l = rng.gen_range(1..=l_max);
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    let sets = (0..l)
        .map(|_| {
            let k = rng.gen_range(1..=k_max);
            (0..k)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        points[rng.gen_range(0..n)].clone()
                    } else {
                        (0..d).map(|_| rng.gen::<f64>()).collect()
                    }
                })
                .collect()
        })
        .collect();
    Instance { points, sets }
}

/// Random distinct indices `0..n` of size `k`.
pub fn subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    sample(rng, n, k).into_vec()
}

pub fn sqdist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Straight f64 evaluation of `f(S) = L({0}) - L(S ∪ {0})`.
pub fn oracle_value(points: &[Vec<f64>], set: &[Vec<f64>]) -> f64 {
    let zero = vec![0.0; points[0].len()];
    let n = points.len() as f64;
    let alone: f64 = points.iter().map(|v| sqdist(v, &zero)).sum::<f64>() / n;
    let with: f64 = points
        .iter()
        .map(|v| set.iter().map(|s| sqdist(v, s)).fold(sqdist(v, &zero), f64::min))
        .sum::<f64>()
        / n;
    alone - with
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// `max_k |x_k - y_k|`: not a sum, so kernels must gather full vectors.
#[derive(Debug, Clone, Copy)]
pub struct Chebyshev;

impl Dissimilarity for Chebyshev {
    fn name(&self) -> &str {
        "chebyshev"
    }

    fn distance<T: Element>(&self, x: &[T], y: &[T]) -> T {
        x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}
