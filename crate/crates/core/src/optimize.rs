//! Greedy maximization under a cardinality constraint, an exhaustive oracle,
//! and nearest-exemplar cluster assignment.


use crate::error::{Error, Result};
use crate::eval::{evaluate_chunked, Evaluator};
use crate::layout::{EvaluationBatch, GroundSet};
use crate::objective::{check_dissimilarity, checked_distance, dispatch, exemplar_value, round_set, Dissimilarity};
use crate::precision::Element;

/// Largest number of subsets [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// Selected ground-set indices in selection order.
    pub exemplar_indices: Vec<usize>,
    /// `f(S_i)` after each step.
    pub values: Vec<f64>,
    /// Total number of set evaluations.
    pub evaluations: usize,
}

impl OptimizationResult {
    pub fn value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Plain Greedy: each step evaluates `S ∪ {c}` for every unselected `c` as one
/// batch and keeps the best candidate, the lowest index winning ties.
///
/// With `memory_budget` set, each batch is evaluated in chunks that fit it.
pub fn greedy_maximize<D: Dissimilarity>(
    ground: &GroundSet,
    k: usize,
    evaluator: &Evaluator,
    d: &D,
    memory_budget: Option<u64>,
) -> Result<OptimizationResult> {
    check_dissimilarity(ground, d)?;
    let n = ground.n();
    if k > n {
        return Err(Error::BudgetExceedsGroundSet { k, n });
    }
    let points = ground.points();
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut in_set = vec![false; n];
    let mut result = OptimizationResult { exemplar_indices: Vec::new(), values: Vec::new(), evaluations: 0 };

    for _ in 0..k {
        let candidates: Vec<usize> = (0..n).filter(|&c| !in_set[c]).collect();
        let mut batch = EvaluationBatch::with_dimension(ground.d());
        for &c in &candidates {
            let set = selected.iter().chain(std::iter::once(&c)).flat_map(|&i| points[i].iter().copied());
            batch.push_flat(set)?;
        }
        let values = match memory_budget {
            Some(budget) => evaluate_chunked(evaluator, ground, &batch, d, budget)?,
            None => evaluator.evaluate_batch(ground, &batch, d)?,
        };
        result.evaluations += candidates.len();

        let mut best = 0;
        for (pos, &value) in values.iter().enumerate() {
            if value > values[best] {
                best = pos;
            }
        }
        let chosen = candidates[best];
        selected.push(chosen);
        in_set[chosen] = true;
        result.values.push(values[best]);
    }
    result.exemplar_indices = selected;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptimum {
    pub indices: Vec<usize>,
    pub value: f64,
}

/// Exhaustive maximum of `f` over all subsets of size exactly `k`, which by
/// monotonicity is also the maximum over sizes `<= k`.
pub fn brute_force_optimum<D: Dissimilarity>(ground: &GroundSet, k: usize, d: &D) -> Result<BruteForceOptimum> {
    let n = ground.n();
    if k > n {
        return Err(Error::BudgetExceedsGroundSet { k, n });
    }
    let combinations = binomial(n, k);
    if combinations > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge { combinations, limit: BRUTE_FORCE_LIMIT });
    }
    let points = ground.points();
    let mut indices: Vec<usize> = (0..k).collect();
    let mut best = BruteForceOptimum { indices: indices.clone(), value: f64::NEG_INFINITY };
    loop {
        let set: Vec<Vec<f64>> = indices.iter().map(|&i| points[i].clone()).collect();
        let value = exemplar_value(ground, &set, d)?;
        if value > best.value {
            best = BruteForceOptimum { indices: indices.clone(), value };
        }
        if !next_combination(&mut indices, n) {
            break;
        }
    }
    Ok(best)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Advances to the next lexicographic `k`-combination of `0..n`.
fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    let Some(pos) = (0..k).rev().find(|&p| indices[p] < n - k + p) else {
        return false;
    };
    indices[pos] += 1;
    for p in pos + 1..k {
        indices[p] = indices[p - 1] + 1;
    }
    true
}

/// Index of the nearest exemplar for every ground point, lowest index on ties.
pub fn assign_clusters<D: Dissimilarity>(ground: &GroundSet, exemplars: &[Vec<f64>], d: &D) -> Result<Vec<usize>> {
    check_dissimilarity(ground, d)?;
    if exemplars.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    dispatch!(ground, assign_typed(ground, exemplars, d))
}

fn assign_typed<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    exemplars: &[Vec<f64>],
    d: &D,
) -> Result<Vec<usize>> {
    let exemplars = round_set::<T>(exemplars, ground.d())?;
    let mut point = vec![T::zero(); ground.d()];
    (0..ground.n())
        .map(|i| {
            ground.gather_point_into(i, &mut point);
            let mut label = 0;
            let mut best = T::infinity();
            for (idx, ex) in exemplars.iter().enumerate() {
                let dist = checked_distance(d, &point, ex)?;
                if dist < best {
                    best = dist;
                    label = idx;
                }
            }
            Ok(label)
        })
        .collect()
}
