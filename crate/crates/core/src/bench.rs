//! Problem generation, wall-clock measurement and benchmark records.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_chunked, Backend, Evaluator};
use crate::layout::{EvaluationBatch, GroundSet};
use crate::objective::SquaredEuclidean;
use crate::precision::Precision;

/// Generated coordinates are multiples of 2^-11 in [0, 1), which every
/// supported precision stores exactly.
const GRID_STEPS: u32 = 1 << 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "l")]
    L,
    #[serde(rename = "k")]
    K,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "n",
            Axis::L => "l",
            Axis::K => "k",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(Axis::N),
            "l" => Ok(Axis::L),
            "k" => Ok(Axis::K),
            other => Err(Error::Format(format!("unknown axis `{other}`, expected n, l or k"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub d: usize,
}

impl Shape {
    /// The reduced fixed point used for desk-scale sweeps.
    pub const DESK: Shape = Shape { n: 20_000, l: 500, k: 10, d: 100 };
    /// Fixed point for full-size sweeps.
    pub const FULL: Shape = Shape { n: 50_000, l: 5_000, k: 10, d: 100 };

    pub fn with(self, axis: Axis, value: usize) -> Shape {
        match axis {
            Axis::N => Shape { n: value, ..self },
            Axis::L => Shape { l: value, ..self },
            Axis::K => Shape { k: value, ..self },
        }
    }
}

/// `count` uniformly spaced integers over `[lo, hi]`, endpoints included.
pub fn uniform_values(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + ((hi - lo) as f64 * i as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Full-size sweeps of 15 points each. Needs a lot of time and memory.
pub fn wide_sweep(axis: Axis) -> Vec<usize> {
    match axis {
        Axis::N => uniform_values(1_000, 400_000, 15),
        Axis::L => uniform_values(1_000, 40_000, 15),
        Axis::K => uniform_values(10, 500, 15),
    }
}

/// Random ground set and `l` sets of `k` ground vectors each, drawn without
/// replacement. The same seed yields the same data at every precision.
pub fn generate_problem(shape: Shape, seed: u64, precision: Precision) -> Result<(GroundSet, EvaluationBatch)> {
    let Shape { n, l, k, d } = shape;
    if n == 0 || l == 0 || k == 0 || d == 0 {
        return Err(Error::InvalidData(format!("problem shape must be positive: {shape:?}")));
    }
    if k > n {
        return Err(Error::BudgetExceedsGroundSet { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = GRID_STEPS as f64;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0..GRID_STEPS) as f64 / scale).collect())
        .collect();
    let ground = GroundSet::build(&points, None, precision, &SquaredEuclidean)?;
    let mut batch = EvaluationBatch::with_dimension(d);
    for _ in 0..l {
        let members = sample(&mut rng, n, k);
        batch.push_flat(members.iter().flat_map(|i| points[i].iter().copied()))?;
    }
    Ok((ground, batch))
}

/// Median wall-clock seconds of `repetitions` runs of `f`.
pub fn measure<F: FnMut() -> Result<()>>(repetitions: usize, mut f: F) -> Result<f64> {
    let mut times = Vec::with_capacity(repetitions.max(1));
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64().max(1e-9));
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 { times[mid] } else { 0.5 * (times[mid - 1] + times[mid]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub vary: Axis,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub d: usize,
    pub precision: Precision,
    pub backend: Backend,
    pub workers: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Median evaluation time; `None` when the chunk plan failed.
    pub runtime_seconds: Option<f64>,
}

impl BenchRecord {
    pub fn shape(&self) -> Shape {
        Shape { n: self.n, l: self.l, k: self.k, d: self.d }
    }

    pub fn failed(&self) -> bool {
        self.runtime_seconds.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub vary: Axis,
    pub values: Vec<usize>,
    pub fixed: Shape,
    pub backends: Vec<Backend>,
    pub precisions: Vec<Precision>,
    pub workers: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub memory_budget: Option<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            vary: Axis::N,
            values: vec![Shape::DESK.n],
            fixed: Shape::DESK,
            backends: Backend::ALL.to_vec(),
            precisions: vec![Precision::Binary32],
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            repetitions: 5,
            seed: 0,
            memory_budget: None,
        }
    }
}

/// Runs the sweep sequentially. Problem generation happens outside the timed
/// region; a chunk-plan failure produces a record without a runtime.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if config.values.is_empty() {
        return Err(Error::InvalidData("benchmark needs at least one value".into()));
    }
    if config.repetitions == 0 {
        return Err(Error::InvalidData("repetitions must be at least 1".into()));
    }
    let evaluators: Vec<Evaluator> = config
        .backends
        .iter()
        .map(|&b| Evaluator::new(b, config.workers))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for &value in &config.values {
        let shape = config.fixed.with(config.vary, value);
        for &precision in &config.precisions {
            let (ground, batch) = generate_problem(shape, config.seed, precision)?;
            for evaluator in &evaluators {
                let timed = measure(config.repetitions, || {
                    match config.memory_budget {
                        Some(budget) => evaluate_chunked(evaluator, &ground, &batch, &SquaredEuclidean, budget)?,
                        None => evaluator.evaluate_batch(&ground, &batch, &SquaredEuclidean)?,
                    };
                    Ok(())
                });
                let runtime_seconds = match timed {
                    Ok(t) => Some(t),
                    Err(Error::OutOfMemory { .. }) => None,
                    Err(e) => return Err(e),
                };
                records.push(BenchRecord {
                    vary: config.vary,
                    n: shape.n,
                    l: shape.l,
                    k: shape.k,
                    d: shape.d,
                    precision,
                    backend: evaluator.backend(),
                    workers: evaluator.workers(),
                    seed: config.seed,
                    repetitions: config.repetitions,
                    runtime_seconds,
                });
            }
        }
    }
    Ok(records)
}

/// `baseline / candidate` runtime ratio for records of the same problem.
pub fn compute_speedup(baseline: &BenchRecord, candidate: &BenchRecord) -> Result<f64> {
    if baseline.shape() != candidate.shape() || baseline.seed != candidate.seed {
        return Err(Error::IncomparableRecords(format!(
            "{:?} seed {} vs {:?} seed {}",
            baseline.shape(),
            baseline.seed,
            candidate.shape(),
            candidate.seed
        )));
    }
    match (baseline.runtime_seconds, candidate.runtime_seconds) {
        (Some(b), Some(c)) => Ok(b / c),
        _ => Err(Error::IncomparableRecords("a record has no runtime".into())),
    }
}

pub fn write_records<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for record in records {
        writer.serialize(record)?;
    }
    if records.is_empty() {
        writer.write_record([
            "vary", "n", "l", "k", "d", "precision", "backend", "workers", "seed", "repetitions",
            "runtime_seconds",
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(runtime: f64) -> BenchRecord {
        BenchRecord {
            vary: Axis::K,
            n: 10,
            l: 2,
            k: 3,
            d: 4,
            precision: Precision::Binary32,
            backend: Backend::Tiled,
            workers: 2,
            seed: 9,
            repetitions: 5,
            runtime_seconds: Some(runtime),
        }
    }

    #[test]
    fn problem_shape_and_determinism() {
        let shape = Shape { n: 100, l: 5, k: 3, d: 2 };
        let (g, b) = generate_problem(shape, 7, Precision::Binary32).unwrap();
        assert_eq!(g.data().len(), 200);
        assert_eq!(b.cardinalities(), &[3, 3, 3, 3, 3]);
        let (g2, b2) = generate_problem(shape, 7, Precision::Binary32).unwrap();
        assert_eq!(g.data(), g2.data());
        assert_eq!(b, b2);
        let (g3, _) = generate_problem(shape, 8, Precision::Binary32).unwrap();
        assert_ne!(g.data(), g3.data());
    }

    #[test]
    fn generated_values_lie_in_unit_cube() {
        let shape = Shape { n: 200, l: 4, k: 5, d: 3 };
        for p in Precision::ALL {
            let (g, b) = generate_problem(shape, 1, p).unwrap();
            assert!(g.data().to_f64_vec().iter().all(|&v| (0.0..1.0).contains(&v)));
            assert!(g.aux_distances().to_f64_vec().iter().all(|&a| a <= shape.d as f64));
            for j in 0..b.l() {
                // Sampled without replacement: no repeated vectors within a set.
                let set = b.set_vectors(j);
                for x in 0..set.len() {
                    for y in x + 1..set.len() {
                        assert!(set[x] != set[y] || g.points().iter().filter(|p| **p == set[x]).count() > 1);
                    }
                }
            }
        }
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let shape = Shape { n: 3, l: 1, k: 4, d: 1 };
        assert!(matches!(
            generate_problem(shape, 0, Precision::Binary32),
            Err(Error::BudgetExceedsGroundSet { k: 4, n: 3 })
        ));
    }

    #[test]
    fn speedup_examples() {
        assert_eq!(compute_speedup(&record(10.0), &record(2.0)).unwrap(), 5.0);
        let r = record(0.3);
        assert_eq!(compute_speedup(&r, &r).unwrap(), 1.0);
        let other = BenchRecord { n: 11, ..record(1.0) };
        assert!(matches!(compute_speedup(&r, &other), Err(Error::IncomparableRecords(_))));
        let other = BenchRecord { seed: 1, ..record(1.0) };
        assert!(compute_speedup(&r, &other).is_err());
    }

    #[test]
    fn csv_header_matches_schema() {
        let mut buf = Vec::new();
        write_records(&[record(0.125)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "vary,n,l,k,d,precision,backend,workers,seed,repetitions,runtime_seconds"
        );
        assert_eq!(lines.next().unwrap(), "k,10,2,3,4,fp32,tiled,2,9,5,0.125");
    }

    #[test]
    fn failed_record_round_trips_with_empty_runtime() {
        let failed = BenchRecord { runtime_seconds: None, ..record(1.0) };
        let mut buf = Vec::new();
        write_records(&[failed.clone()], &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains(",5,\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), vec![failed]);
    }

    #[test]
    fn single_value_single_backend_gives_one_record() {
        let config = BenchConfig {
            vary: Axis::N,
            values: vec![64],
            fixed: Shape { n: 64, l: 4, k: 2, d: 3 },
            backends: vec![Backend::Reference],
            precisions: vec![Precision::Binary32],
            workers: 1,
            repetitions: 1,
            seed: 3,
            memory_budget: None,
        };
        let records = run_benchmark(&config).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].runtime_seconds.unwrap() > 0.0);
    }

    #[test]
    fn out_of_memory_becomes_failed_record() {
        let config = BenchConfig {
            vary: Axis::L,
            values: vec![4],
            fixed: Shape { n: 64, l: 4, k: 2, d: 3 },
            backends: vec![Backend::Tiled],
            precisions: vec![Precision::Binary32],
            workers: 1,
            repetitions: 1,
            seed: 3,
            memory_budget: Some(8),
        };
        let records = run_benchmark(&config).unwrap();
        assert!(records[0].failed());
    }

    #[test]
    fn noop_measurement_is_cheap() {
        let t = measure(5, || Ok(())).unwrap();
        assert!(t > 0.0 && t < 1e-3);
    }

    #[test]
    fn uniform_values_include_endpoints() {
        assert_eq!(uniform_values(10, 500, 15).len(), 15);
        assert_eq!(uniform_values(10, 500, 15)[0], 10);
        assert_eq!(*uniform_values(10, 500, 15).last().unwrap(), 500);
        assert_eq!(uniform_values(1000, 4000, 4), vec![1000, 2000, 3000, 4000]);
    }

    #[test]
    fn linear_fit_recovers_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12 && (intercept - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
