//! Ground-set storage, evaluation batches and the interleaved packed layout.
//!
//! The ground set is stored column-major: dimension `dim` of every observation
//! is contiguous, so lanes reading the same dimension of consecutive points
//! touch consecutive addresses.
//!
//! A batch of `l` evaluation sets is packed round-robin: the `e`-th vector of
//! every set is written next to the `e`-th vector of the following set, and the
//! resulting matrix is vectorized row-wise (dimension-major). Element `e` of set
//! `j`, dimension `dim`, lives at `dim * (k_max * l) + e * l + j`. Sets shorter
//! than `k_max` leave blank slots that are zero-filled and never read.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::objective::{checked_distance, Dissimilarity};
use crate::precision::{Element, Precision, Values};

/// The immutable dataset `V`, column-major, with precomputed distances to the
/// auxiliary vector `e0`.
#[derive(Debug, Clone)]
pub struct GroundSet {
    n: usize,
    d: usize,
    data: Values,
    aux_vector: Values,
    aux_distances: Values,
    aux_loss: f64,
    dissimilarity: String,
}

impl GroundSet {
    /// Builds a ground set from row vectors. `aux = None` selects the all-zero
    /// auxiliary vector.
    pub fn build<D: Dissimilarity>(
        observations: &[Vec<f64>],
        aux: Option<&[f64]>,
        precision: Precision,
        dissimilarity: &D,
    ) -> Result<Self> {
        let first = observations.first().ok_or(Error::EmptyGroundSet)?;
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidData("observations must have at least one dimension".into()));
        }
        let n = observations.len();
        let mut column_major = vec![0.0; n * d];
        for (i, obs) in observations.iter().enumerate() {
            if obs.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: obs.len() });
            }
            for (dim, &value) in obs.iter().enumerate() {
                column_major[dim * n + i] = value;
            }
        }
        Self::from_column_major(n, d, Values::from_f64(&column_major, precision), aux, dissimilarity)
    }

    /// Builds a ground set from an already column-major buffer of `n * d` values.
    pub fn from_column_major<D: Dissimilarity>(
        n: usize,
        d: usize,
        data: Values,
        aux: Option<&[f64]>,
        dissimilarity: &D,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGroundSet);
        }
        if d == 0 {
            return Err(Error::InvalidData("observations must have at least one dimension".into()));
        }
        if data.len() != n * d {
            return Err(Error::InvalidData(format!(
                "expected {} values for n = {n}, d = {d}, found {}",
                n * d,
                data.len()
            )));
        }
        if let Some(pos) = (0..data.len()).find(|&i| !data.get(i).is_finite()) {
            return Err(Error::InvalidData(format!(
                "value at dimension {}, observation {} is not finite at {}",
                pos / n,
                pos % n,
                data.precision()
            )));
        }
        let precision = data.precision();
        let aux = match aux {
            Some(a) if a.len() != d => {
                return Err(Error::DimensionMismatch { expected: d, found: a.len() })
            }
            Some(a) => a.to_vec(),
            None => vec![0.0; d],
        };
        let aux_vector = Values::from_f64(&aux, precision);
        if (0..d).any(|i| !aux_vector.get(i).is_finite()) {
            return Err(Error::InvalidData("auxiliary vector is not finite".into()));
        }
        let mut ground = GroundSet {
            n,
            d,
            data,
            aux_vector,
            aux_distances: Values::zeros(n, precision),
            aux_loss: 0.0,
            dissimilarity: dissimilarity.name().to_string(),
        };
        match precision {
            Precision::Binary16 => ground.init_aux::<half::f16, D>(dissimilarity)?,
            Precision::Binary32 => ground.init_aux::<f32, D>(dissimilarity)?,
            Precision::Binary64 => ground.init_aux::<f64, D>(dissimilarity)?,
        }
        Ok(ground)
    }

    fn init_aux<T: Element, D: Dissimilarity>(&mut self, dissimilarity: &D) -> Result<()> {
        let aux: Vec<T> = T::slice(&self.aux_vector).expect("precision checked").to_vec();
        let mut point = vec![T::zero(); self.d];
        let mut distances = Vec::with_capacity(self.n);
        let mut sum = T::Acc::zero();
        for i in 0..self.n {
            self.gather_point_into(i, &mut point);
            let dist = checked_distance(dissimilarity, &point, &aux)?;
            sum += dist.widen();
            distances.push(dist);
        }
        self.aux_loss = T::acc_to_f64(sum / T::acc_from_usize(self.n));
        self.aux_distances = T::wrap(distances);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn precision(&self) -> Precision {
        self.data.precision()
    }

    /// Bytes occupied by one ground vector, `d * bytes_per_value`.
    pub fn bytes_per_vector(&self) -> usize {
        self.d * self.precision().bytes_per_value()
    }

    /// Column-major value buffer.
    pub fn data(&self) -> &Values {
        &self.data
    }

    pub fn aux_vector(&self) -> Vec<f64> {
        self.aux_vector.to_f64_vec()
    }

    pub fn aux_distances(&self) -> &Values {
        &self.aux_distances
    }

    /// `L({e0})`, the mean of the auxiliary distances.
    pub fn aux_loss(&self) -> f64 {
        self.aux_loss
    }

    pub fn dissimilarity_name(&self) -> &str {
        &self.dissimilarity
    }

    pub(crate) fn data_typed<T: Element>(&self) -> &[T] {
        T::slice(&self.data).expect("element type matches ground-set precision")
    }

    pub(crate) fn aux_distances_typed<T: Element>(&self) -> &[T] {
        T::slice(&self.aux_distances).expect("element type matches ground-set precision")
    }

    /// Copies observation `i` out of the column-major buffer.
    pub(crate) fn gather_point_into<T: Element>(&self, i: usize, out: &mut [T]) {
        let data = self.data_typed::<T>();
        for (dim, slot) in out.iter_mut().enumerate() {
            *slot = data[dim * self.n + i];
        }
    }

    /// Observation `i` widened to `f64`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|dim| self.data.get(dim * self.n + i)).collect()
    }

    /// All observations as row vectors.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Re-stores the ground set at another precision.
    pub fn with_precision<D: Dissimilarity>(&self, precision: Precision, dissimilarity: &D) -> Result<Self> {
        let values = Values::from_f64(&self.data.to_f64_vec(), precision);
        Self::from_column_major(self.n, self.d, values, Some(&self.aux_vector()), dissimilarity)
    }
}

/// The multiset `S_multi` of `l` evaluation sets, each holding its own vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationBatch {
    d: usize,
    values: Vec<f64>,
    offsets: Vec<usize>,
    cardinalities: Vec<usize>,
    k_max: usize,
}

impl EvaluationBatch {
    /// An empty batch to be filled with [`push_set`](Self::push_set).
    pub fn with_dimension(d: usize) -> Self {
        EvaluationBatch { d, values: Vec::new(), offsets: Vec::new(), cardinalities: Vec::new(), k_max: 0 }
    }

    pub fn new(d: usize, sets: &[Vec<Vec<f64>>]) -> Result<Self> {
        let mut batch = Self::with_dimension(d);
        for set in sets {
            batch.push_set(set)?;
        }
        batch.validate()?;
        Ok(batch)
    }

    /// Appends one set given as row vectors.
    pub fn push_set(&mut self, set: &[Vec<f64>]) -> Result<()> {
        if set.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        for v in set {
            if v.len() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, found: v.len() });
            }
        }
        self.push_flat(set.iter().flatten().copied())
    }

    /// Appends one set given as a flat row-major run of `cardinality * d` values.
    pub fn push_flat(&mut self, values: impl IntoIterator<Item = f64>) -> Result<()> {
        let start = self.values.len();
        self.values.extend(values);
        let len = self.values.len() - start;
        if len == 0 || len % self.d != 0 {
            self.values.truncate(start);
            return Err(if len == 0 {
                Error::EmptyEvaluationSet
            } else {
                Error::DimensionMismatch { expected: self.d, found: len % self.d }
            });
        }
        if let Some(bad) = self.values[start..].iter().find(|v| !v.is_finite()) {
            let bad = *bad;
            self.values.truncate(start);
            return Err(Error::InvalidData(format!("evaluation set contains non-finite value {bad}")));
        }
        let card = len / self.d;
        self.offsets.push(start);
        self.cardinalities.push(card);
        self.k_max = self.k_max.max(card);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidData("evaluation vectors must have at least one dimension".into()));
        }
        if self.cardinalities.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// Set `j` as a flat row-major slice.
    pub fn set(&self, j: usize) -> &[f64] {
        let start = self.offsets[j];
        &self.values[start..start + self.cardinalities[j] * self.d]
    }

    /// Set `j` as row vectors.
    pub fn set_vectors(&self, j: usize) -> Vec<Vec<f64>> {
        self.set(j).chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn element(&self, j: usize, e: usize) -> &[f64] {
        let start = self.offsets[j] + e * self.d;
        &self.values[start..start + self.d]
    }

    /// The contiguous sub-batch of sets `range`, with its own `k_max`.
    pub fn sub_batch(&self, range: std::ops::Range<usize>) -> EvaluationBatch {
        let mut out = EvaluationBatch::with_dimension(self.d);
        for j in range {
            out.push_flat(self.set(j).iter().copied()).expect("sets of a valid batch are valid");
        }
        out
    }

    pub(crate) fn set_typed<T: Element>(&self, j: usize) -> Vec<T> {
        self.set(j).iter().map(|&v| T::from_f64(v)).collect()
    }
}

/// Linear offset of element `e` of set `j`, dimension `dim`, in a packed buffer.
pub fn packed_address(j: usize, e: usize, dim: usize, l: usize, k_max: usize, d: usize) -> Result<usize> {
    if j >= l {
        return Err(Error::IndexOutOfRange { what: "set index", index: j, len: l });
    }
    if e >= k_max {
        return Err(Error::IndexOutOfRange { what: "element index", index: e, len: k_max });
    }
    if dim >= d {
        return Err(Error::IndexOutOfRange { what: "dimension", index: dim, len: d });
    }
    Ok(dim * (k_max * l) + e * l + j)
}

/// A batch in the interleaved, padded, vectorized layout consumed by the tiled kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedBatch {
    values: Values,
    l: usize,
    k_max: usize,
    d: usize,
    cardinalities: Vec<usize>,
}

/// Packs `batch` round-robin at `precision`.
pub fn pack_batch(batch: &EvaluationBatch, precision: Precision) -> Result<PackedBatch> {
    batch.validate()?;
    let (l, k_max, d) = (batch.l(), batch.k_max(), batch.d());
    let mut values = vec![0.0; d * k_max * l];
    for j in 0..l {
        for e in 0..batch.cardinalities()[j] {
            for (dim, &v) in batch.element(j, e).iter().enumerate() {
                values[dim * (k_max * l) + e * l + j] = v;
            }
        }
    }
    Ok(PackedBatch {
        values: Values::from_f64(&values, precision),
        l,
        k_max,
        d,
        cardinalities: batch.cardinalities().to_vec(),
    })
}

impl PackedBatch {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn precision(&self) -> Precision {
        self.values.precision()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub(crate) fn values_typed<T: Element>(&self) -> &[T] {
        T::slice(&self.values).expect("element type matches packed precision")
    }

    /// Size of the packed buffer in bytes.
    pub fn byte_len(&self) -> usize {
        self.values.byte_len()
    }

    pub fn get(&self, j: usize, e: usize, dim: usize) -> Result<f64> {
        Ok(self.values.get(packed_address(j, e, dim, self.l, self.k_max, self.d)?))
    }

    pub fn is_blank(&self, offset: usize) -> bool {
        let j = offset % self.l;
        let e = (offset / self.l) % self.k_max;
        e >= self.cardinalities[j]
    }

    pub fn blank_count(&self) -> usize {
        self.d * self.cardinalities.iter().map(|&c| self.k_max - c).sum::<usize>()
    }

    /// Overwrites every blank slot with `value`. Blank slots are never read by
    /// the kernels, so this cannot change any evaluation result.
    pub fn fill_blanks(&mut self, value: f64) {
        for offset in 0..self.values.len() {
            if self.is_blank(offset) {
                self.values.set(offset, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::SquaredEuclidean;

    #[test]
    fn build_ground_set_examples() {
        let g = GroundSet::build(&[vec![1.0], vec![3.0]], Some(&[0.0]), Precision::Binary64, &SquaredEuclidean)
            .unwrap();
        assert_eq!(g.aux_distances().to_f64_vec(), vec![1.0, 9.0]);
        assert_eq!(g.aux_loss(), 5.0);

        let g = GroundSet::build(&[vec![0.0]], Some(&[0.0]), Precision::Binary32, &SquaredEuclidean).unwrap();
        assert_eq!(g.aux_distances().to_f64_vec(), vec![0.0]);
        assert_eq!(g.aux_loss(), 0.0);

        let g = GroundSet::build(&[vec![0.0, 0.0], vec![2.0, 0.0]], None, Precision::Binary16, &SquaredEuclidean)
            .unwrap();
        assert_eq!(g.aux_loss(), 2.0);
    }

    #[test]
    fn ground_set_is_column_major() {
        let g = GroundSet::build(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            None,
            Precision::Binary64,
            &SquaredEuclidean,
        )
        .unwrap();
        assert_eq!(g.data().to_f64_vec(), vec![1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
        assert_eq!(g.point(1), vec![3.0, 4.0]);
        assert_eq!(g.bytes_per_vector(), 16);
    }

    #[test]
    fn build_ground_set_errors() {
        let se = SquaredEuclidean;
        assert!(matches!(
            GroundSet::build(&[], None, Precision::Binary32, &se),
            Err(Error::EmptyGroundSet)
        ));
        assert!(matches!(
            GroundSet::build(&[vec![1.0, 2.0], vec![1.0]], None, Precision::Binary32, &se),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            GroundSet::build(&[vec![f64::NAN]], None, Precision::Binary32, &se),
            Err(Error::InvalidData(_))
        ));
        // Finite in binary64 but overflows binary16.
        assert!(matches!(
            GroundSet::build(&[vec![1e6]], None, Precision::Binary16, &se),
            Err(Error::InvalidData(_))
        ));
        assert!(matches!(
            GroundSet::build(&[vec![1.0]], Some(&[0.0, 0.0]), Precision::Binary32, &se),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn fig3_batch() -> EvaluationBatch {
        let set = |card: usize, base: f64| -> Vec<Vec<f64>> {
            (0..card).map(|e| vec![base + e as f64, -(base + e as f64)]).collect()
        };
        EvaluationBatch::new(2, &[set(4, 10.0), set(3, 20.0), set(5, 30.0)]).unwrap()
    }

    #[test]
    fn pack_batch_three_uneven_sets() {
        let packed = pack_batch(&fig3_batch(), Precision::Binary32).unwrap();
        assert_eq!(packed.values().len(), 30);
        assert_eq!(packed.blank_count(), 6);
        assert_eq!((0..30).filter(|&o| packed.is_blank(o)).count(), 6);
    }

    #[test]
    fn pack_batch_small_examples() {
        let single = EvaluationBatch::new(1, &[vec![vec![7.0]]]).unwrap();
        let packed = pack_batch(&single, Precision::Binary64).unwrap();
        assert_eq!(packed.values().to_f64_vec(), vec![7.0]);
        assert_eq!(packed.blank_count(), 0);

        let batch = EvaluationBatch::new(1, &[vec![vec![10.0], vec![11.0]], vec![vec![20.0], vec![21.0]]]).unwrap();
        let packed = pack_batch(&batch, Precision::Binary64).unwrap();
        assert_eq!(packed.values().to_f64_vec(), vec![10.0, 20.0, 11.0, 21.0]);
    }

    #[test]
    fn packed_address_examples() {
        assert_eq!(packed_address(0, 0, 0, 3, 5, 2).unwrap(), 0);
        assert_eq!(packed_address(2, 4, 1, 3, 5, 2).unwrap(), 29);
        assert_eq!(packed_address(1, 2, 0, 3, 5, 2).unwrap(), 7);
        assert!(matches!(packed_address(3, 0, 0, 3, 5, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(packed_address(0, 5, 0, 3, 5, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(packed_address(0, 0, 2, 3, 5, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn batch_rejects_bad_sets() {
        assert!(matches!(EvaluationBatch::new(2, &[]), Err(Error::EmptyBatch)));
        assert!(matches!(EvaluationBatch::new(2, &[vec![]]), Err(Error::EmptyEvaluationSet)));
        assert!(matches!(
            EvaluationBatch::new(2, &[vec![vec![1.0, 2.0]], vec![vec![1.0]]]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            EvaluationBatch::new(1, &[vec![vec![f64::INFINITY]]]),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn sub_batch_recomputes_k_max() {
        let batch = fig3_batch();
        let tail = batch.sub_batch(1..2);
        assert_eq!(tail.l(), 1);
        assert_eq!(tail.k_max(), 3);
        assert_eq!(tail.set(0), batch.set(1));
    }
}
