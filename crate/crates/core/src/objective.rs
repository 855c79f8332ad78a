//! Dissimilarities, the k-medoids loss and the exemplar-based clustering objective.
//!
//! With a ground set `V`, auxiliary vector `e0` and dissimilarity `d`, the
//! objective is
//!
//! ```text
//! L(S) = 1/|V| * sum_{v in V} min_{s in S} d(v, s)
//! f(S) = L({e0}) - L(S ∪ {e0})
//! ```
//!
//! `f` is monotone and submodular for any non-negative `d`. Dissimilarities are
//! always called as `d(v, s)` with the ground vector first.
//!
//! The auxiliary vector may coincide with a point of `V`; the objective stays
//! well-defined, that point just contributes nothing to any gain.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::layout::GroundSet;
use crate::precision::Element;

/// A non-negative dissimilarity between two vectors of equal length.
///
/// Symmetry and the triangle inequality are not assumed.
pub trait Dissimilarity: Sync {
    fn name(&self) -> &str;

    /// `d(x, y)`. Callers guarantee `x.len() == y.len()`.
    fn distance<T: Element>(&self, x: &[T], y: &[T]) -> T;

    /// The per-dimension term, when `distance` is exactly the left-to-right sum
    /// of this term over dimensions starting from zero.
    ///
    /// Kernels use it to interleave many distance computations dimension by
    /// dimension while producing the same bits as `distance`.
    #[inline]
    fn term<T: Element>(&self, _x: T, _y: T) -> Option<T> {
        None
    }
}

pub(crate) fn is_separable<D: Dissimilarity>(dissimilarity: &D) -> bool {
    dissimilarity.term(0.0f64, 0.0f64).is_some()
}

/// `||x - y||²`, accumulated in ascending dimension order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredEuclidean;

impl Dissimilarity for SquaredEuclidean {
    fn name(&self) -> &str {
        "squared_euclidean"
    }

    #[inline]
    fn distance<T: Element>(&self, x: &[T], y: &[T]) -> T {
        x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
            let diff = a - b;
            acc + diff * diff
        })
    }

    #[inline(always)]
    fn term<T: Element>(&self, x: T, y: T) -> Option<T> {
        let diff = x - y;
        Some(diff * diff)
    }
}

/// Squared Euclidean distance of two `f64` vectors.
pub fn squared_euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(SquaredEuclidean.distance(x, y))
}

/// Evaluates `d(x, y)` and rejects NaN results.
#[inline]
pub(crate) fn checked_distance<T: Element, D: Dissimilarity>(d: &D, x: &[T], y: &[T]) -> Result<T> {
    let value = d.distance(x, y);
    if value.is_nan() {
        return Err(Error::NonFiniteDissimilarity);
    }
    debug_assert!(value >= T::zero(), "dissimilarity `{}` returned a negative value", d.name());
    Ok(value)
}

pub(crate) fn check_dissimilarity<D: Dissimilarity>(ground: &GroundSet, d: &D) -> Result<()> {
    if ground.dissimilarity_name() != d.name() {
        return Err(Error::DissimilarityMismatch {
            built_with: ground.dissimilarity_name().to_string(),
            used: d.name().to_string(),
        });
    }
    Ok(())
}

/// Rounds a set of `f64` vectors to `T`, validating dimensionality.
pub(crate) fn round_set<T: Element>(set: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<T>>> {
    set.iter()
        .map(|v| {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            Ok(v.iter().map(|&x| T::from_f64(x)).collect())
        })
        .collect()
}

/// Per-point nearest dissimilarity `min_{s in set} d(v_i, s)`, starting from the
/// largest finite value of `T`.
fn nearest<T: Element, D: Dissimilarity>(d: &D, point: &[T], set: &[Vec<T>]) -> Result<T> {
    let mut best = T::max_value();
    for s in set {
        best = best.min(checked_distance(d, point, s)?);
    }
    Ok(best)
}

macro_rules! dispatch {
    ($ground:expr, $f:ident ( $($arg:expr),* )) => {
        match $ground.precision() {
            $crate::precision::Precision::Binary16 => $f::<half::f16, _>($($arg),*),
            $crate::precision::Precision::Binary32 => $f::<f32, _>($($arg),*),
            $crate::precision::Precision::Binary64 => $f::<f64, _>($($arg),*),
        }
    };
}
pub(crate) use dispatch;

/// k-medoids loss of `set` over the ground set (no auxiliary vector involved).
///
/// Computed as the ascending sum of per-point contributions `min / n`, so that
/// it matches the sum of [`point_loss`] values bit for bit at binary64.
pub fn kmedoids_loss<D: Dissimilarity>(ground: &GroundSet, set: &[Vec<f64>], d: &D) -> Result<f64> {
    check_dissimilarity(ground, d)?;
    if set.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    dispatch!(ground, kmedoids_loss_typed(ground, set, d))
}

fn kmedoids_loss_typed<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    set: &[Vec<f64>],
    d: &D,
) -> Result<f64> {
    let set = round_set::<T>(set, ground.d())?;
    let n = T::acc_from_usize(ground.n());
    let mut point = vec![T::zero(); ground.d()];
    let mut total = T::Acc::zero();
    for i in 0..ground.n() {
        ground.gather_point_into(i, &mut point);
        total += nearest(d, &point, &set)?.widen() / n;
    }
    Ok(T::acc_to_f64(total))
}

/// `L_{v_i}(set ∪ {e0})`: the share of point `i` in the loss of `set` plus the
/// auxiliary vector.
pub fn point_loss<D: Dissimilarity>(
    ground: &GroundSet,
    i: usize,
    set: &[Vec<f64>],
    d: &D,
) -> Result<f64> {
    check_dissimilarity(ground, d)?;
    if i >= ground.n() {
        return Err(Error::IndexOutOfRange { what: "ground set", index: i, len: ground.n() });
    }
    dispatch!(ground, point_loss_typed(ground, i, set, d))
}

fn point_loss_typed<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    i: usize,
    set: &[Vec<f64>],
    d: &D,
) -> Result<f64> {
    let set = round_set::<T>(set, ground.d())?;
    let mut point = vec![T::zero(); ground.d()];
    ground.gather_point_into(i, &mut point);
    let aux = ground.aux_distances_typed::<T>()[i];
    let nearest = nearest(d, &point, &set)?.min(aux);
    Ok(T::acc_to_f64(nearest.widen() / T::acc_from_usize(ground.n())))
}

/// `f(set) = L({e0}) - L(set ∪ {e0})`. The empty set yields exactly zero.
///
/// Both losses are accumulated from per-point contributions in the same order,
/// so `f(∅) = 0` and `f(V) = L({e0})` hold exactly.
pub fn exemplar_value<D: Dissimilarity>(ground: &GroundSet, set: &[Vec<f64>], d: &D) -> Result<f64> {
    check_dissimilarity(ground, d)?;
    dispatch!(ground, exemplar_value_typed(ground, set, d))
}

fn exemplar_value_typed<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    set: &[Vec<f64>],
    d: &D,
) -> Result<f64> {
    let set = round_set::<T>(set, ground.d())?;
    let aux = ground.aux_distances_typed::<T>();
    let n = T::acc_from_usize(ground.n());
    let mut point = vec![T::zero(); ground.d()];
    let mut with_set = T::Acc::zero();
    let mut alone = T::Acc::zero();
    for i in 0..ground.n() {
        ground.gather_point_into(i, &mut point);
        alone += aux[i].widen() / n;
        with_set += nearest(d, &point, &set)?.min(aux[i]).widen() / n;
    }
    Ok(T::acc_to_f64(alone - with_set))
}

/// Discrete derivative `f(set ∪ {e}) - f(set)`.
pub fn marginal_gain<D: Dissimilarity>(
    ground: &GroundSet,
    set: &[Vec<f64>],
    e: &[f64],
    d: &D,
) -> Result<f64> {
    if e.len() != ground.d() {
        return Err(Error::DimensionMismatch { expected: ground.d(), found: e.len() });
    }
    let mut extended = set.to_vec();
    extended.push(e.to_vec());
    Ok(exemplar_value(ground, &extended, d)? - exemplar_value(ground, set, d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::Precision;

    fn line(points: &[f64], precision: Precision) -> GroundSet {
        let obs: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        GroundSet::build(&obs, None, precision, &SquaredEuclidean).unwrap()
    }

    #[test]
    fn squared_euclidean_examples() {
        assert_eq!(squared_euclidean(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(squared_euclidean(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 8.0);
        assert_eq!(squared_euclidean(&[0.0], &[2.0]).unwrap(), 4.0);
        assert!(matches!(
            squared_euclidean(&[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn kmedoids_loss_examples() {
        let v = line(&[1.0, 3.0], Precision::Binary64);
        assert_eq!(kmedoids_loss(&v, &[vec![0.0]], &SquaredEuclidean).unwrap(), 5.0);
        assert_eq!(kmedoids_loss(&v, &[vec![1.0], vec![3.0]], &SquaredEuclidean).unwrap(), 0.0);
        let w = line(&[0.0, 2.0], Precision::Binary64);
        assert_eq!(kmedoids_loss(&w, &[vec![0.0]], &SquaredEuclidean).unwrap(), 2.0);
        assert!(matches!(kmedoids_loss(&v, &[], &SquaredEuclidean), Err(Error::EmptyEvaluationSet)));
    }

    #[test]
    fn exemplar_value_examples() {
        for p in Precision::ALL {
            let v = line(&[1.0, 3.0], p);
            assert_eq!(exemplar_value(&v, &[], &SquaredEuclidean).unwrap(), 0.0);
            assert_eq!(exemplar_value(&v, &[vec![3.0]], &SquaredEuclidean).unwrap(), 4.5);
            assert_eq!(exemplar_value(&v, &[vec![1.0], vec![3.0]], &SquaredEuclidean).unwrap(), 5.0);
        }
    }

    #[test]
    fn point_loss_examples() {
        let v = line(&[1.0, 3.0], Precision::Binary64);
        assert_eq!(point_loss(&v, 0, &[vec![3.0]], &SquaredEuclidean).unwrap(), 0.5);
        assert_eq!(point_loss(&v, 1, &[vec![3.0]], &SquaredEuclidean).unwrap(), 0.0);
        assert!(matches!(
            point_loss(&v, 2, &[vec![3.0]], &SquaredEuclidean),
            Err(Error::IndexOutOfRange { index: 2, len: 2, .. })
        ));
    }

    #[test]
    fn marginal_gain_examples() {
        let v = line(&[1.0, 3.0], Precision::Binary64);
        assert_eq!(marginal_gain(&v, &[], &[3.0], &SquaredEuclidean).unwrap(), 4.5);
        assert_eq!(marginal_gain(&v, &[vec![3.0]], &[1.0], &SquaredEuclidean).unwrap(), 0.5);
        assert_eq!(marginal_gain(&v, &[vec![3.0]], &[3.0], &SquaredEuclidean).unwrap(), 0.0);
        assert!(marginal_gain(&v, &[], &[3.0, 1.0], &SquaredEuclidean).is_err());
    }

    #[test]
    fn nan_dissimilarity_is_an_error() {
        struct Broken;
        impl Dissimilarity for Broken {
            fn name(&self) -> &str {
                "broken"
            }
            fn distance<T: Element>(&self, _x: &[T], _y: &[T]) -> T {
                T::nan()
            }
        }
        let obs = vec![vec![1.0]];
        assert!(matches!(
            GroundSet::build(&obs, None, Precision::Binary64, &Broken),
            Err(Error::NonFiniteDissimilarity)
        ));
    }

    #[test]
    fn mismatched_dissimilarity_is_rejected() {
        struct Other;
        impl Dissimilarity for Other {
            fn name(&self) -> &str {
                "other"
            }
            fn distance<T: Element>(&self, x: &[T], y: &[T]) -> T {
                SquaredEuclidean.distance(x, y)
            }
        }
        let v = line(&[1.0, 3.0], Precision::Binary64);
        assert!(matches!(
            exemplar_value(&v, &[vec![1.0]], &Other),
            Err(Error::DissimilarityMismatch { .. })
        ));
    }
}
