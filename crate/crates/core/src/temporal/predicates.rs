use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::TemporalError;

/// Index of a predicate in its [`PredicateTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredId(pub usize);

/// Geometric region an atomic proposition maps to. Distances and depths are
/// measured in the ∞-norm, which keeps every atom exactly linear-encodable
/// in the MILP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomicPredicate {
    /// Axis-aligned box over a subset of state coordinates. A bound may be
    /// absent (half-space); at least one bound per axis must be finite.
    BoxRegion {
        dims: Vec<usize>,
        #[serde(default)]
        lower: Vec<Option<f64>>,
        #[serde(default)]
        upper: Vec<Option<f64>>,
    },
    /// ∞-norm separation of two coordinate groups at least `d_safe`
    /// (the complement of a collision proposition).
    PairwiseSeparation {
        left: Vec<usize>,
        right: Vec<usize>,
        d_safe: f64,
    },
}

impl AtomicPredicate {
    /// Convenience constructor for a fully bounded box.
    pub fn boxed(dims: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        AtomicPredicate::BoxRegion {
            dims,
            lower: lower.into_iter().map(Some).collect(),
            upper: upper.into_iter().map(Some).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        match self {
            AtomicPredicate::BoxRegion { dims, lower, upper } => {
                if dims.is_empty() {
                    return Err(TemporalError::BadPredicate("box with no axes".into()));
                }
                if lower.len() != dims.len() || upper.len() != dims.len() {
                    return Err(TemporalError::BadPredicate(
                        "box bound count does not match axis count".into(),
                    ));
                }
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    let lo = lo.unwrap_or(f64::NEG_INFINITY);
                    let hi = hi.unwrap_or(f64::INFINITY);
                    if lo.is_nan() || hi.is_nan() {
                        return Err(TemporalError::BadPredicate("NaN bound".into()));
                    }
                    if !(lo < hi) {
                        return Err(TemporalError::BadPredicate(format!(
                            "axis {i}: lower bound {lo} not below upper bound {hi}"
                        )));
                    }
                    if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                        return Err(TemporalError::BadPredicate(format!(
                            "axis {i}: both bounds infinite"
                        )));
                    }
                }
                Ok(())
            }
            AtomicPredicate::PairwiseSeparation { left, right, d_safe } => {
                if left.is_empty() || left.len() != right.len() {
                    return Err(TemporalError::BadPredicate(
                        "separation groups must be nonempty and equally sized".into(),
                    ));
                }
                if !(*d_safe > 0.0) {
                    return Err(TemporalError::BadPredicate(format!(
                        "d_safe {d_safe} must be positive"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Largest state coordinate the predicate projects onto.
    pub fn max_dim(&self) -> usize {
        match self {
            AtomicPredicate::BoxRegion { dims, .. } => dims.iter().copied().max().unwrap_or(0),
            AtomicPredicate::PairwiseSeparation { left, right, .. } => left
                .iter()
                .chain(right)
                .copied()
                .max()
                .unwrap_or(0),
        }
    }
}

/// Signed ∞-norm distance from `x` to the predicate region: the depth inside
/// (positive) or minus the distance to the region (negative).
///
/// For a box this is the minimum over axes of the two one-sided margins; for
/// a separation predicate it is the separation margin
/// `max_j |left_j - right_j| - d_safe`.
pub fn signed_distance(x: &DVector<f64>, pred: &AtomicPredicate) -> Result<f64, TemporalError> {
    let need = pred.max_dim();
    if need >= x.len() {
        return Err(TemporalError::DimensionMismatch { needed: need, got: x.len() });
    }
    match pred {
        AtomicPredicate::BoxRegion { dims, lower, upper } => {
            let mut margin = f64::INFINITY;
            for (i, &d) in dims.iter().enumerate() {
                if let Some(lo) = lower[i] {
                    margin = margin.min(x[d] - lo);
                }
                if let Some(hi) = upper[i] {
                    margin = margin.min(hi - x[d]);
                }
            }
            Ok(margin)
        }
        AtomicPredicate::PairwiseSeparation { left, right, d_safe } => {
            let mut sep = f64::NEG_INFINITY;
            for (&l, &r) in left.iter().zip(right) {
                sep = sep.max((x[l] - x[r]).abs());
            }
            Ok(sep - d_safe)
        }
    }
}

/// Named predicate collection; atoms in a [`super::Formula`] resolve here.
#[derive(Debug, Clone, Default)]
pub struct PredicateTable {
    entries: Vec<(String, AtomicPredicate)>,
    by_name: HashMap<String, PredId>,
}

impl PredicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, pred: AtomicPredicate) -> Result<PredId, TemporalError> {
        pred.validate()?;
        if self.by_name.contains_key(name) {
            return Err(TemporalError::BadPredicate(format!("duplicate predicate `{name}`")));
        }
        let id = PredId(self.entries.len());
        self.entries.push((name.to_string(), pred));
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<PredId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: PredId) -> &AtomicPredicate {
        &self.entries[id.0].1
    }

    pub fn name(&self, id: PredId) -> &str {
        &self.entries[id.0].0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PredId, &str, &AtomicPredicate)> {
        self.entries.iter().enumerate().map(|(i, (n, p))| (PredId(i), n.as_str(), p))
    }
}
