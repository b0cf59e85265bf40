//! Finite point universes and real-valued sample grids.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Index of a point in its universe. Point order is index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point(pub usize);

impl Point {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UniverseKind {
    /// An arbitrary finite set given by a table.
    FiniteTable,
    /// A finite sample grid standing in for an interval of the reals.
    SampledContinuum { lower: f64, upper: f64 },
}

/// A finite ordered set of uniquely labelled points.
#[derive(Clone, Debug)]
pub struct PointUniverse {
    labels: Vec<String>,
    index: HashMap<String, Point>,
    kind: UniverseKind,
}

impl PartialEq for PointUniverse {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.kind == other.kind
    }
}

impl PointUniverse {
    pub fn new(labels: Vec<String>, kind: UniverseKind) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), Point(i)).is_some() {
                return Err(Error::DuplicatePoint(label.clone()));
            }
        }
        Ok(PointUniverse {
            labels,
            index,
            kind,
        })
    }

    pub fn finite<I, L>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let labels = labels.into_iter().map(Into::into).collect();
        Ok(Arc::new(Self::new(labels, UniverseKind::FiniteTable)?))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn kind(&self) -> &UniverseKind {
        &self.kind
    }

    pub fn is_finite_table(&self) -> bool {
        self.kind == UniverseKind::FiniteTable
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = Point> + ExactSizeIterator + Clone {
        (0..self.labels.len()).map(Point)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, p: Point) -> &str {
        &self.labels[p.0]
    }

    pub fn point(&self, label: &str) -> Result<Point> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.0 < self.labels.len()
    }

    pub fn check(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutOfRange(p.0))
        }
    }

    pub fn labels_of(&self, points: &[Point]) -> Vec<String> {
        points.iter().map(|&p| self.label(p).to_string()).collect()
    }
}

/// Two handles denote the same universe if they are the same allocation or
/// have identical labels and kind.
pub fn same_universe(a: &Arc<PointUniverse>, b: &Arc<PointUniverse>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::UniverseMismatch)
    }
}

/// A sampled-continuum universe whose points carry real coordinates.
///
/// Points are stored in ascending coordinate order and labelled by the
/// coordinate's display form (`"1/2"` for rationals).
#[derive(Clone, Debug)]
pub struct Grid<S> {
    universe: Arc<PointUniverse>,
    values: Arc<Vec<S>>,
}

impl<S: Scalar> Grid<S> {
    pub fn new(mut values: Vec<S>) -> Result<Self> {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        values.dedup();
        let first = values.first().ok_or(Error::EmptyUniverse)?;
        let last = values.last().expect("non-empty");
        let kind = UniverseKind::SampledContinuum {
            lower: first.to_f64(),
            upper: last.to_f64(),
        };
        let labels = values.iter().map(|v| v.to_string()).collect();
        let universe = Arc::new(PointUniverse::new(labels, kind)?);
        Ok(Grid {
            universe,
            values: Arc::new(values),
        })
    }

    /// `{0} ∪ {2^-k : 0 ≤ k ≤ depth}`: `depth + 2` points.
    pub fn dyadic(depth: u32) -> Result<Self> {
        let mut values = vec![S::zero()];
        values.extend((0..=depth).map(|k| S::ratio(1, 1i64 << k)));
        Self::new(values)
    }

    /// `{0} ∪ {1/k : 1 ≤ k ≤ n}`.
    pub fn harmonic(n: usize) -> Result<Self> {
        let mut values = vec![S::zero()];
        values.extend((1..=n).map(|k| S::ratio(1, k as i64)));
        Self::new(values)
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn values(&self) -> &Arc<Vec<S>> {
        &self.values
    }

    pub fn value(&self, p: Point) -> &S {
        &self.values[p.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| !v.is_negative())
    }

    /// Exact grid point with this coordinate, if any.
    pub fn point_at(&self, value: &S) -> Option<Point> {
        self.values.iter().position(|v| v == value).map(Point)
    }

    /// Grid point with this coordinate, or the grid bottom when the
    /// coordinate lies below every grid point and is not itself on the grid.
    /// Coordinates between grid points also snap down to the largest grid
    /// point not exceeding them.
    pub fn clamp_down(&self, value: &S) -> Point {
        let mut best = Point(0);
        for (i, v) in self.values.iter().enumerate() {
            if v <= value {
                best = Point(i);
            } else {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(
            PointUniverse::finite(["a", "b", "a"]),
            Err(Error::DuplicatePoint(_))
        ));
        assert!(matches!(
            PointUniverse::finite(Vec::<String>::new()),
            Err(Error::EmptyUniverse)
        ));
    }

    #[test]
    fn dyadic_grid_has_depth_plus_two_points() {
        let g = Grid::<Rational>::dyadic(20).unwrap();
        assert_eq!(g.len(), 22);
        assert_eq!(g.value(Point(0)), &Rational::zero());
        assert_eq!(g.value(Point(21)), &Rational::one());
        assert_eq!(g.universe().label(Point(1)), "1/1048576");
        assert!(!g.universe().is_finite_table());
    }

    #[test]
    fn clamp_snaps_to_grid_bottom() {
        let g = Grid::<Rational>::dyadic(3).unwrap();
        let tiny = Rational::new(1, 16);
        assert_eq!(g.clamp_down(&tiny), Point(0));
        assert_eq!(
            g.clamp_down(&Rational::new(1, 4)),
            g.point_at(&Rational::new(1, 4)).unwrap()
        );
    }
}
