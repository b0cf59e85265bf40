//! The three metric carriers: partial metrics, G-metrics and GP-metrics.
//!
//! Storage is keyed by the sorted pair or sorted triple, so symmetry
//! ((P3), (G4), (GP2)) holds by construction and validators never check it.
//! A carrier is either a complete table or an evaluation rule; rules are
//! wrapped so that they too only ever see canonical keys.

use std::collections::HashMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{NumericPolicy, Scalar};
use crate::universe::{Point, PointUniverse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Partial,
    G,
    Gp,
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureKind::Partial => "partial metric",
            StructureKind::G => "G-metric",
            StructureKind::Gp => "GP-metric",
        })
    }
}

/// Audit note attached to a carrier produced by a transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub source: StructureKind,
    pub target: StructureKind,
    pub formula: String,
    pub note: String,
    /// Provenance of the source carrier, if it was itself produced by a transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_provenance: Option<Box<TransformRecord>>,
}

pub fn pair_key(x: Point, y: Point) -> (Point, Point) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

pub fn triple_key(x: Point, y: Point, z: Point) -> [Point; 3] {
    let mut k = [x, y, z];
    k.sort_unstable();
    k
}

/// All canonical pair keys `x <= y`, in lexicographic order.
pub fn canonical_pairs(n: usize) -> impl Iterator<Item = (Point, Point)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (Point(i), Point(j))))
}

/// All canonical triple keys `x <= y <= z`, in lexicographic order.
pub fn canonical_triples(n: usize) -> impl Iterator<Item = [Point; 3]> {
    (0..n).flat_map(move |i| {
        (i..n).flat_map(move |j| (j..n).map(move |k| [Point(i), Point(j), Point(k)]))
    })
}

pub type PairRule<S> = Arc<dyn Fn(Point, Point) -> S + Send + Sync>;
pub type TripleRule<S> = Arc<dyn Fn(Point, Point, Point) -> S + Send + Sync>;

#[derive(Clone)]
enum PairValues<S> {
    Table(Arc<HashMap<(Point, Point), S>>),
    Rule(PairRule<S>),
}

#[derive(Clone)]
enum TripleValues<S> {
    Table(Arc<HashMap<[Point; 3], S>>),
    Rule(TripleRule<S>),
}

fn check_entry<S: Scalar>(universe: &PointUniverse, key: &[Point], value: &S) -> Result<()> {
    for &p in key {
        universe.check(p)?;
    }
    if value.is_negative() {
        return Err(Error::NegativeValue {
            key: universe.labels_of(key),
            value: value.to_string(),
        });
    }
    Ok(())
}

/// A partial metric `p` on a finite universe.
#[derive(Clone)]
pub struct PartialMetric<S> {
    universe: Arc<PointUniverse>,
    values: PairValues<S>,
    policy: NumericPolicy,
    provenance: Option<TransformRecord>,
}

impl<S: Scalar> fmt::Debug for PartialMetric<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialMetric")
            .field("points", &self.universe.len())
            .field("table", &self.is_table())
            .field("policy", &self.policy)
            .finish()
    }
}

impl<S: Scalar> PartialMetric<S> {
    /// Builds a table-backed carrier. Every canonical pair (diagonal
    /// included) must be present; repeated keys must agree.
    pub fn from_table<I>(
        universe: Arc<PointUniverse>,
        entries: I,
        policy: NumericPolicy,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = ((Point, Point), S)>,
    {
        policy.check_compatible::<S>()?;
        let mut table: HashMap<(Point, Point), S> = HashMap::new();
        for ((x, y), value) in entries {
            check_entry(&universe, &[x, y], &value)?;
            let key = pair_key(x, y);
            if let Some(prev) = table.get(&key) {
                if *prev != value {
                    return Err(Error::ConflictingEntries {
                        key: universe.labels_of(&[key.0, key.1]),
                        first: prev.to_string(),
                        second: value.to_string(),
                    });
                }
                continue;
            }
            table.insert(key, value);
        }
        if let Some((x, y)) = canonical_pairs(universe.len()).find(|k| !table.contains_key(k)) {
            return Err(Error::Schema(format!(
                "missing entry for pair ({}, {})",
                universe.label(x),
                universe.label(y)
            )));
        }
        Ok(PartialMetric {
            universe,
            values: PairValues::Table(Arc::new(table)),
            policy,
            provenance: None,
        })
    }

    /// Builds a rule-backed carrier. The rule is only ever called with
    /// `x <= y`.
    pub fn from_fn<F>(universe: Arc<PointUniverse>, rule: F, policy: NumericPolicy) -> Result<Self>
    where
        F: Fn(Point, Point) -> S + Send + Sync + 'static,
    {
        policy.check_compatible::<S>()?;
        Ok(PartialMetric {
            universe,
            values: PairValues::Rule(Arc::new(rule)),
            policy,
            provenance: None,
        })
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn policy(&self) -> NumericPolicy {
        self.policy
    }

    pub fn provenance(&self) -> Option<&TransformRecord> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, record: TransformRecord) -> Self {
        self.provenance = Some(record);
        self
    }

    pub fn is_table(&self) -> bool {
        matches!(self.values, PairValues::Table(_))
    }

    /// `p(x, y)` for points already known to be in the universe.
    pub fn value(&self, x: Point, y: Point) -> S {
        let (a, b) = pair_key(x, y);
        match &self.values {
            PairValues::Table(t) => t[&(a, b)].clone(),
            PairValues::Rule(f) => f(a, b),
        }
    }

    /// Checked `p(x, y)`; `p(x, y) = p(y, x)` exactly.
    pub fn lookup(&self, x: Point, y: Point) -> Result<S> {
        self.universe.check(x)?;
        self.universe.check(y)?;
        Ok(self.value(x, y))
    }

    pub fn lookup_labels(&self, x: &str, y: &str) -> Result<S> {
        self.lookup(self.universe.point(x)?, self.universe.point(y)?)
    }

    pub fn self_distance(&self, x: Point) -> S {
        self.value(x, x)
    }

    /// Canonical entries in lexicographic key order.
    pub fn entries(&self) -> Vec<((Point, Point), S)> {
        canonical_pairs(self.universe.len())
            .map(|(x, y)| ((x, y), self.value(x, y)))
            .collect()
    }

    /// Materializes a rule-backed carrier into a table.
    pub fn tabulate(&self) -> Result<Self> {
        let mut out = Self::from_table(self.universe.clone(), self.entries(), self.policy)?;
        out.provenance = self.provenance.clone();
        Ok(out)
    }
}

/// Marker for the two ternary structures.
pub trait TripleKind: Clone + Send + Sync + 'static {
    const KIND: StructureKind;
    const NAME: &'static str;
}

#[derive(Clone, Copy, Debug)]
pub struct GKind;

#[derive(Clone, Copy, Debug)]
pub struct GpKind;

impl TripleKind for GKind {
    const KIND: StructureKind = StructureKind::G;
    const NAME: &'static str = "GMetric";
}

impl TripleKind for GpKind {
    const KIND: StructureKind = StructureKind::Gp;
    const NAME: &'static str = "GPMetric";
}

/// A ternary distance with fully permutation-symmetric storage.
#[derive(Clone)]
pub struct TripleMetric<S, K> {
    universe: Arc<PointUniverse>,
    values: TripleValues<S>,
    policy: NumericPolicy,
    provenance: Option<TransformRecord>,
    _kind: PhantomData<K>,
}

/// A G-metric carrier.
pub type GMetric<S> = TripleMetric<S, GKind>;

/// A GP-metric carrier.
pub type GPMetric<S> = TripleMetric<S, GpKind>;

impl<S: Scalar, K: TripleKind> fmt::Debug for TripleMetric<S, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct(K::NAME)
            .field("points", &self.universe.len())
            .field("table", &self.is_table())
            .field("policy", &self.policy)
            .finish()
    }
}

impl<S: Scalar, K: TripleKind> TripleMetric<S, K> {
    pub fn from_table<I>(
        universe: Arc<PointUniverse>,
        entries: I,
        policy: NumericPolicy,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = ([Point; 3], S)>,
    {
        policy.check_compatible::<S>()?;
        let mut table: HashMap<[Point; 3], S> = HashMap::new();
        for (key, value) in entries {
            check_entry(&universe, &key, &value)?;
            let key = triple_key(key[0], key[1], key[2]);
            if let Some(prev) = table.get(&key) {
                if *prev != value {
                    return Err(Error::ConflictingEntries {
                        key: universe.labels_of(&key),
                        first: prev.to_string(),
                        second: value.to_string(),
                    });
                }
                continue;
            }
            table.insert(key, value);
        }
        if let Some(k) = canonical_triples(universe.len()).find(|k| !table.contains_key(k)) {
            return Err(Error::Schema(format!(
                "missing entry for triple ({}, {}, {})",
                universe.label(k[0]),
                universe.label(k[1]),
                universe.label(k[2])
            )));
        }
        Ok(TripleMetric {
            universe,
            values: TripleValues::Table(Arc::new(table)),
            policy,
            provenance: None,
            _kind: PhantomData,
        })
    }

    /// Builds a rule-backed carrier. The rule is only ever called with
    /// sorted arguments.
    pub fn from_fn<F>(universe: Arc<PointUniverse>, rule: F, policy: NumericPolicy) -> Result<Self>
    where
        F: Fn(Point, Point, Point) -> S + Send + Sync + 'static,
    {
        policy.check_compatible::<S>()?;
        Ok(TripleMetric {
            universe,
            values: TripleValues::Rule(Arc::new(rule)),
            policy,
            provenance: None,
            _kind: PhantomData,
        })
    }

    pub fn kind(&self) -> StructureKind {
        K::KIND
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn policy(&self) -> NumericPolicy {
        self.policy
    }

    pub fn provenance(&self) -> Option<&TransformRecord> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, record: TransformRecord) -> Self {
        self.provenance = Some(record);
        self
    }

    pub fn is_table(&self) -> bool {
        matches!(self.values, TripleValues::Table(_))
    }

    /// Unchecked value; invariant under all permutations of the arguments.
    pub fn value(&self, x: Point, y: Point, z: Point) -> S {
        let k = triple_key(x, y, z);
        match &self.values {
            TripleValues::Table(t) => t[&k].clone(),
            TripleValues::Rule(f) => f(k[0], k[1], k[2]),
        }
    }

    pub fn lookup(&self, x: Point, y: Point, z: Point) -> Result<S> {
        self.universe.check(x)?;
        self.universe.check(y)?;
        self.universe.check(z)?;
        Ok(self.value(x, y, z))
    }

    pub fn lookup_labels(&self, x: &str, y: &str, z: &str) -> Result<S> {
        let u = &self.universe;
        self.lookup(u.point(x)?, u.point(y)?, u.point(z)?)
    }

    pub fn entries(&self) -> Vec<([Point; 3], S)> {
        canonical_triples(self.universe.len())
            .map(|k| (k, self.value(k[0], k[1], k[2])))
            .collect()
    }

    pub fn tabulate(&self) -> Result<Self> {
        let mut out = Self::from_table(self.universe.clone(), self.entries(), self.policy)?;
        out.provenance = self.provenance.clone();
        Ok(out)
    }
}

/// Any of the three carriers over one scalar type.
#[derive(Clone, Debug)]
pub enum Carrier<S: Scalar> {
    Partial(PartialMetric<S>),
    G(GMetric<S>),
    Gp(GPMetric<S>),
}

impl<S: Scalar> Carrier<S> {
    pub fn kind(&self) -> StructureKind {
        match self {
            Carrier::Partial(_) => StructureKind::Partial,
            Carrier::G(_) => StructureKind::G,
            Carrier::Gp(_) => StructureKind::Gp,
        }
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        match self {
            Carrier::Partial(c) => c.universe(),
            Carrier::G(c) => c.universe(),
            Carrier::Gp(c) => c.universe(),
        }
    }

    pub fn policy(&self) -> NumericPolicy {
        match self {
            Carrier::Partial(c) => c.policy(),
            Carrier::G(c) => c.policy(),
            Carrier::Gp(c) => c.policy(),
        }
    }
}
