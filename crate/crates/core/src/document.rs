//! JSON table documents.
//!
//! ```json
//! {
//!   "kind": "partial",
//!   "points": ["a", "b"],
//!   "entries": [{"key": ["a", "a"], "value": 0}, {"key": ["a", "b"], "value": "1/2"}, ...],
//!   "map": [["a", "b"], ["b", "b"]],
//!   "phi": [{"key": ["a", "b"], "value": 3}]
//! }
//! ```
//!
//! Values are JSON numbers or rational strings (`"num/den"`); documents
//! written by this crate always use strings for exact values.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carrier::{
    Carrier, GMetric, GPMetric, PartialMetric, StructureKind, TripleKind, TripleMetric,
};
use crate::error::{Error, Result};
use crate::maps::{PairPotential, PointPotential, SelfMap};
use crate::numeric::{NumericMode, NumericPolicy, Rational, Scalar};
use crate::universe::{Point, PointUniverse};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocEntry {
    pub key: Vec<String>,
    pub value: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDocument {
    pub kind: StructureKind,
    pub points: Vec<String>,
    pub entries: Vec<DocEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<[String; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<DocEntry>>,
}

impl TableDocument {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn universe(&self) -> Result<Arc<PointUniverse>> {
        PointUniverse::finite(self.points.iter().cloned())
    }

    pub fn with_map(mut self, map: &SelfMap) -> Self {
        let u = map.universe();
        self.map = Some(
            map.pairs()
                .map(|(a, b)| [u.label(a).to_string(), u.label(b).to_string()])
                .collect(),
        );
        self
    }

    pub fn with_point_potential<S: Scalar>(mut self, phi: &PointPotential<S>) -> Self {
        let u = phi.universe();
        self.phi = Some(
            u.points()
                .map(|p| DocEntry {
                    key: vec![u.label(p).to_string()],
                    value: phi.value(p).to_json(),
                })
                .collect(),
        );
        self
    }

    pub fn with_pair_potential<S: Scalar>(mut self, phi: &PairPotential<S>) -> Self {
        let u = phi.universe();
        self.phi = Some(
            phi.table_entries()
                .into_iter()
                .map(|((a, b), v)| DocEntry {
                    key: vec![u.label(a).to_string(), u.label(b).to_string()],
                    value: v.to_json(),
                })
                .collect(),
        );
        self
    }
}

/// A carrier loaded under either numeric mode.
#[derive(Clone, Debug)]
pub enum LoadedCarrier {
    Exact(Carrier<Rational>),
    Floating(Carrier<f64>),
}

impl LoadedCarrier {
    pub fn kind(&self) -> StructureKind {
        match self {
            LoadedCarrier::Exact(c) => c.kind(),
            LoadedCarrier::Floating(c) => c.kind(),
        }
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        match self {
            LoadedCarrier::Exact(c) => c.universe(),
            LoadedCarrier::Floating(c) => c.universe(),
        }
    }
}

/// Loads a carrier with canonicalized storage under `policy`.
pub fn load_carrier(document: &TableDocument, policy: NumericPolicy) -> Result<LoadedCarrier> {
    match policy.mode {
        NumericMode::ExactRational => Ok(LoadedCarrier::Exact(load_carrier_as(document, policy)?)),
        NumericMode::Floating => Ok(LoadedCarrier::Floating(load_carrier_as(document, policy)?)),
    }
}

fn parse_value<S: Scalar>(entry: &DocEntry) -> Result<S> {
    S::from_json(&entry.value)
}

fn resolve_key(universe: &PointUniverse, key: &[String]) -> Result<Vec<Point>> {
    key.iter().map(|l| universe.point(l)).collect()
}

fn load_triple<S: Scalar, K: TripleKind>(
    document: &TableDocument,
    universe: Arc<PointUniverse>,
    policy: NumericPolicy,
) -> Result<TripleMetric<S, K>> {
    let mut entries = Vec::with_capacity(document.entries.len());
    for e in &document.entries {
        if e.key.len() != 3 {
            return Err(Error::Schema(format!(
                "{} entry key must name 3 points, got {:?}",
                K::KIND,
                e.key
            )));
        }
        let k = resolve_key(&universe, &e.key)?;
        entries.push(([k[0], k[1], k[2]], parse_value::<S>(e)?));
    }
    TripleMetric::from_table(universe, entries, policy)
}

/// Typed loader behind [`load_carrier`].
pub fn load_carrier_as<S: Scalar>(
    document: &TableDocument,
    policy: NumericPolicy,
) -> Result<Carrier<S>> {
    policy.check_compatible::<S>()?;
    let universe = document.universe()?;
    match document.kind {
        StructureKind::Partial => {
            let mut entries = Vec::with_capacity(document.entries.len());
            for e in &document.entries {
                if e.key.len() != 2 {
                    return Err(Error::Schema(format!(
                        "partial-metric entry key must name 2 points, got {:?}",
                        e.key
                    )));
                }
                let k = resolve_key(&universe, &e.key)?;
                entries.push(((k[0], k[1]), parse_value::<S>(e)?));
            }
            Ok(Carrier::Partial(PartialMetric::from_table(
                universe, entries, policy,
            )?))
        }
        StructureKind::G => Ok(Carrier::G(load_triple(document, universe, policy)?)),
        StructureKind::Gp => Ok(Carrier::Gp(load_triple(document, universe, policy)?)),
    }
}

/// Reads the optional `map` field against `universe`.
pub fn load_map(
    document: &TableDocument,
    universe: &Arc<PointUniverse>,
) -> Result<Option<SelfMap>> {
    let Some(pairs) = &document.map else {
        return Ok(None);
    };
    let mut resolved = Vec::with_capacity(pairs.len());
    for [from, to] in pairs {
        let from = universe.point(from)?;
        let to = universe.point(to).map_err(|_| Error::MapOutsideUniverse {
            from: universe.label(from).to_string(),
        })?;
        resolved.push((from, to));
    }
    SelfMap::from_pairs(universe.clone(), resolved).map(Some)
}

/// Reads the optional `phi` field as a point potential (keys of length 1).
pub fn load_point_potential<S: Scalar>(
    document: &TableDocument,
    universe: &Arc<PointUniverse>,
) -> Result<Option<PointPotential<S>>> {
    let Some(entries) = &document.phi else {
        return Ok(None);
    };
    let mut values: Vec<Option<S>> = vec![None; universe.len()];
    for e in entries {
        if e.key.len() != 1 {
            return Err(Error::Schema(format!(
                "point potential key must name 1 point, got {:?}",
                e.key
            )));
        }
        let p = universe.point(&e.key[0])?;
        let v = parse_value::<S>(e)?;
        if let Some(prev) = &values[p.0] {
            if *prev != v {
                return Err(Error::ConflictingEntries {
                    key: e.key.clone(),
                    first: prev.to_string(),
                    second: v.to_string(),
                });
            }
        }
        values[p.0] = Some(v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::MissingPotential(vec![universe.label(Point(i)).to_string()]))
        })
        .collect::<Result<Vec<_>>>()?;
    PointPotential::new(universe.clone(), values).map(Some)
}

/// Reads the optional `phi` field as a pair potential (keys of length 2).
pub fn load_pair_potential<S: Scalar>(
    document: &TableDocument,
    universe: &Arc<PointUniverse>,
) -> Result<Option<PairPotential<S>>> {
    let Some(entries) = &document.phi else {
        return Ok(None);
    };
    let mut resolved = Vec::with_capacity(entries.len());
    for e in entries {
        if e.key.len() != 2 {
            return Err(Error::Schema(format!(
                "pair potential key must name 2 points, got {:?}",
                e.key
            )));
        }
        let k = resolve_key(universe, &e.key)?;
        resolved.push(((k[0], k[1]), parse_value::<S>(e)?));
    }
    PairPotential::from_table(universe.clone(), resolved).map(Some)
}

fn entry<S: Scalar>(universe: &PointUniverse, key: &[Point], value: &S) -> DocEntry {
    DocEntry {
        key: universe.labels_of(key),
        value: value.to_json(),
    }
}

pub fn partial_document<S: Scalar>(p: &PartialMetric<S>) -> TableDocument {
    let u = p.universe();
    TableDocument {
        kind: StructureKind::Partial,
        points: u.labels().to_vec(),
        entries: p
            .entries()
            .iter()
            .map(|((x, y), v)| entry(u, &[*x, *y], v))
            .collect(),
        map: None,
        phi: None,
    }
}

pub fn triple_document<S: Scalar, K: TripleKind>(c: &TripleMetric<S, K>) -> TableDocument {
    let u = c.universe();
    TableDocument {
        kind: K::KIND,
        points: u.labels().to_vec(),
        entries: c.entries().iter().map(|(k, v)| entry(u, k, v)).collect(),
        map: None,
        phi: None,
    }
}

pub fn g_document<S: Scalar>(g: &GMetric<S>) -> TableDocument {
    triple_document(g)
}

pub fn gp_document<S: Scalar>(gp: &GPMetric<S>) -> TableDocument {
    triple_document(gp)
}

/// Serializes any carrier (rule-backed carriers are evaluated on every key).
pub fn carrier_document<S: Scalar>(carrier: &Carrier<S>) -> TableDocument {
    match carrier {
        Carrier::Partial(p) => partial_document(p),
        Carrier::G(g) => triple_document(g),
        Carrier::Gp(gp) => triple_document(gp),
    }
}
