//! Self-maps, potentials, contraction gauges and sequence traces.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::universe::{Grid, Point, PointUniverse};

/// A total self-map `T: X -> X`, stored as its image table.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfMap {
    universe: Arc<PointUniverse>,
    image: Vec<Point>,
}

impl SelfMap {
    /// Builds a map from `(from, to)` pairs; every point needs exactly one image.
    pub fn from_pairs<I>(universe: Arc<PointUniverse>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, Point)>,
    {
        let mut image: Vec<Option<Point>> = vec![None; universe.len()];
        for (from, to) in pairs {
            universe.check(from)?;
            if !universe.contains(to) {
                return Err(Error::MapOutsideUniverse {
                    from: universe.label(from).to_string(),
                });
            }
            match image[from.0] {
                Some(prev) if prev != to => {
                    return Err(Error::Schema(format!(
                        "map assigns two images to `{}`",
                        universe.label(from)
                    )))
                }
                _ => image[from.0] = Some(to),
            }
        }
        let image = image
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::Schema(format!(
                        "map has no image for `{}`",
                        universe.label(Point(i))
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SelfMap { universe, image })
    }

    /// Tabulates a rule over the universe.
    pub fn from_fn<F>(universe: Arc<PointUniverse>, rule: F) -> Result<Self>
    where
        F: Fn(Point) -> Point,
    {
        let pairs: Vec<_> = universe.points().map(|p| (p, rule(p))).collect();
        Self::from_pairs(universe, pairs)
    }

    pub fn identity(universe: Arc<PointUniverse>) -> Self {
        let image = universe.points().collect();
        SelfMap { universe, image }
    }

    pub fn constant(universe: Arc<PointUniverse>, target: Point) -> Result<Self> {
        universe.check(target)?;
        let image = vec![target; universe.len()];
        Ok(SelfMap { universe, image })
    }

    /// `x -> x * factor` on a grid, snapped down to the grid (so points whose
    /// image falls below the grid bottom map to the bottom).
    pub fn scale_on_grid<S: Scalar>(grid: &Grid<S>, factor: S) -> Self {
        let image = grid
            .universe()
            .points()
            .map(|p| grid.clamp_down(&(grid.value(p).clone() * factor.clone())))
            .collect();
        SelfMap {
            universe: grid.universe().clone(),
            image,
        }
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn apply(&self, x: Point) -> Point {
        self.image[x.0]
    }

    pub fn image(&self) -> &[Point] {
        &self.image
    }

    pub fn is_fixed(&self, x: Point) -> bool {
        self.apply(x) == x
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.image.iter().enumerate().map(|(i, &t)| (Point(i), t))
    }
}

/// Point-indexed potential `φ: X -> [0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPotential<S> {
    universe: Arc<PointUniverse>,
    values: Vec<S>,
}

impl<S: Scalar> PointPotential<S> {
    pub fn new(universe: Arc<PointUniverse>, values: Vec<S>) -> Result<Self> {
        if values.len() != universe.len() {
            return Err(Error::Schema(format!(
                "potential has {} values for {} points",
                values.len(),
                universe.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(Error::NegativeValue {
                key: vec![universe.label(Point(i)).to_string()],
                value: values[i].to_string(),
            });
        }
        Ok(PointPotential { universe, values })
    }

    pub fn from_fn<F: Fn(Point) -> S>(universe: Arc<PointUniverse>, rule: F) -> Result<Self> {
        let values = universe.points().map(rule).collect();
        Self::new(universe, values)
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn value(&self, x: Point) -> &S {
        &self.values[x.0]
    }
}

pub type PairPotentialRule<S> = Arc<dyn Fn(Point, Point) -> S + Send + Sync>;

#[derive(Clone)]
enum PairPotentialValues<S> {
    Table(Arc<HashMap<(Point, Point), S>>),
    Rule(PairPotentialRule<S>),
}

/// Pair-indexed potential `φ: X × X -> [0, ∞)`. Not assumed symmetric.
///
/// Tables may be sparse: the fixed-point routines only evaluate `φ(z, Tz)`
/// and check coverage of those pairs up front.
#[derive(Clone)]
pub struct PairPotential<S> {
    universe: Arc<PointUniverse>,
    values: PairPotentialValues<S>,
}

impl<S: Scalar> fmt::Debug for PairPotential<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairPotential")
            .field("points", &self.universe.len())
            .field(
                "table",
                &matches!(self.values, PairPotentialValues::Table(_)),
            )
            .finish()
    }
}

impl<S: Scalar> PairPotential<S> {
    pub fn from_table<I>(universe: Arc<PointUniverse>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((Point, Point), S)>,
    {
        let mut table = HashMap::new();
        for ((x, y), v) in entries {
            universe.check(x)?;
            universe.check(y)?;
            if v.is_negative() {
                return Err(Error::NegativeValue {
                    key: universe.labels_of(&[x, y]),
                    value: v.to_string(),
                });
            }
            if let Some(prev) = table.insert((x, y), v.clone()) {
                if prev != v {
                    return Err(Error::ConflictingEntries {
                        key: universe.labels_of(&[x, y]),
                        first: prev.to_string(),
                        second: v.to_string(),
                    });
                }
            }
        }
        Ok(PairPotential {
            universe,
            values: PairPotentialValues::Table(Arc::new(table)),
        })
    }

    /// Rule-backed potential; nonnegativity is checked where it is evaluated.
    pub fn from_fn<F>(universe: Arc<PointUniverse>, rule: F) -> Self
    where
        F: Fn(Point, Point) -> S + Send + Sync + 'static,
    {
        PairPotential {
            universe,
            values: PairPotentialValues::Rule(Arc::new(rule)),
        }
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn get(&self, x: Point, y: Point) -> Option<S> {
        match &self.values {
            PairPotentialValues::Table(t) => t.get(&(x, y)).cloned(),
            PairPotentialValues::Rule(f) => Some(f(x, y)),
        }
    }

    /// Checks that `φ(z, Tz)` is defined and nonnegative for every `z`.
    pub fn check_graph_coverage(&self, map: &SelfMap) -> Result<()> {
        for (z, tz) in map.pairs() {
            match self.get(z, tz) {
                None => return Err(Error::MissingPotential(self.universe.labels_of(&[z, tz]))),
                Some(v) if v.is_negative() => {
                    return Err(Error::NegativeValue {
                        key: self.universe.labels_of(&[z, tz]),
                        value: v.to_string(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// `φ(z, Tz)`; callers must have checked graph coverage.
    pub(crate) fn on_graph(&self, map: &SelfMap, z: Point) -> S {
        self.get(z, map.apply(z))
            .expect("potential coverage checked before use")
    }

    /// All pairs with a defined value, for serialization.
    pub fn table_entries(&self) -> Vec<((Point, Point), S)> {
        let n = self.universe.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if let Some(v) = self.get(Point(i), Point(j)) {
                    out.push(((Point(i), Point(j)), v));
                }
            }
        }
        out
    }
}

pub type GaugeRule<S> = Arc<dyn Fn(&S) -> S + Send + Sync>;

/// Continuous gauge `ψ: [0, ∞) -> [0, ∞)` vanishing exactly at zero.
#[derive(Clone)]
pub struct ContractionGauge<S> {
    name: String,
    rule: GaugeRule<S>,
}

impl<S: Scalar> fmt::Debug for ContractionGauge<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContractionGauge({})", self.name)
    }
}

impl<S: Scalar> ContractionGauge<S> {
    /// Wraps a rule after checking `ψ(0) = 0` and `ψ(t) > 0` on every
    /// positive sample. Continuity is the caller's promise.
    pub fn new<F>(name: impl Into<String>, rule: F, samples: &[S]) -> Result<Self>
    where
        F: Fn(&S) -> S + Send + Sync + 'static,
    {
        let name = name.into();
        let at_zero = rule(&S::zero());
        if !at_zero.is_zero() {
            return Err(Error::InvalidGauge(format!(
                "{name}(0) = {at_zero}, expected 0"
            )));
        }
        for t in samples {
            if t.is_negative() {
                continue;
            }
            let v = rule(t);
            if v.is_negative() || (!t.is_zero() && v.is_zero()) {
                return Err(Error::InvalidGauge(format!("{name}({t}) = {v}")));
            }
        }
        Ok(ContractionGauge {
            name,
            rule: Arc::new(rule),
        })
    }

    /// `ψ(t) = factor * t` with `factor > 0`.
    pub fn linear(factor: S) -> Result<Self> {
        if !(factor > S::zero()) {
            return Err(Error::InvalidGauge(format!(
                "linear factor {factor} must be positive"
            )));
        }
        let name = format!("t*{factor}");
        let f = factor.clone();
        Self::new(name, move |t: &S| t.clone() * f.clone(), &[factor])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, t: &S) -> S {
        (self.rule)(t)
    }
}

/// A finite prefix `x_1 .. x_N` of a sequence with the certificate window.
///
/// `window_start` is 1-based: tail conditions range over indices
/// `window_start ..= N`.
#[derive(Clone, Debug)]
pub struct SequenceTrace<S> {
    universe: Arc<PointUniverse>,
    points: Vec<Point>,
    window_start: usize,
    epsilon: S,
}

impl<S: Scalar> SequenceTrace<S> {
    pub fn new(
        universe: Arc<PointUniverse>,
        points: Vec<Point>,
        window_start: usize,
        epsilon: S,
    ) -> Result<Self> {
        if window_start == 0 || points.len() < window_start {
            return Err(Error::TraceTooShort {
                len: points.len(),
                window_start,
            });
        }
        for &p in &points {
            universe.check(p)?;
        }
        if !(epsilon > S::zero()) {
            return Err(Error::NonPositiveEpsilon(epsilon.to_string()));
        }
        Ok(SequenceTrace {
            universe,
            points,
            window_start,
            epsilon,
        })
    }

    pub fn from_labels(
        universe: Arc<PointUniverse>,
        labels: &[&str],
        window_start: usize,
        epsilon: S,
    ) -> Result<Self> {
        let points = labels
            .iter()
            .map(|l| universe.point(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(universe, points, window_start, epsilon)
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    pub fn epsilon(&self) -> &S {
        &self.epsilon
    }

    /// Tail `x_w ..= x_N` together with 1-based indices.
    pub fn tail(&self) -> impl Iterator<Item = (usize, Point)> + Clone + '_ {
        self.points
            .iter()
            .copied()
            .enumerate()
            .skip(self.window_start - 1)
            .map(|(i, p)| (i + 1, p))
    }

    pub fn with_epsilon(&self, epsilon: S) -> Result<Self> {
        Self::new(
            self.universe.clone(),
            self.points.clone(),
            self.window_start,
            epsilon,
        )
    }
}
