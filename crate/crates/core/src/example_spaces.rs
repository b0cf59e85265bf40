//! Built-in carriers and seeded generators.
//!
//! The `max` family lives on nonnegative grids: `p(x,y) = max{x,y}`,
//! `GP(x,y,z) = max{x,y,z}` and the max-combination G-metric
//! `max{x,y} + max{x,z} + max{y,z} - x - y - z`. Words over a finite
//! alphabet carry the Baire G-metric.
//!
//! Generators are deterministic per seed and valid by construction:
//!
//! - [`random_partial`]: `p(x,y) = max{w(x),w(y)} + d(x,y)` with `d` the L1
//!   distance between distinct lattice points. The `max` part satisfies the
//!   partial-metric triangle inequality, `d` satisfies the metric one, and
//!   `d > 0` off the diagonal gives separation.
//! - [`random_gp`]: `GP(x,y,z) = max{w(x),w(y),w(z)} + (d(x,y) + d(y,z) + d(x,z)) / 2`.
//!   The half-perimeter dominates each side, so `GP(x,x,y) <= GP(x,y,z)`;
//!   the rectangle inequality reduces to two triangle inequalities.
//! - [`random_g`]: `G(x,y,z) = max{d(x,y), d(y,z), d(x,z)}`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::carrier::{
    canonical_pairs, canonical_triples, GMetric, GPMetric, PartialMetric, TripleKind, TripleMetric,
};
use crate::error::{Error, Result};
use crate::maps::{PairPotential, SelfMap};
use crate::numeric::{NumericPolicy, Rational, Scalar};
use crate::universe::{Grid, Point, PointUniverse};

/// Fixed-length words over a finite alphabet.
#[derive(Clone, Debug)]
pub struct WordUniverse {
    alphabet: Vec<char>,
    length: usize,
    universe: Arc<PointUniverse>,
}

impl WordUniverse {
    /// All `|alphabet|^length` words, in lexicographic order.
    pub fn full(alphabet: &[char], length: usize) -> Result<Self> {
        let alphabet = Self::check_alphabet(alphabet)?;
        let mut words = vec![String::new()];
        for _ in 0..length {
            words = words
                .iter()
                .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
                .collect();
        }
        Self::build(alphabet, length, words)
    }

    /// An enumerated subset of the words.
    pub fn from_words<I, W>(alphabet: &[char], length: usize, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = W>,
        W: Into<String>,
    {
        let alphabet = Self::check_alphabet(alphabet)?;
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        for w in &words {
            if w.chars().count() != length {
                return Err(Error::Schema(format!(
                    "word `{w}` does not have length {length}"
                )));
            }
            if let Some(c) = w.chars().find(|c| !alphabet.contains(c)) {
                return Err(Error::Schema(format!(
                    "word `{w}` uses `{c}` outside the alphabet"
                )));
            }
        }
        Self::build(alphabet, length, words)
    }

    fn check_alphabet(alphabet: &[char]) -> Result<Vec<char>> {
        let mut a = alphabet.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() {
            return Err(Error::Schema("alphabet must be nonempty".into()));
        }
        if a.len() != alphabet.len() {
            return Err(Error::Schema("alphabet has repeated symbols".into()));
        }
        Ok(a)
    }

    fn build(alphabet: Vec<char>, length: usize, words: Vec<String>) -> Result<Self> {
        let universe = PointUniverse::finite(words)?;
        Ok(WordUniverse {
            alphabet,
            length,
            universe,
        })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn universe(&self) -> &Arc<PointUniverse> {
        &self.universe
    }
}

/// Length of the longest common prefix.
pub fn common_prefix_len(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// `0` for equal words, `2^-lcp(u,v)` otherwise.
pub fn baire_distance(u: &str, v: &str) -> Rational {
    if u == v {
        Rational::zero()
    } else {
        Rational::dyadic(common_prefix_len(u, v) as u32)
    }
}

/// The Baire G-metric: the largest of the three pairwise Baire distances.
pub fn baire_g(words: &WordUniverse) -> Result<GMetric<Rational>> {
    let u = words.universe().clone();
    let labels = u.clone();
    let d = move |a: Point, b: Point| baire_distance(labels.label(a), labels.label(b));
    GMetric::from_fn(
        u,
        move |x, y, z| Scalar::max_of(Scalar::max_of(d(x, y), d(y, z)), d(x, z)),
        NumericPolicy::exact(),
    )?
    .tabulate()
}

fn nonnegative<S: Scalar>(grid: &Grid<S>) -> Result<()> {
    match grid
        .universe()
        .points()
        .find(|&p| grid.value(p).is_negative())
    {
        None => Ok(()),
        Some(p) => Err(Error::NegativeValue {
            key: vec![grid.universe().label(p).to_string()],
            value: grid.value(p).to_string(),
        }),
    }
}

/// `max{x,y} + max{x,z} + max{y,z} - x - y - z`, which is `max - min` of
/// the three coordinates.
pub fn max_combination_g<S: Scalar>(grid: &Grid<S>) -> Result<GMetric<S>> {
    nonnegative(grid)?;
    let v = grid.values().clone();
    GMetric::from_fn(
        grid.universe().clone(),
        move |a, b, c| {
            let (x, y, z) = (v[a.0].clone(), v[b.0].clone(), v[c.0].clone());
            S::max_of(x.clone(), y.clone())
                + S::max_of(x.clone(), z.clone())
                + S::max_of(y.clone(), z.clone())
                - x
                - y
                - z
        },
        NumericPolicy::default_for::<S>(),
    )
}

/// `p(x,y) = max{x,y}`.
pub fn max_partial<S: Scalar>(grid: &Grid<S>) -> Result<PartialMetric<S>> {
    nonnegative(grid)?;
    let v = grid.values().clone();
    PartialMetric::from_fn(
        grid.universe().clone(),
        move |a, b| S::max_of(v[a.0].clone(), v[b.0].clone()),
        NumericPolicy::default_for::<S>(),
    )
}

/// `GP(x,y,z) = max{x,y,z}`.
pub fn max_gp<S: Scalar>(grid: &Grid<S>) -> Result<GPMetric<S>> {
    nonnegative(grid)?;
    let v = grid.values().clone();
    GPMetric::from_fn(
        grid.universe().clone(),
        move |a, b, c| S::max_of(S::max_of(v[a.0].clone(), v[b.0].clone()), v[c.0].clone()),
        NumericPolicy::default_for::<S>(),
    )
}

/// Ranges for the seeded generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSpec {
    /// Weights are drawn from `0..=max_weight`.
    pub max_weight: i64,
    /// Lattice coordinates are drawn from `0..=max_coord` (widened when too
    /// small to hold `n` distinct points).
    pub max_coord: i64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_weight: 6,
            max_coord: 4,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn point_labels(n: usize) -> Result<Arc<PointUniverse>> {
    if n == 0 {
        return Err(Error::EmptyUniverse);
    }
    PointUniverse::finite((0..n).map(|i| format!("x{i}")))
}

/// Random weights and `n` distinct lattice points.
struct Scatter {
    weights: Vec<i64>,
    coords: Vec<(i64, i64)>,
}

impl Scatter {
    fn draw(rng: &mut ChaCha8Rng, n: usize, spec: &RandomSpec) -> Self {
        let mut side = spec.max_coord.max(0) + 1;
        while ((side * side) as usize) < n {
            side += 1;
        }
        let mut cells: Vec<(i64, i64)> = (0..side)
            .flat_map(|a| (0..side).map(move |b| (a, b)))
            .collect();
        cells.shuffle(rng);
        cells.truncate(n);
        let weights = (0..n)
            .map(|_| rng.gen_range(0..=spec.max_weight.max(0)))
            .collect();
        Scatter {
            weights,
            coords: cells,
        }
    }

    fn d(&self, a: Point, b: Point) -> i64 {
        let (p, q) = (self.coords[a.0], self.coords[b.0]);
        (p.0 - q.0).abs() + (p.1 - q.1).abs()
    }

    fn w(&self, a: Point) -> i64 {
        self.weights[a.0]
    }
}

pub fn random_partial(seed: u64, n: usize) -> Result<PartialMetric<Rational>> {
    random_partial_with(seed, n, &RandomSpec::default())
}

pub fn random_partial_with(
    seed: u64,
    n: usize,
    spec: &RandomSpec,
) -> Result<PartialMetric<Rational>> {
    let u = point_labels(n)?;
    let s = Scatter::draw(&mut rng_for(seed, 1), n, spec);
    let entries = canonical_pairs(n).map(|(x, y)| {
        (
            (x, y),
            Rational::from_integer(s.w(x).max(s.w(y)) + s.d(x, y)),
        )
    });
    PartialMetric::from_table(u, entries, NumericPolicy::exact())
}

fn gp_from_scatter(u: Arc<PointUniverse>, s: &Scatter) -> Result<GPMetric<Rational>> {
    let entries = canonical_triples(u.len()).map(|[x, y, z]| {
        let w = s.w(x).max(s.w(y)).max(s.w(z));
        let perimeter = s.d(x, y) + s.d(y, z) + s.d(x, z);
        (
            [x, y, z],
            Rational::from_integer(w) + Rational::new(perimeter, 2),
        )
    });
    GPMetric::from_table(u, entries, NumericPolicy::exact())
}

pub fn random_gp(seed: u64, n: usize) -> Result<GPMetric<Rational>> {
    random_gp_with(seed, n, &RandomSpec::default())
}

pub fn random_gp_with(seed: u64, n: usize, spec: &RandomSpec) -> Result<GPMetric<Rational>> {
    let u = point_labels(n)?;
    let s = Scatter::draw(&mut rng_for(seed, 2), n, spec);
    gp_from_scatter(u, &s)
}

pub fn random_g(seed: u64, n: usize) -> Result<GMetric<Rational>> {
    random_g_with(seed, n, &RandomSpec::default())
}

pub fn random_g_with(seed: u64, n: usize, spec: &RandomSpec) -> Result<GMetric<Rational>> {
    let u = point_labels(n)?;
    let s = Scatter::draw(&mut rng_for(seed, 3), n, spec);
    let entries = canonical_triples(n).map(|[x, y, z]| {
        (
            [x, y, z],
            Rational::from_integer(s.d(x, y).max(s.d(y, z)).max(s.d(x, z))),
        )
    });
    GMetric::from_table(u, entries, NumericPolicy::exact())
}

/// Unstructured table with entries drawn from `0..=max_value`; mostly
/// invalid, for negative tests.
pub fn random_partial_raw(seed: u64, n: usize, max_value: i64) -> Result<PartialMetric<Rational>> {
    let u = point_labels(n)?;
    let mut rng = rng_for(seed, 4);
    let entries: Vec<_> = canonical_pairs(n)
        .map(|k| (k, Rational::from_integer(rng.gen_range(0..=max_value))))
        .collect();
    PartialMetric::from_table(u, entries, NumericPolicy::exact())
}

/// Unstructured ternary table with entries drawn from `0..=max_value`.
pub fn random_triple_raw<K: TripleKind>(
    seed: u64,
    n: usize,
    max_value: i64,
) -> Result<TripleMetric<Rational, K>> {
    let u = point_labels(n)?;
    let mut rng = rng_for(seed, 5);
    let entries: Vec<_> = canonical_triples(n)
        .map(|k| (k, Rational::from_integer(rng.gen_range(0..=max_value))))
        .collect();
    TripleMetric::from_table(u, entries, NumericPolicy::exact())
}

/// A nonzero integer shift that keeps `v` nonnegative.
fn perturb(rng: &mut ChaCha8Rng, v: &Rational) -> Rational {
    loop {
        let delta =
            Rational::from_integer(*[-3i64, -2, -1, 1, 2, 3].choose(rng).expect("nonempty"));
        let out = v.clone() + delta;
        if !out.is_negative() {
            return out;
        }
    }
}

/// The table with exactly one canonical entry changed.
pub fn mutate_partial(
    p: &PartialMetric<Rational>,
    seed: u64,
) -> Result<(PartialMetric<Rational>, Vec<String>)> {
    let mut rng = rng_for(seed, 6);
    let mut entries = p.entries();
    let i = rng.gen_range(0..entries.len());
    entries[i].1 = perturb(&mut rng, &entries[i].1);
    let (a, b) = entries[i].0;
    let key = p.universe().labels_of(&[a, b]);
    Ok((
        PartialMetric::from_table(p.universe().clone(), entries, p.policy())?,
        key,
    ))
}

/// Ternary analogue of [`mutate_partial`].
pub fn mutate_triple<K: TripleKind>(
    t: &TripleMetric<Rational, K>,
    seed: u64,
) -> Result<(TripleMetric<Rational, K>, Vec<String>)> {
    let mut rng = rng_for(seed, 7);
    let mut entries = t.entries();
    let i = rng.gen_range(0..entries.len());
    entries[i].1 = perturb(&mut rng, &entries[i].1);
    let key = t.universe().labels_of(&entries[i].0);
    Ok((
        TripleMetric::from_table(t.universe().clone(), entries, t.policy())?,
        key,
    ))
}

/// A map whose orbits all end at `root`: points are visited in random
/// order and each one maps to `root` with probability `to_root`, otherwise
/// to a random earlier point.
pub fn random_forest_map(
    seed: u64,
    universe: &Arc<PointUniverse>,
    root: Point,
    to_root: f64,
) -> Result<SelfMap> {
    universe.check(root)?;
    let mut rng = rng_for(seed, 8);
    let mut order: Vec<Point> = universe.points().filter(|&p| p != root).collect();
    order.shuffle(&mut rng);
    let mut placed = vec![root];
    let mut pairs = vec![(root, root)];
    for p in order {
        let target = if rng.gen_bool(to_root.clamp(0.0, 1.0)) {
            root
        } else {
            *placed.choose(&mut rng).expect("root is placed")
        };
        pairs.push((p, target));
        placed.push(p);
    }
    SelfMap::from_pairs(universe.clone(), pairs)
}

/// A GP table, a forest map onto one root and a pair potential that
/// satisfies the pair Caristi condition.
///
/// The root gets weight 0 (a fixed point of a Caristi map has
/// `GP(z,z,z) = 0`), and `φ(x,Tx)` sums `GP(z,Tz,T²z)` plus a random slack
/// along the orbit of `x`, so `φ(x,Tx) - φ(Tx,T²x) >= GP(x,Tx,T²x)`.
pub fn random_caristi_instance(
    seed: u64,
    n: usize,
) -> Result<(GPMetric<Rational>, SelfMap, PairPotential<Rational>)> {
    let u = point_labels(n)?;
    let mut rng = rng_for(seed, 9);
    let mut s = Scatter::draw(&mut rng, n, &RandomSpec::default());
    let root = Point(rng.gen_range(0..n));
    s.weights[root.0] = 0;
    let gp = gp_from_scatter(u.clone(), &s)?;
    let map = random_forest_map(seed, &u, root, 0.3)?;
    let slack: Vec<Rational> = (0..n)
        .map(|_| Rational::from_integer(rng.gen_range(0..=2)))
        .collect();
    let mut phi = vec![None::<Rational>; n];
    fn resolve(
        x: Point,
        map: &SelfMap,
        gp: &GPMetric<Rational>,
        slack: &[Rational],
        phi: &mut [Option<Rational>],
    ) -> Rational {
        if let Some(v) = &phi[x.0] {
            return v.clone();
        }
        let tx = map.apply(x);
        let v = if tx == x {
            slack[x.0].clone()
        } else {
            gp.value(x, tx, map.apply(tx)) + slack[x.0].clone() + resolve(tx, map, gp, slack, phi)
        };
        phi[x.0] = Some(v.clone());
        v
    }
    let entries: Vec<_> = u
        .points()
        .map(|x| ((x, map.apply(x)), resolve(x, &map, &gp, &slack, &mut phi)))
        .collect();
    let phi = PairPotential::from_table(u, entries)?;
    Ok((gp, map, phi))
}
