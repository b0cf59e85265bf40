//! Axiom validators for partial metrics, G-metrics and GP-metrics.
//!
//! Each axiom is scanned over point tuples in lexicographic index order and
//! the first violating tuple is reported as its witness. Sampled mode draws
//! tuples from a seeded generator instead and reports the first sampled
//! violation; its verdict is "no counterexample found", never "valid".
//! Symmetry axioms ((P3), (G4), (GP2)) hold by canonical storage and are
//! reported as such.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::carrier::{GMetric, GPMetric, PartialMetric, StructureKind};
use crate::numeric::{NumericPolicy, Scalar};
use crate::universe::{Point, PointUniverse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axiom {
    /// All values are nonnegative.
    Nonnegative,
    P1,
    P2,
    P3,
    P4,
    G1,
    G2,
    G3,
    G4,
    G5,
    /// `G(x,y,y) = G(y,x,x)`.
    Symmetry,
    GP1,
    GP2,
    GP3,
    GP4,
    /// `GP(x,x,y) > 0` for `x != y`; a consequence of (GP1)-(GP4).
    GpPositivity,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Nonnegative => "nonnegativity",
            Axiom::P1 => "(P1) indistinguishability",
            Axiom::P2 => "(P2) small self-distances",
            Axiom::P3 => "(P3) symmetry",
            Axiom::P4 => "(P4) triangularity",
            Axiom::G1 => "(G1) zero on the diagonal",
            Axiom::G2 => "(G2) positivity",
            Axiom::G3 => "(G3) G(x,x,y) <= G(x,y,z)",
            Axiom::G4 => "(G4) permutation symmetry",
            Axiom::G5 => "(G5) rectangle inequality",
            Axiom::Symmetry => "G(x,y,y) = G(y,x,x)",
            Axiom::GP1 => "(GP1) monotone chain",
            Axiom::GP2 => "(GP2) permutation symmetry",
            Axiom::GP3 => "(GP3) rectangle inequality",
            Axiom::GP4 => "(GP4) separation",
            Axiom::GpPositivity => "GP(x,x,y) > 0 for x != y",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomStatus {
    Pass,
    Fail,
    /// Holds by canonical storage; never scanned.
    ByConstruction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub points: Vec<String>,
    pub relation: String,
    pub lhs: String,
    pub rhs: String,
}

impl Witness {
    pub fn new<S: Scalar>(
        universe: &PointUniverse,
        points: &[Point],
        relation: &str,
        lhs: &S,
        rhs: &S,
    ) -> Self {
        Witness {
            points: universe.labels_of(points),
            relation: relation.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at ({}): {} [lhs = {}, rhs = {}]",
            self.points.join(", "),
            self.relation,
            self.lhs,
            self.rhs
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub status: AxiomStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl AxiomResult {
    fn scanned(axiom: Axiom, witness: Option<Witness>) -> Self {
        let status = if witness.is_some() {
            AxiomStatus::Fail
        } else {
            AxiomStatus::Pass
        };
        AxiomResult {
            axiom,
            status,
            witness,
        }
    }

    fn by_construction(axiom: Axiom) -> Self {
        AxiomResult {
            axiom,
            status: AxiomStatus::ByConstruction,
            witness: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ScanMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub structure: StructureKind,
    pub points: usize,
    pub scan: ScanMode,
    pub axioms: Vec<AxiomResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.axioms.iter().all(|a| a.status != AxiomStatus::Fail)
    }

    pub fn status(&self, axiom: Axiom) -> Option<AxiomStatus> {
        self.axioms
            .iter()
            .find(|a| a.axiom == axiom)
            .map(|a| a.status)
    }

    pub fn passes(&self, axiom: Axiom) -> bool {
        self.status(axiom) != Some(AxiomStatus::Fail)
    }

    pub fn witness(&self, axiom: Axiom) -> Option<&Witness> {
        self.axioms
            .iter()
            .find(|a| a.axiom == axiom)
            .and_then(|a| a.witness.as_ref())
    }

    pub fn failures(&self) -> impl Iterator<Item = &AxiomResult> {
        self.axioms.iter().filter(|a| a.status == AxiomStatus::Fail)
    }

    /// Human verdict distinguishing exhaustive validity from sampled absence
    /// of counterexamples.
    pub fn verdict(&self) -> String {
        match (self.all_pass(), self.scan) {
            (false, _) => "invalid".to_string(),
            (true, ScanMode::Exhaustive) => "exhaustively valid".to_string(),
            (true, ScanMode::Sampled { samples, seed }) => {
                format!("no counterexample found in {samples} samples (seed {seed})")
            }
        }
    }

    /// Merges another report over the same carrier (used to append the
    /// symmetry check to a G report).
    pub fn extend(mut self, other: ValidationReport) -> Self {
        self.axioms.extend(other.axioms);
        self
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} on {} points: {}",
            self.structure,
            self.points,
            self.verdict()
        )?;
        for a in &self.axioms {
            let status = match a.status {
                AxiomStatus::Pass => "pass",
                AxiomStatus::Fail => "FAIL",
                AxiomStatus::ByConstruction => "pass (by storage)",
            };
            write!(f, "  {:<32} {}", a.axiom.to_string(), status)?;
            if let Some(w) = &a.witness {
                write!(f, " {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Tuple source for one validation run.
#[derive(Clone, Copy)]
struct Scanner {
    n: usize,
    mode: ScanMode,
}

impl Scanner {
    /// First tuple (in scan order) for which `check` returns a witness.
    fn find<const K: usize>(
        &self,
        salt: u64,
        mut check: impl FnMut([Point; K]) -> Option<Witness>,
    ) -> Option<Witness> {
        match self.mode {
            ScanMode::Exhaustive => {
                let mut idx = [0usize; K];
                loop {
                    if let Some(w) = check(idx.map(Point)) {
                        return Some(w);
                    }
                    let mut pos = K;
                    loop {
                        if pos == 0 {
                            return None;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < self.n {
                            break;
                        }
                        idx[pos] = 0;
                    }
                }
            }
            ScanMode::Sampled { samples, seed } => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt);
                for _ in 0..samples {
                    let t: [Point; K] = std::array::from_fn(|_| Point(rng.gen_range(0..self.n)));
                    if let Some(w) = check(t) {
                        return Some(w);
                    }
                }
                None
            }
        }
    }
}

fn check_le<S: Scalar>(
    policy: NumericPolicy,
    u: &PointUniverse,
    points: &[Point],
    relation: &str,
    lhs: S,
    rhs: S,
) -> Option<Witness> {
    if policy.le(&lhs, &rhs) {
        None
    } else {
        Some(Witness::new(u, points, relation, &lhs, &rhs))
    }
}

pub fn validate_partial<S: Scalar>(p: &PartialMetric<S>) -> ValidationReport {
    validate_partial_with(p, ScanMode::Exhaustive)
}

pub fn validate_partial_sampled<S: Scalar>(
    p: &PartialMetric<S>,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    validate_partial_with(p, ScanMode::Sampled { samples, seed })
}

pub fn validate_partial_with<S: Scalar>(p: &PartialMetric<S>, scan: ScanMode) -> ValidationReport {
    let u = p.universe();
    let policy = p.policy();
    let sc = Scanner {
        n: u.len(),
        mode: scan,
    };
    let zero = S::zero();

    let nonneg = sc.find(1, |[x, y]| {
        let v = p.value(x, y);
        check_le(policy, u, &[x, y], "0 <= p(x,y)", zero.clone(), v)
    });
    let p1 = sc.find(2, |[x, y]| {
        if x == y {
            return None;
        }
        let (pxx, pxy, pyy) = (p.value(x, x), p.value(x, y), p.value(y, y));
        if policy.eq(&pxx, &pxy) && policy.eq(&pxy, &pyy) {
            Some(Witness::new(
                u,
                &[x, y],
                "x != y but p(x,x) = p(x,y) = p(y,y)",
                &pxy,
                &pxx,
            ))
        } else {
            None
        }
    });
    let p2 = sc.find(3, |[x, y]| {
        check_le(
            policy,
            u,
            &[x, y],
            "p(x,x) <= p(x,y)",
            p.value(x, x),
            p.value(x, y),
        )
    });
    let p4 = sc.find(4, |[x, y, z]| {
        check_le(
            policy,
            u,
            &[x, y, z],
            "p(x,z) <= p(x,y) + p(y,z) - p(y,y)",
            p.value(x, z),
            p.value(x, y) + p.value(y, z) - p.value(y, y),
        )
    });

    ValidationReport {
        structure: StructureKind::Partial,
        points: u.len(),
        scan,
        axioms: vec![
            AxiomResult::scanned(Axiom::Nonnegative, nonneg),
            AxiomResult::scanned(Axiom::P1, p1),
            AxiomResult::scanned(Axiom::P2, p2),
            AxiomResult::by_construction(Axiom::P3),
            AxiomResult::scanned(Axiom::P4, p4),
        ],
    }
}

pub fn validate_g<S: Scalar>(g: &GMetric<S>) -> ValidationReport {
    validate_g_with(g, ScanMode::Exhaustive)
}

pub fn validate_g_sampled<S: Scalar>(
    g: &GMetric<S>,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    validate_g_with(g, ScanMode::Sampled { samples, seed })
}

pub fn validate_g_with<S: Scalar>(g: &GMetric<S>, scan: ScanMode) -> ValidationReport {
    let u = g.universe();
    let policy = g.policy();
    let sc = Scanner {
        n: u.len(),
        mode: scan,
    };
    let zero = S::zero();

    let nonneg = sc.find(1, |[x, y, z]| {
        check_le(
            policy,
            u,
            &[x, y, z],
            "0 <= G(x,y,z)",
            zero.clone(),
            g.value(x, y, z),
        )
    });
    let g1 = sc.find(2, |[x]| {
        let v = g.value(x, x, x);
        if policy.is_zero(&v) {
            None
        } else {
            Some(Witness::new(u, &[x], "G(x,x,x) = 0", &v, &zero))
        }
    });
    let g2 = sc.find(3, |[x, y]| {
        if x == y {
            return None;
        }
        let v = g.value(x, x, y);
        if policy.is_positive(&v) {
            None
        } else {
            Some(Witness::new(
                u,
                &[x, y],
                "G(x,x,y) > 0 for x != y",
                &v,
                &zero,
            ))
        }
    });
    let g3 = sc.find(4, |[x, y, z]| {
        if z == y {
            return None;
        }
        check_le(
            policy,
            u,
            &[x, y, z],
            "G(x,x,y) <= G(x,y,z) for z != y",
            g.value(x, x, y),
            g.value(x, y, z),
        )
    });
    let g5 = sc.find(5, |[x, y, z, a]| {
        check_le(
            policy,
            u,
            &[x, y, z, a],
            "G(x,y,z) <= G(x,a,a) + G(a,y,z)",
            g.value(x, y, z),
            g.value(x, a, a) + g.value(a, y, z),
        )
    });

    ValidationReport {
        structure: StructureKind::G,
        points: u.len(),
        scan,
        axioms: vec![
            AxiomResult::scanned(Axiom::Nonnegative, nonneg),
            AxiomResult::scanned(Axiom::G1, g1),
            AxiomResult::scanned(Axiom::G2, g2),
            AxiomResult::scanned(Axiom::G3, g3),
            AxiomResult::by_construction(Axiom::G4),
            AxiomResult::scanned(Axiom::G5, g5),
        ],
    }
}

/// Checks `G(x,y,y) = G(y,x,x)` on all ordered pairs.
pub fn validate_g_symmetry<S: Scalar>(g: &GMetric<S>) -> ValidationReport {
    let u = g.universe();
    let policy = g.policy();
    let sc = Scanner {
        n: u.len(),
        mode: ScanMode::Exhaustive,
    };
    let w = sc.find(6, |[x, y]| {
        let (a, b) = (g.value(x, y, y), g.value(y, x, x));
        if policy.eq(&a, &b) {
            None
        } else {
            Some(Witness::new(u, &[x, y], "G(x,y,y) = G(y,x,x)", &a, &b))
        }
    });
    ValidationReport {
        structure: StructureKind::G,
        points: u.len(),
        scan: ScanMode::Exhaustive,
        axioms: vec![AxiomResult::scanned(Axiom::Symmetry, w)],
    }
}

pub fn is_symmetric<S: Scalar>(g: &GMetric<S>) -> bool {
    validate_g_symmetry(g).all_pass()
}

pub fn validate_gp<S: Scalar>(gp: &GPMetric<S>) -> ValidationReport {
    validate_gp_with(gp, ScanMode::Exhaustive)
}

pub fn validate_gp_sampled<S: Scalar>(
    gp: &GPMetric<S>,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    validate_gp_with(gp, ScanMode::Sampled { samples, seed })
}

pub fn validate_gp_with<S: Scalar>(gp: &GPMetric<S>, scan: ScanMode) -> ValidationReport {
    let u = gp.universe();
    let policy = gp.policy();
    let sc = Scanner {
        n: u.len(),
        mode: scan,
    };
    let zero = S::zero();

    let gp1 = sc.find(7, |[x, y, z]| {
        let (xxx, xxy, xyz) = (gp.value(x, x, x), gp.value(x, x, y), gp.value(x, y, z));
        if !policy.le(&zero, &xxx) {
            return Some(Witness::new(u, &[x, y, z], "0 <= GP(x,x,x)", &zero, &xxx));
        }
        if !policy.le(&xxx, &xxy) {
            return Some(Witness::new(
                u,
                &[x, y, z],
                "GP(x,x,x) <= GP(x,x,y)",
                &xxx,
                &xxy,
            ));
        }
        check_le(policy, u, &[x, y, z], "GP(x,x,y) <= GP(x,y,z)", xxy, xyz)
    });
    let gp3 = sc.find(8, |[x, y, z, a]| {
        check_le(
            policy,
            u,
            &[x, y, z, a],
            "GP(x,y,z) <= GP(x,a,a) + GP(a,y,z) - GP(a,a,a)",
            gp.value(x, y, z),
            gp.value(x, a, a) + gp.value(a, y, z) - gp.value(a, a, a),
        )
    });
    let gp4 = sc.find(9, |[x, y, z]| {
        if x == y && y == z {
            return None;
        }
        let v = gp.value(x, y, z);
        let (xxx, yyy, zzz) = (gp.value(x, x, x), gp.value(y, y, y), gp.value(z, z, z));
        if policy.eq(&v, &xxx) && policy.eq(&v, &yyy) && policy.eq(&v, &zzz) {
            Some(Witness::new(
                u,
                &[x, y, z],
                "GP(x,y,z) = GP(x,x,x) = GP(y,y,y) = GP(z,z,z) forces x = y = z",
                &v,
                &xxx,
            ))
        } else {
            None
        }
    });
    let positivity = sc.find(10, |[x, y]| {
        if x == y {
            return None;
        }
        let v = gp.value(x, x, y);
        if policy.is_positive(&v) {
            None
        } else {
            Some(Witness::new(
                u,
                &[x, y],
                "GP(x,x,y) > 0 for x != y",
                &v,
                &zero,
            ))
        }
    });

    ValidationReport {
        structure: StructureKind::Gp,
        points: u.len(),
        scan,
        axioms: vec![
            AxiomResult::scanned(Axiom::GP1, gp1),
            AxiomResult::by_construction(Axiom::GP2),
            AxiomResult::scanned(Axiom::GP3, gp3),
            AxiomResult::scanned(Axiom::GP4, gp4),
            AxiomResult::scanned(Axiom::GpPositivity, positivity),
        ],
    }
}

/// Largest universe validated exhaustively by the transforms' input/output
/// checks; larger grids are sampled.
pub const EXHAUSTIVE_LIMIT: usize = 40;

/// Sample count for sampled checks on large grids.
pub const DEFAULT_SAMPLES: usize = 20_000;

/// Exhaustive on finite tables and small grids, sampled otherwise.
pub fn default_scan(universe: &PointUniverse) -> ScanMode {
    if universe.is_finite_table() || universe.len() <= EXHAUSTIVE_LIMIT {
        ScanMode::Exhaustive
    } else {
        ScanMode::Sampled {
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}
