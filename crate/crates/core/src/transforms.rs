//! Structure-to-structure constructions.
//!
//! | transform | formula |
//! |---|---|
//! | [`partial_to_g`] | `G_p(x,y,z) = p(x,y) + p(y,z) + p(x,z) - p(x,x) - p(y,y) - p(z,z)` |
//! | [`induced_metric`] | `p^s(x,y) = 2p(x,y) - p(x,x) - p(y,y)` |
//! | [`g_to_metric`] | `d_G(x,y) = G(x,y,y)` (symmetric `G` only) |
//! | [`gp_to_partial`] | `p_GP(x,y) = GP(x,y,y)` |
//! | [`gp_to_g`] | `G_GP(x,y,z) = GP(x,y,y) + GP(x,z,z) + GP(y,z,z) - GP(x,x,x) - GP(y,y,y) - GP(z,z,z)` |
//!
//! Table inputs give table outputs; rule inputs give composed rules.

use serde::{Deserialize, Serialize};

use crate::carrier::{GMetric, GPMetric, PartialMetric, StructureKind, TransformRecord};
use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::universe::Point;
use crate::validate::{self, ValidationReport};

/// Which sides of a transform are validated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    pub check_input: bool,
    /// Revalidate the output against its axioms. On by default in debug
    /// builds only.
    pub check_output: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            check_input: true,
            check_output: cfg!(debug_assertions),
        }
    }
}

impl TransformOptions {
    pub fn trusted() -> Self {
        TransformOptions {
            check_input: false,
            check_output: false,
        }
    }

    pub fn full() -> Self {
        TransformOptions {
            check_input: true,
            check_output: true,
        }
    }
}

fn require(report: ValidationReport) -> Result<()> {
    if report.all_pass() {
        return Ok(());
    }
    let detail = report
        .failures()
        .map(|f| match &f.witness {
            Some(w) => format!("{} {w}", f.axiom),
            None => f.axiom.to_string(),
        })
        .collect::<Vec<_>>()
        .join("; ");
    Err(Error::InvalidInput {
        kind: report.structure.to_string(),
        detail,
    })
}

fn ensure_output(report: ValidationReport, what: &str) -> Result<()> {
    require(report)
        .map_err(|e| Error::Inconsistent(format!("{what} output failed revalidation: {e}")))
}

fn check_partial<S: Scalar>(p: &PartialMetric<S>) -> Result<()> {
    require(validate::validate_partial_with(
        p,
        validate::default_scan(p.universe()),
    ))
}

fn check_g<S: Scalar>(g: &GMetric<S>) -> Result<()> {
    require(validate::validate_g_with(
        g,
        validate::default_scan(g.universe()),
    ))
}

fn check_gp<S: Scalar>(gp: &GPMetric<S>) -> Result<()> {
    require(validate::validate_gp_with(
        gp,
        validate::default_scan(gp.universe()),
    ))
}

fn record(
    source: StructureKind,
    target: StructureKind,
    formula: &str,
    note: &str,
    source_provenance: Option<&TransformRecord>,
) -> TransformRecord {
    TransformRecord {
        source,
        target,
        formula: formula.to_string(),
        note: note.to_string(),
        source_provenance: source_provenance.cloned().map(Box::new),
    }
}

/// `G_p` of a partial metric; a symmetric G-metric.
pub fn partial_to_g<S: Scalar>(p: &PartialMetric<S>) -> Result<GMetric<S>> {
    partial_to_g_with(p, TransformOptions::default())
}

pub fn partial_to_g_with<S: Scalar>(
    p: &PartialMetric<S>,
    options: TransformOptions,
) -> Result<GMetric<S>> {
    if options.check_input {
        check_partial(p)?;
    }
    let src = p.clone();
    let rule = move |x: Point, y: Point, z: Point| {
        src.value(x, y) + src.value(y, z) + src.value(x, z)
            - src.value(x, x)
            - src.value(y, y)
            - src.value(z, z)
    };
    let mut g = GMetric::from_fn(p.universe().clone(), rule, p.policy())?;
    if p.is_table() {
        g = g.tabulate()?;
    }
    let g = g.with_provenance(record(
        StructureKind::Partial,
        StructureKind::G,
        "G_p(x,y,z) = p(x,y) + p(y,z) + p(x,z) - p(x,x) - p(y,y) - p(z,z)",
        "symmetric G-metric induced by a partial metric",
        p.provenance(),
    ));
    if options.check_output {
        let scan = validate::default_scan(g.universe());
        ensure_output(validate::validate_g_with(&g, scan), "partial_to_g")?;
        ensure_output(validate::validate_g_symmetry(&g), "partial_to_g")?;
    }
    Ok(g)
}

/// The metric `p^s`, returned as a zero-diagonal partial-metric carrier.
pub fn induced_metric<S: Scalar>(p: &PartialMetric<S>) -> Result<PartialMetric<S>> {
    induced_metric_with(p, TransformOptions::default())
}

pub fn induced_metric_with<S: Scalar>(
    p: &PartialMetric<S>,
    options: TransformOptions,
) -> Result<PartialMetric<S>> {
    if options.check_input {
        check_partial(p)?;
    }
    let src = p.clone();
    let rule = move |x: Point, y: Point| {
        let pxy = src.value(x, y);
        pxy.clone() + pxy - src.value(x, x) - src.value(y, y)
    };
    let mut out = PartialMetric::from_fn(p.universe().clone(), rule, p.policy())?;
    if p.is_table() {
        out = out.tabulate()?;
    }
    let out = out.with_provenance(record(
        StructureKind::Partial,
        StructureKind::Partial,
        "p^s(x,y) = 2p(x,y) - p(x,x) - p(y,y)",
        "metric induced by a partial metric (zero diagonal)",
        p.provenance(),
    ));
    if options.check_output {
        ensure_output(
            validate::validate_partial_with(&out, validate::default_scan(out.universe())),
            "induced_metric",
        )?;
        ensure_zero_diagonal(&out, "induced_metric")?;
    }
    Ok(out)
}

fn ensure_zero_diagonal<S: Scalar>(m: &PartialMetric<S>, what: &str) -> Result<()> {
    let policy = m.policy();
    match m
        .universe()
        .points()
        .find(|&x| !policy.is_zero(&m.value(x, x)))
    {
        None => Ok(()),
        Some(x) => Err(Error::Inconsistent(format!(
            "{what} output has nonzero self-distance at {}",
            m.universe().label(x)
        ))),
    }
}

/// The metric `d_G(x,y) = G(x,y,y)` of a symmetric G-metric.
pub fn g_to_metric<S: Scalar>(g: &GMetric<S>) -> Result<PartialMetric<S>> {
    g_to_metric_with(g, TransformOptions::default())
}

pub fn g_to_metric_with<S: Scalar>(
    g: &GMetric<S>,
    options: TransformOptions,
) -> Result<PartialMetric<S>> {
    if options.check_input {
        check_g(g)?;
    }
    let symmetry = validate::validate_g_symmetry(g);
    if let Some(w) = symmetry.witness(validate::Axiom::Symmetry) {
        return Err(Error::NotSymmetric {
            x: w.points[0].clone(),
            y: w.points[1].clone(),
        });
    }
    let src = g.clone();
    let mut out = PartialMetric::from_fn(
        g.universe().clone(),
        move |x, y| src.value(x, y, y),
        g.policy(),
    )?;
    if g.is_table() {
        out = out.tabulate()?;
    }
    let out = out.with_provenance(record(
        StructureKind::G,
        StructureKind::Partial,
        "d_G(x,y) = G(x,y,y)",
        "metric induced by a symmetric G-metric (zero diagonal)",
        g.provenance(),
    ));
    if options.check_output {
        ensure_output(
            validate::validate_partial_with(&out, validate::default_scan(out.universe())),
            "g_to_metric",
        )?;
        ensure_zero_diagonal(&out, "g_to_metric")?;
    }
    Ok(out)
}

/// First pair with `GP(x,y,y) != GP(y,x,x)`, if any.
pub fn gp_asymmetry<S: Scalar>(gp: &GPMetric<S>) -> Option<(Point, Point)> {
    let policy = gp.policy();
    crate::carrier::canonical_pairs(gp.universe().len())
        .find(|&(x, y)| !policy.eq(&gp.value(x, y, y), &gp.value(y, x, x)))
}

/// The partial metric `p_GP(x,y) = GP(x,y,y)`.
///
/// (GP1) already forces `GP(x,x,y) = GP(x,y,y)`; unchecked inputs that break
/// this are rejected with [`Error::NotSymmetric`].
pub fn gp_to_partial<S: Scalar>(gp: &GPMetric<S>) -> Result<PartialMetric<S>> {
    gp_to_partial_with(gp, TransformOptions::default())
}

pub fn gp_to_partial_with<S: Scalar>(
    gp: &GPMetric<S>,
    options: TransformOptions,
) -> Result<PartialMetric<S>> {
    if options.check_input {
        check_gp(gp)?;
    }
    if let Some((x, y)) = gp_asymmetry(gp) {
        let u = gp.universe();
        return Err(Error::NotSymmetric {
            x: u.label(x).to_string(),
            y: u.label(y).to_string(),
        });
    }
    let src = gp.clone();
    let mut out = PartialMetric::from_fn(
        gp.universe().clone(),
        move |x, y| src.value(x, y, y),
        gp.policy(),
    )?;
    if gp.is_table() {
        out = out.tabulate()?;
    }
    let out = out.with_provenance(record(
        StructureKind::Gp,
        StructureKind::Partial,
        "p_GP(x,y) = GP(x,y,y)",
        "partial metric associated with a GP-metric",
        gp.provenance(),
    ));
    if options.check_output {
        ensure_output(
            validate::validate_partial_with(&out, validate::default_scan(out.universe())),
            "gp_to_partial",
        )?;
    }
    Ok(out)
}

/// The symmetric G-metric `G_GP`.
pub fn gp_to_g<S: Scalar>(gp: &GPMetric<S>) -> Result<GMetric<S>> {
    gp_to_g_with(gp, TransformOptions::default())
}

pub fn gp_to_g_with<S: Scalar>(gp: &GPMetric<S>, options: TransformOptions) -> Result<GMetric<S>> {
    if options.check_input {
        check_gp(gp)?;
    }
    let src = gp.clone();
    let rule = move |x: Point, y: Point, z: Point| {
        src.value(x, y, y) + src.value(x, z, z) + src.value(y, z, z)
            - src.value(x, x, x)
            - src.value(y, y, y)
            - src.value(z, z, z)
    };
    let mut g = GMetric::from_fn(gp.universe().clone(), rule, gp.policy())?;
    if gp.is_table() {
        g = g.tabulate()?;
    }
    let g = g.with_provenance(record(
        StructureKind::Gp,
        StructureKind::G,
        "G_GP(x,y,z) = GP(x,y,y) + GP(x,z,z) + GP(y,z,z) - GP(x,x,x) - GP(y,y,y) - GP(z,z,z)",
        "symmetric G-metric associated with a GP-metric",
        gp.provenance(),
    ));
    if options.check_output {
        let scan = validate::default_scan(g.universe());
        ensure_output(validate::validate_g_with(&g, scan), "gp_to_g")?;
        ensure_output(validate::validate_g_symmetry(&g), "gp_to_g")?;
    }
    Ok(g)
}

/// Outcome of one pointwise identity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub keys_checked: usize,
    pub holds: bool,
    /// Largest `|lhs - rhs|` over the checked keys.
    pub max_discrepancy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<Vec<String>>,
}

fn compare<S: Scalar, I>(
    identity: &str,
    policy: crate::numeric::NumericPolicy,
    rows: I,
) -> IdentityCheck
where
    I: IntoIterator<Item = (Vec<String>, S, S)>,
{
    let mut max = S::zero();
    let mut count = 0;
    let mut first_mismatch = None;
    for (key, lhs, rhs) in rows {
        count += 1;
        let d = lhs.abs_diff(&rhs);
        if first_mismatch.is_none() && !policy.eq(&lhs, &rhs) {
            first_mismatch = Some(key);
        }
        if d > max {
            max = d;
        }
    }
    IdentityCheck {
        identity: identity.to_string(),
        keys_checked: count,
        holds: first_mismatch.is_none(),
        max_discrepancy: max.to_string(),
        first_mismatch,
    }
}

/// `d_{G_p} = p^s` on every pair.
pub fn check_partial_identities<S: Scalar>(p: &PartialMetric<S>) -> Result<Vec<IdentityCheck>> {
    let gp = partial_to_g(p)?;
    let dg = g_to_metric(&gp)?;
    let ps = induced_metric(p)?;
    let u = p.universe();
    let rows = crate::carrier::canonical_pairs(u.len())
        .map(|(x, y)| (u.labels_of(&[x, y]), dg.value(x, y), ps.value(x, y)));
    Ok(vec![compare("d_{G_p}(x,y) = p^s(x,y)", p.policy(), rows)])
}

/// `G_GP = G_{p_GP}` on every triple and `G_GP(x,y,y) = p_GP^s(x,y)` on
/// every ordered pair.
pub fn check_gp_identities<S: Scalar>(gp: &GPMetric<S>) -> Result<Vec<IdentityCheck>> {
    let direct = gp_to_g(gp)?;
    let p = gp_to_partial(gp)?;
    let composed = partial_to_g(&p)?;
    let ps = induced_metric(&p)?;
    let u = gp.universe();
    let n = u.len();
    let triples = crate::carrier::canonical_triples(n).map(|k| {
        (
            u.labels_of(&k),
            direct.value(k[0], k[1], k[2]),
            composed.value(k[0], k[1], k[2]),
        )
    });
    let pairs = (0..n)
        .flat_map(|i| (0..n).map(move |j| (Point(i), Point(j))))
        .map(|(x, y)| (u.labels_of(&[x, y]), direct.value(x, y, y), ps.value(x, y)));
    Ok(vec![
        compare("G_GP(x,y,z) = G_{p_GP}(x,y,z)", gp.policy(), triples),
        compare("G_GP(x,y,y) = p_GP^s(x,y)", gp.policy(), pairs),
    ])
}
