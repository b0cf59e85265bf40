//! Finite-prefix Cauchy and convergence certificates.
//!
//! Every certificate speaks about the tail window `[w, N]` of a finite trace
//! and never about the infinite sequence. Tail pairs `(n, m)` range over all
//! ordered pairs with `w <= n, m <= N`, diagonal included.
//!
//! Verdicts:
//! - *certified*: every tail value is within `epsilon` of the limit
//!   estimate;
//! - *refuted*: the tail oscillates by more than `2 * epsilon` (or, for
//!   limit-zero criteria, exceeds `2 * epsilon`);
//! - *inconclusive*: neither.
//!
//! The limit estimate `L` of a Cauchy certificate is the mean of all tail
//! pair distances.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::carrier::{Carrier, GMetric, GPMetric, PartialMetric, StructureKind};
use crate::error::{Error, Result};
use crate::maps::{SelfMap, SequenceTrace};
use crate::numeric::{NumericPolicy, Scalar};
use crate::transforms::{self, TransformOptions};
use crate::universe::{same_universe, Point, PointUniverse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// One tail pair `(n, m)` (1-based trace indices) and its distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailValue<S> {
    pub n: usize,
    pub m: usize,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyCertificate<S> {
    pub kind: StructureKind,
    /// The tail quantity being examined, e.g. `p(x_n,x_m)`.
    pub distance: String,
    pub window_start: usize,
    pub window_end: usize,
    pub epsilon: S,
    pub limit_estimate: S,
    /// Largest `|distance - L|` over the tail.
    pub max_deviation: S,
    /// Largest minus smallest tail value.
    pub oscillation: S,
    pub verdict: Verdict,
    /// Largest and smallest tail values when refuted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[TailValue<S>; 2]>,
}

impl<S: Scalar> fmt::Display for CauchyCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} Cauchy on window [{}, {}]: {} (L = {}, max |d - L| = {}, oscillation = {}, epsilon = {})",
            self.kind,
            self.window_start,
            self.window_end,
            self.verdict,
            self.limit_estimate,
            self.max_deviation,
            self.oscillation,
            self.epsilon
        )?;
        if let Some([hi, lo]) = &self.witness {
            write!(
                f,
                "; {} = {} at ({}, {}) vs {} at ({}, {})",
                self.distance, hi.value, hi.n, hi.m, lo.value, lo.n, lo.m
            )?;
        }
        Ok(())
    }
}

/// Largest tail value of one convergence condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual<S> {
    pub condition: String,
    pub max: S,
    /// Tail indices where the maximum is attained.
    pub at: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCertificate<S> {
    pub kind: StructureKind,
    pub limit: String,
    pub window_start: usize,
    pub window_end: usize,
    pub epsilon: S,
    pub residuals: Vec<Residual<S>>,
    pub verdict: Verdict,
}

impl<S: Scalar> fmt::Display for ConvergenceCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} convergence to {} on window [{}, {}]: {} (epsilon = {})",
            self.kind, self.limit, self.window_start, self.window_end, self.verdict, self.epsilon
        )?;
        for r in &self.residuals {
            writeln!(f, "  max {} = {} at {:?}", r.condition, r.max, r.at)?;
        }
        Ok(())
    }
}

fn check_trace<S: Scalar>(
    trace: &SequenceTrace<S>,
    universe: &std::sync::Arc<PointUniverse>,
) -> Result<()> {
    same_universe(trace.universe(), universe)?;
    if trace.len() < trace.window_start() {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            window_start: trace.window_start(),
        });
    }
    Ok(())
}

fn tail_pairs<S: Scalar>(trace: &SequenceTrace<S>) -> Vec<((usize, Point), (usize, Point))> {
    let tail: Vec<_> = trace.tail().collect();
    tail.iter()
        .flat_map(|&a| tail.iter().map(move |&b| (a, b)))
        .collect()
}

fn two<S: Scalar>() -> S {
    S::ratio(2, 1)
}

fn scaled<S: Scalar>(eps: &S, factor: i64) -> S {
    eps.clone() * S::ratio(factor, 1)
}

fn cauchy_from_values<S: Scalar>(
    kind: StructureKind,
    distance: &str,
    trace: &SequenceTrace<S>,
    policy: NumericPolicy,
    values: Vec<TailValue<S>>,
    fixed_limit: Option<S>,
) -> CauchyCertificate<S> {
    let eps = trace.epsilon().clone();
    let hi = values
        .iter()
        .fold(
            &values[0],
            |best, v| if v.value > best.value { v } else { best },
        )
        .clone();
    let lo = values
        .iter()
        .fold(
            &values[0],
            |best, v| if v.value < best.value { v } else { best },
        )
        .clone();
    let oscillation = hi.value.clone() - lo.value.clone();
    let bound = two::<S>() * eps.clone();
    let (limit, refuted) = match fixed_limit {
        Some(l) => {
            let refuted = policy.lt(&bound, &hi.value.abs_diff(&l))
                || policy.lt(&bound, &lo.value.abs_diff(&l));
            (l, refuted)
        }
        None => {
            let all: Vec<S> = values.iter().map(|v| v.value.clone()).collect();
            (S::mean(&all), policy.lt(&bound, &oscillation))
        }
    };
    let max_deviation = S::max_of(hi.value.abs_diff(&limit), lo.value.abs_diff(&limit));
    let verdict = if policy.le(&max_deviation, &eps) {
        Verdict::Certified
    } else if refuted {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    CauchyCertificate {
        kind,
        distance: distance.to_string(),
        window_start: trace.window_start(),
        window_end: trace.len(),
        epsilon: eps,
        limit_estimate: limit,
        max_deviation,
        oscillation,
        witness: (verdict == Verdict::Refuted).then(|| [hi, lo]),
        verdict,
    }
}

fn pair_values<S: Scalar>(
    trace: &SequenceTrace<S>,
    d: impl Fn(Point, Point) -> S,
) -> Vec<TailValue<S>> {
    tail_pairs(trace)
        .into_iter()
        .map(|((n, a), (m, b))| TailValue {
            n,
            m,
            value: d(a, b),
        })
        .collect()
}

/// Cauchy certificate for `p(x_n, x_m)`: the limit must exist and be finite.
pub fn p_cauchy<S: Scalar>(
    trace: &SequenceTrace<S>,
    p: &PartialMetric<S>,
) -> Result<CauchyCertificate<S>> {
    check_trace(trace, p.universe())?;
    let values = pair_values(trace, |a, b| p.value(a, b));
    Ok(cauchy_from_values(
        StructureKind::Partial,
        "p(x_n,x_m)",
        trace,
        p.policy(),
        values,
        None,
    ))
}

/// G-Cauchy certificate: `G(x_n, x_m, x_m) -> 0`.
pub fn g_cauchy<S: Scalar>(
    trace: &SequenceTrace<S>,
    g: &GMetric<S>,
) -> Result<CauchyCertificate<S>> {
    check_trace(trace, g.universe())?;
    let values = pair_values(trace, |a, b| g.value(a, b, b));
    Ok(cauchy_from_values(
        StructureKind::G,
        "G(x_n,x_m,x_m)",
        trace,
        g.policy(),
        values,
        Some(S::zero()),
    ))
}

/// GP-Cauchy certificate: `GP(x_n, x_m, x_m)` has a finite limit.
pub fn gp_cauchy<S: Scalar>(
    trace: &SequenceTrace<S>,
    gp: &GPMetric<S>,
) -> Result<CauchyCertificate<S>> {
    check_trace(trace, gp.universe())?;
    let values = pair_values(trace, |a, b| gp.value(a, b, b));
    Ok(cauchy_from_values(
        StructureKind::Gp,
        "GP(x_n,x_m,x_m)",
        trace,
        gp.policy(),
        values,
        None,
    ))
}

/// Cauchy certificate on any carrier.
pub fn cauchy<S: Scalar>(
    trace: &SequenceTrace<S>,
    carrier: &Carrier<S>,
) -> Result<CauchyCertificate<S>> {
    match carrier {
        Carrier::Partial(p) => p_cauchy(trace, p),
        Carrier::G(g) => g_cauchy(trace, g),
        Carrier::Gp(gp) => gp_cauchy(trace, gp),
    }
}

fn residual<S: Scalar>(condition: &str, rows: impl Iterator<Item = (usize, S)>) -> Residual<S> {
    let mut max = S::zero();
    let mut at = Vec::new();
    for (n, v) in rows {
        if v > max {
            max = v;
            at.clear();
            at.push(n);
        } else if v == max && !at.is_empty() {
            at.push(n);
        }
    }
    if at.is_empty() {
        at.push(0);
    }
    at.truncate(4);
    Residual {
        condition: condition.to_string(),
        max,
        at,
    }
}

fn convergence_verdict<S: Scalar>(
    residuals: &[Residual<S>],
    eps: &S,
    policy: NumericPolicy,
) -> Verdict {
    let bound = two::<S>() * eps.clone();
    if residuals.iter().all(|r| policy.le(&r.max, eps)) {
        Verdict::Certified
    } else if residuals.iter().any(|r| policy.lt(&bound, &r.max)) {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    }
}

fn convergence<S: Scalar>(
    kind: StructureKind,
    trace: &SequenceTrace<S>,
    x: Point,
    policy: NumericPolicy,
    residuals: Vec<Residual<S>>,
) -> ConvergenceCertificate<S> {
    let verdict = convergence_verdict(&residuals, trace.epsilon(), policy);
    ConvergenceCertificate {
        kind,
        limit: trace.universe().label(x).to_string(),
        window_start: trace.window_start(),
        window_end: trace.len(),
        epsilon: trace.epsilon().clone(),
        residuals,
        verdict,
    }
}

/// Convergence to `x` in a partial metric: `p(x_n, x) -> p(x, x)`.
pub fn p_converges_to<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    p: &PartialMetric<S>,
) -> Result<ConvergenceCertificate<S>> {
    check_trace(trace, p.universe())?;
    p.universe().check(x)?;
    let pxx = p.value(x, x);
    let r = residual(
        "|p(x_n,x) - p(x,x)|",
        trace.tail().map(|(n, a)| (n, p.value(a, x).abs_diff(&pxx))),
    );
    Ok(convergence(
        StructureKind::Partial,
        trace,
        x,
        p.policy(),
        vec![r],
    ))
}

/// Convergence to `x` in a GP-metric: `GP(x_n,x_n,x_n) -> GP(x,x,x)` and
/// `GP(x,x,x_n) -> GP(x,x,x)`.
pub fn gp_converges_to<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    gp: &GPMetric<S>,
) -> Result<ConvergenceCertificate<S>> {
    check_trace(trace, gp.universe())?;
    gp.universe().check(x)?;
    let gxxx = gp.value(x, x, x);
    let diag = residual(
        "|GP(x_n,x_n,x_n) - GP(x,x,x)|",
        trace
            .tail()
            .map(|(n, a)| (n, gp.value(a, a, a).abs_diff(&gxxx))),
    );
    let cross = residual(
        "|GP(x,x,x_n) - GP(x,x,x)|",
        trace
            .tail()
            .map(|(n, a)| (n, gp.value(x, x, a).abs_diff(&gxxx))),
    );
    Ok(convergence(
        StructureKind::Gp,
        trace,
        x,
        gp.policy(),
        vec![diag, cross],
    ))
}

/// One certificate inside an equivalence harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessEntry<S> {
    pub structure: String,
    /// Multiple of the trace epsilon this certificate was run at.
    pub tolerance_factor: i64,
    pub certificate: CauchyCertificate<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport<S> {
    pub entries: Vec<HarnessEntry<S>>,
    /// All entries share one verdict. Informational: certificates run at
    /// different tolerances may legitimately differ on a finite prefix.
    pub identical: bool,
    /// Proved transfers between certificates that failed on this trace;
    /// each one is a verdict disagreement at the documented factors.
    pub implication_violations: Vec<String>,
}

impl<S> EquivalenceReport<S> {
    /// No certificate contradicts another at the documented factors.
    pub fn holds(&self) -> bool {
        self.implication_violations.is_empty()
    }
}

impl<S: Scalar> fmt::Display for EquivalenceReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "  {:<10} x{}: {}",
                e.structure, e.tolerance_factor, e.certificate
            )?;
        }
        writeln!(
            f,
            "verdicts {}",
            if self.identical {
                "identical"
            } else {
                "differ across tolerances"
            }
        )?;
        for v in &self.implication_violations {
            writeln!(f, "DISAGREEMENT: {v}")?;
        }
        Ok(())
    }
}

/// Tolerance factor from a partial-metric certificate to its `G_p` one.
///
/// `G_p(x_n,x_m,x_m) = 2p(x_n,x_m) - p(x_n,x_n) - p(x_m,x_m)`, so four
/// deviations of at most `epsilon` bound it.
pub const P_TO_G_FACTOR: i64 = 4;

/// Tolerance factor back from `G_p` (or `d_G`) to `p`.
///
/// `|p(x_n,x_n) - p(x_m,x_m)| <= p^s(x_n,x_m)`, so a G-certificate at
/// `eta` bounds the tail oscillation of `p` by `3 * eta / 2`.
pub const G_TO_P_FACTOR: i64 = 2;

struct Implication<'a, S> {
    premise: &'a str,
    conclusion: &'a str,
    factor: i64,
    premise_cert: CauchyCertificate<S>,
    conclusion_cert: CauchyCertificate<S>,
}

fn implication_failure<S: Scalar>(i: Implication<'_, S>) -> Option<String> {
    (i.premise_cert.verdict == Verdict::Certified
        && i.conclusion_cert.verdict != Verdict::Certified)
        .then(|| {
            format!(
                "{} certified at epsilon but {} is {} at {} * epsilon",
                i.premise, i.conclusion, i.conclusion_cert.verdict, i.factor
            )
        })
}

fn identical<S>(entries: &[HarnessEntry<S>]) -> bool {
    entries
        .windows(2)
        .all(|w| w[0].certificate.verdict == w[1].certificate.verdict)
}

/// Runs `p` at epsilon and `G_p` at `4 * epsilon`, and checks the reverse
/// implication (`G_p` at epsilon gives `p` at `2 * epsilon`).
pub fn partial_equivalence_harness<S: Scalar>(
    trace: &SequenceTrace<S>,
    p: &PartialMetric<S>,
) -> Result<EquivalenceReport<S>> {
    let g = transforms::partial_to_g_with(p, TransformOptions::trusted())?;
    let eps = trace.epsilon().clone();
    let p_cert = p_cauchy(trace, p)?;
    let g_cert = g_cauchy(&trace.with_epsilon(scaled(&eps, P_TO_G_FACTOR))?, &g)?;
    let mut violations = Vec::new();
    violations.extend(implication_failure(Implication {
        premise: "p",
        conclusion: "G_p",
        factor: P_TO_G_FACTOR,
        premise_cert: p_cert.clone(),
        conclusion_cert: g_cert.clone(),
    }));
    violations.extend(implication_failure(Implication {
        premise: "G_p",
        conclusion: "p",
        factor: G_TO_P_FACTOR,
        premise_cert: g_cauchy(trace, &g)?,
        conclusion_cert: p_cauchy(&trace.with_epsilon(scaled(&eps, G_TO_P_FACTOR))?, p)?,
    }));
    let entries = vec![
        HarnessEntry {
            structure: "p".into(),
            tolerance_factor: 1,
            certificate: p_cert,
        },
        HarnessEntry {
            structure: "G_p".into(),
            tolerance_factor: P_TO_G_FACTOR,
            certificate: g_cert,
        },
    ];
    Ok(EquivalenceReport {
        identical: identical(&entries),
        entries,
        implication_violations: violations,
    })
}

/// Runs `GP` and `p_GP` at epsilon (their tail values coincide) and `G_GP`
/// at `4 * epsilon`, plus the reverse implication from `G_GP`.
pub fn gp_equivalence_harness<S: Scalar>(
    trace: &SequenceTrace<S>,
    gp: &GPMetric<S>,
) -> Result<EquivalenceReport<S>> {
    let p = transforms::gp_to_partial_with(gp, TransformOptions::trusted())?;
    let g = transforms::gp_to_g_with(gp, TransformOptions::trusted())?;
    let eps = trace.epsilon().clone();
    let gp_cert = gp_cauchy(trace, gp)?;
    let p_cert = p_cauchy(trace, &p)?;
    let g_cert = g_cauchy(&trace.with_epsilon(scaled(&eps, P_TO_G_FACTOR))?, &g)?;
    let mut violations = Vec::new();
    if gp_cert.verdict != p_cert.verdict {
        violations.push(format!(
            "GP is {} but p_GP is {} on identical tail values",
            gp_cert.verdict, p_cert.verdict
        ));
    }
    violations.extend(implication_failure(Implication {
        premise: "GP",
        conclusion: "G_GP",
        factor: P_TO_G_FACTOR,
        premise_cert: gp_cert.clone(),
        conclusion_cert: g_cert.clone(),
    }));
    violations.extend(implication_failure(Implication {
        premise: "G_GP",
        conclusion: "GP",
        factor: G_TO_P_FACTOR,
        premise_cert: g_cauchy(trace, &g)?,
        conclusion_cert: gp_cauchy(&trace.with_epsilon(scaled(&eps, G_TO_P_FACTOR))?, gp)?,
    }));
    let entries = vec![
        HarnessEntry {
            structure: "GP".into(),
            tolerance_factor: 1,
            certificate: gp_cert,
        },
        HarnessEntry {
            structure: "p_GP".into(),
            tolerance_factor: 1,
            certificate: p_cert,
        },
        HarnessEntry {
            structure: "G_GP".into(),
            tolerance_factor: P_TO_G_FACTOR,
            certificate: g_cert,
        },
    ];
    Ok(EquivalenceReport {
        identical: identical(&entries),
        entries,
        implication_violations: violations,
    })
}

/// Symmetric G-metric against its metric `d_G`; both use the same tail
/// values, so the factor is 1.
pub fn g_equivalence_harness<S: Scalar>(
    trace: &SequenceTrace<S>,
    g: &GMetric<S>,
) -> Result<EquivalenceReport<S>> {
    let d = transforms::g_to_metric_with(g, TransformOptions::trusted())?;
    let g_cert = g_cauchy(trace, g)?;
    let d_cert = p_cauchy(trace, &d)?;
    let mut violations = Vec::new();
    violations.extend(implication_failure(Implication {
        premise: "G",
        conclusion: "d_G",
        factor: 1,
        premise_cert: g_cert.clone(),
        conclusion_cert: d_cert.clone(),
    }));
    let eps = trace.epsilon().clone();
    violations.extend(implication_failure(Implication {
        premise: "d_G",
        conclusion: "G",
        factor: G_TO_P_FACTOR,
        premise_cert: d_cert.clone(),
        conclusion_cert: g_cauchy(&trace.with_epsilon(scaled(&eps, G_TO_P_FACTOR))?, g)?,
    }));
    let entries = vec![
        HarnessEntry {
            structure: "G".into(),
            tolerance_factor: 1,
            certificate: g_cert,
        },
        HarnessEntry {
            structure: "d_G".into(),
            tolerance_factor: 1,
            certificate: d_cert,
        },
    ];
    Ok(EquivalenceReport {
        identical: identical(&entries),
        entries,
        implication_violations: violations,
    })
}

/// Cross-structure harness for any carrier.
pub fn equivalence_harness<S: Scalar>(
    trace: &SequenceTrace<S>,
    carrier: &Carrier<S>,
) -> Result<EquivalenceReport<S>> {
    match carrier {
        Carrier::Partial(p) => partial_equivalence_harness(trace, p),
        Carrier::G(g) => g_equivalence_harness(trace, g),
        Carrier::Gp(gp) => gp_equivalence_harness(trace, gp),
    }
}

/// Limit chain against the G-side tail, in both tolerance directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEquivalenceReport<S> {
    /// `p(x,x) = lim p(x,x_n) = lim p(x_n,x_m)` (GP: with the extra
    /// `lim GP(x_n,x_n,x_n)` link).
    pub chain: ConvergenceCertificate<S>,
    /// `G(x,x_n,x_m) -> 0` for the associated G-metric, run at
    /// `CHAIN_TO_G_FACTOR * epsilon`.
    pub g_side: ConvergenceCertificate<S>,
    /// Both sides share one verdict (informational, as for
    /// [`EquivalenceReport::identical`]).
    pub identical: bool,
    pub implication_violations: Vec<String>,
}

impl<S> LimitEquivalenceReport<S> {
    pub fn holds(&self) -> bool {
        self.implication_violations.is_empty()
    }
}

impl<S: Scalar> fmt::Display for LimitEquivalenceReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chain: {}", self.chain)?;
        write!(f, "G side (x{CHAIN_TO_G_FACTOR}): {}", self.g_side)?;
        writeln!(
            f,
            "verdicts {}",
            if self.identical {
                "identical"
            } else {
                "differ across tolerances"
            }
        )?;
        for v in &self.implication_violations {
            writeln!(f, "DISAGREEMENT: {v}")?;
        }
        Ok(())
    }
}

/// Chain at epsilon bounds `G(x,x_n,x_m)` by five deviations.
pub const CHAIN_TO_G_FACTOR: i64 = 5;

/// `G(x,x_n,x_m) <= eta` on the tail bounds every chain residual by `2 * eta`.
pub const G_TO_CHAIN_FACTOR: i64 = 2;

fn chain_residuals<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    pv: &dyn Fn(Point, Point) -> S,
    diag_link: Option<&str>,
    names: [&str; 2],
) -> Vec<Residual<S>> {
    let pxx = pv(x, x);
    let mut out = vec![residual(
        names[0],
        trace.tail().map(|(n, a)| (n, pv(x, a).abs_diff(&pxx))),
    )];
    out.push(residual(
        names[1],
        tail_pairs(trace)
            .into_iter()
            .map(|((n, a), (_, b))| (n, pv(a, b).abs_diff(&pxx))),
    ));
    if let Some(name) = diag_link {
        out.push(residual(
            name,
            trace.tail().map(|(n, a)| (n, pv(a, a).abs_diff(&pxx))),
        ));
    }
    out
}

fn g_side_residual<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    g: &GMetric<S>,
    name: &str,
) -> Residual<S> {
    residual(
        name,
        tail_pairs(trace)
            .into_iter()
            .map(|((n, a), (_, b))| (n, g.value(x, a, b))),
    )
}

#[allow(clippy::too_many_arguments)]
fn limit_report<S: Scalar>(
    kind: StructureKind,
    trace: &SequenceTrace<S>,
    x: Point,
    policy: NumericPolicy,
    pv: &dyn Fn(Point, Point) -> S,
    diag_link: Option<&str>,
    names: [&str; 2],
    g: &GMetric<S>,
    g_name: &str,
) -> Result<LimitEquivalenceReport<S>> {
    let eps = trace.epsilon().clone();
    let chain = convergence(
        kind,
        trace,
        x,
        policy,
        chain_residuals(trace, x, pv, diag_link, names),
    );
    let wide = trace.with_epsilon(scaled(&eps, CHAIN_TO_G_FACTOR))?;
    let g_side = convergence(
        StructureKind::G,
        &wide,
        x,
        policy,
        vec![g_side_residual(trace, x, g, g_name)],
    );

    let mut violations = Vec::new();
    if chain.verdict == Verdict::Certified && g_side.verdict != Verdict::Certified {
        violations.push(format!(
            "chain certified at epsilon but G side is {} at {CHAIN_TO_G_FACTOR} * epsilon",
            g_side.verdict
        ));
    }
    let g_tight = convergence(
        StructureKind::G,
        trace,
        x,
        policy,
        vec![g_side_residual(trace, x, g, g_name)],
    );
    let chain_wide = trace.with_epsilon(scaled(&eps, G_TO_CHAIN_FACTOR))?;
    let chain_wide = convergence(
        kind,
        &chain_wide,
        x,
        policy,
        chain_residuals(trace, x, pv, diag_link, names),
    );
    if g_tight.verdict == Verdict::Certified && chain_wide.verdict != Verdict::Certified {
        violations.push(format!(
            "G side certified at epsilon but chain is {} at {G_TO_CHAIN_FACTOR} * epsilon",
            chain_wide.verdict
        ));
    }
    Ok(LimitEquivalenceReport {
        identical: chain.verdict == g_side.verdict,
        chain,
        g_side,
        implication_violations: violations,
    })
}

/// `x_n -> x` in a partial metric with `lim p(x_n,x_m) = p(x,x)`, against
/// `G_p(x,x_n,x_m) -> 0`.
pub fn partial_limit_equivalence_check<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    p: &PartialMetric<S>,
) -> Result<LimitEquivalenceReport<S>> {
    check_trace(trace, p.universe())?;
    p.universe().check(x)?;
    let g = transforms::partial_to_g_with(p, TransformOptions::trusted())?;
    limit_report(
        StructureKind::Partial,
        trace,
        x,
        p.policy(),
        &|a, b| p.value(a, b),
        None,
        ["|p(x,x_n) - p(x,x)|", "|p(x_n,x_m) - p(x,x)|"],
        &g,
        "G_p(x,x_n,x_m)",
    )
}

/// The four-limit chain
/// `GP(x,x,x) = lim GP(x,x_n,x_n) = lim GP(x_n,x_m,x_m) = lim GP(x_n,x_n,x_n)`
/// against `G_GP(x,x_n,x_m) -> 0`.
pub fn limit_equivalence_check<S: Scalar>(
    trace: &SequenceTrace<S>,
    x: Point,
    gp: &GPMetric<S>,
) -> Result<LimitEquivalenceReport<S>> {
    check_trace(trace, gp.universe())?;
    gp.universe().check(x)?;
    let g = transforms::gp_to_g_with(gp, TransformOptions::trusted())?;
    limit_report(
        StructureKind::Gp,
        trace,
        x,
        gp.policy(),
        &|a, b| gp.value(a, b, b),
        Some("|GP(x_n,x_n,x_n) - GP(x,x,x)|"),
        [
            "|GP(x,x_n,x_n) - GP(x,x,x)|",
            "|GP(x_n,x_m,x_m) - GP(x,x,x)|",
        ],
        &g,
        "G_GP(x,x_n,x_m)",
    )
}

/// `(distance from x0 to y, self-value of x0)` for the carrier's ball.
fn ball_terms<S: Scalar>(carrier: &Carrier<S>, x0: Point, y: Point) -> (S, S) {
    match carrier {
        Carrier::Partial(p) => (p.value(x0, y), p.value(x0, x0)),
        Carrier::G(g) => (g.value(x0, y, y), S::zero()),
        Carrier::Gp(gp) => (gp.value(x0, y, y), gp.value(x0, x0, x0)),
    }
}

fn check_radius<S: Scalar>(eps: &S) -> Result<()> {
    if eps.is_negative() || eps.is_zero() {
        return Err(Error::NonPositiveEpsilon(eps.to_string()));
    }
    Ok(())
}

/// Open-ball membership `y in B(x0, eps)`:
/// `p(x0,y) < p(x0,x0) + eps`, `G(x0,y,y) < eps` or
/// `GP(x0,y,y) < GP(x0,x0,x0) + eps`.
pub fn ball_membership<S: Scalar>(
    carrier: &Carrier<S>,
    x0: Point,
    eps: &S,
    y: Point,
) -> Result<bool> {
    check_radius(eps)?;
    carrier.universe().check(x0)?;
    carrier.universe().check(y)?;
    let (d, own) = ball_terms(carrier, x0, y);
    Ok(carrier.policy().lt(&d, &(own + eps.clone())))
}

/// All members of `B(x0, eps)` in point order.
pub fn ball<S: Scalar>(carrier: &Carrier<S>, x0: Point, eps: &S) -> Result<Vec<Point>> {
    check_radius(eps)?;
    carrier.universe().check(x0)?;
    let policy = carrier.policy();
    Ok(carrier
        .universe()
        .points()
        .filter(|&y| {
            let (d, own) = ball_terms(carrier, x0, y);
            policy.lt(&d, &(own + eps.clone()))
        })
        .collect())
}

/// Continuity result at one `(x0, eps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCase<S> {
    pub x0: String,
    pub epsilon: S,
    /// Largest candidate radius that works.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<S>,
    /// A point of the smallest source ball mapped outside the target ball.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escapes: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport<S> {
    pub continuous: bool,
    pub cases: Vec<ContinuityCase<S>>,
}

impl<S: Scalar> ContinuityReport<S> {
    pub fn failures(&self) -> impl Iterator<Item = &ContinuityCase<S>> {
        self.cases.iter().filter(|c| c.delta.is_none())
    }
}

/// Searches, for every `x0` and every `eps` in `eps_grid`, a radius `delta`
/// with `f(B_src(x0, delta))` inside `B_dst(f x0, eps)`.
///
/// Candidate radii are the distinct positive gaps
/// `GP(x0,y,y) - GP(x0,x0,x0)`; the balls only change at those values, and
/// the smallest one is `{y : gap = 0}`.
pub fn gp_continuity_check<S: Scalar>(
    f: &SelfMap,
    gp_src: &GPMetric<S>,
    gp_dst: &GPMetric<S>,
    eps_grid: &[S],
) -> Result<ContinuityReport<S>> {
    let u = gp_src.universe();
    if !u.is_finite_table() && u.len() > crate::validate::EXHAUSTIVE_LIMIT * 4 {
        return Err(Error::NonFiniteUniverse);
    }
    same_universe(u, gp_dst.universe())?;
    same_universe(u, f.universe())?;
    for eps in eps_grid {
        check_radius(eps)?;
    }
    let policy = gp_src.policy();
    let dst_policy = gp_dst.policy();
    let mut cases = Vec::new();
    for x0 in u.points() {
        let own = gp_src.value(x0, x0, x0);
        let gaps: Vec<S> = u
            .points()
            .map(|y| gp_src.value(x0, y, y) - own.clone())
            .collect();
        let mut radii: Vec<S> = Vec::new();
        for g in &gaps {
            if policy.is_positive(g) && !radii.iter().any(|r| policy.eq(r, g)) {
                radii.push(g.clone());
            }
        }
        radii.sort_by(NumericPolicy::order);
        // A radius above every gap covers the whole universe.
        let top = radii.last().cloned().unwrap_or_else(S::zero) + S::ratio(1, 1);
        radii.push(top);
        let fx0 = f.apply(x0);
        let target_own = gp_dst.value(fx0, fx0, fx0);
        for eps in eps_grid {
            let inside = |y: Point| {
                dst_policy.lt(
                    &gp_dst.value(fx0, f.apply(y), f.apply(y)),
                    &(target_own.clone() + eps.clone()),
                )
            };
            let works = |delta: &S| {
                u.points()
                    .filter(|y| policy.lt(&gaps[y.0], delta))
                    .all(inside)
            };
            let delta = radii.iter().rev().find(|d| works(d)).cloned();
            let escapes = if delta.is_none() {
                let smallest = &radii[0];
                u.points()
                    .filter(|y| policy.lt(&gaps[y.0], smallest))
                    .find(|&y| !inside(y))
                    .map(|y| u.label(y).to_string())
            } else {
                None
            };
            cases.push(ContinuityCase {
                x0: u.label(x0).to_string(),
                epsilon: eps.clone(),
                delta,
                escapes,
            });
        }
    }
    Ok(ContinuityReport {
        continuous: cases.iter().all(|c| c.delta.is_some()),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointContinuityReport<S> {
    pub limits: [String; 3],
    pub limit_value: S,
    pub window_start: usize,
    pub window_end: usize,
    pub epsilon: S,
    pub residual: Residual<S>,
    /// `|GP(x_N,y_N,z_N) - GP(x,y,z)|` at the last index.
    pub final_residual: S,
    pub verdict: Verdict,
}

/// Tail `|GP(x_n,y_n,z_n) - GP(x,y,z)|` for three traces that converge to
/// `x`, `y`, `z`. The window and epsilon come from the first trace; the
/// tail runs to the shortest trace's end.
pub fn joint_continuity_probe<S: Scalar>(
    gp: &GPMetric<S>,
    traces: [&SequenceTrace<S>; 3],
    limits: [Point; 3],
) -> Result<JointContinuityReport<S>> {
    for (t, &x) in traces.iter().zip(&limits) {
        let cert = gp_converges_to(t, x, gp)?;
        if cert.verdict != Verdict::Certified {
            return Err(Error::PremiseFailed(format!(
                "trace does not converge to {}: {}",
                gp.universe().label(x),
                cert.verdict
            )));
        }
    }
    let start = traces.iter().map(|t| t.window_start()).max().unwrap_or(1);
    let end = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    if end < start {
        return Err(Error::TraceTooShort {
            len: end,
            window_start: start,
        });
    }
    let [x, y, z] = limits;
    let target = gp.value(x, y, z);
    let at = |n: usize| {
        let p = traces.map(|t| t.points()[n - 1]);
        gp.value(p[0], p[1], p[2]).abs_diff(&target)
    };
    let r = residual(
        "|GP(x_n,y_n,z_n) - GP(x,y,z)|",
        (start..=end).map(|n| (n, at(n))),
    );
    let eps = traces[0].epsilon().clone();
    let policy = gp.policy();
    let verdict = convergence_verdict(std::slice::from_ref(&r), &eps, policy);
    let u = gp.universe();
    let final_residual = at(end);
    Ok(JointContinuityReport {
        limits: limits.map(|p| u.label(p).to_string()),
        limit_value: target,
        window_start: start,
        window_end: end,
        epsilon: eps,
        final_residual,
        residual: r,
        verdict,
    })
}

/// Distinct labels of a trace's tail, for display.
pub fn tail_support<S: Scalar>(trace: &SequenceTrace<S>) -> Vec<String> {
    let set: BTreeSet<Point> = trace.tail().map(|(_, p)| p).collect();
    trace
        .universe()
        .labels_of(&set.into_iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use crate::universe::Grid;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn harmonic_max(
        n: usize,
    ) -> (
        Grid<Rational>,
        PartialMetric<Rational>,
        GPMetric<Rational>,
        GMetric<Rational>,
    ) {
        let grid = Grid::<Rational>::harmonic(n).unwrap();
        let v = grid.values().clone();
        let u = grid.universe().clone();
        let v1 = v.clone();
        let p = PartialMetric::from_fn(
            u.clone(),
            move |a, b| Scalar::max_of(v1[a.0].clone(), v1[b.0].clone()),
            NumericPolicy::exact(),
        )
        .unwrap();
        let v2 = v.clone();
        let gp = GPMetric::from_fn(
            u.clone(),
            move |a, b, c| {
                Scalar::max_of(
                    Scalar::max_of(v2[a.0].clone(), v2[b.0].clone()),
                    v2[c.0].clone(),
                )
            },
            NumericPolicy::exact(),
        )
        .unwrap();
        let v3 = v;
        let g = GMetric::from_fn(
            u,
            move |a, b, c| {
                let (x, y, z) = (v3[a.0].clone(), v3[b.0].clone(), v3[c.0].clone());
                Scalar::max_of(x.clone(), y.clone())
                    + Scalar::max_of(x.clone(), z.clone())
                    + Scalar::max_of(y.clone(), z.clone())
                    - x
                    - y
                    - z
            },
            NumericPolicy::exact(),
        )
        .unwrap();
        (grid, p, gp, g)
    }

    fn trace(
        grid: &Grid<Rational>,
        values: Vec<Rational>,
        window: usize,
        eps: Rational,
    ) -> SequenceTrace<Rational> {
        let points = values.iter().map(|v| grid.point_at(v).unwrap()).collect();
        SequenceTrace::new(grid.universe().clone(), points, window, eps).unwrap()
    }

    fn inverse(n: usize) -> Vec<Rational> {
        (1..=n as i64).map(|k| q(1, k)).collect()
    }

    #[test]
    fn p_cauchy_examples() {
        let (grid, p, _, _) = harmonic_max(260);
        let t = trace(&grid, inverse(260), 200, q(1, 100));
        let c = p_cauchy(&t, &p).unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
        assert!(c.limit_estimate <= q(1, 200));

        let t = trace(&grid, vec![q(1, 3); 10], 5, q(1, 100));
        let c = p_cauchy(&t, &p).unwrap();
        assert_eq!(
            (c.verdict, c.limit_estimate.clone()),
            (Verdict::Certified, q(1, 3))
        );

        let alt: Vec<_> = (0..20)
            .map(|i| if i % 2 == 0 { q(0, 1) } else { q(1, 1) })
            .collect();
        let t = trace(&grid, alt, 10, q(1, 100));
        let c = p_cauchy(&t, &p).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
        let [hi, lo] = c.witness.unwrap();
        assert_eq!((hi.value, lo.value), (q(1, 1), q(0, 1)));
    }

    #[test]
    fn short_trace_is_rejected() {
        let (grid, p, _, _) = harmonic_max(5);
        let t = trace(&grid, vec![q(1, 1); 3], 3, q(1, 10));
        assert!(p_cauchy(&t, &p).is_ok());
        let points = vec![grid.point_at(&q(1, 1)).unwrap(); 3];
        assert!(SequenceTrace::new(grid.universe().clone(), points, 4, q(1, 10)).is_err());
    }

    #[test]
    fn convergence_examples() {
        let (grid, p, gp, _) = harmonic_max(100);
        let t = trace(&grid, inverse(100), 60, q(1, 50));
        let zero = grid.point_at(&q(0, 1)).unwrap();
        let one = grid.point_at(&q(1, 1)).unwrap();
        assert_eq!(
            p_converges_to(&t, zero, &p).unwrap().verdict,
            Verdict::Certified
        );
        // Limits are not unique in a partial metric.
        assert_eq!(
            p_converges_to(&t, one, &p).unwrap().verdict,
            Verdict::Certified
        );
        assert_eq!(
            gp_converges_to(&t, zero, &gp).unwrap().verdict,
            Verdict::Certified
        );
        let c = gp_converges_to(&t, one, &gp).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
        assert_eq!(c.residuals[1].max, q(0, 1));
    }

    #[test]
    fn g_and_gp_cauchy_examples() {
        let (grid, _, gp, g) = harmonic_max(120);
        let t = trace(&grid, inverse(120), 100, q(1, 100));
        assert_eq!(g_cauchy(&t, &g).unwrap().verdict, Verdict::Certified);
        assert_eq!(gp_cauchy(&t, &gp).unwrap().verdict, Verdict::Certified);
        let alt: Vec<_> = (0..20).map(|i| q(i % 2, 1)).collect();
        let t = trace(&grid, alt, 10, q(1, 100));
        assert_eq!(g_cauchy(&t, &g).unwrap().verdict, Verdict::Refuted);
        assert_eq!(gp_cauchy(&t, &gp).unwrap().verdict, Verdict::Refuted);
    }

    #[test]
    fn harness_examples() {
        let (grid, p, gp, _) = harmonic_max(120);
        let cases = [
            (inverse(120), 100, Verdict::Certified),
            (vec![q(1, 2); 12], 6, Verdict::Certified),
            ((0..20).map(|i| q(i % 2, 1)).collect(), 10, Verdict::Refuted),
        ];
        for (values, w, expected) in cases {
            let t = trace(&grid, values, w, q(1, 100));
            let rp = partial_equivalence_harness(&t, &p).unwrap();
            assert!(rp.holds(), "{rp}");
            assert_eq!(rp.entries[0].certificate.verdict, expected);
            let rg = gp_equivalence_harness(&t, &gp).unwrap();
            assert!(rg.holds(), "{rg}");
            assert_eq!(rg.entries[2].certificate.verdict, expected);
        }
    }

    #[test]
    fn limit_equivalence_examples() {
        let (grid, p, gp, _) = harmonic_max(120);
        let zero = grid.point_at(&q(0, 1)).unwrap();
        let one = grid.point_at(&q(1, 1)).unwrap();
        let t = trace(&grid, inverse(120), 100, q(1, 100));
        let r = limit_equivalence_check(&t, zero, &gp).unwrap();
        assert!(r.holds(), "{r}");
        assert_eq!(r.chain.verdict, Verdict::Certified);
        let r = limit_equivalence_check(&t, one, &gp).unwrap();
        assert!(r.holds(), "{r}");
        assert_eq!(r.chain.verdict, Verdict::Refuted);
        let r = partial_limit_equivalence_check(&t, zero, &p).unwrap();
        assert!(r.holds() && r.chain.verdict == Verdict::Certified, "{r}");

        let half = grid.point_at(&q(1, 2)).unwrap();
        let t = trace(&grid, vec![q(1, 2); 5], 2, q(1, 100));
        let r = limit_equivalence_check(&t, half, &gp).unwrap();
        assert!(r.holds());
        assert_eq!(r.g_side.residuals[0].max, q(0, 1));
    }

    #[test]
    fn balls() {
        let grid = Grid::new(vec![q(0, 1), q(1, 2), q(1, 1), q(7, 5), q(2, 1), q(6, 5)]).unwrap();
        let v = grid.values().clone();
        let v2 = v.clone();
        let p = PartialMetric::from_fn(
            grid.universe().clone(),
            move |a, b| Scalar::max_of(v[a.0].clone(), v[b.0].clone()),
            NumericPolicy::exact(),
        )
        .unwrap();
        let gp = GPMetric::from_fn(
            grid.universe().clone(),
            move |a, b, c| {
                Scalar::max_of(
                    Scalar::max_of(v2[a.0].clone(), v2[b.0].clone()),
                    v2[c.0].clone(),
                )
            },
            NumericPolicy::exact(),
        )
        .unwrap();
        let at = |x: Rational| grid.point_at(&x).unwrap();
        let cp = Carrier::Partial(p);
        assert!(ball_membership(&cp, at(q(1, 1)), &q(1, 2), at(q(6, 5))).unwrap());
        assert!(!ball_membership(&cp, at(q(1, 1)), &q(1, 2), at(q(2, 1))).unwrap());
        assert!(ball_membership(&cp, at(q(2, 1)), &q(1, 1000), at(q(2, 1))).unwrap());
        assert!(matches!(
            ball_membership(&cp, at(q(1, 1)), &q(0, 1), at(q(1, 1))),
            Err(Error::NonPositiveEpsilon(_))
        ));
        let cg = Carrier::Gp(gp);
        let members = ball(&cg, at(q(1, 1)), &q(1, 2)).unwrap();
        let labels = cg.universe().labels_of(&members);
        assert_eq!(labels, vec!["0", "1/2", "1", "6/5", "7/5"]);
    }

    #[test]
    fn continuity() {
        let grid = Grid::<Rational>::dyadic(6).unwrap();
        let v = grid.values().clone();
        let gp = GPMetric::from_fn(
            grid.universe().clone(),
            move |a, b, c| {
                Scalar::max_of(
                    Scalar::max_of(v[a.0].clone(), v[b.0].clone()),
                    v[c.0].clone(),
                )
            },
            NumericPolicy::exact(),
        )
        .unwrap();
        let eps = [q(1, 1), q(1, 8), q(1, 1000)];
        let id = SelfMap::identity(grid.universe().clone());
        assert!(gp_continuity_check(&id, &gp, &gp, &eps).unwrap().continuous);
        let half = SelfMap::scale_on_grid(&grid, q(1, 2));
        assert!(
            gp_continuity_check(&half, &gp, &gp, &eps)
                .unwrap()
                .continuous
        );

        // Three points; "a" has only itself nearby, but f sends it far from f(a).
        let u = PointUniverse::finite(["a", "b", "c"]).unwrap();
        let w = [0i64, 1, 2];
        let gp = GPMetric::from_fn(
            u.clone(),
            move |x, y, z| Rational::from_integer(w[x.0].max(w[y.0]).max(w[z.0])),
            NumericPolicy::exact(),
        )
        .unwrap();
        // Any ball around b contains a; f(a) = c leaves every small ball around f(b) = a.
        let f = SelfMap::from_pairs(
            u.clone(),
            [
                (Point(0), Point(2)),
                (Point(1), Point(0)),
                (Point(2), Point(2)),
            ],
        )
        .unwrap();
        let report = gp_continuity_check(&f, &gp, &gp, &[q(1, 2)]).unwrap();
        assert!(!report.continuous);
        let bad: Vec<_> = report.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(
            (bad[0].x0.as_str(), bad[0].escapes.as_deref()),
            ("b", Some("a"))
        );
    }

    #[test]
    fn joint_continuity() {
        let n = 60usize;
        let mut values = vec![q(0, 1), q(2, 1), q(3, 1)];
        for k in 1..=n as i64 {
            values.push(q(1, k));
            values.push(q(1, k) + q(2, 1));
        }
        let grid = Grid::new(values).unwrap();
        let v = grid.values().clone();
        let gp = GPMetric::from_fn(
            grid.universe().clone(),
            move |a, b, c| {
                Scalar::max_of(
                    Scalar::max_of(v[a.0].clone(), v[b.0].clone()),
                    v[c.0].clone(),
                )
            },
            NumericPolicy::exact(),
        )
        .unwrap();
        let xs = trace(&grid, inverse(n), 40, q(1, 20));
        let ys = trace(
            &grid,
            inverse(n).into_iter().map(|v| v + q(2, 1)).collect(),
            40,
            q(1, 20),
        );
        let zs = trace(&grid, vec![q(3, 1); n], 40, q(1, 20));
        let at = |x: Rational| grid.point_at(&x).unwrap();
        let r = joint_continuity_probe(
            &gp,
            [&xs, &ys, &zs],
            [at(q(0, 1)), at(q(2, 1)), at(q(3, 1))],
        )
        .unwrap();
        assert_eq!(r.limit_value, q(3, 1));
        assert_eq!(r.residual.max, q(0, 1));
        assert_eq!(r.verdict, Verdict::Certified);

        let r = joint_continuity_probe(&gp, [&xs, &xs, &xs], [at(q(0, 1)); 3]).unwrap();
        assert_eq!(r.final_residual, q(1, n as i64));
        // Premise failure: x_n = 1/n does not GP-converge to 1.
        assert!(matches!(
            joint_continuity_probe(
                &gp,
                [&xs, &ys, &zs],
                [at(q(1, 1)), at(q(2, 1)), at(q(3, 1))]
            ),
            Err(Error::PremiseFailed(_))
        ));
    }
}
