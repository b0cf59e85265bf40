//! Fixed-point hypothesis checkers and solvers.
//!
//! Checkers scan every point (or pair) and report the first violation in
//! point order. Solvers are deterministic: Picard iteration for the weak
//! contraction settings and the admissible-set descent for Caristi maps on
//! GP-metric spaces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::carrier::{Carrier, GMetric, GPMetric, PartialMetric};
use crate::convergence::{gp_converges_to, Verdict};
use crate::error::{Error, Result};
use crate::maps::{ContractionGauge, PairPotential, PointPotential, SelfMap, SequenceTrace};
use crate::numeric::{NumericPolicy, Scalar};
use crate::transforms;
use crate::universe::{same_universe, Point, PointUniverse};
use crate::validate::Witness;

/// Both sides of a pointwise hypothesis at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow<S> {
    pub point: String,
    pub lhs: S,
    pub rhs: S,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<S> {
    pub hypothesis: String,
    /// Points or pairs scanned.
    pub checked: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Per-point evaluations; empty for pair scans.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<EvaluationRow<S>>,
}

impl<S: Scalar> HypothesisReport<S> {
    fn without_rows(mut self) -> Self {
        self.rows.clear();
        self
    }
}

impl<S: Scalar> fmt::Display for HypothesisReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} checked)",
            self.hypothesis,
            if self.holds { "holds" } else { "VIOLATED" },
            self.checked
        )?;
        if let Some(w) = &self.witness {
            write!(f, " {w}")?;
        }
        Ok(())
    }
}

fn pointwise<S: Scalar>(
    hypothesis: &str,
    relation: &str,
    universe: &PointUniverse,
    policy: NumericPolicy,
    sides: impl Fn(Point) -> (S, S),
) -> HypothesisReport<S> {
    let mut rows = Vec::with_capacity(universe.len());
    let mut witness = None;
    for x in universe.points() {
        let (lhs, rhs) = sides(x);
        let holds = policy.le(&lhs, &rhs);
        if !holds && witness.is_none() {
            witness = Some(Witness::new(universe, &[x], relation, &lhs, &rhs));
        }
        rows.push(EvaluationRow {
            point: universe.label(x).to_string(),
            lhs,
            rhs,
            holds,
        });
    }
    HypothesisReport {
        hypothesis: hypothesis.to_string(),
        checked: rows.len(),
        holds: witness.is_none(),
        witness,
        rows,
    }
}

/// Weak contraction `G(Tx,T²x,Ty) <= G(x,Tx,y) - ψ(G(x,Tx,y))` over all
/// ordered pairs.
pub fn check_weak_g_contraction<S: Scalar>(
    g: &GMetric<S>,
    map: &SelfMap,
    gauge: &ContractionGauge<S>,
) -> Result<HypothesisReport<S>> {
    same_universe(g.universe(), map.universe())?;
    let u = g.universe();
    let policy = g.policy();
    let mut checked = 0;
    for x in u.points() {
        let tx = map.apply(x);
        let ttx = map.apply(tx);
        for y in u.points() {
            checked += 1;
            let a = g.value(x, tx, y);
            let lhs = g.value(tx, ttx, map.apply(y));
            let rhs = a.clone() - gauge.apply(&a);
            if !policy.le(&lhs, &rhs) {
                return Ok(HypothesisReport {
                    hypothesis: format!("weak G-contraction with gauge {}", gauge.name()),
                    checked,
                    holds: false,
                    witness: Some(Witness::new(
                        u,
                        &[x, y],
                        "G(Tx,T²x,Ty) <= G(x,Tx,y) - ψ(G(x,Tx,y))",
                        &lhs,
                        &rhs,
                    )),
                    rows: Vec::new(),
                });
            }
        }
    }
    Ok(HypothesisReport {
        hypothesis: format!("weak G-contraction with gauge {}", gauge.name()),
        checked,
        holds: true,
        witness: None,
        rows: Vec::new(),
    })
}

/// The partial-metric weak contraction, checked as the G-contraction of
/// `G_p`.
pub fn check_partial_weak_contraction<S: Scalar>(
    p: &PartialMetric<S>,
    map: &SelfMap,
    gauge: &ContractionGauge<S>,
) -> Result<HypothesisReport<S>> {
    let g = transforms::partial_to_g(p)?;
    let mut report = check_weak_g_contraction(&g, map, gauge)?;
    report.hypothesis = format!(
        "weak partial-metric contraction (via G_p) with gauge {}",
        gauge.name()
    );
    Ok(report)
}

/// Point-potential Caristi condition `p(x,Tx) <= φ(x) - φ(Tx)`.
pub fn check_partial_caristi<S: Scalar>(
    p: &PartialMetric<S>,
    map: &SelfMap,
    phi: &PointPotential<S>,
) -> Result<HypothesisReport<S>> {
    same_universe(p.universe(), map.universe())?;
    same_universe(p.universe(), phi.universe())?;
    Ok(pointwise(
        "partial-metric Caristi condition",
        "p(x,Tx) <= φ(x) - φ(Tx)",
        p.universe(),
        p.policy(),
        |x| {
            let tx = map.apply(x);
            (p.value(x, tx), phi.value(x).clone() - phi.value(tx).clone())
        },
    ))
}

/// `GP(x,Tx,Tx) <= φ(x) - φ(Tx)`; agrees with [`check_partial_caristi`] on
/// `p_GP` because `p_GP(x,Tx) = GP(x,Tx,Tx)`.
pub fn check_gp_caristi<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    phi: &PointPotential<S>,
) -> Result<HypothesisReport<S>> {
    same_universe(gp.universe(), map.universe())?;
    same_universe(gp.universe(), phi.universe())?;
    Ok(pointwise(
        "GP Caristi condition",
        "GP(x,Tx,Tx) <= φ(x) - φ(Tx)",
        gp.universe(),
        gp.policy(),
        |x| {
            let tx = map.apply(x);
            (
                gp.value(x, tx, tx),
                phi.value(x).clone() - phi.value(tx).clone(),
            )
        },
    ))
}

/// Pair-potential Caristi condition
/// `GP(x,Tx,T²x) <= φ(x,Tx) - φ(Tx,T²x)`, with one row per point.
pub fn check_caristi_pair<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    phi: &PairPotential<S>,
) -> Result<HypothesisReport<S>> {
    same_universe(gp.universe(), map.universe())?;
    same_universe(gp.universe(), phi.universe())?;
    phi.check_graph_coverage(map)?;
    Ok(pointwise(
        "pair Caristi condition",
        "GP(x,Tx,T²x) <= φ(x,Tx) - φ(Tx,T²x)",
        gp.universe(),
        gp.policy(),
        |x| {
            let tx = map.apply(x);
            let ttx = map.apply(tx);
            (
                gp.value(x, tx, ttx),
                phi.on_graph(map, x) - phi.on_graph(map, tx),
            )
        },
    ))
}

/// All `x` with `Tx = x`.
pub fn brute_force_fixed_points(map: &SelfMap) -> Vec<Point> {
    map.universe()
        .points()
        .filter(|&x| map.is_fixed(x))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointVerdict {
    Found,
    HypothesisViolated,
    BudgetExhausted,
}

impl fmt::Display for FixedPointVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixedPointVerdict::Found => "fixed point found",
            FixedPointVerdict::HypothesisViolated => "hypothesis violated",
            FixedPointVerdict::BudgetExhausted => "iteration budget exhausted",
        })
    }
}

/// One step of the Caristi descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaristiState<S> {
    /// 1-based step index.
    pub n: usize,
    pub point: String,
    /// `φ(x_n, Tx_n)`.
    pub phi: S,
    /// `GP(x_n, Tx_n, T²x_n)`.
    pub residual: S,
    /// `A(x_n)`, in point order; empty on the terminal step.
    pub admissible: Vec<String>,
    /// `a(x_n)`, the minimum of `φ(z,Tz)` over `A(x_n)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infimum: Option<S>,
    /// The selection slack `1/n`.
    pub slack: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<String>,
}

/// Invariant checks over a finished descent trace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentAudit {
    pub steps: usize,
    /// `φ(x_{n+1},Tx_{n+1}) <= φ(x_n,Tx_n)`.
    pub monotonicity_violations: usize,
    /// `GP(x_n,x_m,Tx_m) <= φ(x_n,Tx_n) - φ(x_m,Tx_m)` for `m > n`.
    pub telescoping_violations: usize,
    /// `G_GP(x_n,x_m,x_m) <= 2 GP(x_n,x_m,Tx_m)` for `m > n`.
    pub domination_violations: usize,
    /// `Tx_n` in `A(x_n)`.
    pub admissibility_violations: usize,
    /// `φ(x_{n+1},Tx_{n+1}) <= a(x_n) + 1/n`.
    pub slack_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<String>,
}

impl DescentAudit {
    pub fn clean(&self) -> bool {
        self.monotonicity_violations == 0
            && self.telescoping_violations == 0
            && self.domination_violations == 0
            && self.admissibility_violations == 0
            && self.slack_violations == 0
    }

    fn flag(&mut self, message: impl FnOnce() -> String) {
        if self.first_violation.is_none() {
            self.first_violation = Some(message());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport<S> {
    pub solver: String,
    pub verdict: FixedPointVerdict,
    pub start: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    /// The hypothesis check that gated the run, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<HypothesisReport<S>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Applications of `T` (Picard) or descent moves (Caristi).
    pub iterations: usize,
    /// Structure residual at the last visited point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<S>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orbit: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub descent: Vec<CaristiState<S>>,
    /// Final value of the non-increasing `φ` trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_value: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<DescentAudit>,
}

impl<S: Scalar> FixedPointReport<S> {
    pub fn found(&self) -> bool {
        self.verdict == FixedPointVerdict::Found
    }

    fn new(solver: &str, verdict: FixedPointVerdict, start: String) -> Self {
        FixedPointReport {
            solver: solver.to_string(),
            verdict,
            start,
            point: None,
            hypothesis: None,
            witness: None,
            iterations: 0,
            residual: None,
            orbit: Vec::new(),
            descent: Vec::new(),
            limit_value: None,
            audit: None,
        }
    }
}

impl<S: Scalar> fmt::Display for FixedPointReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} from {}: {}", self.solver, self.start, self.verdict)?;
        if let Some(p) = &self.point {
            writeln!(f, "  point: {p}")?;
        }
        if let Some(h) = &self.hypothesis {
            writeln!(f, "  {h}")?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "  witness {w}")?;
        }
        writeln!(f, "  iterations: {}", self.iterations)?;
        if let Some(r) = &self.residual {
            writeln!(f, "  residual: {r}")?;
        }
        if !self.orbit.is_empty() {
            writeln!(f, "  orbit: {}", self.orbit.join(" -> "))?;
        }
        for s in &self.descent {
            write!(
                f,
                "  step {}: x = {}, φ = {}, residual = {}",
                s.n, s.point, s.phi, s.residual
            )?;
            if let (Some(a), Some(sel)) = (&s.infimum, &s.selected) {
                write!(
                    f,
                    ", |A| = {}, a = {}, next = {}",
                    s.admissible.len(),
                    a,
                    sel
                )?;
            }
            writeln!(f)?;
        }
        if let Some(l) = &self.limit_value {
            writeln!(f, "  L = {l}")?;
        }
        if let Some(a) = &self.audit {
            writeln!(
                f,
                "  audit: {} (monotonicity {}, telescoping {}, domination {}, admissibility {}, slack {})",
                if a.clean() { "clean" } else { "VIOLATIONS" },
                a.monotonicity_violations,
                a.telescoping_violations,
                a.domination_violations,
                a.admissibility_violations,
                a.slack_violations
            )?;
        }
        Ok(())
    }
}

/// Gate for [`picard_solve`].
pub enum PicardHypothesis<'a, S> {
    /// Run the weak contraction check for the carrier first.
    WeakContraction(&'a ContractionGauge<S>),
    /// Iterate without checking.
    Unchecked,
}

/// Residual that vanishes exactly when `Tx = x`:
/// `p^s(x,Tx)`, `G(x,Tx,Tx)` or `2GP(x,Tx,Tx) - GP(x,x,x) - GP(Tx,Tx,Tx)`.
pub fn picard_residual<S: Scalar>(carrier: &Carrier<S>, x: Point, tx: Point) -> S {
    match carrier {
        Carrier::Partial(p) => {
            let pxy = p.value(x, tx);
            pxy.clone() + pxy - p.value(x, x) - p.value(tx, tx)
        }
        Carrier::G(g) => g.value(x, tx, tx),
        Carrier::Gp(gp) => {
            let v = gp.value(x, tx, tx);
            v.clone() + v - gp.value(x, x, x) - gp.value(tx, tx, tx)
        }
    }
}

fn weak_contraction_for<S: Scalar>(
    carrier: &Carrier<S>,
    map: &SelfMap,
    gauge: &ContractionGauge<S>,
) -> Result<HypothesisReport<S>> {
    match carrier {
        Carrier::Partial(p) => check_partial_weak_contraction(p, map, gauge),
        Carrier::G(g) => check_weak_g_contraction(g, map, gauge),
        Carrier::Gp(gp) => {
            let g = transforms::gp_to_g(gp)?;
            let mut r = check_weak_g_contraction(&g, map, gauge)?;
            r.hypothesis = format!("weak G-contraction of G_GP with gauge {}", gauge.name());
            Ok(r)
        }
    }
}

/// Picard iteration `x <- Tx` until the structure residual is zero.
pub fn picard_solve<S: Scalar>(
    carrier: &Carrier<S>,
    map: &SelfMap,
    x0: Point,
    budget: usize,
    hypothesis: PicardHypothesis<'_, S>,
) -> Result<FixedPointReport<S>> {
    let u = carrier.universe();
    same_universe(u, map.universe())?;
    u.check(x0)?;
    let start = u.label(x0).to_string();
    let gate = match hypothesis {
        PicardHypothesis::WeakContraction(gauge) => {
            Some(weak_contraction_for(carrier, map, gauge)?)
        }
        PicardHypothesis::Unchecked => None,
    };
    if let Some(h) = gate.as_ref().filter(|h| !h.holds) {
        let mut report =
            FixedPointReport::new("picard", FixedPointVerdict::HypothesisViolated, start);
        report.witness = h.witness.clone();
        report.hypothesis = gate;
        return Ok(report);
    }
    let policy = carrier.policy();
    let mut x = x0;
    let mut orbit = Vec::new();
    let mut iterations = 0;
    let (verdict, residual) = loop {
        orbit.push(u.label(x).to_string());
        let tx = map.apply(x);
        let r = picard_residual(carrier, x, tx);
        if policy.is_zero(&r) {
            if policy.is_exact() && !map.is_fixed(x) {
                return Err(Error::Inconsistent(format!(
                    "zero residual at {} but T moves it; the carrier is not valid",
                    u.label(x)
                )));
            }
            break (FixedPointVerdict::Found, r);
        }
        if iterations == budget {
            break (FixedPointVerdict::BudgetExhausted, r);
        }
        x = tx;
        iterations += 1;
    };
    let mut report = FixedPointReport::new("picard", verdict, start);
    report.point = (verdict == FixedPointVerdict::Found).then(|| u.label(x).to_string());
    report.hypothesis = gate;
    report.iterations = iterations;
    report.residual = Some(residual);
    report.orbit = orbit;
    Ok(report)
}

fn g_gp_pair<S: Scalar>(gp: &GPMetric<S>, a: Point, b: Point) -> S {
    let v = gp.value(a, b, b);
    v.clone() + v - gp.value(a, a, a) - gp.value(b, b, b)
}

/// Caristi descent, gated by [`check_caristi_pair`].
///
/// Each step enumerates `A(x) = {z : GP(x,z,Tz) <= φ(x,Tx) - φ(z,Tz)}`,
/// takes `a(x)` as the exact minimum of `φ(z,Tz)` over it and moves to the
/// first admissible point attaining it. The run stops at the first `z` with
/// `GP(z,Tz,T²z) = 0`, which is then a fixed point.
pub fn caristi_descent_solve<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    phi: &PairPotential<S>,
    x0: Point,
    budget: usize,
) -> Result<FixedPointReport<S>> {
    let check = check_caristi_pair(gp, map, phi)?;
    if !check.holds {
        let mut report = FixedPointReport::new(
            "caristi-gp",
            FixedPointVerdict::HypothesisViolated,
            gp.universe().label(x0).to_string(),
        );
        report.witness = check.witness.clone();
        report.hypothesis = Some(check.without_rows());
        return Ok(report);
    }
    let mut report = descend(gp, map, phi, x0, budget, true)?;
    report.hypothesis = Some(check.without_rows());
    Ok(report)
}

/// [`caristi_descent_solve`] without the hypothesis gate. Stagnation or an
/// empty `A(x)` is reported as a violated hypothesis.
pub fn caristi_descent_unchecked<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    phi: &PairPotential<S>,
    x0: Point,
    budget: usize,
) -> Result<FixedPointReport<S>> {
    same_universe(gp.universe(), map.universe())?;
    same_universe(gp.universe(), phi.universe())?;
    phi.check_graph_coverage(map)?;
    descend(gp, map, phi, x0, budget, false)
}

fn descend<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    phi: &PairPotential<S>,
    x0: Point,
    budget: usize,
    checked: bool,
) -> Result<FixedPointReport<S>> {
    let u = gp.universe();
    u.check(x0)?;
    let policy = gp.policy();
    let phi_at = |z: Point| phi.on_graph(map, z);
    let mut report = FixedPointReport::new(
        "caristi-gp",
        FixedPointVerdict::BudgetExhausted,
        u.label(x0).to_string(),
    );
    let mut audit = DescentAudit::default();
    let mut visited: Vec<(Point, S)> = Vec::new();
    let mut x = x0;
    let mut n = 1usize;
    loop {
        let tx = map.apply(x);
        let ttx = map.apply(tx);
        let residual = gp.value(x, tx, ttx);
        let phi_x = phi_at(x);
        audit_step(gp, map, policy, &visited, x, &phi_x, &mut audit, u);
        visited.push((x, phi_x.clone()));
        let mut state = CaristiState {
            n,
            point: u.label(x).to_string(),
            phi: phi_x.clone(),
            residual: residual.clone(),
            admissible: Vec::new(),
            infimum: None,
            slack: S::ratio(1, n as i64),
            selected: None,
        };
        report.residual = Some(residual.clone());
        if policy.is_zero(&residual) {
            if !map.is_fixed(x) {
                return Err(Error::Inconsistent(format!(
                    "GP(z,Tz,T²z) = 0 at {} but T moves it; the carrier is not valid",
                    u.label(x)
                )));
            }
            report.descent.push(state);
            report.verdict = FixedPointVerdict::Found;
            report.point = Some(u.label(x).to_string());
            break;
        }
        if n > budget {
            report.descent.push(state);
            break;
        }
        let admissible: Vec<(Point, S)> = u
            .points()
            .filter_map(|z| {
                let pz = phi_at(z);
                policy
                    .le(&gp.value(x, z, map.apply(z)), &(phi_x.clone() - pz.clone()))
                    .then_some((z, pz))
            })
            .collect();
        if !admissible.iter().any(|(z, _)| *z == tx) {
            audit.admissibility_violations += 1;
            audit.flag(|| format!("T{} = {} is not admissible", u.label(x), u.label(tx)));
        }
        let Some((next, a)) = admissible
            .iter()
            .fold(None::<&(Point, S)>, |best, c| match best {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            })
            .cloned()
        else {
            if checked {
                return Err(Error::Inconsistent(format!(
                    "A({}) is empty although the pair condition holds",
                    u.label(x)
                )));
            }
            report.witness = Some(Witness::new(u, &[x], "A(x) is nonempty", &phi_x, &phi_x));
            report.verdict = FixedPointVerdict::HypothesisViolated;
            report.descent.push(state);
            break;
        };
        state.admissible = admissible
            .iter()
            .map(|(z, _)| u.label(*z).to_string())
            .collect();
        state.infimum = Some(a.clone());
        state.selected = Some(u.label(next).to_string());
        let slack = state.slack.clone();
        report.descent.push(state);
        if !policy.le(&a, &(a.clone() + slack)) {
            audit.slack_violations += 1;
        }
        if next == x {
            report.witness = Some(Witness::new(
                u,
                &[x],
                "x_{n+1} != x_n for a non-fixed x_n",
                &phi_x,
                &a,
            ));
            report.verdict = FixedPointVerdict::HypothesisViolated;
            break;
        }
        report.iterations += 1;
        x = next;
        n += 1;
    }
    audit.steps = visited.len();
    report.limit_value = visited.last().map(|(_, v)| v.clone());
    report.audit = Some(audit);
    Ok(report)
}

/// Checks the trace invariants between a new point `x_m` and every earlier
/// `x_n`.
#[allow(clippy::too_many_arguments)]
fn audit_step<S: Scalar>(
    gp: &GPMetric<S>,
    map: &SelfMap,
    policy: NumericPolicy,
    visited: &[(Point, S)],
    xm: Point,
    phi_m: &S,
    audit: &mut DescentAudit,
    u: &PointUniverse,
) {
    if let Some((prev, phi_prev)) = visited.last() {
        if !policy.le(phi_m, phi_prev) {
            audit.monotonicity_violations += 1;
            audit.flag(|| format!("φ increases from {} to {}", u.label(*prev), u.label(xm)));
        }
    }
    let txm = map.apply(xm);
    for (xn, phi_n) in visited {
        let bound = gp.value(*xn, xm, txm);
        if !policy.le(&bound, &(phi_n.clone() - phi_m.clone())) {
            audit.telescoping_violations += 1;
            audit.flag(|| {
                format!(
                    "telescoping bound fails for ({}, {})",
                    u.label(*xn),
                    u.label(xm)
                )
            });
        }
        let g = g_gp_pair(gp, *xn, xm);
        if !policy.le(&g, &(bound.clone() + bound)) {
            audit.domination_violations += 1;
            audit.flag(|| format!("domination fails for ({}, {})", u.label(*xn), u.label(xm)));
        }
    }
}

/// Result of the T-lower-semicontinuity probe on one witness trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlscCase<S> {
    pub limit: String,
    /// `φ(x, Tx)` at the limit.
    pub phi_at_limit: S,
    /// Smallest `φ(x_m, Tx_m)` over the tail.
    pub tail_liminf: S,
    pub holds: bool,
}

/// T-lower-semicontinuity checked on supplied traces only; a pass is
/// evidence, not a proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlscProbeReport<S> {
    pub label: String,
    pub holds: bool,
    pub cases: Vec<TlscCase<S>>,
}

/// For every `(trace, x)`: requires `x_n -> x` in GP and
/// `GP(x_n,x_m,Tx_m) -> GP(x,x,x)` on the tail, then checks
/// `φ(x,Tx) <= min over the tail of φ(x_m,Tx_m) + epsilon`.
pub fn t_lsc_probe<S: Scalar>(
    phi: &PairPotential<S>,
    map: &SelfMap,
    gp: &GPMetric<S>,
    witnesses: &[(SequenceTrace<S>, Point)],
) -> Result<TlscProbeReport<S>> {
    same_universe(gp.universe(), map.universe())?;
    same_universe(gp.universe(), phi.universe())?;
    phi.check_graph_coverage(map)?;
    let u = gp.universe();
    let policy = gp.policy();
    let mut cases = Vec::new();
    for (trace, x) in witnesses {
        let x = *x;
        let cert = gp_converges_to(trace, x, gp)?;
        if cert.verdict != Verdict::Certified {
            return Err(Error::PremiseFailed(format!(
                "trace does not GP-converge to {} ({})",
                u.label(x),
                cert.verdict
            )));
        }
        let eps = trace.epsilon().clone();
        let gxxx = gp.value(x, x, x);
        let tail: Vec<Point> = trace.tail().map(|(_, p)| p).collect();
        for &a in &tail {
            for &b in &tail {
                let d = gp.value(a, b, map.apply(b)).abs_diff(&gxxx);
                if !policy.le(&d, &eps) {
                    return Err(Error::PremiseFailed(format!(
                        "GP(x_n,x_m,Tx_m) stays {} away from GP(x,x,x) at ({}, {})",
                        d,
                        u.label(a),
                        u.label(b)
                    )));
                }
            }
        }
        let phi_limit = phi.on_graph(map, x);
        let liminf = tail
            .iter()
            .map(|&p| phi.on_graph(map, p))
            .fold(None::<S>, |m, v| {
                Some(m.map_or(v.clone(), |m| S::min_of(m, v)))
            })
            .expect("tail is nonempty");
        cases.push(TlscCase {
            limit: u.label(x).to_string(),
            holds: policy.le(&phi_limit, &(liminf.clone() + eps)),
            phi_at_limit: phi_limit,
            tail_liminf: liminf,
        });
    }
    Ok(TlscProbeReport {
        label: "probe".into(),
        holds: cases.iter().all(|c| c.holds),
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use crate::universe::Grid;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn max3(grid: &Grid<Rational>) -> GPMetric<Rational> {
        let v = grid.values().clone();
        GPMetric::from_fn(
            grid.universe().clone(),
            move |a, b, c| {
                Scalar::max_of(
                    Scalar::max_of(v[a.0].clone(), v[b.0].clone()),
                    v[c.0].clone(),
                )
            },
            NumericPolicy::exact(),
        )
        .unwrap()
    }

    fn max2(grid: &Grid<Rational>) -> PartialMetric<Rational> {
        let v = grid.values().clone();
        PartialMetric::from_fn(
            grid.universe().clone(),
            move |a, b| Scalar::max_of(v[a.0].clone(), v[b.0].clone()),
            NumericPolicy::exact(),
        )
        .unwrap()
    }

    fn spread(grid: &Grid<Rational>) -> GMetric<Rational> {
        let v = grid.values().clone();
        GMetric::from_fn(
            grid.universe().clone(),
            move |a, b, c| {
                let (x, y, z) = (v[a.0].clone(), v[b.0].clone(), v[c.0].clone());
                Scalar::max_of(x.clone(), y.clone())
                    + Scalar::max_of(x.clone(), z.clone())
                    + Scalar::max_of(y.clone(), z.clone())
                    - x
                    - y
                    - z
            },
            NumericPolicy::exact(),
        )
        .unwrap()
    }

    fn pair_sum(grid: &Grid<Rational>) -> PairPotential<Rational> {
        let v = grid.values().clone();
        PairPotential::from_fn(grid.universe().clone(), move |a, b| {
            q(2, 1) * (v[a.0].clone() + v[b.0].clone())
        })
    }

    fn half() -> ContractionGauge<Rational> {
        ContractionGauge::linear(q(1, 2)).unwrap()
    }

    #[test]
    fn weak_contraction_examples() {
        let grid = Grid::<Rational>::dyadic(8).unwrap();
        let g = spread(&grid);
        let quarter = SelfMap::scale_on_grid(&grid, q(1, 4));
        assert!(
            check_weak_g_contraction(&g, &quarter, &half())
                .unwrap()
                .holds
        );
        let zero = grid.point_at(&q(0, 1)).unwrap();
        let constant = SelfMap::constant(grid.universe().clone(), zero).unwrap();
        assert!(
            check_weak_g_contraction(&g, &constant, &half())
                .unwrap()
                .holds
        );

        let u = PointUniverse::finite(["a", "b"]).unwrap();
        let g2 = GMetric::from_fn(
            u.clone(),
            |x, y, z| if x == y && y == z { q(0, 1) } else { q(1, 1) },
            NumericPolicy::exact(),
        )
        .unwrap();
        let r = check_weak_g_contraction(&g2, &SelfMap::identity(u), &half()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness.unwrap().points, vec!["a", "b"]);
    }

    #[test]
    fn partial_weak_contraction_matches_g_route_and_six_terms() {
        let grid = Grid::<Rational>::dyadic(6).unwrap();
        let p = max2(&grid);
        let quarter = SelfMap::scale_on_grid(&grid, q(1, 4));
        let via_partial = check_partial_weak_contraction(&p, &quarter, &half()).unwrap();
        let g = transforms::partial_to_g(&p).unwrap();
        let via_g = check_weak_g_contraction(&g, &quarter, &half()).unwrap();
        assert_eq!(via_partial.holds, via_g.holds);
        assert_eq!(via_partial.witness, via_g.witness);

        // The six-term form omits -p(Tx,Tx) on both sides (outside the
        // gauge), so it matches the G_p inequality pair by pair.
        let t = &quarter;
        let gauge = half();
        for x in grid.universe().points() {
            for y in grid.universe().points() {
                let (tx, ttx, ty) = (t.apply(x), t.apply(t.apply(x)), t.apply(y));
                let lhs = p.value(tx, ttx) + p.value(tx, ty) + p.value(ttx, ty)
                    - p.value(ttx, ttx)
                    - p.value(ty, ty);
                let inner = p.value(x, tx) + p.value(x, y) + p.value(tx, y)
                    - p.value(x, x)
                    - p.value(y, y)
                    - p.value(tx, tx);
                let rhs = p.value(x, tx) + p.value(x, y) + p.value(tx, y)
                    - p.value(x, x)
                    - p.value(y, y)
                    - gauge.apply(&inner);
                let g_lhs = g.value(tx, ttx, ty);
                let g_arg = g.value(x, tx, y);
                let g_rhs = g_arg.clone() - gauge.apply(&g_arg);
                assert_eq!(lhs.clone() - p.value(tx, tx), g_lhs.clone());
                assert_eq!(inner, g_arg);
                assert_eq!(lhs <= rhs, g_lhs <= g_rhs);
            }
        }

        let identity = SelfMap::identity(grid.universe().clone());
        assert!(
            !check_partial_weak_contraction(&p, &identity, &half())
                .unwrap()
                .holds
        );
    }

    #[test]
    fn picard_examples() {
        let grid = Grid::<Rational>::dyadic(10).unwrap();
        let g = spread(&grid);
        let quarter = SelfMap::scale_on_grid(&grid, q(1, 4));
        let one = grid.point_at(&q(1, 1)).unwrap();
        let gauge = half();
        let r = picard_solve(
            &Carrier::G(g),
            &quarter,
            one,
            50,
            PicardHypothesis::WeakContraction(&gauge),
        )
        .unwrap();
        assert!(r.found());
        assert_eq!(r.point.as_deref(), Some("0"));
        assert_eq!(r.orbit[..3], ["1", "1/4", "1/16"]);

        let identity = SelfMap::identity(grid.universe().clone());
        let p = max2(&grid);
        // p(x,x) > 0 off zero, but the p^s residual is 0 at a fixed point.
        let r = picard_solve(
            &Carrier::Partial(p),
            &identity,
            one,
            5,
            PicardHypothesis::Unchecked,
        )
        .unwrap();
        assert_eq!((r.point.as_deref(), r.iterations), (Some("1"), 0));

        let u = PointUniverse::finite(["a", "b", "c"]).unwrap();
        let cycle = SelfMap::from_pairs(
            u.clone(),
            [
                (Point(0), Point(1)),
                (Point(1), Point(2)),
                (Point(2), Point(0)),
            ],
        )
        .unwrap();
        let g = GMetric::from_fn(
            u,
            |x, y, z| if x == y && y == z { q(0, 1) } else { q(1, 1) },
            NumericPolicy::exact(),
        )
        .unwrap();
        let r = picard_solve(
            &Carrier::G(g.clone()),
            &cycle,
            Point(0),
            7,
            PicardHypothesis::Unchecked,
        )
        .unwrap();
        assert_eq!(
            (r.verdict, r.iterations),
            (FixedPointVerdict::BudgetExhausted, 7)
        );
        let r = picard_solve(
            &Carrier::G(g),
            &cycle,
            Point(0),
            7,
            PicardHypothesis::WeakContraction(&gauge),
        )
        .unwrap();
        assert_eq!(r.verdict, FixedPointVerdict::HypothesisViolated);
        assert!(brute_force_fixed_points(&cycle).is_empty());
    }

    #[test]
    fn caristi_point_checks() {
        let grid = Grid::<Rational>::dyadic(8).unwrap();
        let p = max2(&grid);
        let gp = max3(&grid);
        let halve = SelfMap::scale_on_grid(&grid, q(1, 2));
        let v = grid.values().clone();
        let double =
            PointPotential::from_fn(grid.universe().clone(), |x| q(2, 1) * v[x.0].clone()).unwrap();
        assert!(check_partial_caristi(&p, &halve, &double).unwrap().holds);
        assert!(check_gp_caristi(&gp, &halve, &double).unwrap().holds);
        let identity = SelfMap::identity(grid.universe().clone());
        let r = check_gp_caristi(&gp, &identity, &double).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness.unwrap().points, vec!["1/256"]);
        let zero = PointPotential::from_fn(grid.universe().clone(), |_| q(0, 1)).unwrap();
        assert!(!check_partial_caristi(&p, &halve, &zero).unwrap().holds);
        let p_gp = transforms::gp_to_partial(&gp).unwrap();
        assert_eq!(
            check_partial_caristi(&p_gp, &halve, &double).unwrap().rows,
            check_gp_caristi(&gp, &halve, &double).unwrap().rows
        );
    }

    #[test]
    fn caristi_descent_on_small_dyadic_grid() {
        let grid = Grid::<Rational>::dyadic(6).unwrap();
        let gp = max3(&grid);
        let halve = SelfMap::scale_on_grid(&grid, q(1, 2));
        let phi = pair_sum(&grid);
        let check = check_caristi_pair(&gp, &halve, &phi).unwrap();
        assert!(check.holds);
        let one = grid.point_at(&q(1, 1)).unwrap();
        let r = caristi_descent_solve(&gp, &halve, &phi, one, 100).unwrap();
        assert!(r.found(), "{r}");
        assert_eq!(r.point.as_deref(), Some("0"));
        assert!(r.audit.as_ref().unwrap().clean(), "{r}");
        assert_eq!(r.limit_value, Some(q(0, 1)));
        assert_eq!(
            brute_force_fixed_points(&halve),
            vec![grid.point_at(&q(0, 1)).unwrap()]
        );
    }

    #[test]
    fn caristi_descent_identity_and_violations() {
        let u = PointUniverse::finite(["a", "b"]).unwrap();
        let gp = GPMetric::from_fn(
            u.clone(),
            |x, y, z| if x == y && y == z { q(0, 1) } else { q(1, 1) },
            NumericPolicy::exact(),
        )
        .unwrap();
        let phi = PairPotential::from_fn(u.clone(), |_, _| q(1, 1));
        let id = SelfMap::identity(u.clone());
        let r = caristi_descent_solve(&gp, &id, &phi, Point(1), 10).unwrap();
        assert_eq!((r.point.as_deref(), r.iterations), (Some("b"), 0));

        let swap =
            SelfMap::from_pairs(u.clone(), [(Point(0), Point(1)), (Point(1), Point(0))]).unwrap();
        let r = caristi_descent_solve(&gp, &swap, &phi, Point(0), 10).unwrap();
        assert_eq!(r.verdict, FixedPointVerdict::HypothesisViolated);
        assert!(r.witness.is_some());
        let r = caristi_descent_unchecked(&gp, &swap, &phi, Point(0), 10).unwrap();
        assert_eq!(r.verdict, FixedPointVerdict::HypothesisViolated);
    }

    #[test]
    fn t_lsc_examples() {
        let n = 80usize;
        let grid = Grid::<Rational>::harmonic(2 * n).unwrap();
        let gp = max3(&grid);
        let halve = SelfMap::scale_on_grid(&grid, q(1, 2));
        let zero = grid.point_at(&q(0, 1)).unwrap();
        let points: Vec<Point> = (1..=n as i64)
            .map(|k| grid.point_at(&q(1, k)).unwrap())
            .collect();
        let trace = SequenceTrace::new(grid.universe().clone(), points, 60, q(1, 20)).unwrap();
        let phi = pair_sum(&grid);
        let r = t_lsc_probe(&phi, &halve, &gp, &[(trace.clone(), zero)]).unwrap();
        assert!(r.holds);
        assert_eq!(r.label, "probe");
        assert_eq!(r.cases[0].phi_at_limit, q(0, 1));

        let v = grid.values().clone();
        let jump = PairPotential::from_fn(grid.universe().clone(), move |a, b| {
            if v[a.0].is_zero() {
                q(1, 1)
            } else {
                q(2, 1) * (v[a.0].clone() + v[b.0].clone())
            }
        });
        let r = t_lsc_probe(&jump, &halve, &gp, &[(trace.clone(), zero)]).unwrap();
        assert!(!r.holds);

        let fixed =
            SequenceTrace::new(grid.universe().clone(), vec![zero; 4], 1, q(1, 20)).unwrap();
        assert!(
            t_lsc_probe(&phi, &halve, &gp, &[(fixed, zero)])
                .unwrap()
                .holds
        );

        let one = grid.point_at(&q(1, 1)).unwrap();
        assert!(matches!(
            t_lsc_probe(&phi, &halve, &gp, &[(trace, one)]),
            Err(Error::PremiseFailed(_))
        ));
    }
}
