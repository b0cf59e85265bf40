//! `gpmetric`: validate, convert, certify and solve on table documents.
//!
//! Exit codes: 0 when the report passes (valid, certified, found), 1 when it
//! fails, 2 on usage, file or load errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use gpmetric::carrier::Carrier;
use gpmetric::convergence::{self, Verdict};
use gpmetric::document::{self, DocEntry, TableDocument};
use gpmetric::example_spaces;
use gpmetric::fixed_point::{self, PicardHypothesis};
use gpmetric::transforms;
use gpmetric::validate;
use gpmetric::{
    ContractionGauge, Grid, NumericPolicy, PairPotential, Point, PointUniverse, Rational, Scalar,
    SelfMap, SequenceTrace,
};

#[derive(Parser, Debug)]
#[command(
    name = "gpmetric",
    version,
    about = "Partial, G- and GP-metric tables: validation, transforms, certificates and fixed points"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Load tables in floating mode with this comparison tolerance instead
    /// of exact rational mode.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    G,
    Partial,
    Metric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    Picard,
    CaristiGp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExampleKind {
    Baire,
    Maxg,
    Maxp,
    Maxgp,
    RandomP,
    RandomGp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a table against the axioms of its kind.
    Validate {
        file: PathBuf,
        /// Check this many random tuples instead of all of them.
        #[arg(long)]
        sampled: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply a transform and emit the resulting table document.
    Convert {
        #[arg(long, value_enum)]
        to: Target,
        file: PathBuf,
        /// Also check the transform identities; the summary goes to stderr
        /// unless the document is written with --output.
        #[arg(long)]
        check_identity: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Certify a finite trace as Cauchy, or as convergent to --limit.
    Certify {
        /// JSON trace: {"points": [...], "epsilon": "1/100", "window": 5}.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        limit: Option<String>,
        /// Also run the cross-structure equivalence harness.
        #[arg(long)]
        harness: bool,
        space: PathBuf,
    },
    /// List the open ball of radius --radius around --center.
    Ball {
        space: PathBuf,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: String,
        /// Exit 1 unless this point is in the ball.
        #[arg(long)]
        contains: Option<String>,
    },
    /// Run a fixed-point solver.
    Fixedpoint {
        #[arg(long, value_enum)]
        solver: Solver,
        #[arg(long)]
        space: PathBuf,
        /// Map file, or inline `a=b,b=b`, or `scale:q` on a numeric grid.
        /// Defaults to the `map` field of the space document.
        #[arg(long)]
        map: Option<String>,
        /// Pair potential file. Defaults to the `phi` field of the space
        /// document.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Start point; defaults to the first point of the space.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Gate Picard on the weak contraction with gauge `t -> q t`.
        #[arg(long)]
        gauge: Option<String>,
    },
    /// Emit a built-in or generated table document.
    Example {
        #[arg(value_enum)]
        which: ExampleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Word length (baire), grid depth (max family) or point count
        /// (random).
        #[arg(long)]
        n: Option<usize>,
        /// Attach a map and pair potential satisfying the Caristi
        /// condition (maxgp, random-gp).
        #[arg(long)]
        caristi: bool,
    },
    /// Check the transform identities of a partial or GP table.
    CheckIdentity { file: PathBuf },
}

/// A rendered report and whether it passes.
struct Outcome {
    pass: bool,
    text: String,
    json: Value,
}

impl Outcome {
    fn new<T: Serialize>(pass: bool, text: String, report: &T) -> anyhow::Result<Self> {
        Ok(Outcome {
            pass,
            text,
            json: serde_json::to_value(report)?,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    points: Vec<String>,
    epsilon: Value,
    window: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MapFile {
    Pairs(Vec<[String; 2]>),
    Wrapped { map: Vec<[String; 2]> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PhiFile {
    Entries(Vec<DocEntry>),
    Wrapped { phi: Vec<DocEntry> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let rendered = match cli.format {
                Format::Text => outcome.text,
                Format::Json => match serde_json::to_string_pretty(&outcome.json) {
                    Ok(s) => s + "\n",
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
            };
            // A closed pipe downstream does not change the verdict.
            let _ = std::io::stdout().lock().write_all(rendered.as_bytes());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Command::Example {
        which,
        seed,
        n,
        caristi,
    } = &cli.command
    {
        let doc = example(*which, *seed, *n, *caristi)?;
        return document_outcome(&doc);
    }
    match cli.tolerance {
        None => execute::<Rational>(&cli.command, NumericPolicy::exact()),
        Some(t) => execute::<f64>(&cli.command, NumericPolicy::floating(t)?),
    }
}

fn document_outcome(doc: &TableDocument) -> anyhow::Result<Outcome> {
    let text = doc.to_json_pretty()? + "\n";
    Outcome::new(true, text, doc)
}

fn read_document(path: &Path) -> anyhow::Result<TableDocument> {
    TableDocument::read(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_scalar<S: Scalar>(text: &str) -> anyhow::Result<S> {
    S::from_json(&Value::String(text.to_string()))
        .with_context(|| format!("parsing number `{text}`"))
}

fn execute<S: Scalar>(command: &Command, policy: NumericPolicy) -> anyhow::Result<Outcome> {
    match command {
        Command::Validate {
            file,
            sampled,
            seed,
        } => {
            let carrier = document::load_carrier_as::<S>(&read_document(file)?, policy)?;
            let report = validate_carrier(&carrier, *sampled, *seed);
            Outcome::new(report.all_pass(), report.to_string(), &report)
        }
        Command::Convert {
            to,
            file,
            check_identity,
            output,
        } => convert::<S>(*to, file, *check_identity, output.as_deref(), policy),
        Command::CheckIdentity { file } => {
            let carrier = document::load_carrier_as::<S>(&read_document(file)?, policy)?;
            let checks = identities(&carrier)?;
            let pass = checks.iter().all(|c| c.holds);
            Outcome::new(pass, identity_text(&checks), &checks)
        }
        Command::Certify {
            trace,
            limit,
            harness,
            space,
        } => certify::<S>(trace, limit.as_deref(), *harness, space, policy),
        Command::Ball {
            space,
            center,
            radius,
            contains,
        } => {
            let carrier = document::load_carrier_as::<S>(&read_document(space)?, policy)?;
            let u = carrier.universe().clone();
            let x0 = u.point(center)?;
            let eps: S = parse_scalar(radius)?;
            let members: Vec<String> = convergence::ball(&carrier, x0, &eps)?
                .into_iter()
                .map(|p| u.label(p).to_string())
                .collect();
            let pass = match contains {
                Some(y) => {
                    u.point(y)?;
                    members.iter().any(|m| m == y)
                }
                None => true,
            };
            let text = format!("ball({center}, {eps}) = {{{}}}\n", members.join(", "));
            let report = serde_json::json!({ "center": center, "radius": eps.to_json(), "members": members });
            Outcome::new(pass, text, &report)
        }
        Command::Fixedpoint {
            solver,
            space,
            map,
            phi,
            x0,
            budget,
            gauge,
        } => fixedpoint::<S>(
            *solver,
            space,
            map.as_deref(),
            phi.as_deref(),
            x0.as_deref(),
            *budget,
            gauge.as_deref(),
            policy,
        ),
        Command::Example { .. } => unreachable!("handled before numeric dispatch"),
    }
}

fn validate_carrier<S: Scalar>(
    carrier: &Carrier<S>,
    sampled: Option<usize>,
    seed: u64,
) -> validate::ValidationReport {
    match (carrier, sampled) {
        (Carrier::Partial(p), None) => validate::validate_partial(p),
        (Carrier::Partial(p), Some(n)) => validate::validate_partial_sampled(p, n, seed),
        (Carrier::G(g), None) => validate::validate_g(g).extend(validate::validate_g_symmetry(g)),
        (Carrier::G(g), Some(n)) => {
            validate::validate_g_sampled(g, n, seed).extend(validate::validate_g_symmetry(g))
        }
        (Carrier::Gp(gp), None) => validate::validate_gp(gp),
        (Carrier::Gp(gp), Some(n)) => validate::validate_gp_sampled(gp, n, seed),
    }
}

fn identities<S: Scalar>(carrier: &Carrier<S>) -> anyhow::Result<Vec<transforms::IdentityCheck>> {
    Ok(match carrier {
        Carrier::Partial(p) => transforms::check_partial_identities(p)?,
        Carrier::Gp(gp) => transforms::check_gp_identities(gp)?,
        Carrier::G(_) => bail!("identities are defined for partial and GP tables, not G tables"),
    })
}

fn identity_text(checks: &[transforms::IdentityCheck]) -> String {
    let mut out = String::new();
    for c in checks {
        out += &format!(
            "{}: {} on {} keys, max discrepancy {}",
            c.identity,
            if c.holds { "holds" } else { "FAILS" },
            c.keys_checked,
            c.max_discrepancy
        );
        if let Some(k) = &c.first_mismatch {
            out += &format!(", first mismatch at ({})", k.join(","));
        }
        out.push('\n');
    }
    out
}

fn convert<S: Scalar>(
    to: Target,
    file: &Path,
    check_identity: bool,
    output: Option<&Path>,
    policy: NumericPolicy,
) -> anyhow::Result<Outcome> {
    let carrier = document::load_carrier_as::<S>(&read_document(file)?, policy)?;
    let doc = match (&carrier, to) {
        (Carrier::Partial(p), Target::G) => document::g_document(&transforms::partial_to_g(p)?),
        (Carrier::Partial(p), Target::Metric) => {
            document::partial_document(&transforms::induced_metric(p)?)
        }
        (Carrier::G(g), Target::Metric) => document::partial_document(&transforms::g_to_metric(g)?),
        (Carrier::Gp(gp), Target::G) => document::g_document(&transforms::gp_to_g(gp)?),
        (Carrier::Gp(gp), Target::Partial) => {
            document::partial_document(&transforms::gp_to_partial(gp)?)
        }
        (Carrier::Gp(gp), Target::Metric) => document::partial_document(
            &transforms::induced_metric(&transforms::gp_to_partial(gp)?)?,
        ),
        (c, t) => bail!("no transform from a {} table to {t:?}", c.kind()),
    };
    let checks = if check_identity {
        Some(identities(&carrier)?)
    } else {
        None
    };
    let pass = checks.as_ref().is_none_or(|c| c.iter().all(|c| c.holds));
    match output {
        Some(path) => {
            std::fs::write(path, doc.to_json_pretty()? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            let checks = checks.unwrap_or_default();
            let text = format!(
                "wrote {} table to {}\n{}",
                doc.kind,
                path.display(),
                identity_text(&checks)
            );
            Outcome::new(pass, text, &checks)
        }
        None => {
            if let Some(c) = &checks {
                eprint!("{}", identity_text(c));
            }
            Ok(Outcome {
                pass,
                ..document_outcome(&doc)?
            })
        }
    }
}

fn certify<S: Scalar>(
    trace_path: &Path,
    limit: Option<&str>,
    harness: bool,
    space: &Path,
    policy: NumericPolicy,
) -> anyhow::Result<Outcome> {
    let carrier = document::load_carrier_as::<S>(&read_document(space)?, policy)?;
    let text = std::fs::read_to_string(trace_path)
        .with_context(|| format!("reading {}", trace_path.display()))?;
    let file: TraceFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", trace_path.display()))?;
    let labels: Vec<&str> = file.points.iter().map(String::as_str).collect();
    let trace = SequenceTrace::from_labels(
        carrier.universe().clone(),
        &labels,
        file.window,
        S::from_json(&file.epsilon)?,
    )?;

    let mut text = String::new();
    let mut report = serde_json::Map::new();
    let mut pass;
    match limit {
        None => {
            let cert = convergence::cauchy(&trace, &carrier)?;
            pass = cert.verdict == Verdict::Certified;
            push_block(&mut text, &cert);
            report.insert("cauchy".into(), serde_json::to_value(&cert)?);
        }
        Some(x) => {
            let x = carrier.universe().point(x)?;
            let cert = match &carrier {
                Carrier::Partial(p) => convergence::p_converges_to(&trace, x, p)?,
                Carrier::Gp(gp) => convergence::gp_converges_to(&trace, x, gp)?,
                Carrier::G(_) => bail!("--limit needs a partial or GP table"),
            };
            pass = cert.verdict == Verdict::Certified;
            push_block(&mut text, &cert);
            report.insert("convergence".into(), serde_json::to_value(&cert)?);
            if harness {
                let limits = match &carrier {
                    Carrier::Partial(p) => {
                        convergence::partial_limit_equivalence_check(&trace, x, p)?
                    }
                    Carrier::Gp(gp) => convergence::limit_equivalence_check(&trace, x, gp)?,
                    Carrier::G(_) => unreachable!(),
                };
                pass &= limits.holds();
                push_block(&mut text, &limits);
                report.insert("limit_equivalence".into(), serde_json::to_value(&limits)?);
            }
        }
    }
    if harness {
        let eq = convergence::equivalence_harness(&trace, &carrier)?;
        pass &= eq.holds();
        push_block(&mut text, &eq);
        report.insert("equivalence".into(), serde_json::to_value(&eq)?);
    }
    Outcome::new(pass, text, &report)
}

/// Appends a report, ending it with a newline.
fn push_block(text: &mut String, block: &impl std::fmt::Display) {
    let s = block.to_string();
    text.push_str(&s);
    if !s.ends_with('\n') {
        text.push('\n');
    }
}

fn load_map_arg(
    spec: Option<&str>,
    doc: &TableDocument,
    universe: &std::sync::Arc<PointUniverse>,
) -> anyhow::Result<SelfMap> {
    let Some(spec) = spec else {
        return document::load_map(doc, universe)?
            .ok_or_else(|| anyhow!("no --map given and the space has no `map` field"));
    };
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        let pairs = match serde_json::from_str::<MapFile>(&text) {
            Ok(MapFile::Pairs(p)) | Ok(MapFile::Wrapped { map: p }) => p,
            Err(_) => {
                let d = TableDocument::from_json_str(&text)
                    .with_context(|| format!("parsing {spec}"))?;
                d.map.ok_or_else(|| anyhow!("{spec} has no `map` field"))?
            }
        };
        let wrapped = TableDocument {
            map: Some(pairs),
            ..doc.clone()
        };
        return Ok(document::load_map(&wrapped, universe)?.expect("map present"));
    }
    if let Some(factor) = spec.strip_prefix("scale:") {
        let factor: Rational = parse_scalar(factor)?;
        let values = universe
            .labels()
            .iter()
            .map(|l| parse_scalar::<Rational>(l))
            .collect::<anyhow::Result<Vec<_>>>()
            .context("scale maps need numeric point labels")?;
        let grid = Grid::new(values.clone())?;
        let scaled = SelfMap::scale_on_grid(&grid, factor);
        let back = |v: &Rational| Point(values.iter().position(|w| w == v).expect("grid value"));
        let pairs = universe.points().map(|p| {
            let q = scaled.apply(grid.point_at(&values[p.0]).expect("grid value"));
            (p, back(grid.value(q)))
        });
        return Ok(SelfMap::from_pairs(
            universe.clone(),
            pairs.collect::<Vec<_>>(),
        )?);
    }
    let mut pairs = Vec::new();
    for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (a, b) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("inline map entries look like `a=b`, got `{part}`"))?;
        pairs.push((universe.point(a.trim())?, universe.point(b.trim())?));
    }
    Ok(SelfMap::from_pairs(universe.clone(), pairs)?)
}

fn load_phi_arg<S: Scalar>(
    path: Option<&Path>,
    doc: &TableDocument,
    universe: &std::sync::Arc<PointUniverse>,
) -> anyhow::Result<PairPotential<S>> {
    let source = match path {
        None => doc.clone(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let entries = match serde_json::from_str::<PhiFile>(&text) {
                Ok(PhiFile::Entries(e)) | Ok(PhiFile::Wrapped { phi: e }) => e,
                Err(_) => TableDocument::from_json_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
                    .phi
                    .ok_or_else(|| anyhow!("{} has no `phi` field", path.display()))?,
            };
            TableDocument {
                phi: Some(entries),
                ..doc.clone()
            }
        }
    };
    document::load_pair_potential(&source, universe)?
        .ok_or_else(|| anyhow!("no --phi given and the space has no `phi` field"))
}

#[allow(clippy::too_many_arguments)]
fn fixedpoint<S: Scalar>(
    solver: Solver,
    space: &Path,
    map: Option<&str>,
    phi: Option<&Path>,
    x0: Option<&str>,
    budget: usize,
    gauge: Option<&str>,
    policy: NumericPolicy,
) -> anyhow::Result<Outcome> {
    let doc = read_document(space)?;
    let carrier = document::load_carrier_as::<S>(&doc, policy)?;
    let universe = carrier.universe().clone();
    let map = load_map_arg(map, &doc, &universe)?;
    let x0 = match x0 {
        Some(l) => universe.point(l)?,
        None => Point(0),
    };
    let report = match solver {
        Solver::Picard => match gauge {
            Some(q) => {
                let gauge = ContractionGauge::linear(parse_scalar::<S>(q)?)?;
                fixed_point::picard_solve(
                    &carrier,
                    &map,
                    x0,
                    budget,
                    PicardHypothesis::WeakContraction(&gauge),
                )?
            }
            None => {
                fixed_point::picard_solve(&carrier, &map, x0, budget, PicardHypothesis::Unchecked)?
            }
        },
        Solver::CaristiGp => {
            let Carrier::Gp(gp) = &carrier else {
                bail!("caristi-gp needs a GP table, got {}", carrier.kind());
            };
            let phi = load_phi_arg::<S>(phi, &doc, &universe)?;
            fixed_point::caristi_descent_solve(gp, &map, &phi, x0, budget)?
        }
    };
    Outcome::new(report.found(), report.to_string(), &report)
}

const DEFAULT_WORD_LENGTH: usize = 3;
const DEFAULT_GRID_DEPTH: usize = 20;
const DEFAULT_RANDOM_POINTS: usize = 6;

fn example(
    which: ExampleKind,
    seed: u64,
    n: Option<usize>,
    caristi: bool,
) -> anyhow::Result<TableDocument> {
    if caristi && !matches!(which, ExampleKind::Maxgp | ExampleKind::RandomGp) {
        bail!("--caristi applies to maxgp and random-gp");
    }
    let depth = || -> anyhow::Result<Grid<Rational>> {
        let d = n.unwrap_or(DEFAULT_GRID_DEPTH);
        if d > 60 {
            bail!("grid depth {d} is too large");
        }
        Ok(Grid::dyadic(d as u32)?)
    };
    let points = n.unwrap_or(DEFAULT_RANDOM_POINTS);
    Ok(match which {
        ExampleKind::Baire => {
            let words =
                example_spaces::WordUniverse::full(&['a', 'b'], n.unwrap_or(DEFAULT_WORD_LENGTH))?;
            document::g_document(&example_spaces::baire_g(&words)?)
        }
        ExampleKind::Maxg => document::g_document(&example_spaces::max_combination_g(&depth()?)?),
        ExampleKind::Maxp => document::partial_document(&example_spaces::max_partial(&depth()?)?),
        ExampleKind::Maxgp => {
            let grid = depth()?;
            let doc = document::gp_document(&example_spaces::max_gp(&grid)?);
            if caristi {
                let map = SelfMap::scale_on_grid(&grid, Rational::new(1, 2));
                let values = grid.values().clone();
                let two = Rational::from_integer(2);
                let phi = PairPotential::from_table(
                    grid.universe().clone(),
                    map.pairs()
                        .map(|(x, tx)| {
                            (
                                (x, tx),
                                two.clone() * (values[x.0].clone() + values[tx.0].clone()),
                            )
                        })
                        .collect::<Vec<_>>(),
                )?;
                doc.with_map(&map).with_pair_potential(&phi)
            } else {
                doc
            }
        }
        ExampleKind::RandomP => {
            document::partial_document(&example_spaces::random_partial(seed, points)?)
        }
        ExampleKind::RandomGp => {
            if caristi {
                let (gp, map, phi) = example_spaces::random_caristi_instance(seed, points)?;
                document::gp_document(&gp)
                    .with_map(&map)
                    .with_pair_potential(&phi)
            } else {
                document::gp_document(&example_spaces::random_gp(seed, points)?)
            }
        }
    })
}
