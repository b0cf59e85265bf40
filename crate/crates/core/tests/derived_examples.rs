//! Worked examples whose expected values are computed here by direct
//! arithmetic, independently of the library code under test.

mod common;

use gpmetric::carrier::Carrier;
use gpmetric::convergence::{self, Verdict};
use gpmetric::example_spaces::{self, WordUniverse};
use gpmetric::fixed_point::{self, PicardHypothesis};
use gpmetric::transforms;
use gpmetric::validate::{self, Axiom};
use gpmetric::{
    ContractionGauge, Grid, NumericPolicy, PairPotential, Point, PointPotential, Rational, SelfMap,
    SequenceTrace,
};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn grid(values: &[Rational]) -> Grid<Rational> {
    Grid::new(values.to_vec()).unwrap()
}

fn max2(a: &Rational, b: &Rational) -> Rational {
    if a > b {
        a.clone()
    } else {
        b.clone()
    }
}

fn max3(a: &Rational, b: &Rational, c: &Rational) -> Rational {
    max2(&max2(a, b), c)
}

fn min3(a: &Rational, b: &Rational, c: &Rational) -> Rational {
    let m = if a < b { a.clone() } else { b.clone() };
    if c < &m {
        c.clone()
    } else {
        m
    }
}

fn pt(g: &Grid<Rational>, v: Rational) -> Point {
    g.point_at(&v).unwrap()
}

fn trace(
    g: &Grid<Rational>,
    values: &[Rational],
    window: usize,
    eps: Rational,
) -> SequenceTrace<Rational> {
    let pts = values.iter().map(|v| pt(g, v.clone())).collect();
    SequenceTrace::new(g.universe().clone(), pts, window, eps).unwrap()
}

fn harmonic_values(n: i64) -> Vec<Rational> {
    (1..=n).map(|k| q(1, k)).collect()
}

#[test]
fn max_carriers_evaluate_to_max() {
    let g = grid(&[int(0), int(1), int(3)]);
    let p = example_spaces::max_partial(&g).unwrap();
    let (one, three) = (pt(&g, int(1)), pt(&g, int(3)));
    assert_eq!(p.value(one, three), max2(&int(1), &int(3)));
    assert_eq!(p.value(three, one), int(3));
    assert!(validate::validate_partial(&p).all_pass());
    assert!(common::partial_valid(&common::dense_pairs(&p)));

    let g = grid(&[int(1), int(2), int(3)]);
    let gp = example_spaces::max_gp(&g).unwrap();
    let [a, b, c] = [pt(&g, int(1)), pt(&g, int(2)), pt(&g, int(3))];
    assert_eq!(gp.value(a, b, c), max3(&int(1), &int(2), &int(3)));
    assert_eq!(gp.value(c, a, b), int(3));
}

#[test]
fn max_combination_carrier_and_g5_witness() {
    let values = [int(0), int(1), int(2), int(5)];
    let g = grid(&values);
    let carrier = example_spaces::max_combination_g(&g).unwrap();
    assert!(validate::validate_g(&carrier).all_pass());
    assert!(common::g_valid(&common::dense_g(&carrier)));

    // Both forms of the formula agree on every triple.
    for x in &values {
        for y in &values {
            for z in &values {
                let sum = max2(x, y) + max2(x, z) + max2(y, z) - x.clone() - y.clone() - z.clone();
                assert_eq!(sum, max3(x, y, z) - min3(x, y, z));
                assert_eq!(
                    carrier.value(pt(&g, x.clone()), pt(&g, y.clone()), pt(&g, z.clone())),
                    sum
                );
            }
        }
    }

    let (one, two) = (pt(&g, int(1)), pt(&g, int(2)));
    let entries = carrier.entries().into_iter().map(|(k, v)| {
        if k == [one, two, two] {
            (k, int(100))
        } else {
            (k, v)
        }
    });
    let broken =
        gpmetric::GMetric::from_table(g.universe().clone(), entries, NumericPolicy::exact())
            .unwrap();
    let report = validate::validate_g(&broken);
    assert!(!report.passes(Axiom::G5));
    let w = report.witness(Axiom::G5).unwrap();
    assert!(w.lhs.parse::<Rational>().unwrap() > w.rhs.parse::<Rational>().unwrap());
    assert!(!common::g_valid(&common::dense_g(&broken)));
}

#[test]
fn transform_formulas_on_max() {
    let g = grid(&[int(0), int(1), int(2), int(3), int(5), int(8)]);
    let p = example_spaces::max_partial(&g).unwrap();
    let gp_of_p = transforms::partial_to_g(&p).unwrap();
    let (one, two, three) = (pt(&g, int(1)), pt(&g, int(2)), pt(&g, int(3)));
    // 3 + 3 + 3 - 1 - 3 - 3
    assert_eq!(
        gp_of_p.value(one, three, three),
        int(3) + int(3) + int(3) - int(1) - int(3) - int(3)
    );
    assert_eq!(gp_of_p.value(one, three, three), int(2));
    // 2 * 3 - 1 - 3
    assert_eq!(
        transforms::induced_metric(&p).unwrap().value(one, three),
        int(2) * int(3) - int(1) - int(3)
    );

    let g24 = example_spaces::max_combination_g(&g).unwrap();
    assert_eq!(
        transforms::g_to_metric(&g24).unwrap().value(one, three),
        g24.value(one, three, three)
    );
    assert_eq!(g24.value(one, three, three), int(2));
    assert!(common::g_matches(
        &g24,
        &common::g_of_partial(&common::dense_pairs(&p))
    ));

    let gp = example_spaces::max_gp(&g).unwrap();
    let p_gp = transforms::gp_to_partial(&gp).unwrap();
    for x in g.universe().points() {
        for y in g.universe().points() {
            assert_eq!(p_gp.value(x, y), max2(g.value(x), g.value(y)));
        }
    }
    // 2 + 3 + 3 - 1 - 2 - 3
    assert_eq!(
        transforms::gp_to_g(&gp).unwrap().value(one, two, three),
        int(2)
    );
}

#[test]
fn cauchy_examples() {
    let mut values = harmonic_values(220);
    values.push(int(0));
    let g = grid(&values);
    let p = example_spaces::max_partial(&g).unwrap();
    let gp = example_spaces::max_gp(&g).unwrap();
    let ones = harmonic_values(220);

    let t = trace(&g, &ones, 200, q(1, 100));
    let c = convergence::p_cauchy(&t, &p).unwrap();
    assert_eq!(c.verdict, Verdict::Certified);
    // Tail values max(1/n,1/m) lie in [1/220, 1/200].
    assert!(c.max_deviation <= q(1, 200));
    assert_eq!(
        convergence::gp_cauchy(&t, &gp).unwrap().verdict,
        Verdict::Certified
    );

    let alternating: Vec<Rational> = (0..20).map(|k| int(k % 2)).collect();
    let t = trace(&g, &alternating, 5, q(1, 100));
    let c = convergence::p_cauchy(&t, &p).unwrap();
    assert_eq!(c.verdict, Verdict::Refuted);
    let [a, b] = c.witness.clone().unwrap();
    assert_eq!((a.value.clone() - b.value.clone()).to_f64().abs(), 1.0);
    assert_eq!(
        convergence::gp_cauchy(&t, &gp).unwrap().verdict,
        Verdict::Refuted
    );
    for r in [
        convergence::equivalence_harness(&t, &Carrier::Partial(p.clone())).unwrap(),
        convergence::equivalence_harness(&t, &Carrier::Gp(gp.clone())).unwrap(),
    ] {
        assert!(r.holds() && r.identical);
        assert!(r
            .entries
            .iter()
            .all(|e| e.certificate.verdict == Verdict::Refuted));
    }

    let g24 = example_spaces::max_combination_g(&g).unwrap();
    let t = trace(&g, &ones, 200, q(1, 100));
    assert_eq!(
        convergence::g_cauchy(&t, &g24).unwrap().verdict,
        Verdict::Certified
    );
    let h = convergence::equivalence_harness(&t, &Carrier::Partial(p.clone())).unwrap();
    assert!(h.holds());
    assert!(h
        .entries
        .iter()
        .all(|e| e.certificate.verdict == Verdict::Certified));
}

#[test]
fn convergence_examples() {
    let mut values = harmonic_values(60);
    values.push(int(0));
    let g = grid(&values);
    let p = example_spaces::max_partial(&g).unwrap();
    let gp = example_spaces::max_gp(&g).unwrap();
    let t = trace(&g, &harmonic_values(60), 40, q(1, 20));
    let (zero, one) = (pt(&g, int(0)), pt(&g, int(1)));

    assert_eq!(
        convergence::p_converges_to(&t, zero, &p).unwrap().verdict,
        Verdict::Certified
    );
    // p(1/n, 1) = 1 = p(1, 1): the partial metric also certifies 1.
    assert_eq!(
        convergence::p_converges_to(&t, one, &p).unwrap().verdict,
        Verdict::Certified
    );
    assert_eq!(
        convergence::gp_converges_to(&t, zero, &gp).unwrap().verdict,
        Verdict::Certified
    );
    // GP(1/n,1/n,1/n) = 1/n stays far from GP(1,1,1) = 1.
    assert_eq!(
        convergence::gp_converges_to(&t, one, &gp).unwrap().verdict,
        Verdict::Refuted
    );

    let at_zero = convergence::limit_equivalence_check(&t, zero, &gp).unwrap();
    assert!(at_zero.holds());
    assert_eq!(
        (at_zero.chain.verdict, at_zero.g_side.verdict),
        (Verdict::Certified, Verdict::Certified)
    );
    let at_one = convergence::limit_equivalence_check(&t, one, &gp).unwrap();
    assert!(at_one.holds());
    assert_eq!(
        (at_one.chain.verdict, at_one.g_side.verdict),
        (Verdict::Refuted, Verdict::Refuted)
    );
}

#[test]
fn ball_examples() {
    let g = grid(&[int(0), q(1, 2), int(1), q(6, 5), q(7, 5), int(2)]);
    let p = Carrier::Partial(example_spaces::max_partial(&g).unwrap());
    let one = pt(&g, int(1));
    // max(1, 6/5) = 6/5 < 1 + 1/2; max(1, 2) = 2 is not.
    assert!(convergence::ball_membership(&p, one, &q(1, 2), pt(&g, q(6, 5))).unwrap());
    assert!(!convergence::ball_membership(&p, one, &q(1, 2), pt(&g, int(2))).unwrap());

    let g = grid(&[int(0), q(1, 2), int(1), q(7, 5), int(2)]);
    let gp = Carrier::Gp(example_spaces::max_gp(&g).unwrap());
    let one = pt(&g, int(1));
    let expected: Vec<Point> = g
        .universe()
        .points()
        .filter(|&y| max2(&int(1), g.value(y)) < int(1) + q(1, 2))
        .collect();
    assert_eq!(convergence::ball(&gp, one, &q(1, 2)).unwrap(), expected);
    assert_eq!(expected.len(), 4);
}

#[test]
fn continuity_examples() {
    let g = Grid::<Rational>::dyadic(8).unwrap();
    let gp = example_spaces::max_gp(&g).unwrap();
    let halve = SelfMap::scale_on_grid(&g, q(1, 2));
    let eps = [q(1, 2), q(1, 16), q(1, 1000)];
    assert!(
        convergence::gp_continuity_check(&halve, &gp, &gp, &eps)
            .unwrap()
            .continuous
    );

    // On a finite space only zero-gap neighbours can break continuity:
    // GP(1,0,0) = GP(1,1,1) = 1, so 0 lies in every ball around 1, yet the
    // map sends 0 to 2 and GP(1,2,2) = 2 is not below 1 + 1/2.
    let g = grid(&[int(0), int(1), int(2)]);
    let gp = example_spaces::max_gp(&g).unwrap();
    let [zero, one, two] = [pt(&g, int(0)), pt(&g, int(1)), pt(&g, int(2))];
    let dense = common::dense_gp(&gp);
    assert_eq!(dense[one.0][zero.0][zero.0], dense[one.0][one.0][one.0]);
    assert!(dense[one.0][two.0][two.0] >= dense[one.0][one.0][one.0].clone() + q(1, 2));
    let f = SelfMap::from_pairs(
        g.universe().clone(),
        vec![(zero, two), (one, one), (two, two)],
    )
    .unwrap();
    let r = convergence::gp_continuity_check(&f, &gp, &gp, &[q(1, 2)]).unwrap();
    assert!(!r.continuous);
    let fail = r.failures().next().unwrap();
    assert_eq!(
        (fail.x0.as_str(), fail.escapes.as_deref()),
        ("1", Some("0"))
    );
}

#[test]
fn joint_continuity_examples() {
    let n = 40;
    let xs = harmonic_values(n);
    let ys: Vec<Rational> = xs.iter().map(|v| int(2) + v.clone()).collect();
    let zs = vec![int(3); n as usize];
    let mut values: Vec<Rational> = xs.iter().chain(&ys).cloned().collect();
    values.extend([int(0), int(2), int(3)]);
    let g = grid(&values);
    let gp = example_spaces::max_gp(&g).unwrap();
    let eps = q(1, 30);
    let (tx, ty, tz) = (
        trace(&g, &xs, 31, eps.clone()),
        trace(&g, &ys, 31, eps.clone()),
        trace(&g, &zs, 31, eps.clone()),
    );
    let limits = [pt(&g, int(0)), pt(&g, int(2)), pt(&g, int(3))];
    let r = convergence::joint_continuity_probe(&gp, [&tx, &ty, &tz], limits).unwrap();
    assert_eq!(r.limit_value, max3(&int(0), &int(2), &int(3)));
    assert_eq!(r.verdict, Verdict::Certified);

    let r = convergence::joint_continuity_probe(&gp, [&tx, &tx, &tx], [limits[0]; 3]).unwrap();
    assert_eq!(r.limit_value, int(0));
    assert_eq!(r.final_residual, q(1, n));
    assert_eq!(r.verdict, Verdict::Certified);

    let wrong = convergence::joint_continuity_probe(&gp, [&tx, &ty, &tz], [limits[2]; 3]);
    assert!(matches!(wrong, Err(gpmetric::Error::PremiseFailed(_))));
}

#[test]
fn weak_contraction_examples() {
    let g = Grid::<Rational>::dyadic(10).unwrap();
    let g24 = example_spaces::max_combination_g(&g).unwrap();
    let quarter = SelfMap::scale_on_grid(&g, q(1, 4));
    let gauge = ContractionGauge::linear(q(1, 2)).unwrap();
    assert!(
        fixed_point::check_weak_g_contraction(&g24, &quarter, &gauge)
            .unwrap()
            .holds
    );

    let p = example_spaces::max_partial(&g).unwrap();
    let direct = fixed_point::check_partial_weak_contraction(&p, &quarter, &gauge).unwrap();
    let via_g = fixed_point::check_weak_g_contraction(
        &transforms::partial_to_g(&p).unwrap(),
        &quarter,
        &gauge,
    )
    .unwrap();
    assert_eq!(direct.holds, via_g.holds);

    let one = pt(&g, int(1));
    let r = fixed_point::picard_solve(
        &Carrier::G(g24),
        &quarter,
        one,
        100,
        PicardHypothesis::WeakContraction(&gauge),
    )
    .unwrap();
    assert_eq!(r.point.as_deref(), Some("0"));
    // 1, 1/4, ..., 1/1024, then the clamp to 0.
    let orbit: Vec<String> = (0..=5)
        .map(|k| Rational::dyadic(2 * k).to_string())
        .chain(["0".to_string()])
        .collect();
    assert_eq!(r.orbit, orbit);
    assert_eq!(
        fixed_point::brute_force_fixed_points(&quarter),
        vec![pt(&g, int(0))]
    );
}

#[test]
fn caristi_examples() {
    let g = Grid::<Rational>::dyadic(12).unwrap();
    let values = g.values().clone();
    let halve = SelfMap::scale_on_grid(&g, q(1, 2));
    let phi =
        PointPotential::from_fn(g.universe().clone(), |x| int(2) * values[x.0].clone()).unwrap();

    let p = example_spaces::max_partial(&g).unwrap();
    let r = fixed_point::check_partial_caristi(&p, &halve, &phi).unwrap();
    assert!(r.holds);
    for row in &r.rows {
        let x: Rational = row.point.parse().unwrap();
        let tx = values[halve.apply(pt(&g, x.clone())).0].clone();
        assert_eq!(row.lhs, max2(&x, &tx));
        assert_eq!(row.rhs, int(2) * x.clone() - int(2) * tx);
    }

    let gp = example_spaces::max_gp(&g).unwrap();
    let via_gp = fixed_point::check_gp_caristi(&gp, &halve, &phi).unwrap();
    let via_p =
        fixed_point::check_partial_caristi(&transforms::gp_to_partial(&gp).unwrap(), &halve, &phi)
            .unwrap();
    assert!(via_gp.holds && via_p.holds);

    let pair_values = values.clone();
    let pair = PairPotential::from_fn(g.universe().clone(), move |x, y| {
        int(2) * (pair_values[x.0].clone() + pair_values[y.0].clone())
    });
    let mut witnesses = Vec::new();
    let t = trace(
        &g,
        &(0..=12)
            .map(Rational::dyadic)
            .chain(std::iter::repeat_n(int(0), 3))
            .collect::<Vec<_>>(),
        10,
        q(1, 100),
    );
    witnesses.push((t, pt(&g, int(0))));
    let probe = fixed_point::t_lsc_probe(&pair, &halve, &gp, &witnesses).unwrap();
    assert!(probe.holds);
    assert_eq!(probe.label, "probe");
    assert_eq!(probe.cases[0].phi_at_limit, int(0));

    assert_eq!(
        fixed_point::brute_force_fixed_points(&halve),
        vec![pt(&g, int(0))]
    );
}

#[test]
fn caristi_route_agreement_on_random_instances() {
    for seed in 0..100u64 {
        let gp = example_spaces::random_gp(seed, 2 + (seed as usize % 6)).unwrap();
        let u = gp.universe().clone();
        let map = example_spaces::random_forest_map(seed, &u, Point(0), 0.5).unwrap();
        let phi =
            PointPotential::from_fn(u.clone(), |x| int(((x.0 * 7 + seed as usize) % 23) as i64))
                .unwrap();
        let a = fixed_point::check_gp_caristi(&gp, &map, &phi).unwrap();
        let b = fixed_point::check_partial_caristi(
            &transforms::gp_to_partial(&gp).unwrap(),
            &map,
            &phi,
        )
        .unwrap();
        assert_eq!(a.holds, b.holds, "seed {seed}");
    }
}

#[test]
fn baire_examples() {
    let lcp = |a: &str, b: &str| a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count();
    let term = |a: &str, b: &str| if a == b { int(0) } else { q(1, 1 << lcp(a, b)) };
    let (x, y, z) = ("aab", "aba", "abb");
    assert_eq!(
        (term(x, y), term(x, z), term(y, z)),
        (q(1, 2), q(1, 2), q(1, 4))
    );
    let w = WordUniverse::full(&['a', 'b'], 3).unwrap();
    let g = example_spaces::baire_g(&w).unwrap();
    assert_eq!(
        g.lookup_labels(x, y, z).unwrap(),
        max3(&term(x, y), &term(y, z), &term(x, z))
    );

    let w4 = WordUniverse::full(&['a', 'b'], 4).unwrap();
    let g4 = example_spaces::baire_g(&w4).unwrap();
    let dense = common::dense_g(&g4);
    assert_eq!(dense.len(), 16);
    assert!(common::g_valid(&dense) && common::g_symmetric(&dense));
    assert!(validate::validate_g(&g4).all_pass());
}

#[test]
fn seeded_generators_validate() {
    let p = example_spaces::random_partial(6, 6).unwrap();
    assert!(validate::validate_partial(&p).all_pass());
    assert!(common::partial_valid(&common::dense_pairs(&p)));
    let gp = example_spaces::random_gp(6, 6).unwrap();
    assert!(validate::validate_gp(&gp).all_pass());
    assert!(common::gp_valid(&common::dense_gp(&gp)));
}
