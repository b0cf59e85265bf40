//! Brute-force oracles over dense tables, written from the axiom
//! statements without going through the library's validators or
//! transforms.

#![allow(dead_code)]

use gpmetric::{GMetric, GPMetric, PartialMetric, Point, Rational};

pub type Pairs = Vec<Vec<Rational>>;
pub type Triples = Vec<Vec<Vec<Rational>>>;

pub fn zero() -> Rational {
    Rational::zero()
}

/// Dense `n x n` table read from the carrier's canonical entries and
/// mirrored by hand.
pub fn dense_pairs(p: &PartialMetric<Rational>) -> Pairs {
    let n = p.universe().len();
    let mut t = vec![vec![zero(); n]; n];
    for ((a, b), v) in p.entries() {
        t[a.0][b.0] = v.clone();
        t[b.0][a.0] = v;
    }
    t
}

fn dense_from_entries(n: usize, entries: Vec<([Point; 3], Rational)>) -> Triples {
    let mut t = vec![vec![vec![zero(); n]; n]; n];
    for (k, v) in entries {
        let [a, b, c] = [k[0].0, k[1].0, k[2].0];
        for [i, j, l] in [
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ] {
            t[i][j][l] = v.clone();
        }
    }
    t
}

pub fn dense_g(g: &GMetric<Rational>) -> Triples {
    dense_from_entries(g.universe().len(), g.entries())
}

pub fn dense_gp(gp: &GPMetric<Rational>) -> Triples {
    dense_from_entries(gp.universe().len(), gp.entries())
}

/// Nonnegativity and (P1), (P2), (P4); symmetry is checked on the dense
/// table too.
pub fn partial_valid(p: &Pairs) -> bool {
    let n = p.len();
    let z = zero();
    for x in 0..n {
        for y in 0..n {
            if p[x][y] < z || p[x][y] != p[y][x] {
                return false;
            }
            if p[x][x] > p[x][y] {
                return false;
            }
            if x != y && p[x][x] == p[x][y] && p[x][y] == p[y][y] {
                return false;
            }
            for w in 0..n {
                if p[x][w].clone() > p[x][y].clone() + p[y][w].clone() - p[y][y].clone() {
                    return false;
                }
            }
        }
    }
    true
}

/// Nonnegativity and (G1), (G2), (G3), (G5).
pub fn g_valid(g: &Triples) -> bool {
    let n = g.len();
    let z = zero();
    for x in 0..n {
        if g[x][x][x] != z {
            return false;
        }
        for y in 0..n {
            if x != y && g[x][x][y] <= z {
                return false;
            }
            for w in 0..n {
                if g[x][y][w] < z {
                    return false;
                }
                if w != y && g[x][x][y] > g[x][y][w] {
                    return false;
                }
                for a in 0..n {
                    if g[x][y][w].clone() > g[x][a][a].clone() + g[a][y][w].clone() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn g_symmetric(g: &Triples) -> bool {
    let n = g.len();
    (0..n).all(|x| (0..n).all(|y| g[x][y][y] == g[y][x][x]))
}

/// (GP1) through (GP4).
pub fn gp_valid(gp: &Triples) -> bool {
    let n = gp.len();
    let z = zero();
    for x in 0..n {
        for y in 0..n {
            for w in 0..n {
                let (xxx, xxy, xyw) = (&gp[x][x][x], &gp[x][x][y], &gp[x][y][w]);
                if !(z <= *xxx && xxx <= xxy && xxy <= xyw) {
                    return false;
                }
                let distinct = !(x == y && y == w);
                if distinct && *xyw == *xxx && *xyw == gp[y][y][y] && *xyw == gp[w][w][w] {
                    return false;
                }
                for a in 0..n {
                    let rhs = gp[x][a][a].clone() + gp[a][y][w].clone() - gp[a][a][a].clone();
                    if *xyw > rhs {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `p(x,y) + p(y,z) + p(x,z) - p(x,x) - p(y,y) - p(z,z)`.
pub fn g_of_partial(p: &Pairs) -> Triples {
    let n = p.len();
    let mut t = vec![vec![vec![zero(); n]; n]; n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                t[x][y][z] = p[x][y].clone() + p[y][z].clone() + p[x][z].clone()
                    - p[x][x].clone()
                    - p[y][y].clone()
                    - p[z][z].clone();
            }
        }
    }
    t
}

/// `2p(x,y) - p(x,x) - p(y,y)`.
pub fn metric_of_partial(p: &Pairs) -> Pairs {
    let n = p.len();
    let mut t = vec![vec![zero(); n]; n];
    for x in 0..n {
        for y in 0..n {
            t[x][y] = p[x][y].clone() + p[x][y].clone() - p[x][x].clone() - p[y][y].clone();
        }
    }
    t
}

/// `GP(x,y,y)`.
pub fn partial_of_gp(gp: &Triples) -> Pairs {
    let n = gp.len();
    (0..n)
        .map(|x| (0..n).map(|y| gp[x][y][y].clone()).collect())
        .collect()
}

/// `GP(x,y,y) + GP(x,z,z) + GP(y,z,z) - GP(x,x,x) - GP(y,y,y) - GP(z,z,z)`.
pub fn g_of_gp(gp: &Triples) -> Triples {
    let n = gp.len();
    let mut t = vec![vec![vec![zero(); n]; n]; n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                t[x][y][z] = gp[x][y][y].clone() + gp[x][z][z].clone() + gp[y][z][z].clone()
                    - gp[x][x][x].clone()
                    - gp[y][y][y].clone()
                    - gp[z][z][z].clone();
            }
        }
    }
    t
}

/// Every ordered triple of the carrier agrees with the dense table.
pub fn g_matches(g: &GMetric<Rational>, t: &Triples) -> bool {
    let n = t.len();
    (0..n).all(|x| {
        (0..n).all(|y| (0..n).all(|z| g.value(Point(x), Point(y), Point(z)) == t[x][y][z]))
    })
}

pub fn pairs_match(p: &PartialMetric<Rational>, t: &Pairs) -> bool {
    let n = t.len();
    (0..n).all(|x| (0..n).all(|y| p.value(Point(x), Point(y)) == t[x][y]))
}

/// Points reached by following `T` from `x` until it repeats.
pub fn orbit_ends_fixed(map: &gpmetric::SelfMap, x: Point) -> Option<Point> {
    let mut seen = vec![x];
    let mut cur = x;
    loop {
        let next = map.apply(cur);
        if next == cur {
            return Some(cur);
        }
        if seen.contains(&next) {
            return None;
        }
        seen.push(next);
        cur = next;
    }
}
