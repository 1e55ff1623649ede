#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashSet};

use splitlab::iet::{Combinatorics, Side};
use splitlab::rauzy::{attractors, explore, RauzyGraph};
use splitlab::surface::build_phi0;

type Labeled = (Vec<String>, Vec<String>);

/// The textbook classical Rauzy move on label lists.
fn classical_move((top, bottom): &Labeled, top_wins: bool) -> Option<Labeled> {
    let (mut t, mut b) = (top.clone(), bottom.clone());
    let (win_row, lose_row) = if top_wins { (&mut t, &mut b) } else { (&mut b, &mut t) };
    let winner = win_row.last()?.clone();
    let loser = lose_row.pop()?;
    if winner == loser {
        return None;
    }
    let i = lose_row.iter().position(|x| *x == winner)?;
    lose_row.insert(i + 1, loser);
    Some((t, b))
}

fn brute_force_class(start: Labeled) -> HashSet<Labeled> {
    let mut seen = HashSet::from([start.clone()]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for side in [true, false] {
            if let Some(y) = classical_move(&x, side) {
                if seen.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
    }
    seen
}

fn labeled(c: &Combinatorics) -> Labeled {
    let s = |v: Vec<&str>| v.into_iter().map(String::from).collect();
    (s(c.top_labels()), s(c.bottom_labels()))
}

/// Terminal strongly connected pieces by transitive closure.
fn closure_attractors(g: &RauzyGraph) -> BTreeSet<Vec<usize>> {
    let n = g.nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for e in &g.edges {
        reach[e.from][e.to] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        if !reach[i][i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        let closed = (0..n).filter(|&j| reach[i][j]).all(|j| comp.contains(&j));
        if closed {
            out.insert(comp);
        }
    }
    out
}

fn sorted(mut a: Vec<Vec<usize>>) -> BTreeSet<Vec<usize>> {
    a.iter_mut().for_each(|c| c.sort());
    a.into_iter().collect()
}

fn samples() -> Vec<Combinatorics> {
    let mut v: Vec<Combinatorics> = (2..=4).map(Combinatorics::rotation_class).collect();
    v.push(Combinatorics::new(&["1", "3", "2"], &["3", "2", "1"]).unwrap());
    v.push(Combinatorics::new(&["B", "a", "a"], &["b", "b", "B"]).unwrap());
    for (g, m) in [(0, 4), (1, 1), (1, 2), (0, 5)] {
        v.push(build_phi0(g, m).unwrap().comb);
    }
    v
}

#[test]
fn three_band_class_matches_brute_force() {
    for start in [
        Combinatorics::rotation_class(3),
        Combinatorics::new(&["1", "3", "2"], &["3", "2", "1"]).unwrap(),
    ] {
        let g = explore(&start, 10_000);
        assert!(!g.truncated);
        let oracle = brute_force_class(labeled(&start));
        let found: HashSet<Labeled> = g.nodes.iter().map(labeled).collect();
        assert_eq!(found, oracle);
    }
    let g = explore(&Combinatorics::rotation_class(4), 10_000);
    assert_eq!(
        g.nodes.len(),
        brute_force_class(labeled(&Combinatorics::rotation_class(4))).len()
    );
}

#[test]
fn out_degree_reflects_defined_splits() {
    for start in samples() {
        let g = explore(&start, 2_000);
        for (i, c) in g.nodes.iter().enumerate() {
            let sides: Vec<Side> = g.out_edges(i).map(|e| e.letter).collect();
            assert!(sides.len() <= 2);
            if g.truncated {
                continue;
            }
            for side in [Side::Top, Side::Bottom] {
                assert_eq!(sides.contains(&side), c.successor(side).is_some(), "{c} {side}");
            }
        }
    }
}

#[test]
fn node_set_does_not_depend_on_the_start() {
    let g = explore(&Combinatorics::rotation_class(4), 10_000);
    let nodes: HashSet<&Combinatorics> = g.nodes.iter().collect();
    for c in g.nodes.iter().step_by(3) {
        let h = explore(c, 10_000);
        let other: HashSet<&Combinatorics> = h.nodes.iter().collect();
        assert_eq!(other, nodes);
    }
}

#[test]
fn attractors_match_closure_oracle() {
    for start in samples() {
        let g = explore(&start, 2_000);
        if g.truncated {
            continue;
        }
        let found = sorted(attractors(&g).unwrap());
        assert_eq!(found, closure_attractors(&g), "{start}");
        for comp in &found {
            for &v in comp {
                assert!(g.out_edges(v).all(|e| comp.contains(&e.to)));
            }
        }
    }
}

#[test]
fn phi0_lies_in_an_attractor() {
    for (g, m) in [(0, 4), (1, 1), (1, 2), (0, 5)] {
        let comb = build_phi0(g, m).unwrap().comb;
        let graph = explore(&comb, 20_000);
        assert!(!graph.truncated, "({g},{m})");
        let root = graph.node_index(&comb).unwrap();
        assert!(
            attractors(&graph).unwrap().iter().any(|c| c.contains(&root)),
            "({g},{m})"
        );
    }
}
