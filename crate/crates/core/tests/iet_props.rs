use std::sync::OnceLock;

use proptest::prelude::*;

use splitlab::exact::{projectivize, RationalVector};
use splitlab::iet::{
    configuration_vertices, cylinder, expand, rauzy_step, validate, Combinatorics, IntegerExpansion, Side,
    SplittingSequence, WidthVector,
};
use splitlab::polytope::polytope_volume;
use splitlab::rational::{rat, Rat};
use splitlab::rauzy::explore;
use splitlab::surface::build_phi0;

/// Classical exchanges and small φ₀ together with their Rauzy classes.
fn pool() -> &'static [Combinatorics] {
    static POOL: OnceLock<Vec<Combinatorics>> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut seeds: Vec<Combinatorics> = (2..=5).map(Combinatorics::rotation_class).collect();
        seeds.push(Combinatorics::new(&["B", "a", "a"], &["b", "b", "B"]).unwrap());
        for (g, m) in [(0, 4), (1, 1), (1, 2), (0, 5)] {
            seeds.push(build_phi0(g, m).unwrap().comb);
        }
        seeds.iter().flat_map(|c| explore(c, 40).nodes).collect()
    })
}

/// A positive convex combination of the configuration vertices.
fn interior_widths(comb: &Combinatorics, weights: &[u32]) -> WidthVector {
    let verts = configuration_vertices(comb);
    let d = comb.d();
    let mut p = RationalVector(vec![Rat::from_integer(0.into()); d]);
    for (i, v) in verts.iter().enumerate() {
        p = p.add(&v.scaled(&rat(i64::from(weights[i % weights.len()]) + 1, 1)));
    }
    WidthVector(p.normalized().unwrap().0)
}

fn ends(comb: &Combinatorics) -> Vec<usize> {
    let mut count = vec![0; comb.d()];
    for &b in comb.top().iter().chain(comb.bottom()) {
        count[b] += 1;
    }
    count
}

fn input() -> impl Strategy<Value = (Combinatorics, WidthVector)> {
    (0..pool().len(), prop::collection::vec(0u32..50, 1..12)).prop_map(|(i, w)| {
        let c = pool()[i].clone();
        let w = interior_widths(&c, &w);
        (c, w)
    })
}

proptest! {
    #[test]
    fn step_preserves_structure((comb, w) in input()) {
        prop_assert!(validate(&comb, &w).unwrap());
        let Ok((next, nw, step)) = rauzy_step(&comb, &w) else { return Ok(()); };
        prop_assert_eq!(next.labels(), comb.labels());
        prop_assert!(ends(&next).iter().all(|&e| e == 2));
        prop_assert!(validate(&next, &nw).unwrap());
        if comb.is_classical() {
            prop_assert!(next.is_classical());
        }
        // Old widths are E times new widths, up to the common scale.
        prop_assert_eq!(projectivize(&step.elementary(comb.d()), &nw.as_vector()).unwrap(), w.as_vector());
    }

    #[test]
    fn integer_widths_satisfy_the_relation_exactly((comb, w) in input(), steps in 1usize..30) {
        let mut run = IntegerExpansion::from_rational(comb.clone(), &w);
        for _ in 0..steps {
            let before = run.widths.clone();
            let Ok(step) = run.step() else { break };
            let mut back = run.widths.clone();
            back[step.winner] += &run.widths[step.loser];
            prop_assert_eq!(back, before);
        }
    }

    #[test]
    fn expansion_replays((comb, w) in input(), steps in 0usize..40) {
        let seq = expand(&comb, &w, steps).unwrap();
        prop_assert!(seq.verify());
        let end = seq.end_widths.clone().unwrap();
        prop_assert_eq!(projectivize(&seq.cumulative, &end.as_vector()).unwrap(), w.as_vector());
        // Step-by-step normalized induction agrees with the integer run.
        let (mut c, mut x) = (comb.clone(), w.clone());
        for s in &seq.steps {
            let (nc, nx, step) = rauzy_step(&c, &x).unwrap();
            prop_assert_eq!(&step, s);
            c = nc;
            x = nx;
        }
        prop_assert_eq!(c, seq.end);
        prop_assert_eq!(x, end);
    }

    #[test]
    fn child_cylinders_partition_the_parent(i in 0..pool().len(), path in prop::collection::vec(any::<bool>(), 0..5)) {
        let start = pool()[i].clone();
        let mut seq = SplittingSequence::empty(start);
        for top in path {
            let side = if top { Side::Top } else { Side::Bottom };
            if seq.end.successor(side).is_none() {
                break;
            }
            seq.push(side).unwrap();
        }
        let (Some(_), Some(_)) = (seq.end.successor(Side::Top), seq.end.successor(Side::Bottom)) else {
            return Ok(());
        };
        let parent = polytope_volume(&cylinder(&seq).unwrap());
        let mut sum = Rat::from_integer(0.into());
        for side in [Side::Top, Side::Bottom] {
            let mut child = seq.clone();
            child.push(side).unwrap();
            sum += polytope_volume(&cylinder(&child).unwrap());
        }
        prop_assert_eq!(sum, parent);
    }
}

fn paths(seq: &SplittingSequence, depth: usize, out: &mut Vec<SplittingSequence>) {
    out.push(seq.clone());
    if depth == 0 {
        return;
    }
    for side in [Side::Top, Side::Bottom] {
        if seq.end.successor(side).is_some() {
            let mut next = seq.clone();
            next.push(side).unwrap();
            paths(&next, depth - 1, out);
        }
    }
}

#[test]
fn partition_holds_on_every_short_path() {
    let mut checked = 0;
    for start in [
        Combinatorics::rotation_class(3),
        Combinatorics::rotation_class(4),
        build_phi0(0, 5).unwrap().comb,
    ] {
        let mut all = Vec::new();
        paths(&SplittingSequence::empty(start), 3, &mut all);
        for seq in all {
            let (Some(_), Some(_)) = (seq.end.successor(Side::Top), seq.end.successor(Side::Bottom)) else {
                continue;
            };
            let parent = polytope_volume(&cylinder(&seq).unwrap());
            let children: Rat = [Side::Top, Side::Bottom]
                .into_iter()
                .map(|side| {
                    let mut c = seq.clone();
                    c.push(side).unwrap();
                    polytope_volume(&cylinder(&c).unwrap())
                })
                .sum();
            assert_eq!(children, parent, "{}", seq.end);
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} stages checked");
}
