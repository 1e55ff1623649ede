use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitlab::exact::{is_c_distributed, CocycleMatrix};
use splitlab::iet::{configuration_polytope, Combinatorics};
use splitlab::measure::{
    bc_assemble, distortion, is_uniformly_distorted, relative_probability_bounds, HarmonicTable, Layout, LebesgueTable,
};
use splitlab::polytope::Polytope;
use splitlab::rational::{pow, rat, to_f64, Rat};
use splitlab::surface::build_phi0;
use splitlab::torus::{cylinder_interval, Word};
use splitlab::walk::wilson;

fn polytopes() -> &'static [Polytope] {
    static P: OnceLock<Vec<Polytope>> = OnceLock::new();
    P.get_or_init(|| {
        let mut combs: Vec<Combinatorics> = (2..=4).map(Combinatorics::rotation_class).collect();
        combs.push(Combinatorics::new(&["B", "a", "a"], &["b", "b", "B"]).unwrap());
        combs.push(build_phi0(0, 5).unwrap().comb);
        combs.iter().map(configuration_polytope).collect()
    })
}

fn product(d: usize, splits: &[(usize, usize)]) -> CocycleMatrix {
    let mut q = CocycleMatrix::identity(d);
    for &(w, l) in splits {
        if w % d != l % d {
            q.apply_split(w % d, l % d);
        }
    }
    q
}

proptest! {
    #[test]
    fn distortion_is_monotone_in_c(i in 0..5usize, s in prop::collection::vec((0usize..6, 0usize..6), 0..12), c in 2i64..50, extra in 1i64..50) {
        let w = &polytopes()[i];
        let q = product(w.ambient_dim(), &s);
        let (c1, c2) = (rat(c, 1), rat(c + extra, 1));
        if is_uniformly_distorted(&q, w, &c1).unwrap() {
            prop_assert!(is_uniformly_distorted(&q, w, &c2).unwrap());
        }
    }

    #[test]
    fn c_distribution_bounds_distortion(i in 0..5usize, s in prop::collection::vec((0usize..6, 0usize..6), 0..20), c in 2i64..20) {
        let w = &polytopes()[i];
        let q = product(w.ambient_dim(), &s);
        let c = rat(c, 1);
        if is_c_distributed(&q, &c) {
            prop_assert!(distortion(&q, w).unwrap() <= pow(&c, w.dim() as u32 + 1));
        }
    }
}

fn check_assembly(layout: Layout, j: i32, ns: &[u64]) {
    let mut l = LebesgueTable::new();
    let mut v = HarmonicTable::new();
    for &n in ns {
        let (s, t) = layout.range(n);
        for m in s..=t {
            let x = Rat::new(1.into(), num_traits::pow(num_bigint::BigInt::from(n), j as usize));
            l.insert((m, n), (x.clone(), x));
            v.insert((m, n), Rat::new(1.into(), num_bigint::BigInt::from(1u8) << n));
        }
    }
    let report = bc_assemble(&l, &v, layout, ns);
    assert!(report.unavailable.is_empty());
    let (mut a, mut rho) = (0.0f64, 0.0f64);
    for &n in ns {
        let (s, t) = layout.range(n);
        let k = (t - s + 1) as f64;
        let nf = n as f64;
        let (lo, hi) = (nf.powi(-j), (k * nf.powi(-j)).min(1.0));
        a = a.max(nf * hi).max(1.0 / (nf * lo));
        rho = rho.max((k * 0.5f64.powi(n as i32)).min(1.0).powf(1.0 / nf));
    }
    let a_min = to_f64(&report.a_min.unwrap());
    assert!((a_min - a).abs() <= 1e-9 * a, "{layout:?}: A {a_min} vs {a}");
    assert!(
        (report.rho_min.unwrap() - rho).abs() <= 1e-9,
        "{layout:?}: ρ {} vs {rho}",
        report.rho_min.unwrap()
    );
}

#[test]
fn assembly_matches_closed_forms() {
    let ns: Vec<u64> = (1..=40).collect();
    check_assembly(Layout::Diagonal, 1, &ns);
    check_assembly(Layout::Levels { j: 1 }, 1, &ns);
    check_assembly(Layout::Levels { j: 2 }, 2, &ns[..12]);
}

/// Among uniform points of the `RL` cylinder, the share continuing with
/// `R³` respects the relative probability bounds with `C = 2`, `d = 2`.
#[test]
fn relative_frequency_after_a_switch() {
    let stage = cylinder_interval(&Word::parse("RL").unwrap());
    let follow = cylinder_interval(&Word::parse("RLR3").unwrap());
    let kappa = cylinder_interval(&Word::parse("R3").unwrap()).length();
    let (lo, hi) = relative_probability_bounds(&rat(2, 1), 2, &kappa).unwrap();
    let exact = follow.length() / stage.length();
    assert!(lo <= exact && exact <= hi);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples = 10_000u64;
    let scale = 1i64 << 40;
    let mut hits = 0;
    for _ in 0..samples {
        let u = rat(rng.gen_range(0..scale), scale);
        let x = &stage.lo + u * stage.length();
        if follow.contains(&x) {
            hits += 1;
        }
    }
    let (ci_lo, ci_hi) = wilson(hits, samples);
    let e = to_f64(&exact);
    assert!(ci_lo <= e && e <= ci_hi, "{hits} vs {e}");
    assert!(to_f64(&lo) <= ci_lo && ci_hi <= to_f64(&hi));
}
