//! The initial combinatorics φ₀ of a surface, its complementary regions, the
//! Dehn-twist loop at φ₀ and the experiments built on it.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{projectivize, CocycleMatrix, RationalVector};
use crate::iet::{configuration_polytope, Combinatorics, IntegerExpansion, Side, SplittingSequence};
use crate::polytope::{simplex_volume_raw, AffineChart, Polytope, Triangulation};
use crate::rational::{Int, Rat};
use crate::walk::{trial_rng, Estimate};

/// Which recipe produced a φ₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionCase {
    Case(u8),
    /// Hard-coded low-complexity arrangement found by search.
    Special {
        g: u32,
        m: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phi0 {
    pub g: u32,
    pub m: u32,
    pub case: ConstructionCase,
    pub reconstructed: bool,
    pub comb: Combinatorics,
}

struct Labels(usize);

impl Labels {
    fn fresh(&mut self, prefix: &str) -> String {
        self.0 += 1;
        format!("{prefix}{}", self.0)
    }
}

/// A run of ends contributing `sides` sides to the polygon it sits in.
type Unit = (usize, Vec<String>);

/// The basic block `o u v o t u v t`: two triangles and a handle.
fn block(gen: &mut Labels) -> Unit {
    let [o, t, u, v] = [(); 4].map(|_| gen.fresh("k"));
    (2, vec![o.clone(), u.clone(), v.clone(), o, t.clone(), u, v, t])
}

/// A plain band `p p` enclosing a punctured monogon.
fn band(gen: &mut Labels) -> Unit {
    let p = gen.fresh("p");
    (1, vec![p.clone(), p])
}

/// End order of the basic block with bands numbered `o=1, t=2, u=3, v=4`.
pub fn basic_block() -> Vec<u32> {
    vec![1, 3, 4, 1, 2, 3, 4, 2]
}

/// Subdivides the polygon bounded by `units` into triangles with arches.
fn fill(gen: &mut Labels, mut units: Vec<Unit>) -> Vec<String> {
    while units.iter().map(|u| u.0).sum::<usize>() > 2 {
        if let Some(i) = units.iter().position(|u| u.0 == 2) {
            let a = gen.fresh("a");
            let mut ends = vec![a.clone()];
            ends.append(&mut units[i].1);
            ends.push(a);
            units[i] = (1, ends);
        } else {
            let a = gen.fresh("a");
            let second = units.remove(1);
            let first = &mut units[0];
            let mut ends = vec![a.clone()];
            ends.append(&mut first.1);
            ends.extend(second.1);
            ends.push(a);
            *first = (1, ends);
        }
    }
    units.into_iter().flat_map(|u| u.1).collect()
}

fn host(gen: &mut Labels, name: &str, items: Vec<Unit>) -> Vec<String> {
    let mut out = vec![name.to_string()];
    out.extend(fill(gen, items));
    out.push(name.to_string());
    out
}

fn outer(gen: &mut Labels, second: bool, a: Vec<Unit>, b: Vec<Unit>, c: Vec<Unit>) -> (Vec<String>, Vec<String>) {
    let mut top = vec!["B".to_string()];
    top.extend(host(gen, "A", a));
    top.extend(host(gen, "Bb", b));
    top.extend(host(gen, "C", c));
    let bottom: Vec<&str> = if second {
        vec!["D", "D", "B"]
    } else {
        vec!["x0", "x1", "x2", "x0", "x1", "x2", "B"]
    };
    (top, bottom.into_iter().map(String::from).collect())
}

fn special(g: u32, m: u32) -> Option<(Vec<&'static str>, Vec<&'static str>)> {
    let b3 = vec!["b0", "b1", "b2", "b0", "b1", "b2", "B"];
    Some(match (g, m) {
        (1, 1) => (vec!["2", "1"], vec!["1", "2"]),
        (0, 4) => (vec!["B", "t0", "t0"], vec!["b0", "b0", "B"]),
        (1, 2) => (vec!["B", "t0", "t0"], b3),
        (2, 0) => (vec!["B", "t0", "t1", "t2", "t0", "t1", "t2"], b3),
        (2, 1) => (
            vec!["B", "t0", "t1", "t2", "t0", "t1", "t2"],
            vec!["b0", "b0", "b1", "b2", "b3", "b1", "b4", "b2", "b3", "b4", "B"],
        ),
        (3, 0) => (
            vec![
                "B", "a2", "a1", "k1", "k3", "k4", "k1", "k2", "k3", "k4", "k2", "a1", "t0", "t1", "t2", "t0", "a2",
                "t1", "t2",
            ],
            b3,
        ),
        _ => return None,
    })
}

/// Number of bands of φ₀ for a surface of genus `g` with `m` punctures.
pub fn phi0_band_count(g: u32, m: u32) -> u32 {
    if (g, m) == (1, 1) {
        2
    } else {
        6 * g + 2 * m - 5
    }
}

/// φ₀ for genus `g` with `m` punctures, validated by [`analyze_regions`].
pub fn build_phi0(g: u32, m: u32) -> Result<Phi0> {
    let (case, top, bottom) = if let Some((t, b)) = special(g, m) {
        let s = |v: Vec<&str>| v.into_iter().map(String::from).collect::<Vec<_>>();
        (ConstructionCase::Special { g, m }, s(t), s(b))
    } else {
        let gen = &mut Labels(0);
        let blocks = |gen: &mut Labels, k: u32| (0..k).map(|_| block(gen)).collect::<Vec<_>>();
        let bands = |gen: &mut Labels, k: u32| (0..k).map(|_| band(gen)).collect::<Vec<_>>();
        // A lone band would bound a bigon; host A then bounds the monogon.
        let drop_lone = |items: Vec<Unit>| {
            if items.len() == 1 && items[0].0 == 1 {
                Vec::new()
            } else {
                items
            }
        };
        let (case, (top, bottom)) = if m == 0 && g >= 4 {
            let a = blocks(gen, g - 3);
            let (b, c) = (blocks(gen, 1), blocks(gen, 1));
            (1, outer(gen, false, a, b, c))
        } else if m == 1 && g >= 3 {
            let a = blocks(gen, g - 2);
            let b = blocks(gen, 1);
            (2, outer(gen, false, a, b, vec![]))
        } else if m == 2 && g >= 2 {
            let a = blocks(gen, g - 1);
            (3, outer(gen, false, a, vec![], vec![]))
        } else if m >= 3 && g >= 1 {
            let mut items = blocks(gen, g - 1);
            items.extend(bands(gen, m - 2));
            let items = drop_lone(items);
            (4, outer(gen, false, items, vec![], vec![]))
        } else if g == 0 && m >= 5 {
            let items = drop_lone(bands(gen, m - 4));
            (5, outer(gen, true, items, vec![], vec![]))
        } else {
            return Err(Error::UnsupportedSurface { g, m });
        };
        (ConstructionCase::Case(case), top, bottom)
    };
    let comb = Combinatorics::new(&top, &bottom).map_err(|e| Error::Construction(format!("({g},{m}): {e}")))?;
    let profile = analyze_regions(&comb).map_err(|e| Error::Construction(format!("({g},{m}): {e}")))?;
    if profile.genus != g || profile.punctures != m {
        return Err(Error::Construction(format!(
            "({g},{m}): regions describe genus {} with {} punctures",
            profile.genus, profile.punctures
        )));
    }
    let expected = if (g, m) == (1, 1) { 0 } else { 4 * g + m - 4 };
    if (g, m) != (1, 1) && (profile.triangles() != expected as usize || profile.monogons() != m as usize) {
        return Err(Error::Construction(format!(
            "({g},{m}): region profile {:?}",
            profile.counts()
        )));
    }
    twist_band(&comb).map_err(|e| Error::Construction(format!("({g},{m}): {e}")))?;
    Ok(Phi0 {
        g,
        m,
        case,
        reconstructed: matches!(case, ConstructionCase::Special { .. }),
        comb,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Region {
    /// Gaps between consecutive ends on the same side.
    pub cusps: u32,
    /// Passes around an end of the interval.
    pub corners: u32,
    pub punctured: bool,
    /// Labels of the ends met along the boundary.
    pub ends: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionProfile {
    pub regions: Vec<Region>,
    pub genus: u32,
    pub punctures: u32,
}

impl RegionProfile {
    pub fn triangles(&self) -> usize {
        self.regions.iter().filter(|r| r.cusps == 3 && !r.punctured).count()
    }

    pub fn monogons(&self) -> usize {
        self.regions.iter().filter(|r| r.cusps == 1 && r.punctured).count()
    }

    /// Region count by `(cusps, punctured)`.
    pub fn counts(&self) -> BTreeMap<(u32, bool), usize> {
        let mut out = BTreeMap::new();
        for r in &self.regions {
            *out.entry((r.cusps, r.punctured)).or_insert(0) += 1;
        }
        out
    }
}

/// Traces the boundary of the ribbon surface: the interval is one disk, each
/// band an untwisted ribbon. Ends are arranged on the circle top left to
/// right, then bottom right to left; a boundary component steps to the next
/// end on the circle and crosses the ribbon there.
pub fn analyze_regions(comb: &Combinatorics) -> Result<RegionProfile> {
    let mut circle: Vec<(Side, usize)> = comb.top().iter().map(|&b| (Side::Top, b)).collect();
    circle.extend(comb.bottom().iter().rev().map(|&b| (Side::Bottom, b)));
    let n = circle.len();
    let mut first: Vec<Option<usize>> = vec![None; comb.d()];
    let mut other = vec![0usize; n];
    for (k, &(_, b)) in circle.iter().enumerate() {
        match first[b] {
            None => first[b] = Some(k),
            Some(j) => {
                other[j] = k;
                other[k] = j;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut regions = Vec::new();
    for h in 0..n {
        if seen[h] {
            continue;
        }
        let (mut cusps, mut corners, mut ends) = (0, 0, Vec::new());
        let mut cur = h;
        while !seen[cur] {
            seen[cur] = true;
            let next = (cur + 1) % n;
            if circle[cur].0 == circle[next].0 {
                cusps += 1;
            } else {
                corners += 1;
            }
            ends.push(comb.label(circle[next].1).to_string());
            cur = other[next];
        }
        if cusps == 0 {
            return Err(Error::InvalidTrack(format!("region {ends:?} has no cusps")));
        }
        regions.push(Region {
            cusps,
            corners,
            punctured: cusps <= 2,
            ends,
        });
    }
    let euler = 1 + regions.len() as i64 - comb.d() as i64;
    if euler > 2 || (2 - euler) % 2 != 0 {
        return Err(Error::InvalidTrack(format!(
            "Euler characteristic {euler} is not that of a closed surface"
        )));
    }
    let punctures = regions.iter().filter(|r| r.punctured).count() as u32;
    Ok(RegionProfile {
        regions,
        genus: ((2 - euler) / 2) as u32,
        punctures,
    })
}

/// The band `B`: top end leftmost, bottom end rightmost.
pub fn twist_band(comb: &Combinatorics) -> Result<usize> {
    let (Some(&b), Some(&last)) = (comb.top().first(), comb.bottom().last()) else {
        return Err(Error::invalid("empty side"));
    };
    if b != last {
        return Err(Error::invalid(
            "no band has its top end leftmost and bottom end rightmost",
        ));
    }
    Ok(b)
}

/// The loop at φ₀ in which `B` wins every split: it closes once every other
/// band with a top end has lost to `B` twice.
pub fn dehn_twist_sequence(comb: &Combinatorics) -> Result<SplittingSequence> {
    let b = twist_band(comb)?;
    let mut losses = vec![0u32; comb.d()];
    let top_bands: HashSet<usize> = comb.top().iter().copied().filter(|&a| a != b).collect();
    let mut seq = SplittingSequence::empty(comb.clone());
    let limit = 2 * comb.top().len() + 2;
    while top_bands.iter().any(|&a| losses[a] < 2) {
        if seq.len() >= limit {
            return Err(Error::Construction("twist loop did not close".into()));
        }
        let step = seq
            .push(Side::Bottom)
            .map_err(|e| Error::Construction(format!("twist split failed: {e}")))?;
        if step.winner != b {
            return Err(Error::Construction(format!(
                "band {} won instead of B",
                comb.label(step.winner)
            )));
        }
        losses[step.loser] += 1;
    }
    if seq.end != *comb || top_bands.iter().any(|&a| losses[a] != 2) {
        return Err(Error::Construction("twist loop does not return to φ₀".into()));
    }
    Ok(seq)
}

/// Exact twist volumes `ℓ(JQ_n(W₀)) / ℓ(W₀)`, with the triangulation of the
/// configuration polytope `W₀` computed once.
pub struct TwistVolume {
    pub comb: Combinatorics,
    pub q0: CocycleMatrix,
    pub polytope: Polytope,
    pub triangulation: Triangulation,
    chart: AffineChart,
    volume: Rat,
}

impl TwistVolume {
    pub fn new(comb: &Combinatorics) -> Result<Self> {
        let seq = dehn_twist_sequence(comb)?;
        let polytope = configuration_polytope(comb);
        let triangulation = polytope.triangulate();
        let chart = polytope.chart();
        let volume = triangulation
            .simplices
            .iter()
            .map(|s| simplex_volume_raw(polytope.vertices(), s, &chart))
            .fold(Rat::zero(), |a, b| a + b);
        if volume.is_zero() {
            return Err(Error::Construction("configuration polytope is degenerate".into()));
        }
        Ok(TwistVolume {
            comb: comb.clone(),
            q0: seq.cumulative,
            polytope,
            triangulation,
            chart,
            volume,
        })
    }

    /// `ℓ(W₀)` in the canonical chart.
    pub fn base_volume(&self) -> Rat {
        let k = self.chart.dim();
        let fact = (1..=k).fold(Int::one(), |acc, i| acc * Int::from(i));
        &self.volume / Rat::from_integer(fact)
    }

    /// Projective maps send simplices to simplices, so the image volume is
    /// the sum over the transported triangulation.
    pub fn ratio(&self, n: u64) -> Result<Rat> {
        let qn = self.q0.pow(n);
        let image: Vec<RationalVector> = self
            .polytope
            .vertices()
            .iter()
            .map(|v| projectivize(&qn, v))
            .collect::<Result<_>>()?;
        let vol = self
            .triangulation
            .simplices
            .iter()
            .map(|s| simplex_volume_raw(&image, s, &self.chart))
            .fold(Rat::zero(), |a, b| a + b);
        Ok(vol / &self.volume)
    }
}

pub fn twist_volume_ratio(comb: &Combinatorics, n: u64) -> Result<Rat> {
    TwistVolume::new(comb)?.ratio(n)
}

/// Uniform integer in `[0, bound)`.
fn uniform_below<R: Rng>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let excess = (words as u64) * 32 - bits;
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        if let Some(top) = digits.last_mut() {
            *top = top.checked_shr(excess as u32).unwrap_or(0);
        }
        let x = BigUint::from_slice(&digits);
        if &x < bound {
            return x;
        }
    }
}

const SAMPLE_BITS: u64 = 1024;

/// Exact uniform sampler on `W₀`: a simplex chosen with probability
/// proportional to its volume, then sorted dyadic uniforms as barycentric
/// coordinates. Samples are returned as integer width vectors.
pub struct PolytopeSampler {
    vertices: Vec<Vec<Int>>,
    simplices: Vec<Vec<usize>>,
    cumulative: Vec<BigUint>,
}

impl PolytopeSampler {
    pub fn new(polytope: &Polytope, tri: &Triangulation) -> Result<Self> {
        let chart = polytope.chart();
        let vols: Vec<Rat> = tri
            .simplices
            .iter()
            .map(|s| simplex_volume_raw(polytope.vertices(), s, &chart))
            .collect();
        let den = vols.iter().fold(Int::one(), |acc, v| acc.lcm(v.denom()));
        let mut acc = BigUint::zero();
        let mut cumulative = Vec::new();
        for v in &vols {
            acc += (v * Rat::from_integer(den.clone()))
                .to_integer()
                .to_biguint()
                .expect("volumes are nonnegative");
            cumulative.push(acc.clone());
        }
        if acc.is_zero() {
            return Err(Error::invalid("cannot sample a degenerate polytope"));
        }
        let vden = polytope
            .vertices()
            .iter()
            .flat_map(|v| v.0.iter())
            .fold(Int::one(), |acc, x| acc.lcm(x.denom()));
        let vertices = polytope
            .vertices()
            .iter()
            .map(|v| {
                v.0.iter()
                    .map(|x| (x * Rat::from_integer(vden.clone())).to_integer())
                    .collect()
            })
            .collect();
        Ok(PolytopeSampler {
            vertices,
            simplices: tri.simplices.clone(),
            cumulative,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<Int> {
        let total = self.cumulative.last().expect("nonempty");
        let u = uniform_below(total, rng);
        let s = &self.simplices[self.cumulative.partition_point(|c| c <= &u)];
        let scale = BigUint::one() << SAMPLE_BITS;
        let mut cuts: Vec<BigUint> = (1..s.len()).map(|_| uniform_below(&scale, rng)).collect();
        cuts.sort();
        cuts.insert(0, BigUint::zero());
        cuts.push(scale);
        let d = self.vertices[0].len();
        let mut w = vec![Int::zero(); d];
        for (i, &v) in s.iter().enumerate() {
            let lambda = Int::from(&cuts[i + 1] - &cuts[i]);
            for (wj, vj) in w.iter_mut().zip(&self.vertices[v]) {
                *wj += &lambda * vj;
            }
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdistReport {
    pub trials: u64,
    pub hits: u64,
    /// Expansions that stopped on equal widths before a hit.
    pub halted: u64,
    pub misses: u64,
    pub hit_fraction: f64,
    /// Hitting times in power-of-two bins `[lo, hi]`.
    pub histogram: Vec<HistogramBin>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Hit(u64),
    Halted,
    Miss,
}

/// Runs from a uniform point of `W₀` until the stage is `φ₀` again with a
/// `C`-distributed cumulative matrix. Returns the expansion at that stage.
fn run_to_stage(
    start: &Combinatorics,
    w: Vec<Int>,
    c: &Rat,
    max_steps: u64,
    mut k: u64,
) -> (Outcome, IntegerExpansion) {
    let mut run = IntegerExpansion::new(start.clone(), w);
    if k == 0 {
        return (Outcome::Hit(0), run);
    }
    while run.steps < max_steps {
        if run.step().is_err() {
            return (Outcome::Halted, run);
        }
        if run.comb == *start && run.is_c_distributed(c) {
            k -= 1;
            if k == 0 {
                return (Outcome::Hit(run.steps), run);
            }
            // Later stages are measured from a fresh cocycle.
            run.column_sums.iter_mut().for_each(|s| *s = Int::one());
        }
    }
    (Outcome::Miss, run)
}

/// Samples widths uniformly from `W₀` and records the first step at which
/// the stage is `φ₀` with a `C`-distributed cumulative matrix.
pub fn cdist_experiment(comb: &Combinatorics, c: &Rat, trials: u64, max_steps: u64, seed: u64) -> Result<CdistReport> {
    if c <= &Rat::one() {
        return Err(Error::invalid("C must exceed 1"));
    }
    if trials == 0 {
        return Ok(CdistReport {
            trials: 0,
            hits: 0,
            halted: 0,
            misses: 0,
            hit_fraction: 0.0,
            histogram: Vec::new(),
        });
    }
    let polytope = configuration_polytope(comb);
    let sampler = PolytopeSampler::new(&polytope, &polytope.triangulate())?;
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = sampler.sample(&mut trial_rng(seed, t));
            run_to_stage(comb, w, c, max_steps, 1).0
        })
        .collect();
    let mut bins: BTreeMap<u32, u64> = BTreeMap::new();
    let (mut hits, mut halted, mut misses) = (0, 0, 0);
    for o in outcomes {
        match o {
            Outcome::Hit(n) => {
                hits += 1;
                *bins.entry(64 - n.leading_zeros()).or_insert(0) += 1;
            }
            Outcome::Halted => halted += 1,
            Outcome::Miss => misses += 1,
        }
    }
    let histogram = bins
        .into_iter()
        .map(|(b, count)| {
            let lo = if b == 0 { 0 } else { 1u64 << (b - 1) };
            HistogramBin {
                lo,
                hi: if b == 0 { 0 } else { (1u64 << b) - 1 },
                count,
            }
        })
        .collect();
    Ok(CdistReport {
        trials,
        hits,
        halted,
        misses,
        hit_fraction: hits as f64 / trials as f64,
        histogram,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YmnReport {
    pub m: u64,
    pub n: u64,
    /// Fraction of `W₀` (not absolute measure).
    pub estimate: Estimate,
    /// Exact `(ℓ(Y_n)/ℓ(W₀))` when `m = 0`.
    #[serde(with = "crate::rational::opt_as_string")]
    pub exact: Option<Rat>,
}

/// Estimates the fraction of `W₀` whose expansion, after its `m`-th
/// `C`-distributed return to `φ₀`, continues with `n` twist loops.
/// Expansions that never reach that stage count as indeterminate.
#[allow(clippy::too_many_arguments)]
pub fn ymn_lebesgue(
    comb: &Combinatorics,
    m: u64,
    n: u64,
    c: &Rat,
    trials: u64,
    max_steps: u64,
    seed: u64,
) -> Result<YmnReport> {
    if n == 0 || trials == 0 {
        return Err(Error::invalid("n and trials must be at least 1"));
    }
    let tv = TwistVolume::new(comb)?;
    let loop_len = dehn_twist_sequence(comb)?.len() as u64;
    let b = twist_band(comb)?;
    let sampler = PolytopeSampler::new(&tv.polytope, &tv.triangulation)?;
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = sampler.sample(&mut trial_rng(seed, t));
            let (outcome, mut run) = run_to_stage(comb, w, c, max_steps, m);
            if !matches!(outcome, Outcome::Hit(_)) {
                return (0u64, 1u64);
            }
            for _ in 0..n * loop_len {
                match run.step() {
                    Ok(s) if s.winner == b => {}
                    Ok(_) => return (0, 0),
                    Err(_) => return (0, 1),
                }
            }
            (1, 0)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let exact = if m == 0 { Some(tv.ratio(n)?) } else { None };
    Ok(YmnReport {
        m,
        n,
        estimate: Estimate::from_counts(counts.0, counts.1, trials),
        exact,
    })
}

/// Closed-form twist ratio: `(n+1)^{-(d-2)}` for non-classical `φ₀`,
/// `1/(2n+1)` for the torus. `None` for other classical inputs.
pub fn twist_closed_form(comb: &Combinatorics, n: u64) -> Option<Rat> {
    if !comb.is_classical() {
        Some(twist_law(comb.d(), n))
    } else if comb.d() == 2 {
        Some(Rat::new(Int::one(), Int::from(2 * n + 1)))
    } else {
        None
    }
}

/// The closed form `(n+1)^{-(d-2)}`.
pub fn twist_law(d: usize, n: u64) -> Rat {
    let base = Int::from(n + 1);
    let e = d.saturating_sub(2) as u32;
    Rat::new(Int::one(), num_traits::pow(base, e as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn torus_special() {
        let p = build_phi0(1, 1).unwrap();
        assert_eq!(p.comb, Combinatorics::rotation_class(2));
        let r = analyze_regions(&p.comb).unwrap();
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.regions[0].cusps + r.regions[0].corners, 4);
        assert_eq!((r.genus, r.punctures), (1, 1));
    }

    #[test]
    fn case_five_smallest() {
        let p = build_phi0(0, 5).unwrap();
        assert_eq!(p.comb.d(), 5);
        assert_eq!(p.case, ConstructionCase::Case(5));
        let r = analyze_regions(&p.comb).unwrap();
        assert_eq!((r.triangles(), r.monogons()), (1, 5));
    }

    #[test]
    fn closed_genus_four() {
        let p = build_phi0(4, 0).unwrap();
        assert_eq!(p.comb.d(), 19);
        let r = analyze_regions(&p.comb).unwrap();
        assert_eq!((r.triangles(), r.monogons(), r.regions.len()), (12, 0, 12));
    }

    #[test]
    fn unsupported() {
        for (g, m) in [(0, 0), (0, 3), (1, 0)] {
            assert!(matches!(build_phi0(g, m), Err(Error::UnsupportedSurface { .. })));
        }
    }

    #[test]
    fn basic_block_pattern() {
        let mut gen = Labels(0);
        let (_, ends) = block(&mut gen);
        let idx: Vec<u32> = ends
            .iter()
            .map(|l| ["k1", "k2", "k3", "k4"].iter().position(|x| x == l).unwrap() as u32 + 1)
            .collect();
        // k1..k4 are o, t, u, v.
        assert_eq!(idx, basic_block());
    }

    #[test]
    fn torus_twist() {
        let t = Combinatorics::rotation_class(2);
        let s = dehn_twist_sequence(&t).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            s.cumulative,
            CocycleMatrix::from_rows(&[vec![1, 0], vec![2, 1]]).unwrap()
        );
        assert_eq!(twist_volume_ratio(&t, 3).unwrap(), rat(1, 7));
    }

    #[test]
    fn twist_ratio_small() {
        let p = build_phi0(0, 5).unwrap();
        let tv = TwistVolume::new(&p.comb).unwrap();
        assert_eq!(tv.ratio(0).unwrap(), int(1));
        assert_eq!(tv.ratio(1).unwrap(), rat(1, 8));
        assert_eq!(tv.ratio(4).unwrap(), rat(1, 125));
    }

    #[test]
    fn cdist_torus_and_empty() {
        let t = Combinatorics::rotation_class(2);
        let r = cdist_experiment(&t, &int(2), 50, 10_000, 1).unwrap();
        assert_eq!(r.hits, 50);
        let r = cdist_experiment(&t, &int(2), 0, 10, 1).unwrap();
        assert_eq!((r.trials, r.histogram.len()), (0, 0));
    }

    #[test]
    fn sampler_lands_in_polytope() {
        let p = build_phi0(0, 5).unwrap();
        let poly = configuration_polytope(&p.comb);
        let s = PolytopeSampler::new(&poly, &poly.triangulate()).unwrap();
        let mut rng = trial_rng(5, 0);
        for _ in 0..20 {
            let w = s.sample(&mut rng);
            let total: Int = w.iter().sum();
            let wv = crate::iet::WidthVector(w.iter().map(|x| Rat::new(x.clone(), total.clone())).collect());
            assert!(crate::iet::validate(&p.comb, &wv).unwrap());
        }
    }
}
