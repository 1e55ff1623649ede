//! Random walks on 2×2 integer matrices and Monte Carlo estimates of the
//! harmonic measure of boundary sets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::rational::{parse_rational, Int, Rat};
use crate::torus::{common_prefix, cylinder_interval, decide_x, Interval, Word};

/// Finitely supported step law.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    support: Vec<(Mat2, Rat)>,
    /// Cumulative numerators over the common denominator `denom`.
    cumulative: Vec<u64>,
    denom: u64,
}

#[derive(Deserialize)]
struct JsonAtom {
    matrix: [[i64; 2]; 2],
    p: serde_json::Value,
}

impl Distribution {
    pub fn new(support: Vec<(Mat2, Rat)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("a distribution needs at least one atom"));
        }
        let mut total = Rat::zero();
        for (m, p) in &support {
            if !p.is_positive() {
                return Err(Error::invalid(format!("probability {p} of {m} is not positive")));
            }
            if !m.det().abs().is_one() {
                return Err(Error::invalid(format!("{m} does not have determinant ±1")));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let denom = support.iter().fold(Int::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let denom_u = denom
            .to_u64()
            .ok_or_else(|| Error::invalid("probability denominators are too large"))?;
        let mut acc = 0u64;
        let mut cumulative = Vec::with_capacity(support.len());
        for (_, p) in &support {
            acc += (p * Rat::from_integer(denom.clone()))
                .to_integer()
                .to_u64()
                .expect("bounded by denom");
            cumulative.push(acc);
        }
        Ok(Distribution {
            support,
            cumulative,
            denom: denom_u,
        })
    }

    pub fn uniform(mats: Vec<Mat2>) -> Result<Self> {
        let p = Rat::new(Int::one(), Int::from(mats.len().max(1)));
        Self::new(mats.into_iter().map(|m| (m, p.clone())).collect())
    }

    pub fn point_mass(m: Mat2) -> Result<Self> {
        Self::new(vec![(m, Rat::one())])
    }

    /// `R` and `L` with probability 1/2 each.
    pub fn uniform2() -> Self {
        Self::uniform(vec![Mat2::r(), Mat2::l()]).expect("valid")
    }

    /// `R, L, R⁻¹, L⁻¹` with probability 1/4 each.
    pub fn uniform4() -> Self {
        let (r, l) = (Mat2::r(), Mat2::l());
        let (ri, li) = (r.inverse().expect("unimodular"), l.inverse().expect("unimodular"));
        Self::uniform(vec![r, l, ri, li]).expect("valid")
    }

    /// `[{"matrix": [[a,b],[c,d]], "p": "1/4"}, …]`; `p` may also be an integer.
    pub fn from_json(text: &str) -> Result<Self> {
        let atoms: Vec<JsonAtom> =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad distribution JSON: {e}")))?;
        let mut support = Vec::new();
        for a in atoms {
            let p = match &a.p {
                serde_json::Value::String(s) => parse_rational(s)?,
                serde_json::Value::Number(n) if n.is_i64() => Rat::from_integer(n.as_i64().expect("i64").into()),
                other => return Err(Error::invalid(format!("probability {other} must be a \"p/q\" string"))),
            };
            support.push((Mat2::from_rows(a.matrix), p));
        }
        Self::new(support)
    }

    pub fn support(&self) -> &[(Mat2, Rat)] {
        &self.support
    }

    /// Exact sampling: a uniform integer below the common denominator.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> &Mat2 {
        &self.support[self.index(rng)].0
    }

    fn index<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.gen_range(0..self.denom);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// A walk `ω_n = h g₁ ⋯ g_n` with an optional fixed first factor `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    pub initial: Option<Mat2>,
    pub mu: Distribution,
}

impl Walk {
    pub fn new(mu: Distribution) -> Self {
        Walk { initial: None, mu }
    }

    /// The non-backtracking letter model on the Farey tree: a forced first
    /// `R`, then independent fair letters. Its limit law gives
    /// `ν(X_{m,n}) = 2^{-n}`.
    pub fn tree() -> Self {
        Walk {
            initial: Some(Mat2::r()),
            mu: Distribution::uniform2(),
        }
    }

    /// `tree`, `uniform2`, `uniform4`.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "tree" => Some(Self::tree()),
            "uniform2" => Some(Self::new(Distribution::uniform2())),
            "uniform4" => Some(Self::new(Distribution::uniform4())),
            _ => None,
        }
    }
}

/// Per-trial stream: scheduling cannot change what a trial sees.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkTrace {
    pub seed: u64,
    /// `products[i]` is `ω_{i+1}`.
    pub products: Vec<Mat2>,
}

impl WalkTrace {
    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn last(&self) -> Option<&Mat2> {
        self.products.last()
    }
}

/// Machine-word product with a big-integer fallback once entries overflow.
enum Product {
    Small([i128; 4]),
    Big(Mat2),
}

impl Product {
    fn new(m: &Mat2) -> Self {
        match (m.a.to_i128(), m.b.to_i128(), m.c.to_i128(), m.d.to_i128()) {
            (Some(a), Some(b), Some(c), Some(d)) => Product::Small([a, b, c, d]),
            _ => Product::Big(m.clone()),
        }
    }

    fn mul(&mut self, g: &Mat2, gs: &Option<[i128; 4]>) {
        if let (Product::Small(m), Some(g)) = (&*self, gs) {
            let f = |x: i128, y: i128, z: i128, w: i128| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
            if let (Some(a), Some(b), Some(c), Some(d)) = (
                f(m[0], g[0], m[1], g[2]),
                f(m[0], g[1], m[1], g[3]),
                f(m[2], g[0], m[3], g[2]),
                f(m[2], g[1], m[3], g[3]),
            ) {
                *self = Product::Small([a, b, c, d]);
                return;
            }
        }
        let big = self.to_mat2().mul(g);
        *self = Product::Big(big);
    }

    fn to_mat2(&self) -> Mat2 {
        match self {
            Product::Small([a, b, c, d]) => Mat2 {
                a: BigInt::from(*a),
                b: BigInt::from(*b),
                c: BigInt::from(*c),
                d: BigInt::from(*d),
            },
            Product::Big(m) => m.clone(),
        }
    }
}

fn small(m: &Mat2) -> Option<[i128; 4]> {
    Some([m.a.to_i128()?, m.b.to_i128()?, m.c.to_i128()?, m.d.to_i128()?])
}

/// Runs the walk and returns `ω_steps`, calling `visit` after each step.
fn run(walk: &Walk, steps: usize, rng: &mut ChaCha8Rng, mut visit: impl FnMut(&Product)) -> Mat2 {
    let smalls: Vec<Option<[i128; 4]>> = walk.mu.support.iter().map(|(m, _)| small(m)).collect();
    let mut p = Product::new(walk.initial.as_ref().unwrap_or(&Mat2::identity()));
    for _ in 0..steps {
        let i = walk.mu.index(rng);
        p.mul(&walk.mu.support[i].0, &smalls[i]);
        visit(&p);
    }
    p.to_mat2()
}

/// `steps` increments of `mu` from the identity, reproducible from `seed`.
pub fn sample_path(mu: &Distribution, steps: usize, seed: u64) -> Result<WalkTrace> {
    sample_walk(&Walk::new(mu.clone()), steps, seed)
}

pub fn sample_walk(walk: &Walk, steps: usize, seed: u64) -> Result<WalkTrace> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let mut products = Vec::with_capacity(steps);
    run(walk, steps, &mut trial_rng(seed, 0), |p| products.push(p.to_mat2()));
    Ok(WalkTrace { seed, products })
}

/// A closed arc of the boundary `ℝ ∪ {∞}` not passing through `∞`; `None`
/// endpoints are `−∞` and `+∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Arc {
    #[serde(with = "crate::rational::opt_as_string")]
    pub lo: Option<Rat>,
    #[serde(with = "crate::rational::opt_as_string")]
    pub hi: Option<Rat>,
    /// False when the product has not moved off the base edge `(0, ∞)`.
    pub resolved: bool,
}

impl Arc {
    fn unresolved() -> Self {
        Arc {
            lo: Some(Rat::zero()),
            hi: None,
            resolved: false,
        }
    }

    /// The arc as a finite interval, when it is one.
    pub fn interval(&self) -> Option<Interval> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => Some(Interval {
                lo: lo.clone(),
                hi: hi.clone(),
            }),
            _ => None,
        }
    }

    pub fn width(&self) -> Option<Rat> {
        self.interval().map(|i| i.length())
    }

    fn within(&self, lo: &Rat, hi: &Rat) -> bool {
        matches!((&self.lo, &self.hi), (Some(a), Some(b)) if lo <= a && b <= hi)
    }

    fn misses(&self, lo: &Rat, hi: &Rat) -> bool {
        let below = matches!(&self.hi, Some(b) if b <= lo);
        let above = matches!(&self.lo, Some(a) if a >= hi);
        below || above
    }
}

fn endpoint(num: &Int, den: &Int) -> Option<Rat> {
    if den.is_zero() {
        None
    } else {
        Some(Rat::new(num.clone(), den.clone()))
    }
}

/// The arc cut off by the edge `ω(0, ∞)` on the side away from the base
/// edge `(0, ∞)`. For nonnegative `ω` this is the interval between the
/// column slopes `b/d` and `a/c`.
pub fn boundary_arc(m: &Mat2) -> Arc {
    let p = endpoint(&m.b, &m.d);
    let q = endpoint(&m.a, &m.c);
    let zero = Rat::zero();
    match (p, q) {
        (None, None) => Arc::unresolved(),
        (Some(r), None) | (None, Some(r)) => {
            if r.is_positive() {
                Arc {
                    lo: Some(r),
                    hi: None,
                    resolved: true,
                }
            } else if r.is_negative() {
                Arc {
                    lo: None,
                    hi: Some(r),
                    resolved: true,
                }
            } else {
                Arc::unresolved()
            }
        }
        (Some(p), Some(q)) => {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            if lo < zero && zero < hi {
                // Would contain the base edge; cannot happen for a
                // tessellation-preserving ω.
                return Arc::unresolved();
            }
            Arc {
                lo: Some(lo),
                hi: Some(hi),
                resolved: true,
            }
        }
    }
}

/// Boundary arc of the final product of a trace.
pub fn boundary_point(trace: &WalkTrace) -> Result<Arc> {
    let last = trace.last().ok_or_else(|| Error::invalid("empty trace"))?;
    Ok(boundary_arc(last))
}

/// A boundary set whose membership can be decided from an arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Interval(Interval),
    Cylinder(Word),
    /// `X_{m,n} = {x ∈ (0,1) : a_m(x) > n}`.
    X {
        m: usize,
        n: u64,
    },
}

impl Target {
    /// `X(m,n)`, `[a,b]` with rational endpoints, or an R/L word.
    pub fn parse(s: &str) -> Result<Target> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("X(").and_then(|r| r.strip_suffix(')')) {
            let (m, n) = inner
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("bad target {s:?}")))?;
            let m: usize = m
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad index in {s:?}")))?;
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad threshold in {s:?}")))?;
            if m == 0 || n == 0 {
                return Err(Error::invalid("X(m,n) needs m, n ≥ 1"));
            }
            return Ok(Target::X { m, n });
        }
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("bad interval {s:?}")))?;
            let (lo, hi) = (parse_rational(a)?, parse_rational(b)?);
            if lo > hi {
                return Err(Error::invalid(format!("empty interval {s:?}")));
            }
            return Ok(Target::Interval(Interval { lo, hi }));
        }
        Ok(Target::Cylinder(Word::parse(t)?))
    }

    /// `Some(member)` once the arc lies inside the set or misses it.
    pub fn decide(&self, arc: &Arc) -> Option<bool> {
        if !arc.resolved {
            return None;
        }
        let in_interval = |i: &Interval| {
            if arc.within(&i.lo, &i.hi) {
                Some(true)
            } else if arc.misses(&i.lo, &i.hi) {
                Some(false)
            } else {
                None
            }
        };
        match self {
            Target::Interval(i) => in_interval(i),
            Target::Cylinder(w) => in_interval(&cylinder_interval(w)),
            Target::X { m, n } => {
                let (zero, one) = (Rat::zero(), Rat::one());
                if arc.misses(&zero, &one) {
                    return Some(false);
                }
                let i = arc.interval().filter(|_| arc.within(&zero, &one))?;
                decide_x(&common_prefix(&i.lo, &i.hi, m + 1), *m, *n)
            }
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Interval(i) => write!(f, "[{},{}]", i.lo, i.hi),
            Target::Cylinder(w) => write!(f, "{w}"),
            Target::X { m, n } => write!(f, "X({m},{n})"),
        }
    }
}

pub const Z95: f64 = 1.959964;

/// Wilson score interval for `hits` out of `trials`.
pub fn wilson(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub hits: u64,
    /// Trials whose arc still straddled the target after the last step.
    pub indeterminate: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, indeterminate: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson(hits, trials);
        let point = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Estimate {
            point,
            ci_lo,
            ci_hi,
            trials,
            hits,
            indeterminate,
        }
    }

    pub fn indeterminate_frac(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.indeterminate as f64 / self.trials as f64
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_hi - self.ci_lo) / 2.0
    }
}

/// Runs `trials` independent walks and decides every target from the same
/// final product of each trial.
pub fn harmonic_estimates(
    walk: &Walk,
    targets: &[Target],
    steps: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if steps == 0 || trials == 0 {
        return Err(Error::invalid("steps and trials must be at least 1"));
    }
    let k = targets.len();
    let zero = || vec![(0u64, 0u64); k];
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let last = run(walk, steps, &mut trial_rng(seed, t), |_| ());
            let arc = boundary_arc(&last);
            targets
                .iter()
                .map(|target| match target.decide(&arc) {
                    Some(true) => (1, 0),
                    Some(false) => (0, 0),
                    None => (0, 1),
                })
                .collect::<Vec<(u64, u64)>>()
        })
        .reduce(zero, |a, b| {
            a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect()
        });
    Ok(counts
        .into_iter()
        .map(|(h, u)| Estimate::from_counts(h, u, trials))
        .collect())
}

pub fn harmonic_estimate(walk: &Walk, target: &Target, steps: usize, trials: u64, seed: u64) -> Result<Estimate> {
    Ok(harmonic_estimates(walk, std::slice::from_ref(target), steps, trials, seed)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// `exp(slope)` of the least-squares line through `(n, ln estimate)`.
    pub rate: f64,
    pub r_squared: f64,
    /// Quadratic coefficient of a degree-2 fit; near zero for exact
    /// exponential decay.
    pub curvature: f64,
    pub points_used: usize,
}

/// Log-linear fit of `(n, estimate)`; nonpositive estimates are skipped.
pub fn decay_fit(points: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| (n, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Unavailable("decay fit needs three positive estimates".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Unavailable("decay fit needs distinct n".into()));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit {
        rate: slope.exp(),
        r_squared,
        curvature: quadratic_coefficient(&pts),
        points_used: pts.len(),
    })
}

/// Leading coefficient of the least-squares parabola, via centered
/// orthogonal polynomials.
fn quadratic_coefficient(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let m2 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / k;
    let m3 = pts.iter().map(|p| (p.0 - mx).powi(3)).sum::<f64>() / k;
    // q(x) = (x−mx)² − (m3/m2)(x−mx) − m2 is orthogonal to 1 and x.
    let q = |x: f64| {
        let u = x - mx;
        u * u - if m2 > 0.0 { m3 / m2 * u } else { 0.0 } - m2
    };
    let qq: f64 = pts.iter().map(|p| q(p.0).powi(2)).sum();
    if qq <= 1e-300 {
        return 0.0;
    }
    pts.iter().map(|p| q(p.0) * p.1).sum::<f64>() / qq
}
