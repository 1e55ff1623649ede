//! The torus model: slopes in (0,1), continued fractions and R/L words.
//!
//! Matrices act in `(λ₂, λ₁)` coordinates, so a word matrix `[[a,b],[c,d]]`
//! maps the slope interval `[0, ∞]` onto the interval between `b/d` and
//! `a/c`. Its cylinder has length `1/(c d)`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Halt, Result};
use crate::exact::CocycleMatrix;
use crate::iet::{Combinatorics, SplittingSequence, WidthVector};
use crate::mat2::Mat2;
use crate::rational::{Int, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Letter {
    R,
    L,
}

impl Letter {
    pub fn matrix(self) -> Mat2 {
        match self {
            Letter::R => Mat2::r(),
            Letter::L => Mat2::l(),
        }
    }

    pub fn other(self) -> Letter {
        match self {
            Letter::R => Letter::L,
            Letter::L => Letter::R,
        }
    }
}

/// Run-length word `R^{a₁} L^{a₂} R^{a₃} ⋯`. When `open` is set the last
/// block may continue past what is recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    pub runs: Vec<u64>,
    pub open: bool,
}

/// Letter of block `i` (0-based).
pub fn block_letter(i: usize) -> Letter {
    if i.is_multiple_of(2) {
        Letter::R
    } else {
        Letter::L
    }
}

impl Word {
    pub fn new(runs: Vec<u64>) -> Result<Self> {
        if runs.contains(&0) {
            return Err(Error::invalid("run lengths must be positive"));
        }
        Ok(Word { runs, open: false })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let mut w = Word::default();
        for &l in letters {
            w.push(l)?;
        }
        Ok(w)
    }

    pub fn push(&mut self, l: Letter) -> Result<()> {
        if self.runs.is_empty() {
            if l != Letter::R {
                return Err(Error::invalid("words begin with R"));
            }
            self.runs.push(1);
        } else if block_letter(self.runs.len() - 1) == l {
            *self.runs.last_mut().expect("nonempty") += 1;
        } else {
            self.runs.push(1);
        }
        Ok(())
    }

    pub fn with(&self, l: Letter) -> Result<Word> {
        let mut w = self.clone();
        w.push(l)?;
        Ok(w)
    }

    pub fn len(&self) -> u64 {
        self.runs.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for (i, &a) in self.runs.iter().enumerate() {
            out.extend(std::iter::repeat_n(block_letter(i), a as usize));
        }
        out
    }

    /// Parses `R3L2`, `RLRL`, `R^3 L^2`; the empty string is the empty word.
    pub fn parse(s: &str) -> Result<Word> {
        let mut w = Word::default();
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace() && *c != '^').collect();
        let mut chars = cleaned.chars().peekable();
        while let Some(c) = chars.next() {
            let l = match c {
                'R' | 'r' => Letter::R,
                'L' | 'l' => Letter::L,
                _ => return Err(Error::invalid(format!("unexpected {c:?} in word {s:?}"))),
            };
            let mut digits = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(d);
                chars.next();
            }
            let k: u64 = if digits.is_empty() {
                1
            } else {
                digits
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad exponent in {s:?}")))?
            };
            if k == 0 {
                return Err(Error::invalid(format!("zero exponent in {s:?}")));
            }
            for _ in 0..k {
                w.push(l)?;
            }
        }
        Ok(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &a) in self.runs.iter().enumerate() {
            let l = if block_letter(i) == Letter::R { "R" } else { "L" };
            if a == 1 {
                f.write_str(l)?;
            } else {
                write!(f, "{l}{a}")?;
            }
        }
        Ok(())
    }
}

/// A closed slope interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(with = "crate::rational::as_string")]
    pub lo: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub hi: Rat,
}

impl Interval {
    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Certified enclosure of an exact quantity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    #[serde(with = "crate::rational::as_string")]
    pub lower: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub upper: Rat,
}

impl Bounds {
    pub fn exact(x: Rat) -> Self {
        Bounds {
            lower: x.clone(),
            upper: x,
        }
    }
}

pub fn word_mat2(w: &Word) -> Mat2 {
    let mut m = Mat2::identity();
    for (i, &a) in w.runs.iter().enumerate() {
        let a = Int::from(a);
        m = match block_letter(i) {
            Letter::R => Mat2 {
                a: &m.a + &m.b * &a,
                b: m.b.clone(),
                c: &m.c + &m.d * &a,
                d: m.d.clone(),
            },
            Letter::L => Mat2 {
                a: m.a.clone(),
                b: &m.b + &m.a * &a,
                c: m.c.clone(),
                d: &m.d + &m.c * &a,
            },
        };
    }
    m
}

/// Ordered product of the letter matrices.
pub fn word_matrix(w: &Word) -> CocycleMatrix {
    word_mat2(w).to_cocycle().expect("word matrices are nonnegative")
}

/// Closure of the slopes whose expansion begins with `w`.
pub fn cylinder_interval(w: &Word) -> Interval {
    if w.is_empty() {
        return Interval {
            lo: Rat::zero(),
            hi: Rat::one(),
        };
    }
    let m = word_mat2(w);
    let p = Rat::new(m.b.clone(), m.d.clone());
    let q = Rat::new(m.a.clone(), m.c.clone());
    if p <= q {
        Interval { lo: p, hi: q }
    } else {
        Interval { lo: q, hi: p }
    }
}

/// Continued-fraction word of a rational slope in (0,1). The last block is
/// the final Euclidean quotient, so `1/2 → R²` and `2/5 → R²L²`.
pub fn cf_expand(x: &Rat) -> Result<Word> {
    if x <= &Rat::zero() || x >= &Rat::one() {
        return Err(Error::invalid(format!("slope {x} is not in (0,1)")));
    }
    let (mut p, mut q) = (x.numer().clone(), x.denom().clone());
    let mut runs = Vec::new();
    while !p.is_zero() {
        let (a, r) = q.div_rem(&p);
        runs.push(
            a.to_u64()
                .ok_or_else(|| Error::invalid("continued fraction quotient too large"))?,
        );
        q = p;
        p = r;
    }
    Word::new(runs)
}

/// The torus exchange `top = [2,1]`, `bottom = [1,2]`.
pub fn torus_combinatorics() -> Combinatorics {
    Combinatorics::rotation_class(2)
}

/// Widths `(λ₁, λ₂) = (1/(1+x), x/(1+x))` of slope `x`.
pub fn torus_widths(x: &Rat) -> WidthVector {
    let s = Rat::one() + x;
    WidthVector(vec![Rat::one() / &s, x / &s])
}

/// Letters of a torus expansion: band 1 winning is `R`. A tie at the end
/// closes the last block with one more letter, matching [`cf_expand`].
pub fn expansion_word(seq: &SplittingSequence) -> Result<Word> {
    let comb = &seq.start;
    let mut w = Word::default();
    let mut last = None;
    for s in &seq.steps {
        let l = match comb.label(s.winner) {
            "1" => Letter::R,
            "2" => Letter::L,
            other => return Err(Error::invalid(format!("band {other:?} is not a torus band"))),
        };
        w.push(l)?;
        last = Some(l);
    }
    match (seq.halt, last) {
        (Some(Halt::EqualWidths), Some(l)) => w.push(l)?,
        (Some(Halt::EqualWidths), None) => w.push(Letter::R)?,
        _ => w.open = true,
    }
    Ok(w)
}

/// Longest word `w` with `[lo, hi] ⊆ cylinder(w)`, for `0 ≤ lo ≤ hi ≤ 1`,
/// by Stern–Brocot descent one block at a time. At most `max_blocks` blocks
/// are produced; an unbounded block (the interval touches 0 or a vertex) is
/// recorded as `u64::MAX`.
pub fn common_prefix(lo: &Rat, hi: &Rat, max_blocks: usize) -> Word {
    // In each phase the block length is floor(lower endpoint); the R phase
    // works in y = 1/x. None stands for ∞.
    fn inv(x: &Option<Rat>) -> Option<Rat> {
        match x {
            None => Some(Rat::zero()),
            Some(v) if v.is_zero() => None,
            Some(v) => Some(v.recip()),
        }
    }
    let mut low = inv(&Some(hi.clone()));
    let mut high = inv(&Some(lo.clone()));
    let mut runs = Vec::new();
    while runs.len() < max_blocks {
        let a = match &low {
            None => u64::MAX,
            Some(v) => v.floor().to_integer().to_u64().unwrap_or(u64::MAX),
        };
        if a == 0 {
            break;
        }
        runs.push(a);
        let Some(l) = low else { break };
        if a == u64::MAX {
            break;
        }
        let ai = Rat::from_integer(Int::from(a));
        let l = l - &ai;
        let h = high.map(|h| h - &ai);
        low = inv(&h);
        high = inv(&Some(l));
    }
    Word { runs, open: true }
}

/// Decides `a_m > n` from a common prefix, if the prefix determines it.
pub fn decide_x(word: &Word, m: usize, n: u64) -> Option<bool> {
    let k = word.runs.len();
    if k > m {
        Some(word.runs[m - 1] > n)
    } else if k == m && word.runs[m - 1] > n {
        Some(true)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Certified cylinder sums for events {a_{m_i} > n_i}.

/// Tuning for certified sums. Cylinders lighter than `2^-floor_bits` are not
/// refined; their contribution is bracketed by the conditional bounds.
#[derive(Clone, Copy, Debug)]
pub struct SumConfig {
    pub budget: u64,
    pub floor_bits: u32,
}

impl SumConfig {
    pub fn new(budget: u64) -> Self {
        SumConfig { budget, floor_bits: 16 }
    }
}

const PRECISION_BITS: u64 = 256;
const EXACT_TERMS: usize = 512;

struct Term {
    /// Mass is `1/den`.
    den: BigUint,
    lo: Rat,
    hi: Rat,
}

fn row_after(c: &BigUint, d: &BigUint, letter: Letter, k: u64) -> (BigUint, BigUint) {
    match letter {
        Letter::R => (c + d * k, d.clone()),
        Letter::L => (c.clone(), d + c * k),
    }
}

/// Conditional bounds `[1/(t+1), 2/(t+2)]` on `a_i > t` given any exact
/// prefix before block `i`, multiplied over the constraints.
fn conditional(constraints: &[(usize, u64)]) -> (Rat, Rat) {
    let mut lo = Rat::one();
    let mut hi = Rat::one();
    for &(_, t) in constraints {
        lo *= Rat::new(Int::one(), Int::from(t) + 1);
        hi *= Rat::new(Int::from(2), Int::from(t) + 2);
    }
    (lo, hi)
}

fn dfs(
    depth: usize,
    c: BigUint,
    d: BigUint,
    constraints: &[(usize, u64)],
    cfg: &SumConfig,
    floor: &BigUint,
    out: &mut Vec<Term>,
) {
    let letter = block_letter(depth);
    let remaining: Vec<(usize, u64)> = constraints.iter().copied().filter(|&(i, _)| i > depth).collect();
    let Some(&(first, threshold)) = remaining.first() else {
        // Nothing left to decide: the whole exact-prefix cylinder counts.
        let (c1, d1) = row_after(&c, &d, letter, 1);
        out.push(Term {
            den: c1 * d1,
            lo: Rat::one(),
            hi: Rat::one(),
        });
        return;
    };
    let (c1, d1) = row_after(&c, &d, letter, 1);
    let node_den = &c1 * &d1;
    if &node_den > floor {
        let (lo, hi) = conditional(&remaining);
        out.push(Term { den: node_den, lo, hi });
        return;
    }
    let block = depth + 1;
    let constrained = first == block;
    if constrained && remaining.len() == 1 {
        let (c2, d2) = row_after(&c, &d, letter, threshold + 1);
        out.push(Term {
            den: c2 * d2,
            lo: Rat::one(),
            hi: Rat::one(),
        });
        return;
    }
    let start = if constrained { threshold + 1 } else { 1 };
    for a in start..=cfg.budget {
        let (c2, d2) = row_after(&c, &d, letter, a);
        dfs(depth + 1, c2, d2, &remaining, cfg, floor, out);
    }
    // Coefficients above the budget (and above the threshold).
    let cut = cfg.budget.max(if constrained { threshold } else { 0 });
    let (c2, d2) = row_after(&c, &d, letter, cut + 1);
    let later: Vec<(usize, u64)> = remaining.iter().copied().filter(|&(i, _)| i > block).collect();
    let (lo, hi) = conditional(&later);
    out.push(Term { den: c2 * d2, lo, hi });
}

fn sum_terms(terms: &[Term]) -> Bounds {
    if terms.len() <= EXACT_TERMS {
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for t in terms {
            let m = Rat::new(Int::one(), Int::from(t.den.clone()));
            lo += &m * &t.lo;
            hi += &m * &t.hi;
        }
        return Bounds {
            lower: round_down(&lo),
            upper: round_up(&hi).min(Rat::one()),
        };
    }
    let scale = BigUint::one() << PRECISION_BITS;
    let mut lo = BigUint::zero();
    let mut hi = BigUint::zero();
    for t in terms {
        let (ln, ld) = (
            t.lo.numer().to_biguint().expect("nonnegative"),
            t.lo.denom().to_biguint().expect("positive"),
        );
        let (hn, hd) = (
            t.hi.numer().to_biguint().expect("nonnegative"),
            t.hi.denom().to_biguint().expect("positive"),
        );
        lo += (&scale * ln) / (&t.den * ld);
        let den = &t.den * hd;
        let (q, r) = (&scale * hn).div_rem(&den);
        hi += if r.is_zero() { q } else { q + 1u32 };
    }
    let s = Int::from(scale);
    Bounds {
        lower: round_down(&Rat::new(Int::from(lo), s.clone())),
        upper: round_up(&Rat::new(Int::from(hi), s)).min(Rat::one()),
    }
}

/// Reported bounds live on the grid `2^-REPORT_BITS`, rounded outward, so
/// they stay certified and readable.
const REPORT_BITS: u64 = 64;

fn round_down(x: &Rat) -> Rat {
    if x.denom().bits() <= REPORT_BITS {
        return x.clone();
    }
    let s = Int::one() << REPORT_BITS;
    Rat::new((x * Rat::from_integer(s.clone())).floor().to_integer(), s)
}

fn round_up(x: &Rat) -> Rat {
    if x.denom().bits() <= REPORT_BITS {
        return x.clone();
    }
    let s = Int::one() << REPORT_BITS;
    Rat::new((x * Rat::from_integer(s.clone())).ceil().to_integer(), s)
}

/// Certified bounds on `ℓ({a_{m_i} > n_i for all i})`.
pub fn event_measure(constraints: &[(usize, u64)], cfg: &SumConfig) -> Result<Bounds> {
    let mut cons: Vec<(usize, u64)> = constraints.to_vec();
    cons.sort_unstable();
    cons.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 = b.1.max(a.1);
            true
        } else {
            false
        }
    });
    if cons.iter().any(|&(m, _)| m == 0) {
        return Err(Error::invalid("continued-fraction indices start at 1"));
    }
    if cons.is_empty() {
        return Ok(Bounds::exact(Rat::one()));
    }
    let floor = BigUint::one() << cfg.floor_bits;
    let (c0, d0) = (BigUint::zero(), BigUint::one());
    // Parallel over the first coefficient; terms are concatenated in order.
    let first_constrained = cons[0].0 == 1;
    let terms: Vec<Term> = if cons.len() == 1 && first_constrained || cfg.budget < 2 {
        let mut out = Vec::new();
        dfs(0, c0, d0, &cons, cfg, &floor, &mut out);
        out
    } else {
        let start = if first_constrained { cons[0].1 + 1 } else { 1 };
        let rest: Vec<(usize, u64)> = cons.iter().copied().filter(|&(i, _)| i > 1).collect();
        let mut parts: Vec<Vec<Term>> = (start..=cfg.budget)
            .into_par_iter()
            .map(|a| {
                let mut out = Vec::new();
                let (c, d) = row_after(&c0, &d0, Letter::R, a);
                dfs(1, c, d, &rest, cfg, &floor, &mut out);
                out
            })
            .collect();
        let cut = cfg.budget.max(if first_constrained { cons[0].1 } else { 0 });
        let (c, d) = row_after(&c0, &d0, Letter::R, cut + 1);
        let (lo, hi) = conditional(&rest);
        parts.push(vec![Term { den: c * d, lo, hi }]);
        parts.into_iter().flatten().collect()
    };
    let b = sum_terms(&terms);
    if b.lower > b.upper {
        return Err(Error::Internal(format!("bounds crossed: {} > {}", b.lower, b.upper)));
    }
    Ok(b)
}

/// `ℓ(X_{m,n})` for `X_{m,n} = {a_m > n}`: exact for `m = 1`, certified
/// bounds otherwise.
pub fn measure_x(m: usize, n: u64, budget: u64) -> Result<Bounds> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("X_{m,n} needs m ≥ 1 and n ≥ 1"));
    }
    if m == 1 {
        return Ok(Bounds::exact(Rat::new(Int::one(), Int::from(n) + 1)));
    }
    event_measure(&[(m, n)], &SumConfig::new(budget))
}

/// Certified upper bound on `ℓ(X_{m,m} ∩ X_{n,n}) / (ℓ(X_{m,m}) ℓ(X_{n,n}))`.
/// `None` means the lower bounds vanished and no finite bound is available.
pub fn almost_independence_check(m: usize, n: usize, budget: u64) -> Result<Option<Rat>> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("indices start at 1"));
    }
    let cfg = SumConfig::new(budget);
    let a = measure_x(m, m as u64, budget)?;
    if m == n {
        if a.lower.is_zero() {
            return Ok(None);
        }
        return Ok(Some(a.lower.recip()));
    }
    let b = measure_x(n, n as u64, budget)?;
    let both = event_measure(&[(m, m as u64), (n, n as u64)], &cfg)?;
    if a.lower.is_zero() || b.lower.is_zero() {
        return Ok(None);
    }
    Ok(Some(both.upper / (a.lower * b.lower)))
}

/// `ν(X_{m,n})` for the tree walk: after the forced first `R`, letters are
/// independent fair choices, so block lengths are independent with
/// `P(a = r) = 2^{-r}`. Earlier blocks end with total probability
/// `Σ_r 2^{-r} = 1`; block `m` survives `n` letters with probability
/// `1 − Σ_{r ≤ n} 2^{-r}`.
pub fn tree_harmonic_x_mn(m: usize, n: u64) -> Result<Rat> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("X_{m,n} needs m ≥ 1 and n ≥ 1"));
    }
    // Blocks 1..m-1 end almost surely, so only block m matters.
    let two = Int::from(2);
    let mut ended = Rat::zero();
    let mut p = Rat::one();
    for _ in 0..n {
        p /= &two;
        ended += &p;
    }
    Ok(Rat::one() - ended)
}

/// `ν(X_{n,n}) = 2^{-n}` for odd `n`.
pub fn tree_harmonic_x(n: u64) -> Result<Rat> {
    if n.is_multiple_of(2) {
        return Err(Error::invalid("the harmonic law is stated for odd n only"));
    }
    tree_harmonic_x_mn(n as usize, n)
}

#[derive(Clone, Debug, Serialize)]
pub struct PartialBound {
    pub n: u64,
    #[serde(with = "crate::rational::as_string")]
    pub lower: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub upper: Rat,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartialExact {
    pub n: u64,
    #[serde(with = "crate::rational::as_string")]
    pub exact: Rat,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionBound {
    pub from: u64,
    pub to: u64,
    #[serde(with = "crate::rational::as_string")]
    pub nu_exact: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub l_lower: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub l_upper: Rat,
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub lebesgue_partial: Vec<PartialBound>,
    pub surrogate_partial: Vec<PartialExact>,
    pub harmonic_partial: Vec<PartialExact>,
    pub union_bounds: Vec<UnionBound>,
}

/// Partial sums over odd `n ≤ n_max` of the Lebesgue and harmonic measures
/// of `X_{n,n}`, and both measures of the unions `⋃_{k ≤ n ≤ n_max} X_{n,n}`.
pub fn singularity_demo(n_max: u64, budget: u64) -> Result<DemoReport> {
    if n_max.is_multiple_of(2) {
        return Err(Error::invalid("n_max must be odd"));
    }
    let odd: Vec<u64> = (1..=n_max).step_by(2).collect();
    let bounds: Vec<Bounds> = odd
        .iter()
        .map(|&n| measure_x(n as usize, n, budget))
        .collect::<Result<_>>()?;
    let mut report = DemoReport {
        lebesgue_partial: Vec::new(),
        surrogate_partial: Vec::new(),
        harmonic_partial: Vec::new(),
        union_bounds: Vec::new(),
    };
    let (mut lo, mut hi, mut sur, mut har) = (Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero());
    for (&n, b) in odd.iter().zip(&bounds) {
        lo += &b.lower;
        hi += &b.upper;
        sur += Rat::new(Int::one(), Int::from(n) + 1);
        har += tree_harmonic_x(n)?;
        report.lebesgue_partial.push(PartialBound {
            n,
            lower: lo.clone(),
            upper: hi.clone(),
        });
        report.surrogate_partial.push(PartialExact { n, exact: sur.clone() });
        report.harmonic_partial.push(PartialExact { n, exact: har.clone() });
    }
    let mut starts = vec![1];
    if n_max >= 5 && n_max - 4 != 1 {
        starts.push(n_max - 4);
    }
    for k in starts {
        let mut miss = Rat::one();
        let mut l_lower = Rat::zero();
        let mut l_upper = Rat::zero();
        for (&n, b) in odd.iter().zip(&bounds).filter(|(&n, _)| n >= k) {
            // Blocks are independent under the tree walk.
            miss *= Rat::one() - tree_harmonic_x(n)?;
            l_lower = l_lower.max(b.lower.clone());
            l_upper += &b.upper;
        }
        report.union_bounds.push(UnionBound {
            from: k,
            to: n_max,
            nu_exact: Rat::one() - miss,
            l_lower,
            l_upper: l_upper.min(Rat::one()),
        });
    }
    Ok(report)
}
