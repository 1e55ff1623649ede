//! Distortion diagnostics and Borel–Cantelli bookkeeping.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::CocycleMatrix;
use crate::polytope::Polytope;
use crate::rational::{pow, to_f64, Int, Rat};
use crate::torus::tree_harmonic_x;

/// `(max_v |Qv| / min_v |Qv|)^{k+1} ≤ C` over the vertices of `w`. Since
/// `|Qy|` is linear in `y`, the vertices extremize the Jacobian ratio.
pub fn is_uniformly_distorted(q: &CocycleMatrix, w: &Polytope, c: &Rat) -> Result<bool> {
    if c <= &Rat::one() {
        return Err(Error::invalid("C must exceed 1"));
    }
    Ok(&distortion(q, w)? <= c)
}

/// `(max_v |Qv| / min_v |Qv|)^{k+1}` over the vertices of `w`.
pub fn distortion(q: &CocycleMatrix, w: &Polytope) -> Result<Rat> {
    if w.ambient_dim() != q.dim() {
        return Err(Error::invalid("polytope and matrix dimensions differ"));
    }
    let masses: Vec<Rat> = w.vertices().iter().map(|v| q.image_mass(v)).collect();
    let max = masses.iter().max().expect("polytopes have vertices");
    let min = masses.iter().min().expect("polytopes have vertices");
    if min <= &Rat::zero() {
        return Err(Error::invalid("a vertex has zero mass"));
    }
    Ok(pow(&(max / min), w.dim() as u32 + 1))
}

/// `(κ/c, min(1, c·κ))` with `c = C^d`.
pub fn relative_probability_bounds(c: &Rat, d: u32, kappa: &Rat) -> Result<(Rat, Rat)> {
    if c <= &Rat::one() {
        return Err(Error::invalid("C must exceed 1"));
    }
    let cd = pow(c, d);
    let hi = (&cd * kappa).min(Rat::one());
    Ok((kappa / cd, hi))
}

/// Certified bounds on `ℓ(X_{m,n})`, keyed by `(m, n)`.
pub type LebesgueTable = BTreeMap<(u64, u64), (Rat, Rat)>;
/// Exact `ν(X_{m,n})`, keyed by `(m, n)`.
pub type HarmonicTable = BTreeMap<(u64, u64), Rat>;

/// How the sets `X_{m,n}` are grouped into the sequence `X_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// `X_n = ⋃ X_{m,n}` over `s(n) ≤ m ≤ t(n)` with
    /// `s(n) = Σ_{i≤n} i^{j−1}` and `t(n) = Σ_{i≤n+1} i^{j−1}`.
    Levels { j: u32 },
    /// `X_n = X_{n,n}`.
    Diagonal,
}

impl Layout {
    pub fn range(&self, n: u64) -> (u64, u64) {
        match *self {
            Layout::Levels { j } => {
                let s: u64 = (1..=n).map(|i| i.pow(j.saturating_sub(1))).sum();
                (s, s + (n + 1).pow(j.saturating_sub(1)))
            }
            Layout::Diagonal => (n, n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub n: u64,
    pub s: u64,
    pub t: u64,
    #[serde(with = "crate::rational::as_string")]
    pub l_lower: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub l_upper: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub nu_lower: Rat,
    #[serde(with = "crate::rational::as_string")]
    pub nu_upper: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcReport {
    pub layout: Layout,
    pub rows: Vec<LevelRow>,
    /// Levels whose table entries are incomplete.
    pub unavailable: Vec<u64>,
    /// Least `A` with `1/(A n) ≤ ℓ(X_n) ≤ A/n` on every row.
    #[serde(with = "crate::rational::opt_as_string")]
    pub a_min: Option<Rat>,
    /// Least `ρ` with `ν(X_n) ≤ ρ^n` on every row.
    pub rho_min: Option<f64>,
    /// Polynomial Lebesgue bounds together with exponential harmonic decay.
    pub singular_pattern: bool,
}

/// Aggregates per-level bounds: `ℓ(X_n) ∈ [max lo, min(1, Σ hi)]` and
/// `ν(X_n) ∈ [max ν, min(1, Σ ν)]`.
pub fn bc_assemble(l: &LebesgueTable, v: &HarmonicTable, layout: Layout, ns: &[u64]) -> BcReport {
    let mut rows = Vec::new();
    let mut unavailable = Vec::new();
    for &n in ns {
        let (s, t) = layout.range(n);
        let keys: Vec<(u64, u64)> = (s..=t).map(|m| (m, n)).collect();
        if n == 0 || keys.iter().any(|k| !l.contains_key(k) || !v.contains_key(k)) {
            unavailable.push(n);
            continue;
        }
        let mut row = LevelRow {
            n,
            s,
            t,
            l_lower: Rat::zero(),
            l_upper: Rat::zero(),
            nu_lower: Rat::zero(),
            nu_upper: Rat::zero(),
        };
        for k in &keys {
            let (lo, hi) = &l[k];
            row.l_lower = row.l_lower.max(lo.clone());
            row.l_upper += hi;
            row.nu_lower = row.nu_lower.max(v[k].clone());
            row.nu_upper += &v[k];
        }
        row.l_upper = row.l_upper.min(Rat::one());
        row.nu_upper = row.nu_upper.min(Rat::one());
        rows.push(row);
    }
    // A zero lower bound admits no finite A.
    let a_min = rows
        .iter()
        .map(|r| {
            let nn = Rat::from_integer(Int::from(r.n));
            (!r.l_lower.is_zero()).then(|| (&nn * &r.l_upper).max((&nn * &r.l_lower).recip()))
        })
        .collect::<Option<Vec<Rat>>>()
        .and_then(|v| v.into_iter().max());
    let rho_min = rows
        .iter()
        .map(|r| to_f64(&r.nu_upper).powf(1.0 / r.n as f64))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    let singular_pattern = !rows.is_empty() && a_min.is_some() && rho_min.is_some_and(|r| r < 1.0);
    BcReport {
        layout,
        rows,
        unavailable,
        a_min,
        rho_min,
        singular_pattern,
    }
}

/// Torus tables over the given `n`: `ℓ(X_{n,n})` replaced by the exact
/// first-coefficient law `1/(n+1)`, and the exact tree-walk law `2^{-n}`.
pub fn torus_surrogate_tables(ns: &[u64]) -> Result<(LebesgueTable, HarmonicTable)> {
    let mut l = LebesgueTable::new();
    let mut v = HarmonicTable::new();
    for &n in ns {
        let x = Rat::new(Int::one(), Int::from(n) + 1);
        l.insert((n, n), (x.clone(), x));
        v.insert((n, n), tree_harmonic_x(n)?);
    }
    Ok((l, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesStatus {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    #[serde(with = "crate::rational::as_string")]
    pub partial_sum: Rat,
    /// Growth of the partial sums over the second half, per unit of `ln n`.
    pub log_growth: f64,
    /// Largest ratio of consecutive terms over the second half.
    pub tail_ratio: f64,
    pub status: SeriesStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub lebesgue: SeriesSummary,
    pub harmonic: SeriesSummary,
    /// `1/(4c)` when `Σℓ` diverges.
    #[serde(with = "crate::rational::opt_as_string")]
    pub limsup_lower: Option<Rat>,
    /// `Σℓ` converges, so the limsup set has no Lebesgue mass.
    pub lebesgue_null: bool,
    pub harmonic_null: bool,
    pub singular_pattern: bool,
}

const LOG_GROWTH_MIN: f64 = 0.05;
const RATIO_MAX: f64 = 0.95;

fn summarize(series: &[(u64, Rat)]) -> SeriesSummary {
    let partial_sum = series.iter().fold(Rat::zero(), |a, (_, x)| a + x);
    let k = series.len();
    if k < 4 {
        return SeriesSummary {
            partial_sum,
            log_growth: 0.0,
            tail_ratio: 1.0,
            status: SeriesStatus::Inconclusive,
        };
    }
    let mid = k / 2;
    let tail: Rat = series[mid..].iter().fold(Rat::zero(), |a, (_, x)| a + x);
    let (n0, n1) = (series[mid - 1].0.max(1) as f64, series[k - 1].0.max(1) as f64);
    let log_growth = if n1 > n0 { to_f64(&tail) / (n1 / n0).ln() } else { 0.0 };
    let tail_ratio = series[mid..]
        .windows(2)
        .map(|w| {
            if w[0].1.is_zero() {
                0.0
            } else {
                to_f64(&(&w[1].1 / &w[0].1))
            }
        })
        .fold(0.0f64, f64::max);
    let status = if tail_ratio < RATIO_MAX {
        SeriesStatus::Convergent
    } else if log_growth >= LOG_GROWTH_MIN {
        SeriesStatus::Divergent
    } else {
        SeriesStatus::Inconclusive
    };
    SeriesSummary {
        partial_sum,
        log_growth,
        tail_ratio,
        status,
    }
}

/// Reads off the Borel–Cantelli dichotomy from finite series `(n, value)`:
/// a divergent Lebesgue series with pairwise constant `c` gives
/// `ℓ(limsup) ≥ 1/(4c)`, a convergent harmonic series gives `ν(limsup) = 0`.
pub fn bc_verdict(l_series: &[(u64, Rat)], v_series: &[(u64, Rat)], pairwise_c: &Rat) -> Result<Verdict> {
    if pairwise_c <= &Rat::zero() {
        return Err(Error::invalid("pairwise constant must be positive"));
    }
    let lebesgue = summarize(l_series);
    let harmonic = summarize(v_series);
    let limsup_lower =
        (lebesgue.status == SeriesStatus::Divergent).then(|| (Rat::from_integer(4.into()) * pairwise_c).recip());
    let lebesgue_null = lebesgue.status == SeriesStatus::Convergent;
    let harmonic_null = harmonic.status == SeriesStatus::Convergent;
    let singular_pattern = limsup_lower.is_some() && harmonic_null;
    Ok(Verdict {
        lebesgue,
        harmonic,
        limsup_lower,
        lebesgue_null,
        harmonic_null,
        singular_pattern,
    })
}
