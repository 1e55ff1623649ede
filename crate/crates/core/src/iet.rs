//! Labeled classical and non-classical interval exchanges.
//!
//! A [`Combinatorics`] is the order of band ends along the top and bottom of
//! a base interval. A band with one end on each side is orientation
//! preserving; a band with both ends on one side is orientation reversing.
//! Labels are kept sorted in natural order and every index in this module
//! (widths, matrix rows and columns) refers to that order.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Halt, Result};
use crate::exact::{projectivize, CocycleMatrix, RationalVector};
use crate::polytope::Polytope;
use crate::rational::{format_rational, parse_rational, Int, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Top,
    Bottom,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Top => "top",
            Side::Bottom => "bottom",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combinatorics {
    labels: Vec<String>,
    top: Vec<usize>,
    bottom: Vec<usize>,
}

/// Numeric labels sort numerically and before the others.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let num = |s: &str| -> Option<u128> {
        if !s.is_empty() && s.len() < 30 && s.bytes().all(|c| c.is_ascii_digit()) {
            s.parse().ok()
        } else {
            None
        }
    };
    match (num(a), num(b)) {
        (Some(x), Some(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

impl Combinatorics {
    pub fn new<S: AsRef<str>>(top: &[S], bottom: &[S]) -> Result<Self> {
        let mut labels: Vec<String> = top.iter().chain(bottom).map(|s| s.as_ref().to_string()).collect();
        if let Some(bad) = labels
            .iter()
            .find(|l| l.is_empty() || l.chars().any(char::is_whitespace))
        {
            return Err(Error::invalid(format!("bad band label {bad:?}")));
        }
        labels.sort_by(|a, b| natural_cmp(a, b));
        labels.dedup();
        let index = |s: &S| {
            labels
                .binary_search_by(|l| natural_cmp(l, s.as_ref()))
                .expect("label present")
        };
        let top: Vec<usize> = top.iter().map(index).collect();
        let bottom: Vec<usize> = bottom.iter().map(index).collect();
        Self::from_parts(labels, top, bottom)
    }

    pub(crate) fn from_parts(labels: Vec<String>, top: Vec<usize>, bottom: Vec<usize>) -> Result<Self> {
        if top.is_empty() || bottom.is_empty() {
            return Err(Error::invalid("both sides of the interval need at least one band end"));
        }
        let mut count = vec![0usize; labels.len()];
        for &b in top.iter().chain(&bottom) {
            count[b] += 1;
        }
        if let Some(b) = count.iter().position(|&c| c != 2) {
            return Err(Error::invalid(format!(
                "band {} has {} ends; every band needs exactly two",
                labels[b], count[b]
            )));
        }
        Ok(Combinatorics { labels, top, bottom })
    }

    /// The classical exchange with `top = [d, ..., 1]`, `bottom = [1, ..., d]`.
    pub fn rotation_class(d: usize) -> Self {
        let top: Vec<String> = (1..=d).rev().map(|i| i.to_string()).collect();
        let bottom: Vec<String> = (1..=d).map(|i| i.to_string()).collect();
        Self::new(&top, &bottom).expect("valid classical exchange")
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, band: usize) -> &str {
        &self.labels[band]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn top(&self) -> &[usize] {
        &self.top
    }

    pub fn bottom(&self) -> &[usize] {
        &self.bottom
    }

    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::Top => &self.top,
            Side::Bottom => &self.bottom,
        }
    }

    pub fn top_labels(&self) -> Vec<&str> {
        self.top.iter().map(|&b| self.labels[b].as_str()).collect()
    }

    pub fn bottom_labels(&self) -> Vec<&str> {
        self.bottom.iter().map(|&b| self.labels[b].as_str()).collect()
    }

    /// Number of ends of `band` on the top side (0, 1 or 2).
    pub fn top_ends(&self, band: usize) -> usize {
        self.top.iter().filter(|&&b| b == band).count()
    }

    pub fn is_orientation_reversing(&self, band: usize) -> bool {
        self.top_ends(band) != 1
    }

    pub fn is_classical(&self) -> bool {
        (0..self.d()).all(|b| self.top_ends(b) == 1)
    }

    /// Bands with both ends on top.
    pub fn s_top(&self) -> Vec<usize> {
        (0..self.d()).filter(|&b| self.top_ends(b) == 2).collect()
    }

    /// Bands with both ends on the bottom.
    pub fn s_bottom(&self) -> Vec<usize> {
        (0..self.d()).filter(|&b| self.top_ends(b) == 0).collect()
    }

    /// Bands with one end on each side.
    pub fn two_sided(&self) -> Vec<usize> {
        (0..self.d()).filter(|&b| self.top_ends(b) == 1).collect()
    }

    /// Some positive width vector satisfies the switch condition. Total top
    /// width equals total bottom width, so one-sided bands must occur on
    /// both sides or on neither.
    pub fn is_admissible(&self) -> bool {
        self.s_top().is_empty() == self.s_bottom().is_empty()
    }

    /// The bands owning the rightmost end on top and on bottom.
    pub fn critical(&self) -> (usize, usize) {
        (
            *self.top.last().expect("nonempty"),
            *self.bottom.last().expect("nonempty"),
        )
    }

    /// The combinatorial split in which the critical band on `winner_side`
    /// wins. Fails with [`Halt::SameBand`] if one band holds both critical
    /// positions.
    pub fn split(&self, winner_side: Side) -> Result<(Combinatorics, SplitStep)> {
        let (a1, a0) = self.critical();
        if a1 == a0 {
            return Err(Error::Halted(Halt::SameBand));
        }
        let (winner, loser) = match winner_side {
            Side::Top => (a1, a0),
            Side::Bottom => (a0, a1),
        };
        let mut next = self.clone();
        let (crit, other) = match winner_side {
            Side::Top => (&mut next.top, &mut next.bottom),
            Side::Bottom => (&mut next.bottom, &mut next.top),
        };
        other.pop();
        if let Some(i) = other.iter().position(|&b| b == winner) {
            // Orientation preserving winner: right of its other end.
            other.insert(i + 1, loser);
        } else {
            // Both ends of the winner on the critical side: left of the
            // non-critical one.
            let i = crit.iter().position(|&b| b == winner).expect("winner has a second end");
            crit.insert(i, loser);
        }
        if next.top.is_empty() || next.bottom.is_empty() {
            return Err(Error::invalid("split would empty one side of the interval"));
        }
        Ok((
            next,
            SplitStep {
                winner,
                loser,
                winner_side,
            },
        ))
    }

    /// The split successor if it is defined and admissible.
    pub fn successor(&self, winner_side: Side) -> Option<Combinatorics> {
        match self.split(winner_side) {
            Ok((next, _)) if next.is_admissible() => Some(next),
            _ => None,
        }
    }

    /// Compact canonical text, e.g. `2 1 | 1 2`.
    pub fn canonical_string(&self) -> String {
        format!("{} | {}", self.top_labels().join(" "), self.bottom_labels().join(" "))
    }

    /// Relabels bands by order of first appearance (top then bottom). Two
    /// combinatorics agree after this iff they differ only by labeling.
    pub fn unlabeled_signature(&self) -> (Vec<usize>, Vec<usize>) {
        let mut map = vec![usize::MAX; self.d()];
        let mut next = 0;
        let mut relabel = |b: usize| {
            if map[b] == usize::MAX {
                map[b] = next;
                next += 1;
            }
            map[b]
        };
        let t: Vec<usize> = self.top.iter().map(|&b| relabel(b)).collect();
        let u: Vec<usize> = self.bottom.iter().map(|&b| relabel(b)).collect();
        (t, u)
    }

    /// The `.iex` text form, optionally with widths.
    pub fn to_iex(&self, widths: Option<&WidthVector>) -> String {
        let mut s = format!(
            "top: {}\nbottom: {}\n",
            self.top_labels().join(" "),
            self.bottom_labels().join(" ")
        );
        if let Some(w) = widths {
            let parts: Vec<String> = (0..self.d())
                .map(|b| format!("{}={}", self.labels[b], format_rational(&w.0[b])))
                .collect();
            s.push_str(&format!("widths: {}\n", parts.join(" ")));
        }
        s
    }

    /// Parses the `.iex` text form. Blank lines and `#` comments are ignored.
    pub fn parse_iex(text: &str) -> Result<(Combinatorics, Option<WidthVector>)> {
        let mut top = None;
        let mut bottom = None;
        let mut widths = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected `key: value`, got {line:?}")))?;
            let items: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            let slot = match key.trim() {
                "top" => &mut top,
                "bottom" => &mut bottom,
                "widths" => &mut widths,
                other => return Err(Error::invalid(format!("unknown .iex key {other:?}"))),
            };
            if slot.replace(items).is_some() {
                return Err(Error::invalid(format!("duplicate .iex key {:?}", key.trim())));
            }
        }
        let top = top.ok_or_else(|| Error::invalid("missing `top:` line"))?;
        let bottom = bottom.ok_or_else(|| Error::invalid("missing `bottom:` line"))?;
        let comb = Combinatorics::new(&top, &bottom)?;
        let widths = match widths {
            None => None,
            Some(items) => {
                let mut pairs = Vec::new();
                for item in &items {
                    let (l, v) = item
                        .split_once('=')
                        .ok_or_else(|| Error::invalid(format!("expected label=p/q, got {item:?}")))?;
                    pairs.push((l.to_string(), parse_rational(v)?));
                }
                Some(WidthVector::from_labeled(&comb, &pairs)?)
            }
        };
        Ok((comb, widths))
    }
}

impl fmt::Display for Combinatorics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl Serialize for Combinatorics {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Combinatorics", 2)?;
        st.serialize_field("top", &self.top_labels())?;
        st.serialize_field("bottom", &self.bottom_labels())?;
        st.end()
    }
}

/// Band widths, indexed like the labels of the combinatorics they belong to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WidthVector(pub Vec<Rat>);

impl WidthVector {
    pub fn from_labeled<S: AsRef<str>>(comb: &Combinatorics, pairs: &[(S, Rat)]) -> Result<Self> {
        let mut values: Vec<Option<Rat>> = vec![None; comb.d()];
        for (label, v) in pairs {
            let i = comb
                .index_of(label.as_ref())
                .ok_or_else(|| Error::invalid(format!("width for unknown band {:?}", label.as_ref())))?;
            if values[i].replace(v.clone()).is_some() {
                return Err(Error::invalid(format!("two widths for band {:?}", label.as_ref())));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::invalid(format!("no width for band {:?}", comb.label(i)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(WidthVector(values))
    }

    pub fn as_vector(&self) -> RationalVector {
        RationalVector(self.0.clone())
    }

    pub fn normalized(&self) -> Result<Self> {
        Ok(WidthVector(self.as_vector().normalized()?.0))
    }
}

/// Positivity, normalization and the switch condition, checked exactly.
pub fn validate(comb: &Combinatorics, w: &WidthVector) -> Result<bool> {
    if w.0.len() != comb.d() {
        return Err(Error::invalid(format!("{} widths for {} bands", w.0.len(), comb.d())));
    }
    Ok(w.0.iter().all(|x| x.is_positive()) && w.0.iter().sum::<Rat>().is_one() && switch_holds(comb, &w.0))
}

fn switch_holds<T>(comb: &Combinatorics, w: &[T]) -> bool
where
    T: Clone + Zero + PartialEq + for<'a> std::ops::AddAssign<&'a T>,
{
    let mut t = T::zero();
    let mut b = T::zero();
    for i in comb.s_top() {
        t += &w[i];
    }
    for i in comb.s_bottom() {
        b += &w[i];
    }
    t == b
}

/// One split: `winner` is the wider critical band, `loser` the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitStep {
    pub winner: usize,
    pub loser: usize,
    pub winner_side: Side,
}

impl SplitStep {
    /// `E = I + M_{winner,loser}`.
    pub fn elementary(&self, d: usize) -> CocycleMatrix {
        CocycleMatrix::elementary(d, self.winner, self.loser)
    }
}

/// A finite path of splits with its cumulative matrix `Q = E_1 E_2 ⋯ E_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingSequence {
    pub start: Combinatorics,
    pub steps: Vec<SplitStep>,
    pub end: Combinatorics,
    pub cumulative: CocycleMatrix,
    /// Set when the expansion stopped before its step budget.
    pub halt: Option<Halt>,
    /// Normalized widths at `end`, when the sequence came from width data.
    pub end_widths: Option<WidthVector>,
}

impl SplittingSequence {
    pub fn empty(start: Combinatorics) -> Self {
        let d = start.d();
        SplittingSequence {
            end: start.clone(),
            start,
            steps: Vec::new(),
            cumulative: CocycleMatrix::identity(d),
            halt: None,
            end_widths: None,
        }
    }

    /// Replays the combinatorial splits of `sides` from `start`.
    pub fn from_sides(start: &Combinatorics, sides: &[Side]) -> Result<Self> {
        let mut seq = Self::empty(start.clone());
        for &s in sides {
            seq.push(s)?;
        }
        Ok(seq)
    }

    /// Appends one combinatorial split.
    pub fn push(&mut self, winner_side: Side) -> Result<SplitStep> {
        let (next, step) = self.end.split(winner_side)?;
        self.cumulative.apply_split(step.winner, step.loser);
        self.end = next;
        self.steps.push(step);
        Ok(step)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks both structural invariants: the cumulative matrix is the
    /// product of the elementaries, and replaying reaches `end`.
    pub fn verify(&self) -> bool {
        let d = self.start.d();
        let mut q = CocycleMatrix::identity(d);
        let mut c = self.start.clone();
        for s in &self.steps {
            match c.split(s.winner_side) {
                Ok((next, step)) if step == *s => c = next,
                _ => return false,
            }
            q = q.mul(&s.elementary(d));
        }
        c == self.end && q == self.cumulative
    }
}

/// One step of Rauzy induction on width data.
pub fn rauzy_step(comb: &Combinatorics, w: &WidthVector) -> Result<(Combinatorics, WidthVector, SplitStep)> {
    if !validate(comb, w)? {
        return Err(Error::invalid(
            "width vector violates positivity, normalization or the switch condition",
        ));
    }
    let (a1, a0) = comb.critical();
    if a1 == a0 {
        return Err(Error::Halted(Halt::SameBand));
    }
    let side = match w.0[a1].cmp(&w.0[a0]) {
        Ordering::Equal => return Err(Error::Halted(Halt::EqualWidths)),
        Ordering::Greater => Side::Top,
        Ordering::Less => Side::Bottom,
    };
    let (next, step) = comb.split(side)?;
    let mut nw = w.0.clone();
    nw[step.winner] = &w.0[step.winner] - &w.0[step.loser];
    let nw = WidthVector(nw).normalized()?;
    Ok((next, nw, step))
}

/// Rauzy induction driven by integer widths; no normalization is needed
/// until the end. Tracks combinatorics and column sums only, which is all the
/// Monte Carlo experiments look at.
#[derive(Clone, Debug)]
pub struct IntegerExpansion {
    pub comb: Combinatorics,
    pub widths: Vec<Int>,
    pub column_sums: Vec<Int>,
    pub steps: u64,
}

impl IntegerExpansion {
    pub fn new(comb: Combinatorics, widths: Vec<Int>) -> Self {
        let d = comb.d();
        IntegerExpansion {
            comb,
            widths,
            column_sums: vec![Int::one(); d],
            steps: 0,
        }
    }

    /// Integer widths proportional to a rational width vector.
    pub fn from_rational(comb: Combinatorics, w: &WidthVector) -> Self {
        let l = w.0.iter().fold(Int::one(), |acc, x| acc.lcm(x.denom()));
        let widths =
            w.0.iter()
                .map(|x| (x * Rat::from_integer(l.clone())).to_integer())
                .collect();
        Self::new(comb, widths)
    }

    pub fn step(&mut self) -> std::result::Result<SplitStep, Halt> {
        let (a1, a0) = self.comb.critical();
        if a1 == a0 {
            return Err(Halt::SameBand);
        }
        let side = match self.widths[a1].cmp(&self.widths[a0]) {
            Ordering::Equal => return Err(Halt::EqualWidths),
            Ordering::Greater => Side::Top,
            Ordering::Less => Side::Bottom,
        };
        let (next, step) = self.comb.split(side).map_err(|_| Halt::SameBand)?;
        let lw = self.widths[step.loser].clone();
        self.widths[step.winner] -= lw;
        let ls = self.column_sums[step.winner].clone();
        self.column_sums[step.loser] += ls;
        self.comb = next;
        self.steps += 1;
        Ok(step)
    }

    /// The strict C-distribution test on the tracked column sums.
    pub fn is_c_distributed(&self, c: &Rat) -> bool {
        let (Some(min), Some(max)) = (self.column_sums.iter().min(), self.column_sums.iter().max()) else {
            return true;
        };
        Rat::from_integer(max.clone()) < c * Rat::from_integer(min.clone())
    }
}

/// Repeated Rauzy induction for at most `max_steps` steps. Halting is a
/// normal terminal status recorded in the result.
pub fn expand(comb: &Combinatorics, w: &WidthVector, max_steps: usize) -> Result<SplittingSequence> {
    if !validate(comb, w)? {
        return Err(Error::invalid(
            "width vector violates positivity, normalization or the switch condition",
        ));
    }
    let mut run = IntegerExpansion::from_rational(comb.clone(), w);
    let mut seq = SplittingSequence::empty(comb.clone());
    while seq.steps.len() < max_steps {
        match run.step() {
            Ok(step) => {
                seq.cumulative.apply_split(step.winner, step.loser);
                seq.steps.push(step);
            }
            Err(h) => {
                seq.halt = Some(h);
                break;
            }
        }
    }
    seq.end = run.comb;
    let widths = WidthVector(run.widths.into_iter().map(Rat::from_integer).collect());
    seq.end_widths = Some(widths.normalized()?);
    Ok(seq)
}

/// Vertices `e_{αβ} = (e_α + e_β)/2` for `α ∈ S_t`, `β ∈ S_b`, and `e_γ` for
/// every two-sided band `γ`; their hull is the set of normalized widths
/// satisfying the switch condition.
pub fn configuration_polytope(comb: &Combinatorics) -> Polytope {
    Polytope::new(configuration_vertices(comb)).expect("configuration polytope has vertices")
}

pub fn configuration_vertices(comb: &Combinatorics) -> Vec<RationalVector> {
    let d = comb.d();
    let half = Rat::new(Int::one(), Int::from(2));
    let mut out: Vec<RationalVector> = comb
        .two_sided()
        .into_iter()
        .map(|g| RationalVector::basis(d, g))
        .collect();
    for a in comb.s_top() {
        for b in comb.s_bottom() {
            let mut v = vec![Rat::zero(); d];
            v[a] = half.clone();
            v[b] = half.clone();
            out.push(RationalVector(v));
        }
    }
    out
}

/// The closure of the set of widths at `seq.start` whose expansion begins
/// with `seq`: `JQ` applied to the configuration polytope of `seq.end`.
pub fn cylinder(seq: &SplittingSequence) -> Result<Polytope> {
    let w = configuration_polytope(&seq.end);
    w.map(|v| projectivize(&seq.cumulative, v))
}
