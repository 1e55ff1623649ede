//! Exact linear algebra on width vectors and splitting matrices.
//!
//! Splitting matrices are products of elementary matrices `I + M_{αβ}` and
//! their entries grow exponentially along an expansion, so everything here is
//! arbitrary precision. Floating point never enters this module.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{pow, Int, Rat};

/// A vector of exact rationals, usually a point of the standard simplex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RationalVector(#[serde(with = "crate::rational::vec_as_string")] pub Vec<Rat>);

impl RationalVector {
    pub fn new(entries: Vec<Rat>) -> Self {
        RationalVector(entries)
    }

    pub fn from_ratios(entries: &[(i64, i64)]) -> Self {
        RationalVector(entries.iter().map(|&(p, q)| crate::rational::rat(p, q)).collect())
    }

    /// The standard basis vector `e_i` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![Rat::zero(); d];
        v[i] = Rat::one();
        RationalVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.0
    }

    /// Entry sum, written `|y|` throughout.
    pub fn sum(&self) -> Rat {
        self.0.iter().fold(Rat::zero(), |acc, x| acc + x)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|x| !x.is_negative())
    }

    pub fn is_simplex_point(&self) -> bool {
        self.is_nonnegative() && self.sum().is_one()
    }

    /// Rescales to entry sum 1.
    pub fn normalized(&self) -> Result<Self> {
        let s = self.sum();
        if s.is_zero() {
            return Err(Error::invalid("cannot normalize a vector with zero entry sum"));
        }
        Ok(RationalVector(self.0.iter().map(|x| x / &s).collect()))
    }

    pub fn scaled(&self, t: &Rat) -> Self {
        RationalVector(self.0.iter().map(|x| x * t).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        RationalVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(crate::rational::to_f64).collect()
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// A square integer matrix recording a splitting sequence.
///
/// Stored row-major. Column `α` is `Q(α)`, the image of the basis vector of
/// band `α`; old widths are `Q` times new widths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CocycleMatrix {
    dim: usize,
    entries: Vec<Int>,
}

impl CocycleMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Int::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Int::one();
        }
        CocycleMatrix { dim, entries }
    }

    /// `E = I + M_{winner,loser}`: the matrix of one split.
    pub fn elementary(dim: usize, winner: usize, loser: usize) -> Self {
        let mut e = Self::identity(dim);
        e.entries[winner * dim + loser] += 1;
        e
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_big_rows(rows.iter().map(|r| r.iter().map(|&x| Int::from(x)).collect()).collect())
    }

    pub fn from_big_rows(rows: Vec<Vec<Int>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix rows must form a square array"));
        }
        if rows.iter().flatten().any(|x| x.is_negative()) {
            return Err(Error::invalid("cocycle matrices have nonnegative entries"));
        }
        Ok(CocycleMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &Int {
        &self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<Int>> {
        self.entries.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, col: usize) -> Vec<Int> {
        (0..self.dim).map(|r| self.get(r, col).clone()).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut entries = vec![Int::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &self.entries[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &other.entries[k * d + j];
                    if !b.is_zero() {
                        entries[i * d + j] += a * b;
                    }
                }
            }
        }
        CocycleMatrix { dim: d, entries }
    }

    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// In-place `Q ← Q · (I + M_{winner,loser})`: column `loser` gains column `winner`.
    pub fn apply_split(&mut self, winner: usize, loser: usize) {
        let d = self.dim;
        for r in 0..d {
            let w = self.entries[r * d + winner].clone();
            self.entries[r * d + loser] += w;
        }
    }

    /// `Q y` in exact arithmetic.
    pub fn apply(&self, y: &RationalVector) -> RationalVector {
        assert_eq!(y.len(), self.dim, "dimension mismatch");
        let d = self.dim;
        let out = (0..d)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..d {
                    let q = &self.entries[i * d + j];
                    if !q.is_zero() && !y.0[j].is_zero() {
                        acc += &y.0[j] * Rat::from_integer(q.clone());
                    }
                }
                acc
            })
            .collect();
        RationalVector(out)
    }

    /// `|Q y|` without forming `Q y`: the column sums dotted with `y`.
    pub fn image_mass(&self, y: &RationalVector) -> Rat {
        self.column_sums_int()
            .into_iter()
            .zip(&y.0)
            .fold(Rat::zero(), |acc, (s, x)| acc + x * Rat::from_integer(s))
    }

    pub fn column_sums_int(&self) -> Vec<Int> {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).fold(Int::zero(), |acc, i| acc + &self.entries[i * d + j]))
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Int {
        determinant(self.rows())
    }

    /// The matrix with rows and columns permuted by `perm` (new index `i` is old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.dim;
        let mut entries = Vec::with_capacity(d * d);
        for &i in perm {
            for &j in perm {
                entries.push(self.entries[i * d + j].clone());
            }
        }
        CocycleMatrix { dim: d, entries }
    }
}

impl fmt::Display for CocycleMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, row) in self.rows().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl Serialize for CocycleMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        rows.serialize(s)
    }
}

/// Determinant of a square integer matrix by Bareiss elimination.
pub fn determinant(mut m: Vec<Vec<Int>>) -> Int {
    let n = m.len();
    if n == 0 {
        return Int::one();
    }
    let mut sign = Int::one();
    let mut prev = Int::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return Int::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Absolute determinant of a rational matrix, via row scaling to integers.
pub fn abs_determinant_rational(rows: &[Vec<Rat>]) -> Rat {
    let mut scale = Int::one();
    let int_rows: Vec<Vec<Int>> = rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(Int::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &l;
            r.iter()
                .map(|x| (x * Rat::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect();
    Rat::new(determinant(int_rows).abs(), scale)
}

/// `JQ(y) = Qy / |Qy|`, the projectivized action on the simplex.
pub fn projectivize(q: &CocycleMatrix, y: &RationalVector) -> Result<RationalVector> {
    if y.len() != q.dim() {
        return Err(Error::invalid(format!(
            "vector of length {} for a {}×{} matrix",
            y.len(),
            q.dim(),
            q.dim()
        )));
    }
    let image = q.apply(y);
    if image.sum().is_zero() {
        return Err(Error::invalid("projectivization of a zero vector"));
    }
    image.normalized()
}

/// Per-column sums `|Q(α)|`.
pub fn column_sums(q: &CocycleMatrix) -> RationalVector {
    RationalVector(q.column_sums_int().into_iter().map(Rat::from_integer).collect())
}

/// Strict test `1/C < |Q(α)|/|Q(β)| < C` for every pair of columns.
pub fn is_c_distributed(q: &CocycleMatrix, c: &Rat) -> bool {
    let sums = q.column_sums_int();
    if sums.iter().any(|s| s.is_zero()) {
        return false;
    }
    let (Some(min), Some(max)) = (sums.iter().min(), sums.iter().max()) else {
        return true;
    };
    Rat::from_integer(max.clone()) < c * Rat::from_integer(min.clone())
}

/// `(|Q y2| / |Q y1|)^{k+1}`, the ratio `J(y1)/J(y2)` of Jacobians of `JQ`
/// restricted to a `k`-dimensional slice.
pub fn jacobian_ratio(q: &CocycleMatrix, y1: &RationalVector, y2: &RationalVector, k: u32) -> Result<Rat> {
    let m1 = q.image_mass(y1);
    let m2 = q.image_mass(y2);
    if m1.is_zero() || m2.is_zero() {
        return Err(Error::invalid("jacobian ratio at a point mapped to zero"));
    }
    Ok(pow(&(m2 / m1), k + 1))
}

/// Row-reduces an integer matrix in place to a fraction-free reduced echelon
/// form (each pivot row scaled so that its content is 1) and returns the
/// pivot columns.
pub fn integer_rref(rows: &mut Vec<Vec<Int>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        normalize_row(&mut rows[r]);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let a = pivot_row[c].clone();
            let b = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = &*x * &a - &b * y;
            }
            normalize_row(row);
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

fn normalize_row(row: &mut [Int]) {
    let g = row.iter().fold(Int::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        return;
    }
    for x in row.iter_mut() {
        *x = &*x / &g;
    }
}

/// Clears denominators of a rational vector, returning integers proportional to it.
pub fn clear_denominators(v: &[Rat]) -> (Vec<Int>, Int) {
    let l = v.iter().fold(Int::one(), |acc, x| acc.lcm(x.denom()));
    let ints = v
        .iter()
        .map(|x| (x * Rat::from_integer(l.clone())).to_integer())
        .collect();
    (ints, l)
}
