use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::CocycleMatrix;
use crate::rational::Int;

/// A 2×2 integer matrix `[[a, b], [c, d]]`, acting on slopes by
/// `x ↦ (a x + b)/(c x + d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: Int,
    pub b: Int,
    pub c: Int,
    pub d: Int,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    /// `R = [[1,0],[1,1]]`.
    pub fn r() -> Self {
        Self::new(1, 0, 1, 1)
    }

    /// `L = [[1,1],[0,1]]`.
    pub fn l() -> Self {
        Self::new(1, 1, 0, 1)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn det(&self) -> Int {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Inverse of a determinant ±1 matrix.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::invalid(
                "only determinant ±1 matrices are invertible over the integers",
            ));
        }
        Ok(Mat2 {
            a: &self.d * &det,
            b: -&self.b * &det,
            c: -&self.c * &det,
            d: &self.a * &det,
        })
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn is_nonnegative(&self) -> bool {
        !(self.a.is_negative() || self.b.is_negative() || self.c.is_negative() || self.d.is_negative())
    }

    pub fn to_cocycle(&self) -> Result<CocycleMatrix> {
        CocycleMatrix::from_big_rows(vec![
            vec![self.a.clone(), self.b.clone()],
            vec![self.c.clone(), self.d.clone()],
        ])
    }

    pub fn from_rows(rows: [[i64; 2]; 2]) -> Self {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}
