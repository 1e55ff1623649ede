//! Exact convex polytopes inside the simplex and their relative volumes.
//!
//! A polytope lives in the affine hull of its vertices. Volumes are measured
//! in a canonical chart of that hull: the projection onto the pivot
//! coordinates of the reduced echelon basis of its direction space. Two
//! polytopes with the same affine hull get the same chart, so their volume
//! ratio is exact and chart-independent. The standard `k`-simplex in
//! `R^{k+1}` has volume `1/k!` in this chart, which is what every caller
//! divides out.
//!
//! Volumes come from a placing (beneath-beyond) triangulation computed with
//! integer facet normals.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{abs_determinant_rational, clear_denominators, integer_rref, RationalVector};
use crate::rational::{Int, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Polytope {
    vertices: Vec<RationalVector>,
    dim: usize,
}

/// Affine chart of a subspace: keep only the `pivots` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineChart {
    pivots: Vec<usize>,
}

/// Simplices given as index lists into a point list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Triangulation {
    pub simplices: Vec<Vec<usize>>,
}

impl Polytope {
    /// Deduplicates the points; the dimension is their affine rank.
    pub fn new(points: Vec<RationalVector>) -> Result<Self> {
        let vertices = dedup(points)?;
        let dim = affine_rank(&vertices);
        Ok(Polytope { vertices, dim })
    }

    /// Like [`Polytope::new`] but with a declared dimension `k`. If the
    /// points span less than `k` dimensions the polytope is degenerate and
    /// has volume 0.
    pub fn with_dim(points: Vec<RationalVector>, k: usize) -> Result<Self> {
        let vertices = dedup(points)?;
        let rank = affine_rank(&vertices);
        if rank > k {
            return Err(Error::invalid(format!("points span {rank} dimensions, more than {k}")));
        }
        Ok(Polytope { vertices, dim: k })
    }

    /// Convex hull of a point set, canonicalized to its extreme points.
    pub fn hull(points: Vec<RationalVector>) -> Result<Self> {
        let mut p = Self::new(points)?;
        let chart = p.chart();
        let k = p.dim;
        let mut keep: Vec<usize> = (0..p.vertices.len()).collect();
        let mut i = 0;
        while i < keep.len() {
            let others: Vec<RationalVector> = keep
                .iter()
                .filter(|&&j| j != keep[i])
                .map(|&j| p.vertices[j].clone())
                .collect();
            let redundant = if others.is_empty() {
                false
            } else {
                let (pts, _) = chart.integer_points_with_scale(&others, &p.vertices);
                let (probe, _) = chart.integer_points_with_scale(&[p.vertices[keep[i]].clone()], &p.vertices);
                match place(&pts, k) {
                    Some(pl) => pl.contains(&probe[0]),
                    None => false,
                }
            };
            if redundant {
                keep.remove(i);
            } else {
                i += 1;
            }
        }
        p.vertices = keep.into_iter().map(|j| p.vertices[j].clone()).collect();
        Ok(p)
    }

    pub fn vertices(&self) -> &[RationalVector] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn chart(&self) -> AffineChart {
        AffineChart::of(&self.vertices)
    }

    /// Whether the vertices actually span `dim` dimensions.
    pub fn is_full(&self) -> bool {
        affine_rank(&self.vertices) == self.dim
    }

    /// A placing triangulation of the vertex set (empty when degenerate).
    pub fn triangulate(&self) -> Triangulation {
        if !self.is_full() {
            return Triangulation { simplices: Vec::new() };
        }
        let (pts, _) = self.chart().integer_points(&self.vertices);
        let simplices = place(&pts, self.dim).map(|p| p.simplices).unwrap_or_default();
        Triangulation { simplices }
    }

    /// Exact `k`-dimensional volume in the canonical chart of the affine hull.
    pub fn volume(&self) -> Rat {
        if !self.is_full() {
            return Rat::zero();
        }
        let chart = self.chart();
        simplices_volume(&self.vertices, &self.triangulate(), &chart)
    }

    /// Applies a map to every vertex, keeping the declared dimension.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&RationalVector) -> Result<RationalVector>,
    {
        let pts = self.vertices.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::with_dim(pts, self.dim)
    }
}

/// Exact volume of `polytope` (free-function form).
pub fn polytope_volume(polytope: &Polytope) -> Rat {
    polytope.volume()
}

/// Total volume of the given simplices over `points`, measured in `chart`.
pub fn simplices_volume(points: &[RationalVector], tri: &Triangulation, chart: &AffineChart) -> Rat {
    let k = chart.dim();
    let fact = (1..=k).fold(Int::one(), |acc, i| acc * Int::from(i));
    let mut total = Rat::zero();
    for s in &tri.simplices {
        total += simplex_volume_raw(points, s, chart);
    }
    total / Rat::from_integer(fact)
}

/// `|det|` of the edge vectors of one simplex in the chart (k! times its volume).
pub fn simplex_volume_raw(points: &[RationalVector], simplex: &[usize], chart: &AffineChart) -> Rat {
    let base = chart.project(&points[simplex[0]]);
    let rows: Vec<Vec<Rat>> = simplex[1..]
        .iter()
        .map(|&i| {
            chart
                .project(&points[i])
                .iter()
                .zip(&base)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    if rows.is_empty() {
        return Rat::one();
    }
    abs_determinant_rational(&rows)
}

impl AffineChart {
    pub fn of(points: &[RationalVector]) -> Self {
        let mut rows = directions(points);
        let pivots = integer_rref(&mut rows);
        AffineChart { pivots }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn project(&self, p: &RationalVector) -> Vec<Rat> {
        self.pivots.iter().map(|&i| p.0[i].clone()).collect()
    }

    /// Chart coordinates scaled to integers by one common factor.
    fn integer_points(&self, points: &[RationalVector]) -> (Vec<Vec<Int>>, Int) {
        self.integer_points_with_scale(points, points)
    }

    /// Scales `points` by the common denominator of `reference ∪ points`.
    fn integer_points_with_scale(
        &self,
        points: &[RationalVector],
        reference: &[RationalVector],
    ) -> (Vec<Vec<Int>>, Int) {
        let projected: Vec<Vec<Rat>> = points.iter().map(|p| self.project(p)).collect();
        let mut l = Int::one();
        for p in reference
            .iter()
            .map(|p| self.project(p))
            .chain(projected.iter().cloned())
        {
            for x in &p {
                l = l.lcm(x.denom());
            }
        }
        let lr = Rat::from_integer(l.clone());
        let ints = projected
            .iter()
            .map(|p| p.iter().map(|x| (x * &lr).to_integer()).collect())
            .collect();
        (ints, l)
    }
}

fn dedup(points: Vec<RationalVector>) -> Result<Vec<RationalVector>> {
    let Some(first) = points.first() else {
        return Err(Error::invalid("a polytope needs at least one vertex"));
    };
    let n = first.len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::invalid("polytope vertices have different lengths"));
    }
    let mut out: Vec<RationalVector> = Vec::with_capacity(points.len());
    for p in points {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

fn directions(points: &[RationalVector]) -> Vec<Vec<Int>> {
    let base = &points[0];
    points[1..]
        .iter()
        .map(|p| clear_denominators(&p.sub(base).0).0)
        .collect()
}

/// Dimension of the affine hull.
pub fn affine_rank(points: &[RationalVector]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let mut rows = directions(points);
    integer_rref(&mut rows).len()
}

struct Facet {
    verts: Vec<usize>,
    normal: Vec<Int>,
    offset: Int,
}

impl Facet {
    /// Positive strictly beyond the facet, negative on the interior side.
    fn side(&self, p: &[Int]) -> Int {
        dot(&self.normal, p) - &self.offset
    }
}

struct Placing {
    simplices: Vec<Vec<usize>>,
    facets: Vec<Facet>,
}

impl Placing {
    fn contains(&self, p: &[Int]) -> bool {
        self.facets.iter().all(|f| !f.side(p).is_positive())
    }
}

fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).fold(Int::zero(), |acc, (x, y)| acc + x * y)
}

/// Placing triangulation of integer points spanning `Z^k`. Points are
/// inserted in index order; a point beyond some facets is coned to each of
/// them. Returns `None` if the points span fewer than `k` dimensions.
fn place(points: &[Vec<Int>], k: usize) -> Option<Placing> {
    if points.is_empty() {
        return None;
    }
    if k == 0 {
        return Some(Placing {
            simplices: vec![vec![0]],
            facets: Vec::new(),
        });
    }
    // Greedy affinely independent start.
    let mut init = vec![0usize];
    let mut rows: Vec<Vec<Int>> = Vec::new();
    for i in 1..points.len() {
        if init.len() == k + 1 {
            break;
        }
        let mut trial = rows.clone();
        trial.push(points[i].iter().zip(&points[0]).map(|(a, b)| a - b).collect());
        let mut t = trial.clone();
        if integer_rref(&mut t).len() == trial.len() {
            rows = trial;
            init.push(i);
        }
    }
    if init.len() < k + 1 {
        return None;
    }
    // (k+1) times an interior point of the first simplex.
    let mut center = vec![Int::zero(); k];
    for &i in &init {
        for (c, x) in center.iter_mut().zip(&points[i]) {
            *c += x;
        }
    }
    let scale = Int::from(k + 1);
    let make = |verts: Vec<usize>| -> Facet {
        let (normal, offset) = hyperplane(points, &verts, k);
        let mut f = Facet { verts, normal, offset };
        let s = dot(&f.normal, &center) - &f.offset * &scale;
        if s.is_positive() {
            for x in f.normal.iter_mut() {
                *x = -&*x;
            }
            f.offset = -&f.offset;
        }
        f
    };
    let mut facets: Vec<Facet> = (0..=k)
        .map(|skip| {
            let mut v: Vec<usize> = init
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, &i)| i)
                .collect();
            v.sort_unstable();
            make(v)
        })
        .collect();
    let mut simplices = vec![init.clone()];
    for (p, point) in points.iter().enumerate() {
        if init.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&f| facets[f].side(point).is_positive())
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for &f in &visible {
            let verts = &facets[f].verts;
            let mut s = verts.clone();
            s.push(p);
            simplices.push(s);
            for skip in 0..verts.len() {
                let r: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(r).or_insert(0) += 1;
            }
        }
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|&(_, c)| c == 1).map(|(r, _)| r).collect();
        horizon.sort();
        let mut idx = 0;
        facets.retain(|_| {
            let keep = !visible.contains(&idx);
            idx += 1;
            keep
        });
        for mut r in horizon {
            r.push(p);
            r.sort_unstable();
            facets.push(make(r));
        }
    }
    Some(Placing { simplices, facets })
}

/// Integer hyperplane `n·x = b` through `k` affinely independent points of `Z^k`.
fn hyperplane(points: &[Vec<Int>], verts: &[usize], k: usize) -> (Vec<Int>, Int) {
    let base = &points[verts[0]];
    let mut rows: Vec<Vec<Int>> = verts[1..]
        .iter()
        .map(|&v| points[v].iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let normal = if rows.is_empty() {
        vec![Int::one(); k.min(1)]
    } else {
        let pivots = integer_rref(&mut rows);
        let free = (0..k)
            .find(|c| !pivots.contains(c))
            .expect("facet points are independent");
        let l = rows.iter().zip(&pivots).fold(Int::one(), |acc, (r, &p)| acc.lcm(&r[p]));
        let mut n = vec![Int::zero(); k];
        n[free] = l.clone();
        for (r, &p) in rows.iter().zip(&pivots) {
            n[p] = -(&r[free] * &l) / &r[p];
        }
        let g = n.iter().fold(Int::zero(), |acc, x| acc.gcd(x));
        n.into_iter().map(|x| x / &g).collect()
    };
    let offset = dot(&normal, base);
    (normal, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{projectivize, CocycleMatrix};
    use crate::rational::{int, rat};

    fn pv(v: &[(i64, i64)]) -> RationalVector {
        RationalVector::from_ratios(v)
    }

    #[test]
    fn standard_segment_has_unit_length() {
        let p = Polytope::new(vec![pv(&[(1, 1), (0, 1)]), pv(&[(0, 1), (1, 1)])]).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.volume(), int(1));
    }

    #[test]
    fn image_of_segment_under_shear() {
        let q = CocycleMatrix::from_rows(&[vec![1, 0], vec![3, 1]]).unwrap();
        let p = Polytope::new(vec![RationalVector::basis(2, 0), RationalVector::basis(2, 1)]).unwrap();
        let img = p.map(|v| projectivize(&q, v)).unwrap();
        assert_eq!(img.volume(), rat(1, 4));
    }

    #[test]
    fn homothety_scales_by_power() {
        // A 3-simplex in R^4, then shrink by 1/2 toward its barycenter.
        let verts: Vec<RationalVector> = (0..4).map(|i| RationalVector::basis(4, i)).collect();
        let p = Polytope::new(verts.clone()).unwrap();
        let c = pv(&[(1, 4), (1, 4), (1, 4), (1, 4)]);
        let half = rat(1, 2);
        let q = Polytope::new(verts.iter().map(|v| c.add(&v.sub(&c).scaled(&half))).collect()).unwrap();
        assert_eq!(q.volume() / p.volume(), rat(1, 8));
        assert_eq!(p.volume(), rat(1, 6));
    }

    #[test]
    fn square_and_interior_points() {
        let pts = vec![
            pv(&[(0, 1), (0, 1)]),
            pv(&[(1, 2), (1, 2)]),
            pv(&[(1, 1), (0, 1)]),
            pv(&[(0, 1), (1, 1)]),
            pv(&[(1, 1), (1, 1)]),
            pv(&[(1, 2), (0, 1)]),
        ];
        let p = Polytope::new(pts.clone()).unwrap();
        assert_eq!(p.volume(), int(1));
        let h = Polytope::hull(pts).unwrap();
        assert_eq!(h.vertices().len(), 4);
        assert_eq!(h.volume(), int(1));
    }

    #[test]
    fn degenerate_is_zero() {
        let p = Polytope::with_dim(vec![pv(&[(1, 1), (0, 1), (0, 1)]), pv(&[(0, 1), (1, 1), (0, 1)])], 2).unwrap();
        assert_eq!(p.volume(), int(0));
    }

    #[test]
    fn cross_polytope_volume() {
        // Octahedron |x|+|y|+|z| <= 1 has volume 4/3.
        let mut pts = Vec::new();
        for i in 0..3 {
            for s in [-1, 1] {
                let mut v = vec![(0, 1); 3];
                v[i] = (s, 1);
                pts.push(pv(&v));
            }
        }
        let p = Polytope::new(pts).unwrap();
        assert_eq!(p.volume(), rat(4, 3));
    }
}
