//! Points, axis-parallel cubes and dyadic nets under the uniform norm.
//!
//! All distances in the crate are measured in `‖x‖ = max_i |x_i|`. A cube
//! `Q(c, r)` is the closed ball of radius `r` around `c` in that norm, so
//! its diameter is `2r` and `λQ` means `Q(c, λr)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// A point of `R^n`, `1 ≤ n ≤ 3`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Point {
    c: [f64; MAX_DIM],
    n: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Point> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Config(format!(
                "dimension {} outside 1..={MAX_DIM}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(coords.to_vec()));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            c,
            n: coords.len() as u8,
        })
    }

    /// The origin of `R^n`.
    pub fn zero(n: usize) -> Point {
        assert!((1..=MAX_DIM).contains(&n));
        Point {
            c: [0.0; MAX_DIM],
            n: n as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.n as usize]
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.c[..self.n as usize]
    }

    /// Uniform distance. Dimensions must agree.
    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut d: f64 = 0.0;
        for i in 0..self.n as usize {
            d = d.max((self.c[i] - other.c[i]).abs());
        }
        d
    }

    /// Euclidean distance, used only where a caller asks for it explicitly.
    pub fn dist_euclid(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lexicographic comparison of coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for i in 0..self.dim().min(other.dim()) {
            match self.c[i].total_cmp(&other.c[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.n.cmp(&other.n)
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut p = *self;
        for i in 0..self.dim() {
            p.c[i] += other.c[i];
        }
        p
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut p = *self;
        for i in 0..self.dim() {
            p.c[i] -= other.c[i];
        }
        p
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut p = *self;
        for i in 0..self.dim() {
            p.c[i] *= s;
        }
        p
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        let mut p = *self;
        for i in 0..self.dim() {
            p.c[i] = 0.5 * (self.c[i] + other.c[i]);
        }
        p
    }

    fn check_dim(&self, other: &Point) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.coords().to_vec()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Point> {
        Point::new(&v)
    }
}

/// Closed cube `Q(center, r)`; `r` is the half side length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point,
    #[serde(rename = "half_side")]
    pub r: f64,
}

impl Cube {
    pub fn new(center: Point, r: f64) -> Result<Cube> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Config(format!("invalid half side {r}")));
        }
        Ok(Cube { center, r })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `diam Q = 2r` in the uniform norm.
    #[inline]
    pub fn diam(&self) -> f64 {
        2.0 * self.r
    }

    pub fn volume(&self) -> f64 {
        self.diam().powi(self.dim() as i32)
    }

    /// `λQ`, the cube with the same center and `λ` times the half side.
    pub fn dilate(&self, lambda: f64) -> Cube {
        Cube {
            center: self.center,
            r: self.r * lambda,
        }
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.center[i] - self.r
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.center[i] + self.r
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        self.center.dist(x) <= self.r
    }

    /// Closed cubes meet (sharing a face or a corner counts).
    #[inline]
    pub fn intersects(&self, other: &Cube) -> bool {
        self.center.dist(&other.center) <= self.r + other.r
    }

    #[inline]
    pub fn dist_point(&self, x: &Point) -> f64 {
        (self.center.dist(x) - self.r).max(0.0)
    }

    #[inline]
    pub fn dist_cube(&self, other: &Cube) -> f64 {
        (self.center.dist(&other.center) - self.r - other.r).max(0.0)
    }

    /// Distance to a finite set; `+∞` for the empty set.
    pub fn dist_set(&self, set: &[Point]) -> f64 {
        set.iter()
            .map(|x| self.dist_point(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance of a point to a finite set; `+∞` for the empty set.
pub fn dist_point_set(x: &Point, set: &[Point]) -> f64 {
    set.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min)
}

/// Any of the objects the uniform distance is defined between.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    Point(&'a Point),
    Cube(&'a Cube),
    Set(&'a [Point]),
}

impl Region<'_> {
    fn dim(&self) -> Option<usize> {
        match self {
            Region::Point(p) => Some(p.dim()),
            Region::Cube(c) => Some(c.dim()),
            Region::Set(s) => s.first().map(|p| p.dim()),
        }
    }
}

/// `dist(A, B) = inf ‖a − b‖`, with `dist(·, ∅) = +∞`.
pub fn uniform_dist(a: Region<'_>, b: Region<'_>) -> Result<f64> {
    if let (Some(da), Some(db)) = (a.dim(), b.dim()) {
        if da != db {
            return Err(Error::DimensionMismatch {
                expected: da,
                got: db,
            });
        }
    }
    if let Region::Set(s) = a {
        if let Some(p) = s.iter().find(|p| Some(p.dim()) != a.dim()) {
            return Err(Error::DimensionMismatch {
                expected: a.dim().unwrap_or(0),
                got: p.dim(),
            });
        }
    }
    if let Region::Set(s) = b {
        if let Some(p) = s.iter().find(|p| Some(p.dim()) != b.dim()) {
            return Err(Error::DimensionMismatch {
                expected: b.dim().unwrap_or(0),
                got: p.dim(),
            });
        }
    }
    Ok(match (a, b) {
        (Region::Point(x), Region::Point(y)) => x.dist(y),
        (Region::Point(x), Region::Cube(q)) | (Region::Cube(q), Region::Point(x)) => {
            q.dist_point(x)
        }
        (Region::Cube(q), Region::Cube(k)) => q.dist_cube(k),
        (Region::Set(s), other) | (other, Region::Set(s)) => {
            let mut d = f64::INFINITY;
            for p in s {
                d = d.min(uniform_dist(Region::Point(p), other)?);
            }
            d
        }
    })
}

/// Checks that a set is non-empty, of one dimension and free of duplicates.
pub fn validate_set(points: &[Point]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptySet)?;
    for p in points {
        first.check_dim(p)?;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::DuplicatePoint(points[w[0]].coords().to_vec()));
        }
    }
    Ok(first.dim())
}

/// Indices of `points` in lexicographic order of coordinates.
pub fn lex_order(points: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]).then(a.cmp(&b)));
    order
}

/// Exact `2^i`.
#[inline]
pub fn pow2(i: i32) -> f64 {
    2f64.powi(i)
}

/// Largest `i` with `2^i ≤ x`, for finite `x > 0`.
pub fn floor_log2(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut i = x.log2().floor() as i32;
    while pow2(i) > x {
        i -= 1;
    }
    while pow2(i + 1) <= x {
        i += 1;
    }
    i
}

/// Smallest `i` with `x ≤ 2^i`, for finite `x > 0`.
pub fn ceil_log2(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut i = x.log2().ceil() as i32;
    while pow2(i) < x {
        i += 1;
    }
    while pow2(i - 1) >= x {
        i -= 1;
    }
    i
}

/// Diameter of a finite set (0 for a singleton, the empty set included).
pub fn set_diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(points[i].dist(&points[j]));
        }
    }
    d
}

/// Smallest pairwise distance; `+∞` for fewer than two points.
pub fn min_separation(points: &[Point]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.min(points[i].dist(&points[j]));
        }
    }
    d
}

/// Smallest axis-parallel cube containing the set.
pub fn bounding_cube(points: &[Point]) -> Result<Cube> {
    let n = validate_set(points)?;
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for p in points {
        for i in 0..n {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let mut c = [0.0; MAX_DIM];
    let mut r: f64 = 0.0;
    for i in 0..n {
        c[i] = 0.5 * (lo[i] + hi[i]);
        r = r.max(0.5 * (hi[i] - lo[i]));
    }
    Cube::new(Point::new(&c[..n])?, r)
}

/// Range queries on a small static point set, sorted along the first axis.
#[derive(Clone, Debug)]
pub struct PointIndex {
    points: Vec<Point>,
    by_x: Vec<usize>,
    xs: Vec<f64>,
}

impl PointIndex {
    pub fn new(points: &[Point]) -> PointIndex {
        let mut by_x: Vec<usize> = (0..points.len()).collect();
        by_x.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
        let xs = by_x.iter().map(|&i| points[i][0]).collect();
        PointIndex {
            points: points.to_vec(),
            by_x,
            xs,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Indices (ascending) of points in the closed cube `q`.
    pub fn in_cube(&self, q: &Cube) -> Vec<usize> {
        let lo = q.lower(0);
        let hi = q.upper(0);
        let start = self.xs.partition_point(|&v| v < lo);
        let mut out = Vec::new();
        for k in start..self.xs.len() {
            if self.xs[k] > hi {
                break;
            }
            let i = self.by_x[k];
            if q.contains(&self.points[i]) {
                out.push(i);
            }
        }
        out.sort_unstable();
        out
    }

    /// Index of a point with exactly these coordinates.
    pub fn find(&self, x: &Point) -> Option<usize> {
        let start = self.xs.partition_point(|&v| v < x[0]);
        for k in start..self.xs.len() {
            if self.xs[k] > x[0] {
                break;
            }
            if self.points[self.by_x[k]] == *x {
                return Some(self.by_x[k]);
            }
        }
        None
    }
}

/// Nested dyadic nets `E_i ⊆ E`.
///
/// `E_{i+1} ⊆ E_i`, points of `E_i` are pairwise at least `2^i` apart and
/// every point of `E` lies within `2^{i+1}` of `E_i`. Each net is obtained
/// from the finer one by greedy thinning in lexicographic order.
#[derive(Clone, Debug)]
pub struct DyadicNets {
    points: Vec<Point>,
    lex: Vec<usize>,
    /// Largest level containing the point; `i32::MAX` for the survivor.
    top: Vec<i32>,
    i_min: i32,
    i_max: i32,
}

impl DyadicNets {
    pub fn build(points: &[Point]) -> Result<DyadicNets> {
        validate_set(points)?;
        let lex = lex_order(points);
        let dmin = min_separation(points);
        let diam = set_diameter(points);
        let (i_min, mut i_max) = if points.len() == 1 {
            (0, 3)
        } else {
            (floor_log2(dmin), ceil_log2(diam) + 3)
        };
        let mut top = vec![i_min; points.len()];
        let mut current: Vec<usize> = lex.clone();
        let mut level = i_min;
        while current.len() > 1 {
            let sep = pow2(level + 1);
            let mut kept: Vec<usize> = Vec::with_capacity(current.len());
            for &i in &current {
                if kept.iter().all(|&k| points[k].dist(&points[i]) >= sep) {
                    kept.push(i);
                }
            }
            level += 1;
            for &i in &kept {
                top[i] = level;
            }
            current = kept;
        }
        i_max = i_max.max(level);
        top[current[0]] = i32::MAX;
        Ok(DyadicNets {
            points: points.to_vec(),
            lex,
            top,
            i_min,
            i_max,
        })
    }

    pub fn i_min(&self) -> i32 {
        self.i_min
    }

    pub fn i_max(&self) -> i32 {
        self.i_max
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Whether point `idx` belongs to `E_level`.
    #[inline]
    pub fn contains(&self, idx: usize, level: i32) -> bool {
        level <= self.top[idx]
    }

    /// Members of `E_level` in lexicographic order.
    pub fn level(&self, level: i32) -> Vec<usize> {
        self.lex
            .iter()
            .copied()
            .filter(|&i| self.contains(i, level))
            .collect()
    }

    /// Nearest member of `E_level` to `x`; ties go to the lexicographically
    /// smallest point.
    pub fn nearest(&self, x: &Point, level: i32) -> usize {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for &i in &self.lex {
            if !self.contains(i, level) {
                continue;
            }
            let d = x.dist(&self.points[i]);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }
}
