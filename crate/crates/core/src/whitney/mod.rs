//! Whitney cover of a window around `E` and the partition of unity on it.
//!
//! The window is a dyadic cube. It is refined recursively; a cube is kept
//! as soon as `diam Q ≤ dist(Q, E)`. Cubes that still violate the rule at
//! `depth_cap` form the collar, an unresolved neighbourhood of `E` whose
//! measure is reported.

pub mod bump;
mod pou;

pub use pou::{pou_eval, PouTable};
pub(crate) use pou::bump_derivs;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    bounding_cube, ceil_log2, min_separation, pow2, validate_set, Cube, Point, MAX_DIM,
};

/// Parameters of the cover.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverConfig {
    /// The window is the bounding cube of `E` dilated by this factor.
    pub inflate: f64,
    /// Maximal refinement depth; `None` picks one from the separation of `E`.
    pub depth_cap: Option<u32>,
    /// Abort with a capacity error past this many cubes.
    pub max_cubes: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            inflate: 4.0,
            depth_cap: None,
            max_cubes: 4_000_000,
        }
    }
}

/// A dyadic cube of the window: `level` halvings, integer position `idx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DyadicCube {
    pub level: u32,
    pub idx: [i64; MAX_DIM],
    pub cube: Cube,
    /// `dist(Q, E)`.
    pub dist: f64,
}

impl DyadicCube {
    pub fn diam(&self) -> f64 {
        self.cube.diam()
    }
}

/// Where a point of the window falls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Cube(usize),
    Collar(usize),
    Outside,
}

#[derive(Clone, Debug)]
pub struct WhitneyCover {
    n: usize,
    window: Cube,
    depth_cap: u32,
    points: Vec<Point>,
    cubes: Vec<DyadicCube>,
    /// `T(K)`: cubes touching `K`, `K` included, ascending.
    adjacency: Vec<Vec<u32>>,
    collar: Vec<DyadicCube>,
    /// Whitney cubes touching each collar cell.
    collar_adjacency: Vec<Vec<u32>>,
    lookup: FxHashMap<(u32, [i64; MAX_DIM]), u32>,
    collar_lookup: FxHashMap<[i64; MAX_DIM], u32>,
    /// Cells that were subdivided.
    internal: FxHashSet<(u32, [i64; MAX_DIM])>,
}

/// Default window: bounding cube of `E` dilated by `inflate`, rounded up to
/// a dyadic half side with a dyadic center.
pub fn default_window(points: &[Point], inflate: f64) -> Result<Cube> {
    if !(inflate >= 4.0) {
        return Err(Error::Config(format!("inflate = {inflate} must be at least 4")));
    }
    let b = bounding_cube(points)?;
    let rb = if b.r > 0.0 { b.r } else { 1.0 };
    let r0 = pow2(ceil_log2(inflate * rb));
    let grid = r0 / 16.0;
    let mut c = b.center;
    for v in c.coords_mut() {
        *v = (*v / grid).round() * grid;
    }
    Cube::new(c, r0)
}

/// Refinement depth at which the finest cubes are below `sep(E)/128`.
pub fn auto_depth(points: &[Point], window: &Cube) -> u32 {
    let sep = min_separation(points);
    if !sep.is_finite() {
        return 12;
    }
    let d = ceil_log2(window.diam() * 128.0 / sep);
    d.clamp(1, 40) as u32
}

/// Whitney decomposition of the default window.
pub fn whitney_decompose(points: &[Point], cfg: &CoverConfig) -> Result<WhitneyCover> {
    let window = default_window(points, cfg.inflate)?;
    let depth = cfg.depth_cap.unwrap_or_else(|| auto_depth(points, &window));
    whitney_decompose_in(points, window, depth, cfg.max_cubes)
}

/// Whitney decomposition of an explicit window.
pub fn whitney_decompose_in(
    points: &[Point],
    window: Cube,
    depth_cap: u32,
    max_cubes: usize,
) -> Result<WhitneyCover> {
    let n = validate_set(points)?;
    if window.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: window.dim(),
        });
    }
    if depth_cap > 40 {
        return Err(Error::Config(format!("depth cap {depth_cap} above 40")));
    }
    if points.iter().any(|x| !window.contains(x)) {
        return Err(Error::WindowTooSmall);
    }
    let mut cover = WhitneyCover {
        n,
        window,
        depth_cap,
        points: points.to_vec(),
        cubes: Vec::new(),
        adjacency: Vec::new(),
        collar: Vec::new(),
        collar_adjacency: Vec::new(),
        lookup: FxHashMap::default(),
        collar_lookup: FxHashMap::default(),
        internal: FxHashSet::default(),
    };
    cover.refine(max_cubes)?;
    cover.build_adjacency();
    Ok(cover)
}

impl WhitneyCover {
    fn cell(&self, level: u32, idx: [i64; MAX_DIM]) -> Cube {
        let side = self.window.diam() / pow2(level as i32);
        let mut c = self.window.center;
        for (i, v) in c.coords_mut().iter_mut().enumerate() {
            *v = *v - self.window.r + (idx[i] as f64 + 0.5) * side;
        }
        Cube { center: c, r: side / 2.0 }
    }

    fn refine(&mut self, max_cubes: usize) -> Result<()> {
        let n = self.n;
        let all: Vec<u32> = (0..self.points.len() as u32).collect();
        // Depth-first, children in lexicographic order of their index.
        let mut stack: Vec<(u32, [i64; MAX_DIM], Vec<u32>)> = vec![(0, [0; MAX_DIM], all)];
        while let Some((level, idx, cand)) = stack.pop() {
            let cube = self.cell(level, idx);
            let mut dist = f64::INFINITY;
            for &e in &cand {
                dist = dist.min(cube.dist_point(&self.points[e as usize]));
            }
            let dc = DyadicCube {
                level,
                idx,
                cube,
                dist,
            };
            if cube.diam() <= dist {
                self.lookup.insert((level, idx), self.cubes.len() as u32);
                self.cubes.push(dc);
                if self.cubes.len() > max_cubes {
                    return Err(Error::Capacity(format!(
                        "Whitney cover exceeds {max_cubes} cubes"
                    )));
                }
                continue;
            }
            if level == self.depth_cap {
                self.collar_lookup.insert(idx, self.collar.len() as u32);
                self.collar.push(dc);
                continue;
            }
            // Only points within dist + diam of the parent can be nearest to
            // a child.
            self.internal.insert((level, idx));
            let reach = dist + cube.diam();
            let keep: Vec<u32> = cand
                .into_iter()
                .filter(|&e| cube.dist_point(&self.points[e as usize]) <= reach)
                .collect();
            for child in (0..1usize << n).rev() {
                let mut ci = [0i64; MAX_DIM];
                for i in 0..n {
                    ci[i] = 2 * idx[i] + ((child >> (n - 1 - i)) & 1) as i64;
                }
                stack.push((level + 1, ci, keep.clone()));
            }
        }
        Ok(())
    }

    /// Extent of a cell in units of the finest level, per axis.
    fn span(&self, level: u32, idx: &[i64; MAX_DIM]) -> [(i64, i64); MAX_DIM] {
        let w = 1i64 << (self.depth_cap - level);
        let mut s = [(0, 0); MAX_DIM];
        for i in 0..self.n {
            s[i] = (idx[i] * w, (idx[i] + 1) * w);
        }
        s
    }

    fn spans_touch(&self, a: &[(i64, i64); MAX_DIM], b: &[(i64, i64); MAX_DIM]) -> bool {
        (0..self.n).all(|i| a[i].0 <= b[i].1 && b[i].0 <= a[i].1)
    }

    /// Whitney cubes touching the cell `(level, idx)`: for every neighbouring
    /// cell of the same size either an ancestor is a Whitney cube or the
    /// cell was refined and its descendants are searched.
    fn touching(&self, level: u32, idx: &[i64; MAX_DIM]) -> Vec<u32> {
        let n = self.n;
        let me = self.span(level, idx);
        let lim = 1i64 << level;
        let mut out = Vec::new();
        let mut stack: Vec<(u32, [i64; MAX_DIM])> = Vec::new();
        for_each_offset(n, -1, 1, |off| {
            let mut c = [0i64; MAX_DIM];
            for i in 0..n {
                let v = idx[i] + off[i];
                if v < 0 || v >= lim {
                    return;
                }
                c[i] = v;
            }
            if self.internal.contains(&(level, c)) {
                stack.push((level, c));
                return;
            }
            for up in 0..=level {
                let mut a = c;
                for v in a.iter_mut().take(n) {
                    *v >>= up;
                }
                if let Some(&q) = self.lookup.get(&(level - up, a)) {
                    out.push(q);
                    break;
                }
                if up == 0 && self.collar_lookup.contains_key(&a) && level == self.depth_cap {
                    break;
                }
            }
        });
        while let Some((l, c)) = stack.pop() {
            for child in 0..1usize << n {
                let mut ci = [0i64; MAX_DIM];
                for i in 0..n {
                    ci[i] = 2 * c[i] + ((child >> i) & 1) as i64;
                }
                if !self.spans_touch(&me, &self.span(l + 1, &ci)) {
                    continue;
                }
                if let Some(&q) = self.lookup.get(&(l + 1, ci)) {
                    out.push(q);
                } else if self.internal.contains(&(l + 1, ci)) {
                    stack.push((l + 1, ci));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn build_adjacency(&mut self) {
        self.adjacency = self
            .cubes
            .iter()
            .map(|c| self.touching(c.level, &c.idx))
            .collect();
        self.collar_adjacency = self
            .collar
            .iter()
            .map(|c| self.touching(c.level, &c.idx))
            .collect();
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> &Cube {
        &self.window
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn cube(&self, q: usize) -> &DyadicCube {
        &self.cubes[q]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `T(K)`, including `K`.
    pub fn touching_cubes(&self, k: usize) -> &[u32] {
        &self.adjacency[k]
    }

    pub fn collar(&self) -> &[DyadicCube] {
        &self.collar
    }

    pub fn collar_touching(&self, c: usize) -> &[u32] {
        &self.collar_adjacency[c]
    }

    /// Total volume of the collar cells.
    pub fn collar_measure(&self) -> f64 {
        self.collar.iter().map(|c| c.cube.volume()).sum()
    }

    /// Whether `Q` touches the boundary of the window.
    pub fn meets_window_boundary(&self, q: usize) -> bool {
        let c = &self.cubes[q];
        let lim = 1i64 << c.level;
        (0..self.n).any(|i| c.idx[i] == 0 || c.idx[i] == lim - 1)
    }

    /// Cell of the decomposition containing `x`.
    pub fn locate(&self, x: &Point) -> Location {
        if !self.window.contains(x) {
            return Location::Outside;
        }
        let lo: Vec<f64> = (0..self.n).map(|i| self.window.lower(i)).collect();
        for l in 0..=self.depth_cap {
            let side = self.window.diam() / pow2(l as i32);
            let lim = (1i64 << l) - 1;
            let mut idx = [0i64; MAX_DIM];
            for i in 0..self.n {
                idx[i] = (((x[i] - lo[i]) / side).floor() as i64).clamp(0, lim);
            }
            if let Some(&q) = self.lookup.get(&(l, idx)) {
                return Location::Cube(q as usize);
            }
            if l == self.depth_cap {
                if let Some(&c) = self.collar_lookup.get(&idx) {
                    return Location::Collar(c as usize);
                }
            }
        }
        Location::Outside
    }

    /// Cubes `Q` with `x` in the interior of `Q* = (9/8) Q`, the only ones
    /// whose bump does not vanish at `x`.
    pub fn active_at(&self, x: &Point) -> Result<(usize, Vec<u32>)> {
        match self.locate(x) {
            Location::Cube(k) => {
                let act = self.adjacency[k]
                    .iter()
                    .copied()
                    .filter(|&q| {
                        let c = &self.cubes[q as usize].cube;
                        c.center.dist(x) < c.r * bump::STAR
                    })
                    .collect();
                Ok((k, act))
            }
            Location::Collar(_) => Err(Error::Collar(
                x.coords().to_vec(),
                crate::geometry::dist_point_set(x, &self.points),
            )),
            Location::Outside => Err(Error::Config(format!(
                "point {:?} lies outside the window",
                x.coords()
            ))),
        }
    }

    /// Checks the cover invariants and returns summary statistics.
    pub fn check(&self) -> CoverReport {
        let mut rep = CoverReport {
            cubes: self.cubes.len(),
            collar_cells: self.collar.len(),
            collar_measure: self.collar_measure(),
            max_touching: 0,
            dqe_violations: 0,
            nine_q_violations: 0,
            neighbor_ratio_violations: 0,
            asymmetric_touching: 0,
        };
        for (k, c) in self.cubes.iter().enumerate() {
            let d = c.cube.dist_set(&self.points);
            if !(c.diam() <= d && d <= 4.0 * c.diam()) {
                rep.dqe_violations += 1;
            }
            let nine = c.cube.dilate(9.0);
            if !self.points.iter().any(|x| nine.contains(x)) {
                rep.nine_q_violations += 1;
            }
            rep.max_touching = rep.max_touching.max(self.adjacency[k].len());
            for &q in &self.adjacency[k] {
                let r = self.cubes[q as usize].diam() / c.diam();
                if !(0.25..=4.0).contains(&r) {
                    rep.neighbor_ratio_violations += 1;
                }
                if self.adjacency[q as usize].binary_search(&(k as u32)).is_err() {
                    rep.asymmetric_touching += 1;
                }
            }
        }
        rep
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub cubes: usize,
    pub collar_cells: usize,
    pub collar_measure: f64,
    /// Largest `|T(K)|`, `K` included.
    pub max_touching: usize,
    pub dqe_violations: usize,
    pub nine_q_violations: usize,
    pub neighbor_ratio_violations: usize,
    pub asymmetric_touching: usize,
}

impl CoverReport {
    pub fn is_clean(&self) -> bool {
        self.dqe_violations == 0
            && self.nine_q_violations == 0
            && self.neighbor_ratio_violations == 0
            && self.asymmetric_touching == 0
    }
}

fn for_each_offset(n: usize, lo: i64, hi: i64, mut f: impl FnMut(&[i64; MAX_DIM])) {
    let mut off = [lo; MAX_DIM];
    for v in off.iter_mut().skip(n) {
        *v = 0;
    }
    loop {
        f(&off);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            off[i] += 1;
            if off[i] <= hi {
                break;
            }
            off[i] = lo;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn singleton_on_a_line() {
        let w = Cube::new(pt(&[0.0]), 2.0).unwrap();
        let cover = whitney_decompose_in(&[pt(&[0.0])], w, 8, 1000).unwrap();
        assert!(cover.check().is_clean());
        // Cubes come in pairs [2^-k, 2^{1-k}] on both sides of 0.
        let mut diams: Vec<f64> = cover.cubes().iter().map(|c| c.diam()).collect();
        diams.sort_by(f64::total_cmp);
        assert_eq!(diams.last(), Some(&1.0));
        assert_eq!(cover.collar().len(), 2);
    }

    #[test]
    fn window_must_contain_points() {
        let w = Cube::new(pt(&[0.0]), 1.0).unwrap();
        assert_eq!(
            whitney_decompose_in(&[pt(&[3.0])], w, 4, 100).unwrap_err(),
            Error::WindowTooSmall
        );
    }

    #[test]
    fn adjacency_matches_brute_force() {
        let pts = vec![pt(&[0.1, 0.2]), pt(&[0.7, 0.4]), pt(&[0.3, 0.9])];
        let cover = whitney_decompose(
            &pts,
            &CoverConfig {
                depth_cap: Some(9),
                ..CoverConfig::default()
            },
        )
        .unwrap();
        for k in 0..cover.len() {
            let want: Vec<u32> = (0..cover.len() as u32)
                .filter(|&q| cover.cube(q as usize).cube.intersects(&cover.cube(k).cube))
                .collect();
            assert_eq!(cover.touching_cubes(k), want.as_slice(), "cube {k}");
        }
    }

    #[test]
    fn locate_finds_containing_cube() {
        let pts = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.5])];
        let cover = whitney_decompose(&pts, &CoverConfig::default()).unwrap();
        let x = pt(&[0.31, -0.77]);
        match cover.locate(&x) {
            Location::Cube(k) => assert!(cover.cube(k).cube.contains(&x)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(cover.locate(&pt(&[100.0, 0.0])), Location::Outside);
    }
}
