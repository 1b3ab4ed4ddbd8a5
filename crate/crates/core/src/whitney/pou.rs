//! Partition of unity `φ_Q = ψ_Q / Σ_K ψ_K` subordinate to `{Q*}`.

use super::bump::profile_derivs;
use super::WhitneyCover;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::multiindex::{table, IndexTable, MultiIndex, MAX_ORDER};

/// Derivatives of every nonvanishing `φ_Q` at one point.
#[derive(Clone, Debug, Default)]
pub struct PouTable {
    /// Cube containing the point.
    pub home: usize,
    /// Cubes whose bump does not vanish at the point.
    pub cubes: Vec<u32>,
    /// Row `j` holds `D^α φ_{cubes[j]}` in the order of `table(n, order)`.
    pub phi: Vec<f64>,
    pub order: usize,
    width: usize,
    psi: Vec<f64>,
    sum: Vec<f64>,
    inv: Vec<f64>,
}

impl PouTable {
    /// Derivatives up to `order ≤ 5` at `x`.
    pub fn at(cover: &WhitneyCover, x: &Point, order: usize) -> Result<PouTable> {
        if order > MAX_ORDER {
            return Err(Error::Config(format!("derivative order {order} above {MAX_ORDER}")));
        }
        let (home, _) = cover.active_at(x)?;
        Ok(Self::at_home(cover, home, x, order))
    }

    /// Same as [`PouTable::at`] for a point known to lie in cube `home`.
    pub fn at_home(cover: &WhitneyCover, home: usize, x: &Point, order: usize) -> PouTable {
        let mut t = PouTable::default();
        t.refill(cover, home, cover.touching_cubes(home), x, order);
        t
    }

    /// Recomputes the table in place. `candidates` must contain every cube
    /// whose `Q*` holds `x` in its interior; the others are filtered out.
    pub fn refill(&mut self, cover: &WhitneyCover, home: usize, candidates: &[u32], x: &Point, order: usize) {
        debug_assert!(order <= MAX_ORDER);
        let t = table(cover.dim(), order);
        let w = t.len();
        self.home = home;
        self.order = order;
        self.width = w;
        self.cubes.clear();
        self.cubes.extend(candidates.iter().copied().filter(|&q| {
            let c = &cover.cube(q as usize).cube;
            c.center.dist(x) < c.r * super::bump::STAR
        }));
        let k = self.cubes.len();
        self.psi.resize(k * w, 0.0);
        self.phi.resize(k * w, 0.0);
        self.sum.clear();
        self.sum.resize(w, 0.0);
        self.inv.resize(w, 0.0);
        for (j, &q) in self.cubes.iter().enumerate() {
            let row = &mut self.psi[j * w..(j + 1) * w];
            bump_derivs(cover, q as usize, x, t, row);
            for (s, v) in self.sum.iter_mut().zip(row.iter()) {
                *s += v;
            }
        }
        t.reciprocal(&self.sum, &mut self.inv);
        for j in 0..k {
            t.product(&self.psi[j * w..(j + 1) * w], &self.inv, &mut self.phi[j * w..(j + 1) * w]);
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.phi[j * self.width..(j + 1) * self.width]
    }

    /// `D^α φ_Q(x)`; zero for cubes whose bump vanishes at `x`.
    pub fn get(&self, q: usize, a: &MultiIndex) -> f64 {
        let t = table(a.dim(), self.order);
        match self.cubes.iter().position(|&c| c as usize == q) {
            Some(j) => self.row(j)[t.index(a)],
            None => 0.0,
        }
    }
}

/// `D^α ψ_Q(x)` for all `|α| ≤ t.order`.
pub(crate) fn bump_derivs(cover: &WhitneyCover, q: usize, x: &Point, t: &IndexTable, out: &mut [f64]) {
    let c = &cover.cube(q).cube;
    let n = cover.dim();
    let mut prof = [[0.0; MAX_ORDER + 1]; 3];
    let mut inv_r = [1.0; MAX_ORDER + 1];
    for k in 1..=t.order {
        inv_r[k] = inv_r[k - 1] / c.r;
    }
    for i in 0..n {
        profile_derivs((x[i] - c.center[i]) / c.r, t.order, &mut prof[i]);
    }
    for (k, a) in t.list().iter().enumerate() {
        let mut v = 1.0;
        for (i, &ai) in a.parts().iter().enumerate() {
            v *= prof[i][ai as usize] * inv_r[ai as usize];
        }
        out[k] = v;
    }
}

/// `D^α φ_Q(x)`.
pub fn pou_eval(cover: &WhitneyCover, q: usize, a: &MultiIndex, x: &Point) -> Result<f64> {
    if a.dim() != cover.dim() || x.dim() != cover.dim() {
        return Err(Error::DimensionMismatch {
            expected: cover.dim(),
            got: a.dim(),
        });
    }
    let tab = PouTable::at(cover, x, a.order())?;
    Ok(tab.get(q, a))
}
