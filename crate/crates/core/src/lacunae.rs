//! Lacunae: groups of Whitney cubes that see the same part of `E`, and the
//! projector that assigns a point of `E` to each group.
//!
//! A cube `Q` is lacunary when `(10Q) ∩ E = (90Q) ∩ E`. Lacunary cubes with
//! the same `(10Q) ∩ E` form one true lacuna; every other cube is an
//! elementary lacuna of its own with `V = (90Q) ∩ E`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ceil_log2, pow2, DyadicNets, Point, PointIndex};
use crate::whitney::WhitneyCover;

/// Constants of the lacunary construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LacunaConstants {
    pub tau: f64,
    /// `σ = 33 τ`.
    pub sigma: f64,
    /// `k = ⌊log2(360 σ)⌋ + 2`.
    pub k: i32,
    /// Separation constant of contacting centers.
    pub gamma_tilde: f64,
    /// Sparsity constant of the graph, `10^4 γ̃`.
    pub gamma: f64,
}

impl LacunaConstants {
    pub fn with_tau(tau: f64) -> Result<LacunaConstants> {
        if !(tau >= 1.0) || !tau.is_finite() {
            return Err(Error::Config(format!("tau = {tau} must be at least 1")));
        }
        let sigma = 33.0 * tau;
        let gamma_tilde = 180.0;
        Ok(LacunaConstants {
            tau,
            sigma,
            k: crate::geometry::floor_log2(360.0 * sigma) + 2,
            gamma_tilde,
            gamma: 1e4 * gamma_tilde,
        })
    }
}

impl Default for LacunaConstants {
    fn default() -> Self {
        LacunaConstants::with_tau(4.0).expect("default tau")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LacunaKind {
    True,
    Elementary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lacuna {
    pub kind: LacunaKind,
    /// Member cubes, ascending.
    pub cubes: Vec<u32>,
    /// `V_L ⊆ E`, ascending indices.
    pub v: Vec<u32>,
    pub q_min: u32,
    /// Largest cube; `None` for the unbounded lacuna.
    pub q_max: Option<u32>,
    pub bounded: bool,
    /// `Pr(L)`, an index into `E`.
    pub center: u32,
}

/// Two lacunae with touching cubes, `a < b`, and the first witness pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Contact {
    pub a: u32,
    pub b: u32,
    pub qa: u32,
    pub qb: u32,
}

#[derive(Clone, Debug)]
pub struct Lacunae {
    pub consts: LacunaConstants,
    lacunae: Vec<Lacuna>,
    cube_lacuna: Vec<u32>,
    unbounded: Option<usize>,
    contacts: Vec<Contact>,
    far_center: usize,
    pub warnings: Vec<String>,
}

impl Lacunae {
    pub fn all(&self) -> &[Lacuna] {
        &self.lacunae
    }

    pub fn get(&self, l: usize) -> &Lacuna {
        &self.lacunae[l]
    }

    pub fn len(&self) -> usize {
        self.lacunae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lacunae.is_empty()
    }

    /// Lacuna containing cube `q`.
    pub fn of_cube(&self, q: usize) -> usize {
        self.cube_lacuna[q] as usize
    }

    /// `a_Q = Pr(L)` for the lacuna `L ∋ Q`.
    pub fn cube_center(&self, q: usize) -> usize {
        self.lacunae[self.cube_lacuna[q] as usize].center as usize
    }

    pub fn unbounded(&self) -> Option<usize> {
        self.unbounded
    }

    /// Point of `E` whose jet is used outside the window.
    pub fn far_center(&self) -> usize {
        self.far_center
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }
}

/// Splits the cover into lacunae and projects each onto `E`.
pub fn classify(
    cover: &WhitneyCover,
    nets: &DyadicNets,
    consts: &LacunaConstants,
) -> Result<Lacunae> {
    let pts = cover.points();
    let index = PointIndex::new(pts);
    let mut lacunae: Vec<Lacuna> = Vec::new();
    let mut cube_lacuna = vec![u32::MAX; cover.len()];
    let mut by_v: HashMap<Vec<u32>, usize> = HashMap::new();
    for (q, c) in cover.cubes().iter().enumerate() {
        let s10: Vec<u32> = index
            .in_cube(&c.cube.dilate(10.0))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        let s90: Vec<u32> = index
            .in_cube(&c.cube.dilate(90.0))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        if s10 == s90 {
            let id = *by_v.entry(s10.clone()).or_insert_with(|| {
                lacunae.push(Lacuna {
                    kind: LacunaKind::True,
                    cubes: Vec::new(),
                    v: s10,
                    q_min: q as u32,
                    q_max: Some(q as u32),
                    bounded: true,
                    center: u32::MAX,
                });
                lacunae.len() - 1
            });
            lacunae[id].cubes.push(q as u32);
            cube_lacuna[q] = id as u32;
        } else {
            lacunae.push(Lacuna {
                kind: LacunaKind::Elementary,
                cubes: vec![q as u32],
                v: s90,
                q_min: q as u32,
                q_max: Some(q as u32),
                bounded: true,
                center: u32::MAX,
            });
            cube_lacuna[q] = (lacunae.len() - 1) as u32;
        }
    }

    let mut warnings = Vec::new();
    let mut unbounded = None;
    for (id, l) in lacunae.iter_mut().enumerate() {
        let diam = |q: &u32| cover.cube(*q as usize).diam();
        l.q_min = *l
            .cubes
            .iter()
            .min_by(|a, b| diam(a).total_cmp(&diam(b)).then(a.cmp(b)))
            .expect("non-empty lacuna");
        l.q_max = l
            .cubes
            .iter()
            .max_by(|a, b| diam(a).total_cmp(&diam(b)).then(b.cmp(a)))
            .copied();
        let edge = l.cubes.iter().any(|&q| cover.meets_window_boundary(q as usize));
        if edge {
            if l.kind == LacunaKind::True && l.v.len() == pts.len() {
                l.bounded = false;
                l.q_max = None;
                unbounded = Some(id);
            } else {
                warnings.push(format!(
                    "lacuna {id} meets the window boundary with |V| = {} < |E|; treated as bounded",
                    l.v.len()
                ));
            }
        }
    }

    for l in lacunae.iter_mut() {
        l.center = project(l, cover, nets, consts)? as u32;
    }
    let all: Vec<u32> = (0..pts.len() as u32).collect();
    let far_center = match unbounded {
        Some(u) => lacunae[u].center as usize,
        None => c_point(&all, pts, nets)?,
    };

    let mut first: BTreeMap<(u32, u32), (u32, u32)> = BTreeMap::new();
    for k in 0..cover.len() {
        let lk = cube_lacuna[k];
        for &q in cover.touching_cubes(k) {
            let lq = cube_lacuna[q as usize];
            if lq == lk {
                continue;
            }
            let key = (lk.min(lq), lk.max(lq));
            let wit = if lk < lq { (k as u32, q) } else { (q, k as u32) };
            first.entry(key).or_insert(wit);
        }
    }
    let contacts = first
        .into_iter()
        .map(|((a, b), (qa, qb))| Contact { a, b, qa, qb })
        .collect();

    Ok(Lacunae {
        consts: *consts,
        lacunae,
        cube_lacuna,
        unbounded,
        contacts,
        far_center,
        warnings,
    })
}

/// `Pr(L)`.
fn project(
    l: &Lacuna,
    cover: &WhitneyCover,
    nets: &DyadicNets,
    consts: &LacunaConstants,
) -> Result<usize> {
    let pts = cover.points();
    if l.v.len() == 1 {
        return Ok(l.v[0] as usize);
    }
    let c = c_point(&l.v, pts, nets)?;
    if l.kind == LacunaKind::True && l.bounded {
        let dv = diameter_pair(&l.v, pts).2;
        let qmax = cover.cube(l.q_max.expect("bounded lacuna") as usize).diam();
        if qmax > consts.sigma * dv {
            let j = ceil_log2(qmax / consts.sigma);
            let members: Vec<u32> = l
                .v
                .iter()
                .copied()
                .filter(|&i| nets.contains(i as usize, j))
                .collect();
            if members.len() != 1 {
                return Err(Error::Invariant(format!(
                    "|V ∩ E_{j}| = {} for a lacuna with |V| = {}",
                    members.len(),
                    l.v.len()
                )));
            }
            let d = members[0] as usize;
            return Ok(if nets.contains(d, j + consts.k) { c } else { d });
        }
    }
    Ok(c)
}

/// The point `C_L` built from the diameter pair of `V` and the nets.
fn c_point(v: &[u32], pts: &[Point], nets: &DyadicNets) -> Result<usize> {
    if v.len() == 1 {
        return Ok(v[0] as usize);
    }
    let (a, b, dv) = diameter_pair(v, pts);
    // 2^i < diam V ≤ 2^{i+1}
    let i = ceil_log2(dv) - 1;
    let mut near = [0usize; 2];
    for (slot, &x) in near.iter_mut().zip(&[a, b]) {
        let y = nets.nearest(&pts[x], i - 2);
        if y == usize::MAX || pts[x].dist(&pts[y]) > pow2(i - 1) {
            return Err(Error::Invariant(format!(
                "no net point of level {} within 2^{} of point {x}",
                i - 2,
                i - 1
            )));
        }
        *slot = y;
    }
    near.into_iter()
        .find(|&y| !nets.contains(y, i + 2))
        .ok_or_else(|| {
            Error::Invariant(format!(
                "both net points of a diameter pair survive to level {}",
                i + 2
            ))
        })
}

/// First lexicographic pair realising `diam V`, and the diameter.
fn diameter_pair(v: &[u32], pts: &[Point]) -> (usize, usize, f64) {
    let mut order: Vec<usize> = v.iter().map(|&i| i as usize).collect();
    order.sort_by(|&a, &b| pts[a].lex_cmp(&pts[b]));
    let mut best = (order[0], order[0], -1.0);
    for (s, &x) in order.iter().enumerate() {
        for &y in &order[s + 1..] {
            let d = pts[x].dist(&pts[y]);
            if d > best.2 {
                best = (x, y, d);
            }
        }
    }
    best
}

/// Measured properties of a lacuna decomposition.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LacunaReport {
    pub lacunae: usize,
    pub true_lacunae: usize,
    pub elementary_lacunae: usize,
    /// Points of `E` with no lacuna `V = {x}`, `Pr = x`.
    pub missing_singletons: usize,
    /// Cubes with `Pr(L) ∉ 180 Q`.
    pub containment_violations: usize,
    /// Touching cubes with distinct centers where
    /// `diam Q + diam Q' > γ̃ ‖Pr L − Pr L'‖`.
    pub separation_violations: usize,
    /// Largest `(diam Q + diam Q') / ‖Pr L − Pr L'‖` over such pairs.
    pub separation_ratio: f64,
    /// Contacting pairs of true lacunae.
    pub true_true_contacts: usize,
    /// Bounded true lacunae with `40 diam Q_max > dist(V, E \ V)`.
    pub isolation_violations: usize,
    /// Elementary lacunae with `diam Q > 2 diam V`.
    pub elementary_size_violations: usize,
    pub max_fiber: usize,
    pub max_contacts: usize,
}

impl LacunaReport {
    /// Structural checks only; fiber and contact counts are measurements.
    pub fn is_clean(&self) -> bool {
        self.missing_singletons == 0
            && self.containment_violations == 0
            && self.separation_violations == 0
            && self.true_true_contacts == 0
            && self.isolation_violations == 0
            && self.elementary_size_violations == 0
    }
}

/// Checks the projector and the structural properties of the lacunae.
pub fn check(cover: &WhitneyCover, lac: &Lacunae) -> LacunaReport {
    let pts = cover.points();
    let mut rep = LacunaReport {
        lacunae: lac.len(),
        ..Default::default()
    };
    let mut fiber = vec![0usize; pts.len()];
    let mut singleton = vec![false; pts.len()];
    for l in lac.all() {
        match l.kind {
            LacunaKind::True => rep.true_lacunae += 1,
            LacunaKind::Elementary => rep.elementary_lacunae += 1,
        }
        fiber[l.center as usize] += 1;
        if l.v.len() == 1 && l.center == l.v[0] {
            singleton[l.v[0] as usize] = true;
        }
        let c = &pts[l.center as usize];
        for &q in &l.cubes {
            if !cover.cube(q as usize).cube.dilate(180.0).contains(c) {
                rep.containment_violations += 1;
            }
        }
        match l.kind {
            LacunaKind::True if l.bounded => {
                let qmax = cover.cube(l.q_max.expect("bounded") as usize).diam();
                let sep = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| l.v.binary_search(&(*i as u32)).is_err())
                    .flat_map(|(_, y)| l.v.iter().map(move |&x| pts[x as usize].dist(y)))
                    .fold(f64::INFINITY, f64::min);
                if 40.0 * qmax > sep {
                    rep.isolation_violations += 1;
                }
            }
            LacunaKind::Elementary => {
                let dv = diameter_pair(&l.v, pts).2.max(0.0);
                if cover.cube(l.cubes[0] as usize).diam() > 2.0 * dv {
                    rep.elementary_size_violations += 1;
                }
            }
            _ => {}
        }
    }
    rep.missing_singletons = singleton.iter().filter(|s| !**s).count();
    rep.max_fiber = fiber.into_iter().max().unwrap_or(0);

    let mut contacts = vec![0usize; lac.len()];
    for c in lac.contacts() {
        contacts[c.a as usize] += 1;
        contacts[c.b as usize] += 1;
        if lac.get(c.a as usize).kind == LacunaKind::True
            && lac.get(c.b as usize).kind == LacunaKind::True
        {
            rep.true_true_contacts += 1;
        }
    }
    rep.max_contacts = contacts.into_iter().max().unwrap_or(0);

    for k in 0..cover.len() {
        let ck = lac.cube_center(k);
        for &q in cover.touching_cubes(k) {
            let q = q as usize;
            if q <= k {
                continue;
            }
            let cq = lac.cube_center(q);
            if cq == ck {
                continue;
            }
            let gap = pts[ck].dist(&pts[cq]);
            let sum = cover.cube(k).diam() + cover.cube(q).diam();
            rep.separation_ratio = rep.separation_ratio.max(sum / gap);
            if sum > lac.consts.gamma_tilde * gap {
                rep.separation_violations += 1;
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitney::{whitney_decompose, CoverConfig};

    fn pts(c: &[&[f64]]) -> Vec<Point> {
        c.iter().map(|v| Point::new(v).unwrap()).collect()
    }

    #[test]
    fn default_constants() {
        let c = LacunaConstants::default();
        assert_eq!(c.sigma, 132.0);
        assert_eq!(c.k, 17);
        assert_eq!(c.gamma, 1.8e6);
    }

    #[test]
    fn singleton_has_one_unbounded_lacuna() {
        let e = pts(&[&[0.5, 0.5]]);
        let cover = whitney_decompose(&e, &CoverConfig::default()).unwrap();
        let nets = DyadicNets::build(&e).unwrap();
        let lac = classify(&cover, &nets, &LacunaConstants::default()).unwrap();
        assert_eq!(lac.len(), 1);
        assert_eq!(lac.unbounded(), Some(0));
        assert_eq!(lac.get(0).center, 0);
    }

    #[test]
    fn two_points_project_onto_themselves() {
        let e = pts(&[&[0.0], &[1.0]]);
        let cover = whitney_decompose(&e, &CoverConfig::default()).unwrap();
        let nets = DyadicNets::build(&e).unwrap();
        let lac = classify(&cover, &nets, &LacunaConstants::default()).unwrap();
        let rep = check(&cover, &lac);
        assert!(rep.is_clean(), "{rep:?}");
        assert_eq!(rep.missing_singletons, 0);
    }
}
