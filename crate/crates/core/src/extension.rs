//! The lacunary Whitney extension `F = Σ_Q φ_Q P_{a_Q}` and its truncated
//! variant `F_ε`.
//!
//! Evaluation uses the form `F = P_K + Σ_Q φ_Q (P_Q − P_K)` on the home
//! cube `K`, so only cubes whose polynomial differs from `P_K` contribute.

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist_point_set, DyadicNets, Point, PointIndex};
use crate::jets::{JetField, Poly};
use crate::lacunae::{classify, LacunaConstants, Lacunae};
use crate::multiindex::{table, MultiIndex, MAX_ORDER};
use crate::whitney::{whitney_decompose, CoverConfig, Location, PouTable, WhitneyCover};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanConfig {
    pub cover: CoverConfig,
    pub consts: LacunaConstants,
}

/// Cover, lacunae and centers for one point set. Independent of the jets.
#[derive(Clone, Debug)]
pub struct ExtensionPlan {
    pub cover: WhitneyCover,
    pub nets: DyadicNets,
    pub lacunae: Lacunae,
    index: PointIndex,
    /// For each collar cell, the single center governing it, if any.
    collar_center: Vec<Option<u32>>,
}

impl ExtensionPlan {
    pub fn build(points: &[Point], cfg: &PlanConfig) -> Result<ExtensionPlan> {
        let cover = whitney_decompose(points, &cfg.cover)?;
        Self::from_cover(cover, &cfg.consts)
    }

    pub fn from_cover(cover: WhitneyCover, consts: &LacunaConstants) -> Result<ExtensionPlan> {
        let nets = DyadicNets::build(cover.points())?;
        let lacunae = classify(&cover, &nets, consts)?;
        let index = PointIndex::new(cover.points());
        let collar_center = (0..cover.collar().len())
            .map(|c| {
                let near = index.in_cube(&cover.collar()[c].cube.dilate(100.0));
                if near.len() != 1 {
                    return None;
                }
                let a = near[0];
                cover
                    .collar_touching(c)
                    .iter()
                    .all(|&q| lacunae.cube_center(q as usize) == a)
                    .then_some(a as u32)
            })
            .collect();
        Ok(ExtensionPlan {
            cover,
            nets,
            lacunae,
            index,
            collar_center,
        })
    }

    pub fn dim(&self) -> usize {
        self.cover.dim()
    }

    pub fn points(&self) -> &[Point] {
        self.cover.points()
    }

    /// `a_Q`.
    pub fn center(&self, q: usize) -> usize {
        self.lacunae.cube_center(q)
    }

    /// Center whose jet is used outside the window.
    pub fn far_center(&self) -> usize {
        self.lacunae.far_center()
    }

    /// Center of a collar cell on which `F` is a single jet.
    pub fn collar_center(&self, c: usize) -> Option<usize> {
        self.collar_center[c].map(|a| a as usize)
    }

    pub(crate) fn find_point(&self, x: &Point) -> Option<usize> {
        self.index.find(x)
    }

    /// Checks `a_Q ∈ γ̃ Q` for every cube.
    pub fn check(&self) -> PlanReport {
        let g = self.lacunae.consts.gamma_tilde;
        let mut rep = PlanReport {
            cubes: self.cover.len(),
            ..Default::default()
        };
        for (q, c) in self.cover.cubes().iter().enumerate() {
            let a = &self.points()[self.center(q)];
            let ratio = c.cube.center.dist(a) / c.cube.r;
            rep.max_center_ratio = rep.max_center_ratio.max(ratio);
            if ratio > g {
                rep.center_violations += 1;
            }
        }
        rep.resolved_collar = self.collar_center.iter().filter(|c| c.is_some()).count();
        rep.unresolved_collar = self.collar_center.len() - rep.resolved_collar;
        rep
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PlanReport {
    pub cubes: usize,
    /// Cubes with `a_Q ∉ γ̃ Q`.
    pub center_violations: usize,
    /// Largest `‖a_Q − c_Q‖ / r_Q`.
    pub max_center_ratio: f64,
    pub resolved_collar: usize,
    pub unresolved_collar: usize,
}

/// Polynomial attached to a cube: a jet of `E`, or zero after truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Jet(usize),
    Zero,
}

/// `F` (or `F_ε`) for one jet field on a plan.
#[derive(Clone, Debug)]
pub struct Extension<'a> {
    plan: &'a ExtensionPlan,
    field: &'a JetField,
    /// Cubes with `diam Q ≥ δ` carry the zero polynomial.
    delta: Option<f64>,
    /// First jet equal to jet `i`; identical jets share one source.
    canon: Vec<usize>,
}

impl<'a> Extension<'a> {
    pub fn new(plan: &'a ExtensionPlan, field: &'a JetField) -> Result<Extension<'a>> {
        if field.points() != plan.points() {
            return Err(Error::Config("field and plan live on different sets".into()));
        }
        let mut first: FxHashMap<Vec<u64>, usize> = FxHashMap::default();
        let canon = field
            .jets()
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let key = j.base().coords().iter().chain(j.coeffs()).map(|v| v.to_bits()).collect();
                *first.entry(key).or_insert(i)
            })
            .collect();
        Ok(Extension {
            plan,
            field,
            delta: None,
            canon,
        })
    }

    /// `F_ε` with `δ = 10^{-5} ε`.
    pub fn truncated(plan: &'a ExtensionPlan, field: &'a JetField, eps: f64) -> Result<Extension<'a>> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("epsilon = {eps} must be positive")));
        }
        let mut e = Self::new(plan, field)?;
        e.delta = Some(1e-5 * eps);
        Ok(e)
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn plan(&self) -> &ExtensionPlan {
        self.plan
    }

    pub fn field(&self) -> &JetField {
        self.field
    }

    fn source(&self, q: usize) -> Source {
        match self.delta {
            Some(d) if self.plan.cover.cube(q).diam() >= d => Source::Zero,
            _ => Source::Jet(self.canon[self.plan.center(q)]),
        }
    }

    fn far_source(&self) -> Source {
        match self.delta {
            Some(d) if self.plan.cover.window().diam() >= d => Source::Zero,
            _ => Source::Jet(self.canon[self.plan.far_center()]),
        }
    }

    /// Whether the polynomial of cube `q` differs from that of cube `k`.
    pub fn differs(&self, q: usize, k: usize) -> bool {
        self.source(q) != self.source(k)
    }

    /// Whether cube `q` carries the zero polynomial.
    pub fn vanishes_on(&self, q: usize) -> bool {
        self.source(q) == Source::Zero
    }

    /// Whether `F` is zero outside the window.
    pub fn vanishes_outside(&self) -> bool {
        self.far_source() == Source::Zero
    }

    /// `D^α F(x)`, `|α| ≤ order`, for `x` in the closed cube `home`.
    pub fn derivs_in(&self, home: usize, x: &Point, order: usize) -> Vec<f64> {
        let cands = self.plan.cover.touching_cubes(home);
        Evaluator::new(self).derivs_in(home, cands, x, order).to_vec()
    }

    /// `D^α F(x)` for every `|α| ≤ order`, in the order of `table(n, order)`.
    pub fn derivs(&self, x: &Point, order: usize) -> Result<Vec<f64>> {
        let n = self.plan.dim();
        if x.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.dim(),
            });
        }
        if order > MAX_ORDER {
            return Err(Error::Config(format!("derivative order {order} above {MAX_ORDER}")));
        }
        if let Some(i) = self.plan.find_point(x) {
            // F_ε and F both equal P_x near x.
            return Ok(source_derivs(self.field, Source::Jet(i), x, order));
        }
        match self.plan.cover.locate(x) {
            Location::Outside => Ok(source_derivs(self.field, self.far_source(), x, order)),
            Location::Collar(c) => match self.plan.collar_center(c) {
                Some(a) => {
                    let src = match self.delta {
                        Some(d) if self.plan.cover.collar()[c].diam() >= d => Source::Zero,
                        _ => Source::Jet(a),
                    };
                    Ok(source_derivs(self.field, src, x, order))
                }
                None => Err(Error::Collar(
                    x.coords().to_vec(),
                    dist_point_set(x, self.plan.points()),
                )),
            },
            Location::Cube(k) => Ok(self.derivs_in(k, x, order)),
        }
    }

    /// `D^α F(x)`.
    pub fn eval(&self, x: &Point, a: &MultiIndex) -> Result<f64> {
        if a.dim() != self.plan.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.plan.dim(),
                got: a.dim(),
            });
        }
        let d = self.derivs(x, a.order())?;
        Ok(d[table(a.dim(), a.order()).index(a)])
    }
}

/// Buffers for repeated evaluation of one extension.
pub struct Evaluator<'e, 'a> {
    ext: &'e Extension<'a>,
    tab: PouTable,
    out: Vec<f64>,
    base: Vec<f64>,
    prod: Vec<f64>,
    diffs: Vec<(Source, Vec<f64>)>,
}

impl<'e, 'a> Evaluator<'e, 'a> {
    pub fn new(ext: &'e Extension<'a>) -> Evaluator<'e, 'a> {
        Evaluator {
            ext,
            tab: PouTable::default(),
            out: Vec::new(),
            base: Vec::new(),
            prod: Vec::new(),
            diffs: Vec::new(),
        }
    }

    /// `D^α F(x)`, `|α| ≤ order`, for `x` in the closed cube `home`.
    /// `candidates` must hold every cube whose `Q*` contains `x`.
    pub fn derivs_in(&mut self, home: usize, candidates: &[u32], x: &Point, order: usize) -> &[f64] {
        let ext = self.ext;
        self.tab.refill(&ext.plan.cover, home, candidates, x, order);
        let t = table(ext.plan.dim(), order);
        let w = t.len();
        let home_src = ext.source(home);
        self.base.resize(w, 0.0);
        fill_source(ext.field, home_src, x, &mut self.base);
        self.out.clear();
        self.out.extend_from_slice(&self.base);
        self.prod.resize(w, 0.0);
        let mut used = 0;
        for (j, &q) in self.tab.cubes.iter().enumerate() {
            let s = ext.source(q as usize);
            if s == home_src {
                continue;
            }
            let pos = match self.diffs[..used].iter().position(|(k, _)| *k == s) {
                Some(p) => p,
                None => {
                    if used == self.diffs.len() {
                        self.diffs.push((s, Vec::new()));
                    }
                    let (src, d) = &mut self.diffs[used];
                    *src = s;
                    d.resize(w, 0.0);
                    fill_source(ext.field, s, x, d);
                    for (v, b) in d.iter_mut().zip(&self.base) {
                        *v -= b;
                    }
                    used += 1;
                    used - 1
                }
            };
            t.product(self.tab.row(j), &self.diffs[pos].1, &mut self.prod);
            for (o, v) in self.out.iter_mut().zip(&self.prod) {
                *o += v;
            }
        }
        &self.out
    }
}

fn fill_source(field: &JetField, s: Source, x: &Point, out: &mut [f64]) {
    match s {
        Source::Jet(i) => poly_derivs(field.jet(i), x, out),
        Source::Zero => out.iter_mut().for_each(|v| *v = 0.0),
    }
}

fn source_derivs(field: &JetField, s: Source, x: &Point, order: usize) -> Vec<f64> {
    let t = table(field.dim(), order);
    let mut out = vec![0.0; t.len()];
    if let Source::Jet(i) = s {
        poly_derivs(field.jet(i), x, &mut out);
    }
    out
}

/// Fills `out` (laid out as `table(n, order)`) with `D^α P(x)`; entries
/// beyond degree `m − 1` are zero.
pub fn poly_derivs(p: &Poly, x: &Point, out: &mut [f64]) {
    let full = p.table().len();
    if out.len() >= full {
        p.derivs_at(x, &mut out[..full]);
        for v in &mut out[full..] {
            *v = 0.0;
        }
    } else {
        let mut tmp = vec![0.0; full];
        p.derivs_at(x, &mut tmp);
        out.copy_from_slice(&tmp[..out.len()]);
    }
}
