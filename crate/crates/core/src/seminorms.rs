//! Trace functionals: the sparse-family supremum, the sharp maximal
//! function, `Φ` and `Ψ` for `m = 1`, Sobolev norms of an extension by
//! quadrature, an oscillation sum and the parts of the `W^m_p` criterion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{Evaluator, Extension, ExtensionPlan};
use crate::geometry::{Cube, Point, MAX_DIM};
use crate::jets::JetField;
use crate::multiindex::table;
use crate::quadrature::{integrate_rn, RnIntegral, Rule};
use crate::sparse_graph::{build_graph, edge_term};
use crate::whitney::bump::STAR;
use crate::whitney::WhitneyCover;

/// Largest `|E|` accepted by the exhaustive family search.
pub const BRUTE_FORCE_MAX: usize = 8;

/// Quadrature settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadSpec {
    /// Gauss–Legendre points per axis and sub-box.
    pub order: usize,
    /// Pieces each bump transition band is split into per axis.
    pub band_splits: usize,
    /// A second order used to detect an under-resolved integral.
    pub check_order: Option<usize>,
    /// Largest accepted relative disagreement between the two orders.
    pub tolerance: f64,
    /// Values below this are treated as zero by the disagreement check.
    pub floor: f64,
}

impl QuadSpec {
    pub fn for_m(m: usize) -> QuadSpec {
        let order = (6 + 2 * m).max(4 * m + 2);
        QuadSpec {
            order,
            band_splits: 2,
            check_order: Some(order + 2),
            tolerance: 0.05,
            floor: 1e-8,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.band_splits == 0 {
            return Err(Error::Config("band_splits must be positive".into()));
        }
        if self.order < m + 1 || self.check_order.is_some_and(|c| c < m + 1) {
            return Err(Error::Config(format!(
                "quadrature order {} below m + 1 = {}",
                self.order,
                m + 1
            )));
        }
        Ok(())
    }
}

/// An `L_p`-type norm with its error bars.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormReport {
    pub p: f64,
    pub value: f64,
    /// Estimated contribution of unresolved collar cells, same units.
    pub collar_bound: f64,
    /// Value at the check order, if one was run.
    pub check_value: Option<f64>,
}

// ---------------------------------------------------------------------------
// Sparse families

/// A family of pairs with the value of its weighted sum.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparseFamily {
    pub pairs: Vec<(u32, u32)>,
    /// `(Σ weights)^{1/p}`.
    pub value: f64,
}

/// Smallest cube certifying the pair `{x, y}` for constant `γ`.
pub fn pair_certificate(x: &Point, y: &Point, gamma: f64) -> Cube {
    Cube {
        center: x.midpoint(y),
        r: x.dist(y) / (2.0 * gamma),
    }
}

/// Maximal `Σ w` over families of pairs whose minimal certificates are
/// pairwise disjoint. Returns the sum and the chosen pair indices.
fn best_family(certs: &[Cube], weights: &[f64]) -> (f64, Vec<usize>) {
    let k = certs.len();
    let mut order: Vec<usize> = (0..k).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let m = order.len();
    let mut conflict = vec![vec![false; m]; m];
    for a in 0..m {
        for b in a + 1..m {
            let c = certs[order[a]].intersects(&certs[order[b]]);
            conflict[a][b] = c;
            conflict[b][a] = c;
        }
    }
    // suffix[i] = Σ_{j ≥ i} w_j bounds what the rest can add.
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] + weights[order[i]];
    }
    struct Search<'a> {
        w: Vec<f64>,
        conflict: &'a [Vec<bool>],
        suffix: &'a [f64],
        best: f64,
        best_set: Vec<usize>,
        chosen: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, sum: f64) {
            if sum > self.best {
                self.best = sum;
                self.best_set = self.chosen.clone();
            }
            if i == self.w.len() || sum + self.suffix[i] <= self.best {
                return;
            }
            if self.chosen.iter().all(|&c| !self.conflict[c][i]) {
                self.chosen.push(i);
                self.go(i + 1, sum + self.w[i]);
                self.chosen.pop();
            }
            self.go(i + 1, sum);
        }
    }
    let mut s = Search {
        w: order.iter().map(|&i| weights[i]).collect(),
        conflict: &conflict,
        suffix: &suffix,
        best: 0.0,
        best_set: Vec::new(),
        chosen: Vec::new(),
    };
    s.go(0, 0.0);
    let mut set: Vec<usize> = s.best_set.iter().map(|&j| order[j]).collect();
    set.sort_unstable();
    (s.best, set)
}

/// Exhaustive family search with per-pair weights `w(x, y)`; pairs with
/// `‖x − y‖ > max_dist` are left out.
fn sparse_sup(
    points: &[Point],
    p: f64,
    gamma: f64,
    max_dist: f64,
    mut w: impl FnMut(usize, usize) -> f64,
) -> Result<SparseFamily> {
    if points.len() > BRUTE_FORCE_MAX {
        return Err(Error::Capacity(format!(
            "exhaustive search limited to {BRUTE_FORCE_MAX} points, got {}",
            points.len()
        )));
    }
    if !(gamma >= 1.0) {
        return Err(Error::Config(format!("gamma = {gamma} must be at least 1")));
    }
    let mut pairs = Vec::new();
    let mut certs = Vec::new();
    let mut weights = Vec::new();
    for x in 0..points.len() {
        for y in x + 1..points.len() {
            if points[x].dist(&points[y]) > max_dist {
                continue;
            }
            pairs.push((x as u32, y as u32));
            certs.push(pair_certificate(&points[x], &points[y], gamma));
            weights.push(w(x, y));
        }
    }
    let (sum, set) = best_family(&certs, &weights);
    Ok(SparseFamily {
        pairs: set.into_iter().map(|i| pairs[i]).collect(),
        value: sum.powf(1.0 / p),
    })
}

fn check_p(p: f64, n: usize) -> Result<()> {
    if !(p > n as f64) || !p.is_finite() {
        return Err(Error::Config(format!("p = {p} must be finite and exceed n = {n}")));
    }
    Ok(())
}

/// Supremum of the jet-difference sum over certified `γ`-sparse families.
pub fn trace_norm_bruteforce(field: &JetField, p: f64, gamma: f64) -> Result<SparseFamily> {
    check_p(p, field.dim())?;
    sparse_sup(field.points(), p, gamma, f64::INFINITY, |x, y| {
        edge_term(field, x, y, p)
    })
}

/// `Φ_{p,E}(f)` over certified `γ`-sparse families.
pub fn phi_m1(points: &[Point], f: &[f64], p: f64, gamma: f64) -> Result<SparseFamily> {
    check_values(points, f)?;
    check_p(p, points[0].dim())?;
    let n = points[0].dim() as f64;
    sparse_sup(points, p, gamma, f64::INFINITY, |x, y| {
        (f[x] - f[y]).abs().powf(p) / points[x].dist(&points[y]).powf(p - n)
    })
}

fn check_values(points: &[Point], f: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if f.len() != points.len() {
        return Err(Error::Config(format!(
            "{} values for {} points",
            f.len(),
            points.len()
        )));
    }
    if let Some(v) = f.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(vec![*v]));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Maximal functions

/// `P^♯(x) = sup_{y ≠ z} |P_y(x) − P_z(x)| / (‖x − y‖^m + ‖x − z‖^m)`.
pub fn sharp_max_eval(field: &JetField, x: &Point) -> f64 {
    let m = field.m as i32;
    let vals: Vec<f64> = field.jets().iter().map(|j| j.eval(x)).collect();
    let dist: Vec<f64> = field.points().iter().map(|y| x.dist(y).powi(m)).collect();
    pair_sup(&vals, &dist, 1.0)
}

/// `sup_{y ≠ z} |v_y − v_z|^s / (d_y + d_z)`.
fn pair_sup(vals: &[f64], dist: &[f64], s: f64) -> f64 {
    let mut best: f64 = 0.0;
    for y in 0..vals.len() {
        for z in y + 1..vals.len() {
            let num = (vals[y] - vals[z]).abs();
            if num == 0.0 {
                continue;
            }
            let num = if s == 1.0 { num } else { num.powf(s) };
            best = best.max(num / (dist[y] + dist[z]));
        }
    }
    best
}

/// An integral over `R^n` turned into an `L_p` norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RnNorm {
    pub p: f64,
    pub value: f64,
    pub integral: RnIntegral,
}

impl RnNorm {
    fn from(p: f64, integral: RnIntegral) -> RnNorm {
        RnNorm {
            p,
            value: integral.total().max(0.0).powf(1.0 / p),
            integral,
        }
    }
}

/// `‖P^♯‖_{L_p(R^n)}`, integrated cell by cell over the cover plus tail.
pub fn sharp_max_lp(field: &JetField, cover: &WhitneyCover, order: usize) -> Result<RnNorm> {
    let p = field.p;
    check_p(p, field.dim())?;
    let rule = Rule::new(order)?;
    let it = integrate_rn(cover, &rule, |x| sharp_max_eval(field, x).powf(p));
    Ok(RnNorm::from(p, it))
}

/// `Ψ_{p,E}(f)`.
pub fn psi_m1(points: &[Point], f: &[f64], p: f64, cover: &WhitneyCover, order: usize) -> Result<RnNorm> {
    check_values(points, f)?;
    check_p(p, points[0].dim())?;
    let rule = Rule::new(order)?;
    let mut dist = vec![0.0; points.len()];
    let it = integrate_rn(cover, &rule, |x| {
        for (d, y) in dist.iter_mut().zip(points) {
            *d = x.dist(y).powf(p);
        }
        pair_sup(f, &dist, p)
    });
    Ok(RnNorm::from(p, it))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiPsi {
    pub phi: f64,
    /// Whether `Φ` came from the exhaustive search; otherwise it is the
    /// graph-edge lower bound.
    pub phi_exhaustive: bool,
    pub psi: RnNorm,
}

/// `Φ` and `Ψ` for a function on `E`.
pub fn phi_psi_m1(plan: &ExtensionPlan, f: &[f64], p: f64, gamma: f64, order: usize) -> Result<PhiPsi> {
    let points = plan.points();
    let psi = psi_m1(points, f, p, &plan.cover, order)?;
    if points.len() <= BRUTE_FORCE_MAX {
        return Ok(PhiPsi {
            phi: phi_m1(points, f, p, gamma)?.value,
            phi_exhaustive: true,
            psi,
        });
    }
    let g = build_graph(&plan.cover, &plan.lacunae);
    let n = points[0].dim() as f64;
    let s: f64 = g
        .edges
        .iter()
        .map(|e| {
            let (x, y) = (e.u as usize, e.v as usize);
            (f[x] - f[y]).abs().powf(p) / points[x].dist(&points[y]).powf(p - n)
        })
        .sum();
    Ok(PhiPsi {
        phi: s.powf(1.0 / p),
        phi_exhaustive: false,
        psi,
    })
}

// ---------------------------------------------------------------------------
// Norms of an extension

#[derive(Clone, Copy, PartialEq)]
enum Integrand {
    /// `Σ_{|α| = m} |D^α F|^p`.
    TopDerivatives,
    /// `|F|^p`.
    Values,
}

/// A piece of a Whitney cube on which every bump is either constant or in
/// a single transition band along each axis.
struct SubBox {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    /// Touching cubes (other than the home cube) whose `Q*` meets the box.
    meets: Vec<u32>,
    /// Axes along which some bump of `meets` is in transition.
    band: [bool; MAX_DIM],
}

impl SubBox {
    fn in_transition(&self) -> bool {
        self.band.iter().any(|&b| b)
    }

    /// Calls `f` on every tensor node, with band axes split into `splits`
    /// pieces since the transitions are steep.
    fn for_each_node(&self, n: usize, rule: &Rule, splits: usize, mut f: impl FnMut(&Point, f64)) {
        let parts: Vec<usize> = (0..n).map(|i| if self.band[i] { splits } else { 1 }).collect();
        let total: usize = parts.iter().product();
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for piece in 0..total {
            let mut rest = piece;
            for i in 0..n {
                let j = rest % parts[i];
                rest /= parts[i];
                let h = (self.hi[i] - self.lo[i]) / parts[i] as f64;
                lo[i] = self.lo[i] + j as f64 * h;
                hi[i] = if j + 1 == parts[i] { self.hi[i] } else { lo[i] + h };
            }
            rule.for_each_node(n, &lo[..n], &hi[..n], &mut f);
        }
    }
}

/// Splits cube `k` along the plateau and support edges of the bumps of
/// its touching cubes.
fn sub_boxes(cover: &WhitneyCover, k: usize) -> Vec<SubBox> {
    let n = cover.dim();
    let kc = &cover.cube(k).cube;
    let tol = 1e-12 * kc.r;
    let others: Vec<u32> = cover
        .touching_cubes(k)
        .iter()
        .copied()
        .filter(|&q| q as usize != k)
        .collect();
    let mut cuts: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (kc.lower(i), kc.upper(i));
        let mut v = vec![lo, hi];
        for &q in &others {
            let c = &cover.cube(q as usize).cube;
            for t in [-STAR, -1.0, 1.0, STAR] {
                let b = c.center[i] + t * c.r;
                if b > lo + tol && b < hi - tol {
                    v.push(b);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= tol);
        cuts.push(v);
    }
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for b in 0..total {
        let mut rest = b;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for i in 0..n {
            let j = rest % counts[i];
            rest /= counts[i];
            lo[i] = cuts[i][j];
            hi[i] = cuts[i][j + 1];
        }
        let meets: Vec<u32> = others
            .iter()
            .copied()
            .filter(|&q| {
                let c = &cover.cube(q as usize).cube;
                (0..n).all(|i| {
                    c.center[i] - STAR * c.r < hi[i] - tol && c.center[i] + STAR * c.r > lo[i] + tol
                })
            })
            .collect();
        let mut band = [false; MAX_DIM];
        for (i, flag) in band.iter_mut().enumerate().take(n) {
            *flag = meets.iter().any(|&q| {
                let c = &cover.cube(q as usize).cube;
                lo[i] < c.center[i] - c.r - tol || hi[i] > c.center[i] + c.r + tol
            });
        }
        out.push(SubBox { lo, hi, meets, band });
    }
    out
}

/// `Σ_cells ∫ integrand` per exponent, plus collar estimates.
struct CoverIntegral {
    sums: Vec<f64>,
    collar: Vec<f64>,
}

fn integrate_extension(
    ext: &Extension<'_>,
    rule: &Rule,
    quad_splits: usize,
    ps: &[f64],
    what: Integrand,
) -> Result<CoverIntegral> {
    let plan = ext.plan();
    let cover = &plan.cover;
    let n = cover.dim();
    let m = ext.field().m;
    let (order, first) = match what {
        Integrand::TopDerivatives => (m, table(n, m).count_upto(m - 1)),
        Integrand::Values => (0, 0),
    };
    let count = table(n, order).len() - first;
    let mut sums = vec![0.0; ps.len()];
    let mut cube_max = vec![0.0f64; cover.len()];
    let mut ev = Evaluator::new(ext);
    let mut cands: Vec<u32> = Vec::new();
    for k in 0..cover.len() {
        let differing = cover.touching_cubes(k).iter().any(|&q| ext.differs(q as usize, k));
        let skip = match what {
            Integrand::TopDerivatives => !differing,
            Integrand::Values => !differing && ext.vanishes_on(k),
        };
        if skip {
            continue;
        }
        for sb in sub_boxes(cover, k) {
            let live = match what {
                Integrand::TopDerivatives => {
                    sb.in_transition() && sb.meets.iter().any(|&q| ext.differs(q as usize, k))
                }
                Integrand::Values => {
                    !ext.vanishes_on(k) || sb.meets.iter().any(|&q| !ext.vanishes_on(q as usize))
                }
            };
            if !live {
                continue;
            }
            cands.clear();
            cands.extend_from_slice(&sb.meets);
            cands.push(k as u32);
            sb.for_each_node(n, rule, quad_splits, |x, w| {
                let d = ev.derivs_in(k, &cands, x, order);
                let top = &d[first..];
                let mx = top.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                cube_max[k] = cube_max[k].max(mx);
                for (s, &p) in sums.iter_mut().zip(ps) {
                    *s += w * top.iter().map(|v| v.abs().powf(p)).sum::<f64>();
                }
            });
        }
    }
    let mut collar = vec![0.0; ps.len()];
    for (c, cell) in cover.collar().iter().enumerate() {
        match (plan.collar_center(c), what) {
            (Some(_), Integrand::TopDerivatives) => {}
            (Some(_), Integrand::Values) => {
                let lo: Vec<f64> = (0..n).map(|i| cell.cube.lower(i)).collect();
                let hi: Vec<f64> = (0..n).map(|i| cell.cube.upper(i)).collect();
                let mut err = None;
                rule.for_each_node(n, &lo, &hi, |x, w| match ext.derivs(x, 0) {
                    Ok(d) => {
                        for (s, &p) in sums.iter_mut().zip(ps) {
                            *s += w * d[0].abs().powf(p);
                        }
                    }
                    Err(e) => err = Some(e),
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
            (None, _) => {
                let mx = cover
                    .collar_touching(c)
                    .iter()
                    .map(|&q| cube_max[q as usize])
                    .fold(0.0, f64::max);
                for (s, &p) in collar.iter_mut().zip(ps) {
                    *s += cell.cube.volume() * count as f64 * mx.powf(p);
                }
            }
        }
    }
    if what == Integrand::Values && !ext.vanishes_outside() {
        return Err(Error::Config(
            "the extension is a nonzero polynomial outside the window, so it is not in L_p".into(),
        ));
    }
    Ok(CoverIntegral { sums, collar })
}

fn extension_norms(ext: &Extension<'_>, ps: &[f64], quad: &QuadSpec, what: Integrand) -> Result<Vec<NormReport>> {
    for &p in ps {
        check_p(p, ext.plan().dim())?;
    }
    quad.validate(ext.field().m)?;
    let main = integrate_extension(ext, &Rule::new(quad.order)?, quad.band_splits, ps, what)?;
    let check = match quad.check_order {
        Some(o) => Some(integrate_extension(ext, &Rule::new(o)?, quad.band_splits, ps, what)?),
        None => None,
    };
    let mut out = Vec::with_capacity(ps.len());
    for (j, &p) in ps.iter().enumerate() {
        let value = main.sums[j].max(0.0).powf(1.0 / p);
        let check_value = check.as_ref().map(|c| c.sums[j].max(0.0).powf(1.0 / p));
        if let Some(cv) = check_value {
            let big = value.max(cv);
            if big > quad.floor && (value - cv).abs() > quad.tolerance * big {
                return Err(Error::Quadrature(format!(
                    "orders {} and {} disagree: {value} vs {cv}",
                    quad.order,
                    quad.check_order.unwrap_or(0)
                )));
            }
        }
        out.push(NormReport {
            p,
            value,
            collar_bound: main.collar[j].powf(1.0 / p),
            check_value,
        });
    }
    Ok(out)
}

/// `(Σ_{|α| = m} ∫ |D^α F|^p)^{1/p}` for each exponent in `ps`. Outside the
/// window `F` is a polynomial of degree `< m`, so only the window counts.
pub fn sobolev_seminorms(ext: &Extension<'_>, ps: &[f64], quad: &QuadSpec) -> Result<Vec<NormReport>> {
    extension_norms(ext, ps, quad, Integrand::TopDerivatives)
}

pub fn sobolev_seminorm(ext: &Extension<'_>, p: f64, quad: &QuadSpec) -> Result<NormReport> {
    Ok(sobolev_seminorms(ext, &[p], quad)?[0])
}

/// `‖F‖_{L_p}`; requires `F` to vanish outside the window.
pub fn extension_lp_norm(ext: &Extension<'_>, p: f64, quad: &QuadSpec) -> Result<NormReport> {
    Ok(extension_norms(ext, &[p], quad, Integrand::Values)?[0])
}

// ---------------------------------------------------------------------------
// Oscillation sums

/// `Σ |G(x_i) − G(c_i)|^p / (diam Q_i)^{p − n}` over equal cubes with
/// pairwise disjoint interiors.
pub fn oscillation_sum(
    g: impl Fn(&Point) -> Result<f64>,
    cubes: &[Cube],
    points: &[Point],
    p: f64,
) -> Result<f64> {
    if cubes.len() != points.len() {
        return Err(Error::Config(format!(
            "{} cubes but {} points",
            cubes.len(),
            points.len()
        )));
    }
    let Some(first) = cubes.first() else {
        return Ok(0.0);
    };
    let n = first.dim();
    for (i, q) in cubes.iter().enumerate() {
        if q.dim() != n || points[i].dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.dim().min(points[i].dim()),
            });
        }
        if q.r != first.r {
            return Err(Error::Config("cubes must be equal".into()));
        }
        if !q.contains(&points[i]) {
            return Err(Error::Config(format!("point {i} lies outside its cube")));
        }
        for other in &cubes[..i] {
            if (0..n).all(|a| q.lower(a) < other.upper(a) && other.lower(a) < q.upper(a)) {
                return Err(Error::Config("cubes must have disjoint interiors".into()));
            }
        }
    }
    let mut s = 0.0;
    for (q, x) in cubes.iter().zip(points) {
        s += (g(x)? - g(&q.center)?).abs().powf(p) / q.diam().powf(p - n as f64);
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// The W^m_p criterion

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WmpParts {
    /// `(Σ_x w_x |P_x(x)|^p)^{1/p}` with `w_x = min{ε, sep(x)/2}^n`.
    pub point_values: f64,
    /// Sparse-family sum restricted to pairs with `‖x − y‖ ≤ ε`.
    pub n_flat: f64,
    /// Whether `n_flat` came from the exhaustive search.
    pub n_flat_exhaustive: bool,
    /// `(Σ_L Σ_α min{ε, diam L}^{|α|p+n} |D^α P_{s_L}(s_L)|^p)^{1/p}`.
    pub lacuna_sum: f64,
    pub total: f64,
}

/// Parts of the discrete `W^m_p` criterion.
pub fn wmp_norm_parts(plan: &ExtensionPlan, field: &JetField, eps: f64, gamma: f64) -> Result<WmpParts> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Config(format!("epsilon = {eps} must be positive")));
    }
    if field.points() != plan.points() {
        return Err(Error::Config("field and plan live on different sets".into()));
    }
    let p = field.p;
    let n = field.dim();
    let pts = field.points();
    let mut s = 0.0;
    for (i, x) in pts.iter().enumerate() {
        let sep = pts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, y)| x.dist(y))
            .fold(f64::INFINITY, f64::min);
        let w = eps.min(0.5 * sep).powi(n as i32);
        s += w * field.point_jet(i)[0].abs().powf(p);
    }
    let point_values = s.powf(1.0 / p);

    let (n_flat, n_flat_exhaustive) = if pts.len() <= BRUTE_FORCE_MAX {
        let fam = sparse_sup(pts, p, gamma, eps, |x, y| edge_term(field, x, y, p))?;
        (fam.value, true)
    } else {
        let g = build_graph(&plan.cover, &plan.lacunae);
        let s: f64 = g
            .edges
            .iter()
            .filter(|e| pts[e.u as usize].dist(&pts[e.v as usize]) <= eps)
            .map(|e| edge_term(field, e.u as usize, e.v as usize, p))
            .sum();
        (s.powf(1.0 / p), false)
    };

    let t = table(n, field.m - 1);
    let mut s = 0.0;
    for l in plan.lacunae.all() {
        let diam = l
            .cubes
            .iter()
            .map(|&q| plan.cover.cube(q as usize).diam())
            .fold(0.0, f64::max);
        let r = eps.min(diam);
        let jet = field.point_jet(l.center as usize);
        for (k, a) in t.list().iter().enumerate() {
            let e = (a.order() as f64) * p + n as f64;
            s += r.powf(e) * jet[k].abs().powf(p);
        }
    }
    let lacuna_sum = s.powf(1.0 / p);
    Ok(WmpParts {
        point_values,
        n_flat,
        n_flat_exhaustive,
        lacuna_sum,
        total: point_values + n_flat + lacuna_sum,
    })
}

/// Refinement depth resolving `δ = 10^{-5} ε` near `E`.
pub fn wmp_depth(window: &Cube, eps: f64) -> u32 {
    let delta = 1e-5 * eps;
    crate::geometry::ceil_log2(window.diam() * 64.0 / delta).clamp(1, 60) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::PlanConfig;
    use crate::jets::Poly;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::new(&[x]).unwrap()).collect()
    }

    #[test]
    fn two_point_phi_and_psi() {
        let e = line(&[0.0, 1.0]);
        let plan = ExtensionPlan::build(&e, &PlanConfig::default()).unwrap();
        let r = phi_psi_m1(&plan, &[0.0, 1.0], 2.0, 1.0, 10).unwrap();
        assert_eq!(r.phi, 1.0);
        // ∫ dx / (x² + (x − 1)²) = π.
        assert!((r.psi.integral.total() - std::f64::consts::PI).abs() < 1e-6, "{:?}", r.psi);
    }

    #[test]
    fn sharp_max_two_points() {
        let e = line(&[0.0, 1.0]);
        let jets = vec![
            Poly::new(e[0], 1, vec![0.0]).unwrap(),
            Poly::new(e[1], 1, vec![1.0]).unwrap(),
        ];
        let f = JetField::new(e, jets, 1, 2.0).unwrap();
        for x in [-3.0, 0.25, 0.5, 2.0] {
            let v = sharp_max_eval(&f, &Point::new(&[x]).unwrap());
            assert!((v - 1.0 / (x.abs() + (x - 1.0).abs())).abs() < 1e-15);
        }
    }

    #[test]
    fn family_search_respects_conflicts() {
        // Three collinear points with γ = 1: the two short pairs share a
        // point, so only one pair can be chosen at a time.
        let e = line(&[0.0, 1.0, 2.0]);
        let f = phi_m1(&e, &[0.0, 1.0, 0.0], 2.0, 1.0).unwrap();
        assert_eq!(f.pairs.len(), 1);
        assert_eq!(f.value, 1.0);
    }

    #[test]
    fn oscillation_of_a_linear_function() {
        let cubes: Vec<Cube> = (0..4)
            .map(|i| Cube::new(Point::new(&[i as f64 + 0.5]).unwrap(), 0.5).unwrap())
            .collect();
        let xs: Vec<Point> = cubes
            .iter()
            .enumerate()
            .map(|(i, c)| Point::new(&[c.center[0] + if i % 2 == 0 { 0.5 } else { -0.5 }]).unwrap())
            .collect();
        let s = oscillation_sum(|x| Ok(3.0 * x[0]), &cubes, &xs, 2.0).unwrap();
        assert!((s - 4.0 * 9.0 / 4.0).abs() < 1e-12);
    }
}
