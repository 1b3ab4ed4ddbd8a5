//! Cube-average pre-metrics `ρ_q(h)`, their geodesic regularization
//! `d_q(h)`, the profiles `v_x`, `ω_x`, and McShane-type extensions.
//!
//! The density `h` is piecewise constant on a uniform grid over a cube and
//! zero outside it, so every cube integral of `h^q` is an exact finite sum.
//! The supremum over all cubes is replaced by an enumerated family, which
//! makes `ρ̂_q` a lower bound for `ρ_q`.

use std::collections::BinaryHeap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Point, MAX_DIM};
use crate::sparse_graph::HeapItem;

/// Piecewise-constant `h ≥ 0` on a `res^n` grid over `domain`.
#[derive(Clone, Debug)]
pub struct DensityField {
    domain: Cube,
    res: usize,
    q: f64,
    values: Vec<f64>,
    cell: f64,
    // ∫ h^q over [lo, v] for every grid vertex v.
    prefix: Vec<f64>,
}

/// On-disk density: cell values with axis 0 varying fastest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub center: Vec<f64>,
    pub half_side: f64,
    pub resolution: usize,
    pub q: f64,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(domain: Cube, res: usize, q: f64, values: Vec<f64>) -> Result<DensityField> {
        let n = domain.dim();
        if res == 0 || !(domain.r > 0.0) {
            return Err(Error::Config("density grid needs res ≥ 1 and a nondegenerate box".into()));
        }
        if !(q >= n as f64) || !q.is_finite() {
            return Err(Error::Config(format!("averaging exponent q = {q} must satisfy q ≥ n = {n}")));
        }
        let cells = res
            .checked_pow(n as u32)
            .filter(|&c| c <= 1 << 26)
            .ok_or_else(|| Error::Capacity(format!("{res}^{n} density cells")))?;
        if values.len() != cells {
            return Err(Error::Parse(format!("expected {cells} density values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("density value {v} is not a finite nonnegative number")));
        }
        let cell = 2.0 * domain.r / res as f64;
        let vol = cell.powi(n as i32);
        let side = res + 1;
        let mut prefix = vec![0.0; side.pow(n as u32)];
        for (c, &v) in values.iter().enumerate() {
            // vertex (c_0 + 1, .., c_{n-1} + 1)
            let mut idx = 0;
            let mut stride = 1;
            let mut rest = c;
            for _ in 0..n {
                idx += (rest % res + 1) * stride;
                rest /= res;
                stride *= side;
            }
            prefix[idx] = v.powf(q) * vol;
        }
        let mut stride = 1;
        for _ in 0..n {
            for idx in 0..prefix.len() {
                if (idx / stride) % side > 0 {
                    prefix[idx] += prefix[idx - stride];
                }
            }
            stride *= side;
        }
        Ok(DensityField {
            domain,
            res,
            q,
            values,
            cell,
            prefix,
        })
    }

    pub fn constant(domain: Cube, res: usize, q: f64, c: f64) -> Result<DensityField> {
        let cells = res.pow(domain.dim() as u32);
        DensityField::new(domain, res, q, vec![c; cells])
    }

    /// Samples `g` at cell centers.
    pub fn from_fn(domain: Cube, res: usize, q: f64, mut g: impl FnMut(&Point) -> f64) -> Result<DensityField> {
        let n = domain.dim();
        let cell = 2.0 * domain.r / res as f64;
        let mut values = Vec::with_capacity(res.pow(n as u32));
        let mut x = Point::zero(n);
        for c in 0..res.pow(n as u32) {
            let mut rest = c;
            for i in 0..n {
                x.coords_mut()[i] = domain.lower(i) + ((rest % res) as f64 + 0.5) * cell;
                rest /= res;
            }
            values.push(g(&x));
        }
        DensityField::new(domain, res, q, values)
    }

    /// The same function on a grid `factor` times finer.
    pub fn refine(&self, factor: usize) -> Result<DensityField> {
        let n = self.dim();
        let fine = self.res * factor;
        let mut values = Vec::with_capacity(fine.pow(n as u32));
        for c in 0..fine.pow(n as u32) {
            let mut rest = c;
            let mut idx = 0;
            let mut stride = 1;
            for _ in 0..n {
                idx += (rest % fine) / factor * stride;
                rest /= fine;
                stride *= self.res;
            }
            values.push(self.values[idx]);
        }
        DensityField::new(self.domain, fine, self.q, values)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Cube {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `h(x)`; zero outside the box. Cells are half-open except at the top.
    pub fn value_at(&self, x: &Point) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let mut idx = 0;
        let mut stride = 1;
        for i in 0..self.dim() {
            let t = ((x[i] - self.domain.lower(i)) / self.cell).floor() as usize;
            idx += t.min(self.res - 1) * stride;
            stride *= self.res;
        }
        self.values[idx]
    }

    pub fn contains(&self, x: &Point) -> bool {
        let tol = 1e-12 * self.domain.r;
        (0..self.dim()).all(|i| x[i] >= self.domain.lower(i) - tol && x[i] <= self.domain.upper(i) + tol)
    }

    // ∫ h^q over [lo, t] in cell coordinates, multilinear inside a cell.
    fn cumulative(&self, t: &[f64]) -> f64 {
        let n = self.dim();
        let side = self.res + 1;
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for i in 0..n {
            let u = t[i].clamp(0.0, self.res as f64);
            let k = (u.floor() as usize).min(self.res - 1);
            base[i] = k;
            frac[i] = u - k as f64;
        }
        let mut s = 0.0;
        for corner in 0..1usize << n {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for i in 0..n {
                let up = corner >> i & 1 == 1;
                w *= if up { frac[i] } else { 1.0 - frac[i] };
                idx += (base[i] + up as usize) * stride;
                stride *= side;
            }
            if w != 0.0 {
                s += w * self.prefix[idx];
            }
        }
        s
    }

    /// `∫_B h^q` over the box `B = [lo, hi]`.
    pub fn integral_q(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let n = self.dim();
        let mut a = [0.0; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        for i in 0..n {
            a[i] = (lo[i] - self.domain.lower(i)) / self.cell;
            b[i] = (hi[i] - self.domain.lower(i)) / self.cell;
            if b[i] <= 0.0 || a[i] >= self.res as f64 || b[i] <= a[i] {
                return 0.0;
            }
        }
        let mut s = 0.0;
        let mut t = [0.0; MAX_DIM];
        for corner in 0..1usize << n {
            let mut sign = 1.0;
            for i in 0..n {
                if corner >> i & 1 == 1 {
                    t[i] = b[i];
                } else {
                    t[i] = a[i];
                    sign = -sign;
                }
            }
            s += sign * self.cumulative(&t[..n]);
        }
        s.max(0.0)
    }

    /// `(|Q|^{-1} ∫_Q h^q)^{1/q}`.
    pub fn cube_mean(&self, c: &Cube) -> f64 {
        if c.r <= 0.0 {
            return 0.0;
        }
        let n = self.dim();
        let lo: Vec<f64> = (0..n).map(|i| c.lower(i)).collect();
        let hi: Vec<f64> = (0..n).map(|i| c.upper(i)).collect();
        (self.integral_q(&lo, &hi) / c.volume()).powf(1.0 / self.q)
    }

    // A cube of half side `r ≤ R` moved into the box; it covers Q ∩ box.
    fn shifted(&self, center: &Point, r: f64) -> Cube {
        let mut c = *center;
        for i in 0..self.dim() {
            c.coords_mut()[i] = c[i].clamp(self.domain.lower(i) + r, self.domain.upper(i) - r);
        }
        Cube { center: c, r }
    }

    pub fn to_file(&self) -> DensityFile {
        DensityFile {
            center: self.domain.center.coords().to_vec(),
            half_side: self.domain.r,
            resolution: self.res,
            q: self.q,
            values: self.values.clone(),
        }
    }

    pub fn from_file(f: &DensityFile) -> Result<DensityField> {
        let center = Point::new(&f.center)?;
        DensityField::new(Cube::new(center, f.half_side)?, f.resolution, f.q, f.values.clone())
    }

    pub fn load(path: &Path) -> Result<DensityField> {
        let text = std::fs::read_to_string(path)?;
        DensityField::from_file(&serde_json::from_str(&text)?)
    }
}

// Means of all grid-aligned cubes of side k cells, with a sparse table
// for range maxima along the last axis.
#[derive(Clone, Debug)]
struct SideTable {
    len: usize,
    levels: Vec<Vec<f64>>,
}

/// `ρ̂_q(x, y) = ‖x − y‖ · max (avg_Q h^q)^{1/q}` over the enumerated family:
/// grid-aligned cubes containing both points, and `2^j Q(x, ‖x − y‖)`,
/// `2^j Q(y, ‖x − y‖)` moved into the box.
#[derive(Clone, Debug)]
pub struct PreMetric {
    h: DensityField,
    sides: Vec<SideTable>,
}

impl PreMetric {
    pub fn new(h: DensityField) -> PreMetric {
        let n = h.dim();
        let res = h.res;
        let side = res + 1;
        let mut sides = Vec::with_capacity(res);
        for k in 1..=res {
            let len = res - k + 1;
            let total = len.pow(n as u32);
            let vol = (k as f64 * h.cell).powi(n as i32);
            let mut base = Vec::with_capacity(total);
            for a in 0..total {
                let mut s = 0.0;
                for corner in 0..1usize << n {
                    let mut rest = a;
                    let mut idx = 0;
                    let mut stride = 1;
                    let mut sign = 1.0;
                    for i in 0..n {
                        let ai = rest % len;
                        rest /= len;
                        if corner >> i & 1 == 1 {
                            idx += (ai + k) * stride;
                        } else {
                            idx += ai * stride;
                            sign = -sign;
                        }
                        stride *= side;
                    }
                    s += sign * h.prefix[idx];
                }
                base.push((s.max(0.0) / vol).powf(1.0 / h.q));
            }
            let last = len.pow(n as u32 - 1);
            let mut levels = vec![base];
            let mut span = 1;
            while 2 * span <= len {
                let prev = levels.last().unwrap();
                let mut next = prev.clone();
                for (a, v) in next.iter_mut().enumerate() {
                    if (a / last) % len + span < len {
                        *v = v.max(prev[a + span * last]);
                    }
                }
                levels.push(next);
                span *= 2;
            }
            sides.push(SideTable { len, levels });
        }
        PreMetric { h, sides }
    }

    pub fn field(&self) -> &DensityField {
        &self.h
    }

    fn check_inside(&self, x: &Point) -> Result<()> {
        if x.dim() != self.h.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.h.dim(),
                got: x.dim(),
            });
        }
        if !self.h.contains(x) {
            return Err(Error::Config(format!("point {:?} lies outside the density box", x.coords())));
        }
        Ok(())
    }

    /// Largest mean over the grid-aligned cubes containing `x` and `y`.
    pub fn grid_family_max(&self, x: &Point, y: &Point) -> f64 {
        let h = &self.h;
        let n = h.dim();
        let mut lo_t = [0.0; MAX_DIM];
        let mut hi_t = [0.0; MAX_DIM];
        for i in 0..n {
            let a = (x[i].min(y[i]) - h.domain.lower(i)) / h.cell;
            let b = (x[i].max(y[i]) - h.domain.lower(i)) / h.cell;
            lo_t[i] = snap(a);
            hi_t[i] = snap(b);
        }
        let mut best: f64 = 0.0;
        for (ki, tab) in self.sides.iter().enumerate() {
            let k = (ki + 1) as f64;
            let mut from = [0usize; MAX_DIM];
            let mut to = [0usize; MAX_DIM];
            let mut empty = false;
            for i in 0..n {
                // lower corners a with a ≤ lo_t and a + k ≥ hi_t
                let a0 = (hi_t[i] - k).ceil().max(0.0);
                let a1 = lo_t[i].floor().min((tab.len - 1) as f64);
                if a0 > a1 {
                    empty = true;
                    break;
                }
                from[i] = a0 as usize;
                to[i] = a1 as usize;
            }
            if empty {
                continue;
            }
            best = best.max(tab.range_max(n, &from[..n], &to[..n]));
        }
        best
    }

    /// Largest mean over the dilates `2^j Q(c, r)` moved into the box.
    fn dilate_max(&self, c: &Point, r: f64) -> f64 {
        let big = self.h.domain.r;
        let mut best: f64 = 0.0;
        let mut s = r;
        while s < big {
            best = best.max(self.h.cube_mean(&self.h.shifted(c, s)));
            s *= 2.0;
        }
        best.max(self.h.cube_mean(&self.h.domain))
    }

    /// `ρ̂_q(x, y)`, a lower bound for `ρ_q(x, y : h)`.
    pub fn rho(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_inside(x)?;
        self.check_inside(y)?;
        Ok(self.rho_unchecked(x, y))
    }

    fn rho_unchecked(&self, x: &Point, y: &Point) -> f64 {
        let d = x.dist(y);
        if d == 0.0 {
            return 0.0;
        }
        let m = self
            .grid_family_max(x, y)
            .max(self.dilate_max(x, d))
            .max(self.dilate_max(y, d));
        d * m
    }

    /// `t · sup (avg_{Q(x,s)} h^q)^{1/q}` over `s = t·ratio^j`; the cubes
    /// are not moved. With `ratio = 2` this is at most `ρ̂_q(x, y)` for
    /// `t = ‖x − y‖`; otherwise it is at least `v_x(t)·ratio^{-n/q}`.
    pub fn v_at(&self, x: &Point, t: f64, ratio: f64) -> Result<f64> {
        self.check_inside(x)?;
        if !(ratio > 1.0) {
            return Err(Error::Config(format!("profile ratio {ratio} must exceed 1")));
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        let h = &self.h;
        let reach = x.dist(&h.domain.center) + h.domain.r;
        let mut best: f64 = 0.0;
        let mut s = t;
        loop {
            best = best.max(h.cube_mean(&Cube { center: *x, r: s }));
            // past `reach` the cube holds the whole box and its mean only drops
            if s >= reach {
                break;
            }
            s *= ratio;
        }
        Ok(t * best)
    }

    /// `v_x` on `t_j = R·2^{-j}`, `j = levels..=0` (R the box half side),
    /// and its least concave majorant `ω_x`.
    pub fn profile(&self, x: &Point, levels: u32) -> Result<Profile> {
        let big = self.h.domain.r;
        let t: Vec<f64> = (0..=levels).rev().map(|j| big * 0.5f64.powi(j as i32)).collect();
        let v = t.iter().map(|&s| self.v_at(x, s, 2.0)).collect::<Result<Vec<_>>>()?;
        let omega = concave_majorant(&t, &v);
        Ok(Profile { t, v, omega })
    }
}

impl SideTable {
    fn range_max(&self, n: usize, from: &[usize], to: &[usize]) -> f64 {
        let len = self.len;
        let last = n - 1;
        let width = to[last] - from[last] + 1;
        let lvl = usize::BITS as usize - 1 - width.leading_zeros() as usize;
        let tab = &self.levels[lvl];
        let stride_last = len.pow(last as u32);
        let lo = from[last] * stride_last;
        let hi = (to[last] + 1 - (1 << lvl)) * stride_last;
        let mut best: f64 = 0.0;
        let mut idx = [0usize; MAX_DIM];
        idx[..last].copy_from_slice(&from[..last]);
        loop {
            let mut base = 0;
            let mut stride = 1;
            for i in 0..last {
                base += idx[i] * stride;
                stride *= len;
            }
            best = best.max(tab[base + lo]).max(tab[base + hi]);
            let mut i = 0;
            loop {
                if i == last {
                    return best;
                }
                if idx[i] < to[i] {
                    idx[i] += 1;
                    break;
                }
                idx[i] = from[i];
                i += 1;
            }
        }
    }
}

fn snap(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 {
        r
    } else {
        t
    }
}

/// Sampled `v_x` and `ω_x` on an increasing grid `t`.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Predicates a sampled profile must satisfy.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ProfileReport {
    pub v_monotone: bool,
    pub omega_monotone: bool,
    pub v_over_t_nonincreasing: bool,
    pub majorant_bounds: bool,
    /// `max ω/v`.
    pub max_ratio: f64,
}

impl ProfileReport {
    pub fn is_clean(&self) -> bool {
        self.v_monotone && self.omega_monotone && self.v_over_t_nonincreasing && self.majorant_bounds
    }
}

impl Profile {
    pub fn check(&self) -> ProfileReport {
        let tol = 1e-12;
        let up = |a: f64, b: f64| b >= a - tol * a.abs().max(b.abs());
        let mut rep = ProfileReport {
            v_monotone: true,
            omega_monotone: true,
            v_over_t_nonincreasing: true,
            majorant_bounds: true,
            max_ratio: 1.0,
        };
        for j in 1..self.t.len() {
            rep.v_monotone &= up(self.v[j - 1], self.v[j]);
            rep.omega_monotone &= up(self.omega[j - 1], self.omega[j]);
            rep.v_over_t_nonincreasing &= up(self.v[j] / self.t[j], self.v[j - 1] / self.t[j - 1]);
        }
        for (&v, &w) in self.v.iter().zip(&self.omega) {
            rep.majorant_bounds &= up(v, w) && up(w, 2.0 * v);
            if v > 0.0 {
                rep.max_ratio = rep.max_ratio.max(w / v);
            }
        }
        rep
    }
}

/// Least concave majorant through the origin of the points `(t_j, v_j)`,
/// evaluated at each `t_j`. `t` must be increasing and positive.
pub fn concave_majorant(t: &[f64], v: &[f64]) -> Vec<f64> {
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (&a, &b) in t.iter().zip(v) {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point when it lies on or below the chord
            if (y2 - y1) * (a - x1) <= (b - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((a, b));
    }
    let mut out = Vec::with_capacity(t.len());
    let mut seg = 0;
    for &a in t {
        while seg + 1 < hull.len() - 1 && hull[seg + 1].0 < a {
            seg += 1;
        }
        let (x1, y1) = hull[seg];
        let (x2, y2) = hull[seg + 1];
        let w = if a >= x2 {
            y2
        } else {
            y1 + (y2 - y1) * (a - x1) / (x2 - x1)
        };
        out.push(w);
    }
    // keep the majorant property exact at the samples
    for (w, &b) in out.iter_mut().zip(v) {
        *w = w.max(b);
    }
    out
}

/// Sites (grid vertices first, then extra points) joined when they are within
/// `radius` in the uniform norm, with edge weights `ρ̂_q`.
#[derive(Clone, Debug)]
pub struct MetricSample {
    pre: PreMetric,
    sites: Vec<Point>,
    grid_sites: usize,
    radius: f64,
    adj: Vec<Vec<(u32, f64)>>,
}

impl MetricSample {
    /// `radius` in grid cells; it must be at least one cell.
    pub fn build(pre: PreMetric, extra: &[Point], radius_cells: f64) -> Result<MetricSample> {
        if !(radius_cells >= 1.0) {
            return Err(Error::Config(format!(
                "sample radius of {radius_cells} cells leaves the sample graph disconnected"
            )));
        }
        let h = &pre.h;
        let n = h.dim();
        for x in extra {
            pre.check_inside(x)?;
        }
        let res = h.res;
        let side = res + 1;
        let mut sites = Vec::with_capacity(side.pow(n as u32) + extra.len());
        for v in 0..side.pow(n as u32) {
            let mut x = Point::zero(n);
            let mut rest = v;
            for i in 0..n {
                x.coords_mut()[i] = h.domain.lower(i) + (rest % side) as f64 * h.cell;
                rest /= side;
            }
            sites.push(x);
        }
        let grid_sites = sites.len();
        sites.extend_from_slice(extra);
        let radius = radius_cells * h.cell;

        let cell_of = |x: &Point| -> [usize; MAX_DIM] {
            let mut c = [0usize; MAX_DIM];
            for i in 0..n {
                let t = ((x[i] - h.domain.lower(i)) / h.cell).floor().max(0.0) as usize;
                c[i] = t.min(res - 1);
            }
            c
        };
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); res.pow(n as u32)];
        let flat = |c: &[usize; MAX_DIM]| (0..n).rev().fold(0, |acc, i| acc * res + c[i]);
        for (s, x) in sites.iter().enumerate() {
            buckets[flat(&cell_of(x))].push(s as u32);
        }
        let reach = radius_cells.ceil() as isize + 1;
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); sites.len()];
        for (s, x) in sites.iter().enumerate() {
            let c = cell_of(x);
            let span = (2 * reach + 1) as usize;
            for off in 0..span.pow(n as u32) {
                let mut o = off;
                let mut nb = [0usize; MAX_DIM];
                let mut ok = true;
                for i in 0..n {
                    let d = (o % span) as isize - reach;
                    o /= span;
                    let v = c[i] as isize + d;
                    if v < 0 || v >= res as isize {
                        ok = false;
                        break;
                    }
                    nb[i] = v as usize;
                }
                if !ok {
                    continue;
                }
                for &t in &buckets[flat(&nb)] {
                    let t = t as usize;
                    if t <= s || x.dist(&sites[t]) > radius * (1.0 + 1e-12) {
                        continue;
                    }
                    let w = pre.rho_unchecked(x, &sites[t]);
                    adj[s].push((t as u32, w));
                    adj[t].push((s as u32, w));
                }
            }
        }
        Ok(MetricSample {
            pre,
            sites,
            grid_sites,
            radius,
            adj,
        })
    }

    pub fn pre_metric(&self) -> &PreMetric {
        &self.pre
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    /// Index of the `k`-th extra point among the sites.
    pub fn extra(&self, k: usize) -> usize {
        self.grid_sites + k
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.pre.rho_unchecked(&self.sites[i], &self.sites[j])
    }

    /// Shortest-path distances from several sources with initial offsets.
    pub fn distances(&self, sources: &[(usize, f64)], target: Option<usize>) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.sites.len()];
        let mut heap = BinaryHeap::new();
        for &(s, d0) in sources {
            if d0 < dist[s] {
                dist[s] = d0;
                heap.push(HeapItem(d0, s));
            }
        }
        while let Some(HeapItem(d, x)) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            if Some(x) == target {
                break;
            }
            for &(y, w) in &self.adj[x] {
                let y = y as usize;
                let nd = d + w;
                if nd < dist[y] {
                    dist[y] = nd;
                    heap.push(HeapItem(nd, y));
                }
            }
        }
        dist
    }

    /// `d̂_q(i, j)`: the shortest sampled chain, or the single hop if shorter.
    pub fn geodesic(&self, i: usize, j: usize) -> f64 {
        let d = self.distances(&[(i, 0.0)], Some(j))[j];
        d.min(self.rho(i, j))
    }

    /// Whether every site is reachable from site 0.
    pub fn is_connected(&self) -> bool {
        self.distances(&[(0, 0.0)], None).iter().all(|d| d.is_finite())
    }
}

/// `d̂_q(x, y)` on a sample made of the grid and the two points.
pub fn geodesic_dq(x: &Point, y: &Point, h: &DensityField, radius_cells: f64) -> Result<f64> {
    let s = MetricSample::build(PreMetric::new(h.clone()), &[*x, *y], radius_cells)?;
    if !s.is_connected() {
        return Err(Error::Invariant("sample graph is disconnected".into()));
    }
    Ok(s.geodesic(s.extra(0), s.extra(1)))
}

/// `min_{y ∈ E} f(y) + d(x, y)`, where `d(i)` is the distance from `x` to the
/// `i`-th point.
pub fn mcshane_extend(f: &[f64], d: impl Fn(usize) -> f64) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(f.iter().enumerate().map(|(i, &v)| v + d(i)).fold(f64::INFINITY, f64::min))
}

/// `max |f(y) − f(z)| / ‖y − z‖` over distinct points; 0 below two points.
pub fn lipschitz_constant(points: &[Point], f: &[f64]) -> f64 {
    let mut l: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            l = l.max((f[i] - f[j]).abs() / points[i].dist(&points[j]));
        }
    }
    l
}

/// McShane extension for the metric `L·‖·‖`, `L = Lip_E(f)` inflated by one
/// part in `10^12` so that rounding cannot break `F = f` on `E`.
#[derive(Clone, Debug)]
pub struct LipschitzExtension {
    points: Vec<Point>,
    f: Vec<f64>,
    lip: f64,
}

impl LipschitzExtension {
    pub fn new(points: &[Point], f: &[f64]) -> Result<LipschitzExtension> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if points.len() != f.len() {
            return Err(Error::Parse(format!("{} points but {} values", points.len(), f.len())));
        }
        let lip = lipschitz_constant(points, f) * (1.0 + 1e-12);
        Ok(LipschitzExtension {
            points: points.to_vec(),
            f: f.to_vec(),
            lip,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lip
    }

    pub fn eval(&self, x: &Point) -> f64 {
        mcshane_extend(&self.f, |i| self.lip * x.dist(&self.points[i])).unwrap()
    }
}

/// `sup_{y ≠ z} |f(y) − f(z)| / (‖x − y‖ + ‖x − z‖)`.
pub fn sharp_max_m1(points: &[Point], f: &[f64], x: &Point) -> f64 {
    let mut s: f64 = 0.0;
    for i in 0..points.len() {
        let di = x.dist(&points[i]);
        for j in i + 1..points.len() {
            let num = (f[i] - f[j]).abs();
            if num > 0.0 {
                s = s.max(num / (di + x.dist(&points[j])));
            }
        }
    }
    s
}

/// The factor in `F(x) = min_y f(y) + 48·d_q(x, y : f♯)`.
pub const L1P_FACTOR: f64 = 48.0;

/// Extension of `f` with gradient in `L_p`, built from the geodesic metric
/// of its sharp maximal function.
#[derive(Clone, Debug)]
pub struct L1pExtension {
    sample: MetricSample,
    points: Vec<Point>,
    f: Vec<f64>,
    values: Vec<f64>,
}

impl L1pExtension {
    pub fn new(points: &[Point], f: &[f64], p: f64, domain: Cube, res: usize) -> Result<L1pExtension> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if points.len() != f.len() {
            return Err(Error::Parse(format!("{} points but {} values", points.len(), f.len())));
        }
        let n = domain.dim();
        if !(p > n as f64) {
            return Err(Error::Config(format!("p = {p} must exceed n = {n}")));
        }
        let q = (n as f64 + p) / 2.0;
        let h = DensityField::from_fn(domain, res, q, |x| sharp_max_m1(points, f, x))?;
        let sample = MetricSample::build(PreMetric::new(h), points, 4.0)?;
        let fmin = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let sources: Vec<(usize, f64)> = (0..points.len())
            .map(|k| (sample.extra(k), (f[k] - fmin) / L1P_FACTOR))
            .collect();
        let dist = sample.distances(&sources, None);
        let mut values: Vec<f64> = dist.iter().map(|d| fmin + L1P_FACTOR * d).collect();
        for (s, v) in values.iter_mut().enumerate() {
            for (k, y) in points.iter().enumerate() {
                let direct = f[k] + L1P_FACTOR * sample.pre.rho_unchecked(&sample.sites[s], y);
                *v = v.min(direct);
            }
        }
        Ok(L1pExtension {
            sample,
            points: points.to_vec(),
            f: f.to_vec(),
            values,
        })
    }

    pub fn density(&self) -> &DensityField {
        &self.sample.pre.h
    }

    pub fn sample(&self) -> &MetricSample {
        &self.sample
    }

    /// `F` at every site of the sample.
    pub fn site_values(&self) -> &[f64] {
        &self.values
    }

    /// `F(x)` for `x` in the density box.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        let pre = &self.sample.pre;
        pre.check_inside(x)?;
        let mut v = f64::INFINITY;
        for (y, &fy) in self.points.iter().zip(&self.f) {
            v = v.min(fy + L1P_FACTOR * pre.rho_unchecked(x, y));
        }
        // one last hop from any site within the sample radius
        for (s, site) in self.sample.sites.iter().enumerate() {
            if x.dist(site) <= self.sample.radius {
                v = v.min(self.values[s] + L1P_FACTOR * pre.rho_unchecked(x, site));
            }
        }
        Ok(v)
    }
}
