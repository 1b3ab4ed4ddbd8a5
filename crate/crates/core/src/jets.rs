//! Polynomials of degree `≤ m − 1` and jet fields on finite sets.
//!
//! A polynomial is stored by its derivatives at a base point: coefficient
//! `c_α = D^α P(base)`, so `P(x) = Σ c_α (x − base)^α / α!`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{validate_set, Point, MAX_DIM};
use crate::multiindex::{table, IndexTable, MultiIndex};

/// Largest supported smoothness `m`.
pub const MAX_M: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    base: Point,
    m: usize,
    coeffs: Vec<f64>,
}

impl Poly {
    /// Polynomial of degree `≤ m − 1` with `coeffs[k] = D^{α_k} P(base)` in
    /// the order of [`table`]`(n, m − 1)`.
    pub fn new(base: Point, m: usize, coeffs: Vec<f64>) -> Result<Poly> {
        check_m(m)?;
        let t = table(base.dim(), m - 1);
        if coeffs.len() != t.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                t.len(),
                coeffs.len()
            )));
        }
        Ok(Poly { base, m, coeffs })
    }

    pub fn zero(base: Point, m: usize) -> Poly {
        let len = table(base.dim(), m - 1).len();
        Poly {
            base,
            m,
            coeffs: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn table(&self) -> &'static IndexTable {
        table(self.dim(), self.m - 1)
    }

    /// `D^α P(base)`; zero when `|α| ≥ m`.
    pub fn coeff(&self, a: &MultiIndex) -> f64 {
        self.table()
            .try_index(a)
            .map_or(0.0, |k| self.coeffs[k])
    }

    pub fn set_coeff(&mut self, a: &MultiIndex, v: f64) -> Result<()> {
        let k = self.table().try_index(a).ok_or(Error::OrderTooHigh {
            alpha: a.parts().to_vec(),
            order: self.m - 1,
        })?;
        self.coeffs[k] = v;
        Ok(())
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.deriv(&MultiIndex::zero(self.dim()), x)
    }

    /// `D^α P(x)`.
    pub fn deriv(&self, a: &MultiIndex, x: &Point) -> f64 {
        if a.order() >= self.m {
            return 0.0;
        }
        let t = self.table();
        let pw = self.scaled_powers(x);
        let mut s = 0.0;
        for (k, b) in t.list().iter().enumerate() {
            if a.le(b) {
                s += self.coeffs[k] * monomial(&pw, &b.sub(a));
            }
        }
        s
    }

    /// All derivatives `D^γ P(x)`, `|γ| ≤ m − 1`, in table order.
    pub fn derivs_at(&self, x: &Point, out: &mut [f64]) {
        let t = self.table();
        let pw = self.scaled_powers(x);
        for (j, g) in t.list().iter().enumerate() {
            let mut s = 0.0;
            for (k, b) in t.list().iter().enumerate().skip(j) {
                if g.le(b) {
                    s += self.coeffs[k] * monomial(&pw, &b.sub(g));
                }
            }
            out[j] = s;
        }
    }

    /// Same polynomial expanded around `base`.
    pub fn rebase(&self, base: &Point) -> Poly {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        self.derivs_at(base, &mut coeffs);
        Poly {
            base: *base,
            m: self.m,
            coeffs,
        }
    }

    /// `a·self + b·other`, expanded around `self`'s base.
    pub fn combine(&self, a: f64, other: &Poly, b: f64) -> Result<Poly> {
        if other.dim() != self.dim() || other.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let o = other.rebase(&self.base);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Poly {
            base: self.base,
            m: self.m,
            coeffs,
        })
    }

    /// `pw[i][k] = h_i^k / k!` with `h = x − base`.
    fn scaled_powers(&self, x: &Point) -> [[f64; MAX_M]; MAX_DIM] {
        let mut pw = [[0.0; MAX_M]; MAX_DIM];
        for i in 0..self.dim() {
            let h = x[i] - self.base[i];
            pw[i][0] = 1.0;
            for k in 1..self.m {
                pw[i][k] = pw[i][k - 1] * h / k as f64;
            }
        }
        pw
    }
}

#[inline]
fn monomial(pw: &[[f64; MAX_M]; MAX_DIM], a: &MultiIndex) -> f64 {
    a.parts()
        .iter()
        .enumerate()
        .map(|(i, &k)| pw[i][k as usize])
        .product()
}

fn check_m(m: usize) -> Result<()> {
    if !(1..=MAX_M).contains(&m) {
        return Err(Error::Config(format!("m = {m} outside 1..={MAX_M}")));
    }
    Ok(())
}

/// `D^α P(x)` with dimension checks.
pub fn poly_eval_deriv(p: &Poly, a: &MultiIndex, x: &Point) -> Result<f64> {
    if a.dim() != p.dim() || x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: if a.dim() != p.dim() { a.dim() } else { x.dim() },
        });
    }
    Ok(p.deriv(a, x))
}

/// `D^α P(x) − D^α Q(x)`.
pub fn jet_difference(p: &Poly, q: &Poly, a: &MultiIndex, x: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    Ok(poly_eval_deriv(p, a, x)? - poly_eval_deriv(q, a, x)?)
}

/// A jet `P_x` at every point `x` of a finite set `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetField {
    pub m: usize,
    pub p: f64,
    points: Vec<Point>,
    jets: Vec<Poly>,
    /// `D^α P_x(x)` per point, in the order of `table(n, m − 1)`.
    at_points: Vec<Vec<f64>>,
}

impl JetField {
    /// Jets may be expanded around any base; `p` must exceed `n`.
    pub fn new(points: Vec<Point>, jets: Vec<Poly>, m: usize, p: f64) -> Result<JetField> {
        check_m(m)?;
        let n = validate_set(&points)?;
        if !(p > n as f64) || !p.is_finite() {
            return Err(Error::Config(format!("p = {p} must be finite and exceed n = {n}")));
        }
        if jets.len() != points.len() {
            return Err(Error::Config(format!(
                "{} points but {} jets",
                points.len(),
                jets.len()
            )));
        }
        if let Some(j) = jets.iter().find(|j| j.dim() != n || j.m != m) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: j.dim(),
            });
        }
        Ok(Self::assemble(m, p, points, jets))
    }

    fn assemble(m: usize, p: f64, points: Vec<Point>, jets: Vec<Poly>) -> JetField {
        let at_points = jets
            .iter()
            .zip(&points)
            .map(|(j, x)| {
                if j.base == *x {
                    j.coeffs.clone()
                } else {
                    j.rebase(x).coeffs
                }
            })
            .collect();
        JetField {
            m,
            p,
            points,
            jets,
            at_points,
        }
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn jets(&self) -> &[Poly] {
        &self.jets
    }

    pub fn jet(&self, i: usize) -> &Poly {
        &self.jets[i]
    }

    /// `D^α P_x(x)` at the `i`-th point, in the order of `table(n, m − 1)`.
    pub fn point_jet(&self, i: usize) -> &[f64] {
        &self.at_points[i]
    }

    /// `P_x(x)` for every point.
    pub fn values(&self) -> Vec<f64> {
        self.at_points.iter().map(|v| v[0]).collect()
    }

    /// `a·self + b·other` on the same point set.
    pub fn combine(&self, a: f64, other: &JetField, b: f64) -> Result<JetField> {
        if other.points != self.points || other.m != self.m {
            return Err(Error::Config("jet fields live on different sets".into()));
        }
        let jets = self
            .jets
            .iter()
            .zip(&other.jets)
            .map(|(x, y)| x.combine(a, y, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(self.m, self.p, self.points.clone(), jets))
    }

    pub fn scale(&self, c: f64) -> JetField {
        let mut f = self.clone();
        for v in f.jets.iter_mut().flat_map(|j| j.coeffs.iter_mut()) {
            *v *= c;
        }
        for v in f.at_points.iter_mut().flatten() {
            *v *= c;
        }
        f
    }

    pub fn to_json(&self) -> JetFieldFile {
        JetFieldFile {
            dim: self.dim(),
            m: self.m,
            p: self.p,
            points: self.points.iter().map(|x| x.coords().to_vec()).collect(),
            jets: self
                .at_points
                .iter()
                .map(|v| {
                    table(self.dim(), self.m - 1)
                        .list()
                        .iter()
                        .zip(v)
                        .map(|(a, &c)| (a.key(), c))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(f: &JetFieldFile) -> Result<JetField> {
        check_m(f.m)?;
        if !(1..=MAX_DIM).contains(&f.dim) {
            return Err(Error::Config(format!("dim = {} outside 1..={MAX_DIM}", f.dim)));
        }
        let points = f
            .points
            .iter()
            .map(|c| {
                if c.len() != f.dim {
                    return Err(Error::DimensionMismatch {
                        expected: f.dim,
                        got: c.len(),
                    });
                }
                Point::new(c)
            })
            .collect::<Result<Vec<_>>>()?;
        if f.jets.len() != points.len() {
            return Err(Error::Parse(format!(
                "{} points but {} jets",
                points.len(),
                f.jets.len()
            )));
        }
        let mut jets = Vec::with_capacity(points.len());
        for (x, entries) in points.iter().zip(&f.jets) {
            let mut poly = Poly::zero(*x, f.m);
            for (k, &v) in entries {
                let a = MultiIndex::parse_key(k)
                    .filter(|a| a.dim() == f.dim)
                    .ok_or_else(|| Error::Parse(format!("bad multi-index key {k:?}")))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("non-finite coefficient at {k:?}")));
                }
                poly.set_coeff(&a, v)?;
            }
            jets.push(poly);
        }
        JetField::new(points, jets, f.m, f.p)
    }

    pub fn load(path: &Path) -> Result<JetField> {
        let text = std::fs::read_to_string(path)?;
        let file: JetFieldFile = serde_json::from_str(&text)?;
        JetField::from_json(&file)
    }
}

/// On-disk jet field:
/// `{"dim":n,"m":m,"p":p,"points":[[..]],"jets":[{"2,0":c,...},...]}`.
/// Missing coefficients are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetFieldFile {
    pub dim: usize,
    pub m: usize,
    pub p: f64,
    pub points: Vec<Vec<f64>>,
    pub jets: Vec<BTreeMap<String, f64>>,
}

/// The jets of one polynomial `G` on every point of `E`. Every jet is `G`
/// itself, unexpanded, so the field is exactly consistent.
pub fn field_from_polynomial(g: &Poly, points: &[Point], p: f64) -> Result<JetField> {
    let jets = vec![g.clone(); points.len()];
    JetField::new(points.to_vec(), jets, g.m, p)
}

/// Monomial `(x − base)^α / α!` as a polynomial.
pub fn scaled_monomial(base: Point, m: usize, a: &MultiIndex) -> Result<Poly> {
    let mut p = Poly::zero(base, m);
    p.set_coeff(a, 1.0)?;
    Ok(p)
}
