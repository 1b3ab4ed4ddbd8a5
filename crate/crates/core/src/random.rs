//! Seeded instance generators. Every experiment derives its randomness from
//! one `u64` seed through [`rng`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Point};
use crate::jets::{field_from_polynomial, JetField, Poly};
use crate::metrics::DensityField;
use crate::multiindex::table;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` points of `[0, 1]^n`, pairwise at least `min_sep` apart.
pub fn random_points(rng: &mut impl Rng, n: usize, count: usize, min_sep: f64) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::EmptySet);
    }
    let unit = Uniform::new(0.0, 1.0);
    let mut pts: Vec<Point> = Vec::with_capacity(count);
    let mut tries = 0usize;
    while pts.len() < count {
        tries += 1;
        if tries > 1000 * count {
            return Err(Error::Capacity(format!(
                "cannot place {count} points {min_sep}-separated in [0,1]^{n}"
            )));
        }
        let c: Vec<f64> = (0..n).map(|_| unit.sample(rng)).collect();
        let x = Point::new(&c)?;
        if pts.iter().all(|y| y.dist(&x) >= min_sep) {
            pts.push(x);
        }
    }
    Ok(pts)
}

/// `count` independent uniform points of a cube.
pub fn points_in(rng: &mut impl Rng, c: &Cube, count: usize) -> Vec<Point> {
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..c.dim()).map(|i| c.lower(i) + 2.0 * c.r * rng.gen::<f64>()).collect();
            Point::new(&v).expect("finite point")
        })
        .collect()
}

/// A polynomial of degree `≤ m − 1` with Taylor coefficients at `base`
/// uniform in `[−1, 1]`.
pub fn random_poly(rng: &mut impl Rng, base: Point, m: usize) -> Result<Poly> {
    let len = table(base.dim(), m - 1).len();
    let coeff = Uniform::new_inclusive(-1.0, 1.0);
    Poly::new(base, m, (0..len).map(|_| coeff.sample(rng)).collect())
}

/// Independent random jets at every point.
pub fn random_field(rng: &mut impl Rng, points: &[Point], m: usize, p: f64) -> Result<JetField> {
    let jets = points
        .iter()
        .map(|x| random_poly(rng, *x, m))
        .collect::<Result<Vec<_>>>()?;
    JetField::new(points.to_vec(), jets, m, p)
}

/// Jets of one random global polynomial centered in the unit cube.
pub fn polynomial_field(rng: &mut impl Rng, points: &[Point], m: usize, p: f64) -> Result<JetField> {
    let n = points.first().ok_or(Error::EmptySet)?.dim();
    let g = random_poly(rng, Point::new(&vec![0.5; n])?, m)?;
    field_from_polynomial(&g, points, p)
}

/// A random jet instance on `count` points of `[0, 1]^n`.
pub fn random_instance(seed: u64, n: usize, m: usize, p: f64, count: usize) -> Result<JetField> {
    let mut r = rng(seed);
    let pts = random_points(&mut r, n, count, 1e-3)?;
    random_field(&mut r, &pts, m, p)
}

/// Piecewise-constant density: each cell is zero with probability
/// `zero_frac`, otherwise log-normal with `σ = 1`.
pub fn random_density(rng: &mut impl Rng, domain: Cube, res: usize, q: f64, zero_frac: f64) -> Result<DensityField> {
    let ln = LogNormal::new(0.0, 1.0).expect("valid log-normal parameters");
    let cells = res.pow(domain.dim() as u32);
    let values = (0..cells)
        .map(|_| if rng.gen::<f64>() < zero_frac { 0.0 } else { ln.sample(rng) })
        .collect();
    DensityField::new(domain, res, q, values)
}
