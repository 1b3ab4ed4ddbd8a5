//! Tensor Gauss–Legendre rules on boxes and integration over all of `R^n`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Point, MAX_DIM};
use crate::whitney::WhitneyCover;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(order: usize) -> Result<Rule> {
        let deg = NonZeroUsize::new(order)
            .ok_or_else(|| Error::Config("quadrature order must be positive".into()))?;
        let gl = GaussLegendre::new(deg);
        Ok(Rule {
            pairs: gl.as_node_weight_pairs().to_vec(),
        })
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Calls `f(x, w)` on every tensor node of the box `[lo, hi]`.
    pub fn for_each_node(&self, n: usize, lo: &[f64], hi: &[f64], mut f: impl FnMut(&Point, f64)) {
        let g = self.pairs.len();
        let mut half = [0.0; MAX_DIM];
        let mut mid = [0.0; MAX_DIM];
        let mut vol = 1.0;
        for i in 0..n {
            half[i] = 0.5 * (hi[i] - lo[i]);
            mid[i] = 0.5 * (hi[i] + lo[i]);
            vol *= half[i];
        }
        let total = g.pow(n as u32);
        let mut x = Point::zero(n);
        for k in 0..total {
            let mut rest = k;
            let mut w = vol;
            for i in 0..n {
                let (t, wi) = self.pairs[rest % g];
                rest /= g;
                x.coords_mut()[i] = mid[i] + half[i] * t;
                w *= wi;
            }
            f(&x, w);
        }
    }

    /// Integral of `f` over a cube.
    pub fn cube(&self, c: &Cube, mut f: impl FnMut(&Point) -> f64) -> f64 {
        let n = c.dim();
        let lo: Vec<f64> = (0..n).map(|i| c.lower(i)).collect();
        let hi: Vec<f64> = (0..n).map(|i| c.upper(i)).collect();
        let mut s = 0.0;
        self.for_each_node(n, &lo, &hi, |x, w| s += w * f(x));
        s
    }
}

/// Integral over `R^n` split into the window and the part outside it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RnIntegral {
    pub window: f64,
    /// Shells outside the window plus the extrapolated remainder.
    pub tail: f64,
    /// The extrapolated remainder alone.
    pub tail_remainder: f64,
}

impl RnIntegral {
    pub fn total(&self) -> f64 {
        self.window + self.tail
    }
}

/// Integrates `f` over `R^n`: the window cell by cell (Whitney cubes and
/// collar cells), then dyadic shells `2^{k+1} W \ 2^k W` until they stop
/// contributing, with a geometric estimate of what is left.
pub fn integrate_rn(cover: &WhitneyCover, rule: &Rule, mut f: impl FnMut(&Point) -> f64) -> RnIntegral {
    let mut out = RnIntegral::default();
    for c in cover.cubes().iter().chain(cover.collar()) {
        out.window += rule.cube(&c.cube, &mut f);
    }
    let n = cover.dim();
    let w = cover.window();
    let per_axis = 4usize;
    let mut prev = f64::NAN;
    for k in 0..80 {
        let r = w.r * (1u64 << k) as f64;
        let side = r;
        let mut shell = 0.0;
        for cell in 0..per_axis.pow(n as u32) {
            let mut rest = cell;
            let mut inner = true;
            let mut center = w.center;
            for i in 0..n {
                let j = rest % per_axis;
                rest /= per_axis;
                inner &= j == 1 || j == 2;
                center.coords_mut()[i] += -2.0 * r + (j as f64 + 0.5) * side;
            }
            if inner {
                continue;
            }
            shell += rule.cube(&Cube { center, r: side / 2.0 }, &mut f);
        }
        out.tail += shell;
        let scale = out.window.abs() + out.tail.abs();
        if k >= 3 && shell.abs() <= 1e-14 * scale {
            break;
        }
        if k >= 3 {
            let ratio = shell / prev;
            if ratio > 0.0 && ratio < 0.9 && shell.abs() <= 1e-10 * scale {
                out.tail_remainder = shell * ratio / (1.0 - ratio);
                out.tail += out.tail_remainder;
                break;
            }
        }
        prev = shell;
    }
    out
}
