//! Multi-indices and derivative tables indexed by them.

use std::sync::OnceLock;

use crate::geometry::MAX_DIM;

/// Highest derivative order any table in the crate needs (`m + 1` with
/// `m ≤ 4`).
pub const MAX_ORDER: usize = 5;

/// A multi-index `α ∈ N^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    a: [u8; MAX_DIM],
    n: u8,
}

impl MultiIndex {
    pub fn new(a: &[u8]) -> MultiIndex {
        assert!(!a.is_empty() && a.len() <= MAX_DIM);
        let mut arr = [0; MAX_DIM];
        arr[..a.len()].copy_from_slice(a);
        MultiIndex {
            a: arr,
            n: a.len() as u8,
        }
    }

    pub fn zero(n: usize) -> MultiIndex {
        MultiIndex::new(&vec![0; n])
    }

    /// `e_i`.
    pub fn unit(n: usize, i: usize) -> MultiIndex {
        let mut m = MultiIndex::zero(n);
        m.a[i] = 1;
        m
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    pub fn parts(&self) -> &[u8] {
        &self.a[..self.n as usize]
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.parts().iter().map(|&v| v as usize).sum()
    }

    /// `β ≤ α` componentwise.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.parts().iter().zip(other.parts()).all(|(a, b)| a <= b)
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        let mut m = *self;
        for i in 0..self.dim() {
            m.a[i] -= other.a[i];
        }
        m
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut m = *self;
        for i in 0..self.dim() {
            m.a[i] += other.a[i];
        }
        m
    }

    /// `α!`.
    pub fn factorial(&self) -> f64 {
        self.parts().iter().map(|&v| factorial(v as usize)).product()
    }

    /// `C(α, β) = α! / (β! (α − β)!)`.
    pub fn binom(&self, beta: &MultiIndex) -> f64 {
        self.parts()
            .iter()
            .zip(beta.parts())
            .map(|(&a, &b)| binom(a as usize, b as usize))
            .product()
    }

    /// Comma separated form used in the jet file format, e.g. `"2,0"`.
    pub fn key(&self) -> String {
        self.parts()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_key(s: &str) -> Option<MultiIndex> {
        let parts: Option<Vec<u8>> = s.split(',').map(|t| t.trim().parse().ok()).collect();
        let parts = parts?;
        if parts.is_empty() || parts.len() > MAX_DIM {
            return None;
        }
        Some(MultiIndex::new(&parts))
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub fn binom(a: usize, b: usize) -> f64 {
    if b > a {
        return 0.0;
    }
    factorial(a) / (factorial(b) * factorial(a - b))
}

/// All multi-indices of length `n` with `|α| ≤ order`, graded, and within
/// one order in descending lexicographic order (`x` derivatives first).
#[derive(Debug)]
pub struct IndexTable {
    pub n: usize,
    pub order: usize,
    list: Vec<MultiIndex>,
    /// Position lookup over the dense box `{0..=order}^n`.
    dense: Vec<u16>,
    /// `leibniz[k]` lists `(β, α−β, C(α, β))` for `α = list[k]` and all `β ≤ α`.
    leibniz: Vec<Vec<(u16, u16, f64)>>,
}

impl IndexTable {
    fn build(n: usize, order: usize) -> IndexTable {
        let mut list = Vec::new();
        for k in 0..=order {
            let mut layer = Vec::new();
            enumerate(n, k, &mut Vec::new(), &mut layer);
            layer.sort_by(|a: &MultiIndex, b| b.cmp(a));
            list.extend(layer);
        }
        let side = order + 1;
        let mut dense = vec![u16::MAX; side.pow(n as u32)];
        for (k, a) in list.iter().enumerate() {
            dense[dense_pos(a, side)] = k as u16;
        }
        let mut table = IndexTable {
            n,
            order,
            list,
            dense,
            leibniz: Vec::new(),
        };
        table.leibniz = table
            .list
            .iter()
            .map(|a| {
                table
                    .list
                    .iter()
                    .filter(|&b| b.le(a))
                    .map(|b| {
                        (
                            table.index(b) as u16,
                            table.index(&a.sub(b)) as u16,
                            a.binom(b),
                        )
                    })
                    .collect()
            })
            .collect();
        table
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn list(&self) -> &[MultiIndex] {
        &self.list
    }

    pub fn get(&self, k: usize) -> MultiIndex {
        self.list[k]
    }

    /// Position of `α`; panics if `|α|` exceeds the table order.
    #[inline]
    pub fn index(&self, a: &MultiIndex) -> usize {
        self.try_index(a).expect("multi-index outside table")
    }

    #[inline]
    pub fn try_index(&self, a: &MultiIndex) -> Option<usize> {
        if a.dim() != self.n || a.order() > self.order {
            return None;
        }
        Some(self.dense[dense_pos(a, self.order + 1)] as usize)
    }

    /// Number of entries with `|α| ≤ k`.
    pub fn count_upto(&self, k: usize) -> usize {
        self.list.iter().take_while(|a| a.order() <= k).count()
    }

    pub fn leibniz(&self, k: usize) -> &[(u16, u16, f64)] {
        &self.leibniz[k]
    }

    /// `D^α (f g)` for every `α` from derivative tables of `f` and `g`.
    pub fn product(&self, f: &[f64], g: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(b, c, w) in &self.leibniz[k] {
                s += w * f[b as usize] * g[c as usize];
            }
            *o = s;
        }
    }

    /// `D^α (1/g)` for every `α`; `g` must not vanish.
    pub fn reciprocal(&self, g: &[f64], out: &mut [f64]) {
        let inv = 1.0 / g[0];
        out[0] = inv;
        for k in 1..self.len() {
            // 0 = Σ_{β ≤ α} C(α,β) D^β(1/g) D^{α−β} g
            let mut s = 0.0;
            for &(b, c, w) in &self.leibniz[k] {
                if b as usize != k {
                    s += w * out[b as usize] * g[c as usize];
                }
            }
            out[k] = -s * inv;
        }
    }
}

fn dense_pos(a: &MultiIndex, side: usize) -> usize {
    a.parts().iter().fold(0, |acc, &v| acc * side + v as usize)
}

fn enumerate(n: usize, k: usize, prefix: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
    if prefix.len() == n - 1 {
        prefix.push(k as u8);
        out.push(MultiIndex::new(prefix));
        prefix.pop();
        return;
    }
    for v in 0..=k {
        prefix.push(v as u8);
        enumerate(n, k - v, prefix, out);
        prefix.pop();
    }
}

/// Shared table for dimension `n ≤ 3` and order `≤ MAX_ORDER`.
pub fn table(n: usize, order: usize) -> &'static IndexTable {
    static TABLES: OnceLock<Vec<IndexTable>> = OnceLock::new();
    assert!((1..=MAX_DIM).contains(&n) && order <= MAX_ORDER);
    let all = TABLES.get_or_init(|| {
        let mut v = Vec::new();
        for n in 1..=MAX_DIM {
            for order in 0..=MAX_ORDER {
                v.push(IndexTable::build(n, order));
            }
        }
        v
    });
    &all[(n - 1) * (MAX_ORDER + 1) + order]
}
