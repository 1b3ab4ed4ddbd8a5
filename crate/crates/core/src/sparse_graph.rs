//! The graph on `E` induced by the projector, its sparsity certificates and
//! the edge seminorm.
//!
//! Two points are joined when they are centers of contacting lacunae. Every
//! edge carries a small cube inside a witness Whitney cube; these cubes are
//! pairwise disjoint, which makes the edge family a sparse family of pairs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Point, MAX_DIM};
use crate::jets::JetField;
use crate::lacunae::Lacunae;
use crate::whitney::WhitneyCover;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    /// Whitney cube the certificate lives in.
    pub witness: u32,
    pub cert: Cube,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseGraph {
    pub vertices: usize,
    pub edges: Vec<Edge>,
    /// Number of parts per axis the witness cubes were split into.
    pub split: usize,
    #[serde(skip)]
    adjacency: Vec<Vec<(u32, u32)>>,
}

impl SparseGraph {
    /// Graph with the given edges and no splitting of witness cubes.
    pub fn from_edges(vertices: usize, edges: Vec<Edge>) -> Result<SparseGraph> {
        let mut adjacency = vec![Vec::new(); vertices];
        for (i, e) in edges.iter().enumerate() {
            let (u, v) = (e.u as usize, e.v as usize);
            if u >= vertices || v >= vertices || u == v {
                return Err(Error::Config(format!("bad edge ({u}, {v}) on {vertices} vertices")));
            }
            adjacency[u].push((e.v, i as u32));
            adjacency[v].push((e.u, i as u32));
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(SparseGraph {
            vertices,
            edges,
            split: 1,
            adjacency,
        })
    }

    /// `(neighbour, edge index)` pairs of vertex `x`, ascending.
    pub fn neighbours(&self, x: usize) -> &[(u32, u32)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of connected components (union-find).
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let mut count = self.vertices;
        for e in &self.edges {
            let a = find(&mut parent, e.u as usize);
            let b = find(&mut parent, e.v as usize);
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() <= 1
    }

    /// Graph distances from `src` with uniform-norm edge lengths.
    pub fn distances_from(&self, points: &[Point], src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertices];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, x)) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(y, _) in &self.adjacency[x] {
                let y = y as usize;
                let nd = d + points[x].dist(&points[y]);
                if nd < dist[y] {
                    dist[y] = nd;
                    heap.push(HeapItem(nd, y));
                }
            }
        }
        dist
    }

    /// `max d_Γ(x, y) / ‖x − y‖` over all pairs.
    pub fn stretch(&self, points: &[Point]) -> f64 {
        let mut s: f64 = 1.0;
        for x in 0..self.vertices {
            let d = self.distances_from(points, x);
            for y in x + 1..self.vertices {
                s = s.max(d[y] / points[x].dist(&points[y]));
            }
        }
        s
    }
}

#[derive(PartialEq)]
pub(crate) struct HeapItem(pub(crate) f64, pub(crate) usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Builds the graph from contacting lacunae with distinct centers.
pub fn build_graph(cover: &WhitneyCover, lac: &Lacunae) -> SparseGraph {
    let n = cover.dim();
    let mut first: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for c in lac.contacts() {
        let a = lac.get(c.a as usize).center;
        let b = lac.get(c.b as usize).center;
        if a == b {
            continue;
        }
        first.entry((a.min(b), a.max(b))).or_insert(c.qa);
    }
    let mut per_cube: BTreeMap<u32, usize> = BTreeMap::new();
    for &q in first.values() {
        *per_cube.entry(q).or_insert(0) += 1;
    }
    let split = per_cube.values().copied().max().unwrap_or(1);
    let mut slot: BTreeMap<u32, usize> = BTreeMap::new();
    let mut edges = Vec::with_capacity(first.len());
    for ((u, v), q) in first {
        let k = slot.entry(q).or_insert(0);
        let cert = subcell(&cover.cube(q as usize).cube, split, *k, n).dilate(0.5);
        *k += 1;
        edges.push(Edge {
            u,
            v,
            witness: q,
            cert,
        });
    }
    let mut adjacency = vec![Vec::new(); cover.points().len()];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.u as usize].push((e.v, i as u32));
        adjacency[e.v as usize].push((e.u, i as u32));
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    SparseGraph {
        vertices: cover.points().len(),
        edges,
        split,
        adjacency,
    }
}

/// The `k`-th cell, in lexicographic order, of `q` split into `s^n` parts.
fn subcell(q: &Cube, s: usize, k: usize, n: usize) -> Cube {
    let r = q.r / s as f64;
    let mut c = q.center;
    let mut rest = k;
    let mut digits = [0usize; MAX_DIM];
    for i in (0..n).rev() {
        digits[i] = rest % s;
        rest /= s;
    }
    for (i, v) in c.coords_mut().iter_mut().enumerate() {
        *v = *v - q.r + (2 * digits[i] + 1) as f64 * r;
    }
    Cube { center: c, r }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparsityReport {
    pub edges: usize,
    pub split: usize,
    /// Edges whose endpoints are not both in `γ K`.
    pub containment_violations: usize,
    /// Edges with `diam K > γ ‖u − v‖`.
    pub size_violations: usize,
    /// Pairs of intersecting certificates.
    pub overlaps: usize,
    /// Smallest `γ` the certificates satisfy.
    pub certified_gamma: f64,
    pub max_degree: usize,
    pub components: usize,
}

impl SparsityReport {
    pub fn violations(&self) -> usize {
        self.containment_violations + self.size_violations + self.overlaps
    }
}

/// Checks the certificates against the sparsity constant `gamma`.
pub fn verify_sparse(g: &SparseGraph, points: &[Point], gamma: f64) -> SparsityReport {
    let mut rep = SparsityReport {
        edges: g.edges.len(),
        split: g.split,
        max_degree: g.max_degree(),
        components: g.components(),
        ..Default::default()
    };
    for e in &g.edges {
        let (u, v) = (&points[e.u as usize], &points[e.v as usize]);
        let k = &e.cert;
        let reach = k.center.dist(u).max(k.center.dist(v)) / k.r;
        let size = k.diam() / u.dist(v);
        rep.certified_gamma = rep.certified_gamma.max(reach).max(size);
        if reach > gamma {
            rep.containment_violations += 1;
        }
        if size > gamma {
            rep.size_violations += 1;
        }
    }
    // Sweep along the first axis.
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_by(|&a, &b| g.edges[a].cert.lower(0).total_cmp(&g.edges[b].cert.lower(0)));
    for (s, &a) in order.iter().enumerate() {
        let ca = &g.edges[a].cert;
        for &b in &order[s + 1..] {
            let cb = &g.edges[b].cert;
            if cb.lower(0) > ca.upper(0) {
                break;
            }
            if ca.intersects(cb) {
                rep.overlaps += 1;
            }
        }
    }
    rep
}

/// Edge term for the ordered pair `(x, y)`:
/// `Σ_{|α| ≤ m−1} |D^α P_x(x) − D^α P_y(x)|^p / ‖x − y‖^{(m−|α|)p − n}`,
/// or for `p = ∞` the sum of `|D^α P_x(x) − D^α P_y(x)| / ‖x − y‖^{m−|α|}`.
pub fn pair_term(field: &JetField, x: usize, y: usize, p: f64) -> f64 {
    let px = field.point_jet(x);
    let py = field.jet(y);
    let xp = &field.points()[x];
    let d = xp.dist(&field.points()[y]);
    let n = field.dim() as f64;
    let m = field.m;
    let t = py.table();
    let mut other = vec![0.0; t.len()];
    py.derivs_at(xp, &mut other);
    let mut s = 0.0;
    for (k, a) in t.list().iter().enumerate() {
        let diff = (px[k] - other[k]).abs();
        let order = (m - a.order()) as f64;
        if p.is_infinite() {
            s += diff / d.powf(order);
        } else {
            s += diff.powf(p) / d.powf(order * p - n);
        }
    }
    s
}

/// Symmetrised edge term: the larger of the two orientations.
pub fn edge_term(field: &JetField, x: usize, y: usize, p: f64) -> f64 {
    pair_term(field, x, y, p).max(pair_term(field, y, x, p))
}

/// `(Σ_{edges} term)^{1/p}`, or the maximal term for `p = ∞`.
pub fn graph_seminorm(g: &SparseGraph, field: &JetField, p: f64) -> Result<f64> {
    if g.vertices != field.len() {
        return Err(Error::Config(format!(
            "graph has {} vertices, field has {} points",
            g.vertices,
            field.len()
        )));
    }
    if !(p > field.dim() as f64) {
        return Err(Error::Config(format!("p = {p} must exceed n = {}", field.dim())));
    }
    if p.is_infinite() {
        return Ok(g
            .edges
            .iter()
            .map(|e| edge_term(field, e.u as usize, e.v as usize, p))
            .fold(0.0, f64::max));
    }
    let s: f64 = g
        .edges
        .iter()
        .map(|e| edge_term(field, e.u as usize, e.v as usize, p))
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Graph distance between two vertices.
pub fn graph_geodesic(g: &SparseGraph, points: &[Point], x: usize, y: usize) -> f64 {
    g.distances_from(points, x)[y]
}
