//! Vietoris–Rips persistence in degree one for segments of a lifted series,
//! with a representative cycle for every bar.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::xor_sorted;
use crate::systems::LiftedSeries;

/// `max(|p - q|_2, C |v - w|_2)`.
pub fn d_c(p: &[f64], v: &[f64], q: &[f64], w: &[f64], c: f64) -> f64 {
    let base = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if c == 0.0 {
        return base;
    }
    let tan = v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    base.max(c * tan)
}

/// `len` consecutive samples of a lifted series starting at `start`.
#[derive(Clone, Copy, Debug)]
pub struct SegmentView<'a> {
    series: &'a LiftedSeries,
    start: usize,
    len: usize,
}

impl<'a> SegmentView<'a> {
    pub fn new(series: &'a LiftedSeries, start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("segment length must be at least 1"));
        }
        if start.checked_add(len).is_none_or(|end| end > series.len()) {
            return Err(Error::SegmentTooLong { length: start.saturating_add(len), available: series.len() });
        }
        Ok(SegmentView { series, start, len })
    }

    pub fn series(&self) -> &'a LiftedSeries {
        self.series
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, i: usize) -> &'a [f64] {
        self.series.point(self.start + i)
    }

    pub fn tangent(&self, i: usize) -> &'a [f64] {
        self.series.tangent(self.start + i)
    }

    pub fn distance(&self, i: usize, j: usize, c: f64) -> f64 {
        d_c(self.point(i), self.tangent(i), self.point(j), self.tangent(j), c)
    }

    /// All pairs `(i, j, d)` with `i < j` and `d <= r_max`, sorted by value then indices.
    pub fn edges_within(&self, c: f64, r_max: f64) -> Vec<Edge> {
        let mut edges = Vec::new();
        for i in 0..self.len {
            for j in i + 1..self.len {
                let d = self.distance(i, j, c);
                if d <= r_max {
                    edges.push(Edge { u: i as u32, w: j as u32, value: d });
                }
            }
        }
        edges.sort_by(|a, b| a.value.total_cmp(&b.value).then((a.u, a.w).cmp(&(b.u, b.w))));
        edges
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub w: u32,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub vertices: [u32; 3],
    pub value: f64,
}

/// Vietoris–Rips filtration truncated at `r_max`, in deterministic order.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub n_vertices: usize,
    pub edges: Vec<Edge>,
    pub triangles: Vec<Triangle>,
    pub c: f64,
    pub r_max: f64,
}

pub fn build_filtration(seg: &SegmentView<'_>, c: f64, r_max: f64) -> Result<Filtration> {
    if !(r_max > 0.0) {
        return Err(Error::invalid(format!("filtration cutoff must be positive, got {r_max}")));
    }
    if !(c >= 0.0) {
        return Err(Error::invalid(format!("tangent weight must be nonnegative, got {c}")));
    }
    let n = seg.len();
    let edges = seg.edges_within(c, r_max);
    let words = n.div_ceil(64);
    let mut adj = vec![0u64; n * words];
    let mut value = std::collections::HashMap::with_capacity(edges.len());
    for e in &edges {
        let (u, w) = (e.u as usize, e.w as usize);
        adj[u * words + w / 64] |= 1 << (w % 64);
        adj[w * words + u / 64] |= 1 << (u % 64);
        value.insert((e.u, e.w), e.value);
    }
    let mut triangles = Vec::new();
    for e in &edges {
        let (u, w) = (e.u as usize, e.w as usize);
        // Third vertices above w keep each triangle counted once.
        for word in w / 64..words {
            let mut common = adj[u * words + word] & adj[w * words + word];
            if word == w / 64 {
                common &= u64::MAX.checked_shl(w as u32 % 64 + 1).unwrap_or(0);
            }
            while common != 0 {
                let x = (word * 64 + common.trailing_zeros() as usize) as u32;
                common &= common - 1;
                let v = e.value.max(value[&(e.u, x)]).max(value[&(e.w, x)]);
                triangles.push(Triangle { vertices: [e.u, e.w, x], value: v });
            }
        }
    }
    triangles.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.vertices.cmp(&b.vertices)));
    Ok(Filtration { n_vertices: n, edges, triangles, c, r_max })
}

fn inf_as_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn null_as_inf<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    /// `f64::INFINITY` when the class survives past the cutoff.
    #[serde(serialize_with = "inf_as_null", deserialize_with = "null_as_inf")]
    pub death: f64,
    /// Edges `(i, j)` of a cycle born at `birth`, as segment-local vertex indices.
    pub representative: Vec<(u32, u32)>,
}

impl Bar {
    pub fn is_alive(&self, r: f64) -> bool {
        self.birth <= r && r < self.death
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub start: usize,
    pub len: usize,
    pub c: f64,
    pub r_max: f64,
    pub bars: Vec<Bar>,
}

/// Persistent `H_1` of a filtration. Each edge closing a cycle starts a bar
/// whose representative is the edge plus the path joining its endpoints in
/// the spanning forest of earlier edges; triangles are reduced against these
/// edges to find deaths. Zero-length bars are dropped.
pub fn persist_h1(f: &Filtration) -> Barcode {
    let n = f.n_vertices;
    let m = f.edges.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut forest: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    let mut positive = Vec::new();
    for (idx, e) in f.edges.iter().enumerate() {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.w));
        if a == b {
            positive.push(idx);
        } else {
            parent[a.max(b) as usize] = a.min(b);
            forest[e.u as usize].push((e.w, idx as u32));
            forest[e.w as usize].push((e.u, idx as u32));
        }
    }

    let mut edge_index = std::collections::HashMap::with_capacity(m);
    for (idx, e) in f.edges.iter().enumerate() {
        edge_index.insert((e.u, e.w), idx as u32);
    }
    // Column reduction of the triangle boundaries; low = largest edge index.
    let mut owner: Vec<u32> = vec![u32::MAX; m];
    let mut reduced: Vec<Vec<u32>> = Vec::new();
    let mut death = vec![f64::INFINITY; m];
    let mut tmp = Vec::new();
    for t in &f.triangles {
        let [a, b, c] = t.vertices;
        let mut col = vec![edge_index[&(a, b)], edge_index[&(a, c)], edge_index[&(b, c)]];
        col.sort_unstable();
        while let Some(&low) = col.last() {
            let o = owner[low as usize];
            if o == u32::MAX {
                break;
            }
            xor_sorted(&col, &reduced[o as usize], &mut tmp);
            std::mem::swap(&mut col, &mut tmp);
        }
        if let Some(&low) = col.last() {
            owner[low as usize] = reduced.len() as u32;
            death[low as usize] = t.value;
            reduced.push(col);
        }
    }

    let mut bars = Vec::new();
    for &idx in &positive {
        let e = f.edges[idx];
        if death[idx] <= e.value {
            continue;
        }
        let mut rep = vec![(e.u, e.w)];
        for p in forest_path(&forest, e.u, e.w) {
            let pe = f.edges[p as usize];
            rep.push((pe.u, pe.w));
        }
        bars.push(Bar { birth: e.value, death: death[idx], representative: rep });
    }
    Barcode { start: 0, len: n, c: f.c, r_max: f.r_max, bars }
}

/// Edge ids on the unique forest path from `from` to `to`.
fn forest_path(forest: &[Vec<(u32, u32)>], from: u32, to: u32) -> Vec<u32> {
    let n = forest.len();
    let mut prev: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX); n];
    prev[from as usize] = (from, u32::MAX);
    let mut stack = vec![from];
    while let Some(x) = stack.pop() {
        if x == to {
            break;
        }
        for &(y, e) in &forest[x as usize] {
            if prev[y as usize].0 == u32::MAX {
                prev[y as usize] = (x, e);
                stack.push(y);
            }
        }
    }
    let mut path = Vec::new();
    let mut x = to;
    while x != from {
        let (p, e) = prev[x as usize];
        debug_assert_ne!(p, u32::MAX, "endpoints of a positive edge are connected");
        path.push(e);
        x = p;
    }
    path
}

/// Barcode of a segment: filtration up to `r_max` followed by reduction.
pub fn segment_barcode(seg: &SegmentView<'_>, c: f64, r_max: f64) -> Result<Barcode> {
    let f = build_filtration(seg, c, r_max)?;
    let mut b = persist_h1(&f);
    b.start = seg.start();
    Ok(b)
}

/// Bars with `birth <= r < death`.
pub fn bars_alive(b: &Barcode, r: f64) -> Result<Vec<&Bar>> {
    if r > b.r_max {
        return Err(Error::invalid(format!("radius {r} exceeds the filtration cutoff {}", b.r_max)));
    }
    Ok(b.bars.iter().filter(|bar| bar.is_alive(r)).collect())
}
