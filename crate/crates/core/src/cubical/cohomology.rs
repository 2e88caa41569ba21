//! Degree-one cohomology over F2 in a spanning-tree gauge.
//!
//! Every cocycle is cohomologous to exactly one cocycle vanishing on a fixed
//! spanning forest of the 1-skeleton. Restricted to the remaining edges, the
//! cocycle condition is one sparse linear relation per square, so
//! `b1 = #non-tree edges - rank(relations)` and the free variables of the
//! eliminated system give a basis of `H^1`.

use super::complex::{odd_multiplicity, CubicalComplex};
use crate::gf2::{words_for, xor_sorted, BitVec};

/// A basis `alpha_1, ..., alpha_b` of `H^1`, stored edge-major: for each edge
/// the bits `alpha_j(e)` packed into `stride` words.
#[derive(Clone, Debug)]
pub struct CocycleBasis {
    b1: usize,
    stride: usize,
    edge_bits: Vec<u64>,
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb) as usize] = ra.min(rb);
        true
    }
}

impl CocycleBasis {
    pub fn compute(cx: &CubicalComplex) -> Self {
        let n_edges = cx.edges().len();
        let mut forest = DisjointSets::new(cx.vertices().len());
        // var[e] = index of edge e among the non-tree edges.
        let mut var = vec![u32::MAX; n_edges];
        let mut var_edge = Vec::new();
        for (e, &[a, b]) in cx.edge_bounds().iter().enumerate() {
            if !forest.union(a, b) {
                var[e] = var_edge.len() as u32;
                var_edge.push(e as u32);
            }
        }
        let m = var_edge.len();

        // Eliminate with the largest variable of each relation as its pivot.
        let mut pivot_row: Vec<u32> = vec![u32::MAX; m];
        let mut rows: Vec<Vec<u32>> = Vec::new();
        let mut cur = Vec::with_capacity(8);
        let mut tmp = Vec::new();
        for bound in cx.square_bounds() {
            cur.clear();
            cur.extend(bound.iter().map(|&e| var[e as usize]).filter(|&v| v != u32::MAX));
            cur = odd_multiplicity(&mut cur);
            while let Some(&low) = cur.last() {
                let r = pivot_row[low as usize];
                if r == u32::MAX {
                    break;
                }
                xor_sorted(&cur, &rows[r as usize], &mut tmp);
                std::mem::swap(&mut cur, &mut tmp);
            }
            if let Some(&low) = cur.last() {
                pivot_row[low as usize] = rows.len() as u32;
                rows.push(cur.clone());
            }
        }

        let b1 = m - rows.len();
        let stride = words_for(b1).max(1);
        // Value of each variable as a vector in F2^{b1}; free variables are unit vectors.
        let mut val = vec![0u64; m * stride];
        let mut next_free = 0;
        for v in 0..m {
            let r = pivot_row[v];
            if r == u32::MAX {
                val[v * stride + next_free / 64] |= 1 << (next_free % 64);
                next_free += 1;
            } else {
                for &u in &rows[r as usize] {
                    if u as usize == v {
                        continue;
                    }
                    for w in 0..stride {
                        val[v * stride + w] ^= val[u as usize * stride + w];
                    }
                }
            }
        }
        debug_assert_eq!(next_free, b1);

        let mut edge_bits = vec![0u64; n_edges * stride];
        for (v, &e) in var_edge.iter().enumerate() {
            edge_bits[e as usize * stride..(e as usize + 1) * stride]
                .copy_from_slice(&val[v * stride..(v + 1) * stride]);
        }
        let basis = CocycleBasis { b1, stride, edge_bits };
        basis.assert_cocycles(cx);
        basis
    }

    /// Check `delta alpha_j = 0` on every square for every basis element.
    fn assert_cocycles(&self, cx: &CubicalComplex) {
        let mut acc = vec![0u64; self.stride];
        for bound in cx.square_bounds() {
            acc.iter_mut().for_each(|w| *w = 0);
            for &e in bound {
                for (a, b) in acc.iter_mut().zip(self.edge_word(e)) {
                    *a ^= b;
                }
            }
            assert!(acc.iter().all(|&w| w == 0), "cocycle condition violated");
        }
    }

    pub fn b1(&self) -> usize {
        self.b1
    }

    pub(crate) fn edge_word(&self, e: u32) -> &[u64] {
        &self.edge_bits[e as usize * self.stride..(e as usize + 1) * self.stride]
    }

    /// The values `(alpha_1(e), ..., alpha_b(e))`.
    pub fn edge_values(&self, e: u32) -> BitVec {
        BitVec::from_words(self.edge_word(e).to_vec(), self.b1)
    }

    /// `alpha_j` as an indicator vector over all edges.
    pub fn cocycle(&self, j: usize) -> BitVec {
        let n_edges = self.edge_bits.len() / self.stride;
        let mut out = BitVec::zeros(n_edges);
        for e in 0..n_edges {
            if self.edge_bits[e * self.stride + j / 64] >> (j % 64) & 1 == 1 {
                out.set(e, true);
            }
        }
        out
    }

    /// Support of `alpha_j` as sorted edge ids.
    pub fn cocycle_support(&self, j: usize) -> Vec<u32> {
        self.cocycle(j).ones().map(|e| e as u32).collect()
    }

    /// The pairings `(<alpha_1, z>, ..., <alpha_b, z>)` of a 1-chain.
    pub fn pair_chain(&self, chain: &[u32]) -> BitVec {
        let mut acc = vec![0u64; self.stride];
        for &e in chain {
            for (a, b) in acc.iter_mut().zip(self.edge_word(e)) {
                *a ^= b;
            }
        }
        BitVec::from_words(acc, self.b1)
    }
}
