//! The cubical comparison space: a union of boxes in the l-infinity unit
//! tangent bundle covering a lifted time series, together with a basis of its
//! first cohomology and the chain-level map from data cycles into it.
//!
//! A box `Q(p, q)` is the product of `r [p_i - 1/2, p_i + 1/2]` over the state
//! coordinates and `(1/k) [q_i - 1/2, q_i + 1/2]` over the tangent coordinates,
//! with `|q|_inf = k`. After scaling by `1/r` and `k` and shifting by `+1/2`
//! it becomes the elementary unit box with minimal corner `(p, q)` in `Z^{2d}`.

mod cohomology;
mod complex;

use serde::{Deserialize, Serialize};

pub use cohomology::CocycleBasis;
pub use complex::{Corner, Cube, CubicalComplex, MAX_AMBIENT};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::systems::LiftedSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Space box size `r`.
    pub r: f64,
    /// Sphere subdivision `k`; sphere boxes have side `1/k`.
    pub k: u32,
    /// State dimension `d`.
    pub dim: usize,
}

impl GridParams {
    pub fn new(r: f64, k: u32, dim: usize) -> Result<Self> {
        let g = GridParams { r, k, dim };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("space box size must be positive, got {}", self.r)));
        }
        if self.k == 0 {
            return Err(Error::invalid("sphere subdivision must be at least 1"));
        }
        if self.dim == 0 || 2 * self.dim > MAX_AMBIENT {
            return Err(Error::invalid(format!("state dimension must be in 1..=4, got {}", self.dim)));
        }
        Ok(())
    }

    /// Default tangent weight `C = r k` of the metric on the tangent bundle.
    pub fn default_c(&self) -> f64 {
        self.r * self.k as f64
    }
}

/// Lattice coordinates `(p, q)` of a box, stored as its minimal corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxId {
    dim: u8,
    corner: Corner,
}

impl BoxId {
    pub fn new(p: &[i32], q: &[i32]) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
        }
        let d = p.len();
        if d == 0 || 2 * d > MAX_AMBIENT {
            return Err(Error::invalid(format!("state dimension must be in 1..=4, got {d}")));
        }
        let mut corner = [0; MAX_AMBIENT];
        corner[..d].copy_from_slice(p);
        corner[d..2 * d].copy_from_slice(q);
        Ok(BoxId { dim: d as u8, corner })
    }

    fn from_corner(dim: usize, corner: Corner) -> Self {
        BoxId { dim: dim as u8, corner }
    }

    pub fn p(&self) -> &[i32] {
        &self.corner[..self.dim as usize]
    }

    pub fn q(&self) -> &[i32] {
        &self.corner[self.dim as usize..2 * self.dim as usize]
    }

    /// The anchor vertex: minimal corner in the shifted lattice.
    pub fn corner(&self) -> &Corner {
        &self.corner
    }

    fn coords(&self) -> &[i32] {
        &self.corner[..2 * self.dim as usize]
    }

    /// Whether the closed boxes meet, i.e. all lattice coordinates differ by at most one.
    pub fn is_adjacent(&self, other: &BoxId) -> bool {
        self.dim == other.dim
            && self.coords().iter().zip(other.coords()).all(|(a, b)| (a - b).abs() <= 1)
    }
}

impl std::fmt::Display for BoxId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p={:?} q={:?}", self.p(), self.q())
    }
}

/// Nearest integer with ties rounded up, so that inputs at most one apart
/// always land at most one apart.
fn round_half_up(t: f64) -> i32 {
    (t + 0.5).floor() as i32
}

/// The box containing the tangent bundle point `(x, v)`. The tangent is
/// projected radially onto the l-infinity sphere; the coordinates attaining
/// the maximum are set to `+-k` exactly.
pub fn locate_box(x: &[f64], v: &[f64], g: &GridParams) -> BoxId {
    let d = g.dim;
    let k = g.k as f64;
    let vmax = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let mut corner = [0; MAX_AMBIENT];
    for i in 0..d {
        corner[i] = round_half_up(x[i] / g.r);
        let qi = if v[i].abs() == vmax {
            if v[i] > 0.0 {
                g.k as i32
            } else {
                -(g.k as i32)
            }
        } else {
            round_half_up(k * v[i] / vmax).clamp(-(g.k as i32), g.k as i32)
        };
        corner[d + i] = qi;
    }
    BoxId::from_corner(d, corner)
}

/// A cubical 1-chain over F2: sorted, duplicate-free edge ids.
pub type Chain = Vec<u32>;

/// How to map a data edge whose endpoint boxes do not touch.
///
/// Two tangents at distance `<= 1/k` can land in sphere boxes two steps apart
/// after projection onto the l-infinity sphere, so a small fraction of short
/// edges joins non-adjacent boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoutePolicy {
    /// Fail with [`Error::EdgeTooLong`].
    Strict,
    /// Pass through a shortest chain of adjacent hit boxes inside the lattice
    /// hull of the two endpoints; fail only if there is none.
    #[default]
    Bridge,
}

#[derive(Clone, Debug)]
pub struct ComparisonSpace {
    grid: GridParams,
    complex: CubicalComplex,
    cocycles: CocycleBasis,
    policy: RoutePolicy,
}

impl ComparisonSpace {
    /// Cover the lifted series by the boxes it hits and compute `H^1` of the union.
    pub fn build(series: &LiftedSeries, grid: GridParams) -> Result<Self> {
        grid.validate()?;
        if series.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, found: series.dim() });
        }
        if series.is_empty() {
            return Err(Error::invalid("cannot build a comparison space from an empty series"));
        }
        let boxes: Vec<BoxId> = (0..series.len())
            .map(|i| locate_box(series.point(i), series.tangent(i), &grid))
            .collect();
        Self::from_boxes(grid, &boxes)
    }

    pub fn from_boxes(grid: GridParams, boxes: &[BoxId]) -> Result<Self> {
        grid.validate()?;
        let corners: Vec<Corner> = boxes
            .iter()
            .map(|b| {
                if b.dim as usize != grid.dim {
                    return Err(Error::DimensionMismatch { expected: grid.dim, found: b.dim as usize });
                }
                Ok(b.corner)
            })
            .collect::<Result<_>>()?;
        let complex = CubicalComplex::from_boxes(2 * grid.dim, &corners)?;
        let cocycles = CocycleBasis::compute(&complex);
        Ok(ComparisonSpace { grid, complex, cocycles, policy: RoutePolicy::default() })
    }

    pub fn with_policy(mut self, policy: RoutePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> RoutePolicy {
        self.policy
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn complex(&self) -> &CubicalComplex {
        &self.complex
    }

    pub fn cocycles(&self) -> &CocycleBasis {
        &self.cocycles
    }

    pub fn b1(&self) -> usize {
        self.cocycles.b1()
    }

    pub fn boxes(&self) -> impl Iterator<Item = BoxId> + '_ {
        self.complex.boxes().iter().map(|c| BoxId::from_corner(self.grid.dim, *c))
    }

    pub fn n_boxes(&self) -> usize {
        self.complex.boxes().len()
    }

    pub fn contains_box(&self, b: &BoxId) -> bool {
        b.dim as usize == self.grid.dim && self.complex.boxes().binary_search(&b.corner).is_ok()
    }

    pub fn locate(&self, x: &[f64], v: &[f64]) -> BoxId {
        locate_box(x, v, &self.grid)
    }

    /// Edge path from the anchor of `a` to the anchor of `b`: first raise the
    /// coordinates where `b` is higher (staying in faces of `a`), reaching the
    /// minimal corner of `a` and `b`'s intersection, then lower the coordinates
    /// where `b` is lower (staying in faces of `b`). Both phases go in
    /// increasing coordinate order. Non-adjacent boxes are handled according
    /// to the space's [`RoutePolicy`].
    pub fn route_edge(&self, a: &BoxId, b: &BoxId) -> Result<Chain> {
        let mut path = Vec::new();
        self.walk_path(a, b, |e| path.push(e))?;
        Ok(complex::odd_multiplicity(&mut path))
    }

    /// Sequence of pairwise adjacent hit boxes from `a` to `b`, both included.
    pub fn box_path(&self, a: &BoxId, b: &BoxId) -> Result<Vec<BoxId>> {
        for bx in [a, b] {
            if !self.contains_box(bx) {
                return Err(Error::OutsideSpace(bx.to_string()));
            }
        }
        if a.is_adjacent(b) {
            return Ok(if a == b { vec![*a] } else { vec![*a, *b] });
        }
        let too_long = || Error::EdgeTooLong { from: a.to_string(), to: b.to_string() };
        if self.policy == RoutePolicy::Strict || a.dim != b.dim {
            return Err(too_long());
        }
        self.bridge(a, b).ok_or_else(too_long)
    }

    /// Breadth-first search over hit boxes in the lattice hull of `a` and `b`.
    fn bridge(&self, a: &BoxId, b: &BoxId) -> Option<Vec<BoxId>> {
        let n = 2 * self.grid.dim;
        let lo: Vec<i32> = (0..n).map(|i| a.corner[i].min(b.corner[i])).collect();
        let hi: Vec<i32> = (0..n).map(|i| a.corner[i].max(b.corner[i])).collect();
        let total: usize = (0..n).map(|i| (hi[i] - lo[i] + 1) as usize).product();
        if total > 1 << 16 {
            return None;
        }
        let mut nodes = Vec::new();
        for mut idx in 0..total {
            let mut c = [0; MAX_AMBIENT];
            for i in 0..n {
                let w = (hi[i] - lo[i] + 1) as usize;
                c[i] = lo[i] + (idx % w) as i32;
                idx /= w;
            }
            let bx = BoxId::from_corner(self.grid.dim, c);
            if self.contains_box(&bx) {
                nodes.push(bx);
            }
        }
        nodes.sort_unstable();
        let start = nodes.binary_search(a).ok()?;
        let goal = nodes.binary_search(b).ok()?;
        let mut prev = vec![usize::MAX; nodes.len()];
        prev[start] = start;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                let mut path = vec![nodes[u]];
                let mut v = u;
                while v != start {
                    v = prev[v];
                    path.push(nodes[v]);
                }
                path.reverse();
                return Some(path);
            }
            for w in 0..nodes.len() {
                if prev[w] == usize::MAX && nodes[u].is_adjacent(&nodes[w]) {
                    prev[w] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    fn walk_path(&self, a: &BoxId, b: &BoxId, mut visit: impl FnMut(u32)) -> Result<()> {
        if a.is_adjacent(b) {
            return self.walk_route(a, b, visit);
        }
        let path = self.box_path(a, b)?;
        for w in path.windows(2) {
            self.walk_route(&w[0], &w[1], &mut visit)?;
        }
        Ok(())
    }

    /// Cocycle values of [`route_edge`](Self::route_edge) without materializing the path.
    pub fn route_pairing(&self, a: &BoxId, b: &BoxId) -> Result<BitVec> {
        let mut words = vec![0u64; crate::gf2::words_for(self.b1())];
        self.route_pairing_into(a, b, &mut words)?;
        Ok(BitVec::from_words(words, self.b1()))
    }

    /// XOR the cocycle values of the route from `a` to `b` into `out`
    /// (`ceil(b1 / 64)` words).
    pub fn route_pairing_into(&self, a: &BoxId, b: &BoxId, out: &mut [u64]) -> Result<()> {
        if a == b {
            return Ok(());
        }
        self.walk_path(a, b, |e| {
            for (w, x) in out.iter_mut().zip(self.cocycles.edge_word(e)) {
                *w ^= x;
            }
        })
    }

    fn walk_route(&self, a: &BoxId, b: &BoxId, mut visit: impl FnMut(u32)) -> Result<()> {
        for bx in [a, b] {
            if !self.contains_box(bx) {
                return Err(Error::OutsideSpace(bx.to_string()));
            }
        }
        if !a.is_adjacent(b) {
            return Err(Error::EdgeTooLong { from: a.to_string(), to: b.to_string() });
        }
        let n = 2 * self.grid.dim;
        let mut z = a.corner;
        let missing = |z: &Corner| Error::OutsideSpace(format!("edge at {:?}", &z[..n]));
        for i in 0..n {
            if b.corner[i] > a.corner[i] {
                visit(self.complex.edge_id(&z, i).ok_or_else(|| missing(&z))?);
                z[i] += 1;
            }
        }
        for i in 0..n {
            if b.corner[i] < a.corner[i] {
                z[i] -= 1;
                visit(self.complex.edge_id(&z, i).ok_or_else(|| missing(&z))?);
            }
        }
        Ok(())
    }

    /// Image of a data 1-cycle, given as the box pairs of its edges. The result
    /// is checked to have zero boundary.
    pub fn map_cycle<'a>(&self, edges: impl IntoIterator<Item = (&'a BoxId, &'a BoxId)>) -> Result<Chain> {
        let mut all = Vec::new();
        for (a, b) in edges {
            self.walk_path(a, b, |e| all.push(e))?;
        }
        let chain = complex::odd_multiplicity(&mut all);
        if !self.complex.boundary1(&chain).is_empty() {
            return Err(Error::invalid("mapped chain is not a cycle; input was not a data cycle"));
        }
        Ok(chain)
    }

    /// Map a cycle given by pairs of sample indices of `series`.
    pub fn map_data_cycle(&self, series: &LiftedSeries, edges: &[(usize, usize)]) -> Result<Chain> {
        let boxes: Vec<(BoxId, BoxId)> = edges
            .iter()
            .map(|&(u, w)| {
                (
                    self.locate(series.point(u), series.tangent(u)),
                    self.locate(series.point(w), series.tangent(w)),
                )
            })
            .collect();
        self.map_cycle(boxes.iter().map(|(a, b)| (a, b)))
    }

    /// `<alpha_j, z>`: parity of the overlap of the cocycle support with the chain.
    pub fn pair(&self, j: usize, z: &[u32]) -> bool {
        self.cocycles.pair_chain(z).get(j)
    }

    /// All pairings `(<alpha_1, z>, ..., <alpha_b, z>)`.
    pub fn pairing_vector(&self, z: &[u32]) -> BitVec {
        self.cocycles.pair_chain(z)
    }

    pub fn summary(&self) -> SpaceSummary {
        SpaceSummary {
            grid: self.grid,
            n_boxes: self.n_boxes(),
            cells: self.complex.counts(),
            b1: self.b1(),
            boxes: self.complex.boxes().iter().map(|c| c[..2 * self.grid.dim].to_vec()).collect(),
            cocycles: (0..self.b1()).map(|j| self.cocycles.cocycle_support(j)).collect(),
        }
    }

    /// Rebuild from a summary, checking that the recomputed cohomology basis matches.
    pub fn from_summary(s: &SpaceSummary) -> Result<Self> {
        let d = s.grid.dim;
        let boxes: Vec<BoxId> = s
            .boxes
            .iter()
            .map(|c| {
                if c.len() != 2 * d {
                    return Err(Error::DimensionMismatch { expected: 2 * d, found: c.len() });
                }
                BoxId::new(&c[..d], &c[d..])
            })
            .collect::<Result<_>>()?;
        let space = Self::from_boxes(s.grid, &boxes)?;
        if space.b1() != s.b1 || space.complex.counts() != s.cells {
            return Err(Error::Parse("space summary does not match its box list".into()));
        }
        for (j, stored) in s.cocycles.iter().enumerate() {
            if *stored != space.cocycles.cocycle_support(j) {
                return Err(Error::Parse(format!("cocycle {j} in space summary does not match")));
            }
        }
        Ok(space)
    }
}

/// Serializable description of a comparison space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub grid: GridParams,
    pub n_boxes: usize,
    /// Number of cells of dimension 0, 1, 2.
    pub cells: [usize; 3],
    pub b1: usize,
    /// Hit boxes as lattice coordinates `p ++ q`, sorted.
    pub boxes: Vec<Vec<i32>>,
    /// Support of each basis cocycle as edge ids.
    pub cocycles: Vec<Vec<u32>>,
}
