//! Elementary cubical complexes of dimension at most two, generated by a set of
//! full-dimensional unit boxes in `Z^n`.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Largest supported lattice dimension (`2d` with `d <= 4`).
pub const MAX_AMBIENT: usize = 8;

const COORD_BITS: u32 = 14;
const COORD_BIAS: i32 = 1 << (COORD_BITS - 1);
const COORD_MASK: u128 = (1 << COORD_BITS) - 1;
const MASK_SHIFT: u32 = COORD_BITS * MAX_AMBIENT as u32;

/// A lattice point in `Z^n`, padded with zeros up to [`MAX_AMBIENT`].
pub type Corner = [i32; MAX_AMBIENT];

/// An elementary cube: the product over coordinates of either `{c_i}` or
/// `[c_i, c_i + 1]`, the latter whenever bit `i` of `mask` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub corner: Corner,
    pub mask: u8,
}

impl Cube {
    pub fn vertex(corner: Corner) -> Self {
        Cube { corner, mask: 0 }
    }

    pub fn dim(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Whether `self` is a face of the unit box with minimal corner `b`.
    pub fn is_face_of_box(&self, b: &Corner, ambient: usize) -> bool {
        (0..ambient).all(|i| {
            let lo = self.corner[i];
            let hi = lo + i32::from(self.mask >> i & 1);
            lo >= b[i] && hi <= b[i] + 1
        })
    }

    pub(crate) fn key(&self) -> u128 {
        let mut k = u128::from(self.mask) << MASK_SHIFT;
        for (i, &c) in self.corner.iter().enumerate() {
            k |= ((c + COORD_BIAS) as u128 & COORD_MASK) << (COORD_BITS * i as u32);
        }
        k
    }
}

pub(crate) fn check_corner(c: &Corner) -> Result<()> {
    // Leave one unit of slack for the upper faces of the box.
    if c.iter().any(|&v| v <= -COORD_BIAS || v >= COORD_BIAS - 1) {
        return Err(Error::invalid(format!(
            "lattice coordinate out of range (|c| < {}): {c:?}",
            COORD_BIAS - 1
        )));
    }
    Ok(())
}

/// Cells of dimension 0, 1 and 2 with their boundary incidences. Cells are
/// numbered in order of first appearance while walking the generating boxes.
#[derive(Clone, Debug)]
pub struct CubicalComplex {
    ambient: usize,
    boxes: Vec<Corner>,
    vertices: Vec<Cube>,
    edges: Vec<Cube>,
    squares: Vec<Cube>,
    vertex_index: FxHashMap<u128, u32>,
    edge_index: FxHashMap<u128, u32>,
    edge_bounds: Vec<[u32; 2]>,
    square_bounds: Vec<[u32; 4]>,
}

fn with_bits(corner: &Corner, bits: u32, ambient: usize) -> Corner {
    let mut c = *corner;
    for (i, v) in c.iter_mut().enumerate().take(ambient) {
        *v += (bits >> i & 1) as i32;
    }
    c
}

impl CubicalComplex {
    /// Build the 2-skeleton of the union of the unit boxes `[b, b + 1]` in `Z^ambient`.
    /// Duplicate boxes are ignored; the boxes are processed in sorted order.
    pub fn from_boxes(ambient: usize, boxes: &[Corner]) -> Result<Self> {
        if ambient == 0 || ambient > MAX_AMBIENT {
            return Err(Error::invalid(format!("lattice dimension must be in 1..={MAX_AMBIENT}")));
        }
        let mut sorted = boxes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for b in &sorted {
            check_corner(b)?;
            if b[ambient..].iter().any(|&v| v != 0) {
                return Err(Error::invalid("box corner has nonzero padding coordinates"));
            }
        }
        let mut cx = CubicalComplex {
            ambient,
            boxes: sorted,
            vertices: Vec::new(),
            edges: Vec::new(),
            squares: Vec::new(),
            vertex_index: FxHashMap::default(),
            edge_index: FxHashMap::default(),
            edge_bounds: Vec::new(),
            square_bounds: Vec::new(),
        };
        let mut square_seen: FxHashMap<u128, ()> = FxHashMap::default();
        let full = 1u32 << ambient;
        for bi in 0..cx.boxes.len() {
            let b = cx.boxes[bi];
            for bits in 0..full {
                cx.insert_vertex(with_bits(&b, bits, ambient));
            }
            for i in 0..ambient {
                for bits in 0..full {
                    if bits >> i & 1 == 1 {
                        continue;
                    }
                    cx.insert_edge(with_bits(&b, bits, ambient), i);
                }
            }
            for i in 0..ambient {
                for j in i + 1..ambient {
                    for bits in 0..full {
                        if bits >> i & 1 == 1 || bits >> j & 1 == 1 {
                            continue;
                        }
                        let z = with_bits(&b, bits, ambient);
                        let sq = Cube { corner: z, mask: (1 << i | 1 << j) as u8 };
                        if square_seen.insert(sq.key(), ()).is_some() {
                            continue;
                        }
                        let mut zi = z;
                        zi[i] += 1;
                        let mut zj = z;
                        zj[j] += 1;
                        let bound = [
                            cx.edge_id(&z, i).expect("edge of inserted box"),
                            cx.edge_id(&zj, i).expect("edge of inserted box"),
                            cx.edge_id(&z, j).expect("edge of inserted box"),
                            cx.edge_id(&zi, j).expect("edge of inserted box"),
                        ];
                        cx.squares.push(sq);
                        cx.square_bounds.push(bound);
                    }
                }
            }
        }
        Ok(cx)
    }

    fn insert_vertex(&mut self, c: Corner) -> u32 {
        let key = Cube::vertex(c).key();
        let next = self.vertices.len() as u32;
        let id = *self.vertex_index.entry(key).or_insert(next);
        if id == next {
            self.vertices.push(Cube::vertex(c));
        }
        id
    }

    fn insert_edge(&mut self, z: Corner, dir: usize) {
        let cube = Cube { corner: z, mask: 1 << dir };
        let next = self.edges.len() as u32;
        let id = *self.edge_index.entry(cube.key()).or_insert(next);
        if id == next {
            let mut w = z;
            w[dir] += 1;
            let a = self.vertex_id(&z).expect("vertex of inserted box");
            let b = self.vertex_id(&w).expect("vertex of inserted box");
            self.edges.push(cube);
            self.edge_bounds.push([a, b]);
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn boxes(&self) -> &[Corner] {
        &self.boxes
    }

    pub fn vertices(&self) -> &[Cube] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Cube] {
        &self.edges
    }

    pub fn squares(&self) -> &[Cube] {
        &self.squares
    }

    pub fn edge_bounds(&self) -> &[[u32; 2]] {
        &self.edge_bounds
    }

    pub fn square_bounds(&self) -> &[[u32; 4]] {
        &self.square_bounds
    }

    /// Cell counts by dimension.
    pub fn counts(&self) -> [usize; 3] {
        [self.vertices.len(), self.edges.len(), self.squares.len()]
    }

    pub fn vertex_id(&self, c: &Corner) -> Option<u32> {
        self.vertex_index.get(&Cube::vertex(*c).key()).copied()
    }

    /// Id of the edge from `z` to `z + e_dir`.
    pub fn edge_id(&self, z: &Corner, dir: usize) -> Option<u32> {
        self.edge_index.get(&Cube { corner: *z, mask: 1 << dir }.key()).copied()
    }

    /// Boundary of a 1-chain given as a list of edge ids (with multiplicity mod 2),
    /// returned as sorted vertex ids with odd incidence.
    pub fn boundary1(&self, chain: &[u32]) -> Vec<u32> {
        let mut verts: Vec<u32> = chain
            .iter()
            .flat_map(|&e| self.edge_bounds[e as usize])
            .collect();
        odd_multiplicity(&mut verts)
    }

    /// Boundary of a 2-chain, as sorted edge ids with odd incidence.
    pub fn boundary2(&self, chain: &[u32]) -> Vec<u32> {
        let mut edges: Vec<u32> = chain
            .iter()
            .flat_map(|&s| self.square_bounds[s as usize])
            .collect();
        odd_multiplicity(&mut edges)
    }
}

/// Sort and keep the ids that occur an odd number of times.
pub(crate) fn odd_multiplicity(ids: &mut Vec<u32>) -> Vec<u32> {
    ids.sort_unstable();
    let mut out = Vec::with_capacity(ids.len());
    let mut i = 0;
    while i < ids.len() {
        let mut j = i;
        while j < ids.len() && ids[j] == ids[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(ids[i]);
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(c: &[i32]) -> Corner {
        let mut out = [0; MAX_AMBIENT];
        out[..c.len()].copy_from_slice(c);
        out
    }

    #[test]
    fn single_box_counts() {
        for n in 1..=MAX_AMBIENT {
            let cx = CubicalComplex::from_boxes(n, &[corner(&[])]).unwrap();
            let two_n = 1usize << n;
            let [v, e, s] = cx.counts();
            assert_eq!(v, two_n);
            assert_eq!(e, n * two_n / 2);
            assert_eq!(s, n * (n - 1) / 2 * two_n / 4);
        }
    }

    #[test]
    fn shared_faces_are_identified() {
        // Two unit squares sharing an edge: 6 vertices, 7 edges, 2 squares.
        let cx = CubicalComplex::from_boxes(2, &[corner(&[0, 0]), corner(&[1, 0])]).unwrap();
        assert_eq!(cx.counts(), [6, 7, 2]);
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let boxes = [corner(&[0, 0, 0, 0]), corner(&[1, 0, 0, -1]), corner(&[0, 1, 1, 0])];
        let cx = CubicalComplex::from_boxes(4, &boxes).unwrap();
        for s in 0..cx.squares().len() as u32 {
            assert!(cx.boundary1(&cx.boundary2(&[s])).is_empty());
        }
    }

    #[test]
    fn every_cell_is_a_face_of_a_box() {
        let boxes = [corner(&[0, 0, 0]), corner(&[1, 1, 0]), corner(&[-1, 0, 2])];
        let cx = CubicalComplex::from_boxes(3, &boxes).unwrap();
        for cell in cx.vertices().iter().chain(cx.edges()).chain(cx.squares()) {
            assert!(cx.boxes().iter().any(|b| cell.is_face_of_box(b, 3)));
        }
    }

    #[test]
    fn key_is_injective_on_nearby_cells() {
        let mut keys = std::collections::HashSet::new();
        for a in -3..3 {
            for b in -3..3 {
                for mask in 0..4u8 {
                    let c = Cube { corner: corner(&[a, b]), mask };
                    assert!(keys.insert(c.key()));
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(CubicalComplex::from_boxes(2, &[corner(&[100_000, 0])]).is_err());
        assert!(CubicalComplex::from_boxes(9, &[]).is_err());
    }
}
