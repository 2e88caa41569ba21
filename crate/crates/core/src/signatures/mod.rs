//! Cycling signatures: the image of `H_1` of a segment's Rips complex in the
//! first homology of the comparison space, in coordinates dual to the cocycle
//! basis, read off at fixed evaluation radii.
//!
//! The image is spanned by the pairing vectors of any generating set of
//! 1-cycles of the Rips complex, because boundaries of Rips triangles map to
//! boundaries in the comparison space. The default method therefore uses the
//! fundamental cycles of a spanning forest grown edge by edge, which also
//! makes a radius sweep a single pass over the sorted edges. The barcode
//! method maps the representatives of the bars alive at the radius instead;
//! both give the same subspace.

use serde::{Deserialize, Serialize};

use crate::cubical::{BoxId, ComparisonSpace};
use crate::error::{Error, Result};
use crate::gf2::{words_for, BitVec, Gf2Subspace};
use crate::persistence::{bars_alive, segment_barcode, SegmentView};
use crate::systems::LiftedSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Fundamental cycles of the Rips graph at each radius.
    #[default]
    CycleSpace,
    /// Representatives of the persistence bars alive at each radius.
    Barcode,
}

/// The signature of one segment at one evaluation radius.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureRecord {
    pub start: usize,
    pub length: usize,
    pub radius: f64,
    pub signature: Gf2Subspace,
}

impl SignatureRecord {
    pub fn rank(&self) -> usize {
        self.signature.rank()
    }

    pub fn key(&self) -> String {
        self.signature.key()
    }
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    start: usize,
    length: usize,
    radius: f64,
    rank: usize,
    key: String,
    signature: Gf2Subspace,
}

impl Serialize for SignatureRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireRecord {
            start: self.start,
            length: self.length,
            radius: self.radius,
            rank: self.rank(),
            key: self.key(),
            signature: self.signature.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignatureRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireRecord::deserialize(d)?;
        if w.rank != w.signature.rank() || w.key != w.signature.key() {
            return Err(serde::de::Error::custom("record rank or key disagrees with its signature"));
        }
        Ok(SignatureRecord { start: w.start, length: w.length, radius: w.radius, signature: w.signature })
    }
}

/// Computes signatures of segments of one lifted series against one space.
pub struct Signer<'a> {
    space: &'a ComparisonSpace,
    series: &'a LiftedSeries,
    boxes: Vec<BoxId>,
    c: f64,
    method: Method,
}

impl<'a> Signer<'a> {
    /// `c = None` uses the default tangent weight `r k` of the space.
    pub fn new(space: &'a ComparisonSpace, series: &'a LiftedSeries, c: Option<f64>) -> Result<Self> {
        let g = space.grid();
        if series.dim() != g.dim {
            return Err(Error::DimensionMismatch { expected: g.dim, found: series.dim() });
        }
        let c = c.unwrap_or_else(|| g.default_c());
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("tangent weight must be nonnegative, got {c}")));
        }
        let boxes = (0..series.len()).map(|i| space.locate(series.point(i), series.tangent(i))).collect();
        Ok(Signer { space, series, boxes, c, method: Method::default() })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn series(&self) -> &'a LiftedSeries {
        self.series
    }

    pub fn space(&self) -> &'a ComparisonSpace {
        self.space
    }

    pub fn signature(&self, start: usize, len: usize, radius: f64) -> Result<SignatureRecord> {
        Ok(self.sweep(start, len, &[radius])?.pop().expect("one record per radius"))
    }

    /// One record per radius, in the order given.
    pub fn sweep(&self, start: usize, len: usize, radii: &[f64]) -> Result<Vec<SignatureRecord>> {
        let seg = SegmentView::new(self.series, start, len)?;
        check_radii(self.space, radii)?;
        for b in &self.boxes[start..start + len] {
            if !self.space.contains_box(b) {
                return Err(Error::OutsideSpace(b.to_string()));
            }
        }
        let spaces = match self.method {
            Method::CycleSpace => self.cycle_space_sweep(&seg, radii)?,
            Method::Barcode => self.barcode_sweep(&seg, radii)?,
        };
        Ok(spaces
            .into_iter()
            .zip(radii)
            .map(|(signature, &radius)| SignatureRecord { start, length: len, radius, signature })
            .collect())
    }

    fn cycle_space_sweep(&self, seg: &SegmentView<'_>, radii: &[f64]) -> Result<Vec<Gf2Subspace>> {
        let b1 = self.space.b1();
        let stride = words_for(b1).max(1);
        let r_max = radii.iter().fold(0.0_f64, |m, &r| m.max(r));
        let edges = seg.edges_within(self.c, r_max);
        let boxes = &self.boxes[seg.start()..seg.start() + seg.len()];
        let mut order: Vec<usize> = (0..radii.len()).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));

        let mut forest = PotentialForest::new(seg.len(), stride);
        let mut basis = XorBasis::new(b1, stride);
        let mut out = vec![None; radii.len()];
        let mut pi = vec![0u64; stride];
        let mut cycle = vec![0u64; stride];
        let mut next = 0;
        for &ri in &order {
            let r = radii[ri];
            while next < edges.len() && edges[next].value <= r && !basis.is_full() {
                let e = edges[next];
                next += 1;
                pi.iter_mut().for_each(|w| *w = 0);
                self.space.route_pairing_into(&boxes[e.u as usize], &boxes[e.w as usize], &mut pi)?;
                if forest.join(e.u, e.w, &pi, &mut cycle) {
                    basis.insert(&cycle);
                }
            }
            out[ri] = Some(basis.subspace());
        }
        Ok(out.into_iter().map(|s| s.expect("every radius visited")).collect())
    }

    fn barcode_sweep(&self, seg: &SegmentView<'_>, radii: &[f64]) -> Result<Vec<Gf2Subspace>> {
        let b1 = self.space.b1();
        let r_max = radii.iter().fold(0.0_f64, |m, &r| m.max(r));
        if r_max <= 0.0 {
            return Ok(radii.iter().map(|_| Gf2Subspace::zero(b1)).collect());
        }
        let barcode = segment_barcode(seg, self.c, r_max)?;
        let boxes = &self.boxes[seg.start()..seg.start() + seg.len()];
        let mut vectors: Vec<Option<BitVec>> = vec![None; barcode.bars.len()];
        let mut out = Vec::with_capacity(radii.len());
        for &r in radii {
            let mut vs = Vec::with_capacity(bars_alive(&barcode, r)?.len());
            for (idx, bar) in barcode.bars.iter().enumerate().filter(|(_, b)| b.is_alive(r)) {
                if vectors[idx].is_none() {
                    let z = self.space.map_cycle(
                        bar.representative.iter().map(|&(u, w)| (&boxes[u as usize], &boxes[w as usize])),
                    )?;
                    vectors[idx] = Some(self.space.pairing_vector(&z));
                }
                vs.push(vectors[idx].clone().expect("just filled"));
            }
            out.push(Gf2Subspace::span(b1, &vs)?);
        }
        Ok(out)
    }
}

fn check_radii(space: &ComparisonSpace, radii: &[f64]) -> Result<()> {
    let g = space.grid();
    for &r in radii {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("evaluation radius must be nonnegative, got {r}")));
        }
        if r > g.r {
            return Err(Error::RadiusTooLarge { radius: r, box_size: g.r });
        }
    }
    Ok(())
}

/// Signature of a segment at one radius; `c = None` means `C = r k`.
pub fn signature(
    seg: &SegmentView<'_>,
    space: &ComparisonSpace,
    c: Option<f64>,
    radius: f64,
) -> Result<SignatureRecord> {
    Ok(signature_sweep(seg, space, c, &[radius])?.pop().expect("one record per radius"))
}

/// Signatures of a segment at several radii from a single pass.
pub fn signature_sweep(
    seg: &SegmentView<'_>,
    space: &ComparisonSpace,
    c: Option<f64>,
    radii: &[f64],
) -> Result<Vec<SignatureRecord>> {
    check_radii(space, radii)?;
    let local = seg.series().slice(seg.start(), seg.len());
    let signer = Signer::new(space, &local, c)?;
    let mut recs = signer.sweep(0, seg.len(), radii)?;
    for r in &mut recs {
        r.start = seg.start();
    }
    Ok(recs)
}

/// Signature computed from the persistence barcode of the segment.
pub fn signature_from_barcode(
    seg: &SegmentView<'_>,
    space: &ComparisonSpace,
    c: Option<f64>,
    radius: f64,
) -> Result<SignatureRecord> {
    check_radii(space, &[radius])?;
    let local = seg.series().slice(seg.start(), seg.len());
    let signer = Signer::new(space, &local, c)?.with_method(Method::Barcode);
    let mut rec = signer.signature(0, seg.len(), radius)?;
    rec.start = seg.start();
    Ok(rec)
}

/// Union-find whose nodes carry the XOR of edge labels along the path to the root.
struct PotentialForest {
    parent: Vec<u32>,
    pot: Vec<u64>,
    stride: usize,
    path: Vec<u32>,
}

impl PotentialForest {
    fn new(n: usize, stride: usize) -> Self {
        PotentialForest { parent: (0..n as u32).collect(), pot: vec![0; n * stride], stride, path: Vec::new() }
    }

    /// Root of `x`, compressing the path; afterwards `pot(x)` is relative to the root.
    fn find(&mut self, x: u32) -> u32 {
        self.path.clear();
        let mut y = x;
        while self.parent[y as usize] != y {
            self.path.push(y);
            y = self.parent[y as usize];
        }
        let root = y;
        let s = self.stride;
        for &n in self.path.iter().rev() {
            let p = self.parent[n as usize];
            if p != root {
                for w in 0..s {
                    self.pot[n as usize * s + w] ^= self.pot[p as usize * s + w];
                }
                self.parent[n as usize] = root;
            }
        }
        root
    }

    /// Add the edge `u - w` labelled `label`. Returns `true` and writes the
    /// label sum of the closed cycle into `cycle` when the edge is not a tree edge.
    fn join(&mut self, u: u32, w: u32, label: &[u64], cycle: &mut [u64]) -> bool {
        let (ru, rw) = (self.find(u), self.find(w));
        let s = self.stride;
        for i in 0..s {
            cycle[i] = self.pot[u as usize * s + i] ^ self.pot[w as usize * s + i] ^ label[i];
        }
        if ru == rw {
            return true;
        }
        let (keep, moved) = if ru < rw { (ru, rw) } else { (rw, ru) };
        self.parent[moved as usize] = keep;
        self.pot[moved as usize * s..(moved as usize + 1) * s].copy_from_slice(cycle);
        false
    }
}

/// Incremental row echelon basis of a subspace of `F2^n`.
struct XorBasis {
    n: usize,
    stride: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl XorBasis {
    fn new(n: usize, stride: usize) -> Self {
        XorBasis { n, stride, rows: Vec::new(), pivots: Vec::new() }
    }

    fn is_full(&self) -> bool {
        self.rows.len() == self.n
    }

    fn insert(&mut self, v: &[u64]) {
        let mut v = v[..self.stride].to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                v.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
            }
        }
        let lead = (0..self.n).find(|&i| v[i / 64] >> (i % 64) & 1 == 1);
        if let Some(p) = lead {
            for (row, _) in self.rows.iter_mut().zip(&self.pivots) {
                if row[p / 64] >> (p % 64) & 1 == 1 {
                    row.iter_mut().zip(&v).for_each(|(a, b)| *a ^= b);
                }
            }
            self.rows.push(v);
            self.pivots.push(p);
        }
    }

    fn subspace(&self) -> Gf2Subspace {
        let vs: Vec<BitVec> = self.rows.iter().map(|r| BitVec::from_words(r.clone(), self.n)).collect();
        Gf2Subspace::span(self.n, &vs).expect("vectors have the ambient length")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::GridParams;

    fn circle(n: usize, radius: f64) -> LiftedSeries {
        let mut pts = Vec::new();
        let mut tan = Vec::new();
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            pts.extend([radius * t.cos(), radius * t.sin()]);
            tan.extend([-t.sin(), t.cos()]);
        }
        LiftedSeries::new(2, pts, tan).unwrap()
    }

    fn annulus() -> (LiftedSeries, ComparisonSpace) {
        let s = circle(12, 2.5);
        let y = ComparisonSpace::build(&s, GridParams::new(1.0, 1, 2).unwrap()).unwrap();
        (s, y)
    }

    #[test]
    fn single_point_has_zero_signature() {
        let (s, y) = annulus();
        let seg = SegmentView::new(&s, 3, 1).unwrap();
        let rec = signature(&seg, &y, None, 0.9).unwrap();
        assert_eq!(rec.rank(), 0);
        assert!(rec.signature.is_zero());
        assert_eq!(rec.start, 3);
    }

    #[test]
    fn annulus_signature_is_the_generator() {
        let (s, y) = annulus();
        let seg = SegmentView::new(&s, 0, 12).unwrap();
        // The polygon side is 2 * 2.5 * sin(15 deg) = 1.294, so the cycle closes above
        // the box size 1 of the first space; use a coarser grid.
        let y2 = ComparisonSpace::build(&s, GridParams::new(1.5, 1, 2).unwrap()).unwrap();
        assert_eq!(y2.b1(), 1);
        let rec = signature(&seg, &y2, Some(1.0), 1.4).unwrap();
        assert_eq!(rec.rank(), 1);
        assert!(rec.signature.contains_vector(&BitVec::from_bools(&[true])).unwrap());
        let via_bars = signature_from_barcode(&seg, &y2, Some(1.0), 1.4).unwrap();
        assert_eq!(via_bars, rec);
        // Below the first edge length nothing is alive.
        assert_eq!(signature(&seg, &y2, Some(1.0), 1.0).unwrap().rank(), 0);
        assert_eq!(y.b1(), 1);
    }

    #[test]
    fn radius_above_box_size_is_rejected() {
        let (s, y) = annulus();
        let seg = SegmentView::new(&s, 0, 12).unwrap();
        assert!(matches!(signature(&seg, &y, None, 1.5), Err(Error::RadiusTooLarge { .. })));
    }

    #[test]
    fn sweep_matches_single_radius_calls() {
        let s = circle(40, 2.5);
        let y = ComparisonSpace::build(&s, GridParams::new(1.5, 2, 2).unwrap()).unwrap();
        let signer = Signer::new(&y, &s, Some(1.0)).unwrap();
        let radii = [1.2, 0.1, 0.5, 1.5, 0.39];
        let recs = signer.sweep(0, 40, &radii).unwrap();
        for (rec, &r) in recs.iter().zip(&radii) {
            assert_eq!(rec.radius, r);
            assert_eq!(*rec, signer.signature(0, 40, r).unwrap());
            let bars = Signer::new(&y, &s, Some(1.0)).unwrap().with_method(Method::Barcode);
            assert_eq!(*rec, bars.signature(0, 40, r).unwrap());
        }
    }

    #[test]
    fn record_json_round_trip() {
        let (s, y) = annulus();
        let rec = signature(&SegmentView::new(&s, 0, 12).unwrap(), &y, Some(1.0), 0.9).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"key\""));
        let back: SignatureRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        let bad = json.replace("\"rank\":0", "\"rank\":1");
        assert!(serde_json::from_str::<SignatureRecord>(&bad).is_err());
    }

    #[test]
    fn xor_basis_spans_inserted_vectors() {
        let mut b = XorBasis::new(3, 1);
        for v in [0b011u64, 0b110, 0b101, 0b000] {
            b.insert(&[v]);
        }
        assert_eq!(b.subspace().rank(), 2);
        b.insert(&[0b100]);
        assert!(b.is_full());
        assert_eq!(b.subspace(), Gf2Subspace::full(3));
    }

    #[test]
    fn potential_forest_closes_cycles() {
        let mut f = PotentialForest::new(4, 1);
        let mut cyc = [0u64];
        assert!(!f.join(0, 1, &[0b01], &mut cyc));
        assert!(!f.join(2, 3, &[0b10], &mut cyc));
        assert!(!f.join(1, 2, &[0b00], &mut cyc));
        assert!(f.join(3, 0, &[0b00], &mut cyc));
        assert_eq!(cyc[0], 0b11);
    }
}
