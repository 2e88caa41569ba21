//! Segment sampling and statistics of cycling signatures: rank distributions,
//! per-signature frequency curves, oscillation onsets and inclusion graphs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::Gf2Subspace;
use crate::signatures::{SignatureRecord, Signer};

/// Default threshold on the peak frequency for calling a signature frequent.
pub const FREQUENT_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Segment lengths (number of samples), ascending.
    pub lengths: Vec<usize>,
    pub per_length: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    /// 200 segments for each length 10, 20, ..., 500.
    pub fn desk() -> Self {
        ExperimentPlan { lengths: (1..=50).map(|i| 10 * i).collect(), per_length: 200, seed: 0 }
    }

    /// 1000 segments for each length 10, 20, ..., 1000.
    pub fn full() -> Self {
        ExperimentPlan { lengths: (1..=100).map(|i| 10 * i).collect(), per_length: 1000, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_length == 0 {
            return Err(Error::invalid("segments per length must be at least 1"));
        }
        if self.lengths.first() == Some(&0) || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("segment lengths must be positive and strictly ascending"));
        }
        Ok(())
    }

    /// Parse `start:step:end` (inclusive) or a comma separated list.
    pub fn parse_lengths(s: &str) -> Result<Vec<usize>> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("length '{t}': {e}")));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, step, b] => {
                let (a, step, b) = (num(a)?, num(step)?, num(b)?);
                if step == 0 {
                    return Err(Error::Parse("length step must be positive".into()));
                }
                Ok((a..=b).step_by(step).collect())
            }
            [_] => s.split(',').map(num).collect(),
            _ => Err(Error::Parse(format!("expected start:step:end or a list, got '{s}'"))),
        }
    }
}

/// `count` start indices drawn uniformly from `0..=n - len`, with replacement.
/// Each length draws from its own stream so plans with different length lists
/// agree on the lengths they share.
pub fn sample_segments(n: usize, len: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::invalid("segment length must be at least 1"));
    }
    if len > n {
        return Err(Error::SegmentTooLong { length: len, available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(len as u64);
    Ok((0..count).map(|_| rng.random_range(0..=n - len)).collect())
}

/// Signatures for every sampled segment of the plan at every radius. Records
/// are ordered by length, then sample, then radius, independent of threading.
pub fn run_plan(signer: &Signer<'_>, plan: &ExperimentPlan, radii: &[f64]) -> Result<Vec<SignatureRecord>> {
    plan.validate()?;
    let n = signer.series().len();
    let mut jobs = Vec::with_capacity(plan.lengths.len() * plan.per_length);
    for &len in &plan.lengths {
        for start in sample_segments(n, len, plan.per_length, plan.seed)? {
            jobs.push((start, len));
        }
    }
    let per_job: Vec<Vec<SignatureRecord>> = jobs
        .par_iter()
        .map(|&(start, len)| signer.sweep(start, len, radii))
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Records evaluated at `radius` (exact match).
pub fn at_radius(records: &[SignatureRecord], radius: f64) -> Vec<SignatureRecord> {
    records.iter().filter(|r| r.radius == radius).cloned().collect()
}

/// Counts of each cycling rank `0..=b1` per segment length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub max_rank: usize,
    pub rows: BTreeMap<usize, Vec<usize>>,
}

impl RankTable {
    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn total(&self, len: usize) -> usize {
        self.rows.get(&len).map_or(0, |r| r.iter().sum())
    }

    pub fn fraction(&self, len: usize, rank: usize) -> f64 {
        let t = self.total(len);
        if t == 0 {
            return 0.0;
        }
        self.rows[&len].get(rank).copied().unwrap_or(0) as f64 / t as f64
    }

    /// Smallest length with fewer than all segments at rank zero.
    pub fn rank0_decline(&self) -> Option<usize> {
        self.rows.iter().find(|(_, r)| r[0] < r.iter().sum()).map(|(&l, _)| l)
    }

    /// Smallest length with no segment at rank zero.
    pub fn rank0_extinction(&self) -> Option<usize> {
        self.rows.iter().find(|(_, r)| r[0] == 0).map(|(&l, _)| l)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("length");
        for k in 0..=self.max_rank {
            out.push_str(&format!(",rank{k}"));
        }
        out.push('\n');
        for (l, row) in &self.rows {
            out.push_str(&l.to_string());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.get(0) != Some("length") || headers.len() < 2 {
            return Err(Error::Parse("rank table must start with a 'length' column".into()));
        }
        let mut rows = BTreeMap::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let vals: Vec<usize> = rec
                .iter()
                .map(|f| f.trim().parse().map_err(|e| Error::Parse(format!("'{f}': {e}"))))
                .collect::<Result<_>>()?;
            rows.insert(vals[0], vals[1..].to_vec());
        }
        Ok(RankTable { max_rank: headers.len() - 2, rows })
    }
}

pub fn rank_table(records: &[SignatureRecord], max_rank: usize) -> RankTable {
    let mut rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in records {
        let row = rows.entry(r.length).or_insert_with(|| vec![0; max_rank + 1]);
        if r.rank() >= row.len() {
            row.resize(r.rank() + 1, 0);
        }
        row[r.rank()] += 1;
    }
    let width = rows.values().map(Vec::len).max().unwrap_or(max_rank + 1);
    for row in rows.values_mut() {
        row.resize(width, 0);
    }
    RankTable { max_rank: width - 1, rows }
}

/// Frequency of each signature of a fixed rank, per segment length, relative
/// to all segments of that length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCurves {
    pub rank: usize,
    pub lengths: Vec<usize>,
    /// Canonical key to one frequency per entry of `lengths`.
    pub curves: BTreeMap<String, Vec<f64>>,
    pub subspaces: BTreeMap<String, Gf2Subspace>,
}

impl FrequencyCurves {
    pub fn peak(&self, key: &str) -> f64 {
        self.curves.get(key).map_or(0.0, |c| c.iter().fold(0.0, |m: f64, &v| m.max(v)))
    }

    /// Keys whose peak frequency reaches `threshold`, ordered by onset at that
    /// threshold, then by decreasing peak, then by key.
    pub fn frequent(&self, threshold: f64) -> Vec<String> {
        let onsets = onset_lengths(self, threshold);
        let mut keys: Vec<(usize, f64, String)> = onsets
            .into_iter()
            .filter_map(|(k, on)| on.map(|l| (l, self.peak(&k), k)))
            .collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        keys.into_iter().map(|(_, _, k)| k).collect()
    }

    pub fn to_csv(&self) -> String {
        let keys: Vec<&String> = self.curves.keys().collect();
        let mut out = String::from("length");
        for k in &keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for (i, l) in self.lengths.iter().enumerate() {
            out.push_str(&l.to_string());
            for k in &keys {
                out.push_str(&format!(",{}", self.curves[*k][i]));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a table written by [`to_csv`](Self::to_csv); `ambient` is `b1` of the space.
    pub fn from_csv(text: &str, rank: usize, ambient: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.get(0) != Some("length") {
            return Err(Error::Parse("frequency table must start with a 'length' column".into()));
        }
        let keys: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut lengths = Vec::new();
        let mut curves: BTreeMap<String, Vec<f64>> = keys.iter().map(|k| (k.clone(), Vec::new())).collect();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let l = rec.get(0).unwrap_or("").trim();
            lengths.push(l.parse().map_err(|e| Error::Parse(format!("'{l}': {e}")))?);
            for (k, f) in keys.iter().zip(rec.iter().skip(1)) {
                let v: f64 = f.trim().parse().map_err(|e| Error::Parse(format!("'{f}': {e}")))?;
                curves.get_mut(k).expect("key from header").push(v);
            }
        }
        let subspaces = keys
            .iter()
            .map(|k| Ok((k.clone(), Gf2Subspace::from_key(ambient, k)?)))
            .collect::<Result<_>>()?;
        Ok(FrequencyCurves { rank, lengths, curves, subspaces })
    }
}

pub fn frequency_curves(records: &[SignatureRecord], rank: usize) -> FrequencyCurves {
    let mut totals: BTreeMap<usize, usize> = BTreeMap::new();
    let mut counts: BTreeMap<String, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut subspaces = BTreeMap::new();
    for r in records {
        *totals.entry(r.length).or_default() += 1;
        if r.rank() == rank {
            let key = r.key();
            *counts.entry(key.clone()).or_default().entry(r.length).or_default() += 1;
            subspaces.entry(key).or_insert_with(|| r.signature.clone());
        }
    }
    let lengths: Vec<usize> = totals.keys().copied().collect();
    let curves = counts
        .into_iter()
        .map(|(k, per)| {
            let c = lengths
                .iter()
                .map(|l| per.get(l).copied().unwrap_or(0) as f64 / totals[l] as f64)
                .collect();
            (k, c)
        })
        .collect();
    FrequencyCurves { rank, lengths, curves, subspaces }
}

/// Smallest length at which each key's frequency reaches `threshold`.
pub fn onset_lengths(curves: &FrequencyCurves, threshold: f64) -> BTreeMap<String, Option<usize>> {
    curves
        .curves
        .iter()
        .map(|(k, c)| {
            let on = c.iter().position(|&v| v >= threshold).map(|i| curves.lengths[i]);
            (k.clone(), on)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub label: String,
    pub key: String,
}

/// Bipartite containment graph between rank-one and rank-two signatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionGraph {
    pub bottom: Vec<GraphNode>,
    pub top: Vec<GraphNode>,
    /// `(i, j)`: `bottom[i]` is contained in `top[j]`.
    pub edges: Vec<(usize, usize)>,
}

/// Nodes are labelled `v1, v2, ...` and `w1, w2, ...` in the order given.
pub fn inclusion_graph(rank1: &[Gf2Subspace], rank2: &[Gf2Subspace]) -> Result<InclusionGraph> {
    let mut edges = Vec::new();
    for (i, v) in rank1.iter().enumerate() {
        for (j, w) in rank2.iter().enumerate() {
            if w.contains(v)? {
                edges.push((i, j));
            }
        }
    }
    let node = |p: &str, i: usize, s: &Gf2Subspace| GraphNode { label: format!("{p}{}", i + 1), key: s.key() };
    Ok(InclusionGraph {
        bottom: rank1.iter().enumerate().map(|(i, s)| node("v", i, s)).collect(),
        top: rank2.iter().enumerate().map(|(i, s)| node("w", i, s)).collect(),
        edges,
    })
}

impl InclusionGraph {
    pub fn contains_edge(&self, bottom: usize, top: usize) -> bool {
        self.edges.contains(&(bottom, top))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph inclusion {\n  rankdir=BT;\n");
        for (rank, nodes) in [(1, &self.bottom), (2, &self.top)] {
            out.push_str("  { rank=same;");
            for n in nodes.iter() {
                out.push_str(&format!(" {};", n.label));
            }
            out.push_str(" }\n");
            for n in nodes.iter() {
                out.push_str(&format!(
                    "  {} [label=\"{}\\n{}\", tooltip=\"rank {rank}\"];\n",
                    n.label, n.label, n.key
                ));
            }
        }
        for &(i, j) in &self.edges {
            out.push_str(&format!("  {} -- {};\n", self.bottom[i].label, self.top[j].label));
        }
        out.push_str("}\n");
        out
    }
}

/// Outcome of one configuration of a sweep; failures are kept, not propagated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome<T> {
    pub label: String,
    pub result: std::result::Result<T, String>,
}

pub fn stability_sweep<C, T>(
    configs: &[(String, C)],
    mut run: impl FnMut(&C) -> Result<T>,
) -> Vec<SweepOutcome<T>> {
    configs
        .iter()
        .map(|(label, c)| SweepOutcome { label: label.clone(), result: run(c).map_err(|e| e.to_string()) })
        .collect()
}

/// Largest absolute difference of rank fractions over shared lengths.
pub fn max_rank_deviation(a: &RankTable, b: &RankTable) -> f64 {
    let mut worst = 0.0_f64;
    for l in a.lengths().filter(|l| b.rows.contains_key(l)) {
        for k in 0..=a.max_rank.max(b.max_rank) {
            worst = worst.max((a.fraction(l, k) - b.fraction(l, k)).abs());
        }
    }
    worst
}

/// Onset, peak and label of one frequent signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyStat {
    pub label: String,
    pub key: String,
    pub peak: f64,
    pub onset: Option<usize>,
}

/// Headline statistics of a signature table at one radius: rank-0 decline and
/// extinction, frequent rank-1 and rank-2 signatures and their inclusions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub radius: f64,
    pub b1: usize,
    pub threshold: f64,
    pub onset_threshold: f64,
    pub rank0_decline: Option<usize>,
    pub rank0_extinction: Option<usize>,
    pub rank1: Vec<KeyStat>,
    pub rank2: Vec<KeyStat>,
    pub inclusions: Vec<(usize, usize)>,
    /// Dimension of the span of all frequent rank-1 signatures.
    pub rank1_span: usize,
}

impl Analysis {
    /// `records` must all share one radius. Frequent keys are those with peak
    /// frequency at least `threshold`; they are ordered by onset at
    /// `onset_threshold`, then by decreasing peak.
    pub fn new(records: &[SignatureRecord], b1: usize, threshold: f64, onset_threshold: f64) -> Result<Self> {
        let radius = records.first().map_or(0.0, |r| r.radius);
        if records.iter().any(|r| r.radius != radius) {
            return Err(Error::invalid("analysis expects records at a single radius"));
        }
        let table = rank_table(records, b1);
        let pick = |rank: usize, prefix: &str| {
            let curves = frequency_curves(records, rank);
            let onsets = onset_lengths(&curves, onset_threshold);
            let mut keys: Vec<(Option<usize>, f64, String)> = curves
                .curves
                .keys()
                .filter(|k| curves.peak(k) >= threshold)
                .map(|k| (onsets[k], curves.peak(k), k.clone()))
                .collect();
            keys.sort_by(|a, b| {
                let on = |o: Option<usize>| o.unwrap_or(usize::MAX);
                on(a.0).cmp(&on(b.0)).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2))
            });
            let subspaces: Vec<Gf2Subspace> = keys.iter().map(|k| curves.subspaces[&k.2].clone()).collect();
            let stats = keys
                .into_iter()
                .enumerate()
                .map(|(i, (onset, peak, key))| KeyStat { label: format!("{prefix}{}", i + 1), key, peak, onset })
                .collect::<Vec<_>>();
            (stats, subspaces)
        };
        let (rank1, v) = pick(1, "v");
        let (rank2, w) = pick(2, "w");
        let graph = inclusion_graph(&v, &w)?;
        let vectors: Vec<_> = v.iter().flat_map(Gf2Subspace::basis_vectors).collect();
        let rank1_span = Gf2Subspace::span(b1, &vectors)?.rank();
        Ok(Analysis {
            radius,
            b1,
            threshold,
            onset_threshold,
            rank0_decline: table.rank0_decline(),
            rank0_extinction: table.rank0_extinction(),
            rank1,
            rank2,
            inclusions: graph.edges,
            rank1_span,
        })
    }

    pub fn subspace(&self, stat: &KeyStat) -> Result<Gf2Subspace> {
        Gf2Subspace::from_key(self.b1, &stat.key)
    }
}
