//! End-to-end acceptance run: property suites first, then one desk-scale
//! pipeline per system and seed. Prints one PASS/FAIL line per criterion.
//!
//! The process exits 0 when every criterion has been evaluated, so that a
//! failing criterion is reported rather than hidden behind a test abort. Set
//! `CYCSIG_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::collections::BTreeMap;
use std::time::Instant;

use cycling_signatures::experiments::Analysis;
use cycling_signatures::gf2::{rref, Gf2Matrix, Gf2Subspace};
use cycling_signatures::persistence::{bars_alive, d_c, segment_barcode, SegmentView};
use cycling_signatures::pipeline::{self, Manifest, PipelineConfig};
use cycling_signatures::signatures::Signer;
use cycling_signatures::systems::{LiftedSeries, SystemKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYSTEMS: [SystemKind; 3] = [SystemKind::Lorenz, SystemKind::Doublewell, SystemKind::Dadras];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() {
    let started = Instant::now();
    let mut results: BTreeMap<u32, (&str, Outcome)> = BTreeMap::new();

    let props = property_suites();
    let props_ok = props.pass;
    results.insert(8, ("property suites", props));

    if props_ok {
        let runs = SYSTEMS.map(SystemRuns::new);
        results.insert(1, ("comparison space b1", betti(&runs)));
        results.insert(2, ("oscillation counts", counts(&runs)));
        results.insert(3, ("rank-0 extinction and onset", extinction(&runs)));
        results.insert(4, ("rank-1 onset ordering", onsets(&runs)));
        results.insert(5, ("inclusion structure", inclusions(&runs)));
        results.insert(6, ("double-well rank-2 ordering", doublewell_order(&runs[1])));
        results.insert(7, ("radius stability", stability(&runs)));
        results.insert(9, ("runtime budget", runtime(&runs)));
    } else {
        for (id, name) in [
            (1, "comparison space b1"),
            (2, "oscillation counts"),
            (3, "rank-0 extinction and onset"),
            (4, "rank-1 onset ordering"),
            (5, "inclusion structure"),
            (6, "double-well rank-2 ordering"),
            (7, "radius stability"),
            (9, "runtime budget"),
        ] {
            results.insert(id, (name, Outcome::new(false, "not run: property suites failed")));
        }
    }

    println!();
    let mut failed = 0;
    for (id, (name, o)) in &results {
        println!("criterion {id} {:<28} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed in {:.0}s", results.len() - failed, results.len(), started.elapsed().as_secs_f64());
    if failed > 0 && std::env::var_os("CYCSIG_ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// System runs

/// Radius at which a system is read off, and the stability window if any.
fn radii(kind: SystemKind) -> (f64, Vec<f64>) {
    match kind {
        SystemKind::Lorenz => (5.0, vec![4.5, 4.75, 5.0, 5.25, 5.5]),
        SystemKind::Doublewell => (0.18, vec![0.16, 0.17, 0.18, 0.19, 0.2]),
        // The configurable default is 1.5; at that radius the segments carry
        // almost no Rips cycles; the structure is stable across [2.3, 2.5].
        SystemKind::Dadras => (2.4, vec![]),
    }
}

struct SystemRuns {
    kind: SystemKind,
    radius: f64,
    /// Two independent seeds of the full pipeline.
    runs: [Manifest; 2],
    seconds: [f64; 2],
}

impl SystemRuns {
    fn new(kind: SystemKind) -> Self {
        let (radius, window) = radii(kind);
        let mut all = window.clone();
        if !all.contains(&radius) {
            all.push(radius);
        }
        let dir = tempfile::tempdir().expect("temp dir");
        let run = |i: u64| {
            let mut cfg = PipelineConfig::preset(kind);
            cfg.output = dir.path().join(format!("seed{i}"));
            cfg.signatures.radii = if i == 0 { all.clone() } else { vec![radius] };
            cfg.plan.seed = i;
            cfg.trajectory.seed = 1 + i;
            let t = Instant::now();
            let m = pipeline::run(&cfg).unwrap_or_else(|e| panic!("{kind} seed {i}: {e}"));
            let secs = t.elapsed().as_secs_f64();
            eprintln!("{kind} seed {i}: b1 = {}, {secs:.1}s", m.b1);
            (m, secs)
        };
        let (a, ta) = run(0);
        let (b, tb) = run(1);
        SystemRuns { kind, radius, runs: [a, b], seconds: [ta, tb] }
    }

    fn analysis(&self, seed: usize, radius: f64) -> &Analysis {
        self.runs[seed].analyses.iter().find(|a| a.radius == radius).expect("analysis at radius")
    }

    fn main(&self) -> &Analysis {
        self.analysis(0, self.radius)
    }
}

fn target_count(kind: SystemKind) -> usize {
    match kind {
        SystemKind::Lorenz | SystemKind::Doublewell => 3,
        SystemKind::Dadras => 6,
    }
}

fn betti(runs: &[SystemRuns; 3]) -> Outcome {
    let want = [2, 3, 5];
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, w) in runs.iter().zip(want) {
        let b = s.runs[0].b1;
        let space_s: f64 = s.runs[0].stages.iter().filter(|t| t.stage == "space").map(|t| t.seconds).sum();
        pass &= b == w && space_s < 300.0;
        parts.push(format!("{} {b} (want {w}, {space_s:.1}s)", s.kind));
    }
    Outcome::new(pass, parts.join(", "))
}

fn counts(runs: &[SystemRuns; 3]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in runs {
        let a = s.analysis(0, s.radius).rank1.len();
        let b = s.analysis(1, s.radius).rank1.len();
        let w = target_count(s.kind);
        pass &= a == w && b == w;
        parts.push(format!("{} {a}/{b} (want {w})", s.kind));
    }
    Outcome::new(pass, parts.join(", "))
}

fn extinction(runs: &[SystemRuns; 3]) -> Outcome {
    let bands = [((250, 400), (40, 90)), ((180, 320), (60, 110)), ((150, 280), (20, 70))];
    let inside = |v: Option<usize>, (lo, hi): (usize, usize)| v.is_some_and(|v| (lo..=hi).contains(&v));
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, (ext, on)) in runs.iter().zip(bands) {
        let a = s.main();
        pass &= inside(a.rank0_extinction, ext) && inside(a.rank0_decline, on);
        parts.push(format!(
            "{} extinct {} onset {}",
            s.kind,
            show(a.rank0_extinction),
            show(a.rank0_decline)
        ));
    }
    Outcome::new(pass, parts.join(", "))
}

fn show(v: Option<usize>) -> String {
    v.map_or("none".into(), |v| v.to_string())
}

/// Onsets of the `n` most frequent rank-1 keys, ascending.
fn top_onsets(a: &Analysis, n: usize) -> Vec<Option<usize>> {
    let mut keys: Vec<_> = a.rank1.iter().collect();
    keys.sort_by(|x, y| y.peak.total_cmp(&x.peak));
    let mut on: Vec<Option<usize>> = keys.iter().take(n).map(|k| k.onset).collect();
    on.sort_by_key(|o| o.unwrap_or(usize::MAX));
    on
}

fn onsets(runs: &[SystemRuns; 3]) -> Outcome {
    let within = |o: Option<usize>, lo: i64, hi: i64| o.is_some_and(|o| (lo..=hi).contains(&(o as i64)));
    let mut pass = true;
    let mut parts = Vec::new();
    for s in runs {
        let want = target_count(s.kind);
        let on = top_onsets(s.main(), want);
        let ok = on.len() == want
            && match s.kind {
                SystemKind::Lorenz => within(on[0], 50, 90) && within(on[1], 50, 90) && within(on[2], 130, 200),
                SystemKind::Doublewell => {
                    let first = on[0].map_or(i64::MAX / 4, |v| v as i64);
                    within(on[2], 2 * first - 30, 3 * first + 30)
                }
                SystemKind::Dadras => on[..4].iter().all(|&o| within(o, 10, 70)) && on[4..].iter().all(|&o| within(o, 50, 110)),
            };
        pass &= ok;
        let list: Vec<String> = on.iter().map(|&o| show(o)).collect();
        parts.push(format!("{} [{}]", s.kind, list.join(" ")));
    }
    Outcome::new(pass, parts.join(", "))
}

fn subspaces(a: &Analysis) -> (Vec<Gf2Subspace>, Vec<Gf2Subspace>) {
    let v = a.rank1.iter().map(|k| a.subspace(k).unwrap()).collect();
    let w = a.rank2.iter().map(|k| a.subspace(k).unwrap()).collect();
    (v, w)
}

/// The `n` most frequent rank-1 signatures, ordered by onset.
fn oscillations(a: &Analysis, n: usize) -> Vec<Gf2Subspace> {
    let mut keys: Vec<_> = a.rank1.iter().collect();
    keys.sort_by(|x, y| y.peak.total_cmp(&x.peak));
    keys.truncate(n);
    keys.sort_by_key(|k| k.onset.unwrap_or(usize::MAX));
    keys.iter().map(|k| a.subspace(k).unwrap()).collect()
}

/// Indices of the rank-2 keys in the double-well pattern: `(w1, w2, w3)` with
/// the two short oscillations inside `w3` and the long one inside `w1` and
/// `w2`. Extra frequent keys outside the pattern are ignored here.
fn doublewell_pattern(a: &Analysis) -> Option<(usize, usize, usize)> {
    let v = oscillations(a, 3);
    let (_, w) = subspaces(a);
    if v.len() != 3 {
        return None;
    }
    let has = |wi: usize, vi: usize| w[wi].contains(&v[vi]).unwrap();
    let short: Vec<usize> = (0..w.len()).filter(|&i| has(i, 0) && has(i, 1)).collect();
    let long: Vec<usize> = (0..w.len()).filter(|&i| has(i, 2)).collect();
    match (short.as_slice(), long.as_slice()) {
        ([w3], [w1, w2]) => Some((*w1, *w2, *w3)),
        _ => None,
    }
}

fn inclusions(runs: &[SystemRuns; 3]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in runs {
        let a = s.main();
        let (v, w) = subspaces(a);
        let (ok, note) = match s.kind {
            SystemKind::Lorenz => {
                let ok = v.len() == 3
                    && w.len() == 1
                    && w[0] == Gf2Subspace::full(a.b1)
                    && v.iter().all(|x| w[0].contains(x).unwrap());
                (ok, format!("{} rank-2 keys", w.len()))
            }
            SystemKind::Doublewell => {
                let ok = v.len() == 3 && w.len() == 3 && doublewell_pattern(a).is_some();
                (ok, format!("{} rank-1 / {} rank-2 keys", v.len(), w.len()))
            }
            SystemKind::Dadras => {
                let meet = if w.len() == 2 { Some(w[0].intersect_dim(&w[1]).unwrap()) } else { None };
                let split: Vec<usize> = w.iter().map(|wi| v.iter().filter(|x| wi.contains(x).unwrap()).count()).collect();
                let each_once = v.iter().all(|x| w.iter().filter(|wi| wi.contains(x).unwrap()).count() == 1);
                let ok = v.len() == 6 && meet == Some(0) && split == [3, 3] && each_once && a.rank1_span == 4;
                (
                    ok,
                    format!(
                        "{} rank-2 keys, meet {}, split {:?}, span {}",
                        w.len(),
                        meet.map_or("-".into(), |m| m.to_string()),
                        split,
                        a.rank1_span
                    ),
                )
            }
        };
        pass &= ok;
        parts.push(format!("{} {note}", s.kind));
    }
    Outcome::new(pass, parts.join(", "))
}

fn doublewell_order(s: &SystemRuns) -> Outcome {
    let a = s.main();
    match doublewell_pattern(a) {
        Some((w1, w2, w3)) => {
            let p = |i: usize| a.rank2[i].peak;
            Outcome::new(
                p(w3) < p(w1).min(p(w2)),
                format!(
                    "w1 {} {:.3}, w2 {} {:.3}, w3 {} {:.3} ({} frequent rank-2 keys)",
                    a.rank2[w1].key,
                    p(w1),
                    a.rank2[w2].key,
                    p(w2),
                    a.rank2[w3].key,
                    p(w3),
                    a.rank2.len()
                ),
            )
        }
        None => {
            let peaks: Vec<String> = a.rank2.iter().map(|k| format!("{} {:.3}", k.key, k.peak)).collect();
            Outcome::new(false, format!("rank-2 pattern not found; peaks {}", peaks.join(", ")))
        }
    }
}

fn stability(runs: &[SystemRuns; 3]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in runs.iter().filter(|s| !radii(s.kind).1.is_empty()) {
        let c: Vec<usize> = radii(s.kind).1.iter().map(|&r| s.analysis(0, r).rank1.len()).collect();
        pass &= c.windows(2).all(|w| w[0] == w[1]);
        parts.push(format!("{} {:?}", s.kind, c));
    }
    Outcome::new(pass, parts.join(", "))
}

fn runtime(runs: &[SystemRuns; 3]) -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let worst = runs.iter().flat_map(|s| s.seconds).fold(0.0, f64::max);
    let parts: Vec<String> = runs.iter().map(|s| format!("{} {:.0}s", s.kind, s.seconds[0])).collect();
    Outcome::new(worst < 1200.0, format!("{} on {cores} core(s)", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// Property suites

fn property_suites() -> Outcome {
    let t = Instant::now();
    let checks: [(&str, fn() -> Result<(), String>); 6] = [
        ("rref", rref_suite),
        ("triangle", triangle_suite),
        ("persistence", persistence_suite),
        ("pairing", pairing_suite),
        ("nested", nested_suite),
        ("square", unit_square),
    ];
    let mut failures = Vec::new();
    for (name, f) in checks {
        if let Err(e) = f() {
            failures.push(format!("{name}: {e}"));
        }
    }
    eprintln!("property suites: {:.1}s", t.elapsed().as_secs_f64());
    if failures.is_empty() {
        Outcome::new(true, "rref, triangle, persistence, pairing, nested, square")
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

/// Rank by plain Gaussian elimination on bool rows.
fn dense_rank(mut rows: Vec<Vec<bool>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][c]) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

fn dense(m: &Gf2Matrix) -> Vec<Vec<bool>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect()).collect()
}

fn rref_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..100 {
        let (rows, cols) = (rng.random_range(1..40), rng.random_range(1..130));
        let density = rng.random_range(0.05..0.6);
        let mut m = Gf2Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.random_bool(density));
            }
        }
        let (e, rank) = rref(&m);
        let (again, rank2) = rref(&e);
        if again != e || rank2 != rank {
            return Err(format!("case {case}: not idempotent"));
        }
        let a = dense(&m);
        let r = dense(&e);
        let joint = dense_rank(a.iter().chain(&r).cloned().collect());
        if dense_rank(a) != rank || joint != rank {
            return Err(format!("case {case}: row space changed"));
        }
    }
    Ok(())
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> LiftedSeries {
    let pts = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let tan = (0..n).flat_map(|_| unit_vector(rng, d)).collect();
    LiftedSeries::new(d, pts, tan).unwrap()
}

fn triangle_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for i in 0..10_000 {
        let d = rng.random_range(2..=4);
        let c = rng.random_range(0.0..30.0);
        let p: Vec<Vec<f64>> = (0..3).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let v: Vec<Vec<f64>> = (0..3).map(|_| unit_vector(&mut rng, d)).collect();
        let ab = d_c(&p[0], &v[0], &p[1], &v[1], c);
        let bc = d_c(&p[1], &v[1], &p[2], &v[2], c);
        let ac = d_c(&p[0], &v[0], &p[2], &v[2], c);
        if ac > ab + bc + 1e-12 {
            return Err(format!("triple {i}: {ac} > {ab} + {bc}"));
        }
    }
    Ok(())
}

/// b1 of the Rips complex at `r` from the ranks of both boundary matrices.
fn brute_betti1(seg: &SegmentView<'_>, c: f64, r: f64) -> usize {
    let n = seg.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if seg.distance(i, j, c) <= r {
                edges.push((i, j));
            }
        }
    }
    let d1: Vec<Vec<bool>> = edges.iter().map(|&(i, j)| (0..n).map(|v| v == i || v == j).collect()).collect();
    let mut d2 = Vec::new();
    for (a, &(i, j)) in edges.iter().enumerate() {
        for k in j + 1..n {
            let b = edges.iter().position(|&e| e == (i, k));
            let c2 = edges.iter().position(|&e| e == (j, k));
            if let (Some(b), Some(c2)) = (b, c2) {
                d2.push((0..edges.len()).map(|e| e == a || e == b || e == c2).collect());
            }
        }
    }
    edges.len() - dense_rank(d1) - dense_rank(d2)
}

fn persistence_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for case in 0..50 {
        let n = rng.random_range(3..=10);
        let d = rng.random_range(2..=4);
        let s = random_cloud(&mut rng, n, d);
        let seg = SegmentView::new(&s, 0, n).unwrap();
        let c = rng.random_range(0.0..1.0);
        let r_max = 2.0;
        let b = segment_barcode(&seg, c, r_max).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let r = rng.random_range(0.0..r_max);
            let got = bars_alive(&b, r).map_err(|e| e.to_string())?.len();
            let want = brute_betti1(&seg, c, r);
            if got != want {
                return Err(format!("case {case} at r = {r}: {got} bars, oracle {want}"));
            }
        }
    }
    Ok(())
}

/// A short trajectory, its comparison space and evaluation radius.
fn fixture(kind: SystemKind) -> Result<(LiftedSeries, cycling_signatures::cubical::ComparisonSpace, f64), String> {
    let mut cfg = PipelineConfig::preset(kind);
    cfg.trajectory.points = 20_000;
    let (series, _) = pipeline::generate(&cfg).map_err(|e| e.to_string())?;
    let (lifted, space) = pipeline::build_space(&series, &cfg).map_err(|e| e.to_string())?;
    Ok((lifted, space, radii(kind).0))
}

fn xor_chains(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    let mut out = Vec::new();
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

fn pairing_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for kind in SYSTEMS {
        let (lifted, space, radius) = fixture(kind)?;
        let c = space.grid().default_c();
        // A data cycle alive at the evaluation radius, mapped into the space.
        let mut z = Vec::new();
        for start in (0..lifted.len() - 400).step_by(1500) {
            let seg = SegmentView::new(&lifted, start, 400).unwrap();
            let b = segment_barcode(&seg, c, radius).map_err(|e| e.to_string())?;
            if let Some(bar) = bars_alive(&b, radius).map_err(|e| e.to_string())?.first() {
                let edges: Vec<(usize, usize)> =
                    bar.representative.iter().map(|&(i, j)| (start + i as usize, start + j as usize)).collect();
                z = space.map_data_cycle(&lifted, &edges).map_err(|e| e.to_string())?;
                break;
            }
        }
        let base = space.pairing_vector(&z);
        let squares = space.complex().squares().len() as u32;
        for i in 0..100 {
            let size = rng.random_range(1..=40);
            let chain: Vec<u32> = (0..size).map(|_| rng.random_range(0..squares)).collect();
            let bd = space.complex().boundary2(&chain);
            if !space.pairing_vector(&bd).is_zero() {
                return Err(format!("{kind} chain {i}: cocycle pairs nonzero with a boundary"));
            }
            if space.pairing_vector(&xor_chains(&z, &bd)) != base {
                return Err(format!("{kind} chain {i}: pairing changed by a boundary"));
            }
        }
    }
    Ok(())
}

fn nested_suite() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for kind in SYSTEMS {
        let (lifted, space, radius) = fixture(kind)?;
        let signer = Signer::new(&space, &lifted, None).map_err(|e| e.to_string())?;
        for i in 0..100 {
            let len = rng.random_range(60..=400);
            let start = rng.random_range(0..=lifted.len() - len);
            let inner_len = rng.random_range(10..=len);
            let inner_start = start + rng.random_range(0..=len - inner_len);
            let outer = signer.signature(start, len, radius).map_err(|e| e.to_string())?;
            let inner = signer.signature(inner_start, inner_len, radius).map_err(|e| e.to_string())?;
            if !outer.signature.contains(&inner.signature).map_err(|e| e.to_string())? {
                return Err(format!("{kind} pair {i}: inner signature not contained in outer"));
            }
        }
    }
    Ok(())
}

fn unit_square() -> Result<(), String> {
    let pts = vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let tan = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let s = LiftedSeries::new(2, pts, tan).unwrap();
    let b = segment_barcode(&SegmentView::new(&s, 0, 4).unwrap(), 0.0, 2.0).map_err(|e| e.to_string())?;
    match b.bars.as_slice() {
        [bar] if bar.birth == 1.0 && bar.death == 2f64.sqrt() => Ok(()),
        bars => Err(format!("expected one bar [1, sqrt 2), got {bars:?}")),
    }
}
