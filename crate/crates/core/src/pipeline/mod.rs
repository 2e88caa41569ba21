//! End-to-end pipeline: generate a trajectory, cover it by a comparison space,
//! compute signatures of sampled segments, then tabulate, graph and plot them.
//!
//! Every run writes a `manifest.json` listing each output with its SHA-256.
//! The manifest `digest` covers the resolved config and the file digests but
//! not the wall-clock timings, so it is stable across reruns.

pub mod config;
pub mod io;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::PipelineConfig;

use crate::cubical::{ComparisonSpace, SpaceSummary};
use crate::error::{Error, Result};
use crate::experiments::{
    at_radius, frequency_curves, inclusion_graph, max_rank_deviation, rank_table, run_plan, stability_sweep,
    Analysis, ExperimentPlan,
};
use crate::signatures::{SignatureRecord, Signer};
use crate::systems::{integrate_ode, integrate_sde, lift_system, LiftedSeries, TimeSeries};
use io::TrajectoryMeta;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SPACE_FILE: &str = "space.json";
pub const SIGNATURES_FILE: &str = "signatures.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

/// Integrate the configured system, drop the burn-in and (for noisy systems) thin.
pub fn generate(cfg: &PipelineConfig) -> Result<(TimeSeries, TrajectoryMeta)> {
    let spec = cfg.spec();
    let t = &cfg.trajectory;
    let total = t.points + t.burn_in;
    let (series, seed, dt, thin) = if spec.noise > 0.0 {
        let steps = total * t.thin - 1;
        let s = integrate_sde(&spec, t.dt, steps, t.seed)?.thin(t.thin).skip(t.burn_in);
        (s, Some(t.seed), Some(t.dt), Some(t.thin))
    } else {
        (integrate_ode(&spec, total)?.skip(t.burn_in), None, None, None)
    };
    let meta = TrajectoryMeta {
        format: io::TRAJECTORY_FORMAT,
        spec,
        seed,
        points: series.len(),
        burn_in: t.burn_in,
        dt,
        thin,
        columns: io::trajectory_columns(series.dim),
    };
    Ok((series, meta))
}

/// Lift a trajectory and cover it with the configured grid.
pub fn build_space(series: &TimeSeries, cfg: &PipelineConfig) -> Result<(LiftedSeries, ComparisonSpace)> {
    let lifted = lift_system(series)?;
    let space = ComparisonSpace::build(&lifted, cfg.grid()?)?.with_policy(cfg.grid.route);
    Ok((lifted, space))
}

/// Compute signatures on a dedicated pool of `threads` workers (all cores when `None`).
pub fn compute(
    space: &ComparisonSpace,
    lifted: &LiftedSeries,
    plan: &ExperimentPlan,
    radii: &[f64],
    c: Option<f64>,
    method: crate::signatures::Method,
    threads: Option<usize>,
) -> Result<Vec<SignatureRecord>> {
    let signer = Signer::new(space, lifted, c)?.with_method(method);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_plan(&signer, plan, radii))
}

/// `5` -> `r5`, `0.18` -> `r0.18`; used to tag per-radius outputs.
pub fn radius_tag(r: f64) -> String {
    format!("r{r}")
}

/// Distinct radii in order of first appearance.
pub fn radii_of(records: &[SignatureRecord]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in records {
        if !out.contains(&r.radius) {
            out.push(r.radius);
        }
    }
    out
}

/// Rank table, rank-1/2 frequency curves and the analysis for one radius;
/// returns the files written.
pub fn write_stats(
    dir: &Path,
    records: &[SignatureRecord],
    b1: usize,
    radius: f64,
    threshold: f64,
    onset_threshold: f64,
) -> Result<(Analysis, Vec<PathBuf>)> {
    let recs = at_radius(records, radius);
    let tag = radius_tag(radius);
    let analysis = Analysis::new(&recs, b1, threshold, onset_threshold)?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        files.push(p);
        Ok(())
    };
    put(format!("rank_{tag}.csv"), rank_table(&recs, b1).to_csv())?;
    for rank in [1, 2] {
        put(format!("curves{rank}_{tag}.csv"), frequency_curves(&recs, rank).to_csv())?;
    }
    put(format!("analysis_{tag}.json"), serde_json::to_string_pretty(&analysis)? + "\n")?;
    Ok((analysis, files))
}

/// DOT inclusion graph between the frequent rank-1 and rank-2 signatures.
pub fn inclusion_dot(analysis: &Analysis) -> Result<String> {
    let v = analysis.rank1.iter().map(|s| analysis.subspace(s)).collect::<Result<Vec<_>>>()?;
    let w = analysis.rank2.iter().map(|s| analysis.subspace(s)).collect::<Result<Vec<_>>>()?;
    Ok(inclusion_graph(&v, &w)?.to_dot())
}

pub fn write_graph(dir: &Path, analysis: &Analysis) -> Result<PathBuf> {
    let p = dir.join(format!("inclusion_{}.dot", radius_tag(analysis.radius)));
    fs::write(&p, inclusion_dot(analysis)?)?;
    Ok(p)
}

/// Render a rank table or frequency-curve CSV to SVG, detected from its header.
pub fn plot_csv(input: &Path, output: &Path, title: &str) -> Result<()> {
    let text = fs::read_to_string(input)?;
    let header = text.lines().next().unwrap_or("");
    let svg = if header.split(',').nth(1).is_some_and(|h| h.starts_with("rank")) {
        svg::rank_plot(&crate::experiments::RankTable::from_csv(&text)?, title)
    } else {
        // Keys of any rank parse against their own width; `zero` never appears in curves.
        let ambient = header.split(',').nth(1).map_or(0, |k| k.split('|').next().unwrap_or("").len());
        let rank = header.split(',').nth(1).map_or(1, |k| k.split('|').count());
        svg::curves_plot(&crate::experiments::FrequencyCurves::from_csv(&text, rank, ambient)?, title)
    };
    fs::write(output, svg)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub trajectory_seed: Option<u64>,
    pub plan_seed: u64,
    pub b1: usize,
    pub analyses: Vec<Analysis>,
    pub files: Vec<FileEntry>,
    /// SHA-256 over the config and file digests; independent of timings.
    pub digest: String,
    pub stages: Vec<StageTiming>,
}

/// What a failed stage leaves behind in `error.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub stage: String,
    pub error: String,
}

struct Stages {
    timings: Vec<StageTiming>,
}

impl Stages {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log::info!("stage {name}");
        let t = Instant::now();
        let out = f().map_err(|e| Error::Stage { stage: name.to_string(), source: Box::new(e) })?;
        let seconds = t.elapsed().as_secs_f64();
        log::info!("stage {name} done in {seconds:.2}s");
        self.timings.push(StageTiming { stage: name.to_string(), seconds });
        Ok(out)
    }
}

/// Run every stage into `cfg.output`. On failure an [`ErrorReport`] is
/// written to `error.json` in the output directory (when it exists).
pub fn run(cfg: &PipelineConfig) -> Result<Manifest> {
    let out = run_stages(cfg);
    if let Err(e) = &out {
        let stage = match e {
            Error::Stage { stage, .. } => stage.clone(),
            _ => "config".to_string(),
        };
        if cfg.output.is_dir() {
            let _ = io::write_json(&cfg.output.join(ERROR_FILE), &ErrorReport { stage, error: e.to_string() });
        }
    }
    out
}

fn run_stages(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let plan = cfg.plan()?;
    let dir = cfg.output.clone();
    fs::create_dir_all(&dir)?;
    let _ = fs::remove_file(dir.join(ERROR_FILE));
    let mut st = Stages { timings: Vec::new() };
    let mut files: Vec<PathBuf> = Vec::new();

    let (series, meta) = st.run("generate", || {
        let (s, m) = generate(cfg)?;
        io::write_trajectory(&dir.join(TRAJECTORY_FILE), &s, &m)?;
        Ok((s, m))
    })?;
    files.push(dir.join(TRAJECTORY_FILE));
    files.push(io::meta_path(&dir.join(TRAJECTORY_FILE)));

    let (lifted, space) = st.run("space", || {
        let (l, y) = build_space(&series, cfg)?;
        io::write_json(&dir.join(SPACE_FILE), &y.summary())?;
        log::info!("comparison space: {} boxes, b1 = {}", y.n_boxes(), y.b1());
        Ok((l, y))
    })?;
    files.push(dir.join(SPACE_FILE));

    let records = st.run("compute", || {
        let r = compute(&space, &lifted, &plan, &cfg.signatures.radii, cfg.signatures.c, cfg.signatures.method, cfg.threads)?;
        io::write_records(&dir.join(SIGNATURES_FILE), &r)?;
        Ok(r)
    })?;
    files.push(dir.join(SIGNATURES_FILE));

    let mut analyses = Vec::new();
    st.run("stats", || {
        for &r in &cfg.signatures.radii {
            let (a, f) = write_stats(&dir, &records, space.b1(), r, cfg.stats.threshold, cfg.stats.onset_threshold)?;
            files.extend(f);
            analyses.push(a);
        }
        Ok(())
    })?;

    st.run("graph", || {
        for a in &analyses {
            files.push(write_graph(&dir, a)?);
        }
        Ok(())
    })?;

    st.run("plot", || {
        for &r in &cfg.signatures.radii {
            let tag = radius_tag(r);
            let name = cfg.system.preset;
            for (csv, title) in [
                (format!("rank_{tag}"), format!("{name}: cycling ranks at radius {r}")),
                (format!("curves1_{tag}"), format!("{name}: rank 1 signatures at radius {r}")),
                (format!("curves2_{tag}"), format!("{name}: rank 2 signatures at radius {r}")),
            ] {
                let svg = dir.join(format!("{csv}.svg"));
                plot_csv(&dir.join(format!("{csv}.csv")), &svg, &title)?;
                files.push(svg);
            }
        }
        Ok(())
    })?;

    let entries = files
        .iter()
        .map(|p| {
            Ok(FileEntry {
                path: p.strip_prefix(&dir).unwrap_or(p).to_string_lossy().into_owned(),
                bytes: fs::metadata(p)?.len(),
                sha256: io::file_digest(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // Where the run went and how many threads it used do not change its outputs.
    let canonical = PipelineConfig { output: PathBuf::new(), threads: None, ..cfg.clone() };
    let mut hashed = serde_json::to_string(&(&canonical, &entries))?;
    hashed.push_str(env!("CARGO_PKG_VERSION"));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        trajectory_seed: meta.seed,
        plan_seed: plan.seed,
        b1: space.b1(),
        analyses,
        files: entries,
        digest: io::sha256_hex(hashed.as_bytes()),
        stages: st.timings,
    };
    io::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// A base config plus labelled overrides, each run into `<output>/<label>`.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub base: PipelineConfig,
    pub variations: Vec<(String, toml::Table)>,
}

impl SweepConfig {
    /// ```toml
    /// [base.system]
    /// preset = "lorenz"
    ///
    /// [[variation]]
    /// label = "y9.1"
    /// [variation.set.system]
    /// initial = [0.0, 9.1, 0.0]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut top: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let base = match top.remove("base") {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(Error::Parse("sweep config needs a [base] table".into())),
        };
        let base = PipelineConfig::from_toml(&toml::to_string(&base).map_err(|e| Error::Parse(e.to_string()))?)?;
        let mut variations = Vec::new();
        if let Some(v) = top.remove("variation") {
            let arr = v.as_array().ok_or_else(|| Error::Parse("'variation' must be an array of tables".into()))?;
            for item in arr {
                let t = item.as_table().ok_or_else(|| Error::Parse("variation entries must be tables".into()))?;
                let label = t
                    .get("label")
                    .and_then(toml::Value::as_str)
                    .ok_or_else(|| Error::Parse("every variation needs a label".into()))?;
                if label.is_empty() || label.contains(['/', '\\']) || label.starts_with('.') {
                    return Err(Error::Parse(format!("variation label {label:?} is not a plain directory name")));
                }
                let set = t.get("set").and_then(toml::Value::as_table).cloned().unwrap_or_default();
                variations.push((label.to_string(), set));
            }
        }
        if let Some(k) = top.keys().next() {
            return Err(Error::Parse(format!("unknown sweep key {k:?}")));
        }
        Ok(SweepConfig { base, variations })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub digest: Option<String>,
    pub analyses: Vec<Analysis>,
    /// Largest rank-fraction difference to the first successful run, per radius.
    pub max_rank_deviation: Vec<f64>,
    pub error: Option<String>,
}

/// Run every variation; failures are recorded and do not stop the sweep.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepEntry>> {
    let root = cfg.base.output.clone();
    fs::create_dir_all(&root)?;
    let mut configs = Vec::with_capacity(cfg.variations.len());
    for (label, set) in &cfg.variations {
        let mut over = set.clone();
        over.insert("output".into(), toml::Value::String(root.join(label).to_string_lossy().into_owned()));
        configs.push((label.clone(), cfg.base.with_overrides(over)));
    }
    let outcomes = stability_sweep(&configs, |c| {
        let c = c.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        fs::create_dir_all(&c.output)?;
        fs::write(c.output.join("config.toml"), c.to_toml()?)?;
        let m = run(c)?;
        let tables = c
            .signatures
            .radii
            .iter()
            .map(|&r| {
                let text = fs::read_to_string(c.output.join(format!("rank_{}.csv", radius_tag(r))))?;
                crate::experiments::RankTable::from_csv(&text)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((m, tables))
    });
    let reference = outcomes.iter().find_map(|o| o.result.as_ref().ok().map(|(_, t)| t.clone()));
    let entries: Vec<SweepEntry> = outcomes
        .into_iter()
        .map(|o| match o.result {
            Ok((m, tables)) => SweepEntry {
                label: o.label,
                digest: Some(m.digest),
                analyses: m.analyses,
                max_rank_deviation: tables
                    .iter()
                    .zip(reference.iter().flatten())
                    .map(|(t, r)| max_rank_deviation(t, r))
                    .collect(),
                error: None,
            },
            Err(e) => SweepEntry {
                label: o.label,
                digest: None,
                analyses: Vec::new(),
                max_rank_deviation: Vec::new(),
                error: Some(e),
            },
        })
        .collect();
    io::write_json(&root.join("sweep.json"), &entries)?;
    Ok(entries)
}

/// Load a saved space summary and rebuild (and verify) the space.
pub fn load_space(path: &Path) -> Result<ComparisonSpace> {
    let summary: SpaceSummary = io::read_json(path)?;
    ComparisonSpace::from_summary(&summary)
}
