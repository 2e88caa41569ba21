use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cycling_signatures::cubical::RoutePolicy;
use cycling_signatures::experiments::{ExperimentPlan, FREQUENT_THRESHOLD};
use cycling_signatures::pipeline::{self, io, PipelineConfig, SweepConfig};
use cycling_signatures::signatures::Method;
use cycling_signatures::systems::{lift_system, SystemKind};

/// Cycling signatures of time-series segments.
#[derive(Parser)]
#[command(name = "cycsig", version)]
struct Cli {
    /// Worker threads for signature computation (default: all cores).
    #[arg(long, global = true, env = "CYCSIG_THREADS")]
    threads: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a reference system and write a trajectory CSV plus sidecar.
    Generate(GenerateArgs),
    /// Build the comparison space of a trajectory.
    Space(SpaceArgs),
    /// Compute signatures of randomly sampled segments.
    Compute(ComputeArgs),
    /// Rank tables, frequency curves and summary statistics.
    Stats(StatsArgs),
    /// Inclusion graph of frequent rank-1 and rank-2 signatures (DOT).
    Graph(GraphArgs),
    /// Run a base config under several labelled variations.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a rank or frequency CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory of the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the default config for a system.
    Config {
        #[arg(long)]
        system: SystemKind,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    system: SystemKind,
    /// Samples to keep after burn-in.
    #[arg(long)]
    points: Option<usize>,
    /// Noise seed for stochastic systems.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long)]
    input: PathBuf,
    /// Space box size (default: the system's preset).
    #[arg(long)]
    r: Option<f64>,
    /// Sphere subdivision (default: the system's preset).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, value_enum, default_value = "bridge")]
    route: Route,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Route {
    Strict,
    Bridge,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    CycleSpace,
    Barcode,
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    space: PathBuf,
    /// `start:step:end` or a comma separated list.
    #[arg(long, default_value = "10:10:500")]
    lengths: String,
    #[arg(long, default_value_t = 200)]
    per_length: usize,
    /// Evaluation radius; repeat for several.
    #[arg(long = "radius", required = true)]
    radii: Vec<f64>,
    /// Tangent weight of the metric (default r k).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum, default_value = "cycle-space")]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    signatures: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Restrict to one radius (default: every radius in the table).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = FREQUENT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 0.01)]
    onset_threshold: f64,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    signatures: PathBuf,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = FREQUENT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Space(a) => space(a),
        Cmd::Compute(a) => compute(a, threads),
        Cmd::Stats(a) => stats(a),
        Cmd::Graph(a) => graph(a),
        Cmd::Sweep { config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut sw = SweepConfig::from_toml(&text)?;
            if threads.is_some() {
                sw.base.threads = threads;
            }
            let entries = pipeline::sweep(&sw)?;
            for e in &entries {
                match &e.error {
                    None => println!("{}: ok, max rank deviation {:?}", e.label, e.max_rank_deviation),
                    Some(err) => println!("{}: failed: {err}", e.label),
                }
            }
            if entries.iter().any(|e| e.error.is_some()) {
                bail!("some sweep configurations failed; see sweep.json");
            }
            Ok(())
        }
        Cmd::Plot { input, out, title } => {
            let title = title.unwrap_or_else(|| input.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            pipeline::plot_csv(&input, &out, &title)?;
            Ok(())
        }
        Cmd::Run { config, output } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = PipelineConfig::from_toml(&text)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let m = pipeline::run(&cfg)?;
            println!("b1 = {}; {} files in {}", m.b1, m.files.len(), cfg.output.display());
            for a in &m.analyses {
                println!(
                    "radius {}: rank-0 decline {:?}, extinction {:?}, {} frequent rank-1, {} frequent rank-2",
                    a.radius,
                    a.rank0_decline,
                    a.rank0_extinction,
                    a.rank1.len(),
                    a.rank2.len()
                );
            }
            println!("digest {}", m.digest);
            Ok(())
        }
        Cmd::Config { system } => {
            print!("{}", PipelineConfig::preset(system).to_toml()?);
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = PipelineConfig::preset(a.system);
    if let Some(p) = a.points {
        cfg.trajectory.points = p;
    }
    if let Some(s) = a.seed {
        cfg.trajectory.seed = s;
    }
    if let Some(b) = a.burn_in {
        cfg.trajectory.burn_in = b;
    }
    let (series, meta) = pipeline::generate(&cfg)?;
    io::write_trajectory(&a.out, &series, &meta)?;
    println!("{} samples written to {}", series.len(), a.out.display());
    Ok(())
}

fn space(a: SpaceArgs) -> Result<()> {
    let (series, meta) = io::read_trajectory(&a.input)?;
    let mut cfg = PipelineConfig::preset(meta.spec.system);
    cfg.grid.r = a.r.unwrap_or(cfg.grid.r);
    cfg.grid.k = a.k.unwrap_or(cfg.grid.k);
    cfg.grid.route = match a.route {
        Route::Strict => RoutePolicy::Strict,
        Route::Bridge => RoutePolicy::Bridge,
    };
    let (_, y) = pipeline::build_space(&series, &cfg)?;
    io::write_json(&a.out, &y.summary())?;
    let [v, e, s] = y.complex().counts();
    println!("{} boxes, cells {v}/{e}/{s}, b1 = {}", y.n_boxes(), y.b1());
    Ok(())
}

fn compute(a: ComputeArgs, threads: Option<usize>) -> Result<()> {
    let space = pipeline::load_space(&a.space).with_context(|| format!("loading {}", a.space.display()))?;
    let r = space.grid().r;
    if let Some(bad) = a.radii.iter().find(|&&x| !(x > 0.0) || x > r) {
        bail!("evaluation radius {bad} must lie in (0, {r}] for this space");
    }
    let plan = ExperimentPlan { lengths: ExperimentPlan::parse_lengths(&a.lengths)?, per_length: a.per_length, seed: a.seed };
    plan.validate()?;
    let (series, _) = io::read_trajectory(&a.traj)?;
    let lifted = lift_system(&series)?;
    let method = match a.method {
        MethodArg::CycleSpace => Method::CycleSpace,
        MethodArg::Barcode => Method::Barcode,
    };
    let recs = pipeline::compute(&space, &lifted, &plan, &a.radii, a.c, method, threads)?;
    io::write_records(&a.out, &recs)?;
    println!("{} signatures written to {}", recs.len(), a.out.display());
    Ok(())
}

fn selected_radii(recs: &[cycling_signatures::signatures::SignatureRecord], radius: Option<f64>) -> Result<Vec<f64>> {
    let all = pipeline::radii_of(recs);
    match radius {
        Some(r) if all.contains(&r) => Ok(vec![r]),
        Some(r) => bail!("no records at radius {r} (found {all:?})"),
        None => Ok(all),
    }
}

fn ambient(recs: &[cycling_signatures::signatures::SignatureRecord]) -> Result<usize> {
    match recs.first() {
        Some(r) => Ok(r.signature.ambient()),
        None => bail!("signature table is empty"),
    }
}

fn stats(a: StatsArgs) -> Result<()> {
    let recs = io::read_records(&a.signatures)?;
    let b1 = ambient(&recs)?;
    fs::create_dir_all(&a.out_dir)?;
    for r in selected_radii(&recs, a.radius)? {
        let (an, _) = pipeline::write_stats(&a.out_dir, &recs, b1, r, a.threshold, a.onset_threshold)?;
        println!(
            "radius {r}: rank-0 decline {:?}, extinction {:?}",
            an.rank0_decline, an.rank0_extinction
        );
        for s in an.rank1.iter().chain(&an.rank2) {
            println!("  {} {} peak {:.3} onset {:?}", s.label, s.key, s.peak, s.onset);
        }
        if a.plot {
            let tag = pipeline::radius_tag(r);
            for name in [format!("rank_{tag}"), format!("curves1_{tag}"), format!("curves2_{tag}")] {
                let csv = a.out_dir.join(format!("{name}.csv"));
                pipeline::plot_csv(&csv, &a.out_dir.join(format!("{name}.svg")), &name)?;
            }
        }
    }
    Ok(())
}

fn graph(a: GraphArgs) -> Result<()> {
    let recs = io::read_records(&a.signatures)?;
    let b1 = ambient(&recs)?;
    let radii = selected_radii(&recs, a.radius)?;
    if radii.len() != 1 {
        bail!("table has several radii {radii:?}; pick one with --radius");
    }
    let recs = cycling_signatures::experiments::at_radius(&recs, radii[0]);
    let an = cycling_signatures::experiments::Analysis::new(&recs, b1, a.threshold, 0.01)?;
    fs::write(&a.out, pipeline::inclusion_dot(&an)?)?;
    println!("{} rank-1 and {} rank-2 nodes, {} edges", an.rank1.len(), an.rank2.len(), an.inclusions.len());
    Ok(())
}
