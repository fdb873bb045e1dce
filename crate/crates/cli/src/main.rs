//! `tabdyn`: simulate the particle process, solve the shape jump chain, run
//! the claim checks and sample Gibbs measures.
//!
//! Set `TABDYN_WORKERS` to cap the number of worker threads.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tabdyn::ensemble::{replica_rng, run_replicas};
use tabdyn::gibbs::{sample_gibbs, sample_given_shape, test_gibbsianness, Verdict};
use tabdyn::jump_chain::{
    build_generator, gillespie_run, stationary_distribution, transient_distribution, Generator, ShapeDistribution,
};
use tabdyn::pdmp::{Engine, DEFAULT_EVENT_CAP};
use tabdyn::stats::normalize;
use tabdyn::verify::{self, EnsembleSource, Initial};
use tabdyn::{Complex, Error, HeightState, Mode, Parameters, SimConfig, YoungDiagram};

use output::{read_distribution, write_json, write_shapes_csv, Manifest};

const WORKERS_ENV: &str = "TABDYN_WORKERS";

#[derive(Parser)]
#[command(name = "tabdyn", version, about = "Particle dynamics on generalized Young tableaux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicas of the particle process from the empty tableau.
    Simulate(SimulateArgs),
    /// Work with the jump chain on Young diagrams.
    Chain {
        #[command(subcommand)]
        which: ChainCommand,
    },
    /// Run an exact or statistical check and emit a JSON report.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
    /// Draw states from a Gibbs measure.
    GibbsSample(GibbsArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ParamArgs {
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    z: Complex,
    #[arg(long = "z-prime", default_value = "0.5", allow_hyphen_values = true)]
    z_prime: Complex,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
}

impl ParamArgs {
    fn parameters(&self) -> tabdyn::Result<Parameters> {
        Parameters::from_complex(self.z, self.z_prime, self.r)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Full,
    Plancherel,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Plancherel => Mode::Plancherel,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
    /// Time horizon T.
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// Restrict the dynamics: JSON row lengths, "single", or "row:k".
    #[arg(long)]
    subdiagram: Option<String>,
    /// Write events-<k>.jsonl for every replica.
    #[arg(long)]
    #[serde(default)]
    log_events: bool,
    #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
    event_cap: u64,
    /// Output directory.
    #[arg(long, default_value = "tabdyn-out")]
    #[serde(skip, default)]
    out: PathBuf,
    /// Rerun the configuration recorded in a manifest (other flags except
    /// --out are ignored).
    #[arg(long)]
    #[serde(skip)]
    from_manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize)]
struct ChainCommon {
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = tabdyn::jump_chain::DEFAULT_MAX_SIZE)]
    max_size: usize,
    #[arg(long, default_value = "tabdyn-out")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ChainCommand {
    /// Sample final shapes of the jump chain by exact simulation.
    Gillespie {
        #[command(flatten)]
        common: ChainCommon,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial diagram as JSON row lengths.
        #[arg(long, default_value = "[]")]
        start: String,
    },
    /// Law of the chain at time T, by uniformization.
    Transient {
        #[command(flatten)]
        common: ChainCommon,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value = "[]")]
        start: String,
    },
    /// Stationary law of the chain restricted to |λ| ≤ N.
    Stationary {
        #[command(flatten)]
        common: ChainCommon,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Exact row sums of the Q-matrix for |λ| ≤ N.
    Rowsums {
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized exact trials of the formal identity.
    Identity {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shape law of the particle process against the jump chain.
    Claim4a {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = tabdyn::jump_chain::DEFAULT_MAX_SIZE)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "pdmp")]
        source: SourceArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation from level r′ against the process run at level r.
    Claim5a {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 2.0)]
        r_prime: f64,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-run occupation against the stationary law.
    Stationarity {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 14)]
        max_size: usize,
        #[arg(long, default_value_t = 10.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 30.0)]
        time: f64,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "empty")]
        initial: InitialArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The process restricted to the cell (1,1).
    SingleParticle {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceArg {
    Pdmp,
    Gillespie,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitialArg {
    Empty,
    Stationary,
}

#[derive(Args)]
struct GibbsArgs {
    /// Diagram as JSON row lengths.
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    shape: Option<String>,
    /// Shape distribution as CSV (diagram JSON, probability).
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Rescale the distribution file to total mass one (for truncated
    /// laws whose overflow mass was dropped).
    #[arg(long, requires = "dist")]
    renormalize: bool,
    #[arg(short = 'n', long, default_value_t = 1)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write JSON lines here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status: 0 pass or inconclusive, 1 failed check, 2 error.
enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Chain { which } => chain(which),
        Command::Verify { which } => verify_cmd(which),
        Command::GibbsSample(args) => gibbs_sample(args),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_workers() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("{WORKERS_ENV}={raw:?} is not a positive integer"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn parse_diagram(s: &str) -> anyhow::Result<YoungDiagram> {
    let rows: Vec<usize> = serde_json::from_str(s).with_context(|| format!("diagram {s:?} is not a JSON array of row lengths"))?;
    Ok(YoungDiagram::new(rows)?)
}

fn parse_subdiagram(s: &str) -> anyhow::Result<YoungDiagram> {
    if s == "single" {
        return Ok(YoungDiagram::one_row(1));
    }
    if let Some(k) = s.strip_prefix("row:") {
        let k: usize = k.parse().with_context(|| format!("bad row length in {s:?}"))?;
        if k == 0 {
            bail!("row length must be positive");
        }
        return Ok(YoungDiagram::one_row(k));
    }
    parse_diagram(s)
}

#[derive(Serialize)]
struct SimulateReport {
    replicas: usize,
    seed: u64,
    event_cap: u64,
    exploded: Vec<usize>,
    mean_events: f64,
    max_events: u64,
    mean_jumps: f64,
    mean_absorptions: f64,
    mean_rejections: f64,
    gibbs: Option<tabdyn::gibbs::GibbsReport>,
}

struct ReplicaOutcome {
    state: Option<HeightState>,
    stats: tabdyn::pdmp::RunStats,
}

fn simulate(mut args: SimulateArgs) -> anyhow::Result<Status> {
    if let Some(path) = &args.from_manifest {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest<SimulateArgs> = serde_json::from_str(&text).context("parsing manifest")?;
        if manifest.command != "simulate" {
            bail!("manifest was written by `{}`, not `simulate`", manifest.command);
        }
        let out = std::mem::take(&mut args.out);
        args = manifest.args;
        args.out = out;
    }
    let mode: Mode = args.mode.into();
    let params = args.params.parameters()?;
    let mut cfg = SimConfig::new(params, args.time, args.seed);
    cfg.mode = mode;
    cfg.event_cap = args.event_cap;
    cfg.subdiagram = args.subdiagram.as_deref().map(parse_subdiagram).transpose()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let out_dir = args.out.clone();
    let log_events = args.log_events;
    let outcomes = run_replicas(args.seed, args.replicas, |k, rng| {
        let mut engine = Engine::new(&cfg, HeightState::empty(params.r)?, &mut *rng)?;
        let mut log = Vec::new();
        let run = engine.run_with(|ev, _| {
            if log_events {
                log.push(*ev);
            }
        });
        if log_events {
            output::write_events(&out_dir.join(format!("events-{k}.jsonl")), &log).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        let stats = engine.stats().clone();
        match run {
            Ok(()) => Ok(ReplicaOutcome { state: Some(engine.into_state()), stats }),
            Err(Error::Explosion { .. }) => Ok(ReplicaOutcome { state: None, stats }),
            Err(e) => Err(e),
        }
    })?;

    let exploded: Vec<usize> = outcomes.iter().enumerate().filter(|(_, o)| o.state.is_none()).map(|(k, _)| k).collect();
    let finals: Vec<Option<HeightState>> = outcomes.iter().map(|o| o.state.clone()).collect();
    let states: Vec<HeightState> = finals.iter().flatten().cloned().collect();
    let mut counts = ShapeDistribution::new();
    for s in &states {
        *counts.entry(s.shape()).or_insert(0.0) += 1.0;
    }
    let n = outcomes.len().max(1) as f64;
    let mean = |f: fn(&tabdyn::pdmp::RunStats) -> u64| outcomes.iter().map(|o| f(&o.stats) as f64).sum::<f64>() / n;
    let report = SimulateReport {
        replicas: args.replicas,
        seed: args.seed,
        event_cap: args.event_cap,
        mean_events: mean(|s| s.events()),
        max_events: outcomes.iter().map(|o| o.stats.events()).max().unwrap_or(0),
        mean_jumps: mean(|s| s.jumps),
        mean_absorptions: mean(|s| s.absorptions),
        mean_rejections: mean(|s| s.rejections),
        gibbs: (cfg.subdiagram.is_none() && mode == Mode::Full).then(|| test_gibbsianness(&states)),
        exploded: exploded.clone(),
    };

    write_json(&args.out.join("finals.json"), &finals)?;
    write_shapes_csv(&args.out.join("shapes.csv"), &normalize(&counts))?;
    write_json(&args.out.join("report.json"), &report)?;
    let summary = serde_json::json!({
        "parameters": params,
        "mean_events": report.mean_events,
        "max_events": report.max_events,
        "exploded_replicas": exploded.len(),
    });
    write_json(&args.out.join("manifest.json"), &Manifest::new("simulate", args.clone(), summary))?;

    if exploded.is_empty() {
        Ok(Status::Ok)
    } else {
        eprintln!("{} replica(s) reached the event cap of {}", exploded.len(), args.event_cap);
        Ok(Status::Failed)
    }
}

fn chain(which: ChainCommand) -> anyhow::Result<Status> {
    match which {
        ChainCommand::Gillespie { common, time, replicas, seed, start } => {
            let params = common.params.parameters()?;
            let start_shape = parse_diagram(&start)?;
            let trajs = run_replicas(seed, replicas, |_, rng| gillespie_run(&start_shape, &params, time, DEFAULT_EVENT_CAP, rng))?;
            let mut counts = ShapeDistribution::new();
            for t in &trajs {
                *counts.entry(t.final_state().clone()).or_insert(0.0) += 1.0;
            }
            let mean_jumps = trajs.iter().map(|t| t.jumps() as f64).sum::<f64>() / replicas.max(1) as f64;
            std::fs::create_dir_all(&common.out)?;
            write_shapes_csv(&common.out.join("shapes.csv"), &normalize(&counts))?;
            let args = serde_json::json!({ "chain": "gillespie", "common": common, "time": time, "replicas": replicas, "seed": seed, "start": start_shape });
            let summary = serde_json::json!({ "parameters": params, "mean_jumps": mean_jumps });
            write_json(&common.out.join("manifest.json"), &Manifest::new("chain", args, summary))?;
        }
        ChainCommand::Transient { common, time, start } => {
            let params = common.params.parameters()?;
            let gen = build_generator(common.max_size, &params)?;
            let start_shape = parse_diagram(&start)?;
            let tr = transient_distribution(&gen, &start_shape, time)?;
            std::fs::create_dir_all(&common.out)?;
            write_shapes_csv(&common.out.join("shapes.csv"), &gen.to_distribution(&tr.probs))?;
            let args = serde_json::json!({ "chain": "transient", "common": common, "time": time, "start": start_shape });
            let summary = serde_json::json!({
                "parameters": params,
                "states": gen.states().len(),
                "overflow_mass": tr.overflow,
                "series_error": tr.series_error,
                "terms": tr.terms,
            });
            write_json(&common.out.join("manifest.json"), &Manifest::new("chain", args, summary))?;
        }
        ChainCommand::Stationary { common } => {
            let params = common.params.parameters()?;
            let gen: Generator = build_generator(common.max_size, &params)?;
            let st = stationary_distribution(&gen)?;
            std::fs::create_dir_all(&common.out)?;
            write_shapes_csv(&common.out.join("shapes.csv"), &gen.to_distribution(&st.probs))?;
            let args = serde_json::json!({ "chain": "stationary", "common": common });
            let summary = serde_json::json!({
                "parameters": params,
                "states": gen.states().len(),
                "residual": st.residual,
                "boundary_mass": st.boundary_mass,
                "converged": st.converged,
            });
            write_json(&common.out.join("manifest.json"), &Manifest::new("chain", args, summary))?;
        }
    }
    Ok(Status::Ok)
}

fn emit<T: Serialize>(report: &T, verdict: Verdict, out: Option<PathBuf>) -> anyhow::Result<Status> {
    let text = serde_json::to_string_pretty(report)?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        write_json(&dir.join("report.json"), report)?;
    }
    eprintln!("verdict: {}", serde_json::to_value(verdict)?.as_str().unwrap_or("?"));
    Ok(if verdict == Verdict::Fail { Status::Failed } else { Status::Ok })
}

fn verify_cmd(which: VerifyCommand) -> anyhow::Result<Status> {
    match which {
        VerifyCommand::Rowsums { max_size, out } => {
            let rep = verify::rowsum_check(max_size, &verify::standard_exact_parameter_sets());
            emit(&rep, rep.verdict, out)
        }
        VerifyCommand::Identity { trials, seed, out } => {
            let rep = verify::identity_trials(trials, seed);
            emit(&rep, rep.verdict, out)
        }
        VerifyCommand::Claim4a { params, time, replicas, max_size, seed, source, out } => {
            let source = match source {
                SourceArg::Pdmp => EnsembleSource::Pdmp,
                SourceArg::Gillespie => EnsembleSource::Gillespie,
            };
            let rep = verify::claim_4a_test(&params.parameters()?, time, replicas, max_size, seed, source)?;
            emit(&rep, rep.verdict, out)
        }
        VerifyCommand::Claim5a { params, r_prime, time, replicas, seed, out } => {
            let rep = verify::claim_5a_test(&params.parameters()?, r_prime, time, replicas, seed)?;
            emit(&rep, rep.verdict, out)
        }
        VerifyCommand::Stationarity { params, max_size, burn_in, time, replicas, seed, initial, out } => {
            let initial = match initial {
                InitialArg::Empty => Initial::Empty,
                InitialArg::Stationary => Initial::Stationary,
            };
            let rep = verify::stationarity_test(&params.parameters()?, max_size, burn_in, time, replicas, seed, initial)?;
            emit(&rep, rep.verdict, out)
        }
        VerifyCommand::SingleParticle { params, mode, samples, seed, out } => {
            let rep = verify::single_particle_test(&params.parameters()?, mode.into(), samples, seed)?;
            emit(&rep, rep.verdict, out)
        }
    }
}

fn gibbs_sample(args: GibbsArgs) -> anyhow::Result<Status> {
    if !(args.r.is_finite() && args.r > 0.0) {
        bail!("r = {} must be positive", args.r);
    }
    let mut rng = replica_rng(args.seed, 0);
    let mut lines = Vec::with_capacity(args.samples);
    if let Some(shape) = &args.shape {
        let shape = parse_diagram(shape)?;
        for _ in 0..args.samples {
            lines.push(serde_json::to_string(&sample_given_shape(&shape, args.r, &mut rng)?)?);
        }
    } else {
        let path = args.dist.as_ref().expect("clap enforces one of --shape, --dist");
        let mut dist = read_distribution(path)?;
        if args.renormalize {
            dist = normalize(&dist);
        }
        for _ in 0..args.samples {
            lines.push(serde_json::to_string(&sample_gibbs(&dist, args.r, &mut rng)?)?);
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    match args.out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(Status::Ok)
}
