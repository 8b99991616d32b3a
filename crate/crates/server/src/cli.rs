//! `inoculate` command line.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use inoculate_core::assessment::{delta, write_delta_csv, DeltaReport, Phase};
use inoculate_core::engine::{replay_session, GameState, PlayerEvent};
use inoculate_core::pack::{default_pack, parse_pack, validate_pack, ScenarioPack};
use inoculate_core::sim::{write_mean_csv, write_tick_csv, EngagementWeights, GraphSpec, ProfitParams, PropagationParams};
use serde::Deserialize;

use crate::logfile::{pack_hash, read_log};
use crate::simulate::{ResolvedSimulation, SimulationRequest};
use crate::store::PackRegistry;

#[derive(Debug, Parser)]
#[command(name = "inoculate", version, about = "Misinformation-inoculation game runtime")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Parse and validate a pack file.
    Validate { file: PathBuf },
    /// Run the spread simulation and write a per-tick CSV.
    Simulate(SimulateArgs),
    /// Replay an event log and print the final resources.
    Replay {
        logfile: PathBuf,
        /// Pack the log was recorded against (built-in pack if omitted).
        #[arg(long)]
        pack: Option<PathBuf>,
    },
    /// Write pre/post assessment deltas for every session log in a directory.
    AssessmentExport {
        dir: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// Extra packs the logs may refer to.
        #[arg(long, num_args = 1..)]
        pack: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Additional pack files; the built-in pack is always loaded.
    #[arg(long, num_args = 1..)]
    pub pack: Vec<PathBuf>,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// Directory holding the built web client.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Pack to read `--preset` from (built-in pack if omitted).
    #[arg(long)]
    pub pack: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub bots: Option<usize>,
    #[arg(long)]
    pub graph_seed: Option<u64>,
    #[arg(long)]
    pub base_share: Option<f64>,
    #[arg(long)]
    pub affinity_weight: Option<f64>,
    #[arg(long)]
    pub bot_share: Option<f64>,
    #[arg(long)]
    pub moderation: Option<f64>,
    #[arg(long)]
    pub ticks: Option<u32>,
    /// Seed nodes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub profit: bool,
    #[arg(long)]
    pub ad_rate: Option<f64>,
    #[arg(long)]
    pub mod_cost: Option<f64>,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Serve(args) => serve(args, out),
        Command::Validate { file } => validate(&file, out),
        Command::Simulate(args) => simulate(&args, out),
        Command::Replay { logfile, pack } => replay(&logfile, pack.as_deref(), out, err),
        Command::AssessmentExport { dir, csv, pack } => assessment_export(&dir, &csv, &pack, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn load_pack(path: Option<&Path>) -> anyhow::Result<ScenarioPack> {
    match path {
        None => Ok(default_pack()),
        Some(p) => {
            let raw = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            parse_pack(&raw).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))
        }
    }
}

fn serve(args: ServeArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();

    let mut packs = PackRegistry::with_default();
    for p in &args.pack {
        packs.load_file(p)?;
    }
    let (state, report) = crate::AppState::open(packs, &args.data_dir)?;
    tracing::info!(
        restored = report.restored,
        truncated = report.truncated.len(),
        skipped = report.skipped.len(),
        "sessions recovered"
    );
    let app = crate::router(state, args.static_dir);

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse()?;
        let listener = tokio::net::TcpListener::bind(addr).await?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(0)
    })
}

fn validate(file: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    let raw = std::fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    let report = match parse_pack(&raw) {
        Err(e) => {
            for issue in &e.issues {
                writeln!(out, "error: {issue}")?;
            }
            writeln!(out, "{}: {} error(s), not parsed", file.display(), e.issues.len())?;
            return Ok(1);
        }
        Ok(pack) => validate_pack(&pack),
    };
    for issue in &report.errors {
        writeln!(out, "error: {issue}")?;
    }
    for issue in &report.warnings {
        writeln!(out, "warning: {issue}")?;
    }
    writeln!(
        out,
        "{}: {} error(s), {} warning(s)",
        file.display(),
        report.errors.len(),
        report.warnings.len()
    )?;
    Ok(if report.is_playable() { 0 } else { 1 })
}

impl SimulateArgs {
    fn resolve(&self) -> anyhow::Result<ResolvedSimulation> {
        let mut base = match &self.preset {
            Some(_) => {
                let pack = load_pack(self.pack.as_deref())?;
                let req = SimulationRequest {
                    preset: self.preset.clone(),
                    ..Default::default()
                };
                req.resolve(&pack).map_err(|e| anyhow::anyhow!("{e}"))?
            }
            None => ResolvedSimulation {
                graph: GraphSpec { n: 200, m: 2, bots: 0, seed: 0 },
                propagation: PropagationParams {
                    base_share: 0.1,
                    affinity_weight: 0.0,
                    bot_share: 0.0,
                    moderation_rate: 0.0,
                    ticks: 30,
                    seeds: BTreeSet::from([0]),
                },
                profit: None,
                runs: 1,
                seed: 0,
            },
        };
        let g = &mut base.graph;
        g.n = self.n.unwrap_or(g.n);
        g.m = self.m.unwrap_or(g.m);
        g.bots = self.bots.unwrap_or(g.bots);
        if self.preset.is_none() {
            g.seed = self.seed.unwrap_or(g.seed);
        }
        g.seed = self.graph_seed.unwrap_or(g.seed);
        let p = &mut base.propagation;
        p.base_share = self.base_share.unwrap_or(p.base_share);
        p.affinity_weight = self.affinity_weight.unwrap_or(p.affinity_weight);
        p.bot_share = self.bot_share.unwrap_or(p.bot_share);
        p.moderation_rate = self.moderation.unwrap_or(p.moderation_rate);
        p.ticks = self.ticks.unwrap_or(p.ticks);
        if let Some(seeds) = &self.seeds {
            p.seeds = seeds.iter().copied().collect();
        }
        base.runs = self.runs.unwrap_or(base.runs);
        base.seed = self.seed.unwrap_or(base.seed);
        if self.profit || self.ad_rate.is_some() || self.mod_cost.is_some() {
            let current = base.profit.take().unwrap_or(ProfitParams {
                ad_rate: 0.02,
                moderation_cost_rate: 0.05,
                engagement_weights: EngagementWeights::default(),
            });
            base.profit = Some(ProfitParams {
                ad_rate: self.ad_rate.unwrap_or(current.ad_rate),
                moderation_cost_rate: self.mod_cost.unwrap_or(current.moderation_cost_rate),
                ..current
            });
        }
        base.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(base)
    }
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let resolved = args.resolve()?;
    let output = resolved.run()?;
    let mut buf = Vec::new();
    if resolved.runs == 1 {
        let profit = output.profit.as_ref().map(|p| p.sample.as_slice());
        write_tick_csv(&mut buf, &output.sample.per_tick, profit)?;
    } else {
        let profit = output.profit.as_ref().map(|p| p.mean.as_slice());
        write_mean_csv(&mut buf, &output.summary, profit)?;
    }
    match &args.csv {
        Some(path) => {
            std::fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?;
            let s = &output.summary;
            writeln!(
                out,
                "runs={} final_informed_fraction={:.4} (sd {:.4}) total_shares={:.2}",
                s.runs, s.final_informed_fraction.mean, s.final_informed_fraction.stddev, s.total_shares.mean
            )?;
        }
        None => out.write_all(&buf)?,
    }
    Ok(0)
}

/// Plain JSON log form (as checked into test fixtures).
#[derive(Debug, Deserialize)]
struct JsonLog {
    pack_id: String,
    seed: u64,
    #[serde(default)]
    session_id: Option<String>,
    events: Vec<PlayerEvent>,
}

struct Replayed {
    session_id: String,
    state: GameState,
    torn: bool,
}

fn replay_file(path: &Path, pack: &ScenarioPack) -> anyhow::Result<Replayed> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    let (pack_id, hash, seed, session_id, events, torn) = if first == Some(&b'{') {
        let log: JsonLog = serde_json::from_slice(&bytes)?;
        let id = log
            .session_id
            .unwrap_or_else(|| inoculate_core::engine::default_session_id(log.seed));
        (log.pack_id, None, log.seed, id, log.events, false)
    } else {
        let log = crate::logfile::read_log_bytes(&bytes)?;
        let h = log.header;
        (h.pack_id, Some(h.pack_hash), h.seed, h.session_id, log.events, log.torn)
    };
    if pack_id != pack.pack_id {
        bail!("log was recorded against pack `{pack_id}`, not `{}`", pack.pack_id);
    }
    if hash.is_some_and(|h| h != pack_hash(pack)) {
        bail!("pack `{pack_id}` content differs from the one the log was recorded against");
    }
    let state = replay_session(pack, seed, session_id.clone(), &events)?;
    Ok(Replayed {
        session_id,
        state,
        torn,
    })
}

fn consistency_problem(s: &GameState) -> Option<String> {
    if s.max_support < 1 || s.support < 0 || s.support > s.max_support {
        return Some(format!("support {} outside [0, {}]", s.support, s.max_support));
    }
    if !(s.apathy_multiplier > 0.0 && s.apathy_multiplier <= 1.0) {
        return Some(format!("apathy multiplier {} outside (0, 1]", s.apathy_multiplier));
    }
    None
}

fn replay(logfile: &Path, pack: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let pack = load_pack(pack)?;
    let r = replay_file(logfile, &pack)?;
    if r.torn {
        writeln!(err, "warning: dropped a torn record at the end of the log")?;
    }
    let s = &r.state;
    writeln!(out, "session {}", r.session_id)?;
    writeln!(out, "events {}", s.event_log.len())?;
    writeln!(out, "scene {}", s.scene_id)?;
    writeln!(out, "money {}", s.money)?;
    writeln!(out, "support {}/{}", s.support, s.max_support)?;
    writeln!(out, "apathy {}", s.apathy_multiplier)?;
    writeln!(out, "flags {}", s.flags.iter().cloned().collect::<Vec<_>>().join(","))?;
    if let Some(problem) = consistency_problem(s) {
        writeln!(err, "inconsistent final state: {problem}")?;
        return Ok(1);
    }
    Ok(0)
}

fn assessment_export(
    dir: &Path,
    csv: &Path,
    extra_packs: &[PathBuf],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<i32> {
    let mut packs = PackRegistry::with_default();
    for p in extra_packs {
        packs.load_file(p)?;
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "log"))
        .collect();
    paths.sort();

    let mut rows: Vec<(String, DeltaReport)> = Vec::new();
    let mut incomplete = 0;
    for path in &paths {
        let header = match read_log(path) {
            Ok(log) => log.header,
            Err(e) => {
                writeln!(err, "skipping {}: {e}", path.display())?;
                continue;
            }
        };
        let Some(pack) = packs.get(&header.pack_id) else {
            writeln!(err, "skipping {}: pack `{}` not loaded", path.display(), header.pack_id)?;
            continue;
        };
        let replayed = match replay_file(path, &pack.pack) {
            Ok(r) => r,
            Err(e) => {
                writeln!(err, "skipping {}: {e:#}", path.display())?;
                continue;
            }
        };
        let a = &replayed.state.assessments;
        match (a.get(&Phase::Pre), a.get(&Phase::Post)) {
            (Some(pre), Some(post)) => rows.push((replayed.session_id, delta(pre, post)?)),
            _ => incomplete += 1,
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let file = std::fs::File::create(csv).with_context(|| format!("creating {}", csv.display()))?;
    write_delta_csv(file, &rows)?;
    writeln!(
        out,
        "{} session(s) exported, {} without both assessments, {} log file(s) read",
        rows.len(),
        incomplete,
        paths.len()
    )?;
    Ok(0)
}
