//! `vnfrep`: dimensioning, traffic engineering and VNF placement runs.
//!
//! Exit codes: 0 success, 1 no solution (infeasible stage, solver gave up,
//! oracle mismatch), 2 usage or configuration error. stdout carries one
//! `key=value` summary line; details go to stderr and to files under
//! `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vnfrep_core::formulations::{build_dimensioning_model, build_ra_model, build_te_model};
use vnfrep_core::scenarios::{
    emit_report, finish, placement_doc, prepare, resolve_max_dc, run_dimensioning, run_te,
    scenario_params, sweep_from, AutoTag, ConfigError, DimResult, PipelineError, MaxDc, PipelineOutcome, Prepared, ScenarioConfig,
    ScenarioName, Stage, TeResult, Timing,
};
use vnfrep_core::tiny::{oracle_check, parse_tiny};
use vnfrep_milp::{export_lp, MilpModel, SolverConfig};

/// Environment variable naming the external solver command for
/// `--backend external` and for configs that say `backend = "external"`.
const SOLVER_CMD_ENV: &str = "VNFREP_SOLVER_CMD";

#[derive(Parser)]
#[command(name = "vnfrep", version, about = "VNF placement with replication over a dimensioned network")]
struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Replace the scenario named in the config.
    #[arg(long)]
    scenario: Option<ScenarioName>,
    /// Per-node VNF cap for the constrained scenarios.
    #[arg(long)]
    w_max: Option<usize>,
    /// `embedded`, `external` (command from VNFREP_SOLVER_CMD) or
    /// `external:<command>`.
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load the config, topology, traffic and candidate paths.
    Validate { config: PathBuf },
    /// Run dimensioning, TE and RA and write the report.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        r_max: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the RA model as `model.lp`.
        #[arg(long)]
        write_lp: bool,
        /// Recompute dimensioning and TE even if cached.
        #[arg(long)]
        no_cache: bool,
    },
    /// One run per r_max value, sharing dimensioning and TE.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        r_values: Vec<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        no_cache: bool,
    },
    /// Write one stage's model in LP format.
    ExportLp {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum)]
        stage: LpStage,
        #[arg(long)]
        r_max: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        no_cache: bool,
    },
    /// Solve a tiny instance with the MILP and the brute-force oracle.
    OracleCheck { instance: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum LpStage {
    Dim,
    Te,
    Ra,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    NoSolution(String),
    /// Summary line for stdout; exits 1.
    Mismatch(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::Topology(_) | PipelineError::Invalid(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::NoSolution(other.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            println!("status=error");
            ExitCode::from(2)
        }
        Err(Failure::NoSolution(msg)) => {
            eprintln!("error: {msg}");
            println!("status=failed");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(line)) => {
            println!("{line}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Validate { config } => validate(&config),
        Command::Run { config, overrides, r_max, out, write_lp, no_cache } => {
            let mut cfg = load(&config, &overrides)?;
            if let Some(r) = r_max {
                cfg.ra.r_max = r;
            }
            cfg.validate()?;
            run(&cfg, &out, write_lp, !no_cache)
        }
        Command::Sweep { config, overrides, r_values, out, no_cache } => {
            let cfg = load(&config, &overrides)?;
            cfg.validate()?;
            sweep(&cfg, &r_values, &out, !no_cache)
        }
        Command::ExportLp { config, overrides, stage, r_max, out, no_cache } => {
            let mut cfg = load(&config, &overrides)?;
            if let Some(r) = r_max {
                cfg.ra.r_max = r;
            }
            cfg.validate()?;
            export(&cfg, stage, &out, !no_cache)
        }
        Command::OracleCheck { instance } => oracle(&instance),
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = ov.scenario {
        cfg.ra.scenario = s;
        if !s.constrained() {
            cfg.ra.w_max = None;
        }
        if s != ScenarioName::MinLbConstr {
            cfg.ra.max_dc = None;
        } else if cfg.ra.max_dc.is_none() {
            cfg.ra.max_dc = Some(MaxDc::Auto(AutoTag::Auto));
        }
    }
    if let Some(w) = ov.w_max {
        cfg.ra.w_max = Some(w);
    }
    if let Some(b) = &ov.backend {
        cfg.solver.force_backend(b);
    }
    resolve_external(&mut cfg)?;
    Ok(cfg)
}

/// Expands a bare `external` backend with the command from the environment.
fn resolve_external(cfg: &mut ScenarioConfig) -> Result<(), Failure> {
    let s = &mut cfg.solver;
    let slots = std::iter::once(&mut s.backend)
        .chain([&mut s.dimensioning, &mut s.te, &mut s.ra].into_iter().flatten().filter_map(|o| o.backend.as_mut()));
    for b in slots {
        if b == "external" {
            let cmd = std::env::var(SOLVER_CMD_ENV)
                .map_err(|_| Failure::Usage(format!("backend `external` needs {SOLVER_CMD_ENV} to be set")))?;
            *b = format!("external:{cmd}");
        }
    }
    for stage in [Stage::Dimensioning, Stage::Te, Stage::Ra] {
        cfg.solver.for_stage(stage)?;
    }
    Ok(())
}

fn validate(path: &Path) -> Result<String, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    resolve_external(&mut cfg)?;
    let prep = prepare(&cfg)?;
    Ok(format!(
        "status=ok scenario={} r_max={} nodes={} links={} background_demands={} chains={} chain_demands={}",
        cfg.ra.scenario,
        cfg.ra.r_max,
        prep.topology.num_nodes(),
        prep.topology.num_links(),
        prep.traffic.background.len(),
        prep.traffic.chains.len(),
        prep.traffic.chains.iter().map(|c| c.demands.len()).sum::<usize>(),
    ))
}

/// Cache key of the dimensioning and TE stages: everything they read,
/// including the topology file's bytes, but nothing from the RA section.
fn stage_key(cfg: &ScenarioConfig, stage: Stage) -> Result<String, Failure> {
    #[derive(Serialize)]
    struct Key<'a> {
        version: &'a str,
        stage: &'a str,
        topology_text: String,
        topology: &'a vnfrep_core::scenarios::TopologySection,
        gateways: &'a vnfrep_core::scenarios::GatewaySection,
        traffic: &'a vnfrep_core::scenarios::TrafficSection,
        dimensioning: &'a vnfrep_core::scenarios::DimensioningSection,
        cost: &'a Option<vnfrep_core::scenarios::CostSection>,
        solvers: Vec<String>,
    }
    let path = cfg.topology_path();
    let topology_text = std::fs::read_to_string(&path).map_err(io_failure(&path))?;
    let mut solvers = vec![format!("{:?}", cfg.solver.for_stage(Stage::Dimensioning)?)];
    if stage == Stage::Te {
        solvers.push(format!("{:?}", cfg.solver.for_stage(Stage::Te)?));
    }
    let key = Key {
        version: env!("CARGO_PKG_VERSION"),
        stage: stage.as_str(),
        topology_text,
        topology: &cfg.topology,
        gateways: &cfg.gateways,
        traffic: &cfg.traffic,
        dimensioning: &cfg.dimensioning,
        cost: &cfg.cost,
        solvers,
    };
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    Ok(hex::encode(&Sha256::digest(&bytes)[..8]))
}

#[derive(Serialize, Deserialize)]
struct CacheEntry<T> {
    key: String,
    value: T,
}

struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    fn new(out: &Path, enabled: bool) -> Self {
        Cache { dir: enabled.then(|| out.join("cache")) }
    }

    fn file(&self, stage: Stage) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.json", stage.as_str())))
    }

    fn get<T: DeserializeOwned>(&self, stage: Stage, key: &str) -> Option<T> {
        let text = std::fs::read_to_string(self.file(stage)?).ok()?;
        let entry: CacheEntry<T> = serde_json::from_str(&text).ok()?;
        (entry.key == key).then(|| {
            info!("{}: using cached result {key}", stage.as_str());
            entry.value
        })
    }

    fn put<T: Serialize>(&self, stage: Stage, key: &str, value: &T) -> Result<(), Failure> {
        let (Some(dir), Some(file)) = (&self.dir, self.file(stage)) else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(io_failure(dir))?;
        let text = serde_json::to_string(&CacheEntry { key: key.to_string(), value }).expect("cache entry serializes");
        std::fs::write(&file, text).map_err(io_failure(&file))
    }
}

struct Stages {
    prep: Prepared,
    dim: DimResult,
    te: TeResult,
    timings: Vec<Timing>,
}

fn dim_stage(cfg: &ScenarioConfig, prep: &Prepared, cache: &Cache, timings: &mut Vec<Timing>) -> Result<DimResult, Failure> {
    let key = stage_key(cfg, Stage::Dimensioning)?;
    if let Some(dim) = cache.get(Stage::Dimensioning, &key) {
        return Ok(dim);
    }
    let dim = run_dimensioning(prep, &cfg.solver.for_stage(Stage::Dimensioning)?, timings)?;
    cache.put(Stage::Dimensioning, &key, &dim)?;
    Ok(dim)
}

fn stages(cfg: &ScenarioConfig, cache: &Cache) -> Result<Stages, Failure> {
    let prep = prepare(cfg)?;
    let mut timings = Vec::new();
    let dim = dim_stage(cfg, &prep, cache, &mut timings)?;
    let key = stage_key(cfg, Stage::Te)?;
    let te = match cache.get(Stage::Te, &key) {
        Some(te) => te,
        None => {
            let te = run_te(&prep, &dim, &cfg.solver.for_stage(Stage::Te)?, &mut timings)?;
            cache.put(Stage::Te, &key, &te)?;
            te
        }
    };
    Ok(Stages { prep, dim, te, timings })
}

fn write_outcome(dir: &Path, o: &PipelineOutcome) -> Result<(), Failure> {
    emit_report(dir, &o.report, &placement_doc(&o.prepared, &o.ra), &o.timings).map_err(io_failure(dir))
}

fn write_lp(path: &Path, model: &MilpModel) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_failure(dir))?;
    }
    std::fs::write(path, export_lp(model)).map_err(io_failure(path))
}

fn run(cfg: &ScenarioConfig, out: &Path, lp: bool, use_cache: bool) -> Result<String, Failure> {
    let cache = Cache::new(out, use_cache);
    let s = stages(cfg, &cache)?;
    let prep = s.prep.with_r_max(cfg.ra.r_max)?;
    let o = finish(cfg, prep, s.dim, s.te, s.timings)?;
    write_outcome(out, &o)?;
    if lp {
        let model = build_ra_model(&o.ra.input).map_err(|e| Failure::NoSolution(e.to_string()))?;
        write_lp(&out.join("model.lp"), &model.model)?;
    }
    let r = &o.report;
    Ok(format!(
        "status=ok scenario={} r_max={} dcs={} avg_util={:.6} max_util={:.6} ra_objective={:.6} out={}",
        r.scenario,
        r.r_max,
        r.used_dcs,
        r.avg_util,
        r.max_util,
        r.ra_objective,
        out.display()
    ))
}

fn sweep(cfg: &ScenarioConfig, r_values: &[usize], out: &Path, use_cache: bool) -> Result<String, Failure> {
    if r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--r-values must be strictly ascending".into()));
    }
    let cache = Cache::new(out, use_cache);
    let s = stages(cfg, &cache)?;
    let outcomes = sweep_from(cfg, &s.prep, &s.dim, &s.te, r_values, &s.timings)?;
    for o in &outcomes {
        write_outcome(&out.join(format!("r{}", o.report.r_max)), o)?;
    }
    let join = |f: &dyn Fn(&PipelineOutcome) -> String| outcomes.iter().map(f).collect::<Vec<_>>().join(",");
    Ok(format!(
        "status=ok scenario={} r_values={} dcs={} max_util={} ra_objective={} out={}",
        cfg.ra.scenario,
        join(&|o| o.report.r_max.to_string()),
        join(&|o| o.report.used_dcs.to_string()),
        join(&|o| format!("{:.6}", o.report.max_util)),
        join(&|o| format!("{:.6}", o.report.ra_objective)),
        out.display()
    ))
}

fn export(cfg: &ScenarioConfig, stage: LpStage, out: &Path, use_cache: bool) -> Result<String, Failure> {
    let cache = Cache::new(out, use_cache);
    let to_failure = |e: vnfrep_core::formulations::FormulationError| Failure::NoSolution(e.to_string());
    let (name, model) = match stage {
        LpStage::Dim => {
            let prep = prepare(cfg)?;
            ("dim", build_dimensioning_model(&prep.dimensioning_input()).map_err(to_failure)?.model)
        }
        LpStage::Te => {
            let prep = prepare(cfg)?;
            let dim = dim_stage(cfg, &prep, &cache, &mut Vec::new())?;
            ("te", build_te_model(&prep.te_input(&dim.capacities)).map_err(to_failure)?.model)
        }
        LpStage::Ra => {
            let mut s = stages(cfg, &cache)?;
            let prep = s.prep.with_r_max(cfg.ra.r_max)?;
            let ra_cfg: SolverConfig = cfg.solver.for_stage(Stage::Ra)?;
            let (params, _) = resolve_max_dc(
                &prep,
                &s.dim.capacities,
                &s.te.util,
                cfg.ra.scenario,
                scenario_params(cfg),
                &ra_cfg,
                &mut s.timings,
            )?;
            let input = prep.ra_input(&s.dim.capacities, &s.te.util, &params);
            ("ra", build_ra_model(&input).map_err(to_failure)?.model)
        }
    };
    let path = out.join(format!("model-{name}.lp"));
    write_lp(&path, &model)?;
    Ok(format!(
        "status=ok stage={name} vars={} constraints={} file={}",
        model.num_vars(),
        model.num_constraints(),
        path.display()
    ))
}

fn oracle(path: &Path) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path).map_err(io_failure(path))?;
    let inst = parse_tiny(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let check = oracle_check(&inst, &SolverConfig::default()).map_err(|e| Failure::Usage(e.to_string()))?;
    let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.9}"));
    let line = format!(
        "{} instance={} milp_status={} milp={} oracle={} explored={}",
        if check.agree { "MATCH" } else { "MISMATCH" },
        inst.name,
        check.milp_status.as_str(),
        fmt(check.milp_objective),
        fmt(check.oracle_objective),
        check.explored
    );
    if check.agree {
        Ok(line)
    } else {
        Err(Failure::Mismatch(line))
    }
}
