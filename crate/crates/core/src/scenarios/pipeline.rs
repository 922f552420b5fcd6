use std::collections::{BTreeMap, BTreeSet};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vnfrep_milp::{solve_with_start, MilpModel, Solution, SolveError, SolverConfig, Status};

use super::config::{ConfigError, MaxDc, ScenarioConfig, ScenarioName, Stage, TopologyFormat};
use crate::cost::CostFunction;
use crate::formulations::{
    build_dimensioning_model, build_ra_model, greedy_routing, build_ra_tiebreak_model, build_te_model, capacities_for_loads,
    check_placement, extract_placement, extract_routing, link_loads, placement_objective, placement_values, ra_link_loads,
    DimDemand, DimensioningInput, DimensioningModel, FormulationError, Placement, RaChain, RaInput, RoutedDemand, TeInput, TeModel,
};
use crate::paths::{build_pathsets, link_disjoint_set, Path, PathError, PathSet};
use crate::topology::{annotate_gateways, parse_sndlib, parse_topology, CapacityTypeSet, Topology, TopologyError};
use crate::traffic::{build_traffic, TrafficError, TrafficSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("traffic: {0}")]
    Traffic(#[from] TrafficError),
    #[error("paths: {0}")]
    Paths(#[from] PathError),
    #[error("{stage}: {source}")]
    Formulation { stage: &'static str, source: FormulationError },
    #[error("{stage}: solver: {source}")]
    Solve { stage: &'static str, source: SolveError },
    #[error("{stage} infeasible: {detail}")]
    Infeasible { stage: &'static str, detail: String },
    #[error("{stage}: solver returned {status} without a solution{}", message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default())]
    NoSolution { stage: &'static str, status: &'static str, message: Option<String> },
    #[error("{stage}: placement rejected by checker: {detail}")]
    Checker { stage: &'static str, detail: String },
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, PipelineError::Infeasible { .. })
    }
}

/// Solver outcome of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub status: String,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub bound_violations: u64,
    /// Largest `|K_l - envelope(U_l)|` over links, for models with cost
    /// variables.
    pub k_envelope_gap: Option<f64>,
}

/// Wall-clock time per solved model; kept out of the report so reports are
/// reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

fn finite(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite())
}

fn stage_stats(stage: &str, sol: &Solution) -> StageStats {
    StageStats {
        stage: stage.to_string(),
        status: sol.status.as_str().to_string(),
        objective: finite(sol.has_incumbent().then_some(sol.objective)),
        best_bound: finite(sol.stats.best_bound),
        nodes: sol.stats.nodes,
        lp_iterations: sol.stats.lp_iterations,
        bound_violations: sol.stats.bound_violations,
        k_envelope_gap: None,
    }
}

/// Topology, traffic and candidate paths shared by every stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub topology: Topology,
    pub traffic: TrafficSpec,
    pub paths: PathSet,
    pub types: CapacityTypeSet,
    pub theta: f64,
    pub cost: CostFunction,
    pub r_max: usize,
}

pub fn load_topology(cfg: &ScenarioConfig) -> Result<Topology, PipelineError> {
    let path = cfg.topology_path();
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
    let topo = match cfg.topology.format {
        TopologyFormat::Native => parse_topology(&text)?,
        TopologyFormat::Sndlib => parse_sndlib(&text)?,
    };
    let mut excluded = BTreeSet::new();
    for name in &cfg.topology.dc_exclude {
        excluded.insert(topo.node_id(name).ok_or_else(|| TopologyError::UnknownNode(name.clone()))?);
    }
    let topo = topo.with_dc_allowed(|n| !excluded.contains(&n.id));
    let mut anchors = BTreeMap::new();
    for (s, p) in &cfg.gateways.anchors {
        let s = topo.node_id(s).ok_or_else(|| TopologyError::UnknownNode(s.clone()))?;
        let p = topo.node_id(p).ok_or_else(|| TopologyError::UnknownNode(p.clone()))?;
        anchors.insert(s, p);
    }
    let s_nes: Vec<usize> = anchors.keys().copied().collect();
    Ok(annotate_gateways(&topo, &s_nes, &anchors)?)
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, PipelineError> {
    let topology = load_topology(cfg)?;
    let t = &cfg.traffic;
    let traffic = build_traffic(
        &topology,
        t.background_gbps[0],
        t.background_gbps[1],
        t.seed,
        &t.template(),
        t.demands_per_chain,
        t.chain_volume_gbps,
    )?;
    let paths = build_pathsets(&topology, &traffic, cfg.dimensioning.k_background, cfg.ra.r_max)?;
    Ok(Prepared {
        topology,
        traffic,
        paths,
        types: cfg.capacity_types()?,
        theta: cfg.dimensioning.theta(),
        cost: cfg.cost_function()?,
        r_max: cfg.ra.r_max,
    })
}

impl Prepared {
    /// Same instance with chain path sets for a different `r_max`.
    pub fn with_r_max(&self, r_max: usize) -> Result<Prepared, PipelineError> {
        let mut out = self.clone();
        for c in &self.traffic.chains {
            out.paths.per_chain.insert(c.id, link_disjoint_set(&self.topology, c.s_ne, c.p_ne, r_max + 1)?);
        }
        out.r_max = r_max;
        Ok(out)
    }

    pub fn dimensioning_input(&self) -> DimensioningInput {
        let demands = self
            .traffic
            .all_demands()
            .into_iter()
            .map(|d| DimDemand { id: d.id, volume: d.volume_gbps, paths: self.paths.per_demand[&d.id].clone() })
            .collect();
        DimensioningInput {
            num_links: self.topology.num_links(),
            demands,
            types: self.types.clone(),
            theta: self.theta,
        }
    }

    pub fn te_input(&self, capacities: &[f64]) -> TeInput {
        let demands = self
            .traffic
            .background
            .iter()
            .map(|d| RoutedDemand { id: d.id, volume: d.volume_gbps, paths: self.paths.per_demand[&d.id].clone() })
            .collect();
        TeInput { capacities: capacities.to_vec(), demands, cost: self.cost.clone() }
    }

    pub fn ra_input(&self, capacities: &[f64], te_util: &[f64], params: &RaParams) -> RaInput {
        let chains = self
            .traffic
            .chains
            .iter()
            .map(|c| RaChain {
                id: c.id,
                vnfs: c.vnfs.clone(),
                demand_volumes: self.traffic.chain_demands_of(c).iter().map(|d| d.volume_gbps).collect(),
                paths: self.paths.per_chain[&c.id].clone(),
            })
            .collect();
        RaInput {
            num_nodes: self.topology.num_nodes(),
            capacities: capacities.to_vec(),
            background_util: te_util.to_vec(),
            chains,
            cost: self.cost.clone(),
            alpha: params.alpha,
            beta: params.beta,
            r_max: self.r_max,
            w_max: params.w_max,
            max_dc: params.max_dc,
            dc_candidates: self.topology.nodes().iter().map(|n| n.dc_allowed).collect(),
            break_symmetry: params.break_symmetry,
            link_rows: params.link_rows,
        }
    }
}

/// Objective weights and limits of one RA solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaParams {
    pub alpha: f64,
    pub beta: f64,
    pub w_max: Option<usize>,
    pub max_dc: Option<usize>,
    pub break_symmetry: bool,
    pub link_rows: bool,
}

fn run_model(
    stage: &'static str,
    model: &MilpModel,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
    timings: &mut Vec<Timing>,
) -> Result<Solution, PipelineError> {
    info!(
        "{stage}: {} variables ({} binary), {} rows",
        model.num_vars(),
        model.num_binaries(),
        model.num_constraints()
    );
    let sol = solve_with_start(model, cfg, start).map_err(|source| PipelineError::Solve { stage, source })?;
    info!(
        "{stage}: {} objective {} after {} nodes in {:.2?}",
        sol.status.as_str(),
        sol.objective,
        sol.stats.nodes,
        sol.stats.wall_time
    );
    timings.push(Timing { stage: stage.to_string(), seconds: sol.stats.wall_time.as_secs_f64() });
    match sol.status {
        _ if sol.has_incumbent() => Ok(sol),
        Status::Infeasible => Err(PipelineError::Infeasible {
            stage,
            detail: sol.message.clone().unwrap_or_else(|| "no assignment satisfies every row".into()),
        }),
        status => Err(PipelineError::NoSolution { stage, status: status.as_str(), message: sol.message.clone() }),
    }
}

fn formulation(stage: &'static str) -> impl Fn(FormulationError) -> PipelineError {
    move |source| PipelineError::Formulation { stage, source }
}

/// Dimensioned link capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimResult {
    /// Smallest type carrying each link's routed load within theta.
    pub capacities: Vec<f64>,
    /// Path index per demand (background and chain), keyed by demand id.
    pub routing: BTreeMap<usize, usize>,
    pub loads: Vec<f64>,
    pub stats: StageStats,
}

pub fn run_dimensioning(
    prep: &Prepared,
    cfg: &SolverConfig,
    timings: &mut Vec<Timing>,
) -> Result<DimResult, PipelineError> {
    const STAGE: &str = "dimensioning";
    let input = prep.dimensioning_input();
    let dm = build_dimensioning_model(&input).map_err(formulation(STAGE))?;
    let start = greedy_start(&input, &dm);
    let sol = run_model(STAGE, &dm.model, cfg, start.as_deref(), timings)?;
    let routing = dm.routing(&sol.values).map_err(formulation(STAGE))?;
    let mut loads = vec![0.0; input.num_links];
    for (d, &p) in input.demands.iter().zip(&routing) {
        for &l in &d.paths[p].link_seq {
            loads[l] += d.volume;
        }
    }
    // a non-optimal incumbent may over-provision; keep its routing, shrink
    // every link to the smallest adequate type
    let capacities = capacities_for_loads(&loads, &input.types, input.theta);
    let routing = input.demands.iter().map(|d| d.id).zip(routing).collect();
    Ok(DimResult { capacities, routing, loads, stats: stage_stats(STAGE, &sol) })
}

/// Greedy routing with every link at the smallest adequate type.
fn greedy_start(input: &DimensioningInput, dm: &DimensioningModel) -> Option<Vec<f64>> {
    let choice = greedy_routing(input)?;
    let mut values = vec![0.0; dm.model.num_vars()];
    let mut loads = vec![0.0; input.num_links];
    for ((d, vars), &p) in input.demands.iter().zip(&dm.r).zip(&choice) {
        values[vars[p].0] = 1.0;
        for &l in &d.paths[p].link_seq {
            loads[l] += d.volume;
        }
    }
    let types = input.types.as_slice();
    for (l, cap) in capacities_for_loads(&loads, &input.types, input.theta).into_iter().enumerate() {
        let t = types.iter().position(|&bw| bw == cap)?;
        values[dm.c[l][t].0] = 1.0;
    }
    Some(values)
}

/// Background routing on the dimensioned capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeResult {
    /// Path index per background demand, in demand order.
    pub routing: Vec<usize>,
    pub util: Vec<f64>,
    pub stats: StageStats,
}

fn te_start(input: &TeInput, te: &TeModel, dim: &DimResult) -> Option<Vec<f64>> {
    let mut values = vec![0.0; te.model.num_vars()];
    let mut choice = Vec::with_capacity(input.demands.len());
    for (d, vars) in input.demands.iter().zip(&te.r) {
        let p = *dim.routing.get(&d.id)?;
        values[vars.get(p)?.0] = 1.0;
        choice.push(p);
    }
    let loads = link_loads(input.capacities.len(), &input.demands, &choice);
    for (l, &k) in te.k.iter().enumerate() {
        values[k.0] = input.cost.envelope(loads[l] / input.capacities[l]);
    }
    Some(values)
}

fn envelope_gap(cost: &CostFunction, k: &[vnfrep_milp::VarId], values: &[f64], util: &[f64]) -> Option<f64> {
    if k.is_empty() {
        return None;
    }
    Some(
        k.iter()
            .zip(util)
            .map(|(&v, &u)| (values[v.0] - cost.envelope(u)).abs())
            .fold(0.0, f64::max),
    )
}

/// Solves TE on `dim`'s capacities, starting from its background routing.
pub fn run_te(
    prep: &Prepared,
    dim: &DimResult,
    cfg: &SolverConfig,
    timings: &mut Vec<Timing>,
) -> Result<TeResult, PipelineError> {
    const STAGE: &str = "te";
    let capacities = &dim.capacities[..];
    let input = prep.te_input(capacities);
    let util = |routing: &[usize]| -> Vec<f64> {
        link_loads(capacities.len(), &input.demands, routing)
            .iter()
            .zip(capacities)
            .map(|(load, c)| load / c)
            .collect()
    };
    if input.demands.is_empty() {
        let stats = StageStats {
            stage: STAGE.into(),
            status: Status::Optimal.as_str().into(),
            objective: Some(0.0),
            best_bound: Some(0.0),
            nodes: 0,
            lp_iterations: 0,
            bound_violations: 0,
            k_envelope_gap: None,
        };
        return Ok(TeResult { routing: Vec::new(), util: vec![0.0; capacities.len()], stats });
    }
    let te = build_te_model(&input).map_err(formulation(STAGE))?;
    let start = te_start(&input, &te, dim);
    let sol = run_model(STAGE, &te.model, cfg, start.as_deref(), timings)?;
    let routing = extract_routing(&te, &sol.values).map_err(formulation(STAGE))?;
    let u = util(&routing);
    let mut stats = stage_stats(STAGE, &sol);
    stats.k_envelope_gap = envelope_gap(&input.cost, &te.k, &sol.values, &u);
    Ok(TeResult { routing, util: u, stats })
}

/// RA decisions of one scenario.
#[derive(Debug, Clone)]
pub struct RaResult {
    pub input: RaInput,
    pub placement: Placement,
    /// Weighted objective recomputed from the decisions.
    pub objective: f64,
    pub stats: Vec<StageStats>,
}

fn solve_ra(
    stage: &'static str,
    input: &RaInput,
    witness: Option<&Placement>,
    cfg: &SolverConfig,
    timings: &mut Vec<Timing>,
) -> Result<(Placement, Vec<f64>, StageStats), PipelineError> {
    let ra = build_ra_model(input).map_err(formulation(stage))?;
    let start = witness.map(|pl| placement_values(&ra, input, pl));
    let sol = match run_model(stage, &ra.model, cfg, start.as_deref(), timings) {
        Err(PipelineError::Infeasible { stage, .. }) => {
            return Err(PipelineError::Infeasible { stage, detail: diagnose_ra(input, cfg) })
        }
        other => other?,
    };
    let pl = extract_placement(&ra, &sol.values).map_err(formulation(stage))?;
    check_placement(input, &pl).map_err(|v| PipelineError::Checker { stage, detail: v.to_string() })?;
    let mut stats = stage_stats(stage, &sol);
    if input.alpha > 0.0 {
        let ra_load = ra_link_loads(input, &pl);
        let total: Vec<f64> = (0..input.capacities.len())
            .map(|l| input.background_util[l] + ra_load[l] / input.capacities[l])
            .collect();
        stats.k_envelope_gap = envelope_gap(&input.cost, &ra.k, &sol.values, &total);
    }
    Ok((pl, sol.values, stats))
}

/// Names the first RA requirement whose removal restores feasibility.
fn diagnose_ra(input: &RaInput, cfg: &SolverConfig) -> String {
    let total: usize = input.chains.iter().map(|c| c.vnfs.len()).sum();
    if let Some(w) = input.w_max {
        let hosts: BTreeSet<usize> = (0..input.chains.len()).flat_map(|c| input.host_nodes(c)).collect();
        if w * hosts.len() < total {
            return format!(
                "w_max = {w}: {} candidate nodes hold at most {} of {total} VNF instances",
                hosts.len(),
                w * hosts.len()
            );
        }
        if let Some(d) = input.max_dc {
            if w * d < total {
                return format!("w_max = {w} with max_dc = {d} holds at most {} of {total} VNF instances", w * d);
            }
        }
    }
    let relaxations: [(&str, RaInput); 2] = [
        ("max_dc", RaInput { max_dc: None, ..input.clone() }),
        ("w_max", RaInput { w_max: None, max_dc: None, ..input.clone() }),
    ];
    for (name, relaxed) in relaxations {
        if name == "max_dc" && input.max_dc.is_none() || name == "w_max" && input.w_max.is_none() {
            continue;
        }
        let Ok(ra) = build_ra_model(&relaxed) else { continue };
        if let Ok(sol) = solve_with_start(&ra.model, cfg, None) {
            if sol.has_incumbent() {
                let value = if name == "max_dc" { input.max_dc } else { input.w_max };
                return format!("{name} = {} cannot be met", value.unwrap_or_default());
            }
        }
    }
    "placement, ordering or replica rules cannot all be met on the candidate paths".into()
}

pub fn scenario_params(cfg: &ScenarioConfig) -> RaParams {
    let (alpha, beta) = cfg.ra.scenario.weights();
    RaParams {
        alpha,
        beta,
        w_max: if cfg.ra.scenario.constrained() { cfg.ra.w_max } else { None },
        max_dc: match cfg.ra.max_dc {
            Some(MaxDc::Fixed(d)) => Some(d),
            _ => None,
        },
        break_symmetry: cfg.ra.symmetry_breaking,
        link_rows: cfg.ra.link_rows,
    }
}

/// Fills in `max_dc = "auto"` for minLB_constr with the DC count of
/// minNC_constr under the same `w_max`, returning that placement and its
/// solver stats too. Other scenarios pass through unchanged.
pub fn resolve_max_dc(
    prep: &Prepared,
    capacities: &[f64],
    te_util: &[f64],
    scenario: ScenarioName,
    mut params: RaParams,
    cfg: &SolverConfig,
    timings: &mut Vec<Timing>,
) -> Result<(RaParams, Option<(Placement, StageStats)>), PipelineError> {
    if scenario != ScenarioName::MinLbConstr || params.max_dc.is_some() || prep.traffic.chains.is_empty() {
        return Ok((params, None));
    }
    let nc = RaParams { alpha: 0.0, beta: 1.0, max_dc: None, ..params };
    let input = prep.ra_input(capacities, te_util, &nc);
    let (pl, _, s) = solve_ra("ra.max_dc", &input, None, cfg, timings)?;
    params.max_dc = Some(pl.used_nodes.len());
    Ok((params, Some((pl, s))))
}

/// Solves the RA stage of `scenario`. Node-cost objectives get a second
/// solve that keeps the optimal DC count and prefers the lowest-ranked
/// (shortest) chain paths.
pub fn run_ra(
    prep: &Prepared,
    capacities: &[f64],
    te_util: &[f64],
    scenario: ScenarioName,
    params: RaParams,
    cfg: &SolverConfig,
    timings: &mut Vec<Timing>,
) -> Result<RaResult, PipelineError> {
    let mut stats = Vec::new();
    if prep.traffic.chains.is_empty() {
        let input = prep.ra_input(capacities, te_util, &params);
        let placement = Placement { chains: Vec::new(), used_nodes: Vec::new() };
        let objective = placement_objective(&input, &placement);
        return Ok(RaResult { input, placement, objective, stats });
    }
    let (params, witness) = resolve_max_dc(prep, capacities, te_util, scenario, params, cfg, timings)?;
    if let Some((_, s)) = &witness {
        stats.push(s.clone());
    }
    // the minNC_constr optimum is feasible for minLB_constr and seeds it
    let witness = witness.map(|(pl, _)| pl);
    let input = prep.ra_input(capacities, te_util, &params);
    let (mut placement, values, s) = solve_ra("ra", &input, witness.as_ref(), cfg, timings)?;
    stats.push(s);
    if params.alpha == 0.0 {
        const STAGE: &str = "ra.tiebreak";
        let dcs = placement.used_nodes.len();
        let tb = build_ra_tiebreak_model(&input, dcs).map_err(formulation(STAGE))?;
        let start = (tb.model.num_vars() == values.len()).then_some(values.as_slice());
        let sol = run_model(STAGE, &tb.model, cfg, start, timings)?;
        let pl = extract_placement(&tb, &sol.values).map_err(formulation(STAGE))?;
        check_placement(&input, &pl).map_err(|v| PipelineError::Checker { stage: STAGE, detail: v.to_string() })?;
        if pl.used_nodes.len() <= dcs {
            placement = pl;
        }
        stats.push(stage_stats(STAGE, &sol));
    }
    let objective = placement_objective(&input, &placement);
    Ok(RaResult { input, placement, objective, stats })
}

/// Everything one scenario run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub prepared: Prepared,
    pub dimensioning: DimResult,
    pub te: TeResult,
    pub ra: RaResult,
    pub report: super::ScenarioReport,
    pub timings: Vec<Timing>,
}

pub fn run_pipeline(cfg: &ScenarioConfig) -> Result<PipelineOutcome, PipelineError> {
    let prep = prepare(cfg)?;
    let mut timings = Vec::new();
    let dim = run_dimensioning(&prep, &cfg.solver.for_stage(Stage::Dimensioning)?, &mut timings)?;
    let te = run_te(&prep, &dim, &cfg.solver.for_stage(Stage::Te)?, &mut timings)?;
    finish(cfg, prep, dim, te, timings)
}

/// Runs the RA stage and assembles the report on top of earlier stages.
pub fn finish(
    cfg: &ScenarioConfig,
    prep: Prepared,
    dim: DimResult,
    te: TeResult,
    mut timings: Vec<Timing>,
) -> Result<PipelineOutcome, PipelineError> {
    let ra = run_ra(
        &prep,
        &dim.capacities,
        &te.util,
        cfg.ra.scenario,
        scenario_params(cfg),
        &cfg.solver.for_stage(Stage::Ra)?,
        &mut timings,
    )?;
    let report = super::build_report(cfg, &prep, &dim, &te, &ra);
    Ok(PipelineOutcome { prepared: prep, dimensioning: dim, te, ra, report, timings })
}

/// One report per `r_max`, sharing the dimensioning and TE stages.
pub fn sweep_replicas(cfg: &ScenarioConfig, r_values: &[usize]) -> Result<Vec<PipelineOutcome>, PipelineError> {
    if r_values.is_empty() || r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PipelineError::Invalid("r values must be non-empty and strictly ascending".into()));
    }
    let prep = prepare(cfg)?;
    let mut timings = Vec::new();
    let dim = run_dimensioning(&prep, &cfg.solver.for_stage(Stage::Dimensioning)?, &mut timings)?;
    let te = run_te(&prep, &dim, &cfg.solver.for_stage(Stage::Te)?, &mut timings)?;
    sweep_from(cfg, &prep, &dim, &te, r_values, &timings)
}

/// The RA part of [`sweep_replicas`] for already computed stages.
pub fn sweep_from(
    cfg: &ScenarioConfig,
    prep: &Prepared,
    dim: &DimResult,
    te: &TeResult,
    r_values: &[usize],
    shared_timings: &[Timing],
) -> Result<Vec<PipelineOutcome>, PipelineError> {
    let mut out = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let mut point = cfg.clone();
        point.ra.r_max = r;
        let p = prep.with_r_max(r)?;
        out.push(finish(&point, p, dim.clone(), te.clone(), shared_timings.to_vec())?);
    }
    Ok(out)
}

/// Hops of every chain demand's path, for the report.
pub(crate) fn chain_demand_hops(ra: &RaResult) -> Vec<usize> {
    ra.input
        .chains
        .iter()
        .zip(&ra.placement.chains)
        .flat_map(|(ch, cp)| cp.demand_paths.iter().map(move |&p| ch.paths[p].hops()))
        .collect()
}

/// Candidate path of every background demand chosen by TE.
pub fn te_paths<'a>(prep: &'a Prepared, te: &TeResult) -> Vec<&'a Path> {
    prep.traffic
        .background
        .iter()
        .zip(&te.routing)
        .map(|(d, &p)| &prep.paths.per_demand[&d.id][p])
        .collect()
}
