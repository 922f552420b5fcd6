//! Hand-written tiny instances that the MILP and the brute-force oracle can
//! both solve.
//!
//! ```toml
//! kind = "ra"                       # or "te"
//! topology = """
//! node A
//! node B
//! link A B 10
//! """
//! alpha = 1.0
//! beta = 0.0
//! r_max = 1
//! w_max = 2                         # optional
//! max_dc = 3                        # optional
//! dc_exclude = ["A"]                # optional
//! background_util = { "A>B" = 0.2 } # per directed link, default 0
//!
//! [[chains]]
//! s_ne = "A"
//! p_ne = "B"
//! replicable = [false, true, false]
//! demands = [4.0, 3.0]
//! paths = [["A", "B"]]              # optional, default: link-disjoint set
//!
//! [[demands]]                       # te only
//! src = "A"
//! dst = "B"
//! volume = 2.0
//! k = 3                             # or explicit `paths`
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;
use vnfrep_milp::{solve, SolverConfig, Status};

use crate::cost::{default_cost_function, CostFunction};
use crate::formulations::{
    build_ra_model, build_te_model, check_placement, extract_placement, placement_objective, te_objective,
    extract_routing, RaChain, RaInput, RoutedDemand, TeInput,
};
use crate::oracle::{oracle_ra, oracle_te, OracleError};
use crate::paths::{k_shortest, link_disjoint_set, Path};
use crate::scenarios::CostSection;
use crate::topology::{parse_topology, Topology};
use crate::traffic::VnfSpec;

/// Absolute tolerance for MILP and oracle objectives to agree.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TinyError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("topology: {0}")]
    Topology(#[from] crate::topology::TopologyError),
    #[error("paths: {0}")]
    Paths(#[from] crate::paths::PathError),
    #[error("{0}")]
    Formulation(#[from] crate::formulations::FormulationError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("solver: {0}")]
    Solve(#[from] vnfrep_milp::SolveError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TinyKind {
    Te,
    Ra,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TinyChain {
    s_ne: String,
    p_ne: String,
    replicable: Vec<bool>,
    demands: Vec<f64>,
    #[serde(default)]
    paths: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TinyDemand {
    src: String,
    dst: String,
    volume: f64,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    paths: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TinyFile {
    kind: TinyKind,
    #[serde(default)]
    name: Option<String>,
    topology: String,
    #[serde(default)]
    cost: Option<CostSection>,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    beta: f64,
    #[serde(default)]
    r_max: usize,
    #[serde(default)]
    w_max: Option<usize>,
    #[serde(default)]
    max_dc: Option<usize>,
    #[serde(default)]
    dc_exclude: Vec<String>,
    #[serde(default)]
    background_util: BTreeMap<String, f64>,
    #[serde(default)]
    chains: Vec<TinyChain>,
    #[serde(default)]
    demands: Vec<TinyDemand>,
}

#[derive(Debug, Clone)]
pub enum TinyProblem {
    Te(TeInput),
    Ra(RaInput),
}

#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub name: String,
    pub topology: Topology,
    pub problem: TinyProblem,
}

fn explicit_path(topo: &Topology, names: &[String]) -> Result<Path, TinyError> {
    let mut node_seq = Vec::with_capacity(names.len());
    for n in names {
        node_seq.push(topo.node_id(n).ok_or_else(|| TinyError::Invalid(format!("unknown node `{n}` in path")))?);
    }
    if node_seq.len() < 2 {
        return Err(TinyError::Invalid("a path needs at least two nodes".into()));
    }
    let mut link_seq = Vec::with_capacity(node_seq.len() - 1);
    for w in node_seq.windows(2) {
        let l = topo.link_between(w[0], w[1]).ok_or_else(|| {
            TinyError::Invalid(format!("no link {} -> {}", topo.node(w[0]).name, topo.node(w[1]).name))
        })?;
        link_seq.push(l);
    }
    let mut seen = node_seq.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != node_seq.len() {
        return Err(TinyError::Invalid(format!("path {} repeats a node", names.join("-"))));
    }
    Ok(Path { node_seq, link_seq })
}

fn explicit_paths(topo: &Topology, paths: &[Vec<String>], src: usize, dst: usize) -> Result<Vec<Path>, TinyError> {
    let out = paths.iter().map(|p| explicit_path(topo, p)).collect::<Result<Vec<_>, _>>()?;
    if out.iter().any(|p| p.src() != src || p.dst() != dst) {
        return Err(TinyError::Invalid(format!(
            "paths must run from {} to {}",
            topo.node(src).name,
            topo.node(dst).name
        )));
    }
    if out.is_empty() {
        return Err(TinyError::Invalid("empty path list".into()));
    }
    Ok(out)
}

fn node(topo: &Topology, name: &str) -> Result<usize, TinyError> {
    topo.node_id(name).ok_or_else(|| TinyError::Invalid(format!("unknown node `{name}`")))
}

pub fn parse_tiny(text: &str) -> Result<TinyInstance, TinyError> {
    let f: TinyFile = toml::from_str(text)?;
    let topology = parse_topology(&f.topology)?;
    let capacities = topology
        .capacities()
        .ok_or_else(|| TinyError::Invalid("every link needs a capacity".into()))?;
    let cost: CostFunction = match &f.cost {
        Some(c) => c.build().map_err(|e| TinyError::Invalid(e.to_string()))?,
        None => default_cost_function(),
    };
    let name = f.name.clone().unwrap_or_else(|| "tiny".into());
    let problem = match f.kind {
        TinyKind::Te => {
            if !f.chains.is_empty() {
                return Err(TinyError::Invalid("te instances take [[demands]], not [[chains]]".into()));
            }
            let mut demands = Vec::new();
            for (id, d) in f.demands.iter().enumerate() {
                let (s, t) = (node(&topology, &d.src)?, node(&topology, &d.dst)?);
                let paths = match (&d.paths, d.k) {
                    (Some(p), None) => explicit_paths(&topology, p, s, t)?,
                    (None, k) => k_shortest(&topology, s, t, k.unwrap_or(3))?,
                    (Some(_), Some(_)) => return Err(TinyError::Invalid("give either k or paths".into())),
                };
                demands.push(RoutedDemand { id, volume: d.volume, paths });
            }
            TinyProblem::Te(TeInput { capacities, demands, cost })
        }
        TinyKind::Ra => {
            if !f.demands.is_empty() {
                return Err(TinyError::Invalid("ra instances take [[chains]], not [[demands]]".into()));
            }
            let mut background_util = vec![0.0; topology.num_links()];
            for (key, &u) in &f.background_util {
                let (a, b) = key
                    .split_once('>')
                    .ok_or_else(|| TinyError::Invalid(format!("background_util key `{key}` is not `A>B`")))?;
                let (a, b) = (node(&topology, a.trim())?, node(&topology, b.trim())?);
                let l = topology
                    .link_between(a, b)
                    .ok_or_else(|| TinyError::Invalid(format!("background_util: no link {key}")))?;
                background_util[l] = u;
            }
            let mut chains = Vec::new();
            for (id, c) in f.chains.iter().enumerate() {
                let (s, t) = (node(&topology, &c.s_ne)?, node(&topology, &c.p_ne)?);
                let paths = match &c.paths {
                    Some(p) => explicit_paths(&topology, p, s, t)?,
                    None => link_disjoint_set(&topology, s, t, f.r_max + 1)?,
                };
                let vnfs = c
                    .replicable
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| VnfSpec { index: i, label: format!("v{i}"), replicable: r })
                    .collect();
                chains.push(RaChain { id, vnfs, demand_volumes: c.demands.clone(), paths });
            }
            let mut dc_candidates = vec![true; topology.num_nodes()];
            for n in &f.dc_exclude {
                dc_candidates[node(&topology, n)?] = false;
            }
            let input = RaInput {
                num_nodes: topology.num_nodes(),
                capacities,
                background_util,
                chains,
                cost,
                alpha: f.alpha,
                beta: f.beta,
                r_max: f.r_max,
                w_max: f.w_max,
                max_dc: f.max_dc,
                dc_candidates,
                break_symmetry: true,
                link_rows: true,
            };
            input.validate()?;
            TinyProblem::Ra(input)
        }
    };
    Ok(TinyInstance { name, topology, problem })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub milp_status: Status,
    /// `None` when the MILP found nothing.
    pub milp_objective: Option<f64>,
    /// `None` when the oracle found nothing feasible.
    pub oracle_objective: Option<f64>,
    /// MILP decisions re-scored from scratch.
    pub rescored: Option<f64>,
    pub explored: u64,
    pub agree: bool,
}

/// Solves `inst` with the MILP and with the oracle and compares optima.
pub fn oracle_check(inst: &TinyInstance, cfg: &SolverConfig) -> Result<OracleCheck, TinyError> {
    let (sol, oracle, rescored) = match &inst.problem {
        TinyProblem::Te(input) => {
            let te = build_te_model(input)?;
            let sol = solve(&te.model, cfg)?;
            let rescored = if sol.has_incumbent() {
                Some(te_objective(input, &extract_routing(&te, &sol.values)?))
            } else {
                None
            };
            (sol, oracle_te(input)?, rescored)
        }
        TinyProblem::Ra(input) => {
            let ra = build_ra_model(input)?;
            let sol = solve(&ra.model, cfg)?;
            let rescored = if sol.has_incumbent() {
                let pl = extract_placement(&ra, &sol.values)?;
                check_placement(input, &pl).map_err(|v| TinyError::Invalid(format!("MILP placement: {v}")))?;
                Some(placement_objective(input, &pl))
            } else {
                None
            };
            (sol, oracle_ra(input)?, rescored)
        }
    };
    let oracle_objective = oracle.objective.is_finite().then_some(oracle.objective);
    let milp_objective = sol.has_incumbent().then_some(sol.objective);
    let agree = match (sol.status, milp_objective, oracle_objective, rescored) {
        (Status::Optimal, Some(m), Some(o), Some(r)) => {
            (m - o).abs() <= AGREEMENT_TOL && (r - o).abs() <= AGREEMENT_TOL
        }
        (Status::Infeasible, None, None, _) => true,
        _ => false,
    };
    Ok(OracleCheck {
        milp_status: sol.status,
        milp_objective,
        oracle_objective,
        rescored,
        explored: oracle.explored,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RA: &str = r#"
kind = "ra"
topology = """
node A
node B
node C
link A B 10
link B C 10
link A C 10
"""
alpha = 1.0
r_max = 1
background_util = { "A>B" = 0.5 }
[[chains]]
s_ne = "A"
p_ne = "C"
replicable = [false, true, false]
demands = [4.0, 3.0]
"#;

    #[test]
    fn parses_ra() {
        let inst = parse_tiny(RA).unwrap();
        let TinyProblem::Ra(input) = &inst.problem else { panic!() };
        assert_eq!(input.chains[0].paths.len(), 2);
        let ab = inst.topology.link_between(0, 1).unwrap();
        assert_eq!(input.background_util[ab], 0.5);
        assert_eq!(input.background_util.iter().filter(|&&u| u > 0.0).count(), 1);
    }

    #[test]
    fn agrees_on_ra() {
        let r = oracle_check(&parse_tiny(RA).unwrap(), &SolverConfig::default()).unwrap();
        assert!(r.agree, "{r:?}");
    }

    #[test]
    fn rejects_bad_paths() {
        let bad = RA.replace("demands = [4.0, 3.0]", "demands = [4.0]\npaths = [[\"A\", \"C\", \"B\"]]");
        assert!(matches!(parse_tiny(&bad), Err(TinyError::Invalid(_))));
        let mixed = format!("{RA}[[demands]]\nsrc = \"A\"\ndst = \"B\"\nvolume = 1.0\n");
        assert!(parse_tiny(&mixed).is_err());
    }

    #[test]
    fn te_with_explicit_paths() {
        let text = r#"
kind = "te"
topology = "node A\nnode B\nnode C\nlink A B 10\nlink B C 10\nlink A C 10\n"
[[demands]]
src = "A"
dst = "C"
volume = 6.0
paths = [["A", "C"], ["A", "B", "C"]]
[[demands]]
src = "A"
dst = "C"
volume = 5.0
k = 2
"#;
        let inst = parse_tiny(text).unwrap();
        let r = oracle_check(&inst, &SolverConfig::default()).unwrap();
        assert!(r.agree, "{r:?}");
        assert_eq!(r.explored, 4);
    }
}
