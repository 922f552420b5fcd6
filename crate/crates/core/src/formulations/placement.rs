//! Placement decisions and a checker that re-derives every RA rule from the
//! decisions themselves rather than from the model rows.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ra::RaInput;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlacement {
    /// Indices into the chain's candidate paths, ascending.
    pub active_paths: Vec<usize>,
    /// Path index used by each demand of the chain.
    pub demand_paths: Vec<usize>,
    /// Nodes hosting each VNF, ascending.
    pub hosts: Vec<Vec<usize>>,
}

/// Chains are index-aligned with [`RaInput::chains`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub chains: Vec<ChainPlacement>,
    /// Nodes hosting at least one VNF, ascending.
    pub used_nodes: Vec<usize>,
}

impl Placement {
    /// VNF instances hosted by each node.
    pub fn vnfs_per_node(&self, num_nodes: usize) -> Vec<usize> {
        let mut count = vec![0; num_nodes];
        for ch in &self.chains {
            for h in &ch.hosts {
                for &n in h {
                    count[n] += 1;
                }
            }
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementViolation {
    ChainCount { expected: usize, got: usize },
    DemandCount { chain: usize, expected: usize, got: usize },
    VnfCount { chain: usize, expected: usize, got: usize },
    UnknownPath { chain: usize, path: usize },
    NotSorted { chain: usize },
    ActivePathCount { chain: usize, count: usize, limit: usize },
    InactivePathUsed { chain: usize, demand: usize, path: usize },
    IdlePath { chain: usize, path: usize },
    NotHostable { chain: usize, vnf: usize, node: usize },
    MissingVnf { chain: usize, path: usize, vnf: usize },
    Order { chain: usize, path: usize, vnf: usize, node: usize },
    TooManyInstances { chain: usize, vnf: usize, count: usize, limit: usize },
    SharedReplica { chain: usize, vnf: usize, node: usize },
    NodeCapacity { node: usize, count: usize, w_max: usize },
    TooManyDcs { used: usize, max_dc: usize },
    UsedNodes,
}

impl fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PlacementViolation::*;
        match self {
            ChainCount { expected, got } => write!(f, "expected {expected} chains, got {got}"),
            DemandCount { chain, expected, got } => {
                write!(f, "chain {chain}: expected {expected} demand assignments, got {got}")
            }
            VnfCount { chain, expected, got } => {
                write!(f, "chain {chain}: expected host sets for {expected} VNFs, got {got}")
            }
            UnknownPath { chain, path } => write!(f, "chain {chain}: no candidate path {path}"),
            NotSorted { chain } => write!(f, "chain {chain}: index lists must be strictly ascending"),
            ActivePathCount { chain, count, limit } => {
                write!(f, "chain {chain}: {count} active paths, allowed 1..={limit}")
            }
            InactivePathUsed { chain, demand, path } => {
                write!(f, "chain {chain}: demand {demand} routed on inactive path {path}")
            }
            IdlePath { chain, path } => write!(f, "chain {chain}: active path {path} carries no demand"),
            NotHostable { chain, vnf, node } => {
                write!(f, "chain {chain}: VNF {vnf} on node {node}, which is not a candidate on its paths")
            }
            MissingVnf { chain, path, vnf } => write!(f, "chain {chain}: active path {path} lacks VNF {vnf}"),
            Order { chain, path, vnf, node } => write!(
                f,
                "chain {chain}: VNF {vnf} on node {node} of path {path} precedes every instance of VNF {}",
                vnf - 1
            ),
            TooManyInstances { chain, vnf, count, limit } => {
                write!(f, "chain {chain}: VNF {vnf} has {count} instances, allowed {limit}")
            }
            SharedReplica { chain, vnf, node } => write!(
                f,
                "chain {chain}: replicable VNF {vnf} on node {node} shared by two active paths"
            ),
            NodeCapacity { node, count, w_max } => write!(f, "node {node} hosts {count} VNFs, w_max {w_max}"),
            TooManyDcs { used, max_dc } => write!(f, "{used} data centers used, limit {max_dc}"),
            UsedNodes => write!(f, "used-node list differs from the nodes hosting VNFs"),
        }
    }
}

fn strictly_ascending(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Checks `pl` against every RA rule for `input`.
pub fn check_placement(input: &RaInput, pl: &Placement) -> Result<(), PlacementViolation> {
    use PlacementViolation::*;
    if pl.chains.len() != input.chains.len() {
        return Err(ChainCount { expected: input.chains.len(), got: pl.chains.len() });
    }
    let mut per_node = vec![0usize; input.num_nodes];
    for (c, (ch, cp)) in input.chains.iter().zip(&pl.chains).enumerate() {
        let np = ch.paths.len();
        if cp.demand_paths.len() != ch.demand_volumes.len() {
            return Err(DemandCount { chain: c, expected: ch.demand_volumes.len(), got: cp.demand_paths.len() });
        }
        if cp.hosts.len() != ch.vnfs.len() {
            return Err(VnfCount { chain: c, expected: ch.vnfs.len(), got: cp.hosts.len() });
        }
        if !strictly_ascending(&cp.active_paths) || !cp.hosts.iter().all(|h| strictly_ascending(h)) {
            return Err(NotSorted { chain: c });
        }
        if let Some(&p) = cp.active_paths.iter().chain(&cp.demand_paths).find(|&&p| p >= np) {
            return Err(UnknownPath { chain: c, path: p });
        }
        let limit = (input.r_max + 1).min(np);
        if cp.active_paths.is_empty() || cp.active_paths.len() > input.r_max + 1 {
            return Err(ActivePathCount { chain: c, count: cp.active_paths.len(), limit });
        }
        for (d, &p) in cp.demand_paths.iter().enumerate() {
            if !cp.active_paths.contains(&p) {
                return Err(InactivePathUsed { chain: c, demand: d, path: p });
            }
        }
        for &p in &cp.active_paths {
            if !cp.demand_paths.contains(&p) {
                return Err(IdlePath { chain: c, path: p });
            }
        }
        for (v, h) in cp.hosts.iter().enumerate() {
            for &n in h {
                let hostable = n < input.num_nodes
                    && input.dc_candidates[n]
                    && ch.paths.iter().any(|p| p.node_seq.contains(&n));
                if !hostable {
                    return Err(NotHostable { chain: c, vnf: v, node: n });
                }
                per_node[n] += 1;
            }
        }
        for &p in &cp.active_paths {
            let path = &ch.paths[p].node_seq;
            for (v, h) in cp.hosts.iter().enumerate() {
                if !path.iter().any(|n| h.contains(n)) {
                    return Err(MissingVnf { chain: c, path: p, vnf: v });
                }
            }
            // every instance of v on this path needs v-1 at or before it
            for v in 1..cp.hosts.len() {
                for (pos, n) in path.iter().enumerate() {
                    if cp.hosts[v].contains(n) && !path[..=pos].iter().any(|m| cp.hosts[v - 1].contains(m)) {
                        return Err(Order { chain: c, path: p, vnf: v, node: *n });
                    }
                }
            }
        }
        for (v, spec) in ch.vnfs.iter().enumerate() {
            let limit = if spec.replicable { cp.active_paths.len() } else { 1 };
            if cp.hosts[v].len() > limit {
                return Err(TooManyInstances { chain: c, vnf: v, count: cp.hosts[v].len(), limit });
            }
        }
        let last = ch.vnfs.len() - 1;
        for (i, &p1) in cp.active_paths.iter().enumerate() {
            for &p2 in &cp.active_paths[i + 1..] {
                for v in 1..last {
                    if !ch.vnfs[v].replicable {
                        continue;
                    }
                    for &n in &cp.hosts[v] {
                        if ch.paths[p1].node_seq.contains(&n) && ch.paths[p2].node_seq.contains(&n) {
                            return Err(SharedReplica { chain: c, vnf: v, node: n });
                        }
                    }
                }
            }
        }
    }
    if let Some(w) = input.w_max {
        if let Some((n, &count)) = per_node.iter().enumerate().find(|(_, &k)| k > w) {
            return Err(NodeCapacity { node: n, count, w_max: w });
        }
    }
    let hosting: BTreeSet<usize> = (0..input.num_nodes).filter(|&n| per_node[n] > 0).collect();
    let listed: BTreeSet<usize> = pl.used_nodes.iter().copied().collect();
    if hosting != listed || listed.len() != pl.used_nodes.len() {
        return Err(UsedNodes);
    }
    if let Some(d) = input.max_dc {
        if hosting.len() > d {
            return Err(TooManyDcs { used: hosting.len(), max_dc: d });
        }
    }
    Ok(())
}

/// Gbps carried on each link by chain traffic.
pub fn ra_link_loads(input: &RaInput, pl: &Placement) -> Vec<f64> {
    let mut loads = vec![0.0; input.capacities.len()];
    for (ch, cp) in input.chains.iter().zip(&pl.chains) {
        for (&vol, &p) in ch.demand_volumes.iter().zip(&cp.demand_paths) {
            for &l in &ch.paths[p].link_seq {
                loads[l] += vol;
            }
        }
    }
    loads
}

/// `alpha * sum_l envelope(U_TE + U_RA) + beta * used DCs`, evaluated
/// directly from the decisions.
pub fn placement_objective(input: &RaInput, pl: &Placement) -> f64 {
    let lb = if input.alpha > 0.0 {
        ra_link_loads(input, pl)
            .iter()
            .zip(&input.capacities)
            .zip(&input.background_util)
            .map(|((load, cap), bg)| input.cost.envelope(bg + load / cap))
            .sum::<f64>()
    } else {
        0.0
    };
    input.alpha * lb + input.beta * pl.used_nodes.len() as f64
}
